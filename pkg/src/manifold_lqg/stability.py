"""(kappa, gamma) strong-stability diagnostics for gain sequences.

Each closed loop ``A + B K_t`` is written as ``H_t L_t H_t^{-1}``. The default
construction uses the eigendecomposition (unit-norm eigenvector columns,
matched and phase-aligned to the previous round so that ``H_{t+1}^{-1} H_t``
stays near the identity for slowly varying gains). When the eigenvector matrix
is numerically defective the round falls back to ``H = X_s^{1/2}``,
``L = H^{-1} A_cl H`` with ``X_s`` the steady-state covariance, for which
``||L|| < 1`` always holds.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DefectiveClosedLoop, LengthMismatch
from .linalg import LyapunovSolver

DEFECTIVE_COND = 1e8


@dataclass
class StabilityReport:
    kappa: np.ndarray
    gamma: np.ndarray
    link_norms: np.ndarray
    H_norms: np.ndarray
    H_inv_norms: np.ndarray
    K_norms: np.ndarray
    methods: list
    cov_gap: np.ndarray = None
    bound: np.ndarray = None
    defective_rounds: list = field(default_factory=list)

    @property
    def kappa_seq(self) -> float:
        """Sequence-level kappa: ``max(max ||K_t||, beta'/alpha')``."""
        return float(max(np.max(self.K_norms), np.max(self.H_norms) * np.max(self.H_inv_norms)))

    @property
    def gamma_seq(self) -> float:
        return float(np.min(self.gamma))

    @property
    def links_ok(self) -> bool:
        g = self.gamma_seq
        return bool(g > 0 and np.all(self.link_norms <= 1.0 + g / 2.0))

    @property
    def bound_satisfied(self):
        """Direct check ``cov_gap_t <= bound_t`` for every round (``None`` without a trace)."""
        if self.bound is None or self.cov_gap is None:
            return None
        return bool(np.all(self.cov_gap <= self.bound * (1 + 1e-9) + 1e-12))

    @property
    def bound_guaranteed(self) -> bool:
        """True when the sequential hypotheses hold, so the bound is implied rather than observed."""
        return self.links_ok


def _psd_sqrt(X):
    vals, vecs = np.linalg.eigh(0.5 * (X + X.T))
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T


def _eigen_factor(A_cl, H_prev=None):
    w, V = np.linalg.eig(A_cl)
    V = V / np.linalg.norm(V, axis=0)
    if np.linalg.cond(V) > DEFECTIVE_COND:
        raise DefectiveClosedLoop("eigenvector matrix is numerically singular")
    if H_prev is not None and H_prev.shape == V.shape:
        overlap = np.abs(H_prev.conj().T @ V)
        _, perm = linear_sum_assignment(-overlap)
        V, w = V[:, perm], w[perm]
        phase = np.einsum("ij,ij->j", H_prev.conj(), V)
        phase = np.where(np.abs(phase) > 0, phase / np.abs(phase), 1.0)
        V = V * phase.conj()
    return V, np.diag(w)


def _lyapunov_factor(A_cl, W):
    Xs = LyapunovSolver(A_cl).solve(W)
    H = _psd_sqrt(Xs)
    return H.astype(complex), np.linalg.solve(H, A_cl @ H).astype(complex)


def decompose(A_cl, W, method="eigen", H_prev=None):
    """Return ``(H, L, method_used)`` with ``A_cl = H L H^{-1}``."""
    if method == "eigen":
        try:
            H, L = _eigen_factor(A_cl, H_prev)
            return H, L, "eigen"
        except DefectiveClosedLoop:
            pass
    H, L = _lyapunov_factor(A_cl, W)
    return H, L, "lyapunov"


def strong_stability_report(plant, gains, method="eigen", expected=None) -> StabilityReport:
    """Per-round ``kappa_t, gamma_t`` and links ``||H_{t+1}^{-1} H_t||``.

    If ``expected`` (an :class:`~manifold_lqg.harness.ExpectedTrace` for the
    same gains) is given, the covariance gaps are attached and the
    sequential-stability bound on them is evaluated.
    """
    T = len(gains)
    Hs, kappa, gamma, Hn, Hin, Kn, used, defective = [], [], [], [], [], [], [], []
    H_prev = None
    for t, K in enumerate(gains, start=1):
        A_cl = plant.closed_loop(K)
        H, L, how = decompose(A_cl, plant.W, method, H_prev)
        if how != method:
            defective.append(t)
        H_inv = np.linalg.inv(H)
        nH, nHi, nK = np.linalg.norm(H, 2), np.linalg.norm(H_inv, 2), np.linalg.norm(K, 2)
        Hs.append(H)
        Hn.append(nH)
        Hin.append(nHi)
        Kn.append(nK)
        kappa.append(max(nK, nH * nHi))
        gamma.append(1.0 - np.linalg.norm(L, 2))
        used.append(how)
        H_prev = H
    links = np.array([np.linalg.norm(np.linalg.solve(Hs[t + 1], Hs[t]), 2) for t in range(T - 1)])
    rep = StabilityReport(
        kappa=np.array(kappa),
        gamma=np.array(gamma),
        link_norms=links,
        H_norms=np.array(Hn),
        H_inv_norms=np.array(Hin),
        K_norms=np.array(Kn),
        methods=used,
        defective_rounds=defective,
    )
    if expected is not None:
        if len(expected.cov_gaps) != T:
            raise LengthMismatch("expected trace length differs from the gain sequence")
        rep.cov_gap = np.asarray(expected.cov_gaps)
        rep.bound = covariance_gap_bound(rep.kappa_seq, rep.gamma_seq, rep.cov_gap[0], expected.steady_states)
    return rep


def covariance_gap_bound(kappa, gamma, initial_gap, steady_states):
    """Right-hand side of the sequential-stability covariance bound for every round.

    ``exp(-(t-1) gamma) kappa^2 gap_1 + kappa^2 sum_{i=0}^{t-2} (1-gamma/2)^{2i} ||Xs_{t-i} - Xs_{t-1-i}||``
    """
    T = len(steady_states)
    drift = np.array([np.linalg.norm(steady_states[t] - steady_states[t - 1], 2) for t in range(1, T)])
    rho = (1.0 - gamma / 2.0) ** 2
    out = np.zeros(T)
    acc = 0.0
    for t in range(1, T + 1):
        if t >= 2:
            # acc_t = drift_{t} + rho * acc_{t-1}, drift_t = ||Xs_t - Xs_{t-1}||
            acc = drift[t - 2] + rho * acc
        out[t - 1] = np.exp(-(t - 1) * gamma) * kappa ** 2 * initial_gap + kappa ** 2 * acc
    return out
