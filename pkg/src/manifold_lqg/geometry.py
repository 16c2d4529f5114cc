"""Riemannian geometry of the stabilizing-gain manifold for LQG costs.

Conventions
-----------
Gains are ``K`` with shape ``(m, n)`` and the closed loop is ``A + B K``.
Tangent vectors are plain ``(m, n)`` arrays. Coordinates are the row-major
vectorization ``vec(U) = U.ravel()``, under which the metric
``g_K(U, V) = Tr(U Y_K V^T)`` has Gram matrix ``kron(I_m, Y_K)``.

The cost is ``f(K) = Tr((Q + K'RK) Y_K)`` with ``Y_K = L(A + BK, W)``; its
Riemannian gradient is ``2 (RK + B'P A_cl)`` and the Euclidean gradient is that
matrix times ``Y_K``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla

from .errors import (
    DimensionMismatch,
    NotStabilizable,
    NotStable,
    SingularConstraint,
    SingularMetric,
)
from .linalg import (
    STABILITY_MARGIN,
    LyapunovSolver,
    solve_dare,
    spectral_radius,
    sym_eig_extremes,
    symmetrize,
)

METRIC_FLOOR = 1e-12
HESSIAN_PD_TOL = 1e-10


def _as_matrix(X, name):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} has non-finite entries")
    return X


@dataclass(frozen=True)
class PlantModel:
    A: np.ndarray
    B: np.ndarray
    W: np.ndarray
    sigma_sq: Optional[float] = None
    check_stabilizable: bool = True

    def __post_init__(self):
        A = _as_matrix(self.A, "A")
        B = _as_matrix(self.B, "B")
        W = symmetrize(_as_matrix(self.W, "W"))
        n = A.shape[0]
        if A.shape != (n, n) or B.shape[0] != n or W.shape != (n, n):
            raise DimensionMismatch(f"incompatible plant shapes A{A.shape} B{B.shape} W{W.shape}")
        lam_min, _ = sym_eig_extremes(W)
        sigma_sq = lam_min if self.sigma_sq is None else float(self.sigma_sq)
        if sigma_sq <= 0 or lam_min < sigma_sq * (1 - 1e-12):
            raise ValueError(f"W must satisfy W >= sigma_sq I with sigma_sq > 0 (lambda_min={lam_min})")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "sigma_sq", sigma_sq)
        if self.check_stabilizable:
            try:
                solve_dare(A, B, np.eye(n), np.eye(B.shape[1]))
            except Exception as exc:
                raise NotStabilizable("plant (A, B) is not stabilizable") from exc

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def closed_loop(self, K):
        return self.A + self.B @ K

    def is_stabilizing(self, K) -> bool:
        return spectral_radius(self.closed_loop(K)) < 1.0


@dataclass(frozen=True)
class CostPair:
    Q: np.ndarray
    R: np.ndarray
    trace_cap: Optional[float] = None

    def __post_init__(self):
        Q = symmetrize(_as_matrix(self.Q, "Q"))
        R = symmetrize(_as_matrix(self.R, "R"))
        if sym_eig_extremes(Q)[0] <= 0 or sym_eig_extremes(R)[0] <= 0:
            raise ValueError("Q and R must be positive definite")
        if self.trace_cap is not None and max(np.trace(Q), np.trace(R)) > self.trace_cap:
            raise ValueError("cost trace exceeds the configured cap")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)


class ConstraintSet:
    """Affine restriction ``M vec(K) = b`` on the gain plus a basis of its tangent space.

    Build with :meth:`none`, :meth:`row_affine` (``C K = D``) or :meth:`mask`
    (entries where ``mask`` is True are pinned to zero).
    """

    def __init__(self, kind, shape, M, b, basis, C=None, D=None, mask=None):
        self.kind = kind
        self.shape = tuple(shape)
        self.M = M
        self.b = b
        self.basis = basis
        self.C = C
        self.D = D
        self.mask = mask

    @classmethod
    def none(cls, m, n):
        return cls("none", (m, n), np.zeros((0, m * n)), np.zeros(0), np.eye(m * n))

    @classmethod
    def row_affine(cls, C, D):
        C = np.atleast_2d(np.asarray(C, dtype=float))
        D = np.atleast_2d(np.asarray(D, dtype=float))
        p, m = C.shape
        if D.shape[0] != p:
            raise DimensionMismatch("C and D must have the same number of rows")
        n = D.shape[1]
        if np.linalg.matrix_rank(C) != p:
            raise SingularConstraint("C must have full row rank")
        M = np.kron(C, np.eye(n))
        basis = np.kron(sla.null_space(C), np.eye(n))
        return cls("row_affine", (m, n), M, D.ravel(), basis, C=C, D=D)

    @classmethod
    def from_mask(cls, mask):
        mask = np.asarray(mask, dtype=bool)
        m, n = mask.shape
        flat = mask.ravel()
        eye = np.eye(m * n)
        M = eye[flat]
        basis = eye[:, ~flat]
        return cls("entrywise_mask", (m, n), M, np.zeros(M.shape[0]), basis, mask=mask)

    mask_constraint = from_mask

    @classmethod
    def full(cls, m, n):
        return cls.from_mask(np.ones((m, n), dtype=bool))

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def basis_matrices(self):
        m, n = self.shape
        return [self.basis[:, j].reshape(m, n) for j in range(self.dim)]

    def residual(self, K) -> float:
        if self.M.shape[0] == 0:
            return 0.0
        return float(np.max(np.abs(self.M @ np.asarray(K).ravel() - self.b)))

    def homogeneous_residual(self, U) -> float:
        if self.M.shape[0] == 0:
            return 0.0
        return float(np.max(np.abs(self.M @ np.asarray(U).ravel())))

    def is_feasible(self, K, tol=1e-10) -> bool:
        return self.residual(K) <= tol

    def __repr__(self):
        return f"ConstraintSet(kind={self.kind!r}, shape={self.shape}, tangent_dim={self.dim})"


def default_qmap(K, cost: CostPair):
    return cost.Q + K.T @ cost.R @ K


@dataclass(frozen=True, eq=False)
class GeometryCache:
    """Closed-loop quantities at one gain for one cost pair. Immutable."""

    plant: PlantModel
    costpair: CostPair
    K: np.ndarray
    A_cl: np.ndarray
    Y: np.ndarray
    P: np.ndarray
    cost: float
    eucl_grad: np.ndarray
    riem_grad: np.ndarray
    lyap: LyapunovSolver = field(repr=False)
    lyap_T: LyapunovSolver = field(repr=False)

    @property
    def m(self):
        return self.K.shape[0]

    @property
    def n(self):
        return self.K.shape[1]

    @cached_property
    def radius(self) -> float:
        return spectral_radius(self.A_cl)

    @cached_property
    def Y_inv(self):
        lam = np.linalg.eigvalsh(self.Y)[0]
        if lam <= METRIC_FLOOR:
            raise SingularMetric(f"lambda_min(Y) = {lam:.3g}")
        return symmetrize(np.linalg.inv(self.Y))

    @cached_property
    def gram(self):
        return np.kron(np.eye(self.m), self.Y)

    @cached_property
    def dY_coords(self):
        """``DY[E_a]`` for every coordinate direction ``E_a``, shape ``(m*n, n, n)``."""
        m, n = self.m, self.n
        B, AY = self.plant.B, self.A_cl @ self.Y
        T = np.einsum("pi,qj->ijpq", B, AY).reshape(m * n, n, n)
        return self.lyap.solve_many(T + T.transpose(0, 2, 1))


def closed_loop_cache(plant: PlantModel, cost: CostPair, K) -> GeometryCache:
    K = np.atleast_2d(np.asarray(K, dtype=float))
    if K.shape != (plant.m, plant.n):
        raise DimensionMismatch(f"K has shape {K.shape}, expected {(plant.m, plant.n)}")
    A_cl = plant.closed_loop(K)
    lyap = LyapunovSolver(A_cl)
    lyap_T = LyapunovSolver(A_cl.T)
    Y = lyap.solve(plant.W)
    qk = cost.Q + K.T @ cost.R @ K
    P = lyap_T.solve(qk)
    riem = 2.0 * (cost.R @ K + plant.B.T @ P @ A_cl)
    return GeometryCache(
        plant=plant,
        costpair=cost,
        K=K,
        A_cl=A_cl,
        Y=Y,
        P=P,
        cost=float(np.trace(P @ plant.W)),
        eucl_grad=riem @ Y,
        riem_grad=riem,
        lyap=lyap,
        lyap_T=lyap_T,
    )


def lqg_cost(plant: PlantModel, cost: CostPair, K) -> float:
    """Infinite-horizon average cost ``Tr(P_K W)``; ``inf`` outside the stabilizing set."""
    A_cl = plant.closed_loop(K)
    if spectral_radius(A_cl) >= 1.0 - STABILITY_MARGIN:
        return float("inf")
    P = LyapunovSolver(A_cl.T).solve(cost.Q + K.T @ cost.R @ K)
    return float(np.trace(P @ plant.W))


def _check_direction(cache, U):
    U = np.asarray(U, dtype=float)
    if U.shape != cache.K.shape:
        raise DimensionMismatch(f"direction has shape {U.shape}, expected {cache.K.shape}")
    return U


def metric_inner(cache: GeometryCache, U, V, weight=None) -> float:
    U = _check_direction(cache, U)
    V = _check_direction(cache, V)
    Yw = cache.Y if weight is None else weight
    return float(np.trace(U @ Yw @ V.T))


def metric_norm(cache: GeometryCache, U, weight=None) -> float:
    return float(np.sqrt(max(metric_inner(cache, U, U, weight), 0.0)))


def surrogate_distance(cache: GeometryCache, K_other) -> float:
    """``||K_other - K||`` measured in the metric at the cached gain."""
    return metric_norm(cache, np.asarray(K_other) - cache.K)


def metric_derivative(cache: GeometryCache, U):
    """Directional derivative ``DY_K[U]`` of the state covariance."""
    U = _check_direction(cache, U)
    BU = cache.plant.B @ U
    Z = BU @ cache.Y @ cache.A_cl.T
    return cache.lyap.solve(Z + Z.T)


def value_derivative(cache: GeometryCache, U):
    """Directional derivative ``DP_K[U]`` of the value matrix."""
    U = _check_direction(cache, U)
    BU = cache.plant.B @ U
    R, K = cache.costpair.R, cache.K
    Z = BU.T @ cache.P @ cache.A_cl + U.T @ R @ K
    return cache.lyap_T.solve(Z + Z.T)


def christoffel_apply(cache: GeometryCache, U, V):
    """``Gamma_K(U, V)`` from the coordinate formula on ``g = kron(I_m, Y)``.

    ``Gamma^c_ab U^a V^b = 1/2 g^cd (d_a g_db + d_b g_da - d_d g_ab) U^a V^b`` with
    each ``d_a g`` built from the precomputed coordinate derivatives of ``Y``.
    """
    U = _check_direction(cache, U)
    V = _check_direction(cache, V)
    dY = cache.dY_coords
    Y_inv = cache.Y_inv
    dY_U = np.tensordot(U.ravel(), dY, axes=1)
    dY_V = np.tensordot(V.ravel(), dY, axes=1)
    w = np.einsum("ip,dpq,iq->d", U, dY, V).reshape(cache.K.shape)
    return 0.5 * (V @ dY_U + U @ dY_V - w) @ Y_inv


def grad_derivative(cache: GeometryCache, U):
    """Plain directional derivative of the Riemannian gradient field, ``D(grad f)[U]``."""
    U = _check_direction(cache, U)
    B, R = cache.plant.B, cache.costpair.R
    dP = value_derivative(cache, U)
    return 2.0 * (R @ U + B.T @ dP @ cache.A_cl + B.T @ cache.P @ B @ U)


def euclidean_hessian_apply(cache: GeometryCache, U):
    """Second derivative ``D^2 f(K)[U]`` as an ``(m, n)`` matrix (Euclidean Hessian)."""
    U = _check_direction(cache, U)
    return grad_derivative(cache, U) @ cache.Y + cache.riem_grad @ metric_derivative(cache, U)


def ambient_hessian_apply(cache: GeometryCache, U):
    U = _check_direction(cache, U)
    return grad_derivative(cache, U) + christoffel_apply(cache, U, cache.riem_grad)


def _projector(basis, weight):
    """Coordinate matrix of the weight-orthogonal projection onto ``span(basis)``.

    ``weight`` is the ``n x n`` row weight; the coordinate Gram matrix is
    ``kron(I_m, weight)``. Also returns ``N S^-1`` for reuse in derivatives.
    """
    mn, d = basis.shape
    n = weight.shape[0]
    m = mn // n
    if d == 0:
        return np.zeros((mn, mn)), np.zeros((mn, 0))
    G = np.kron(np.eye(m), weight)
    S = basis.T @ G @ basis
    try:
        NSinv = sla.solve(S, basis.T, assume_a="pos").T
    except (sla.LinAlgError, ValueError) as exc:
        raise SingularConstraint("reduced Gram matrix is singular") from exc
    return NSinv @ basis.T @ G, NSinv


def tangent_project(cache: GeometryCache, constraint: ConstraintSet, U, weight=None):
    """g-orthogonal projection of ``U`` onto the constraint's tangent space.

    ``weight=np.eye(n)`` gives the Euclidean projection.
    """
    U = _check_direction(cache, U)
    if constraint.kind == "none":
        return U.copy()
    Yw = cache.Y if weight is None else weight
    Pi, _ = _projector(constraint.basis, Yw)
    return (Pi @ U.ravel()).reshape(U.shape)


def submanifold_gradient(cache: GeometryCache, constraint: ConstraintSet):
    return tangent_project(cache, constraint, cache.riem_grad)


class _SubmanifoldOps:
    """Projection data at one point reused across many Hessian applications."""

    def __init__(self, cache: GeometryCache, constraint: ConstraintSet):
        self.cache = cache
        self.constraint = constraint
        self.shape = cache.K.shape
        if constraint.kind == "none":
            self.Pi = None
            self.grad_h = cache.riem_grad
        else:
            self.Pi, self.NSinv = _projector(constraint.basis, cache.Y)
            self.grad_h = self.project(cache.riem_grad)

    def project(self, U):
        if self.Pi is None:
            return U
        return (self.Pi @ U.ravel()).reshape(self.shape)

    def grad_h_derivative(self, U):
        """``D(grad h)[U]`` where ``grad h(K) = Pi_K grad f(K)``."""
        c = self.cache
        dgrad = grad_derivative(c, U)
        if self.Pi is None:
            return dgrad
        # D Pi[U] = N S^-1 N' DG[U] (I - Pi)
        normal = c.riem_grad - self.grad_h
        dG_normal = normal @ metric_derivative(c, U)
        N = self.constraint.basis
        dPi_grad = (self.NSinv @ (N.T @ dG_normal.ravel())).reshape(self.shape)
        return self.project(dgrad) + dPi_grad

    def hessian_apply(self, U):
        if self.constraint.dim == 0:
            return np.zeros(self.shape)
        inner = self.grad_h_derivative(U) + christoffel_apply(self.cache, U, self.grad_h)
        return self.project(inner)


def submanifold_hessian_apply(cache: GeometryCache, constraint: ConstraintSet, U):
    U = _check_direction(cache, U)
    return _SubmanifoldOps(cache, constraint).hessian_apply(U)


def reduced_newton_system(cache: GeometryCache, constraint: ConstraintSet):
    """Reduced Hessian ``H_red[i, j] = g(Hess h[N_j], N_i)`` and ``grad_red[i] = g(grad h, N_i)``.

    Returns ``(H_red, grad_red, grad_h, asymmetry)``; ``H_red`` is symmetrized.
    """
    ops = _SubmanifoldOps(cache, constraint)
    basis = constraint.basis_matrices()
    d = len(basis)
    Y = cache.Y
    H = np.zeros((d, d))
    for j, Nj in enumerate(basis):
        HNj = ops.hessian_apply(Nj)
        HY = HNj @ Y
        for i, Ni in enumerate(basis):
            H[i, j] = np.sum(HY * Ni)
    g_red = np.array([np.sum((ops.grad_h @ Y) * Ni) for Ni in basis])
    asym = float(np.max(np.abs(H - H.T))) if d else 0.0
    return symmetrize(H) if d else H, g_red, ops.grad_h, asym


def _solve_reduced(H, g_red, tol):
    d = H.shape[0]
    if d == 0:
        return np.zeros(0), True
    w = np.linalg.eigvalsh(H)
    if w[0] <= tol * max(1.0, w[-1]):
        return None, False
    return -sla.solve(H, g_red, assume_a="pos"), True


def newton_direction(cache: GeometryCache, constraint: ConstraintSet, pd_tol: float = HESSIAN_PD_TOL):
    """Riemannian Newton direction on the constrained submanifold.

    Falls back to ``-grad h`` (status ``"gradient_fallback"``) when the reduced
    Hessian is not safely positive definite.
    """
    H, g_red, grad_h, _ = reduced_newton_system(cache, constraint)
    coeffs, ok = _solve_reduced(H, g_red, pd_tol)
    if not ok:
        return -grad_h, "gradient_fallback"
    G = (constraint.basis @ coeffs).reshape(cache.K.shape)
    return G, "newton"


def euclidean_newton_direction(cache: GeometryCache, constraint: ConstraintSet, pd_tol: float = HESSIAN_PD_TOL):
    """Newton direction with identity metric and zero connection (plain second derivative)."""
    basis = constraint.basis_matrices()
    d = len(basis)
    shape = cache.K.shape
    H = np.zeros((d, d))
    for j, Nj in enumerate(basis):
        HNj = euclidean_hessian_apply(cache, Nj)
        for i, Ni in enumerate(basis):
            H[i, j] = np.sum(HNj * Ni)
    H = symmetrize(H) if d else H
    g_red = np.array([np.sum(cache.eucl_grad * Ni) for Ni in basis])
    # basis may be non-orthonormal (row_affine): solve in coordinates, fall back on Euclidean projection
    coeffs, ok = _solve_reduced(H, g_red, pd_tol)
    if not ok:
        eye = np.eye(cache.n)
        return -tangent_project(cache, constraint, cache.eucl_grad, weight=eye), "gradient_fallback"
    return (constraint.basis @ coeffs).reshape(shape), "newton"


def certificate_from_cache(cache: GeometryCache, G, qmap: Callable = default_qmap) -> float:
    G = _check_direction(cache, G)
    BG = np.linalg.norm(cache.plant.B @ G, 2)
    if BG == 0.0:
        return float("inf")
    Qk = symmetrize(qmap(cache.K, cache.costpair))
    if qmap is default_qmap:
        L = cache.P
    else:
        L = cache.lyap_T.solve(Qk)
    lam_q = np.linalg.eigvalsh(Qk)[0]
    lam_l = np.linalg.eigvalsh(L)[-1]
    return float(lam_q / (2.0 * lam_l * BG))


def stability_certificate(plant: PlantModel, cost: CostPair, K, G, qmap: Callable = default_qmap) -> float:
    """Largest step ``s`` such that ``K + eta G`` stays stabilizing for every ``0 <= eta <= s``."""
    K = np.atleast_2d(np.asarray(K, dtype=float))
    A_cl = plant.closed_loop(K)
    if spectral_radius(A_cl) >= 1.0 - STABILITY_MARGIN:
        raise NotStable("certificate requested at a non-stabilizing gain")
    G = np.atleast_2d(np.asarray(G, dtype=float))
    BG = np.linalg.norm(plant.B @ G, 2)
    if BG == 0.0:
        return float("inf")
    Qk = symmetrize(qmap(K, cost))
    L = LyapunovSolver(A_cl.T).solve(Qk)
    return float(np.linalg.eigvalsh(Qk)[0] / (2.0 * np.linalg.eigvalsh(L)[-1] * BG))
