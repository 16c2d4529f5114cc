"""Scenario generation, online runs, rollouts, exact expected costs and regret accounting."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDraw, LengthMismatch, NoConvergence, NotStable
from .geometry import (
    ConstraintSet,
    CostPair,
    PlantModel,
    closed_loop_cache,
    surrogate_distance,
)
from .linalg import LyapunovSolver, solve_dare, spectral_radius
from .optimizers import GRAD_TOL, STEP_FUNCTIONS, offline_local_minimizer

NOISE_STREAM = 0
INIT_STREAM = 1


def make_rng(*key):
    """Philox generator keyed by a tuple of non-negative ints (portable, counter-based)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(list(key))))


def generate_plant(seed, n, m, target_rho=0.8, max_attempts=16) -> PlantModel:
    """Gaussian ``(A, B)`` with ``A`` rescaled to spectral radius ``target_rho``; ``W = I``."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    if not 0 < target_rho < 1:
        raise ValueError("target_rho must lie in (0, 1)")
    for attempt in range(max_attempts):
        rng = make_rng(seed, attempt)
        A = rng.standard_normal((n, n))
        B = rng.standard_normal((n, m))
        rho = spectral_radius(A)
        if rho > 1e-12:
            return PlantModel(A * (target_rho / rho), B, np.eye(n))
    raise DegenerateDraw(f"no non-nilpotent draw for seed {seed} after {max_attempts} attempts")


def generate_constraint_mask(seed, n, m, density=0.5) -> ConstraintSet:
    """Entrywise sparsity: ``floor(density * m * n)`` randomly chosen gain entries pinned to zero."""
    if not 0 <= density <= 1:
        raise ValueError("density must lie in [0, 1]")
    k = int(np.floor(density * m * n + 1e-12))
    if k == 0:
        return ConstraintSet.none(m, n)
    rng = make_rng(seed)
    mask = np.zeros(m * n, dtype=bool)
    mask[rng.choice(m * n, size=k, replace=False)] = True
    return ConstraintSet.from_mask(mask.reshape(m, n))


def generate_cost_sequence(seed, T, variation_factor, n, m) -> list[CostPair]:
    """``Q_t = I + vf * N_t' N_t`` with diagonal ``N_t ~ U(0,1)``; ``R_t`` likewise.

    The uniform draws do not depend on ``variation_factor``, so sweeps that
    share ``seed`` see identically shaped perturbations at different scales.
    """
    if variation_factor < 0:
        raise ValueError("variation_factor must be non-negative")
    rng = make_rng(seed)
    cap = max(n, m) * (1.0 + variation_factor)
    out = []
    for _ in range(T):
        nq = rng.uniform(0.0, 1.0, size=n)
        nr = rng.uniform(0.0, 1.0, size=m)
        out.append(CostPair(np.eye(n) + variation_factor * np.diag(nq ** 2),
                            np.eye(m) + variation_factor * np.diag(nr ** 2), trace_cap=cap))
    return out


@dataclass
class ComparatorPath:
    gains: list
    grad_norms: list
    iterations: list
    path_length: float
    expected: object = None


def comparator_sequence(plant, costs, constraint, tol=GRAD_TOL, K_init=None, max_iter=200,
                        strategy="backtracking") -> ComparatorPath:
    """Per-round local minimizers, each warm-started from the previous round's.

    Backtracking is the default because certificate-sized steps can be tiny far
    from the minimizer (round 1 starts at ``K = 0``).
    """
    if not costs:
        raise ValueError("empty cost sequence")
    m, n = plant.m, plant.n
    gains, norms, iters = [], [], []
    K = np.zeros((m, n)) if K_init is None else np.asarray(K_init, dtype=float)
    for t, c in enumerate(costs, start=1):
        if constraint.kind == "none":
            _, K = solve_dare(plant.A, plant.B, c.Q, c.R)
            norms.append(float("nan"))
            iters.append(0)
        else:
            rep = offline_local_minimizer(plant, c, constraint, K, tol=tol, max_iter=max_iter, strategy=strategy)
            if not rep.converged:
                raise NoConvergence(f"comparator did not converge at round {t}", report=rep, t=t)
            K = rep.K_star
            norms.append(rep.final_grad_norm_g)
            iters.append(rep.iterations)
        gains.append(K)
    return ComparatorPath(gains, norms, iters, path_length(plant, costs, gains))


def path_length(plant, costs, gains) -> float:
    """Sum over t >= 2 of the surrogate distance between consecutive gains."""
    total = 0.0
    for t in range(1, len(gains)):
        cache = closed_loop_cache(plant, costs[t - 1], gains[t - 1])
        total += surrogate_distance(cache, gains[t])
    return total


@dataclass
class OnlineRun:
    algorithm: str
    gains: list
    steps: list


def run_online(plant, costs, constraint, K1, algorithm="onm") -> OnlineRun:
    """Apply ``K_t``, observe ``(Q_t, R_t)``, take one certified step; repeat for every round."""
    step = STEP_FUNCTIONS[algorithm]
    K = np.asarray(K1, dtype=float)
    gains, steps = [], []
    for t, c in enumerate(costs, start=1):
        gains.append(K)
        try:
            rep = step(plant, c, K, constraint)
        except NotStable as exc:
            exc.t, exc.algorithm = t, algorithm
            raise
        steps.append(rep)
        K = rep.K_next
    return OnlineRun(algorithm, gains, steps)


def steady_state_covariance(plant, K):
    return LyapunovSolver(plant.closed_loop(K)).solve(plant.W)


def draw_noise(plant, T, master_seed, run_index, X1=None, batch=None):
    """Initial states and process noise for one run (or a batch of ``batch`` samples).

    Returns ``(x1, w)`` with shapes ``(n,)``/``(T, n)`` or ``(batch, n)``/``(batch, T, n)``.
    """
    rng = make_rng(master_seed, run_index, NOISE_STREAM)
    n = plant.n
    size = () if batch is None else (batch,)
    z1 = rng.standard_normal(size + (n,))
    w = rng.standard_normal(size + (T, n)) @ _psd_sqrt(plant.W).T
    x1 = np.zeros(size + (n,)) if X1 is None else z1 @ _psd_sqrt(X1).T
    return x1, w


def _psd_sqrt(X):
    vals, vecs = np.linalg.eigh(0.5 * (X + X.T))
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


def rollout(plant, gains, costs, noise, x1) -> np.ndarray:
    """Realized stage costs ``x'Q_t x + u'R_t u`` with ``u_t = K_t x_t``.

    ``noise`` has shape ``(T, n)`` (or ``(batch, T, n)`` with ``x1`` of shape
    ``(batch, n)``); ``noise[t]`` drives the transition out of round ``t``.
    """
    if len(gains) != len(costs):
        raise LengthMismatch("gains and costs must have equal length")
    x = np.array(x1, dtype=float)
    noise = np.asarray(noise, dtype=float)
    T = len(gains)
    out = np.zeros(x.shape[:-1] + (T,))
    for t in range(T):
        K, c = gains[t], costs[t]
        u = x @ K.T
        out[..., t] = np.einsum("...i,ij,...j->...", x, c.Q, x) + np.einsum("...i,ij,...j->...", u, c.R, u)
        x = x @ plant.A.T + u @ plant.B.T + noise[..., t, :]
    return out


@dataclass
class ExpectedTrace:
    stage_costs: np.ndarray
    cov_gaps: np.ndarray
    covariances: list
    steady_states: list


def expected_cost_trace(plant, gains, costs, X1) -> ExpectedTrace:
    """Exact expected stage costs from ``X_{t+1} = A_t X_t A_t' + W``."""
    if len(gains) != len(costs):
        raise LengthMismatch("gains and costs must have equal length")
    X = np.array(X1, dtype=float)
    stage, gaps, covs, steady = [], [], [], []
    for K, c in zip(gains, costs):
        A_cl = plant.closed_loop(K)
        Xs = LyapunovSolver(A_cl).solve(plant.W)
        stage.append(float(np.trace((c.Q + K.T @ c.R @ K) @ X)))
        gaps.append(float(np.linalg.norm(X - Xs, 2)))
        covs.append(X)
        steady.append(Xs)
        X = A_cl @ X @ A_cl.T + plant.W
        X = 0.5 * (X + X.T)
    return ExpectedTrace(np.array(stage), np.array(gaps), covs, steady)


@dataclass
class RegretTrace:
    t: np.ndarray
    stage_cost: np.ndarray
    comparator_stage_cost: np.ndarray
    cumulative_regret: np.ndarray
    eta: np.ndarray = None
    certificate: np.ndarray = None
    grad_norm_g: np.ndarray = None
    closed_loop_radius: np.ndarray = None
    surrogate_dist: np.ndarray = None

    def __len__(self):
        return len(self.t)

    @property
    def final(self) -> float:
        return float(self.cumulative_regret[-1])


def compute_regret(alg_costs, comparator_costs, diagnostics=None) -> RegretTrace:
    """Cumulative regret ``sum_{tau <= t} (alg - comparator)``; realized or expected inputs alike."""
    a = np.asarray(alg_costs, dtype=float)
    b = np.asarray(comparator_costs, dtype=float)
    if a.shape != b.shape:
        raise LengthMismatch(f"trace lengths differ: {a.shape} vs {b.shape}")
    diag = diagnostics or {}
    return RegretTrace(
        t=np.arange(1, a.shape[-1] + 1),
        stage_cost=a,
        comparator_stage_cost=b,
        cumulative_regret=np.cumsum(a - b, axis=-1),
        **{k: np.asarray(v, dtype=float) for k, v in diag.items()},
    )


def step_diagnostics(plant, costs, run: OnlineRun, comparator_gains) -> dict:
    eta, cert, gnorm, rad, dist = [], [], [], [], []
    for t, rep in enumerate(run.steps):
        eta.append(rep.eta)
        cert.append(rep.certificate)
        gnorm.append(rep.grad_norm_g)
        rad.append(rep.current_radius)
        cache = closed_loop_cache(plant, costs[t], run.gains[t])
        dist.append(surrogate_distance(cache, comparator_gains[t]))
    return dict(eta=eta, certificate=cert, grad_norm_g=gnorm, closed_loop_radius=rad, surrogate_dist=dist)
