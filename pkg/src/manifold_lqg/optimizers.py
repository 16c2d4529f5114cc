"""Online and offline policy-optimization steps on the constrained gain manifold."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleInit, NotStable
from .geometry import (
    ConstraintSet,
    CostPair,
    PlantModel,
    certificate_from_cache,
    closed_loop_cache,
    default_qmap,
    euclidean_newton_direction,
    lqg_cost,
    metric_inner,
    metric_norm,
    newton_direction,
    submanifold_gradient,
    tangent_project,
)
from .linalg import spectral_radius

GRAD_TOL = 1e-9
ARMIJO_C1 = 1e-4
MIN_BACKTRACK_STEP = 1e-14
# relative slack on the Armijo test: near a minimizer the predicted decrease
# drops below the roundoff in h, and exact arithmetic would reject a good Newton step
ARMIJO_ROUNDOFF = 1e-14

ALGORITHMS = ("onm", "euclidean_newton", "pg")


@dataclass
class StepReport:
    K_next: np.ndarray
    direction: np.ndarray
    direction_norm_g: float
    grad_norm_g: float
    eta: float
    certificate: float
    status: str
    closed_loop_radius: float
    current_radius: float
    cost_value: float


@dataclass
class SolveReport:
    K_star: np.ndarray
    iterations: int
    final_grad_norm_g: float
    converged: bool
    grad_norm_history: list = field(default_factory=list)
    iterates: list = field(default_factory=list)


def _direction(cache, constraint, method):
    if method == "onm":
        return newton_direction(cache, constraint)
    if method == "euclidean_newton":
        return euclidean_newton_direction(cache, constraint)
    if method == "pg":
        G = -tangent_project(cache, constraint, cache.eucl_grad, weight=np.eye(cache.n))
        return G, "gradient"
    raise ValueError(f"unknown method {method!r}")


def certified_step(plant: PlantModel, cost: CostPair, K, constraint: ConstraintSet,
                   method: str = "onm", qmap=default_qmap) -> StepReport:
    """One round: direction from ``method``, step ``eta = min(1, s_K)``."""
    cache = closed_loop_cache(plant, cost, K)
    G, status = _direction(cache, constraint, method)
    grad_h = submanifold_gradient(cache, constraint)
    s = certificate_from_cache(cache, G, qmap)
    eta = min(1.0, s)
    K_next = cache.K + eta * G
    rho_next = spectral_radius(plant.closed_loop(K_next))
    if not rho_next < 1.0:
        raise NotStable(f"certified step left the stabilizing set (rho={rho_next:.6g})")
    return StepReport(
        K_next=K_next,
        direction=G,
        direction_norm_g=metric_norm(cache, G),
        grad_norm_g=metric_norm(cache, grad_h),
        eta=eta,
        certificate=s,
        status=status,
        closed_loop_radius=rho_next,
        current_radius=cache.radius,
        cost_value=cache.cost,
    )


def onm_step(plant, cost_t, K_t, constraint, qmap=default_qmap) -> StepReport:
    return certified_step(plant, cost_t, K_t, constraint, "onm", qmap)


def euclidean_newton_step(plant, cost_t, K_t, constraint, qmap=default_qmap) -> StepReport:
    return certified_step(plant, cost_t, K_t, constraint, "euclidean_newton", qmap)


def projected_gradient_step(plant, cost_t, K_t, constraint, qmap=default_qmap) -> StepReport:
    return certified_step(plant, cost_t, K_t, constraint, "pg", qmap)


STEP_FUNCTIONS = {
    "onm": onm_step,
    "euclidean_newton": euclidean_newton_step,
    "pg": projected_gradient_step,
}


def _armijo(plant, cost, cache, G, grad_h, c1=ARMIJO_C1):
    slope = metric_inner(cache, grad_h, G)
    if slope >= 0:
        # not a descent direction (can only happen through roundoff); use the gradient
        G = -grad_h
        slope = metric_inner(cache, grad_h, G)
    slack = ARMIJO_ROUNDOFF * max(1.0, abs(cache.cost))
    eta = 1.0
    while eta >= MIN_BACKTRACK_STEP:
        trial = cache.K + eta * G
        f_trial = lqg_cost(plant, cost, trial)
        if np.isfinite(f_trial) and f_trial <= cache.cost + c1 * eta * slope + slack:
            return trial, eta
        eta *= 0.5
    return cache.K, 0.0


def offline_local_minimizer(plant: PlantModel, cost: CostPair, constraint: ConstraintSet, K_init,
                            tol: float = GRAD_TOL, max_iter: int = 200,
                            strategy: str = "certificate", qmap=default_qmap) -> SolveReport:
    """Riemannian Newton iterations on a fixed cost until ``||grad h||_g <= tol``.

    ``strategy="certificate"`` steps with ``min(1, s_K)``; ``"backtracking"`` uses
    Armijo halving on ``h`` and rejects trials outside the stabilizing set.
    A non-converged run is reported with ``converged=False`` rather than raised.
    """
    K = np.array(K_init, dtype=float)
    if not constraint.is_feasible(K, tol=1e-9):
        raise InfeasibleInit("initial gain violates the constraint")
    if spectral_radius(plant.closed_loop(K)) >= 1.0:
        raise InfeasibleInit("initial gain is not stabilizing")
    history, iterates = [], [K.copy()]
    for it in range(max_iter + 1):
        cache = closed_loop_cache(plant, cost, K)
        grad_h = submanifold_gradient(cache, constraint)
        gnorm = metric_norm(cache, grad_h)
        history.append(gnorm)
        if gnorm <= tol:
            return SolveReport(K, it, gnorm, True, history, iterates)
        if it == max_iter:
            break
        G, _ = newton_direction(cache, constraint)
        if strategy == "certificate":
            K = K + min(1.0, certificate_from_cache(cache, G, qmap)) * G
        elif strategy == "backtracking":
            K_new, eta = _armijo(plant, cost, cache, G, grad_h)
            if eta == 0.0:
                break
            K = K_new
        else:
            raise ValueError(f"unknown strategy {strategy!r}")
        iterates.append(K.copy())
    return SolveReport(K, len(iterates) - 1, history[-1], False, history, iterates)
