import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from manifold_lqg.errors import InfeasibleInit
from manifold_lqg.geometry import (
    ConstraintSet,
    CostPair,
    PlantModel,
    closed_loop_cache,
    lqg_cost,
    surrogate_distance,
)
from manifold_lqg.harness import generate_constraint_mask, generate_cost_sequence, generate_plant
from manifold_lqg.linalg import solve_dare, spectral_radius
from manifold_lqg.optimizers import (
    STEP_FUNCTIONS,
    euclidean_newton_step,
    offline_local_minimizer,
    onm_step,
    projected_gradient_step,
)

from conftest import masked_instance, random_instance, scalar_setup, section6_instance

K_DARE_SCALAR = -0.5 * 1.1327822185373186 / 2.1327822185373186


def test_onm_step_scalar():
    plant, cost, _ = scalar_setup()
    rep = onm_step(plant, cost, np.zeros((1, 1)), ConstraintSet.none(1, 1))
    assert rep.status == "newton"
    assert rep.certificate == pytest.approx(33 / 16)
    assert rep.eta == 1.0
    assert rep.K_next[0, 0] == pytest.approx(-2 / 11)
    assert rep.closed_loop_radius < 1


def test_onm_static_cost_reaches_dare_gain():
    plant, cost, _ = scalar_setup()
    P, K_opt = solve_dare(plant.A, plant.B, cost.Q, cost.R)
    assert K_opt[0, 0] == pytest.approx(K_DARE_SCALAR, rel=1e-12)
    K = np.zeros((1, 1))
    for _ in range(10):
        K = onm_step(plant, cost, K, ConstraintSet.none(1, 1)).K_next
    assert abs(K[0, 0] - K_opt[0, 0]) <= 1e-8


@pytest.mark.parametrize("step", list(STEP_FUNCTIONS.values()))
def test_step_at_minimizer_is_stationary(step):
    plant, cost, _ = scalar_setup()
    _, K_opt = solve_dare(plant.A, plant.B, cost.Q, cost.R)
    rep = step(plant, cost, K_opt, ConstraintSet.none(1, 1))
    assert np.allclose(rep.K_next, K_opt, atol=1e-8)


def test_pg_step_scalar():
    plant, cost, _ = scalar_setup()
    rep = projected_gradient_step(plant, cost, np.zeros((1, 1)), ConstraintSet.none(1, 1))
    assert rep.direction[0, 0] == pytest.approx(-16 / 9)
    assert rep.certificate == pytest.approx(27 / 128)
    assert rep.K_next[0, 0] == pytest.approx(-0.375)


def test_euclidean_newton_matches_onm_without_input():
    plant = PlantModel(np.diag([0.5, -0.3, 0.1]), np.zeros((3, 2)), np.eye(3))
    cost = CostPair(np.eye(3), np.diag([1.0, 2.0]))
    K = np.array([[0.3, -0.2, 0.1], [0.0, 0.4, -0.5]])
    con = ConstraintSet.none(2, 3)
    a = onm_step(plant, cost, K, con)
    b = euclidean_newton_step(plant, cost, K, con)
    assert np.allclose(a.direction, b.direction, atol=1e-12)
    assert np.allclose(a.K_next, b.K_next, atol=1e-12)


def test_pg_keeps_masked_entries_zero():
    plant, cost, K, con = masked_instance(4, 5, 3)
    rep = projected_gradient_step(plant, cost, K, con)
    assert np.all(rep.K_next[con.mask] == 0.0)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), alg=st.sampled_from(sorted(STEP_FUNCTIONS)))
def test_steps_preserve_feasibility_and_stability(seed, alg):
    plant, cost, K, con = masked_instance(seed, 4, 2)
    for _ in range(5):
        rep = STEP_FUNCTIONS[alg](plant, cost, K, con)
        assert con.residual(rep.K_next) <= 1e-12
        assert rep.closed_loop_radius < 1
        if rep.status == "newton":
            assert rep.eta == min(1.0, rep.certificate)
        K = rep.K_next


def test_offline_scalar_and_full_constraint():
    plant, cost, _ = scalar_setup()
    rep = offline_local_minimizer(plant, cost, ConstraintSet.none(1, 1), np.zeros((1, 1)))
    assert rep.converged and rep.final_grad_norm_g <= 1e-9
    assert rep.K_star[0, 0] == pytest.approx(K_DARE_SCALAR, abs=1e-9)
    plant, cost, K = random_instance(2, 3, 2)
    K0 = np.zeros((2, 3))
    rep = offline_local_minimizer(plant, cost, ConstraintSet.full(2, 3), K0)
    assert rep.converged and rep.iterations == 0
    assert np.array_equal(rep.K_star, K0)


def test_offline_rejects_bad_init():
    plant, cost, K, con = masked_instance(3, 4, 2)
    with pytest.raises(InfeasibleInit):
        offline_local_minimizer(plant, cost, con, np.ones((2, 4)))
    unstable = ConstraintSet.none(1, 1)
    p, c, _ = scalar_setup()
    with pytest.raises(InfeasibleInit):
        offline_local_minimizer(p, c, unstable, np.array([[0.6]]))


def test_offline_reports_nonconvergence():
    plant, cost, constraint = section6_instance(0)
    rep = offline_local_minimizer(plant, cost, constraint, np.zeros((3, 6)), max_iter=1)
    assert not rep.converged
    assert len(rep.grad_norm_history) == 2


@pytest.mark.parametrize("seed", range(3))
def test_offline_superlinear_on_masked_instance(seed):
    plant, cost, constraint = section6_instance(seed)
    rep = offline_local_minimizer(plant, cost, constraint, np.zeros((3, 6)), strategy="backtracking")
    assert rep.converged and rep.iterations <= 30
    g = rep.grad_norm_history
    ratios = [g[i + 1] / g[i] for i in range(len(g) - 4, len(g) - 1)]
    assert ratios[0] > ratios[1] > ratios[2]
    assert constraint.residual(rep.K_star) == 0.0


@pytest.mark.parametrize("strategy", ["certificate", "backtracking"])
def test_offline_monotone_descent_near_minimizer(strategy):
    plant, cost, constraint = section6_instance(1)
    rep = offline_local_minimizer(plant, cost, constraint, np.zeros((3, 6)), strategy=strategy)
    assert rep.converged
    h = [lqg_cost(plant, cost, K) for K in rep.iterates]
    for k in range(len(h) - 1):
        if rep.grad_norm_history[k] < 1e-2:
            assert h[k + 1] <= h[k] + 1e-12


def test_warm_started_backtracking_reaches_tight_tolerance():
    # the predicted Armijo decrease near a minimizer is below roundoff in h
    plant = generate_plant(4, 6, 3, 0.8)
    con = generate_constraint_mask(2, 6, 3, 0.5)
    costs = generate_cost_sequence(3, 2, 0.5, 6, 3)
    first = offline_local_minimizer(plant, costs[0], con, np.zeros((3, 6)), strategy="backtracking")
    second = offline_local_minimizer(plant, costs[1], con, first.K_star, strategy="backtracking")
    assert first.converged and second.converged
    assert second.final_grad_norm_g <= 1e-9


@pytest.mark.parametrize("seed", range(5))
def test_offline_unconstrained_matches_dare(seed):
    plant, cost, _ = random_instance(seed, 4, 2)
    _, K_opt = solve_dare(plant.A, plant.B, cost.Q, cost.R)
    rep = offline_local_minimizer(plant, cost, ConstraintSet.none(2, 4), np.zeros((2, 4)), strategy="backtracking")
    assert rep.converged
    assert np.linalg.norm(rep.K_star - K_opt) <= 1e-6


def test_onm_contracts_near_minimizer():
    plant, cost, constraint = section6_instance(2)
    K_star = offline_local_minimizer(plant, cost, constraint, np.zeros((3, 6)), strategy="backtracking").K_star
    K = offline_local_minimizer(plant, cost, constraint, np.zeros((3, 6)), max_iter=2,
                                strategy="backtracking").K_star
    ref = closed_loop_cache(plant, cost, K_star)
    d = surrogate_distance(ref, K)
    while d > 1e-10:
        K = onm_step(plant, cost, K, constraint).K_next
        d_next = surrogate_distance(ref, K)
        assert d_next < d
        d = d_next
