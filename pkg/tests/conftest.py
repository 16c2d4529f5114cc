import numpy as np
import pytest

from manifold_lqg.geometry import CostPair, PlantModel, closed_loop_cache
from manifold_lqg.harness import generate_constraint_mask, generate_plant
from manifold_lqg.linalg import spectral_radius


def random_instance(seed, n, m, rho=0.8, k_scale=0.3):
    """Random stable plant, random SPD cost and a stabilizing gain near zero."""
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n))
    A *= rho / max(spectral_radius(A), 1e-12)
    B = rng.standard_normal((n, m))
    Lq = rng.standard_normal((n, n))
    Lr = rng.standard_normal((m, m))
    Lw = rng.standard_normal((n, n))
    W = np.eye(n) + 0.2 * Lw @ Lw.T
    Q = np.eye(n) + 0.3 * Lq @ Lq.T
    R = np.eye(m) + 0.3 * Lr @ Lr.T
    plant = PlantModel(A, B, W)
    K = k_scale * rng.standard_normal((m, n)) / np.sqrt(n)
    while spectral_radius(plant.closed_loop(K)) > 0.95:
        K *= 0.5
    return plant, CostPair(Q, R), K


def random_direction(seed, m, n):
    return np.random.default_rng(seed + 10_000).standard_normal((m, n))


def scalar_setup(k=0.0, a=0.5, b=1.0):
    plant = PlantModel(np.array([[a]]), np.array([[b]]), np.eye(1))
    cost = CostPair(np.eye(1), np.eye(1))
    return plant, cost, closed_loop_cache(plant, cost, np.array([[k]]))


def section6_instance(seed, density=0.5):
    """n=6, m=3 plant with a random sparsity mask, identity-based costs."""
    plant = generate_plant(seed, 6, 3, 0.8)
    constraint = generate_constraint_mask(seed + 1000, 6, 3, density)
    rng = np.random.default_rng(seed)
    cost = CostPair(np.eye(6) + 0.5 * np.diag(rng.uniform(size=6) ** 2),
                    np.eye(3) + 0.5 * np.diag(rng.uniform(size=3) ** 2))
    return plant, cost, constraint


@pytest.fixture
def scalar():
    return scalar_setup()


def masked_instance(seed, n, m, density=0.5):
    """Random instance plus a random mask, with ``K`` made feasible and stabilizing."""
    from manifold_lqg.geometry import ConstraintSet

    plant, cost, K = random_instance(seed, n, m)
    mask = np.random.default_rng(seed).uniform(size=(m, n)) < density
    K = np.where(mask, 0.0, K)
    while spectral_radius(plant.closed_loop(K)) > 0.95:
        K *= 0.5
    return plant, cost, K, ConstraintSet.from_mask(mask)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for num in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[num])
