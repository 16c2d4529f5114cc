"""Monte-Carlo regret experiments built on the harness primitives.

Gain sequences do not depend on the noise, so each algorithm's online run and
the comparator path are computed once per scenario; the ``runs`` repetitions
only redraw the noise. Run ``r`` uses the stream keyed by
``(master_seed, r)`` for the algorithm *and* the comparator rollouts (common
random numbers).
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig
from .errors import ManifoldLQGError, NoConvergence, NumericalFailure
from .geometry import ConstraintSet
from .harness import (
    compute_regret,
    comparator_sequence,
    draw_noise,
    expected_cost_trace,
    generate_constraint_mask,
    generate_cost_sequence,
    generate_plant,
    rollout,
    run_online,
    steady_state_covariance,
    step_diagnostics,
)


@dataclass
class Scenario:
    plant: object
    constraint: ConstraintSet
    costs: list
    variation_factor: float
    comparator: object
    X1: np.ndarray


@dataclass
class AlgorithmResult:
    label: str
    algorithm: str
    variation_factor: float
    gains: list
    diagnostics: dict
    expected: object
    runs: list = field(default_factory=list)

    @property
    def regret_matrix(self) -> np.ndarray:
        return np.array([r.cumulative_regret for r in self.runs])

    @property
    def mean_curve(self) -> np.ndarray:
        return self.regret_matrix.mean(axis=0)

    @property
    def std_curve(self) -> np.ndarray:
        R = self.regret_matrix
        return R.std(axis=0, ddof=1) if len(R) > 1 else np.zeros(R.shape[1])

    @property
    def final_mean(self) -> float:
        return float(self.mean_curve[-1])


@dataclass
class MonteCarloResult:
    config: ExperimentConfig
    results: list
    scenarios: dict

    def by_label(self, label) -> AlgorithmResult:
        for r in self.results:
            if r.label == label:
                return r
        raise KeyError(label)


def build_scenario(config: ExperimentConfig, variation_factor: float) -> Scenario:
    n, m = config.n, config.m
    plant = generate_plant(config.plant_seed, n, m, config.target_rho)
    if config.scenario == "unconstrained_sanity":
        constraint = ConstraintSet.none(m, n)
    else:
        constraint = generate_constraint_mask(config.mask_seed, n, m, config.mask_density)
    costs = generate_cost_sequence(config.cost_seed, config.horizon, variation_factor, n, m)
    comp = comparator_sequence(plant, costs, constraint, tol=config.comparator_tol)
    # start the comparator in its own steady state so round 1 carries no transient
    X1 = steady_state_covariance(plant, comp.gains[0])
    return Scenario(plant, constraint, costs, variation_factor, comp, X1)


def _label(config, algorithm, vf):
    if config.scenario == "variation_sweep":
        return f"{algorithm}@vf={vf:g}"
    return algorithm


def monte_carlo_regret(config: ExperimentConfig, threads: int = 1) -> MonteCarloResult:
    """Realized regret curves for every (algorithm, variation factor) pair of ``config``."""
    scenarios, results = {}, []
    for vf in config.factors:
        try:
            sc = build_scenario(config, vf)
        except NoConvergence as exc:
            raise NumericalFailure(f"comparator failed at round {exc.t}: {exc}", t=exc.t,
                                   algorithm="comparator") from exc
        scenarios[vf] = sc
        m, n = config.m, config.n
        # every online algorithm starts from K_1 = 0: feasible for homogeneous constraints, stable since rho(A) < 1
        K1 = np.zeros((m, n))
        for alg in config.algorithms:
            try:
                run = run_online(sc.plant, sc.costs, sc.constraint, K1, alg)
            except ManifoldLQGError as exc:
                t = getattr(exc, "t", None)
                raise NumericalFailure(f"{alg} failed at round {t}: {exc}", t=t, algorithm=alg) from exc
            diag = step_diagnostics(sc.plant, sc.costs, run, sc.comparator.gains)
            expected = expected_cost_trace(sc.plant, run.gains, sc.costs, sc.X1)
            results.append(AlgorithmResult(_label(config, alg, vf), alg, vf, run.gains, diag, expected))

    comp_expected = {vf: expected_cost_trace(sc.plant, sc.comparator.gains, sc.costs, sc.X1)
                     for vf, sc in scenarios.items()}
    for vf, sc in scenarios.items():
        sc.comparator.expected = comp_expected[vf]

    def one_run(r):
        noise, comp_cost = {}, {}
        for vf, sc in scenarios.items():
            noise[vf] = draw_noise(sc.plant, config.horizon, config.master_seed, r, sc.X1)
            x1, w = noise[vf]
            comp_cost[vf] = rollout(sc.plant, sc.comparator.gains, sc.costs, w, x1)
        out = []
        for res in results:
            sc = scenarios[res.variation_factor]
            x1, w = noise[res.variation_factor]
            alg_cost = rollout(sc.plant, res.gains, sc.costs, w, x1)
            out.append(compute_regret(alg_cost, comp_cost[res.variation_factor], res.diagnostics))
        return out

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_run = list(pool.map(one_run, range(config.runs)))
    else:
        per_run = [one_run(r) for r in range(config.runs)]
    for r_traces in per_run:
        for res, tr in zip(results, r_traces):
            res.runs.append(tr)
    return MonteCarloResult(config, results, scenarios)


def expected_regret(result: AlgorithmResult, scenario: Scenario):
    return compute_regret(result.expected.stage_costs, scenario.comparator.expected.stage_costs)
