"""CSV traces, summaries and the run manifest."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from . import geometry, linalg, optimizers, stability
from .plotting import SUMMARY_COLUMNS

SCHEMA_VERSION = "1"
TRACE_COLUMNS = (
    "scenario", "algorithm", "run", "t", "stage_cost", "comparator_stage_cost", "cumulative_regret",
    "eta", "certificate", "grad_norm_g", "closed_loop_radius", "surrogate_dist",
)

PATHLENGTH_COLUMNS = ("variation_factor", "path_length", "algorithm", "final_regret_mean", "final_regret_std")


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def tolerances() -> dict:
    return {
        "lyapunov_stability_margin": linalg.STABILITY_MARGIN,
        "dare_tol": linalg.DARE_TOL,
        "dare_max_iter": linalg.DARE_MAX_ITER,
        "metric_floor": geometry.METRIC_FLOOR,
        "hessian_pd_tol": geometry.HESSIAN_PD_TOL,
        "grad_tol": optimizers.GRAD_TOL,
        "armijo_c1": optimizers.ARMIJO_C1,
        "defective_cond": stability.DEFECTIVE_COND,
    }


def _safe(label):
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in label)


def write_trace_csv(path, scenario, result):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r, tr in enumerate(result.runs):
            for i in range(len(tr)):
                w.writerow([
                    scenario, result.label, r, int(tr.t[i]),
                    fmt(tr.stage_cost[i]), fmt(tr.comparator_stage_cost[i]), fmt(tr.cumulative_regret[i]),
                    fmt(tr.eta[i]), fmt(tr.certificate[i]), fmt(tr.grad_norm_g[i]),
                    fmt(tr.closed_loop_radius[i]), fmt(tr.surrogate_dist[i]),
                ])


def write_summary_csv(path, results):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for res in results:
            mean, std = res.mean_curve, res.std_curve
            for i in range(len(mean)):
                w.writerow([res.label, i + 1, fmt(mean[i]), fmt(std[i]), len(res.runs)])


def write_pathlength_csv(path, mc):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PATHLENGTH_COLUMNS)
        for res in mc.results:
            sc = mc.scenarios[res.variation_factor]
            w.writerow([fmt(res.variation_factor), fmt(sc.comparator.path_length), res.algorithm,
                        fmt(res.final_mean), fmt(res.std_curve[-1])])


@dataclass
class RunManifest:
    config: dict
    artifacts: list
    wall_clock_s: float
    tolerances: dict = field(default_factory=tolerances)
    schema_version: str = SCHEMA_VERSION
    threads: int = 1

    def write(self, path):
        Path(path).write_text(json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n")


def write_outputs(mc, out_dir: Path):
    """Write every CSV for ``mc`` under ``out_dir``; returns the list of paths written."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for res in mc.results:
        p = out_dir / f"trace_{_safe(res.label)}.csv"
        write_trace_csv(p, mc.config.scenario, res)
        written.append(p)
    summary = out_dir / "summary.csv"
    write_summary_csv(summary, mc.results)
    written.append(summary)
    pl = out_dir / "path_length.csv"
    write_pathlength_csv(pl, mc)
    written.append(pl)
    return written, summary
