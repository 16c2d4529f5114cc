import csv
import json
from pathlib import Path

import numpy as np
import pytest

from manifold_lqg import cli, experiment
from manifold_lqg.artifacts import TRACE_COLUMNS
from manifold_lqg.config import ExperimentConfig
from manifold_lqg.errors import ConfigError, NotStable

SMALL = dict(n=3, m=2, horizon=25, runs=3, mask_density=0.5, variation_factor=0.5)


def write_config(tmp_path, name="cfg.json", **kw):
    data = dict(SMALL, output_dir=str(tmp_path / "out"))
    data.update(kw)
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def csv_bytes(out):
    return {p.name: p.read_bytes() for p in sorted(Path(out).glob("*.csv"))}


def test_config_rejects_unknown_key():
    with pytest.raises(ConfigError) as err:
        ExperimentConfig.from_dict({"n": 3, "horizn": 10})
    assert err.value.key == "horizn"


@pytest.mark.parametrize("key,value", [("n", 0), ("target_rho", 1.0), ("mask_density", -0.1),
                                       ("algorithms", ["newton"]), ("runs", 2.5), ("scenario", "fig9"),
                                       ("variation_factor", [0.1, 0.5])])
def test_config_invalid_values_name_the_key(key, value):
    with pytest.raises(ConfigError) as err:
        ExperimentConfig.from_dict({key: value})
    assert err.value.key == key


def test_config_round_trip():
    cfg = ExperimentConfig(scenario="variation_sweep", variation_factor=[0.1, 1.0])
    assert ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg
    assert cfg.factors == [0.1, 1.0]


def test_run_writes_artifacts(tmp_path, capsys):
    path = write_config(tmp_path)
    assert cli.main(["run", str(path)]) == 0
    out = tmp_path / "out"
    for name in ("trace_onm.csv", "trace_euclidean_newton.csv", "trace_pg.csv", "summary.csv",
                 "regret.svg", "manifest.json", "config.resolved.json"):
        assert (out / name).exists()
    manifest = json.loads((out / "manifest.json").read_text())
    for p in manifest["artifacts"]:
        assert Path(p).exists()
    assert manifest["tolerances"]["grad_tol"] == 1e-9
    with open(out / "trace_onm.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == TRACE_COLUMNS
    assert len(rows) == 1 + SMALL["runs"] * SMALL["horizon"]
    with open(out / "summary.csv", newline="") as fh:
        summary = list(csv.DictReader(fh))
    assert len(summary) == 3 * SMALL["horizon"]


def test_run_is_deterministic_and_thread_independent(tmp_path):
    path = write_config(tmp_path)
    cli.main(["run", str(path), "--output-dir", str(tmp_path / "a")])
    cli.main(["run", str(path), "--output-dir", str(tmp_path / "b"), "--threads", "4"])
    a, b = csv_bytes(tmp_path / "a"), csv_bytes(tmp_path / "b")
    assert a and a == b


def test_manifest_snapshot_reproduces_run(tmp_path):
    path = write_config(tmp_path)
    cli.main(["run", str(path)])
    snap = tmp_path / "snap.json"
    snap.write_text((tmp_path / "out" / "config.resolved.json").read_text())
    cli.main(["run", str(snap), "--output-dir", str(tmp_path / "again")])
    assert csv_bytes(tmp_path / "out") == csv_bytes(tmp_path / "again")


def test_seed_override_and_env_threads(tmp_path, monkeypatch):
    path = write_config(tmp_path, runs=2, algorithms=["pg"])
    monkeypatch.setenv("MANIFOLD_LQG_THREADS", "2")
    m1 = cli.run_experiment(path, tmp_path / "s1")
    m2 = cli.run_experiment(path, tmp_path / "s2", seed_override=99)
    assert m1.threads == 2
    assert m2.config["master_seed"] == 99
    assert csv_bytes(tmp_path / "s1") != csv_bytes(tmp_path / "s2")


def test_static_problem_regret_flattens(tmp_path):
    path = write_config(tmp_path, runs=1, variation_factor=0.0, horizon=60, algorithms=["onm"])
    cli.main(["run", str(path)])
    with open(tmp_path / "out" / "trace_onm.csv", newline="") as fh:
        reg = [float(r["cumulative_regret"]) for r in csv.DictReader(fh)]
    assert np.all(np.abs(np.diff(reg[-20:])) <= 1e-6)


def test_config_error_exit_code(tmp_path, capsys):
    path = write_config(tmp_path, horizon=0)
    assert cli.main(["run", str(path)]) == cli.EXIT_CONFIG
    assert "horizon" in capsys.readouterr().err
    assert cli.main(["run", str(tmp_path / "missing.json")]) == cli.EXIT_CONFIG


def test_numerical_failure_exit_code(tmp_path, capsys, monkeypatch):
    def broken(plant, costs, constraint, K1, algorithm):
        exc = NotStable("step left the stabilizing set")
        exc.t = 7
        raise exc

    monkeypatch.setattr(experiment, "run_online", broken)
    path = write_config(tmp_path)
    assert cli.main(["run", str(path)]) == cli.EXIT_NUMERICAL
    err = capsys.readouterr().err
    assert "t=7" in err and "algorithm=onm" in err


def test_plot_subcommand(tmp_path):
    path = write_config(tmp_path, algorithms=["onm"])
    cli.main(["run", str(path)])
    svg = tmp_path / "replot.svg"
    assert cli.main(["plot", str(tmp_path / "out" / "summary.csv"), str(svg)]) == 0
    assert svg.read_text().startswith("<svg")
    bad = tmp_path / "bad.csv"
    bad.write_text("algorithm,t\n")
    assert cli.main(["plot", str(bad), str(tmp_path / "x.svg")]) == cli.EXIT_CONFIG
