import re
import xml.etree.ElementTree as ET

import pytest

from manifold_lqg.errors import SchemaMismatch
from manifold_lqg.plotting import emit_plot

NS = "{http://www.w3.org/2000/svg}"


def write_summary(path, groups, T=5):
    lines = ["algorithm,t,regret_mean,regret_std,runs"]
    for g, slope in groups.items():
        for t in range(1, T + 1):
            lines.append(f"{g},{t},{slope * t},{0.1 * t},30")
    path.write_text("\n".join(lines) + "\n")


def test_one_curve_and_legend_per_group(tmp_path):
    csv_path = tmp_path / "summary.csv"
    write_summary(csv_path, {"onm": 1.0, "euclidean_newton": 1.5, "pg": 2.0})
    out = tmp_path / "plot.svg"
    emit_plot(csv_path, out)
    root = ET.parse(out).getroot()
    lines = [e for e in root.iter(f"{NS}polyline") if e.get("class") == "curve"]
    legends = [e.text for e in root.iter(f"{NS}text") if e.get("class") == "legend"]
    assert len(lines) == 3
    assert sorted(legends) == ["euclidean_newton", "onm", "pg"]
    texts = [e.text for e in root.iter(f"{NS}text")]
    assert "t" in texts and "cumulative regret" in texts
    for pl in lines:
        xs = [float(p.split(",")[0]) for p in pl.get("points").split()]
        assert all(a < b for a, b in zip(xs, xs[1:]))


def test_empty_summary_writes_nothing(tmp_path):
    csv_path = tmp_path / "summary.csv"
    csv_path.write_text("algorithm,t,regret_mean,regret_std,runs\n")
    out = tmp_path / "plot.svg"
    with pytest.raises(SchemaMismatch):
        emit_plot(csv_path, out)
    assert not out.exists()


def test_missing_columns_are_listed(tmp_path):
    csv_path = tmp_path / "summary.csv"
    csv_path.write_text("algorithm,t\nonm,1\n")
    with pytest.raises(SchemaMismatch, match=re.escape("regret_mean, regret_std, runs")):
        emit_plot(csv_path, tmp_path / "plot.svg")
