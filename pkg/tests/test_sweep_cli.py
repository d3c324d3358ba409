import json
import re
from pathlib import Path

import numpy as np
import pytest

import thinphase.sweep as sweep_mod
from thinphase.cli import main
from thinphase.svgplot import PlotError, emit_plot, render_svg
from thinphase.sweep import (
    ConfigError,
    CSVParseError,
    SweepConfig,
    read_csv,
    resolve_config,
    run_sweep,
)

DATA = Path(__file__).parent / "data"


def small_config(**kw):
    base = dict(r1=3, r3=4, theta2=0.1, sigma1=1, sigma3=10, lo=0.01, hi=100.0, points=9)
    base.update(kw)
    return SweepConfig(**base)


def test_fig5_crossing_at_sigma3():
    rows = run_sweep(resolve_config("fig5"))
    r = next(r for r in rows if r.sigma2 == 10.0)
    assert r.sigma_star_exact == pytest.approx(r.sigma_star_reference, rel=1e-10)
    assert r.sigma_star_approx == pytest.approx(r.sigma_star_reference, rel=1e-10)


def test_fig6_records_h(tmp_path):
    cfg = resolve_config("fig6")
    run_sweep(cfg, tmp_path / "f6.csv")
    meta = read_csv(tmp_path / "f6.csv").metadata
    assert round(float(meta["h"]), 4) == 0.0235
    assert json.loads(meta["config"])["theta2"] == 0.01


def test_fig7_exact_between_phase_values():
    rows = run_sweep(resolve_config("fig7"))
    for r in rows:
        lo, hi = min(1.0, r.sigma2), max(10.0, r.sigma2)
        assert lo <= r.sigma_star_exact <= hi
        if 1.0 <= r.sigma2 <= 10.0:
            assert 1.0 <= r.sigma_star_exact <= 10.0
    # a resistive interphase pulls sigma* below both neighbours
    assert rows[0].sigma_star_exact < 1.0
    assert [r.sigma2 for r in rows] == sorted(r.sigma2 for r in rows)


def test_rows_outside_band_are_flagged():
    rows = run_sweep(small_config(lo=1e-3, hi=1e3))
    for r in rows:
        outside = not (0.1 <= r.sigma2 <= 100.0)
        assert ("outside-intermediate-band" in r.warnings) == outside


def test_infeasible_theta2_fails_before_computing(monkeypatch):
    def boom(*a, **k):
        raise AssertionError("curve evaluated")

    monkeypatch.setattr(sweep_mod, "exact_sigma_star", boom)
    with pytest.raises(ConfigError, match="infeasible"):
        run_sweep(small_config(theta2=0.7))


@pytest.mark.parametrize("bad", [dict(lo=0.0), dict(points=1), dict(outputs=()), dict(outputs=("exact", "nope")),
                                 dict(theta1=0.5), dict(hi=0.001)])
def test_config_invariants(bad):
    with pytest.raises(ConfigError):
        small_config(**bad)


def test_config_from_json_and_unknown_fields(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"r1": 3, "r3": 4, "theta2": 0.1, "sigma1": 1, "sigma3": 10,
                             "sigma2_range": {"lo": 0.1, "hi": 10, "points": 5}, "outputs": ["exact"]}))
    assert SweepConfig.load(p).points == 5
    p.write_text(json.dumps({"r1": 3, "r3": 4, "theta2": 0.1, "sigma1": 1, "sigma3": 10, "lo": 1, "hi": 2,
                             "points": 3, "colour": "red"}))
    with pytest.raises(ConfigError, match="colour"):
        SweepConfig.load(p)
    with pytest.raises(ConfigError, match="bundled"):
        resolve_config("fig99")


def test_csv_round_trip_bit_exact(tmp_path):
    cfg = small_config(points=37, lo=1e-3, hi=1e3)
    rows = run_sweep(cfg, tmp_path / "s.csv")
    table = read_csv(tmp_path / "s.csv")
    assert table.columns[0] == "sigma2"
    assert np.array_equal(table.data["sigma2"], [r.sigma2 for r in rows])
    for sel, col in sweep_mod.COLUMN.items():
        assert np.array_equal(table.data[col], [getattr(r, col) for r in rows])
    assert table.config == cfg


def test_sweep_is_deterministic(tmp_path, monkeypatch):
    cfg = resolve_config("fig9")
    run_sweep(cfg, tmp_path / "a.csv")
    run_sweep(cfg, tmp_path / "b.csv")
    monkeypatch.setenv("THINPHASE_NUM_THREADS", "4")
    run_sweep(cfg, tmp_path / "c.csv")
    a = (tmp_path / "a.csv").read_bytes()
    assert a == (tmp_path / "b.csv").read_bytes() == (tmp_path / "c.csv").read_bytes()


def test_selected_columns_only(tmp_path):
    run_sweep(small_config(outputs=("reference", "exact")), tmp_path / "s.csv")
    assert read_csv(tmp_path / "s.csv").columns == ("sigma2", "sigma_star_reference", "sigma_star_exact", "warnings")


@pytest.mark.parametrize("text,line", [
    ("sigma2,sigma_star_exact\n1.0,2.0\n3.0\n", 3),
    ("# a: b\nsigma2,sigma_star_exact\n1.0,abc\n", 3),
    ("sigma2,x\n1,2\n# late: 1\n", 3),
    ("# note without colon\n", 1),
    ("", 1),
])
def test_malformed_csv_reports_line(tmp_path, text, line):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(CSVParseError) as info:
        read_csv(p)
    assert info.value.lineno == line


def test_two_row_plot(tmp_path):
    run_sweep(small_config(points=2, lo=1.0, hi=2.0), tmp_path / "two.csv")
    svg = emit_plot(tmp_path / "two.csv", tmp_path / "two.svg").read_text()
    lines = re.findall(r'<polyline[^>]*points="([^"]*)"', svg)
    assert len(lines) == 5
    assert all(len(pts.split()) == 2 for pts in lines)
    assert "σ₂" in svg and "σ*" in svg


def test_plot_without_curves_fails(tmp_path):
    p = tmp_path / "empty.csv"
    p.write_text("sigma2,warnings\n1.0,\n2.0,\n")
    with pytest.raises(PlotError):
        emit_plot(p, tmp_path / "x.svg")


def test_log_log_style(tmp_path):
    run_sweep(small_config(), tmp_path / "s.csv")
    table = read_csv(tmp_path / "s.csv")
    assert table.data["sigma_star_approx"][0] < 0
    svg = render_svg(table, "log-log")
    assert svg.count("<polyline") == 5
    # nonpositive first-order values are left out on a log axis
    approx = re.search(r'data-column="sigma_star_approx"[^>]*points="([^"]*)"', svg).group(1)
    assert len(approx.split()) == int(np.sum(table.data["sigma_star_approx"] > 0))
    with pytest.raises(PlotError):
        render_svg(read_csv(tmp_path / "s.csv"), "polar")


def test_fig5_svg_matches_golden(tmp_path):
    run_sweep(resolve_config("fig5"), tmp_path / "fig5.csv")
    svg = emit_plot(tmp_path / "fig5.csv", tmp_path / "fig5.svg").read_text()
    assert svg == (DATA / "fig5.svg").read_text()


def test_cli_sweep_and_plot(tmp_path, capsys):
    csv, svg = tmp_path / "f.csv", tmp_path / "f.svg"
    assert main(["sweep", "--config", "fig8", "--out", str(csv), "--points", "11"]) == 0
    assert len(read_csv(csv)) >= 11
    assert main(["plot", "--in", str(csv), "--out", str(svg), "--gnuplot", str(tmp_path / "f.gp")]) == 0
    assert svg.read_text().startswith("<svg")
    assert "plot '" in (tmp_path / "f.gp").read_text()


def test_cli_flag_overrides_config(tmp_path):
    csv = tmp_path / "o.csv"
    assert main(["sweep", "--config", "fig5", "--out", str(csv), "--theta2", "0.01"]) == 0
    assert round(float(read_csv(csv).metadata["h"]), 4) == 0.0235


def test_cli_calculators(capsys):
    assert main(["exact", "--sigma1", "1", "--sigma2", "5", "--sigma3", "10", "--theta2", "0.1",
                 "--r1", "3", "--r3", "4"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(4.933336268, rel=1e-9)
    assert main(["reference", "--sigma1", "1", "--sigma3", "10", "--theta1", "0.421875"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(5.406427, abs=1e-6)
    assert main(["approx", "--sigma1", "1", "--sigma2", "5", "--sigma3", "10", "--theta2", "0.1",
                 "--r1", "3", "--r3", "4"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(5.406427 - 0.2204418 * 2.0788948, rel=1e-6)
    assert main(["exact", "--sigma1", "1", "--sigma2", "5", "--sigma3", "10", "--theta2", "0.9",
                 "--theta1", "0.5"]) == 2


def test_cli_validate(capsys, tmp_path):
    assert main(["validate", "--suite", "laminate-shift", "--json", str(tmp_path / "r.json")]) == 0
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["passed"] and all(c["measured"] <= 1e-10 for c in report["checks"])
    assert main(["validate", "--suite", "richardson"]) == 0
    assert "ratios" in capsys.readouterr().out
    assert main(["validate", "--suite", "nonexistent"]) != 0
    err = capsys.readouterr().err
    assert "laminate-shift" in err and "richardson" in err


def test_cli_solve(tmp_path, capsys):
    cell = tmp_path / "cell.json"
    cell.write_text('{"format": "thinphase-cell", "geometry": {"type": "laminate", '
                    '"conductivities": [1, 3], "fractions": [0.5, 0.5], "n": 16}}')
    assert main(["solve", "--cell", str(cell), "--e0", "y", "--out", str(tmp_path / "sol")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["effective_column"][1] == pytest.approx(2.0, rel=1e-10)
    assert (tmp_path / "sol.json").exists()
    assert main(["solve", "--cell", str(cell), "--e0", "z"]) == 2
