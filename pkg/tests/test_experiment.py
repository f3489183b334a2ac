import csv
import json

import numpy as np
import pytest

from bitgas import theory
from bitgas.ensemble import read_histogram_csv, read_summary_json, summarize
from bitgas.errors import InvalidParameterError
from bitgas.experiment import (
    ExperimentConfig,
    SweepSpec,
    run_ensemble,
    run_figure,
    run_figure_panels,
    run_source,
    run_sweep,
    run_theory,
    sweep_rows,
)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# --- config ------------------------------------------------------------------


def test_config_requires_one_of_t_and_p():
    with pytest.raises(InvalidParameterError):
        ExperimentConfig(M=64)
    with pytest.raises(InvalidParameterError):
        ExperimentConfig(M=64, p=0.1, temperature=0.09)
    with pytest.raises(InvalidParameterError):
        ExperimentConfig(M=64, temperature=0.3)


def test_config_converts_temperature():
    cfg = ExperimentConfig(model="c", M=16384, temperature=6.3e-5)
    cbar = theory.cbar_from_p(cfg.source_p, 16384)
    assert theory.temperature_c(cbar, 16384) == pytest.approx(6.3e-5, rel=1e-10)
    assert cfg.count == 16383
    cfg = ExperimentConfig(model="b", M=64, temperature=0.09)
    assert cfg.source_p == pytest.approx(0.1)
    assert cfg.count == 100_000 and cfg.source_bits == 6_400_000
    assert cfg.seeds == [0]
    assert ExperimentConfig(M=8, p=0.5, seed=5, seeds_count=3).seeds == [5, 6, 7]


# --- source ------------------------------------------------------------------


def test_source_size_and_determinism(tmp_path):
    cfg = ExperimentConfig(M=2**20, p=0.5, seed=7, out=tmp_path / "a")
    (path,) = run_source(cfg)
    assert path.stat().st_size == 131072
    assert "length_bits=1048576" in (tmp_path / "a" / "source.bin.hdr").read_text()
    cfg.out = tmp_path / "b"
    (again,) = run_source(cfg)
    assert path.read_bytes() == again.read_bytes()


def test_source_zero_probability(tmp_path):
    (path,) = run_source(ExperimentConfig(M=1000, p=0.0, out=tmp_path))
    assert set(path.read_bytes()) == {0}


# --- ensemble ----------------------------------------------------------------


def test_ensemble_outputs_roundtrip(tmp_path):
    cfg = ExperimentConfig(M=4096, temperature=1e-3, seed=3, seeds_count=2, out=tmp_path)
    run = run_ensemble(cfg)
    for seed, s in zip((3, 4), run.summaries):
        stem = tmp_path / f"c_M4096_seed{seed}"
        h = read_histogram_csv(f"{stem}.hist.csv", "C", 4096)
        assert summarize(h, seed=seed, p_nominal=cfg.source_p) == read_summary_json(f"{stem}.summary.json") == s
    agg = json.loads((tmp_path / "aggregate.json").read_text())
    assert agg["seeds"] == [3, 4]
    assert agg["ground_state_fraction_mean"] == pytest.approx(run.mean_ground_fraction)


def test_ensemble_deterministic(tmp_path):
    cfg = ExperimentConfig(model="b", M=32, N=5000, p=0.3, seed=1, out=tmp_path)
    a = run_ensemble(cfg, write=False)
    b = run_ensemble(cfg, write=False)
    assert a.histograms == b.histograms and a.summaries == b.summaries


def test_b_ensemble_fit():
    cfg = ExperimentConfig(model="b", M=64, N=10**5, p=0.5)
    (h,) = run_ensemble(cfg, write=False).histograms
    from bitgas.ensemble import total_variation

    curve = run_theory(cfg, write=False, N=h.N)
    assert total_variation(h, dict(curve.points)) <= 0.02


# --- theory ------------------------------------------------------------------


def test_theory_csv(tmp_path):
    cfg = ExperimentConfig(model="b", M=4, p=0.5, N=16, out=tmp_path)
    run_theory(cfg)
    rows = read_rows(tmp_path / "theory_b_binomial.csv")
    assert [int(r["value"]) for r in rows] == [0, 1, 2, 3, 4]
    assert float(rows[2]["population"]) == pytest.approx(6)
    cfg = ExperimentConfig(model="c", M=100, p=0.3, N=1000, out=tmp_path)
    curve = run_theory(cfg, "normal", (30, 55))
    assert all(v % 2 == 0 for v in curve.values)
    assert (tmp_path / "theory_c_normal.csv").exists()


# --- sweep -------------------------------------------------------------------


@pytest.fixture(scope="module")
def sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep")
    rows = run_sweep(SweepSpec(), out, plot_script=True)
    return out, rows


def test_sweep_sorted_and_finite(sweep):
    out, rows = sweep
    keys = [(r["M"], r["T"]) for r in rows]
    assert keys == sorted(keys)
    text = (out / "sweep.csv").read_text().lower()
    assert "nan" not in text and "inf" not in text
    assert read_rows(out / "sweep.csv")[0].keys() == {"M", "T", "n0_b", "n0_c_exact", "n0_c_closed", "condensed"}


def test_sweep_ordering_and_endpoints(sweep):
    _, rows = sweep
    for r in rows:
        assert r["n0_c_exact"] >= r["n0_b"]
    for M in (1024, 4096, 16384):
        sel = [r for r in rows if r["M"] == M]
        tc = theory.critical_temperature(M)
        (crit,) = [r for r in sel if r["T"] == tc]
        assert crit["n0_c_closed"] == 1.0 and crit["condensed"] == 1
        for col in ("n0_b", "n0_c_exact", "n0_c_closed"):
            assert np.all(np.diff([r[col] for r in sel]) <= 0)


def test_sweep_plot_script_references_csv(sweep):
    out, _ = sweep
    script = (out / "sweep.gp").read_text()
    assert "'sweep.csv'" in script and "set datafile separator ','" in script


def test_sweep_with_sampling():
    spec = SweepSpec(M_values=[256], t_min=1e-3, t_max=0.05, count=3, analytic_only=False, b_count=200)
    rows = sweep_rows(spec)
    assert all(0 <= r["n0_c_empirical"] <= 1 and 0 <= r["n0_b_empirical"] <= 1 for r in rows)


def test_sweep_spec_validation():
    with pytest.raises(InvalidParameterError):
        SweepSpec(t_min=0.1, t_max=0.05)
    with pytest.raises(InvalidParameterError):
        SweepSpec(t_max=0.3)


# --- figures -----------------------------------------------------------------


def test_figure_2_condensed_panel(tmp_path):
    cfg = ExperimentConfig(M=16384, temperature=6.3e-5, seed=0, out=tmp_path)
    script = run_figure(2, cfg)
    panels = run_figure_panels(2, cfg)
    cold = panels[0]
    assert cold.temperature == 6.3e-5
    assert 0.6 <= cold.summary.ground_state_fraction <= 0.95
    assert len(cold.histogram) <= 8
    assert [p.summary.ground_state_fraction for p in panels] == sorted(
        (p.summary.ground_state_fraction for p in panels), reverse=True)
    text = script.read_text()
    for p in panels:
        rows = read_rows(tmp_path / f"{p.stem}.hist.csv")
        assert sum(int(r["count"]) for r in rows) == p.histogram.N
        for r in rows:
            assert float(r["deviation"]) == pytest.approx(int(r["value"]) - p.histogram.mean)
        assert f"'{p.stem}.hist.csv'" in text and f"'{p.stem}.theory.csv'" in text
        assert (tmp_path / f"{p.stem}.theory.csv").exists()


def test_figure_3_bundle_never_collapses(tmp_path):
    cfg = ExperimentConfig(model="b", M=1024, N=2000, temperature=6.3e-5, out=tmp_path)
    temps = [6.3e-5, 2.5e-4, 1e-3]
    run_figure(3, cfg, temperatures=temps)
    for T in temps:
        assert theory.ground_state_b(T, 1024) < 1
        s = read_summary_json(tmp_path / f"fig3_T{T:.3g}.summary.json")
        assert s.model == "B-model" and s.condensed is False
    assert (tmp_path / "fig3.gp").exists()


def test_figure_1_bundle(tmp_path):
    cfg = ExperimentConfig(M=1024, temperature=0.25, out=tmp_path)
    run_figure(1, cfg, sweep=SweepSpec(M_values=[1024], count=10))
    assert "'sweep.csv'" in (tmp_path / "fig1.gp").read_text()
    assert len(read_rows(tmp_path / "sweep.csv")) == 11
