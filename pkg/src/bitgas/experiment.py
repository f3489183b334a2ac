"""Experiment runners behind the ``bitgas`` CLI.

Each ``run_*`` function owns one output directory, writes its files
atomically and returns the in-memory results so scripts and tests can use them
without re-reading CSVs.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import theory
from ._io import atomic_write_text, fmt_real
from .bitcore import BitString, SourceSpec, generate_source, read_bitstring, write_bitstring
from .ensemble import (
    EnsembleHistogram,
    RunSummary,
    build_b_ensemble,
    build_c_ensemble,
    mass_concentration,
    summarize,
    write_histogram_csv,
    write_summary_json,
)
from .errors import InvalidParameterError
from .theory import Formula, Model, ModelParams

log = logging.getLogger(__name__)

DEFAULT_B_COUNT = 100_000
DEFAULT_SWEEP_BITS = (1024, 4096, 16384)
DEFAULT_FIGURE_BITS = 16384
# 6.3e-5 is the condensed reference point; the two warmer values show the melt.
DEFAULT_FIGURE_TEMPERATURES = (6.3e-5, 2.5e-4, 1e-3)


@dataclass
class ExperimentConfig:
    model: Model = Model.C
    M: int = 16384
    N: int | None = None
    temperature: float | None = None
    p: float | None = None
    seed: int = 0
    seeds_count: int = 1
    include_zero_shift: bool = False
    out: Path = Path(".")
    plot_script: bool = False

    def __post_init__(self):
        self.model = Model.parse(self.model)
        self.out = Path(self.out)
        if self.M < 1:
            raise InvalidParameterError(f"M must be >= 1, got {self.M}")
        if (self.temperature is None) == (self.p is None):
            raise InvalidParameterError("give exactly one of temperature and p")
        if self.temperature is not None and not 0.0 < self.temperature <= 0.25:
            raise InvalidParameterError(f"temperature must lie in (0, 1/4], got {self.temperature}")
        if self.p is not None and not 0.0 <= self.p <= 1.0:
            raise InvalidParameterError(f"p must lie in [0, 1], got {self.p}")
        if self.seeds_count < 1:
            raise InvalidParameterError(f"seeds_count must be >= 1, got {self.seeds_count}")
        if self.N is not None and self.N < 1:
            raise InvalidParameterError(f"N must be >= 1, got {self.N}")

    @property
    def count(self) -> int:
        if self.N is not None:
            return self.N
        if self.model is Model.C:
            return self.M if self.M == 1 and self.include_zero_shift else self.M - 1
        return DEFAULT_B_COUNT

    @property
    def source_p(self) -> float:
        """Set-bit probability of the generated source."""
        if self.p is not None:
            return self.p
        if self.model is Model.C:
            return theory.p_from_cbar(theory.invert_temperature_c(self.temperature, self.M), self.M)
        return theory.invert_temperature_b(self.temperature)

    @property
    def source_bits(self) -> int:
        return self.M if self.model is Model.C else self.count * self.M

    @property
    def seeds(self) -> list[int]:
        return [self.seed + i for i in range(self.seeds_count)]

    def params(self) -> ModelParams:
        if self.temperature is not None:
            return ModelParams.for_model(self.model, self.M, T=self.temperature)
        return ModelParams.for_model(self.model, self.M, p=self.p)


@dataclass
class SweepSpec:
    M_values: Sequence[int] = DEFAULT_SWEEP_BITS
    t_min: float = 1e-6
    t_max: float = 0.25
    count: int = 100
    log_spaced: bool = True
    models: Sequence[Model] = (Model.C, Model.B)
    analytic_only: bool = True
    include_critical: bool = True
    seed: int = 0
    seeds_count: int = 1
    b_count: int = 1000

    def __post_init__(self):
        self.M_values = sorted(int(m) for m in self.M_values)
        self.models = [Model.parse(m) for m in self.models]
        if not self.M_values or self.M_values[0] < 1:
            raise InvalidParameterError("sweep needs M values >= 1")
        if not 0.0 < self.t_min < self.t_max <= 0.25:
            raise InvalidParameterError("temperature grid must satisfy 0 < min < max <= 1/4")
        if self.count < 2:
            raise InvalidParameterError("temperature grid needs at least 2 points")

    def grid(self) -> np.ndarray:
        if self.log_spaced:
            return np.geomspace(self.t_min, self.t_max, self.count)
        return np.linspace(self.t_min, self.t_max, self.count)

    def temperatures(self, M: int) -> np.ndarray:
        ts = self.grid()
        if self.include_critical:
            tc = theory.critical_temperature(M)
            if self.t_min <= tc <= self.t_max:
                ts = np.append(ts, tc)
        return np.unique(ts)


# --- single runs -------------------------------------------------------------


def make_source(config: ExperimentConfig, seed: int) -> BitString:
    return generate_source(SourceSpec(config.source_bits, config.source_p, seed))


def build_ensemble(config: ExperimentConfig, source: BitString) -> EnsembleHistogram:
    if config.model is Model.C:
        return build_c_ensemble(source, config.count, config.include_zero_shift)
    return build_b_ensemble(source, config.count, config.M)


def _stem(config: ExperimentConfig, seed: int) -> str:
    return f"{config.model.name.lower()}_M{config.M}_seed{seed}"


def run_source(config: ExperimentConfig) -> list[Path]:
    """Generate and store one source string per seed (``source.bin`` for a single seed)."""
    paths = []
    for seed in config.seeds:
        name = "source.bin" if config.seeds_count == 1 else f"source_seed{seed}.bin"
        path = config.out / name
        write_bitstring(path, make_source(config, seed), p=config.source_p, seed=seed)
        paths.append(path)
    return paths


@dataclass
class EnsembleRun:
    histograms: list[EnsembleHistogram] = field(default_factory=list)
    summaries: list[RunSummary] = field(default_factory=list)

    @property
    def mean_ground_fraction(self) -> float:
        return float(np.mean([s.ground_state_fraction for s in self.summaries]))

    def aggregate(self) -> dict:
        fr = np.array([s.ground_state_fraction for s in self.summaries])
        return {
            "runs": len(fr),
            "seeds": [s.seed for s in self.summaries],
            "ground_state_fraction_mean": float(fr.mean()),
            "ground_state_fraction_std": float(fr.std(ddof=1)) if fr.size > 1 else 0.0,
            "temperature_mean": float(np.mean([s.temperature for s in self.summaries])),
            "max_macrostates_for_99pct": max(mass_concentration(h) for h in self.histograms),
        }


def run_ensemble(config: ExperimentConfig, source: BitString | None = None, write: bool = True) -> EnsembleRun:
    """Build one ensemble per seed, or a single one from ``source`` when given."""
    run = EnsembleRun()
    jobs = [(None, source)] if source is not None else [(s, None) for s in config.seeds]
    for seed, src in jobs:
        src = src if src is not None else make_source(config, seed)
        h = build_ensemble(config, src)
        s = summarize(h, seed=seed, p_nominal=config.source_p if source is None else None)
        log.info("%s seed=%s T=%.6g n0/N=%.4f", config.model.value, seed, s.temperature, s.ground_state_fraction)
        run.histograms.append(h)
        run.summaries.append(s)
        if write:
            stem = _stem(config, seed) if seed is not None else f"{config.model.name.lower()}_M{config.M}_input"
            write_histogram_csv(config.out / f"{stem}.hist.csv", h)
            write_summary_json(config.out / f"{stem}.summary.json", s)
    if write and len(run.summaries) > 1:
        atomic_write_text(config.out / "aggregate.json", json.dumps(run.aggregate(), indent=2) + "\n")
    return run


def ensemble_from_file(config: ExperimentConfig, path, write: bool = True) -> EnsembleRun:
    """Ensemble from a stored source; the C-model takes M from the file."""
    source, _ = read_bitstring(path)
    if config.model is Model.C:
        config.M = source.length_bits
    elif config.N is None:
        config.N = source.length_bits // config.M
    return run_ensemble(config, source=source, write=write)


def curve_csv(curve: theory.TheoryCurve) -> str:
    rows = ["value,population"] + [f"{v},{fmt_real(y)}" for v, y in curve.points]
    return "\n".join(rows) + "\n"


def run_theory(config: ExperimentConfig, formula=None, value_range=None, N: float | None = None,
               write: bool = True) -> theory.TheoryCurve:
    formula = Formula.parse(formula) if formula else (
        Formula.ADJUSTED if config.model is Model.C else Formula.BINOMIAL)
    curve = theory.theory_curve(config.model, formula, config.params(),
                                N if N is not None else config.count, value_range)
    if write:
        name = f"theory_{config.model.name.lower()}_{formula.value}.csv"
        atomic_write_text(config.out / name, curve_csv(curve))
    return curve


# --- Figure 1 sweep ----------------------------------------------------------


def _empirical_n0(model: Model, M: int, T: float, spec: SweepSpec) -> float:
    cfg = ExperimentConfig(model=model, M=M, temperature=T, seed=spec.seed, seeds_count=spec.seeds_count,
                           N=None if model is Model.C else spec.b_count)
    return run_ensemble(cfg, write=False).mean_ground_fraction


def sweep_rows(spec: SweepSpec) -> list[dict]:
    rows = []
    for M in spec.M_values:
        for T in spec.temperatures(M):
            T = float(T)
            row = {"M": M, "T": T}
            if Model.B in spec.models:
                row["n0_b"] = theory.ground_state_b(T, M)
            if Model.C in spec.models:
                row["n0_c_exact"] = theory.ground_state_c_exact(T, M)
                row["n0_c_closed"] = theory.ground_state_c_closed(T, M)
                row["condensed"] = int(theory.is_condensed(T, M))
            if not spec.analytic_only:
                for model in spec.models:
                    row[f"n0_{model.name.lower()}_empirical"] = _empirical_n0(model, M, T, spec)
            rows.append(row)
    return rows


def rows_csv(rows: list[dict]) -> str:
    cols = list(rows[0])
    out = [",".join(cols)]
    for r in rows:
        cells = []
        for c in cols:
            v = r[c]
            if isinstance(v, float):
                if not math.isfinite(v):
                    raise InvalidParameterError(f"non-finite {c}={v} in row {r}")
                cells.append(fmt_real(v))
            else:
                cells.append(str(v))
        out.append(",".join(cells))
    return "\n".join(out) + "\n"


def run_sweep(spec: SweepSpec, out, plot_script: bool = False) -> list[dict]:
    out = Path(out)
    rows = sweep_rows(spec)
    atomic_write_text(out / "sweep.csv", rows_csv(rows))
    if plot_script:
        atomic_write_text(out / "sweep.gp", sweep_plot_script(spec))
    return rows


# --- Figures 2 and 3 ---------------------------------------------------------


@dataclass
class FigurePanel:
    temperature: float
    histogram: EnsembleHistogram
    curve: theory.TheoryCurve
    summary: RunSummary
    params: ModelParams
    stem: str


def _panel_csvs(panel: FigurePanel) -> tuple[str, str]:
    h, params = panel.histogram, panel.params
    hist = ["value,deviation,count,fraction"]
    for v, c in h.counts.items():
        hist.append(f"{v},{fmt_real(v - h.mean)},{c},{fmt_real(c / h.N)}")
    curve = ["value,deviation,population"]
    for v, y in panel.curve.points:
        curve.append(f"{v},{fmt_real(v - params.mean)},{fmt_real(y)}")
    return "\n".join(hist) + "\n", "\n".join(curve) + "\n"


def run_figure_panels(which: int, config: ExperimentConfig, temperatures: Sequence[float] | None = None,
                      out=None) -> list[FigurePanel]:
    """Empirical histogram plus matching theory curve at each temperature.

    Figure 2 uses the C-model and the adjusted binomial; Figure 3 the B-model
    and the plain binomial.  Only ``config.seed`` is used.
    """
    model = Model.C if which == 2 else Model.B
    temps = list(temperatures or DEFAULT_FIGURE_TEMPERATURES)
    panels = []
    for T in temps:
        cfg = ExperimentConfig(model=model, M=config.M, N=config.N, temperature=T, seed=config.seed,
                               include_zero_shift=config.include_zero_shift)
        h = build_ensemble(cfg, make_source(cfg, cfg.seed))
        params = cfg.params()
        formula = Formula.ADJUSTED if model is Model.C else Formula.BINOMIAL
        # theory curve over the populated neighbourhood of the mean
        width = max(8.0 * math.sqrt(config.M * params.T), 8.0)
        lo = max(0, math.floor(min(params.mean - width, min(h.counts))))
        hi = min(config.M, math.ceil(max(params.mean + width, max(h.counts))))
        curve = theory.theory_curve(model, formula, params, h.N, (lo, hi))
        s = summarize(h, seed=cfg.seed, p_nominal=cfg.source_p)
        panel = FigurePanel(T, h, curve, s, params, f"fig{which}_T{T:.3g}")
        panels.append(panel)
        if out is not None:
            hist_csv, curve_text = _panel_csvs(panel)
            atomic_write_text(Path(out) / f"{panel.stem}.hist.csv", hist_csv)
            atomic_write_text(Path(out) / f"{panel.stem}.theory.csv", curve_text)
            write_summary_json(Path(out) / f"{panel.stem}.summary.json", s)
    return panels


def run_figure(which: int, config: ExperimentConfig, temperatures=None, sweep: SweepSpec | None = None) -> Path:
    """Write the CSV bundle and gnuplot script for Figure 1, 2 or 3 into ``config.out``."""
    out = config.out
    if which == 1:
        spec = sweep or SweepSpec()
        run_sweep(spec, out, plot_script=False)
        atomic_write_text(out / "fig1.gp", sweep_plot_script(spec, output="fig1.png"))
        return out / "fig1.gp"
    if which not in (2, 3):
        raise InvalidParameterError(f"figure must be 1, 2 or 3, got {which}")
    panels = run_figure_panels(which, config, temperatures, out)
    atomic_write_text(out / f"fig{which}.gp", histogram_plot_script(which, panels))
    return out / f"fig{which}.gp"


# --- gnuplot scripts ---------------------------------------------------------

_GP_HEADER = """\
# generated by bitgas; run from this directory with: gnuplot {name}
set datafile separator ','
set key autotitle columnhead
set terminal pngcairo size 900,600
set output '{png}'
"""


def sweep_plot_script(spec: SweepSpec, output: str = "sweep.png") -> str:
    lines = [_GP_HEADER.format(name=output.replace(".png", ".gp"), png=output)]
    lines += [
        "set logscale x",
        "set xlabel 'T'",
        "set ylabel 'N_0 / N'",
        "set yrange [0:1.05]",
    ]
    plots = []
    for i, M in enumerate(spec.M_values):
        sel = f"($1=={M} ? $2 : 1/0)"
        if Model.B in spec.models:
            plots.append(f"'sweep.csv' using {sel}:(column('n0_b')) with lines lt {i + 1} dt 1 title 'B-model M={M}'")
        if Model.C in spec.models:
            plots.append(
                f"'sweep.csv' using {sel}:(column('n0_c_exact')) with lines lt {i + 1} dt 2 title 'C-model M={M}'"
            )
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"


def histogram_plot_script(which: int, panels: list[FigurePanel]) -> str:
    lines = [_GP_HEADER.format(name=f"fig{which}.gp", png=f"fig{which}.png")]
    lines += [
        "set xlabel 'value - mean (momentum-like index)'",
        "set ylabel 'N_i'",
        "set logscale y",
    ]
    plots = []
    for i, p in enumerate(panels):
        plots.append(f"'{p.stem}.hist.csv' using 2:3 with points lt {i + 1} pt 7 title 'T={p.temperature:.3g}'")
        plots.append(f"'{p.stem}.theory.csv' using 2:($3 > 0.01 ? $3 : 1/0) with lines lt {i + 1} notitle")
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"
