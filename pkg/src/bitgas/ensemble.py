"""Ensemble construction, macrostate histograms and their thermodynamic summary."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Mapping

import numpy as np

from . import theory
from ._io import atomic_write_text, fmt_real
from .bitcore import BitString, cyclic_distances, substring_popcounts
from .errors import InvalidParameterError
from .theory import Model


@dataclass(frozen=True)
class EnsembleHistogram:
    """Macrostate populations ``counts[value] = N_i``.

    ``mean`` is derived from ``counts`` exactly (rational arithmetic, then
    rounded once to double).
    """

    model: Model
    M: int
    counts: Mapping[int, int]
    N: int = field(init=False)
    mean: float = field(init=False)

    def __post_init__(self):
        model = Model.parse(self.model)
        counts = {int(v): int(c) for v, c in sorted(self.counts.items()) if int(c) != 0}
        for v, c in counts.items():
            if c < 0:
                raise InvalidParameterError(f"negative population {c} at value {v}")
            if not 0 <= v <= self.M:
                raise InvalidParameterError(f"observable value {v} outside [0, {self.M}]")
            if model is Model.C and v % 2:
                raise InvalidParameterError(f"odd C-model value {v}")
        N = sum(counts.values())
        mean = float(Fraction(sum(v * c for v, c in counts.items()), N)) if N else math.nan
        object.__setattr__(self, "model", model)
        object.__setattr__(self, "counts", MappingProxyType(counts))
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "mean", mean)

    @classmethod
    def from_values(cls, model, M: int, values) -> "EnsembleHistogram":
        values = np.asarray(values, dtype=np.int64)
        if values.size and (values.min() < 0 or values.max() > M):
            raise InvalidParameterError(f"observable values must lie in [0, {M}]")
        binned = np.bincount(values, minlength=1)
        nz = np.flatnonzero(binned)
        return cls(model, M, dict(zip(nz.tolist(), binned[nz].tolist())))

    def __len__(self) -> int:
        return len(self.counts)


@dataclass(frozen=True)
class EnergySpectrum:
    entries: tuple[tuple[float, int], ...]

    @property
    def ground(self) -> tuple[float, int]:
        return self.entries[0]


@dataclass(frozen=True)
class RunSummary:
    model: str
    M: int
    N: int
    temperature: float
    mean: float
    ground_state_count: int
    ground_state_fraction: float
    internal_energy: float
    condensed: bool
    seed: int | None = None
    p_nominal: float | None = None
    temperature_nominal: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def build_c_ensemble(source: BitString, N: int, include_zero_shift: bool = False) -> EnsembleHistogram:
    """Histogram of cyclic Hamming distances over ``N`` contiguous shifts.

    Shifts are ``1..N`` by default; ``include_zero_shift`` uses ``0..N-1``.
    """
    M = source.length_bits
    max_n = M if include_zero_shift else M - 1
    if not 0 < N <= max_n:
        raise InvalidParameterError(
            f"N must satisfy 0 < N <= {max_n} (include_zero_shift={include_zero_shift}), got {N}"
        )
    start = 0 if include_zero_shift else 1
    dist = cyclic_distances(source, np.arange(start, start + N, dtype=np.int64))
    return EnsembleHistogram.from_values(Model.C, M, dist)


def build_b_ensemble(long_source: BitString, N: int, M: int) -> EnsembleHistogram:
    """Histogram of popcounts of ``N`` non-overlapping ``M``-bit substrings."""
    return EnsembleHistogram.from_values(Model.B, M, substring_popcounts(long_source, N, M))


def _require_nonempty(h: EnsembleHistogram) -> None:
    if h.N == 0:
        raise InvalidParameterError("empty histogram")


def empirical_temperature(h: EnsembleHistogram) -> float:
    """Model temperature evaluated at the measured mean.

    Over shifts 1..M-1 the C-model mean is ``2k(M-k)/(M-1)``, which can exceed
    ``M/2`` by at most ``M/(2(M-1)) - M/2``; means inside that finite-size band
    count as ``M/2``.  Anything beyond it raises :class:`DomainError`.
    """
    _require_nonempty(h)
    if h.model is Model.C:
        mean = h.mean
        if h.M > 1 and h.M / 2 < mean <= h.M * h.M / (2 * (h.M - 1)):
            mean = h.M / 2
        return theory.temperature_c(mean, h.M)
    return theory.temperature_b(h.mean / h.M)


def energy_spectrum(h: EnsembleHistogram) -> EnergySpectrum:
    _require_nonempty(h)
    entries = sorted(
        ((float(theory.energy_level(v, h.mean, h.M)), c) for v, c in h.counts.items()),
        key=lambda e: e[0],
    )
    return EnergySpectrum(tuple(entries))


def ground_value(h: EnsembleHistogram) -> int:
    """Observable value designated as the ground macrostate.

    C-model: even integer nearest the mean (ties to the larger one);
    B-model: integer nearest the mean (ties up).
    """
    _require_nonempty(h)
    if h.model is Model.C:
        return 2 * math.floor(h.mean / 2.0 + 0.5)
    return math.floor(h.mean + 0.5)


def ground_state_fraction(h: EnsembleHistogram) -> tuple[int, float]:
    _require_nonempty(h)
    n0 = h.counts.get(ground_value(h), 0)
    return n0, n0 / h.N


def internal_energy(h: EnsembleHistogram) -> float:
    _require_nonempty(h)
    return math.fsum(c * float(theory.energy_level(v, h.mean, h.M)) for v, c in h.counts.items()) / h.N


def mass_concentration(h: EnsembleHistogram, fraction: float = 0.99) -> int:
    """Fewest macrostates that together hold at least ``fraction`` of the ensemble."""
    _require_nonempty(h)
    pops = sorted(h.counts.values(), reverse=True)
    acc = 0
    for i, c in enumerate(pops, 1):
        acc += c
        if acc >= fraction * h.N:
            return i
    return len(pops)


def summarize(h: EnsembleHistogram, seed: int | None = None, p_nominal: float | None = None) -> RunSummary:
    T = empirical_temperature(h)
    n0, frac = ground_state_fraction(h)
    condensed = h.model is Model.C and T <= theory.critical_temperature(h.M)
    T_nom = None
    if p_nominal is not None:
        if h.model is Model.C:
            T_nom = theory.temperature_c(theory.cbar_from_p(p_nominal, h.M), h.M)
        else:
            T_nom = theory.temperature_b(p_nominal)
    return RunSummary(
        model=h.model.value,
        M=h.M,
        N=h.N,
        temperature=T,
        mean=h.mean,
        ground_state_count=n0,
        ground_state_fraction=frac,
        internal_energy=internal_energy(h),
        condensed=bool(condensed),
        seed=seed,
        p_nominal=p_nominal,
        temperature_nominal=T_nom,
    )


def total_variation(h: EnsembleHistogram, predicted) -> float:
    """Half the L1 distance between ``h`` and a predicted population over values.

    ``predicted`` maps value -> population (any normalization; it is rescaled
    to a probability vector).
    """
    _require_nonempty(h)
    pred = {int(v): float(y) for v, y in dict(predicted).items()}
    z = math.fsum(pred.values())
    keys = set(pred) | set(h.counts)
    return 0.5 * math.fsum(abs(h.counts.get(k, 0) / h.N - pred.get(k, 0.0) / z) for k in keys)


# --- serialization -----------------------------------------------------------


def histogram_csv(h: EnsembleHistogram) -> str:
    lines = ["value,count,energy"]
    for v, c in h.counts.items():
        lines.append(f"{v},{c},{fmt_real(theory.energy_level(v, h.mean, h.M))}")
    return "\n".join(lines) + "\n"


def write_histogram_csv(path, h: EnsembleHistogram) -> None:
    atomic_write_text(path, histogram_csv(h))


def read_histogram_csv(path, model, M: int) -> EnsembleHistogram:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return EnsembleHistogram(model, M, {int(r["value"]): int(r["count"]) for r in rows})


def write_summary_json(path, summary: RunSummary) -> None:
    atomic_write_text(path, summary.to_json() + "\n")


def read_summary_json(path) -> RunSummary:
    with open(path) as fh:
        return RunSummary(**json.load(fh))
