"""Closed forms for the two ensembles: populations, temperatures, ground states.

Notation used throughout:

* ``x = cbar / M`` is the C-model mean per bit, ``x = 2 p (1 - p) <= 1/2``.
* ``K = 1 - sqrt(1 - 2x)`` rescales the adjusted binomial; for a source with
  bit probability ``p <= 1/2`` it equals ``2p``.
* Factorials of non-integers are ``Gamma(x + 1)``; every pmf is evaluated in
  log space through :func:`log_binomial_pmf`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, InvalidParameterError

_LN_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class Model(str, Enum):
    C = "C-model"
    B = "B-model"

    @classmethod
    def parse(cls, tag) -> "Model":
        if isinstance(tag, Model):
            return tag
        t = str(tag).strip().upper()
        if t in ("C", "C-MODEL"):
            return cls.C
        if t in ("B", "B-MODEL"):
            return cls.B
        raise InvalidParameterError(f"unknown model {tag!r}")


class Formula(str, Enum):
    ADJUSTED = "adjusted-binomial"
    NORMAL = "normal"
    BINOMIAL = "binomial"

    @classmethod
    def parse(cls, tag) -> "Formula":
        if isinstance(tag, Formula):
            return tag
        t = str(tag).strip().lower()
        for f in cls:
            if t == f.value or (t == "adjusted" and f is cls.ADJUSTED):
                return f
        raise InvalidParameterError(f"unknown formula {tag!r}")


# --- special functions -------------------------------------------------------

_S0, _S1, _S2, _S3, _S4 = 1 / 12, 1 / 360, 1 / 1260, 1 / 1680, 1 / 1188


def stirling_error(x):
    """``lgamma(x+1) - [(x+1/2) ln x - x + ln sqrt(2 pi)]`` for x > 0."""
    x = np.asarray(x, dtype=float)
    big = x > 15.0
    xb = np.where(big, x, 16.0)
    x2 = xb * xb
    series = (_S0 - (_S1 - (_S2 - (_S3 - _S4 / x2) / x2) / x2) / x2) / xb
    xs = np.where(big, 1.0, x)
    direct = gammaln(xs + 1.0) - (xs + 0.5) * np.log(xs) + xs - _LN_SQRT_2PI
    return np.where(big, series, direct)


def deviance(x, mu):
    """``x ln(x/mu) + mu - x`` without cancellation when ``x`` is close to ``mu``."""
    x = np.asarray(x, dtype=float)
    mu = np.asarray(mu, dtype=float)
    close = np.abs(x - mu) < 0.1 * (x + mu)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = x * np.log(x / mu) + mu - x
        v = (x - mu) / (x + mu)
        s = (x - mu) * v
        ej = 2.0 * x * v
        v2 = v * v
        for j in range(1, 16):
            ej = ej * v2
            s = s + ej / (2 * j + 1)
    return np.where(close, s, direct)


def log_binomial_pmf(k, n, prob):
    """log of ``Gamma(n+1)/(Gamma(k+1) Gamma(n-k+1)) prob^k (1-prob)^(n-k)``.

    ``k`` and ``n`` may be non-integer (0 <= k <= n).  Uses the saddle-point
    form so large ``n`` keeps full relative precision.
    """
    k = np.asarray(k, dtype=float)
    n = float(n)
    prob = float(prob)
    q = 1.0 - prob
    out = np.full(np.broadcast(k).shape, -np.inf)
    if prob == 0.0:
        return np.where(k == 0.0, 0.0, out)[()]
    if q == 0.0:
        return np.where(k == n, 0.0, out)[()]
    lo = k == 0.0
    hi = k == n
    mid = (k > 0.0) & (k < n)
    km = np.where(mid, k, 0.5 * n)
    nk = n - km
    body = (
        stirling_error(n)
        - stirling_error(km)
        - stirling_error(nk)
        - deviance(km, n * prob)
        - deviance(nk, n * q)
        + 0.5 * (math.log(n) - np.log(km) - np.log(nk)) - _LN_SQRT_2PI
    )
    out = np.where(mid, body, out)
    out = np.where(lo, n * math.log1p(-prob), out)
    out = np.where(hi, n * math.log(prob), out)
    return out[()]


# --- temperatures and their inverses ----------------------------------------


def cbar_from_p(p: float, M: int) -> float:
    return 2.0 * M * p * (1.0 - p)


def _check_x(x: float) -> None:
    if not 0.0 <= x <= 0.5:
        raise DomainError(f"C-model mean per bit must lie in [0, 1/2], got {x!r}")


def _k_of_x(x: float) -> float:
    # 1 - sqrt(1 - 2x) rewritten to avoid cancellation at small x
    return 2.0 * x / (1.0 + math.sqrt(1.0 - 2.0 * x))


def k_factor(cbar: float, M: int) -> float:
    x = cbar / M
    _check_x(x)
    return _k_of_x(x)


def temperature_c(cbar: float, M: int) -> float:
    x = cbar / M
    _check_x(x)
    return _k_of_x(x) * x * (1.0 - x)


def _x_of_k(k: float) -> float:
    # 1 - k is exact near k = 1, where k * (2 - k) would round x down by an ulp
    return 0.5 - 0.5 * (1.0 - k) ** 2


def _t_of_k(k: float) -> float:
    x = _x_of_k(k)
    return k * x * (1.0 - x)


def invert_temperature_c(T: float, M: int) -> float:
    """Mean ``cbar`` whose C-model temperature is ``T``.

    Bisects on ``K`` in [0, 1] (T is strictly increasing in K, and the map
    stays well conditioned at T = 1/4 where dT/dx is unbounded).
    """
    if not 0.0 < T <= 0.25:
        raise DomainError(f"C-model temperature must lie in (0, 1/4], got {T!r}")
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi) or hi - lo < 1e-17:
            break
        if _t_of_k(mid) < T:
            lo = mid
        else:
            hi = mid
    # dT/dx is unbounded at x = 1/2, so rounding to cbar can cost more than the
    # bisection itself; keep whichever nearby double best reproduces T.
    cands = []
    for k in (lo, hi):
        c = M * _x_of_k(k)
        cands += [c, np.nextafter(c, -np.inf), np.nextafter(c, np.inf)]
    cands = [float(c) for c in cands if 0.0 < c <= 0.5 * M]
    return min(cands, key=lambda c: abs(temperature_c(c, M) - T))


def temperature_b(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise InvalidParameterError(f"p must lie in [0, 1], got {p!r}")
    return p * (1.0 - p)


def invert_temperature_b(T: float) -> float:
    """The root ``p <= 1/2`` of ``p (1 - p) = T``."""
    if not 0.0 < T <= 0.25:
        raise DomainError(f"B-model temperature must lie in (0, 1/4], got {T!r}")
    return 2.0 * T / (1.0 + math.sqrt(max(0.0, 1.0 - 4.0 * T)))


def p_from_cbar(cbar: float, M: int) -> float:
    """Source bit probability (branch p <= 1/2) giving ``2 M p (1-p) = cbar``."""
    return 0.5 * k_factor(cbar, M)


def energy_level(value, mean: float, M: int):
    if M < 1:
        raise InvalidParameterError(f"M must be >= 1, got {M}")
    d = np.asarray(value, dtype=float) - mean
    return (d * d / (2.0 * M))[()]


def critical_temperature(M: int) -> float:
    if M < 1:
        raise InvalidParameterError(f"M must be >= 1, got {M}")
    return 2.0 / (math.pi * M)


# --- model parameters --------------------------------------------------------


@dataclass(frozen=True)
class ModelParams:
    model: Model
    M: int
    p: float
    mean: float
    T: float
    K: float | None = None

    @classmethod
    def c_model(cls, M: int, *, p: float | None = None, T: float | None = None) -> "ModelParams":
        if (p is None) == (T is None):
            raise InvalidParameterError("give exactly one of p, T")
        if T is not None:
            cbar = invert_temperature_c(T, M)
        else:
            if not 0.0 <= p <= 1.0:
                raise InvalidParameterError(f"p must lie in [0, 1], got {p!r}")
            cbar = cbar_from_p(p, M)
        K = k_factor(cbar, M)
        return cls(Model.C, M, 0.5 * K, cbar, temperature_c(cbar, M), K)

    @classmethod
    def b_model(cls, M: int, *, p: float | None = None, T: float | None = None) -> "ModelParams":
        if (p is None) == (T is None):
            raise InvalidParameterError("give exactly one of p, T")
        if T is not None:
            p = invert_temperature_b(T)
        return cls(Model.B, M, p, M * p, temperature_b(p))

    @classmethod
    def for_model(cls, model, M: int, *, p=None, T=None) -> "ModelParams":
        if Model.parse(model) is Model.C:
            return cls.c_model(M, p=p, T=T)
        return cls.b_model(M, p=p, T=T)


# --- populations -------------------------------------------------------------


def _require_c(params: ModelParams) -> None:
    if params.model is not Model.C:
        raise InvalidParameterError("C-model parameters required")


def adjusted_binomial_population(C_i, params: ModelParams, N: float):
    """Adjusted binomial population of macrostate(s) ``C_i`` (even integers)."""
    _require_c(params)
    c = np.asarray(C_i)
    if np.any((c < 0) | (c > params.M)):
        raise InvalidParameterError(f"C_i must lie in [0, {params.M}]")
    if np.any(c % 2 != 0):
        raise InvalidParameterError("C_i must be even")
    K = params.K
    if not K:
        raise DomainError("K = 0: adjusted binomial undefined at zero mean")
    x = params.mean / params.M
    lp = log_binomial_pmf(c / K, params.M / K, x)
    return (2.0 * N / K * np.exp(lp))[()]


def _normal(value, params: ModelParams, N: float, factor: float):
    if not params.T > 0.0:
        raise DomainError(f"normal approximation needs T > 0, got {params.T!r}")
    MT = params.M * params.T
    E = energy_level(value, params.mean, params.M)
    return (factor * N / math.sqrt(2.0 * math.pi * MT) * np.exp(-np.asarray(E) / params.T))[()]


def normal_population_c(C_i, params: ModelParams, N: float):
    _require_c(params)
    return _normal(C_i, params, N, 2.0)


def normal_population_b(B_i, params: ModelParams, N: float):
    return _normal(B_i, params, N, 1.0)


def binomial_population_b(B_i, p: float, M: int, N: float):
    b = np.asarray(B_i)
    if np.any((b < 0) | (b > M)):
        raise InvalidParameterError(f"B_i must lie in [0, {M}]")
    if not 0.0 <= p <= 1.0:
        raise InvalidParameterError(f"p must lie in [0, 1], got {p!r}")
    return (N * np.exp(log_binomial_pmf(b, M, p)))[()]


# --- ground states -----------------------------------------------------------


def ground_state_c_exact(T: float, M: int, clamp: bool = True) -> float:
    """Ground-state fraction N0/N of the C-model from the adjusted binomial at its mean.

    With ``clamp=False`` the raw value is returned; it exceeds 1 below the
    critical temperature.
    """
    cbar = invert_temperature_c(T, M)
    K = k_factor(cbar, M)
    raw = 2.0 / K * math.exp(float(log_binomial_pmf(cbar / K, M / K, cbar / M)))
    return min(raw, 1.0) if clamp else raw


def ground_state_c_closed(T: float, M: int, clamp: bool = True) -> float:
    if not T > 0.0:
        raise DomainError(f"T must be > 0, got {T!r}")
    raw = 2.0 / math.sqrt(2.0 * math.pi * M * T)
    return min(raw, 1.0) if clamp else raw


def ground_state_b(T: float, M: int) -> float:
    p = invert_temperature_b(T)
    return math.exp(float(log_binomial_pmf(M * p, M, p)))


def is_condensed(T: float, M: int) -> bool:
    return T <= critical_temperature(M)


# --- tabulation --------------------------------------------------------------


@dataclass(frozen=True)
class TheoryCurve:
    model: Model
    formula: Formula
    points: tuple[tuple[int, float], ...]

    @property
    def values(self) -> np.ndarray:
        return np.array([v for v, _ in self.points], dtype=np.int64)

    @property
    def populations(self) -> np.ndarray:
        return np.array([y for _, y in self.points], dtype=float)

    def total(self) -> float:
        return math.fsum(y for _, y in self.points)


def theory_curve(model, formula, params: ModelParams, N: float, value_range=None) -> TheoryCurve:
    """Tabulate a population formula at every admissible value in ``value_range``.

    C-model curves carry only even values.  ``value_range`` is an inclusive
    ``(lo, hi)`` pair and defaults to ``(0, M)``.
    """
    model = Model.parse(model)
    formula = Formula.parse(formula)
    if params.model is not model:
        raise InvalidParameterError(f"params are for {params.model.value}, not {model.value}")
    lo, hi = (0, params.M) if value_range is None else (int(value_range[0]), int(value_range[1]))
    if not 0 <= lo <= hi <= params.M:
        raise InvalidParameterError(f"value range must lie within [0, {params.M}], got {(lo, hi)}")
    if model is Model.C:
        values = np.arange(lo + (lo % 2), hi + 1, 2, dtype=np.int64)
        if formula is Formula.ADJUSTED:
            pops = adjusted_binomial_population(values, params, N)
        elif formula is Formula.NORMAL:
            pops = normal_population_c(values, params, N)
        else:
            raise InvalidParameterError("C-model curves use the adjusted-binomial or normal formula")
    else:
        values = np.arange(lo, hi + 1, dtype=np.int64)
        if formula is Formula.BINOMIAL:
            pops = binomial_population_b(values, params.p, params.M, N)
        elif formula is Formula.NORMAL:
            pops = normal_population_b(values, params, N)
        else:
            raise InvalidParameterError("B-model curves use the binomial or normal formula")
    pops = np.atleast_1d(np.asarray(pops, dtype=float))
    return TheoryCurve(model, formula, tuple(zip(values.tolist(), pops.tolist())))
