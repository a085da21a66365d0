"""Forecast report types and CDF / quantile evaluation.

Three report forms are supported: :class:`Binary`, :class:`Categorical` and
continuous distributions (:class:`Beta`, :class:`Normal`, :class:`Uniform`,
:class:`QuantileGrid`). Constructors only coerce types; use :func:`validate`
to list invariant violations or :func:`ensure_valid` to raise on them.

A :class:`QuantileGrid` is read as the distribution whose quantile function
is the piecewise-linear interpolant of ``(taus, values)``, held constant
outside ``[taus[0], taus[-1]]``. Its CDF therefore carries atoms of mass
``taus[0]`` at ``values[0]`` and ``1 - taus[-1]`` at ``values[-1]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np
from scipy import special

from .errors import (
    BadGridSpec,
    TauOutOfRange,
    TypeMismatch,
    UnsupportedForGrids,
    ValidationError,
)

SUM_TOL = 1e-9
MONOTONE_REPAIR_TOL = 1e-12
DEFAULT_GRID_SIZE = 999


# --- report types -----------------------------------------------------------


@dataclass(frozen=True)
class Binary:
    p: float

    def __post_init__(self):
        object.__setattr__(self, "p", float(self.p))


@dataclass(frozen=True, eq=False)
class Categorical:
    probs: np.ndarray

    def __post_init__(self):
        arr = np.array(self.probs, dtype=float).ravel()
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    @property
    def n_categories(self) -> int:
        return self.probs.size

    def __eq__(self, other):
        return isinstance(other, Categorical) and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash(self.probs.tobytes())


@dataclass(frozen=True)
class Beta:
    alpha: float
    beta: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", float(self.beta))

    def cdf(self, x):
        return special.betainc(self.alpha, self.beta, np.clip(x, 0.0, 1.0))

    def ppf(self, q):
        return special.betaincinv(self.alpha, self.beta, q)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= 0) & (x <= 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            logp = (
                special.xlogy(self.alpha - 1, x)
                + special.xlog1py(self.beta - 1, -x)
                - special.betaln(self.alpha, self.beta)
            )
        return np.where(inside, np.exp(logp), 0.0)


@dataclass(frozen=True)
class Normal:
    mu: float
    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "sigma", float(self.sigma))

    def cdf(self, x):
        return special.ndtr((np.asarray(x, dtype=float) - self.mu) / self.sigma)

    def ppf(self, q):
        return self.mu + self.sigma * special.ndtri(q)

    def pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mu) / self.sigma
        return np.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2 * math.pi))


@dataclass(frozen=True)
class Uniform:
    a: float
    b: float

    def __post_init__(self):
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))

    def cdf(self, x):
        return np.clip((np.asarray(x, dtype=float) - self.a) / (self.b - self.a), 0.0, 1.0)

    def ppf(self, q):
        return self.a + (self.b - self.a) * np.asarray(q, dtype=float)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= self.a) & (x <= self.b), 1.0 / (self.b - self.a), 0.0)


@dataclass(frozen=True, eq=False)
class QuantileGrid:
    """Discretized inverse CDF.

    ``support`` is an optional ``(lo, hi)`` declaring the range of the task
    variable; it is checked against the values but never used for
    extrapolation.
    """

    taus: np.ndarray
    values: np.ndarray
    support: tuple[float, float] | None = None

    def __post_init__(self):
        taus = np.array(self.taus, dtype=float).ravel()
        values = np.array(self.values, dtype=float).ravel()
        # floating-point noise in monotonicity is repaired, real violations are not
        if values.size > 1 and np.all(np.isfinite(values)):
            drops = np.diff(values)
            if np.all(drops >= -MONOTONE_REPAIR_TOL) and np.any(drops < 0):
                values = np.maximum.accumulate(values)
        taus.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "values", values)
        if self.support is not None:
            lo, hi = self.support
            object.__setattr__(self, "support", (float(lo), float(hi)))

    def __eq__(self, other):
        return (
            isinstance(other, QuantileGrid)
            and np.array_equal(self.taus, other.taus)
            and np.array_equal(self.values, other.values)
            and self.support == other.support
        )

    def __hash__(self):
        return hash((self.taus.tobytes(), self.values.tobytes(), self.support))


Parametric = Union[Beta, Normal, Uniform]
ContinuousDist = Union[Beta, Normal, Uniform, QuantileGrid]
PredictiveReport = Union[Binary, Categorical, Beta, Normal, Uniform, QuantileGrid]

PARAMETRIC_TYPES = (Beta, Normal, Uniform)
CONTINUOUS_TYPES = (Beta, Normal, Uniform, QuantileGrid)


def form_of(report) -> str:
    """Return ``"binary"``, ``"categorical"`` or ``"continuous"``."""
    if isinstance(report, Binary):
        return "binary"
    if isinstance(report, Categorical):
        return "categorical"
    if isinstance(report, CONTINUOUS_TYPES):
        return "continuous"
    raise TypeMismatch(f"not a predictive report: {type(report).__name__}")


# --- outcomes ---------------------------------------------------------------


@dataclass(frozen=True)
class BinaryOutcome:
    value: int


@dataclass(frozen=True)
class CategoryOutcome:
    """Realized category, 1-based."""

    index: int


@dataclass(frozen=True)
class RealOutcome:
    value: float


Outcome = Union[BinaryOutcome, CategoryOutcome, RealOutcome]


def outcome_for(report, outcome) -> Outcome:
    """Coerce a raw number (or an Outcome) to the outcome type matching ``report``.

    Raises :class:`ValidationError` when the value is impossible for the
    report's form (e.g. category index out of range, non-finite real).
    """
    form = form_of(report)
    if isinstance(outcome, (BinaryOutcome, CategoryOutcome, RealOutcome)):
        expected = {
            "binary": BinaryOutcome,
            "categorical": CategoryOutcome,
            "continuous": RealOutcome,
        }[form]
        if not isinstance(outcome, expected):
            raise TypeMismatch(f"{type(outcome).__name__} does not match a {form} report")
        raw = outcome.value if not isinstance(outcome, CategoryOutcome) else outcome.index
    else:
        raw = outcome
    if form == "binary":
        if raw not in (0, 1):
            raise ValidationError([("BadOutcome", f"binary outcome must be 0 or 1, got {raw!r}")])
        return BinaryOutcome(int(raw))
    if form == "categorical":
        if float(raw) != int(raw) or not 1 <= int(raw) <= report.n_categories:
            raise ValidationError(
                [("BadOutcome", f"category must be in 1..{report.n_categories}, got {raw!r}")]
            )
        return CategoryOutcome(int(raw))
    value = float(raw)
    if not math.isfinite(value):
        raise ValidationError([("NonFiniteValue", "real outcome must be finite")])
    return RealOutcome(value)


# --- validation -------------------------------------------------------------


def validate(report) -> list[tuple[str, str]]:
    """List the invariants violated by ``report``; an empty list means valid.

    Never raises on malformed numbers (NaN, inf, wrong lengths).
    """
    issues: list[tuple[str, str]] = []
    if isinstance(report, Binary):
        if not math.isfinite(report.p):
            issues.append(("NonFiniteValue", "p is not finite"))
        elif not 0.0 <= report.p <= 1.0:
            issues.append(("ProbabilityOutOfRange", f"p={report.p} outside [0, 1]"))
    elif isinstance(report, Categorical):
        probs = report.probs
        if probs.size < 2:
            issues.append(("BadParameter", "categorical report needs at least 2 categories"))
        if not np.all(np.isfinite(probs)):
            issues.append(("NonFiniteValue", "probabilities contain non-finite entries"))
        else:
            if np.any((probs < 0) | (probs > 1)):
                issues.append(("ProbabilityOutOfRange", "probabilities outside [0, 1]"))
            total = math.fsum(probs)
            if abs(total - 1.0) > SUM_TOL:
                issues.append(("SumNotOne", f"probabilities sum to {total!r}"))
    elif isinstance(report, Beta):
        if not (math.isfinite(report.alpha) and math.isfinite(report.beta)):
            issues.append(("NonFiniteValue", "beta parameters not finite"))
        elif report.alpha <= 0 or report.beta <= 0:
            issues.append(("BadParameter", "beta parameters must be positive"))
    elif isinstance(report, Normal):
        if not (math.isfinite(report.mu) and math.isfinite(report.sigma)):
            issues.append(("NonFiniteValue", "normal parameters not finite"))
        elif report.sigma <= 0:
            issues.append(("BadParameter", "sigma must be positive"))
    elif isinstance(report, Uniform):
        if not (math.isfinite(report.a) and math.isfinite(report.b)):
            issues.append(("NonFiniteValue", "uniform bounds not finite"))
        elif not report.a < report.b:
            issues.append(("BadParameter", "uniform requires a < b"))
    elif isinstance(report, QuantileGrid):
        issues.extend(_grid_issues(report))
    else:
        issues.append(("BadParameter", f"unknown report type {type(report).__name__}"))
    return issues


def _grid_issues(grid: QuantileGrid) -> list[tuple[str, str]]:
    issues = []
    taus, values = grid.taus, grid.values
    if taus.size == 0 or taus.size != values.size:
        return [("BadParameter", "taus and values must be non-empty and of equal length")]
    if not (np.all(np.isfinite(taus)) and np.all(np.isfinite(values))):
        return [("NonFiniteValue", "grid contains non-finite entries")]
    if np.any((taus <= 0) | (taus >= 1)):
        issues.append(("ProbabilityOutOfRange", "tau levels must lie in (0, 1)"))
    if np.any(np.diff(taus) <= 0):
        issues.append(("NonMonotoneQuantiles", "tau levels must be strictly increasing"))
    if np.any(np.diff(values) < 0):
        issues.append(("NonMonotoneQuantiles", "quantile values must be nondecreasing"))
    if grid.support is not None:
        lo, hi = grid.support
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            issues.append(("BadParameter", "support must be a finite interval lo < hi"))
        elif values[0] < lo - SUM_TOL or values[-1] > hi + SUM_TOL:
            issues.append(("BadParameter", "quantile values fall outside the declared support"))
    return issues


def ensure_valid(report):
    """Return ``report`` unchanged, or raise :class:`ValidationError`."""
    issues = validate(report)
    if issues:
        raise ValidationError(issues)
    return report


# --- grid specification -----------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """``size`` equally spaced probability levels ``k / (size + 1)``."""

    size: int = DEFAULT_GRID_SIZE

    def __post_init__(self):
        if isinstance(self.size, bool) or int(self.size) != self.size or self.size < 1:
            raise BadGridSpec(f"grid size must be a positive integer, got {self.size!r}")
        object.__setattr__(self, "size", int(self.size))

    @property
    def taus(self) -> np.ndarray:
        return np.arange(1, self.size + 1) / (self.size + 1)


# --- evaluation -------------------------------------------------------------


def _require_continuous(dist):
    if not isinstance(dist, CONTINUOUS_TYPES):
        raise TypeMismatch(f"expected a continuous distribution, got {type(dist).__name__}")


def cdf_eval(dist, x):
    """CDF of a continuous report at ``x`` (scalar or array)."""
    _require_continuous(dist)
    if isinstance(dist, QuantileGrid):
        return _grid_cdf(dist, x)
    out = dist.cdf(x)
    return float(out) if np.ndim(out) == 0 else out


def _grid_cdf(grid: QuantileGrid, x):
    xs = np.asarray(x, dtype=float)
    taus, values = grid.taus, grid.values
    # rightmost tau whose value is <= x, then interpolate to the next knot
    idx = np.searchsorted(values, xs, side="right") - 1
    inside = (idx >= 0) & (idx < values.size - 1)
    out = np.where(idx < 0, 0.0, 1.0)
    k = np.clip(idx, 0, values.size - 2) if values.size > 1 else np.zeros_like(idx)
    if values.size > 1:
        lo, hi = values[k], values[k + 1]
        span = hi - lo
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = np.where(span > 0, (xs - lo) / np.where(span > 0, span, 1.0), 1.0)
        interp = taus[k] + frac * (taus[k + 1] - taus[k])
        out = np.where(inside, interp, out)
    return float(out) if out.ndim == 0 else out


def quantile_eval(dist, tau):
    """Inverse CDF at ``tau`` in (0, 1) (scalar or array)."""
    _require_continuous(dist)
    t = np.asarray(tau, dtype=float)
    if np.any(~np.isfinite(t)) or np.any((t <= 0) | (t >= 1)):
        raise TauOutOfRange("tau must lie strictly between 0 and 1")
    if isinstance(dist, QuantileGrid):
        out = np.interp(t, dist.taus, dist.values)
    else:
        out = dist.ppf(t)
    return float(out) if np.ndim(out) == 0 else out


def pdf_eval(dist, x):
    """Density of a parametric report; grids have no density."""
    if isinstance(dist, QuantileGrid):
        raise UnsupportedForGrids("quantile grids carry no density")
    _require_continuous(dist)
    out = dist.pdf(x)
    return float(out) if np.ndim(out) == 0 else out


def to_quantile_grid(dist, grid_spec: GridSpec | None = None) -> QuantileGrid:
    """Discretize a continuous report onto ``grid_spec`` tau levels.

    A grid already on the same levels is returned as is.
    """
    _require_continuous(dist)
    grid_spec = grid_spec or GridSpec()
    if not isinstance(grid_spec, GridSpec):
        raise BadGridSpec(f"expected GridSpec, got {type(grid_spec).__name__}")
    if isinstance(dist, QuantileGrid):
        taus = grid_spec.taus
        if dist.taus.shape == taus.shape and np.allclose(dist.taus, taus, rtol=0, atol=1e-15):
            return dist
        return QuantileGrid(taus, np.interp(taus, dist.taus, dist.values), dist.support)
    return _parametric_grid(dist, grid_spec.size)


@lru_cache(maxsize=4096)
def _parametric_grid(dist, size: int) -> QuantileGrid:
    taus = GridSpec(size).taus
    return QuantileGrid(taus, dist.ppf(taus), natural_support(dist))


def quantiles_on(dist, taus) -> np.ndarray:
    """Quantile function on ``taus``, reusing cached grids for standard levels."""
    taus = np.asarray(taus, dtype=float)
    if isinstance(dist, PARAMETRIC_TYPES):
        standard = GridSpec(taus.size).taus
        if np.array_equal(taus, standard):
            return _parametric_grid(dist, taus.size).values
    return np.asarray(quantile_eval(dist, taus), dtype=float)


def natural_support(dist) -> tuple[float, float] | None:
    """Bounded support of a parametric family, or None when unbounded."""
    if isinstance(dist, Beta):
        return (0.0, 1.0)
    if isinstance(dist, Uniform):
        return (dist.a, dist.b)
    if isinstance(dist, QuantileGrid):
        return dist.support
    return None


def grid_support(grid: QuantileGrid) -> tuple[float, float]:
    """Range actually occupied by a grid's mass."""
    return float(grid.values[0]), float(grid.values[-1])


def sample(dist, rng: np.random.Generator, n: int):
    """Draw ``n`` outcomes distributed per ``dist``.

    Continuous reports are sampled by inverse transform of their quantile
    function; for grids that includes the end atoms.
    """
    if isinstance(dist, Binary):
        return (rng.random(n) < dist.p).astype(int)
    if isinstance(dist, Categorical):
        cum = np.cumsum(dist.probs)
        cum[-1] = 1.0
        return np.searchsorted(cum, rng.random(n), side="right") + 1
    _require_continuous(dist)
    u = rng.random(n)
    if isinstance(dist, QuantileGrid):
        return np.interp(u, dist.taus, dist.values)
    # guard against u == 0 for unbounded families
    u = np.clip(u, np.finfo(float).tiny, None)
    return dist.ppf(u)


def beta_with_mean(alpha: float, mean: float) -> Beta:
    """Beta report with the given mean and first shape parameter."""
    return Beta(alpha, alpha * (1.0 - mean) / mean)


# --- serialization helpers --------------------------------------------------


def report_to_dict(report) -> dict:
    if isinstance(report, Binary):
        return {"type": "binary", "p": report.p}
    if isinstance(report, Categorical):
        return {"type": "categorical", "probs": [float(v) for v in report.probs]}
    if isinstance(report, Beta):
        return {"type": "beta", "alpha": report.alpha, "beta": report.beta}
    if isinstance(report, Normal):
        return {"type": "normal", "mu": report.mu, "sigma": report.sigma}
    if isinstance(report, Uniform):
        return {"type": "uniform", "a": report.a, "b": report.b}
    if isinstance(report, QuantileGrid):
        out = {
            "type": "quantiles",
            "taus": [float(v) for v in report.taus],
            "values": [float(v) for v in report.values],
        }
        if report.support is not None:
            out["support"] = list(report.support)
        return out
    raise TypeMismatch(f"not a predictive report: {type(report).__name__}")


_REPORT_FIELDS = {
    "binary": (Binary, ("p",)),
    "categorical": (Categorical, ("probs",)),
    "beta": (Beta, ("alpha", "beta")),
    "normal": (Normal, ("mu", "sigma")),
    "uniform": (Uniform, ("a", "b")),
    "quantiles": (QuantileGrid, ("taus", "values")),
}


def report_from_dict(data: dict):
    """Inverse of :func:`report_to_dict`; raises ``KeyError``/``ValueError`` on bad input."""
    kind = data["type"]
    if kind not in _REPORT_FIELDS:
        raise ValueError(f"unknown report type {kind!r}")
    cls, names = _REPORT_FIELDS[kind]
    extra = set(data) - set(names) - {"type"} - ({"support"} if kind == "quantiles" else set())
    if extra:
        raise ValueError(f"unexpected keys {sorted(extra)} for {kind} report")
    args = [data[name] for name in names]
    if kind == "quantiles":
        support = data.get("support")
        return QuantileGrid(*args, support=tuple(support) if support is not None else None)
    return cls(*args)
