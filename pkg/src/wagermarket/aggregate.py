"""Wager-weighted forecast aggregation: linear opinion pool and quantile averaging.

Sums over players are taken in a canonical (sorted) order so that permuting
the players never changes a single bit of the aggregate.
"""

from __future__ import annotations

import math
from enum import Enum

import numpy as np

from . import dist as D
from .errors import LengthMismatch, MixedForms, NonPositiveWager


class AggregationMethod(str, Enum):
    LOP = "lop"
    QA = "qa"


def canonical_sum(terms, axis: int = 0):
    """Sum along ``axis`` after sorting, so the result ignores input order."""
    return np.sort(np.asarray(terms, dtype=float), axis=axis).sum(axis=axis)


def normalize_wagers(wagers) -> np.ndarray:
    """Wagers divided by their total."""
    m = np.asarray(wagers, dtype=float).ravel()
    if m.size == 0:
        raise NonPositiveWager("no wagers given")
    if not np.all(np.isfinite(m)) or np.any(m <= 0):
        raise NonPositiveWager("every wager must be a positive finite number")
    return m / math.fsum(m)


def _check_weights(reports, weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float).ravel()
    if len(reports) == 0:
        raise LengthMismatch("no reports to aggregate")
    if w.size != len(reports):
        raise LengthMismatch(f"{len(reports)} reports but {w.size} weights")
    if np.any(w <= 0) or abs(math.fsum(w) - 1.0) > 1e-12:
        raise ValueError("weights must be positive and sum to 1")
    return w


def _common_form(reports) -> str:
    forms = {D.form_of(r) for r in reports}
    if len(forms) != 1:
        raise MixedForms(f"cannot aggregate mixed report forms {sorted(forms)}")
    for r in reports:
        D.ensure_valid(r)
    return forms.pop()


def common_taus(reports, grid_spec: D.GridSpec | None = None) -> np.ndarray:
    """Tau levels shared by the continuous reports.

    Grid reports must all sit on identical levels; parametric reports adopt
    those levels, or ``grid_spec`` when no grid is present.
    """
    grids = [r for r in reports if isinstance(r, D.QuantileGrid)]
    if not grids:
        return (grid_spec or D.GridSpec()).taus
    taus = grids[0].taus
    for g in grids[1:]:
        if g.taus.shape != taus.shape or not np.array_equal(g.taus, taus):
            raise MixedForms("quantile grids on different tau levels; resample them first")
    return taus


def quantile_matrix(reports, taus) -> np.ndarray:
    """Row i holds report i's quantile function on ``taus``."""
    return np.vstack([D.quantiles_on(r, taus) for r in reports])


def _support_hull(reports):
    supports = [D.natural_support(r) for r in reports]
    if any(s is None for s in supports):
        return None
    return (min(s[0] for s in supports), max(s[1] for s in supports))


def qa(reports, weights, grid_spec: D.GridSpec | None = None) -> D.QuantileGrid:
    """Quantile average: sum_i w_i R_i^{-1} on the common tau levels."""
    if _common_form(reports) != "continuous":
        raise MixedForms("quantile averaging needs continuous reports")
    w = _check_weights(reports, weights)
    taus = common_taus(reports, grid_spec)
    Q = quantile_matrix(reports, taus)
    values = canonical_sum(w[:, None] * Q, axis=0)
    return D.QuantileGrid(taus, values, _support_hull(reports))


def mixture_cdf(reports, weights, x):
    """CDF of the wager-weighted mixture at ``x``."""
    w = np.asarray(weights, dtype=float)
    x = np.asarray(x, dtype=float)
    F = np.stack([np.asarray(D.cdf_eval(r, x), dtype=float) for r in reports])
    return canonical_sum(w.reshape((-1,) + (1,) * x.ndim) * F, axis=0)


def _lop_continuous(reports, w, taus, max_iter: int = 100) -> np.ndarray:
    """Smallest x with mixture CDF >= tau, for every tau.

    Brackets come from tabulating the mixture CDF at all component quantiles
    (the mixture quantile lies between the smallest and largest of them);
    each bracket is then shrunk by false position with the Illinois
    correction, falling back to bisection every third step so atoms and
    flat stretches still converge.
    """
    Q = quantile_matrix(reports, taus)
    knots = np.unique(Q)
    Fk = np.maximum.accumulate(mixture_cdf(reports, w, knots))
    # first knot reaching tau; the one before it stays below tau
    idx = np.searchsorted(Fk, taus, side="left")
    hi_idx = np.clip(idx, 0, knots.size - 1)
    lo_idx = np.clip(idx - 1, 0, knots.size - 1)
    lo, hi = knots[lo_idx], knots[hi_idx]
    f_lo, f_hi = Fk[lo_idx] - taus, Fk[hi_idx] - taus
    done = (idx == 0) | (f_lo >= 0) | (hi <= lo)
    eps = 4 * np.finfo(float).eps
    side = np.zeros_like(taus)
    for it in range(max_iter):
        active = ~done
        if not np.any(active):
            break
        denom = f_hi - f_lo
        with np.errstate(divide="ignore", invalid="ignore"):
            x = np.where(denom > 0, hi - f_hi * (hi - lo) / denom, 0.5 * (lo + hi))
        bad = ~((x > lo) & (x < hi)) | (it % 3 == 2)
        x = np.where(bad, 0.5 * (lo + hi), x)
        fx = np.where(active, mixture_cdf(reports, w, x) - taus, 0.0)
        up = active & (fx >= 0)
        down = active & (fx < 0)
        # Illinois: halve the stale endpoint's residual when the same side repeats
        f_lo = np.where(up & (side == 1), 0.5 * f_lo, f_lo)
        f_hi = np.where(down & (side == -1), 0.5 * f_hi, f_hi)
        hi = np.where(up, x, hi)
        f_hi = np.where(up, fx, f_hi)
        lo = np.where(down, x, lo)
        f_lo = np.where(down, fx, f_lo)
        side = np.where(up, 1, np.where(down, -1, side))
        # CDF matched to rounding: x is the quantile up to its own resolution
        close = active & (np.abs(fx) <= 1e-15)
        hi = np.where(close, x, hi)
        done |= close | (hi - lo <= eps * np.maximum(1.0, np.abs(hi)))
    return np.maximum.accumulate(hi)


def lop(reports, weights, grid_spec: D.GridSpec | None = None):
    """Linear opinion pool: sum_i w_i r_i.

    Continuous reports come back as the quantile grid of the mixture,
    found by root-finding on the mixture CDF at every tau level.
    """
    form = _common_form(reports)
    w = _check_weights(reports, weights)
    if form == "binary":
        return D.Binary(float(canonical_sum(w * np.array([r.p for r in reports]))))
    if form == "categorical":
        sizes = {r.n_categories for r in reports}
        if len(sizes) != 1:
            raise LengthMismatch(f"categorical reports with different category counts {sorted(sizes)}")
        P = np.vstack([r.probs for r in reports])
        return D.Categorical(canonical_sum(w[:, None] * P, axis=0))
    taus = common_taus(reports, grid_spec)
    return D.QuantileGrid(taus, _lop_continuous(reports, w, taus), _support_hull(reports))


def aggregate(method, reports, weights, grid_spec: D.GridSpec | None = None):
    method = AggregationMethod(method)
    if method is AggregationMethod.QA:
        return qa(reports, weights, grid_spec)
    return lop(reports, weights, grid_spec)


# --- Wasserstein diagnostics ------------------------------------------------


def _sq_integral(taus, diff) -> float:
    # exact integral over (0, 1) of the square of a piecewise-linear function
    # held constant outside [taus[0], taus[-1]]
    a, b = diff[:-1], diff[1:]
    h = np.diff(taus)
    inner = np.sum(h * (a * a + a * b + b * b) / 3.0)
    return float(inner + taus[0] * diff[0] ** 2 + (1.0 - taus[-1]) * diff[-1] ** 2)


def _grid_values(r, taus):
    if not isinstance(r, D.CONTINUOUS_TYPES):
        raise MixedForms("Wasserstein distance needs continuous reports")
    return np.asarray(D.quantile_eval(D.ensure_valid(r), taus), dtype=float)


def wasserstein2(r1, r2, grid_spec: D.GridSpec | None = None) -> float:
    """2-Wasserstein distance between the grid forms of two continuous reports."""
    taus = common_taus([r1, r2], grid_spec)
    diff = _grid_values(r1, taus) - _grid_values(r2, taus)
    return math.sqrt(max(_sq_integral(taus, diff), 0.0))


def barycenter_objective(candidate, reports, weights, grid_spec: D.GridSpec | None = None) -> float:
    """sum_i w_i W2(candidate, r_i)^2."""
    w = np.asarray(weights, dtype=float)
    return float(
        math.fsum(wi * wasserstein2(candidate, r, grid_spec) ** 2 for wi, r in zip(w, reports))
    )


def grid_moments(grid: D.QuantileGrid) -> tuple[float, float]:
    """Mean and variance of a grid distribution, integrating its quantile function."""
    taus, v = grid.taus, grid.values
    h = np.diff(taus)
    mean = float(np.sum(h * (v[:-1] + v[1:]) / 2.0) + taus[0] * v[0] + (1 - taus[-1]) * v[-1])
    second = _sq_integral(taus, v - mean)
    return mean, second
