"""Scoring rules and their positively oriented forms.

Raw rules follow the usual conventions: Brier, RPS, log and CRPS are
negatively oriented (lower is better) and the quadratic score is positively
oriented. :func:`oriented_score` maps every rule to "higher is better"; the
rules in :data:`UNIT_RULES` land in ``[0, 1]`` and may drive settlement.

Continuous reports are scored on their quantile-grid form. The grid CDF is
piecewise linear, so the CRPS integral is evaluated exactly segment by
segment, split at the outcome.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate, stats

from . import dist as D
from .errors import (
    QuadratureFailure,
    SupportNotUnit,
    TypeMismatch,
    ZeroDensityAtOutcome,
)

UNIT_TOL = 1e-9


class ScoringRule(str, Enum):
    BRIER = "brier"
    QUADRATIC = "quadratic"
    RPS = "rps"
    NORMALIZED_RPS = "normalized_rps"
    LOG = "log"
    CRPS = "crps"
    ORIENTED_CRPS = "oriented_crps"

    @property
    def negatively_oriented(self) -> bool:
        return self in (ScoringRule.BRIER, ScoringRule.RPS, ScoringRule.LOG, ScoringRule.CRPS)

    @property
    def forms(self) -> tuple[str, ...]:
        return _RULE_FORMS[self]


_RULE_FORMS = {
    ScoringRule.BRIER: ("binary",),
    ScoringRule.QUADRATIC: ("categorical",),
    ScoringRule.RPS: ("categorical",),
    ScoringRule.NORMALIZED_RPS: ("categorical",),
    ScoringRule.LOG: ("binary", "categorical", "continuous"),
    ScoringRule.CRPS: ("continuous",),
    ScoringRule.ORIENTED_CRPS: ("continuous",),
}

#: Rules whose oriented form is bounded in [0, 1] and therefore usable for payoffs.
UNIT_RULES = frozenset(
    {ScoringRule.BRIER, ScoringRule.QUADRATIC, ScoringRule.NORMALIZED_RPS, ScoringRule.ORIENTED_CRPS}
)


@dataclass(frozen=True)
class ScoreValue:
    value: float
    oriented: bool
    rule: ScoringRule


# --- binary / categorical ---------------------------------------------------


def _binary_prob(report) -> float:
    if not isinstance(report, D.Binary):
        raise TypeMismatch(f"rule needs a binary report, got {type(report).__name__}")
    D.ensure_valid(report)
    return report.p


def _categorical_probs(report) -> np.ndarray:
    if not isinstance(report, D.Categorical):
        raise TypeMismatch(f"rule needs a categorical report, got {type(report).__name__}")
    D.ensure_valid(report)
    return report.probs


def _category_indices(report, outcome) -> np.ndarray:
    if np.ndim(outcome) == 0:
        return np.asarray(D.outcome_for(report, outcome).index)
    j = np.asarray(outcome)
    if np.any(j != np.round(j)) or np.any((j < 1) | (j > report.n_categories)):
        raise D.ValidationError([("BadOutcome", "category outside 1..J")])
    return j.astype(int)


def _binary_values(report, outcome) -> np.ndarray:
    if np.ndim(outcome) == 0:
        return np.asarray(D.outcome_for(report, outcome).value)
    w = np.asarray(outcome)
    if np.any((w != 0) & (w != 1)):
        raise D.ValidationError([("BadOutcome", "binary outcomes must be 0 or 1")])
    return w.astype(int)


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def brier(report, outcome):
    """(p - omega)^2 for a binary report; lower is better."""
    p = _binary_prob(report)
    w = _binary_values(report, outcome)
    return _scalar((p - w) ** 2)


def quadratic_score(report, outcome):
    """2 r(j) - sum_i r(i)^2, positively oriented, in [-1, 1]."""
    probs = _categorical_probs(report)
    j = _category_indices(report, outcome)
    return _scalar(2.0 * probs[j - 1] - math.fsum(probs * probs))


def rps(report, outcome):
    """Ranked probability score, sum of squared cumulative-probability gaps."""
    probs = _categorical_probs(report)
    j = _category_indices(report, outcome)
    cum = np.cumsum(probs)
    levels = np.arange(1, probs.size + 1)
    observed = (levels[:, None] >= np.atleast_1d(j)[None, :]).astype(float)
    out = ((cum[:, None] - observed) ** 2).sum(axis=0)
    return _scalar(out[0] if np.ndim(j) == 0 else out)


def normalized_rps(report, outcome):
    """1 - RPS / (J - 1); positively oriented in [0, 1]."""
    J = _categorical_probs(report).size
    return _scalar(1.0 - np.asarray(rps(report, outcome)) / (J - 1))


# --- continuous -------------------------------------------------------------


def _as_grid(dist, grid_spec):
    if not isinstance(dist, D.CONTINUOUS_TYPES):
        raise TypeMismatch(f"rule needs a continuous report, got {type(dist).__name__}")
    D.ensure_valid(dist)
    if isinstance(dist, D.QuantileGrid):
        return dist
    return D.to_quantile_grid(dist, grid_spec or D.GridSpec())


def _real_values(outcome) -> np.ndarray:
    if isinstance(outcome, D.RealOutcome):
        outcome = outcome.value
    w = np.asarray(outcome, dtype=float)
    if not np.all(np.isfinite(w)):
        raise D.ValidationError([("NonFiniteValue", "real outcome must be finite")])
    return w


def _partial_sq(a, b, t, h):
    # integral of (a + (b - a) s / h)^2 for s in [0, t h]
    d = b - a
    return h * (a * a * t + a * d * t * t + d * d * t**3 / 3.0)


def grid_crps(grid: D.QuantileGrid, outcome):
    """Exact CRPS of a quantile-grid distribution (scalar or array outcome)."""
    w = _real_values(outcome)
    taus, v = grid.taus, grid.values
    if v.size == 1 or v[-1] == v[0]:
        return _scalar(np.abs(w - v[0]))
    h = np.diff(v)
    a, b = taus[:-1], taus[1:]
    ones = np.ones_like(a)
    seg_lo = _partial_sq(a, b, ones, h)  # F^2 over each segment
    seg_hi = _partial_sq(1 - a, 1 - b, ones, h)  # (1 - F)^2 over each segment
    cum_lo = np.concatenate([[0.0], np.cumsum(seg_lo)])
    cum_hi = np.concatenate([[0.0], np.cumsum(seg_hi)])
    total_lo, total_hi = cum_lo[-1], cum_hi[-1]

    k = np.searchsorted(v, w, side="right") - 1
    below = k < 0
    above = k >= v.size - 1
    kk = np.clip(k, 0, v.size - 2)
    hk = h[kk]
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(hk > 0, (w - v[kk]) / np.where(hk > 0, hk, 1.0), 0.0)
    part_lo = cum_lo[kk] + _partial_sq(a[kk], b[kk], t, hk)
    part_hi = cum_hi[kk] + _partial_sq(1 - a[kk], 1 - b[kk], t, hk)
    inside = part_lo + (total_hi - part_hi)
    out = np.where(
        below,
        (v[0] - w) + total_hi,
        np.where(above, total_lo + (w - v[-1]), inside),
    )
    if not np.all(np.isfinite(out)):
        raise QuadratureFailure("CRPS integral is not finite")
    return _scalar(out)


def crps(dist, outcome, grid_spec: D.GridSpec | None = None):
    """CRPS of a continuous report; lower is better.

    Parametric reports are first discretized on ``grid_spec`` (default 999
    levels).
    """
    return grid_crps(_as_grid(dist, grid_spec), outcome)


def crps_normal(mu: float, sigma: float, outcome):
    """Closed-form CRPS of Normal(mu, sigma)."""
    z = (np.asarray(outcome, dtype=float) - mu) / sigma
    out = sigma * (z * (2 * stats.norm.cdf(z) - 1) + 2 * stats.norm.pdf(z) - 1 / math.sqrt(math.pi))
    return _scalar(out)


def crps_quad(dist, outcome: float) -> float:
    """CRPS of a parametric report by adaptive quadrature of its exact CDF.

    Independent of the grid path; used as a cross-check.
    """
    if not isinstance(dist, D.PARAMETRIC_TYPES):
        raise TypeMismatch("crps_quad needs a parametric report")
    w = float(outcome)
    F = dist.cdf
    lo, hi = D.natural_support(dist) or (-np.inf, np.inf)
    left_end = min(lo, w)
    right_end = max(hi, w)
    left = integrate.quad(lambda x: F(x) ** 2, left_end, w, limit=200, epsabs=1e-12)[0] if w > left_end else 0.0
    right = integrate.quad(lambda x: (1 - F(x)) ** 2, w, right_end, limit=200, epsabs=1e-12)[0] if right_end > w else 0.0
    out = left + right
    if not math.isfinite(out):
        raise QuadratureFailure("quadrature did not converge")
    return out


def check_unit_support(dist, outcome, grid_spec: D.GridSpec | None = None):
    """Raise :class:`SupportNotUnit` unless the report and outcome live in [0, 1]."""
    grid = _as_grid(dist, grid_spec)
    w = _real_values(outcome)
    lo, hi = D.grid_support(grid)
    declared = grid.support
    if declared is not None and (declared[0] < -UNIT_TOL or declared[1] > 1 + UNIT_TOL):
        raise SupportNotUnit(f"declared support {declared} is not within [0, 1]")
    if lo < -UNIT_TOL or hi > 1 + UNIT_TOL:
        raise SupportNotUnit(f"report mass spans [{lo:.6g}, {hi:.6g}], not within [0, 1]")
    if np.any(w < -UNIT_TOL) or np.any(w > 1 + UNIT_TOL):
        raise SupportNotUnit("outcome outside [0, 1]")
    return grid


def oriented_crps(dist, outcome, grid_spec: D.GridSpec | None = None):
    """1 - CRPS for a report and outcome on the unit interval."""
    grid = check_unit_support(dist, outcome, grid_spec)
    out = 1.0 - np.asarray(grid_crps(grid, outcome))
    return _scalar(np.clip(out, 0.0, 1.0))


def log_score(report, outcome):
    """Negative log probability (or density) at the outcome; lower is better.

    Only meaningful as a locality diagnostic; grids are rejected because a
    piecewise-linear quantile function has no well-defined density at the
    end atoms.
    """
    if isinstance(report, D.Binary):
        p = _binary_prob(report)
        w = _binary_values(report, outcome)
        prob = np.where(w == 1, p, 1 - p)
    elif isinstance(report, D.Categorical):
        probs = _categorical_probs(report)
        prob = probs[_category_indices(report, outcome) - 1]
    elif isinstance(report, D.CONTINUOUS_TYPES):
        D.ensure_valid(report)
        prob = np.asarray(D.pdf_eval(report, _real_values(outcome)))
    else:
        raise TypeMismatch(f"not a predictive report: {type(report).__name__}")
    if np.any(prob <= 0):
        raise ZeroDensityAtOutcome("log score undefined where probability is zero")
    return _scalar(-np.log(prob))


# --- dispatch ---------------------------------------------------------------


def _check_form(rule: ScoringRule, report):
    form = D.form_of(report)
    if form not in rule.forms:
        raise TypeMismatch(f"{rule.value} does not score {form} reports")


def score(rule, report, outcome, grid_spec: D.GridSpec | None = None) -> ScoreValue:
    """Raw score wrapped with its orientation."""
    rule = ScoringRule(rule)
    _check_form(rule, report)
    fn = {
        ScoringRule.BRIER: lambda: brier(report, outcome),
        ScoringRule.QUADRATIC: lambda: quadratic_score(report, outcome),
        ScoringRule.RPS: lambda: rps(report, outcome),
        ScoringRule.NORMALIZED_RPS: lambda: normalized_rps(report, outcome),
        ScoringRule.LOG: lambda: log_score(report, outcome),
        ScoringRule.CRPS: lambda: crps(report, outcome, grid_spec),
        ScoringRule.ORIENTED_CRPS: lambda: oriented_crps(report, outcome, grid_spec),
    }[rule]
    value = fn()
    oriented = rule in (ScoringRule.NORMALIZED_RPS, ScoringRule.ORIENTED_CRPS)
    return ScoreValue(value, oriented, rule)


def oriented_score(rule, report, outcome, grid_spec: D.GridSpec | None = None):
    """Positively oriented score; in [0, 1] for every rule in :data:`UNIT_RULES`.

    Accepts an array of outcomes and then returns an array.
    """
    rule = ScoringRule(rule)
    _check_form(rule, report)
    if rule is ScoringRule.BRIER:
        return _scalar(1.0 - np.asarray(brier(report, outcome)))
    if rule is ScoringRule.QUADRATIC:
        return _scalar((1.0 + np.asarray(quadratic_score(report, outcome))) / 2.0)
    if rule in (ScoringRule.RPS, ScoringRule.NORMALIZED_RPS):
        return normalized_rps(report, outcome)
    if rule is ScoringRule.LOG:
        return _scalar(-np.asarray(log_score(report, outcome)))
    if rule is ScoringRule.CRPS:
        return _scalar(-np.asarray(crps(report, outcome, grid_spec)))
    return oriented_crps(report, outcome, grid_spec)


# --- diagnostics ------------------------------------------------------------


def propriety_gap(rule, truth, report, n_samples: int, seed, grid_spec: D.GridSpec | None = None):
    """Monte Carlo estimate of E_truth[s(truth)] - E_truth[s(report)].

    Both reports are scored on the same outcome draws, so ``truth == report``
    gives exactly zero. Returns ``(gap, halfwidth)`` with a 95% normal
    approximation halfwidth.
    """
    rule = ScoringRule(rule)
    if D.form_of(truth) != D.form_of(report):
        raise TypeMismatch("truth and report must have the same form")
    if D.form_of(truth) == "continuous":
        truth_sampler = _as_grid(truth, grid_spec)
    else:
        truth_sampler = D.ensure_valid(truth)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    outcomes = D.sample(truth_sampler, rng, int(n_samples))
    diff = np.asarray(oriented_score(rule, truth, outcomes, grid_spec)) - np.asarray(
        oriented_score(rule, report, outcomes, grid_spec)
    )
    gap = float(diff.mean())
    half = float(1.96 * diff.std(ddof=1) / math.sqrt(diff.size)) if diff.size > 1 else math.inf
    return gap, half


def mean_preserving_spread(probs, center: int, amount: float) -> np.ndarray:
    """Move ``amount`` of mass from each neighbour of ``center`` one step outward.

    ``center`` is 1-based and needs two categories on each side. The mean and
    the probability at ``center`` are unchanged, so the result is more
    dispersed around the realized category.
    """
    p = np.array(probs, dtype=float)
    c = center - 1
    if c < 2 or c > p.size - 3:
        raise ValueError("center needs two categories on each side")
    take = min(amount, p[c - 1], p[c + 1])
    out = p.copy()
    out[c - 1] -= take
    out[c - 2] += take
    out[c + 1] -= take
    out[c + 2] += take
    return out


def locality_contrast(rule, report_a, report_b, outcome, grid_spec: D.GridSpec | None = None) -> float:
    """Difference of oriented scores of two reports at one outcome.

    For a local rule this is zero whenever the reports agree at the outcome.
    """
    return float(
        oriented_score(rule, report_a, outcome, grid_spec) - oriented_score(rule, report_b, outcome, grid_spec)
    )
