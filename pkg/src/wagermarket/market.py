"""Market sessions and payoff settlement.

A session collects wagered reports for one client task, delivers the
wager-weighted aggregate, and once the outcome is known pays every player a
skill component (redistribution of the wager pool by relative score) plus a
share of the client's utility pool if they beat the client's own forecast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from . import dist as D
from . import scoring as S
from .aggregate import AggregationMethod, aggregate, canonical_sum, normalize_wagers
from .errors import (
    DuplicatePlayer,
    FormMismatch,
    InvalidConfig,
    NoSubmissions,
    NonPositiveWager,
    ScoreOutOfRange,
    SessionClosed,
    SessionNotClosed,
    TypeMismatch,
    ValidationError,
    WagerOutOfBounds,
)

SCORE_TOL = 1e-12


# --- configuration ----------------------------------------------------------


@dataclass(frozen=True)
class Proportional:
    """Utility U = rate * max(0, aggregate score - client score).

    ``rate=None`` takes the client's reward rate.
    """

    rate: float | None = None


@dataclass(frozen=True)
class Exogenous:
    """Fixed utility paid whenever the aggregate beats the client's report."""

    amount: float


UtilityMode = Union[Proportional, Exogenous]


@dataclass(frozen=True)
class WagerBounds:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and 0 < self.lo <= self.hi):
            raise InvalidConfig(f"wager bounds need 0 < lo <= hi, got ({self.lo}, {self.hi})")

    def contains(self, wager: float) -> bool:
        return self.lo <= wager <= self.hi


@dataclass(frozen=True)
class MarketConfig:
    scoring_rule: S.ScoringRule = S.ScoringRule.ORIENTED_CRPS
    aggregation: AggregationMethod = AggregationMethod.QA
    utility: UtilityMode = field(default_factory=Proportional)
    grid_spec: D.GridSpec = field(default_factory=D.GridSpec)

    def __post_init__(self):
        try:
            object.__setattr__(self, "scoring_rule", S.ScoringRule(self.scoring_rule))
            object.__setattr__(self, "aggregation", AggregationMethod(self.aggregation))
        except ValueError as exc:
            raise InvalidConfig(str(exc)) from None

    def validate(self):
        if self.scoring_rule not in S.UNIT_RULES:
            raise InvalidConfig(
                f"{self.scoring_rule.value} is not an oriented [0, 1] rule; "
                f"use one of {sorted(r.value for r in S.UNIT_RULES)}"
            )
        if isinstance(self.utility, Exogenous):
            if not (math.isfinite(self.utility.amount) and self.utility.amount >= 0):
                raise InvalidConfig("exogenous utility must be a finite amount >= 0")
        elif isinstance(self.utility, Proportional):
            rate = self.utility.rate
            if rate is not None and not (math.isfinite(rate) and rate > 0):
                raise InvalidConfig("reward rate must be positive")
        else:
            raise InvalidConfig(f"unknown utility mode {self.utility!r}")
        if not isinstance(self.grid_spec, D.GridSpec):
            raise InvalidConfig("grid_spec must be a GridSpec")
        return self


@dataclass(frozen=True)
class ClientSpec:
    """The buyer: task id, own reference report and reward rate.

    ``fixed_score`` replaces scoring of ``own_report`` when only the client's
    score is known (as in published worked examples).
    """

    task_id: str
    own_report: D.PredictiveReport | None = None
    reward_rate: float = 1.0
    fixed_score: float | None = None

    def validate(self):
        if not (math.isfinite(self.reward_rate) and self.reward_rate > 0):
            raise InvalidConfig("client reward rate must be positive")
        if self.own_report is None and self.fixed_score is None:
            raise InvalidConfig("client needs an own report or a fixed score")
        if self.own_report is not None:
            issues = D.validate(self.own_report)
            if issues:
                raise InvalidConfig(f"client report invalid: {ValidationError(issues)}")
        if self.fixed_score is not None and not 0.0 <= self.fixed_score <= 1.0:
            raise InvalidConfig("client fixed score must lie in [0, 1]")
        return self


@dataclass(frozen=True)
class PlayerSubmission:
    player_id: str
    report: D.PredictiveReport
    wager: float


# --- payoff algebra ---------------------------------------------------------


def _as_columns(values, n_players):
    arr = np.asarray(values, dtype=float)
    if arr.shape[0] != n_players:
        raise ValueError(f"expected {n_players} rows, got shape {arr.shape}")
    return arr


def _wager_column(wagers, ndim):
    m = np.asarray(wagers, dtype=float).ravel()
    if not np.all(np.isfinite(m)) or np.any(m <= 0):
        raise NonPositiveWager("every wager must be a positive finite number")
    return m.reshape((-1,) + (1,) * (ndim - 1))


def _check_scores(s):
    if not np.all(np.isfinite(s)) or np.any(s < -SCORE_TOL) or np.any(s > 1 + SCORE_TOL):
        raise ScoreOutOfRange("oriented scores must lie in [0, 1]")


def wager_payoff(scores, wagers) -> np.ndarray:
    """Skill component m_i (1 + s_i - sum_j s_j m_j / sum_j m_j).

    ``scores`` may carry a trailing axis of outcomes, shape ``(n_players, n)``.
    """
    s = np.asarray(scores, dtype=float)
    _check_scores(s)
    m = _wager_column(wagers, s.ndim)
    s = _as_columns(s, m.shape[0])
    # s_i - weighted mean written as sum_j m_j (s_i - s_j) / M: exactly zero
    # when all scores agree, and each row's sum is order independent
    gaps = s[:, None] - s[None, :]
    edge = canonical_sum(m[None, :] * gaps, axis=1) / math.fsum(m.ravel())
    return m + m * edge


def utility_pool(aggregate_score, client_score, mode: UtilityMode, rate: float | None = None):
    """Utility U owed by the client for the aggregate's improvement over its own report."""
    a = np.asarray(aggregate_score, dtype=float)
    c = np.asarray(client_score, dtype=float)
    if isinstance(mode, Exogenous):
        out = np.where(a > c, max(0.0, mode.amount), 0.0)
    else:
        phi = mode.rate if mode.rate is not None else rate
        if phi is None:
            raise InvalidConfig("proportional utility needs a reward rate")
        out = phi * np.maximum(0.0, a - c)
    return float(out) if out.ndim == 0 else out


def utility_shares(scores, wagers, client_score, U) -> np.ndarray:
    """Utility component: U split by s_i m_i among players with s_i > client score."""
    s = np.asarray(scores, dtype=float)
    _check_scores(s)
    m = _wager_column(wagers, s.ndim)
    s = _as_columns(s, m.shape[0])
    U = np.asarray(U, dtype=float)
    if np.any(U < 0):
        raise ValueError("utility pool must be non-negative")
    eligible_scores = np.where(s > np.asarray(client_score, dtype=float), s, 0.0)
    weight = eligible_scores * m
    denom = canonical_sum(weight, axis=0)
    active = (denom > 0) & (U > 0)
    safe = np.where(denom > 0, denom, 1.0)
    return np.where(active, weight / safe * U, 0.0)


@dataclass(frozen=True, eq=False)
class Settlement:
    player_ids: tuple[str, ...]
    wagers: np.ndarray
    outcome: object
    player_scores: np.ndarray
    client_score: float
    aggregate_score: float | None
    utility_pool: float
    wager_payoffs: np.ndarray
    utility_shares: np.ndarray
    total_payoffs: np.ndarray
    eligible: np.ndarray

    @property
    def profits(self) -> np.ndarray:
        return self.total_payoffs - self.wagers

    @property
    def utility_distributed(self) -> float:
        return self.utility_pool if bool(np.any(self.eligible)) and self.utility_pool > 0 else 0.0

    @property
    def utility_refund(self) -> float:
        """Utility returned to the client because nobody beat its report."""
        return self.utility_pool - self.utility_distributed

    def payoff_of(self, player_id: str) -> float:
        return float(self.total_payoffs[self.player_ids.index(player_id)])

    def as_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "client_score": self.client_score,
            "aggregate_score": self.aggregate_score,
            "utility_pool": self.utility_pool,
            "utility_distributed": self.utility_distributed,
            "utility_refund": self.utility_refund,
            "players": [
                {
                    "player_id": pid,
                    "wager": float(self.wagers[i]),
                    "score": float(self.player_scores[i]),
                    "eligible": bool(self.eligible[i]),
                    "wager_payoff": float(self.wager_payoffs[i]),
                    "utility_share": float(self.utility_shares[i]),
                    "payoff": float(self.total_payoffs[i]),
                    "profit": float(self.profits[i]),
                }
                for i, pid in enumerate(self.player_ids)
            ],
        }


def settle_scores(
    player_ids: Sequence[str],
    scores,
    wagers,
    client_score: float,
    U: float,
    aggregate_score: float | None = None,
    outcome=None,
) -> Settlement:
    """Settle from already computed oriented scores and a utility pool."""
    s = np.asarray(scores, dtype=float)
    m = np.asarray(wagers, dtype=float)
    if s.shape != m.shape or s.ndim != 1:
        raise ValueError("scores and wagers must be 1-D arrays of equal length")
    if not 0.0 <= client_score <= 1.0:
        raise ScoreOutOfRange("client score must lie in [0, 1]")
    pi = wager_payoff(s, m)
    shares = utility_shares(s, m, client_score, U)
    return Settlement(
        player_ids=tuple(player_ids),
        wagers=m,
        outcome=outcome,
        player_scores=s,
        client_score=float(client_score),
        aggregate_score=None if aggregate_score is None else float(aggregate_score),
        utility_pool=float(U),
        wager_payoffs=pi,
        utility_shares=shares,
        total_payoffs=pi + shares,
        eligible=s > client_score,
    )


# --- sessions ---------------------------------------------------------------


class MarketSession:
    """One client task from posting to settlement.

    Submissions are accepted until :meth:`deliver_aggregate`; afterwards the
    session is frozen and :meth:`settle` may be called any number of times.
    """

    def __init__(self, config: MarketConfig, client: ClientSpec, bounds: WagerBounds):
        self.config = config.validate()
        self.client = client.validate()
        self.bounds = bounds
        if isinstance(config.utility, Proportional) and config.utility.rate is None:
            self.utility_mode: UtilityMode = Proportional(client.reward_rate)
        else:
            self.utility_mode = config.utility
        self.form = D.form_of(client.own_report) if client.own_report is not None else None
        if self.form is not None:
            self._check_form_supported(self.form, InvalidConfig)
        self.submissions: list[PlayerSubmission] = []
        self.aggregate: D.PredictiveReport | None = None

    def _check_form_supported(self, form, exc):
        if form not in self.config.scoring_rule.forms:
            raise exc(f"{self.config.scoring_rule.value} cannot score {form} reports")
        if self.config.aggregation is AggregationMethod.QA and form != "continuous":
            raise exc("quantile averaging needs continuous reports")

    @property
    def closed(self) -> bool:
        return self.aggregate is not None

    @property
    def player_ids(self) -> tuple[str, ...]:
        return tuple(s.player_id for s in self.submissions)

    @property
    def wagers(self) -> np.ndarray:
        return np.array([s.wager for s in self.submissions], dtype=float)

    def submit(self, submission: PlayerSubmission) -> "MarketSession":
        if self.closed:
            raise SessionClosed("aggregate already delivered; submissions are closed")
        if submission.player_id in self.player_ids:
            raise DuplicatePlayer(f"player {submission.player_id!r} already submitted")
        wager = float(submission.wager)
        if not math.isfinite(wager) or not self.bounds.contains(wager):
            raise WagerOutOfBounds(
                f"wager {wager} outside [{self.bounds.lo}, {self.bounds.hi}]"
            )
        issues = D.validate(submission.report)
        if issues:
            raise ValidationError(issues)
        form = D.form_of(submission.report)
        if self.form is None:
            self._check_form_supported(form, FormMismatch)
            self.form = form
        elif form != self.form:
            raise FormMismatch(f"task expects {self.form} reports, got {form}")
        elif form == "categorical":
            ref = self.client.own_report if isinstance(self.client.own_report, D.Categorical) else (
                self.submissions[0].report if self.submissions else None
            )
            if ref is not None and ref.n_categories != submission.report.n_categories:
                raise FormMismatch("categorical reports must share the category count")
        self.submissions.append(submission)
        return self

    def deliver_aggregate(self):
        """Close submissions and return the wager-weighted aggregate report."""
        if self.aggregate is not None:
            return self.aggregate
        if not self.submissions:
            raise NoSubmissions("nothing to aggregate")
        weights = normalize_wagers(self.wagers)
        reports = [s.report for s in self.submissions]
        self.aggregate = aggregate(self.config.aggregation, reports, weights, self.config.grid_spec)
        return self.aggregate

    def _score(self, report, outcome):
        return S.oriented_score(self.config.scoring_rule, report, outcome, self.config.grid_spec)

    def _validated_outcome(self, outcome):
        if self.form == "continuous" and isinstance(outcome, (D.BinaryOutcome, D.CategoryOutcome)):
            raise FormMismatch("continuous task needs a real outcome")
        try:
            return D.outcome_for(self.submissions[0].report, outcome)
        except TypeMismatch as exc:
            raise FormMismatch(str(exc)) from None

    def client_scores(self, outcomes):
        if self.client.fixed_score is not None:
            return np.full(np.shape(outcomes), float(self.client.fixed_score))
        return np.asarray(self._score(self.client.own_report, outcomes), dtype=float)

    def settle(self, outcome) -> Settlement:
        if not self.closed:
            raise SessionNotClosed("deliver the aggregate before settling")
        o = self._validated_outcome(outcome)
        raw = o.index if isinstance(o, D.CategoryOutcome) else o.value
        scores = np.array([self._score(s.report, raw) for s in self.submissions], dtype=float)
        client_score = float(self.client_scores(raw))
        agg_score = float(self._score(self.aggregate, raw))
        U = utility_pool(agg_score, client_score, self.utility_mode)
        return settle_scores(
            self.player_ids, scores, self.wagers, client_score, U, agg_score, outcome=raw
        )

    def payoffs_for_outcomes(self, outcomes, skill_only: bool = False):
        """Vectorized settlement over many outcomes.

        Returns ``(total_payoffs, utility)`` with shapes ``(n_players, n)`` and
        ``(n,)``. Outcomes are trusted to be valid for the task form. With
        ``skill_only`` the payoffs leave out the utility shares.
        """
        if not self.closed:
            raise SessionNotClosed("deliver the aggregate before settling")
        outcomes = np.asarray(outcomes)
        scores = np.vstack([np.asarray(self._score(s.report, outcomes), dtype=float) for s in self.submissions])
        client = self.client_scores(outcomes)
        agg = np.asarray(self._score(self.aggregate, outcomes), dtype=float)
        U = np.asarray(utility_pool(agg, client, self.utility_mode), dtype=float)
        m = self.wagers
        if skill_only:
            return wager_payoff(scores, m), U
        return wager_payoff(scores, m) + utility_shares(scores, m, client, U), U


def open_session(config: MarketConfig, client: ClientSpec, bounds: WagerBounds) -> MarketSession:
    return MarketSession(config, client, bounds)


def run_session(config, client, bounds, submissions, outcome) -> tuple[MarketSession, Settlement]:
    """Open, fill, aggregate and settle in one call."""
    session = open_session(config, client, bounds)
    for sub in submissions:
        session.submit(sub)
    session.deliver_aggregate()
    return session, session.settle(outcome)
