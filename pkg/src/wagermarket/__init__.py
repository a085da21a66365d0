"""Wagering-based forecast elicitation market.

Players post probabilistic forecasts with wagers; the operator aggregates
them for a client and, once the outcome is known, pays each player a skill
component (wager redistribution by relative score) plus a share of the
client-funded utility pool.
"""

from .aggregate import AggregationMethod, aggregate, lop, qa
from .dist import (
    Beta,
    Binary,
    Categorical,
    GridSpec,
    Normal,
    QuantileGrid,
    Uniform,
    to_quantile_grid,
)
from .market import (
    ClientSpec,
    Exogenous,
    MarketConfig,
    MarketSession,
    PlayerSubmission,
    Proportional,
    Settlement,
    WagerBounds,
    run_session,
    settle_scores,
)
from .scoring import ScoringRule, oriented_score, score

__all__ = [
    "AggregationMethod",
    "Beta",
    "Binary",
    "Categorical",
    "ClientSpec",
    "Exogenous",
    "GridSpec",
    "MarketConfig",
    "MarketSession",
    "Normal",
    "PlayerSubmission",
    "Proportional",
    "QuantileGrid",
    "ScoringRule",
    "Settlement",
    "Uniform",
    "WagerBounds",
    "aggregate",
    "lop",
    "oriented_score",
    "qa",
    "run_session",
    "score",
    "settle_scores",
    "to_quantile_grid",
]
