"""Executable checks of the payoff mechanism's economic properties.

Exact checks (budget balance, anonymity, sybilproofness, realized stimulant,
wager zero-sum) re-settle sessions and compare residuals. Expectation-based
checks (individual rationality, client truthfulness, the truthfulness
surrogate) are Monte Carlo estimates over outcomes drawn from a belief.

Every random draw goes through a Philox generator seeded from a
``SeedSequence`` so results are reproducible bit for bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy import stats

from . import dist as D
from . import scoring as S
from .aggregate import AggregationMethod
from .errors import (
    ExogenousModeUnsupported,
    ReportsDiffer,
    SplitChangesTotal,
    WagerOutOfBounds,
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
    utility_pool,
)

EXACT_TOL = 1e-9


class PropertyId(str, Enum):
    BUDGET_BALANCE = "BudgetBalance"
    ANONYMITY = "Anonymity"
    INDIVIDUAL_RATIONALITY = "IndividualRationality"
    SYBILPROOFNESS = "Sybilproofness"
    CONDITIONAL_TRUTHFULNESS = "ConditionalTruthfulness"
    CLIENT_TRUTHFULNESS = "ClientTruthfulness"
    STIMULANT = "Stimulant"
    WAGER_ZERO_SUM = "WagerZeroSum"


@dataclass(frozen=True)
class PropertyReport:
    property_id: PropertyId
    passed: bool
    evidence: dict
    seed: object = None

    def as_dict(self) -> dict:
        return {
            "property": self.property_id.value,
            "verdict": "pass" if self.passed else "fail",
            "seed": self.seed,
            "evidence": self.evidence,
        }


def make_rng(seed) -> np.random.Generator:
    """Counter-based generator; ``seed`` may be an int, a tuple or a SeedSequence."""
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
    elif isinstance(seed, (tuple, list)):
        ss = np.random.SeedSequence([int(s) for s in seed])
    else:
        ss = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(ss))


# --- beliefs ----------------------------------------------------------------


class BeliefModel:
    """A player's (or client's) true belief and an outcome sampler for it.

    Continuous beliefs are sampled from their quantile-grid form so draws stay
    inside the grid's span. The sampler is self-tested on construction with
    a Kolmogorov-Smirnov (continuous) or chi-square (discrete) test.
    """

    SELF_TEST_SAMPLES = 4000
    SELF_TEST_ALPHA = 1e-3

    def __init__(self, belief, grid_spec: D.GridSpec | None = None, self_test: bool = True):
        self.belief = D.ensure_valid(belief)
        self.form = D.form_of(belief)
        self._target = D.to_quantile_grid(belief, grid_spec) if self.form == "continuous" else belief
        self.self_test_pvalue = self._self_test() if self_test else None
        if self.self_test_pvalue is not None and self.self_test_pvalue <= self.SELF_TEST_ALPHA:
            raise ValueError(f"sampler self-test failed (p={self.self_test_pvalue:.2e})")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return D.sample(self._target, rng, n)

    def _self_test(self) -> float:
        draws = self.sample(make_rng(20240101), self.SELF_TEST_SAMPLES)
        if self.form == "continuous":
            grid = self._target
            if grid.values[-1] == grid.values[0]:
                return 1.0 if np.all(draws == grid.values[0]) else 0.0
            # randomized PIT stays exactly uniform when the grid CDF has atoms
            hi = D.cdf_eval(grid, draws)
            lo = D.cdf_eval(grid, np.nextafter(draws, -np.inf))
            u = lo + make_rng(20240102).random(draws.size) * (hi - lo)
            return float(stats.kstest(u, "uniform").pvalue)
        if self.form == "binary":
            probs = np.array([1 - self.belief.p, self.belief.p])
            counts = np.bincount(draws, minlength=2)
        else:
            probs = self.belief.probs
            counts = np.bincount(draws - 1, minlength=probs.size)
        support = probs > 0
        if np.any(counts[~support] > 0):
            return 0.0
        if support.sum() < 2:
            return 1.0
        expected = probs[support] * draws.size
        return float(stats.chisquare(counts[support], expected * counts[support].sum() / expected.sum()).pvalue)


# --- exact checks -----------------------------------------------------------


def _pool(settlement: Settlement) -> float:
    return float(math.fsum(settlement.wagers)) + settlement.utility_distributed


def check_budget_balance(settlement: Settlement, seed=None) -> PropertyReport:
    expected = _pool(settlement)
    total = math.fsum(settlement.total_payoffs)
    residual = abs(total - expected) / expected
    return PropertyReport(
        PropertyId.BUDGET_BALANCE,
        residual < EXACT_TOL,
        {"total_payoff": total, "pool": expected, "refund": settlement.utility_refund, "residual": residual},
        seed,
    )


def check_wager_zero_sum(settlement: Settlement, seed=None) -> PropertyReport:
    m = math.fsum(settlement.wagers)
    residual = abs(math.fsum(settlement.wager_payoffs) - m) / m
    return PropertyReport(PropertyId.WAGER_ZERO_SUM, residual < EXACT_TOL, {"residual": residual}, seed)


def _session_like(session: MarketSession, submissions, bounds: WagerBounds | None = None) -> MarketSession:
    clone = MarketSession(session.config, session.client, bounds or session.bounds)
    for sub in submissions:
        clone.submit(sub)
    clone.deliver_aggregate()
    return clone


def check_anonymity(session: MarketSession, outcome, permutation, seed=None) -> PropertyReport:
    """Re-settle with submissions reordered by ``permutation``; payoffs must follow bitwise.

    ``permutation[k]`` is the original index placed at position ``k``.
    """
    perm = [int(i) for i in permutation]
    if sorted(perm) != list(range(len(session.submissions))):
        raise ValueError("not a permutation of the players")
    base = session.settle(outcome)
    shuffled = _session_like(session, [session.submissions[i] for i in perm]).settle(outcome)
    expected = base.total_payoffs[perm]
    exact = bool(np.array_equal(shuffled.total_payoffs, expected))
    max_diff = float(np.max(np.abs(shuffled.total_payoffs - expected))) if expected.size else 0.0
    return PropertyReport(
        PropertyId.ANONYMITY, exact, {"bitwise_equal": exact, "max_abs_diff": max_diff, "permutation": perm}, seed
    )


def check_sybilproof(session: MarketSession, outcome, coalition, wager_split, seed=None) -> PropertyReport:
    """Replace coalition members by identities wagering ``wager_split`` on their common report.

    Non-members' payoffs and the coalition's total payoff must not change.
    """
    coalition = list(coalition)
    ids = list(session.player_ids)
    members = [ids.index(pid) for pid in coalition]
    reports = [session.submissions[i].report for i in members]
    if any(r != reports[0] for r in reports[1:]):
        raise ReportsDiffer("coalition members must post one common report")
    old_total = math.fsum(session.submissions[i].wager for i in members)
    split = [float(x) for x in wager_split]
    if not split or abs(math.fsum(split) - old_total) > EXACT_TOL * old_total:
        raise SplitChangesTotal(f"split sums to {math.fsum(split)} instead of {old_total}")
    for part in split:
        if not session.bounds.contains(part):
            raise WagerOutOfBounds(f"split wager {part} outside bounds")

    others = [s for i, s in enumerate(session.submissions) if i not in members]
    sybils = [
        PlayerSubmission(f"{coalition[0]}#{k}", reports[0], part) for k, part in enumerate(split)
    ]
    base = session.settle(outcome)
    alt = _session_like(session, others + sybils).settle(outcome)

    scale = _pool(base)
    other_ids = [s.player_id for s in others]
    before = np.array([base.payoff_of(pid) for pid in other_ids])
    after = np.array([alt.payoff_of(pid) for pid in other_ids])
    nonmember_residual = float(np.max(np.abs(before - after))) / scale if other_ids else 0.0
    coalition_before = math.fsum(base.payoff_of(pid) for pid in coalition)
    coalition_after = math.fsum(alt.payoff_of(s.player_id) for s in sybils)
    coalition_residual = abs(coalition_before - coalition_after) / scale
    return PropertyReport(
        PropertyId.SYBILPROOFNESS,
        nonmember_residual < EXACT_TOL and coalition_residual < EXACT_TOL,
        {
            "nonmember_residual": nonmember_residual,
            "coalition_before": coalition_before,
            "coalition_after": coalition_after,
            "coalition_residual": coalition_residual,
        },
        seed,
    )


def check_stimulant(session: MarketSession, outcome, player_id: str, higher_wager: float, seed=None) -> PropertyReport:
    """Realized stimulant check for one player raising their wager.

    Scores, client score and the utility pool are held fixed; only the
    player's wager changes. The utility share must grow strictly when the
    player is eligible and competes with another eligible player (a sole
    eligible player already receives all of U). The skill profit must keep
    its sign and not shrink in magnitude.
    """
    if not session.bounds.contains(higher_wager):
        raise WagerOutOfBounds(f"wager {higher_wager} outside bounds")
    base = session.settle(outcome)
    i = base.player_ids.index(player_id)
    if not higher_wager > base.wagers[i]:
        raise ValueError("higher_wager must exceed the current wager")
    wagers = base.wagers.copy()
    wagers[i] = higher_wager
    after = settle_scores(
        base.player_ids, base.player_scores, wagers, base.client_score, base.utility_pool, base.aggregate_score
    )
    scale = _pool(after)

    p0 = float(base.wager_payoffs[i] - base.wagers[i])
    p1 = float(after.wager_payoffs[i] - after.wagers[i])
    noise = EXACT_TOL * scale
    same_sign = p0 * p1 >= 0 or max(abs(p0), abs(p1)) <= noise
    skill_ok = same_sign and abs(p1) >= abs(p0) - noise

    eligible = bool(base.eligible[i]) and base.utility_pool > 0
    competitors = int(np.sum(base.eligible)) - 1
    u0, u1 = float(base.utility_shares[i]), float(after.utility_shares[i])
    if eligible and competitors > 0:
        utility_ok = u1 > u0
    elif eligible:
        utility_ok = abs(u1 - base.utility_pool) <= noise and abs(u0 - base.utility_pool) <= noise
    else:
        utility_ok = u0 == 0.0 and u1 == 0.0
    return PropertyReport(
        PropertyId.STIMULANT,
        bool(skill_ok and utility_ok),
        {
            "player": player_id,
            "wager_before": float(base.wagers[i]),
            "wager_after": float(higher_wager),
            "skill_profit_before": p0,
            "skill_profit_after": p1,
            "utility_share_before": u0,
            "utility_share_after": u1,
            "eligible": eligible,
            "competing_eligible": competitors,
        },
        seed,
    )


# --- Monte Carlo checks ------------------------------------------------------


def _mean_halfwidth(x: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return float(x.mean()), math.inf
    return float(x.mean()), float(1.96 * x.std(ddof=1) / math.sqrt(x.size))


def estimate_expected_profit(
    config: MarketConfig,
    client: ClientSpec,
    bounds: WagerBounds,
    others,
    me: tuple,
    belief: BeliefModel,
    n_samples: int,
    seed,
    skill_only: bool = False,
) -> tuple[float, float]:
    """Mean and 95% halfwidth of the profit of player ``me = (report, wager)``.

    Outcomes are drawn from ``belief``; the other players' submissions are
    fixed. ``skill_only`` drops the utility share from the profit.
    """
    report, wager = me
    subs = list(others) + [PlayerSubmission("__me__", report, wager)]
    session, _ = _closed_session(config, client, bounds, subs)
    outcomes = belief.sample(make_rng(seed), int(n_samples))
    payoffs, _ = session.payoffs_for_outcomes(outcomes, skill_only)
    return _mean_halfwidth(payoffs[-1] - wager)


def _closed_session(config, client, bounds, submissions):
    session = MarketSession(config, client, bounds)
    for sub in submissions:
        session.submit(sub)
    return session, session.deliver_aggregate()


def check_individual_rationality(config, client, bounds, others, wager, belief: BeliefModel, n_samples, seed) -> PropertyReport:
    """Truthful report: mean profit must be at least minus its halfwidth."""
    mean, half = estimate_expected_profit(
        config, client, bounds, others, (belief.belief, wager), belief, n_samples, seed
    )
    return PropertyReport(
        PropertyId.INDIVIDUAL_RATIONALITY,
        mean >= -half,
        {"mean_profit": mean, "halfwidth": half, "n_samples": int(n_samples)},
        seed,
    )


def check_conditional_truthfulness(
    config, client, bounds, others, wager, belief: BeliefModel, misreport, n_samples, seed, skill_only=False
) -> PropertyReport:
    """Paired surrogate: truthful mean profit beats a misreport's beyond both halfwidths.

    With ``skill_only`` the utility share is left out, which models a player
    with no influence over it.
    """
    truth = estimate_expected_profit(
        config, client, bounds, others, (belief.belief, wager), belief, n_samples, seed, skill_only
    )
    lie = estimate_expected_profit(
        config, client, bounds, others, (misreport, wager), belief, n_samples, seed, skill_only
    )
    margin = truth[0] - lie[0]
    return PropertyReport(
        PropertyId.CONDITIONAL_TRUTHFULNESS,
        margin > truth[1] + lie[1],
        {
            "truthful_mean": truth[0],
            "truthful_halfwidth": truth[1],
            "misreport_mean": lie[0],
            "misreport_halfwidth": lie[1],
            "skill_only": bool(skill_only),
        },
        seed,
    )


def check_client_truthfulness(
    config: MarketConfig,
    client: ClientSpec,
    bounds: WagerBounds,
    submissions,
    client_belief: BeliefModel,
    alt_report,
    n_samples: int,
    seed,
) -> PropertyReport:
    """Expected utility paid by the client: truthful own report vs ``alt_report``.

    Passes when E[U | r_c = p] <= E[U | r_c = alt] + combined halfwidth. Both
    estimates use the same outcome draws.
    """
    if isinstance(config.utility, Exogenous):
        raise ExogenousModeUnsupported("client truthfulness needs proportional utility")
    truthful = replace(client, own_report=client_belief.belief, fixed_score=None)
    session, aggregate = _closed_session(config, truthful, bounds, submissions)
    outcomes = client_belief.sample(make_rng(seed), int(n_samples))
    rule, grid = config.scoring_rule, config.grid_spec
    agg_scores = np.asarray(S.oriented_score(rule, aggregate, outcomes, grid))
    s_true = np.asarray(S.oriented_score(rule, client_belief.belief, outcomes, grid))
    s_alt = np.asarray(S.oriented_score(rule, alt_report, outcomes, grid))
    mode = session.utility_mode
    u_true = utility_pool(agg_scores, s_true, mode)
    u_alt = utility_pool(agg_scores, s_alt, mode)
    m_true, h_true = _mean_halfwidth(u_true)
    m_alt, h_alt = _mean_halfwidth(u_alt)
    # untruncated payment phi * (s_hat - s_c): the linear form that propriety controls
    rate = session.utility_mode.rate
    lin_gap, lin_half = _mean_halfwidth(rate * (s_true - s_alt))
    return PropertyReport(
        PropertyId.CLIENT_TRUTHFULNESS,
        m_true <= m_alt + h_true + h_alt,
        {
            "utility_truthful": m_true,
            "halfwidth_truthful": h_true,
            "utility_alt": m_alt,
            "halfwidth_alt": h_alt,
            "linear_saving": lin_gap,
            "linear_halfwidth": lin_half,
        },
        seed,
    )


# --- random sessions --------------------------------------------------------


@dataclass
class RandomSession:
    config: MarketConfig
    client: ClientSpec
    bounds: WagerBounds
    submissions: list
    outcome: object
    form: str

    def run(self):
        return run_session(self.config, self.client, self.bounds, self.submissions, self.outcome)


def random_report(rng: np.random.Generator, form: str, grid_spec: D.GridSpec | None = None, n_categories: int = 5):
    """Draw a report of ``form`` from the fuzzing ranges.

    Continuous reports are Beta(a, b) with a, b in [0.5, 10], uniforms inside
    [0, 1], or normals with mu in [0.2, 0.8] and sigma in [0.02, 0.3]
    censored to [0, 1] and stored as quantile grids.
    """
    if form == "binary":
        return D.Binary(rng.uniform(0.0, 1.0))
    if form == "categorical":
        return D.Categorical(rng.dirichlet(np.ones(n_categories)))
    kind = rng.integers(3)
    if kind == 0:
        return D.Beta(rng.uniform(0.5, 10.0), rng.uniform(0.5, 10.0))
    if kind == 1:
        a, b = np.sort(rng.uniform(0.0, 1.0, size=2))
        return D.Uniform(a, b + 1e-3 if b - a < 1e-3 else b)
    grid = D.to_quantile_grid(D.Normal(rng.uniform(0.2, 0.8), rng.uniform(0.02, 0.3)), grid_spec)
    return D.QuantileGrid(grid.taus, np.clip(grid.values, 0.0, 1.0), (0.0, 1.0))


_RULE_FOR_FORM = {
    "binary": (S.ScoringRule.BRIER,),
    "categorical": (S.ScoringRule.NORMALIZED_RPS, S.ScoringRule.QUADRATIC),
    "continuous": (S.ScoringRule.ORIENTED_CRPS,),
}


def log_uniform(rng, lo, hi, size=None):
    return np.exp(rng.uniform(math.log(lo), math.log(hi), size=size))


def random_session(
    rng: np.random.Generator,
    form: str | None = None,
    aggregation: str | None = None,
    utility: str | None = None,
    n_players: int | None = None,
    grid_spec: D.GridSpec | None = None,
) -> RandomSession:
    """Draw a complete session template with an outcome sampled from a random belief."""
    grid_spec = grid_spec or D.GridSpec()
    form = form or ("binary", "categorical", "continuous")[rng.integers(3)]
    if aggregation is None:
        aggregation = "lop" if form != "continuous" else ("lop", "qa")[rng.integers(2)]
    utility = utility or ("proportional", "exogenous")[rng.integers(2)]
    n_players = n_players or int(rng.integers(1, 6))
    rules = _RULE_FOR_FORM[form]
    rule = rules[rng.integers(len(rules))]
    J = int(rng.integers(3, 7))
    bounds = WagerBounds(1.0, 1000.0)
    mode = Exogenous(float(rng.uniform(0.0, 2000.0))) if utility == "exogenous" else Proportional(None)
    config = MarketConfig(rule, aggregation, mode, grid_spec)
    client = ClientSpec("fuzz", random_report(rng, form, grid_spec, J), reward_rate=float(log_uniform(rng, 10, 10000)))
    subs = [
        PlayerSubmission(f"p{k}", random_report(rng, form, grid_spec, J), float(log_uniform(rng, bounds.lo, bounds.hi)))
        for k in range(n_players)
    ]
    truth = random_report(rng, form, grid_spec, J)
    outcome = BeliefModel(truth, grid_spec, self_test=False).sample(rng, 1)[0]
    outcome = float(outcome) if form == "continuous" else int(outcome)
    return RandomSession(config, client, bounds, subs, outcome, form)


def _split(rng, total, parts, lo):
    return list(lo + (total - parts * lo) * rng.dirichlet(np.ones(parts)))


def exact_checks(rs: RandomSession, rng: np.random.Generator, seed=None) -> list[PropertyReport]:
    """All exact property checks on one random session."""
    session, settlement = rs.run()
    reports = [check_budget_balance(settlement, seed), check_wager_zero_sum(settlement, seed)]
    n = len(rs.submissions)
    reports.append(check_anonymity(session, rs.outcome, rng.permutation(n), seed))

    # sybil: duplicate one player's report as a coalition, then re-split three ways
    k = int(rng.integers(n))
    lo = rs.bounds.lo
    total = float(rng.uniform(3 * lo + 1.0, rs.bounds.hi))
    first, second = _split(rng, total, 2, lo)
    base_report = rs.submissions[k].report
    coalition_subs = [PlayerSubmission("s0", base_report, first), PlayerSubmission("s1", base_report, second)]
    others = [s for i, s in enumerate(rs.submissions) if i != k]
    sybil_session = _session_like(session, others + coalition_subs)
    reports.append(
        check_sybilproof(sybil_session, rs.outcome, ["s0", "s1"], _split(rng, first + second, 3, lo), seed)
    )

    j = int(rng.integers(n))
    m = rs.submissions[j].wager
    if m < rs.bounds.hi:
        higher = float(rng.uniform(m, rs.bounds.hi))
        if higher > m:
            reports.append(check_stimulant(session, rs.outcome, rs.submissions[j].player_id, higher, seed))
    return reports


def _exact_suite_worker(args):
    seed, index = args
    rng = make_rng((seed, index))
    rs = random_session(rng)
    return [r.as_dict() | {"session": index, "form": rs.form} for r in exact_checks(rs, rng, [seed, index])]


def run_exact_suite(n_sessions: int, seed: int, jobs: int = 1) -> list[dict]:
    """Exact checks on ``n_sessions`` random sessions; records in session order."""
    tasks = [(seed, i) for i in range(n_sessions)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_exact_suite_worker, tasks, chunksize=16))
    else:
        chunks = [_exact_suite_worker(t) for t in tasks]
    return [rec for chunk in chunks for rec in chunk]


# --- Monte Carlo environments -----------------------------------------------


@dataclass
class Environment:
    """A market template plus a belief for the player (or client) under study."""

    config: MarketConfig
    client: ClientSpec
    bounds: WagerBounds
    others: list
    wager: float
    belief: BeliefModel
    misreport: object


# a misreport counts as far from the belief when it loses at least this much
# expected oriented score under the belief
FAR_SCORE_GAP = 0.02


def _far_misreport(rng, rule, belief, form, grid_spec, J, attempts=200):
    for _ in range(attempts):
        candidate = random_report(rng, form, grid_spec, J)
        gap, _ = S.propriety_gap(rule, belief, candidate, 2000, rng.integers(2**63), grid_spec)
        if gap >= FAR_SCORE_GAP:
            return candidate
    raise RuntimeError("no misreport far enough from the belief")


def random_environment(rng: np.random.Generator, utility: str | None = None, form: str | None = None) -> Environment:
    grid_spec = D.GridSpec()
    rs = random_session(rng, form=form, utility=utility, n_players=int(rng.integers(1, 4)), grid_spec=grid_spec)
    J = rs.client.own_report.n_categories if rs.form == "categorical" else 5
    belief = BeliefModel(random_report(rng, rs.form, grid_spec, J), grid_spec)
    misreport = _far_misreport(rng, rs.config.scoring_rule, belief.belief, rs.form, grid_spec, J)
    return Environment(
        rs.config,
        rs.client,
        rs.bounds,
        rs.submissions,
        float(log_uniform(rng, rs.bounds.lo, rs.bounds.hi)),
        belief,
        misreport,
    )


def _mc_worker(args):
    kind, seed, index, n_samples = args
    rng = make_rng((seed, index))
    if kind == "individual_rationality":
        env = random_environment(rng)
        rep = check_individual_rationality(
            env.config, env.client, env.bounds, env.others, env.wager, env.belief, n_samples, [seed, index, 1]
        )
    elif kind in ("conditional_truthfulness", "conditional_truthfulness_skill"):
        env = random_environment(rng)
        rep = check_conditional_truthfulness(
            env.config, env.client, env.bounds, env.others, env.wager, env.belief, env.misreport, n_samples,
            [seed, index, 2], skill_only=kind.endswith("_skill"),
        )
    elif kind == "client_truthfulness":
        env = random_environment(rng, utility="proportional")
        # players' reports are independent of the client's own report
        rep = check_client_truthfulness(
            env.config, env.client, env.bounds, env.others, env.belief, env.misreport, n_samples, [seed, index, 3]
        )
    else:
        raise ValueError(f"unknown Monte Carlo check {kind!r}")
    return rep.as_dict() | {"environment": index}


MC_KINDS = (
    "individual_rationality",
    "client_truthfulness",
    "conditional_truthfulness",
    "conditional_truthfulness_skill",
)


def run_monte_carlo_suite(kind: str, n_envs: int, n_samples: int, seed: int, jobs: int = 1) -> list[dict]:
    tasks = [(kind, seed, i, n_samples) for i in range(n_envs)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_mc_worker, tasks))
    return [_mc_worker(t) for t in tasks]
