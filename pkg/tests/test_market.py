import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wagermarket import dist as D
from wagermarket.errors import (
    DuplicatePlayer,
    FormMismatch,
    InvalidConfig,
    NoSubmissions,
    SessionClosed,
    SessionNotClosed,
    WagerOutOfBounds,
)
from wagermarket.market import (
    ClientSpec,
    Exogenous,
    MarketConfig,
    MarketSession,
    PlayerSubmission,
    Proportional,
    WagerBounds,
    run_session,
    settle_scores,
    utility_pool,
    utility_shares,
    wager_payoff,
)
from wagermarket.scoring import ScoringRule

SCORES = np.array([0.9430, 0.8450, 0.4830])


class TestWagerPayoff:
    def test_equal_wagers(self):
        pi = wager_payoff(SCORES, [100, 100, 100])
        np.testing.assert_allclose(pi - 100, [18.60, 8.80, -27.40], atol=1e-9)

    def test_sybil_split_wagers(self):
        pi = wager_payoff([0.943, 0.845, 0.845], [100, 40, 60])
        np.testing.assert_allclose(pi - [100, 40, 60], [4.90, -1.96, -2.94], atol=1e-9)

    def test_equal_scores_zero_profit(self):
        m = np.array([3.0, 50.0, 7.0])
        np.testing.assert_array_equal(wager_payoff([0.6, 0.6, 0.6], m), m)

    @settings(max_examples=100, deadline=None)
    @given(
        st.lists(st.tuples(st.floats(0, 1), st.floats(1, 1000)), min_size=1, max_size=8)
    )
    def test_zero_sum(self, players):
        s = np.array([p[0] for p in players])
        m = np.array([p[1] for p in players])
        pi = wager_payoff(s, m)
        assert abs(pi.sum() - m.sum()) <= 1e-9 * m.sum()
        assert np.all(pi >= 0)


class TestUtility:
    def test_proportional(self):
        assert utility_pool(0.867, 0.5, Proportional(1000)) == pytest.approx(367.0)

    def test_no_improvement(self):
        assert utility_pool(0.4, 0.5, Proportional(1000)) == 0
        assert utility_pool(0.4, 0.5, Exogenous(1000)) == 0

    def test_exogenous(self):
        assert utility_pool(0.867, 0.5, Exogenous(1000)) == 1000

    def test_shares_equal_wagers(self):
        np.testing.assert_allclose(utility_shares(SCORES, [100] * 3, 0.5, 1000), [527.40, 472.60, 0], atol=0.005)

    def test_shares_sybil(self):
        got = utility_shares([0.943, 0.845, 0.845], [100, 40, 60], 0.5, 1000)
        np.testing.assert_allclose(got, [527.40, 189.04, 283.56], atol=0.005)

    def test_nobody_eligible(self):
        s = settle_scores(["a", "b"], [0.3, 0.5], [10, 10], 0.5, 1000.0)
        np.testing.assert_array_equal(s.utility_shares, [0, 0])
        assert s.utility_refund == 1000.0
        assert s.utility_distributed == 0.0

    def test_tie_with_client_is_not_eligible(self):
        s = settle_scores(["a", "b"], [0.5, 0.7], [10, 10], 0.5, 100.0)
        assert list(s.eligible) == [False, True]
        assert s.utility_shares[1] == 100.0


class TestSettlement:
    def test_published_profits(self):
        s = settle_scores(["P1", "P2", "P3"], SCORES, [100] * 3, 0.5, 1000.0, 0.867)
        np.testing.assert_allclose(s.profits, [546.00, 481.39, -27.40], atol=0.01)

    def test_two_player_and_split(self):
        a = settle_scores(["1", "2"], SCORES[:2], [100, 100], 0.5, 1000.0)
        b = settle_scores(["1", "2a", "2b"], [0.943, 0.845, 0.845], [100, 40, 60], 0.5, 1000.0)
        np.testing.assert_allclose(a.profits, [532.30, 467.69], atol=0.01)
        np.testing.assert_allclose(b.profits, [532.30, 187.07, 280.61], atol=0.02)
        assert b.profits[1:].sum() == pytest.approx(a.profits[1], abs=1e-9)

    def test_single_player_without_utility(self):
        s = settle_scores(["solo"], [0.7], [42.0], 0.9, 0.0)
        assert s.total_payoffs[0] == 42.0


def _config(**kw):
    base = dict(scoring_rule=ScoringRule.ORIENTED_CRPS, aggregation="qa", utility=Exogenous(1000))
    base.update(kw)
    return MarketConfig(**base)


class TestSession:
    client = ClientSpec("t", fixed_score=0.5)

    def test_open_empty(self):
        s = MarketSession(_config(), self.client, WagerBounds(1, 500))
        assert s.submissions == [] and not s.closed

    def test_negative_pool_rejected(self):
        with pytest.raises(InvalidConfig):
            MarketSession(_config(utility=Exogenous(-5)), self.client, WagerBounds(1, 500))

    def test_wager_cap(self):
        s = MarketSession(_config(), self.client, WagerBounds(10, 500))
        s.submit(PlayerSubmission("a", D.Beta(2, 3), 500))
        with pytest.raises(WagerOutOfBounds):
            s.submit(PlayerSubmission("b", D.Beta(2, 3), 501))
        with pytest.raises(DuplicatePlayer):
            s.submit(PlayerSubmission("a", D.Beta(2, 3), 50))

    def test_form_mismatch(self):
        s = MarketSession(_config(), self.client, WagerBounds(1, 500))
        s.submit(PlayerSubmission("a", D.Beta(2, 3), 10))
        with pytest.raises(FormMismatch):
            s.submit(PlayerSubmission("b", D.Binary(0.3), 10))

    def test_lifecycle_errors(self):
        s = MarketSession(_config(), self.client, WagerBounds(1, 500))
        with pytest.raises(NoSubmissions):
            s.deliver_aggregate()
        s.submit(PlayerSubmission("a", D.Beta(2, 3), 10))
        with pytest.raises(SessionNotClosed):
            s.settle(0.4)
        s.deliver_aggregate()
        with pytest.raises(SessionClosed):
            s.submit(PlayerSubmission("b", D.Beta(2, 3), 10))

    def test_single_submission_aggregate_is_that_report(self):
        s = MarketSession(_config(), self.client, WagerBounds(1, 500))
        s.submit(PlayerSubmission("a", D.Beta(2, 3), 10))
        agg = s.deliver_aggregate()
        np.testing.assert_allclose(agg.values, D.to_quantile_grid(D.Beta(2, 3)).values, atol=1e-15)

    def test_proportional_uses_client_rate(self):
        client = ClientSpec("t", own_report=D.Beta(1, 1), reward_rate=250.0)
        cfg = _config(utility=Proportional())
        subs = [PlayerSubmission("a", D.Beta(8, 2), 10)]
        _, st_ = run_session(cfg, client, WagerBounds(1, 100), subs, 0.85)
        assert st_.utility_pool == pytest.approx(250.0 * (st_.aggregate_score - st_.client_score))

    def test_vectorized_settlement_matches_single(self):
        client = ClientSpec("t", own_report=D.Beta(1, 1), reward_rate=100.0)
        cfg = _config(utility=Proportional(), aggregation="lop")
        subs = [PlayerSubmission("a", D.Beta(8, 2), 10), PlayerSubmission("b", D.Beta(2, 2), 30)]
        session, _ = run_session(cfg, client, WagerBounds(1, 100), subs, 0.5)
        outcomes = np.array([0.1, 0.5, 0.93])
        payoffs, U = session.payoffs_for_outcomes(outcomes)
        for k, w in enumerate(outcomes):
            st_ = session.settle(float(w))
            np.testing.assert_allclose(payoffs[:, k], st_.total_payoffs, rtol=0, atol=1e-12)
            assert U[k] == pytest.approx(st_.utility_pool, abs=1e-12)
