"""Scenario files: parsing, serialization and runs.

A scenario is a YAML mapping with explicit keys::

    name: table1a
    market:
      scoring_rule: oriented_crps
      aggregation: qa
      utility: {mode: exogenous, amount: 1000}
      grid_size: 999
    client: {task_id: demo, score: 0.5}
    bounds: {lo: 1, hi: 1000}
    aggregate_score: 0.867
    submissions:
      - {player_id: P1, wager: 100, score: 0.943}
    outcome: 0.8
    expect: {profits: [546.00], tolerance: 0.01}

Submissions carry either a ``report`` (scored against ``outcome``) or a
precomputed ``score``. Score-only scenarios need ``aggregate_score`` and a
client ``score``. An ``hourly`` block switches to case-study mode, where
per-hour quantile forecasts and observations come from CSV files.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import dist as D
from .aggregate import AggregationMethod
from .errors import MarketError, ParseError
from .market import (
    ClientSpec,
    Exogenous,
    MarketConfig,
    MarketSession,
    PlayerSubmission,
    Proportional,
    Settlement,
    WagerBounds,
    settle_scores,
    utility_pool,
)
from .scoring import ScoringRule

FORECAST_COLUMNS = ("player_id", "hour", "tau", "value")
OBSERVATION_COLUMNS = ("hour", "observation")


@dataclass(frozen=True)
class SubmissionSpec:
    player_id: str
    wager: float
    report: object = None
    score: float | None = None


@dataclass(frozen=True)
class HourlySpec:
    """CSV sources for case-study mode.

    ``client_id`` names a forecaster in the forecasts file whose quantiles
    serve as the client's own report; otherwise the client's fixed score
    applies every hour.
    """

    forecasts: str
    observations: str
    client_id: str | None = None


@dataclass(frozen=True)
class Expectation:
    profits: tuple | None = None
    scores: tuple | None = None
    aggregate_score: float | None = None
    tolerance: float = 0.01


@dataclass
class Scenario:
    name: str
    config: MarketConfig
    client: ClientSpec
    bounds: WagerBounds
    submissions: list
    outcome: object = None
    aggregate_score: float | None = None
    hourly: HourlySpec | None = None
    expect: Expectation | None = None
    base_dir: Path = field(default=Path("."), compare=False)

    @property
    def score_only(self) -> bool:
        return all(s.report is None for s in self.submissions)


# --- YAML with source lines ---------------------------------------------------


def _line_index(node, path="", out=None) -> dict:
    """Map dotted field paths to 1-based source lines."""
    out = {} if out is None else out
    out.setdefault(path, node.start_mark.line + 1)
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            sub = f"{path}.{key.value}" if path else str(key.value)
            out[sub] = key.start_mark.line + 1
            _line_index(value, sub, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, item in enumerate(node.value):
            sub = f"{path}[{i}]"
            out[sub] = item.start_mark.line + 1
            _line_index(item, sub, out)
    return out


class _Reader:
    """Typed access to a parsed mapping that reports failures by field path."""

    def __init__(self, lines: dict):
        self.lines = lines

    def error(self, path: str, reason: str) -> ParseError:
        probe = path
        while probe and probe not in self.lines:
            probe = probe.rsplit(".", 1)[0] if "." in probe else ""
        return ParseError(path, reason, self.lines.get(probe))

    def mapping(self, data, path, required=True) -> dict:
        if data is None and not required:
            return {}
        if not isinstance(data, dict):
            raise self.error(path, "expected a mapping")
        return data

    def get(self, data: dict, key: str, path: str, default=..., kind=None):
        full = f"{path}.{key}" if path else key
        if key not in data or data[key] is None:
            if default is ...:
                raise self.error(full, "missing required field")
            return default
        value = data[key]
        if kind is float:
            return self.number(value, full)
        if kind is str and not isinstance(value, str):
            return str(value)
        return value

    def number(self, value, path) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.error(path, "expected a number")
        value = float(value)
        if not math.isfinite(value):
            raise self.error(path, "must be finite")
        return value

    def check_keys(self, data: dict, allowed, path):
        extra = sorted(set(data) - set(allowed))
        if extra:
            where = f"{path}.{extra[0]}" if path else str(extra[0])
            raise self.error(where, f"unknown field (allowed: {', '.join(sorted(allowed))})")


def _parse_report(r: _Reader, data, path):
    data = r.mapping(data, path)
    try:
        report = D.report_from_dict(data)
    except KeyError as exc:
        raise r.error(f"{path}.{exc.args[0]}", "missing required field") from None
    except (TypeError, ValueError) as exc:
        raise r.error(path, str(exc)) from None
    issues = D.validate(report)
    if issues:
        raise r.error(path, "; ".join(f"{code}: {msg}" for code, msg in issues))
    return report


def _parse_utility(r: _Reader, data, path):
    data = r.mapping(data, path)
    r.check_keys(data, {"mode", "rate", "amount"}, path)
    mode = r.get(data, "mode", path, kind=str)
    if mode == "proportional":
        rate = r.get(data, "rate", path, None, float)
        if rate is not None and rate <= 0:
            raise r.error(f"{path}.rate", "must be positive")
        return Proportional(rate)
    if mode == "exogenous":
        amount = r.get(data, "amount", path, kind=float)
        if amount < 0:
            raise r.error(f"{path}.amount", "must be non-negative")
        return Exogenous(amount)
    raise r.error(f"{path}.mode", "must be 'proportional' or 'exogenous'")


def _parse_market(r: _Reader, data):
    data = r.mapping(data, "market")
    r.check_keys(data, {"scoring_rule", "aggregation", "utility", "grid_size"}, "market")
    rule = r.get(data, "scoring_rule", "market", "oriented_crps", str)
    try:
        rule = ScoringRule(rule)
    except ValueError:
        raise r.error("market.scoring_rule", f"unknown scoring rule {rule!r}") from None
    method = r.get(data, "aggregation", "market", "qa", str)
    try:
        method = AggregationMethod(method)
    except ValueError:
        raise r.error("market.aggregation", f"unknown aggregation {method!r}") from None
    utility = _parse_utility(r, r.get(data, "utility", "market"), "market.utility")
    size = r.get(data, "grid_size", "market", 999)
    if isinstance(size, bool) or not isinstance(size, int) or size < 2:
        raise r.error("market.grid_size", "must be an integer >= 2")
    config = MarketConfig(rule, method, utility, D.GridSpec(size))
    try:
        config.validate()
    except MarketError as exc:
        raise r.error("market", str(exc)) from None
    return config


def _parse_client(r: _Reader, data):
    data = r.mapping(data, "client")
    r.check_keys(data, {"task_id", "report", "score", "reward_rate"}, "client")
    report = data.get("report")
    report = _parse_report(r, report, "client.report") if report is not None else None
    score = r.get(data, "score", "client", None, float)
    if score is not None and not 0 <= score <= 1:
        raise r.error("client.score", "must lie in [0, 1]")
    if report is None and score is None:
        raise r.error("client", "needs a report or a score")
    rate = r.get(data, "reward_rate", "client", 1.0, float)
    if rate <= 0:
        raise r.error("client.reward_rate", "must be positive")
    return ClientSpec(str(r.get(data, "task_id", "client", "task")), report, rate, score)


def _parse_submission(r: _Reader, data, path, need_report: bool):
    data = r.mapping(data, path)
    r.check_keys(data, {"player_id", "wager", "report", "score"}, path)
    pid = str(r.get(data, "player_id", path))
    wager = r.get(data, "wager", path, kind=float)
    if wager <= 0:
        raise r.error(f"{path}.wager", "must be positive")
    report = data.get("report")
    report = _parse_report(r, report, f"{path}.report") if report is not None else None
    score = r.get(data, "score", path, None, float)
    if score is not None and not 0 <= score <= 1:
        raise r.error(f"{path}.score", "must lie in [0, 1]")
    if need_report and report is None:
        raise r.error(f"{path}.report", "missing required field")
    return SubmissionSpec(pid, wager, report, score)


def _parse_outcome(r: _Reader, value):
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, int):
        return value
    return r.number(value, "outcome")


def _parse_expect(r: _Reader, data):
    data = r.mapping(data, "expect")
    r.check_keys(data, {"profits", "scores", "aggregate_score", "tolerance"}, "expect")

    def vector(key):
        value = data.get(key)
        if value is None:
            return None
        if not isinstance(value, list):
            raise r.error(f"expect.{key}", "expected a list of numbers")
        return tuple(r.number(v, f"expect.{key}[{i}]") for i, v in enumerate(value))

    tol = r.get(data, "tolerance", "expect", 0.01, float)
    if tol < 0:
        raise r.error("expect.tolerance", "must be non-negative")
    return Expectation(
        vector("profits"), vector("scores"), r.get(data, "aggregate_score", "expect", None, float), tol
    )


def _parse_hourly(r: _Reader, data):
    data = r.mapping(data, "hourly")
    r.check_keys(data, {"forecasts", "observations", "client_id"}, "hourly")
    cid = r.get(data, "client_id", "hourly", None, str)
    return HourlySpec(
        str(r.get(data, "forecasts", "hourly")), str(r.get(data, "observations", "hourly")), cid
    )


TOP_KEYS = {
    "name", "market", "client", "bounds", "submissions", "outcome",
    "aggregate_score", "hourly", "expect",
}


def parse_scenario_text(text: str, base_dir: Path | str = ".") -> Scenario:
    """Parse scenario YAML; every failure names the offending field and line."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ParseError("<document>", str(exc).splitlines()[0], mark.line + 1 if mark else None) from None
    r = _Reader(_line_index(node) if node is not None else {})
    data = r.mapping(data, "<document>")
    r.check_keys(data, TOP_KEYS, "")
    config = _parse_market(r, data.get("market", {}))
    client = _parse_client(r, r.get(data, "client", ""))
    b = r.mapping(r.get(data, "bounds", ""), "bounds")
    r.check_keys(b, {"lo", "hi"}, "bounds")
    lo, hi = r.get(b, "lo", "bounds", kind=float), r.get(b, "hi", "bounds", kind=float)
    if not 0 < lo <= hi:
        raise r.error("bounds", "need 0 < lo <= hi")
    bounds = WagerBounds(lo, hi)
    hourly = _parse_hourly(r, data["hourly"]) if data.get("hourly") is not None else None

    raw_subs = r.get(data, "submissions", "")
    if not isinstance(raw_subs, list) or not raw_subs:
        raise r.error("submissions", "expected a non-empty list")
    subs = [_parse_submission(r, s, f"submissions[{i}]", False) for i, s in enumerate(raw_subs)]
    seen = set()
    for i, s in enumerate(subs):
        if s.player_id in seen:
            raise r.error(f"submissions[{i}].player_id", f"duplicate player {s.player_id!r}")
        seen.add(s.player_id)
        if not bounds.contains(s.wager):
            raise r.error(f"submissions[{i}].wager", f"outside bounds [{lo}, {hi}]")
    with_report = [s.report is not None for s in subs]
    if hourly is None and any(with_report) and not all(with_report):
        raise r.error("submissions", "either every submission has a report or none does")
    if hourly is None and not any(with_report):
        for i, s in enumerate(subs):
            if s.score is None:
                raise r.error(f"submissions[{i}]", "needs a report or a score")
        if client.fixed_score is None:
            raise r.error("client.score", "score-only scenarios need the client's score")
        if data.get("aggregate_score") is None:
            raise r.error("aggregate_score", "score-only scenarios need the aggregate's score")
    if hourly is None and all(with_report):
        forms = {D.form_of(s.report) for s in subs}
        if len(forms) > 1:
            raise r.error("submissions", f"mixed report forms {sorted(forms)}")
        form = forms.pop()
        if form not in config.scoring_rule.forms:
            raise r.error("market.scoring_rule", f"cannot score {form} reports")
        if config.aggregation is AggregationMethod.QA and form != "continuous":
            raise r.error("market.aggregation", "quantile averaging needs continuous reports")
        if client.own_report is not None and D.form_of(client.own_report) != form:
            raise r.error("client.report", f"client report must be {form}")

    agg = r.get(data, "aggregate_score", "", None, float)
    if agg is not None and not 0 <= agg <= 1:
        raise r.error("aggregate_score", "must lie in [0, 1]")
    outcome = _parse_outcome(r, data["outcome"]) if data.get("outcome") is not None else None
    expect = _parse_expect(r, data["expect"]) if data.get("expect") is not None else None
    return Scenario(
        name=str(data.get("name", "scenario")),
        config=config,
        client=client,
        bounds=bounds,
        submissions=subs,
        outcome=outcome,
        aggregate_score=agg,
        hourly=hourly,
        expect=expect,
        base_dir=Path(base_dir),
    )


def parse_scenario(path) -> Scenario:
    """Read and validate a scenario file. I/O problems surface as ``OSError``."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return parse_scenario_text(text, path.parent)


def scenario_to_dict(sc: Scenario) -> dict:
    cfg = sc.config
    util = cfg.utility
    if isinstance(util, Exogenous):
        utility = {"mode": "exogenous", "amount": float(util.amount)}
    else:
        utility = {"mode": "proportional"}
        if util.rate is not None:
            utility["rate"] = float(util.rate)
    client = {"task_id": sc.client.task_id, "reward_rate": float(sc.client.reward_rate)}
    if sc.client.own_report is not None:
        client["report"] = D.report_to_dict(sc.client.own_report)
    if sc.client.fixed_score is not None:
        client["score"] = float(sc.client.fixed_score)
    subs = []
    for s in sc.submissions:
        item = {"player_id": s.player_id, "wager": float(s.wager)}
        if s.report is not None:
            item["report"] = D.report_to_dict(s.report)
        if s.score is not None:
            item["score"] = float(s.score)
        subs.append(item)
    out = {
        "name": sc.name,
        "market": {
            "scoring_rule": cfg.scoring_rule.value,
            "aggregation": cfg.aggregation.value,
            "utility": utility,
            "grid_size": int(cfg.grid_spec.size),
        },
        "client": client,
        "bounds": {"lo": float(sc.bounds.lo), "hi": float(sc.bounds.hi)},
        "submissions": subs,
    }
    if sc.outcome is not None:
        out["outcome"] = sc.outcome
    if sc.aggregate_score is not None:
        out["aggregate_score"] = float(sc.aggregate_score)
    if sc.hourly is not None:
        out["hourly"] = {"forecasts": sc.hourly.forecasts, "observations": sc.hourly.observations}
        if sc.hourly.client_id is not None:
            out["hourly"]["client_id"] = sc.hourly.client_id
    if sc.expect is not None:
        e = sc.expect
        out["expect"] = {"tolerance": float(e.tolerance)}
        if e.profits is not None:
            out["expect"]["profits"] = [float(v) for v in e.profits]
        if e.scores is not None:
            out["expect"]["scores"] = [float(v) for v in e.scores]
        if e.aggregate_score is not None:
            out["expect"]["aggregate_score"] = float(e.aggregate_score)
    return out


def serialize_scenario(sc: Scenario) -> str:
    """YAML text that :func:`parse_scenario_text` maps back to ``sc``."""
    return yaml.safe_dump(scenario_to_dict(sc), sort_keys=False, default_flow_style=None)


# --- case-study CSV ingestion --------------------------------------------------


@dataclass
class HourlyTable:
    """Per-player, per-hour quantile forecasts plus per-hour observations."""

    hours: tuple
    taus: np.ndarray
    forecasts: dict  # (player_id, hour) -> values on ``taus``
    observations: dict  # hour -> observation

    def grid(self, player_id, hour) -> D.QuantileGrid:
        return D.QuantileGrid(self.taus, self.forecasts[(player_id, hour)], support=(0.0, 1.0))


def _read_csv(path: Path, columns):
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in columns if c not in (reader.fieldnames or [])]
        if missing:
            raise ParseError(f"{path.name}", f"missing columns {missing}", 1)
        for lineno, row in enumerate(reader, start=2):
            yield lineno, row


def _csv_number(path, lineno, column, text, integer=False):
    try:
        value = int(text) if integer else float(text)
    except (TypeError, ValueError):
        raise ParseError(f"{path.name}:{column}", f"not a number: {text!r}", lineno) from None
    if not integer and not math.isfinite(value):
        raise ParseError(f"{path.name}:{column}", "must be finite", lineno)
    return value


def load_hourly_table(forecasts_path, observations_path, players) -> HourlyTable:
    """Read the long-format forecast CSV and the observation CSV.

    Every listed player needs a row for every (hour, tau) pair, with the
    same tau set everywhere; values and observations must lie in [0, 1].
    """
    fpath, opath = Path(forecasts_path), Path(observations_path)
    observations = {}
    for lineno, row in _read_csv(opath, OBSERVATION_COLUMNS):
        hour = _csv_number(opath, lineno, "hour", row["hour"], integer=True)
        obs = _csv_number(opath, lineno, "observation", row["observation"])
        if hour in observations:
            raise ParseError(f"{opath.name}:hour", f"duplicate hour {hour}", lineno)
        if not 0 <= obs <= 1:
            raise ParseError(f"{opath.name}:observation", "must lie in [0, 1]", lineno)
        observations[hour] = obs
    if not observations:
        raise ParseError(opath.name, "no observations")
    hours = tuple(sorted(observations))

    cells: dict = {}
    for lineno, row in _read_csv(fpath, FORECAST_COLUMNS):
        pid = row["player_id"]
        hour = _csv_number(fpath, lineno, "hour", row["hour"], integer=True)
        tau = _csv_number(fpath, lineno, "tau", row["tau"])
        value = _csv_number(fpath, lineno, "value", row["value"])
        if not 0 < tau < 1:
            raise ParseError(f"{fpath.name}:tau", "must lie in (0, 1)", lineno)
        if not 0 <= value <= 1:
            raise ParseError(f"{fpath.name}:value", "must lie in [0, 1]", lineno)
        if hour not in observations:
            raise ParseError(f"{fpath.name}:hour", f"hour {hour} has no observation", lineno)
        bucket = cells.setdefault((pid, hour), {})
        if tau in bucket:
            raise ParseError(f"{fpath.name}:tau", f"duplicate tau {tau} for {pid} hour {hour}", lineno)
        bucket[tau] = value

    taus = None
    forecasts = {}
    for pid in players:
        for hour in hours:
            bucket = cells.get((pid, hour))
            if bucket is None:
                raise ParseError(f"{fpath.name}[player_id={pid}, hour={hour}]", "missing forecast rows")
            t = np.array(sorted(bucket))
            if taus is None:
                taus = t
            elif t.shape != taus.shape or not np.array_equal(t, taus):
                raise ParseError(
                    f"{fpath.name}[player_id={pid}, hour={hour}]", "tau set differs from other rows"
                )
            values = np.array([bucket[k] for k in t])
            if np.any(np.diff(values) < 0):
                raise ParseError(f"{fpath.name}[player_id={pid}, hour={hour}]", "quantiles decrease")
            forecasts[(pid, hour)] = values
    return HourlyTable(hours, taus, forecasts, observations)


# --- runs -------------------------------------------------------------------


@dataclass
class HourlyResult:
    hours: tuple
    settlements: list
    player_ids: tuple

    @property
    def total_payoffs(self) -> np.ndarray:
        return np.sum([s.total_payoffs for s in self.settlements], axis=0)

    @property
    def total_pool(self) -> float:
        return math.fsum(float(np.sum(s.wagers)) + s.utility_distributed for s in self.settlements)

    @property
    def payoff_shares(self) -> np.ndarray:
        return self.total_payoffs / self.total_pool

    def as_dict(self) -> dict:
        return {
            "hours": [
                {"hour": h} | s.as_dict() for h, s in zip(self.hours, self.settlements)
            ],
            "totals": {
                "pool": self.total_pool,
                "players": [
                    {"player_id": pid, "payoff": float(p), "share": float(sh)}
                    for pid, p, sh in zip(self.player_ids, self.total_payoffs, self.payoff_shares)
                ],
            },
        }


def _with_wagers(sc: Scenario, wagers) -> list:
    if wagers is None:
        return sc.submissions
    return [SubmissionSpec(s.player_id, float(w), s.report, s.score) for s, w in zip(sc.submissions, wagers)]


def build_session(sc: Scenario, wagers=None, grid_spec: D.GridSpec | None = None) -> MarketSession:
    """A closed session holding the scenario's report submissions."""
    config = sc.config if grid_spec is None else MarketConfig(
        sc.config.scoring_rule, sc.config.aggregation, sc.config.utility, grid_spec
    )
    session = MarketSession(config, sc.client, sc.bounds)
    for s in _with_wagers(sc, wagers):
        session.submit(PlayerSubmission(s.player_id, s.report, s.wager))
    session.deliver_aggregate()
    return session


def run_single(sc: Scenario, wagers=None, grid_spec: D.GridSpec | None = None) -> Settlement:
    """Settle a single-outcome scenario, from reports or from given scores."""
    subs = _with_wagers(sc, wagers)
    if sc.score_only:
        session_rate = sc.client.reward_rate
        mode = sc.config.utility
        if isinstance(mode, Proportional) and mode.rate is None:
            mode = Proportional(session_rate)
        U = utility_pool(sc.aggregate_score, sc.client.fixed_score, mode)
        return settle_scores(
            [s.player_id for s in subs],
            [s.score for s in subs],
            [s.wager for s in subs],
            sc.client.fixed_score,
            float(U),
            sc.aggregate_score,
            sc.outcome,
        )
    if sc.outcome is None:
        raise ParseError("outcome", "report-based scenarios need an outcome to settle")
    return build_session(sc, wagers, grid_spec).settle(sc.outcome)


def load_table(sc: Scenario) -> HourlyTable:
    if sc.hourly is None:
        raise ParseError("hourly", "scenario has no hourly block")
    players = [s.player_id for s in sc.submissions]
    if sc.hourly.client_id is not None:
        players.append(sc.hourly.client_id)
    return load_hourly_table(
        sc.base_dir / sc.hourly.forecasts, sc.base_dir / sc.hourly.observations, players
    )


def run_hourly(sc: Scenario, table: HourlyTable | None = None, wagers=None) -> HourlyResult:
    """Settle every hour of a case-study scenario with fixed wagers."""
    table = table if table is not None else load_table(sc)
    subs = _with_wagers(sc, wagers)
    settlements = []
    for hour in table.hours:
        client = sc.client
        if sc.hourly.client_id is not None:
            client = ClientSpec(client.task_id, table.grid(sc.hourly.client_id, hour), client.reward_rate)
        session = MarketSession(sc.config, client, sc.bounds)
        for s in subs:
            session.submit(PlayerSubmission(s.player_id, table.grid(s.player_id, hour), s.wager))
        session.deliver_aggregate()
        settlements.append(session.settle(table.observations[hour]))
    return HourlyResult(table.hours, settlements, tuple(s.player_id for s in subs))


def run(sc: Scenario, grid_spec: D.GridSpec | None = None):
    """Single mode returns a Settlement; hourly mode an HourlyResult."""
    if sc.hourly is not None:
        return run_hourly(sc)
    return run_single(sc, grid_spec=grid_spec)


def check_expectations(sc: Scenario, result) -> list[str]:
    """Human-readable mismatches against the scenario's ``expect`` block."""
    e = sc.expect
    if e is None:
        return []
    if isinstance(result, HourlyResult):
        profits = result.total_payoffs - np.array([s.wager for s in sc.submissions]) * len(result.hours)
        scores, agg = None, None
    else:
        profits, scores, agg = result.profits, result.player_scores, result.aggregate_score
    problems = []

    def compare(label, got, want):
        if got is None:
            problems.append(f"{label}: not available for this run")
            return
        got = np.atleast_1d(np.asarray(got, dtype=float))
        want = np.atleast_1d(np.asarray(want, dtype=float))
        if got.shape != want.shape:
            problems.append(f"{label}: expected {want.size} values, got {got.size}")
            return
        for i, (g, w) in enumerate(zip(got, want)):
            if not abs(g - w) <= e.tolerance:
                problems.append(f"{label}[{i}]: got {g:.6f}, expected {w} +/- {e.tolerance}")

    if e.profits is not None:
        compare("profits", profits, e.profits)
    if e.scores is not None:
        compare("scores", scores, e.scores)
    if e.aggregate_score is not None:
        compare("aggregate_score", agg, e.aggregate_score)
    return problems
