"""Command-line front end.

Exit codes: 0 success, 1 validation error, 2 property or expectation
failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import yaml

from . import dist as D
from . import properties as P
from .errors import MarketError
from .plotdata import KINDS, emit_plot_data
from .scenario import HourlyResult, Scenario, build_session, check_expectations, parse_scenario, run
from .scoring import ScoringRule, score

EXIT_OK, EXIT_INVALID, EXIT_FAILED, EXIT_IO = 0, 1, 2, 3

# display precision by column role
CURRENCY, SCORE, REAL = "currency", "score", "real"
_FORMATS = {CURRENCY: "{:.2f}", SCORE: "{:.4f}", REAL: "{:.6g}"}


class Table:
    """Delimited output whose numeric columns are rounded for display.

    With ``full_precision`` every rounded column gains a ``<name>_full``
    companion holding the exact double.
    """

    def __init__(self, columns, full_precision=False):
        self.columns = list(columns)  # (name, role or None)
        self.full = full_precision
        self.rows = []
        self.comments = []

    def add(self, *values):
        self.rows.append(values)

    def render(self) -> str:
        buf = io.StringIO()
        for line in self.comments:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        header = []
        for name, role in self.columns:
            header.append(name)
            if self.full and role is not None:
                header.append(f"{name}_full")
        w.writerow(header)
        for row in self.rows:
            out = []
            for (name, role), v in zip(self.columns, row):
                if role is None or v is None or isinstance(v, (str, bool)):
                    out.append("" if v is None else v)
                    if self.full and role is not None:
                        out.append("" if v is None else v)
                    continue
                out.append(_FORMATS[role].format(float(v)))
                if self.full:
                    out.append(repr(float(v)))
            w.writerow(out)
        return buf.getvalue()


def _emit(args, text: str):
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load(args) -> Scenario:
    return parse_scenario(args.scenario)


def _grid_override(args):
    return D.GridSpec(args.grid_size) if args.grid_size else None


def _apply_grid(sc: Scenario, args) -> Scenario:
    spec = _grid_override(args)
    if spec is not None:
        sc.config = replace(sc.config, grid_spec=spec)
    return sc


def _inline(text: str, what: str):
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise MarketError(f"cannot parse {what}: {exc}") from None


# --- subcommands --------------------------------------------------------------


def cmd_score(args) -> int:
    rule = ScoringRule(args.rule)
    data = _inline(args.report, "report")
    if not isinstance(data, dict):
        raise MarketError("report must be a mapping such as {type: beta, alpha: 2, beta: 5}")
    try:
        report = D.report_from_dict(data)
    except KeyError as exc:
        raise MarketError(f"report is missing field {exc.args[0]!r} (YAML needs a space after each colon)") from None
    outcome = _inline(args.outcome, "outcome")
    spec = _grid_override(args) or D.GridSpec()
    value = score(rule, report, outcome, spec)
    table = Table([("rule", None), ("score", SCORE), ("positively_oriented", None)], args.full_precision)
    table.add(rule.value, value.value, not rule.negatively_oriented)
    _emit(args, table.render())
    return EXIT_OK


def cmd_aggregate(args) -> int:
    sc = _apply_grid(_load(args), args)
    if sc.score_only or sc.hourly is not None:
        raise MarketError("aggregate needs a report-based single-outcome scenario")
    agg = build_session(sc).aggregate
    if isinstance(agg, D.QuantileGrid):
        table = Table([("tau", REAL), ("value", REAL)], args.full_precision)
        for t, v in zip(agg.taus, agg.values):
            table.add(t, v)
    elif isinstance(agg, D.Categorical):
        table = Table([("category", None), ("probability", SCORE)], args.full_precision)
        for k, p in enumerate(agg.probs, start=1):
            table.add(k, p)
    else:
        table = Table([("outcome", None), ("probability", SCORE)], args.full_precision)
        table.add(1, agg.p)
    table.comments.append(f"scenario: {sc.name}")
    table.comments.append(f"aggregation: {sc.config.aggregation.value}")
    _emit(args, table.render())
    return EXIT_OK


def _expectation_exit(sc, result) -> int:
    problems = check_expectations(sc, result)
    for p in problems:
        print(f"expectation failed: {p}", file=sys.stderr)
    return EXIT_FAILED if problems else EXIT_OK


def cmd_settle(args) -> int:
    sc = _apply_grid(_load(args), args)
    if sc.hourly is not None:
        raise MarketError("hourly scenarios run with 'simulate'")
    s = run(sc)
    table = Table(
        [
            ("player_id", None), ("wager", CURRENCY), ("score", SCORE), ("eligible", None),
            ("wager_payoff", CURRENCY), ("utility_share", CURRENCY), ("payoff", CURRENCY), ("profit", CURRENCY),
        ],
        args.full_precision,
    )
    for i, pid in enumerate(s.player_ids):
        table.add(
            pid, s.wagers[i], s.player_scores[i], bool(s.eligible[i]),
            s.wager_payoffs[i], s.utility_shares[i], s.total_payoffs[i], s.profits[i],
        )
    table.comments += [
        f"scenario: {sc.name}",
        f"client_score: {s.client_score:.4f}",
        "aggregate_score: " + ("n/a" if s.aggregate_score is None else f"{s.aggregate_score:.4f}"),
        f"utility_pool: {s.utility_pool:.2f}",
        f"utility_refund: {s.utility_refund:.2f}",
    ]
    _emit(args, table.render())
    return _expectation_exit(sc, s)


def cmd_simulate(args) -> int:
    sc = _load(args)
    if sc.hourly is None:
        raise MarketError("simulate needs a scenario with an hourly block")
    res: HourlyResult = run(sc)
    table = Table(
        [
            ("hour", None), ("player_id", None), ("wager", CURRENCY), ("score", SCORE),
            ("aggregate_score", SCORE), ("utility_pool", CURRENCY), ("payoff", CURRENCY), ("profit", CURRENCY),
        ],
        args.full_precision,
    )
    for hour, s in zip(res.hours, res.settlements):
        for i, pid in enumerate(s.player_ids):
            table.add(
                hour, pid, s.wagers[i], s.player_scores[i], s.aggregate_score,
                s.utility_pool, s.total_payoffs[i], s.profits[i],
            )
    table.comments.append(f"scenario: {sc.name}")
    table.comments.append(f"total_pool: {res.total_pool:.2f}")
    for pid, pay, share in zip(res.player_ids, res.total_payoffs, res.payoff_shares):
        table.comments.append(f"total {pid}: payoff {pay:.2f} share {share:.4f}")
    _emit(args, table.render())
    return _expectation_exit(sc, res)


def _scenario_checks(sc: Scenario, seed) -> list[dict]:
    s = run(sc)
    reports = [P.check_budget_balance(s, seed), P.check_wager_zero_sum(s, seed)]
    if not sc.score_only:
        session = build_session(sc)
        n = len(sc.submissions)
        reports.append(P.check_anonymity(session, sc.outcome, list(range(n))[::-1], seed))
        first = sc.submissions[0]
        half = first.wager / 2
        if sc.bounds.contains(half):
            reports.append(P.check_sybilproof(session, sc.outcome, [first.player_id], [half, first.wager - half], seed))
        for sub in sc.submissions:
            higher = min(sc.bounds.hi, 2 * sub.wager)
            if higher > sub.wager:
                reports.append(P.check_stimulant(session, sc.outcome, sub.player_id, higher, seed))
    return [r.as_dict() | {"scenario": sc.name} for r in reports]


def cmd_check_properties(args) -> int:
    if args.scenario:
        sc = _apply_grid(_load(args), args)
        if sc.hourly is not None:
            raise MarketError("property checks run on single-outcome scenarios")
        records = _scenario_checks(sc, args.seed)
    elif args.suite == "exact":
        records = P.run_exact_suite(args.sessions, args.seed, args.jobs)
    else:
        records = P.run_monte_carlo_suite(args.suite, args.sessions, args.samples, args.seed, args.jobs)
    text = "".join(json.dumps(_jsonable(r), sort_keys=True) + "\n" for r in records)
    _emit(args, text)
    failed = sum(r["verdict"] != "pass" for r in records)
    print(f"{len(records) - failed}/{len(records)} checks passed", file=sys.stderr)
    return EXIT_FAILED if failed else EXIT_OK


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def cmd_emit_plot_data(args) -> int:
    sc = _load(args)
    header, rows = emit_plot_data(
        sc, args.kind, n_points=args.points, n_mesh=args.mesh, jobs=args.jobs, grid_spec=_grid_override(args)
    )
    if args.kind in ("density", "cdf"):
        roles = [REAL, None, REAL]
    elif args.kind == "scores":
        roles = [None, None, SCORE]
    else:
        roles = [CURRENCY, CURRENCY, None, SCORE]
    table = Table(list(zip(header, roles)), args.full_precision)
    for row in rows:
        table.add(*row)
    _emit(args, table.render())
    return EXIT_OK


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=20240601, help="master seed for random suites")
    common.add_argument("--grid-size", type=int, default=None, help="tau levels for continuous reports")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for suites and meshes")
    common.add_argument("--full-precision", action="store_true", help="add exact-value columns")
    common.add_argument("--output", default=None, help="write to this file instead of stdout")

    parser = argparse.ArgumentParser(
        prog="wagermarket", description="Wagering forecast market: scoring, aggregation, settlement, checks."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", parents=[common], help="score one report against an outcome")
    p.add_argument("--rule", required=True, choices=[r.value for r in ScoringRule])
    p.add_argument("--report", required=True, help="inline YAML/JSON report, e.g. '{type: beta, alpha: 2, beta: 5}'")
    p.add_argument("--outcome", required=True, help="observed value (category index is 1-based)")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("aggregate", parents=[common], help="print the aggregate of a scenario's reports")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("settle", parents=[common], help="settle a single-outcome scenario")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_settle)

    p = sub.add_parser("simulate", parents=[common], help="run an hourly case-study scenario")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check-properties", parents=[common], help="run property checks (JSON lines)")
    p.add_argument("scenario", nargs="?", default=None, help="check one scenario instead of a random suite")
    p.add_argument("--suite", default="exact", choices=("exact",) + P.MC_KINDS)
    p.add_argument("--sessions", type=int, default=100, help="random sessions or environments")
    p.add_argument("--samples", type=int, default=50000, help="Monte Carlo samples per environment")
    p.set_defaults(func=cmd_check_properties)

    p = sub.add_parser("emit-plot-data", parents=[common], help="tabular data for figures")
    p.add_argument("scenario")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--points", type=int, default=201, help="x grid size for density and cdf")
    p.add_argument("--mesh", type=int, default=10, help="wager mesh size per axis")
    p.set_defaults(func=cmd_emit_plot_data)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (MarketError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
