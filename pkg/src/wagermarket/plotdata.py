"""Tabular data behind the figures: densities, scores and payoff-vs-wager grids.

Every kind produces a header plus rows with a fixed column order:

========================  =====================================
kind                      columns
========================  =====================================
``density``               x, series, value  (pdf)
``cdf``                   x, series, value
``scores``                hour, series, score
``payoff-vs-wager``       m1, m2, player, payoff_share
========================  =====================================

``series`` is a player id, ``aggregate`` or ``client``. Single-outcome
scenarios report ``hour`` as 0.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import dist as D
from .errors import UnknownKind
from .scenario import HourlyResult, Scenario, build_session, load_table, run_hourly, run_single

KINDS = ("density", "cdf", "scores", "payoff-vs-wager")
HEADERS = {
    "density": ("x", "series", "value"),
    "cdf": ("x", "series", "value"),
    "scores": ("hour", "series", "score"),
    "payoff-vs-wager": ("m1", "m2", "player", "payoff_share"),
}


def _continuous_series(sc: Scenario, grid_spec):
    if sc.hourly is not None or sc.score_only:
        raise UnknownKind("density and cdf data need a report-based single-outcome scenario")
    session = build_session(sc, grid_spec=grid_spec)
    if session.form != "continuous":
        raise UnknownKind("density and cdf data need continuous reports")
    spec = session.config.grid_spec
    series = [(s.player_id, D.to_quantile_grid(s.report, spec)) for s in session.submissions]
    series.append(("aggregate", D.to_quantile_grid(session.aggregate, spec)))
    if sc.client.own_report is not None:
        series.append(("client", D.to_quantile_grid(sc.client.own_report, spec)))
    return series


def _x_grid(series, n_points):
    lo = min(g.values[0] for _, g in series)
    hi = max(g.values[-1] for _, g in series)
    supports = [g.support for _, g in series if g.support is not None]
    if len(supports) == len(series):
        lo = min(lo, min(s[0] for s in supports))
        hi = max(hi, max(s[1] for s in supports))
    if hi <= lo:
        hi = lo + 1.0
    return np.linspace(lo, hi, n_points)


def density_rows(sc: Scenario, n_points: int = 201, grid_spec=None):
    """pdf by central differences of each grid CDF on a uniform x grid."""
    series = _continuous_series(sc, grid_spec)
    x = _x_grid(series, n_points)
    h = x[1] - x[0]
    rows = []
    for name, grid in series:
        F = lambda t: np.asarray(D.cdf_eval(grid, t), dtype=float)  # noqa: E731
        pdf = (F(x + h / 2) - F(x - h / 2)) / h
        rows.extend((float(xi), name, float(v)) for xi, v in zip(x, pdf))
    return rows


def cdf_rows(sc: Scenario, n_points: int = 201, grid_spec=None):
    series = _continuous_series(sc, grid_spec)
    x = _x_grid(series, n_points)
    rows = []
    for name, grid in series:
        F = np.asarray(D.cdf_eval(grid, x), dtype=float)
        rows.extend((float(xi), name, float(v)) for xi, v in zip(x, F))
    return rows


def score_rows(sc: Scenario, result=None, grid_spec=None):
    if result is None:
        result = run_hourly(sc) if sc.hourly is not None else run_single(sc, grid_spec=grid_spec)
    if isinstance(result, HourlyResult):
        pairs = list(zip(result.hours, result.settlements))
    else:
        pairs = [(0, result)]
    rows = []
    for hour, s in pairs:
        rows.extend((int(hour), pid, float(v)) for pid, v in zip(s.player_ids, s.player_scores))
        if s.aggregate_score is not None:
            rows.append((int(hour), "aggregate", float(s.aggregate_score)))
        rows.append((int(hour), "client", float(s.client_score)))
    return rows


def _mesh_point(args):
    sc, table, wagers, grid_spec = args
    if sc.hourly is not None:
        res = run_hourly(sc, table, wagers)
        return res.payoff_shares
    s = run_single(sc, wagers, grid_spec)
    return s.total_payoffs / (float(np.sum(s.wagers)) + s.utility_distributed)


def payoff_mesh_rows(sc: Scenario, n_mesh: int = 10, jobs: int = 1, grid_spec=None):
    """Payoff share of each player as the first two wagers sweep the bounds.

    Shares are total payoff over the money pool (wagers plus distributed
    utility), summed over hours in case-study mode. Other players keep their
    scenario wagers.
    """
    if len(sc.submissions) < 2:
        raise UnknownKind("payoff-vs-wager data needs at least two players")
    mesh = np.linspace(sc.bounds.lo, sc.bounds.hi, n_mesh)
    table = load_table(sc) if sc.hourly is not None else None
    base = [s.wager for s in sc.submissions]
    points = [(m1, m2) for m1 in mesh for m2 in mesh]
    tasks = [(sc, table, [m1, m2] + base[2:], grid_spec) for m1, m2 in points]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            shares = list(pool.map(_mesh_point, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        shares = [_mesh_point(t) for t in tasks]
    ids = [s.player_id for s in sc.submissions]
    rows = []
    for (m1, m2), share in zip(points, shares):
        rows.extend((float(m1), float(m2), pid, float(v)) for pid, v in zip(ids, share))
    return rows


def emit_plot_data(sc: Scenario, kind: str, *, n_points: int = 201, n_mesh: int = 10, jobs: int = 1, grid_spec=None):
    """Header and rows for one plot ``kind``."""
    if kind == "density":
        rows = density_rows(sc, n_points, grid_spec)
    elif kind == "cdf":
        rows = cdf_rows(sc, n_points, grid_spec)
    elif kind == "scores":
        rows = score_rows(sc, grid_spec=grid_spec)
    elif kind == "payoff-vs-wager":
        rows = payoff_mesh_rows(sc, n_mesh, jobs, grid_spec)
    else:
        raise UnknownKind(f"unknown plot kind {kind!r}; choose from {', '.join(KINDS)}")
    return HEADERS[kind], rows
