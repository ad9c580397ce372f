"""Command-line front end. Every verb is a thin wrapper around library calls."""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import __version__
from .analysis import (
    GapReport,
    nash_gap,
    optimality_gap,
    round_profile,
    strategy_patience,
)
from .bounds import BOUND_NAMES, bounds
from .families import (
    FAMILY_NAMES,
    duel_shape,
    exact_duel_values,
    purgatory,
    purgatory_duel,
    restricted_three_state_duel,
    safe_optimal_profile,
    safety_duel,
    three_state_duel,
)
from .game_model import (
    DomainError,
    StrategyProfile,
    as_rational,
    delta_min,
    format_rational,
)
from .io import (
    dumps,
    game_to_dict,
    load_game,
    load_json,
    load_profile,
    profile_to_dict,
    strategy_to_dict,
    values_from_dict,
    values_to_dict,
)
from .matrix_game import MatrixGame, build_tri_matrix, solve_matrix_game
from .mdp import fix_strategies, optimal_value
from .simulate import simulate_play
from .value_iteration import DEFAULT_MAX_BITS, value_iterate

DISPLAY_LIMIT = 64
GAP_HEADER = ["player", "state", "value_claim", "best_reply_value", "gap"]


@dataclass
class Report:
    verb: str
    parameters: dict
    results: dict
    header: list[str] = field(default_factory=list)
    rows: list[list[str]] = field(default_factory=list)
    wall_clock: float | None = None

    def as_dict(self) -> dict:
        out = {
            "verb": self.verb,
            "tool_version": __version__,
            "parameters": self.parameters,
            "results": self.results,
        }
        if self.wall_clock is not None:
            out["wall_clock_seconds"] = round(self.wall_clock, 6)
        return out


def format_report(report: Report, fmt: str) -> str:
    if fmt == "json":
        return dumps(report.as_dict())
    buffer = _io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(report.header)
    writer.writerows(report.rows)
    return buffer.getvalue()


def _shorten(value):
    if isinstance(value, str) and len(value) > DISPLAY_LIMIT:
        keep = DISPLAY_LIMIT // 2 - 8
        return f"{value[:keep]}...{value[-keep:]} [{len(value)} chars]"
    if isinstance(value, dict):
        return {k: _shorten(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_shorten(v) for v in value]
    return value


def max_bits_setting(flag: int | None) -> int:
    if flag is not None:
        return flag
    env = os.environ.get("CSG_MAX_BITS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise DomainError(f"CSG_MAX_BITS must be an integer, got {env!r}") from None
    return DEFAULT_MAX_BITS


def _fr(x) -> str:
    return format_rational(x)


def _gap_rows(report) -> list[list[str]]:
    return [
        [str(r.player), r.state, _fr(r.value_claim), _fr(r.best_reply_value), _fr(r.gap)] for r in report.rows
    ]


def _gap_results(report, eps) -> dict:
    results = {
        "max_gap": _fr(report.max_gap),
        "gaps": [dict(zip(GAP_HEADER, row)) for row in _gap_rows(report)],
        "witnesses": {
            str(p): {label: a for label, a in sorted(w.items())} for p, w in sorted(report.witnesses.items())
        },
    }
    if eps is not None:
        results["eps"] = _fr(eps)
        results["within_eps"] = report.max_gap <= eps
    return results


def _write(path: str, text: str) -> None:
    Path(path).write_text(text)


# ---------------------------------------------------------------- verbs


def _build_family(args):
    name = args.name
    if name == "purgatory":
        return purgatory(args.n, args.m)
    if name == "purgatory-duel":
        return purgatory_duel(args.n, args.m)
    if name == "three-state-duel":
        return three_state_duel(args.m)
    if name == "restricted-three-state-duel":
        return restricted_three_state_duel(args.m)
    if args.delta_min is None:
        raise DomainError("safety-duel needs --delta-min")
    return safety_duel(args.c, as_rational(args.delta_min))


def cmd_family(args) -> Report:
    g = _build_family(args)
    game_data = game_to_dict(g)
    results = {"name": args.name, "states": g.num_states, "delta_min": _fr(delta_min(g))}
    if args.out:
        _write(args.out, dumps(game_data))
        results["game_file"] = args.out
    else:
        results["game"] = game_data
    if args.profile_out:
        if args.name == "purgatory-duel":
            table = exact_duel_values(args.n, args.m, max_bits_setting(args.max_bits))
            profile = StrategyProfile((table.player1, table.player2))
        elif args.name == "safety-duel":
            profile = StrategyProfile(safe_optimal_profile(args.c, as_rational(args.delta_min)))
        else:
            raise DomainError(f"no built-in profile for family {args.name}")
        _write(args.profile_out, dumps(profile_to_dict(profile)))
        results["profile_file"] = args.profile_out
    rows = [[str(s), g.name(s), str(g.is_absorbing(s)).lower()] for s in g.states]
    return Report("family", {}, results, ["id", "name", "absorbing"], rows)


def cmd_solve(args) -> Report:
    g = load_game(args.game)
    cap = max_bits_setting(args.max_bits)
    if args.mode == "exact-duel":
        n, m = duel_shape(g)
        table = exact_duel_values(n, m, cap)
        values = values_to_dict(g, table.values)
        results = {
            "n": n,
            "m": m,
            "values": values,
            "strategies": {
                "1": strategy_to_dict(table.player1),
                "2": strategy_to_dict(table.player2),
            },
        }
        rows = [[str(s), g.name(s), values[g.name(s)]] for s in g.states]
        return Report("solve", {}, results, ["id", "state", "value"], rows)
    gap = as_rational(args.gap) if args.gap is not None else None
    trace = value_iterate(g, args.iters, gap, cap)
    results = {
        "stop_reason": trace.stop_reason,
        "iterations": len(trace.vectors) - 1,
        "final": values_to_dict(g, trace.last),
    }
    rows = [[str(t), g.name(s), _fr(v)] for t, s, v in trace.rows()]
    return Report("solve", {}, results, ["t", "state", "value"], rows)


def cmd_matrix(args) -> Report:
    if args.matrix:
        grid = load_json(args.matrix)
        if isinstance(grid, dict):
            grid = grid.get("matrix")
        if not isinstance(grid, list) or not all(isinstance(row, list) for row in grid):
            raise DomainError("matrix file must hold a JSON grid of \"num/den\" strings")
        game = MatrixGame.of([[as_rational(x) for x in row] for row in grid])
    else:
        if None in (args.x, args.y, args.z, args.m):
            raise DomainError("give either --matrix or all of --x --y --z --m")
        game = build_tri_matrix(as_rational(args.x), as_rational(args.y), as_rational(args.z), args.m)
    solution = solve_matrix_game(game)
    results = {
        "value": _fr(solution.value),
        "row_strategy": [_fr(solution.row_strategy[i]) for i in range(game.rows)],
        "col_strategy": [_fr(solution.col_strategy[j]) for j in range(game.cols)],
        "row_patience": _fr(solution.row_patience),
        "col_patience": _fr(solution.col_patience),
        "patience": _fr(max(solution.row_patience, solution.col_patience)),
    }
    rows = [["1", str(i + 1), results["row_strategy"][i]] for i in range(game.rows)]
    rows += [["2", str(j + 1), results["col_strategy"][j]] for j in range(game.cols)]
    return Report("matrix", {}, results, ["player", "action", "probability"], rows)


def cmd_best_response(args) -> Report:
    g = load_game(args.game)
    profile = load_profile(args.profile)
    if not 1 <= args.player <= g.players:
        raise DomainError(f"player {args.player} not in 1..{g.players}")
    others = [sigma for sigma in profile.strategies if sigma.player != args.player]
    mdp = fix_strategies(g, others)
    values, policy = optimal_value(mdp)
    rows = []
    for i, label in enumerate(mdp.labels):
        if isinstance(label, tuple):
            s, alive = label
            name = f"{g.name(s)}|{','.join(map(str, sorted(alive)))}"
            action = g.actions[s][args.player - 1][policy[i]]
        else:
            name = g.name(label)
            action = g.actions[label][args.player - 1][policy[i]]
        rows.append([name, _fr(values[i]), action])
    results = {
        "objective": mdp.kind,
        "values": {name: value for name, value, _ in rows},
        "policy": {name: action for name, _, action in rows},
    }
    return Report("best-response", {}, results, ["state", "value", "action"], rows)


def _reference_for(g, args):
    if args.reference:
        return values_from_dict(g, load_json(args.reference))
    n, m = duel_shape(g)
    return exact_duel_values(n, m, max_bits_setting(args.max_bits)).values


def cmd_check(args) -> Report:
    g = load_game(args.game)
    profile = load_profile(args.profile)
    eps = as_rational(args.eps) if args.eps is not None else None
    if args.kind == "eps-nash":
        report = nash_gap(g, profile, g.state(args.start) if args.start else None)
        return Report("check", {}, _gap_results(report, eps), GAP_HEADER, _gap_rows(report))
    reference = _reference_for(g, args)
    players = [args.player] if args.player else [sigma.player for sigma in profile.strategies]
    merged_rows, witnesses = [], {}
    for player in players:
        sigma = next((s for s in profile.strategies if s.player == player), None)
        if sigma is None:
            raise DomainError(f"profile has no strategy for player {player}")
        report = optimality_gap(g, player, sigma, reference)
        merged_rows.extend(report.rows)
        witnesses.update(report.witnesses)
    combined = GapReport(tuple(merged_rows), witnesses)
    return Report("check", {}, _gap_results(combined, eps), GAP_HEADER, _gap_rows(combined))


def cmd_patience(args) -> Report:
    profile = load_profile(args.profile)
    rows = []
    for sigma in profile.strategies:
        patience, roundedness = strategy_patience(sigma)
        rows.append([str(sigma.player), _fr(patience), str(roundedness)])
    results = {"players": [dict(zip(["player", "patience", "roundedness"], row)) for row in rows]}
    return Report("patience", {}, results, ["player", "patience", "roundedness"], rows)


def cmd_round(args) -> Report:
    profile = load_profile(args.profile)
    q = int(args.q)
    rounded = round_profile(profile, q)
    data = profile_to_dict(rounded)
    results = {"q": str(q)}
    if args.out:
        _write(args.out, dumps(data))
        results["profile_file"] = args.out
    else:
        results["profile"] = data
    rows = []
    for sigma in rounded.strategies:
        for entry in strategy_to_dict(sigma)["choice"]:
            for item in entry["dist"]:
                rows.append([str(sigma.player), str(entry["state"]), str(item["action"]), item["p"]])
    return Report("round", {}, results, ["player", "state", "action", "probability"], rows)


def cmd_bounds(args) -> Report:
    params = {
        key: value
        for key, value in (
            ("n", args.n),
            ("k", args.k),
            ("m", args.m),
            ("j", args.j),
            ("eps", args.eps),
            ("delta_min", args.delta_min),
        )
        if value is not None
    }
    report = bounds(args.which, params)
    data = report.as_dict()
    rows = [[key, "" if value is None else json.dumps(value) if isinstance(value, (list, dict)) else str(value)]
            for key, value in data.items()]
    return Report("bounds", {}, data, ["field", "value"], rows)


def cmd_simulate(args) -> Report:
    g = load_game(args.game)
    profile = load_profile(args.profile)
    start = g.state(args.start) if args.start else None
    estimates = simulate_play(g, profile, args.horizon, args.episodes, args.seed, start)
    rows = [
        [str(e.player), str(e.wins), str(e.episodes), str(e.undecided), repr(e.frequency), repr(e.standard_error)]
        for e in estimates
    ]
    header = ["player", "wins", "episodes", "undecided", "frequency", "standard_error"]
    results = {"players": [dict(zip(header, row)) for row in rows]}
    for entry in results["players"]:
        entry["frequency"] = float(entry["frequency"])
        entry["standard_error"] = float(entry["standard_error"])
    return Report("simulate", {}, results, header, rows)


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--report", help="write the report here instead of stdout")
    common.add_argument("--full", action="store_true", help="do not shorten long numbers on stdout")
    common.add_argument("--timing", action="store_true", help="add wall-clock time (breaks byte-identity)")

    parser = argparse.ArgumentParser(prog="csgame", description="Exact tools for concurrent stochastic games.")
    parser.add_argument("--version", action="version", version=f"csgame {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("family", parents=[common], help="generate a game family")
    p.add_argument("--name", required=True, choices=FAMILY_NAMES)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--c", type=int, default=1)
    p.add_argument("--delta-min")
    p.add_argument("--out")
    p.add_argument("--profile-out", help="also write the family's optimal or equilibrium profile")
    p.add_argument("--max-bits", type=int)
    p.set_defaults(handler=cmd_family)

    p = sub.add_parser("solve", parents=[common], help="exact duel values or value iteration")
    p.add_argument("--game", required=True)
    p.add_argument("--mode", choices=["exact-duel", "value-iteration"], default="value-iteration")
    p.add_argument("--iters", type=int, default=10)
    p.add_argument("--gap")
    p.add_argument("--max-bits", type=int)
    p.set_defaults(handler=cmd_solve)

    p = sub.add_parser("matrix", parents=[common], help="solve a zero-sum matrix game")
    p.add_argument("--x")
    p.add_argument("--y")
    p.add_argument("--z")
    p.add_argument("--m", type=int)
    p.add_argument("--matrix", help="JSON grid of \"num/den\" strings")
    p.set_defaults(handler=cmd_matrix)

    p = sub.add_parser("best-response", parents=[common], help="optimal reply to the other players")
    p.add_argument("--game", required=True)
    p.add_argument("--profile", required=True)
    p.add_argument("--player", type=int, required=True)
    p.set_defaults(handler=cmd_best_response)

    p = sub.add_parser("check", parents=[common], help="measure optimality or Nash gaps")
    p.add_argument("--kind", choices=["eps-optimal", "eps-nash"], required=True)
    p.add_argument("--game", required=True)
    p.add_argument("--profile", required=True)
    p.add_argument("--player", type=int)
    p.add_argument("--reference", help="JSON map state name -> value; default: exact duel values")
    p.add_argument("--eps")
    p.add_argument("--start", help="only report gaps from this state")
    p.add_argument("--max-bits", type=int)
    p.set_defaults(handler=cmd_check)

    p = sub.add_parser("patience", parents=[common], help="patience and roundedness of a profile")
    p.add_argument("--profile", required=True)
    p.set_defaults(handler=cmd_patience)

    p = sub.add_parser("round", parents=[common], help="round a profile to denominator q")
    p.add_argument("--profile", required=True)
    p.add_argument("--q", required=True)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_round)

    p = sub.add_parser("bounds", parents=[common], help="evaluate a closed-form bound")
    p.add_argument("--which", required=True, choices=sorted(BOUND_NAMES))
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--j", type=int)
    p.add_argument("--eps")
    p.add_argument("--delta-min")
    p.set_defaults(handler=cmd_bounds)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo cross-check of a profile")
    p.add_argument("--game", required=True)
    p.add_argument("--profile", required=True)
    p.add_argument("--horizon", type=int, default=10_000)
    p.add_argument("--episodes", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start")
    p.set_defaults(handler=cmd_simulate)
    return parser


_GLOBAL_FLAGS = {"format", "report", "full", "timing", "handler", "verb"}


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    started = time.perf_counter()
    try:
        report = args.handler(args)
    except DomainError as exc:
        payload = {"error": str(exc), "violations": exc.violations}
        stderr.write(dumps(payload))
        return 1
    except (TypeError, ValueError, KeyError) as exc:
        stderr.write(dumps({"error": f"{type(exc).__name__}: {exc}", "violations": []}))
        return 1
    report.parameters = {
        key: value for key, value in sorted(vars(args).items()) if key not in _GLOBAL_FLAGS and value is not None
    }
    if args.timing:
        report.wall_clock = time.perf_counter() - started
    if args.report:
        _write(args.report, format_report(report, args.format))
        return 0
    if not args.full and args.format == "json":
        shown = Report(report.verb, report.parameters, _shorten(report.results), report.header, report.rows,
                       report.wall_clock)
        stdout.write(format_report(shown, "json"))
    else:
        stdout.write(format_report(report, args.format))
    return 0


def main() -> None:
    sys.exit(run())
