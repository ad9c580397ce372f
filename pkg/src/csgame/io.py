"""JSON encodings of games, strategies, profiles and value vectors.

Probabilities travel as "num/den" strings; actions are referenced by their
0-based index in the state's action list.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from .game_model import (
    REACH,
    SAFETY,
    Distribution,
    DomainError,
    GameStructure,
    Objective,
    PlayerStationaryStrategy,
    StationaryStrategy,
    Strategy,
    StrategyProfile,
    as_rational,
    format_rational,
    raw_distribution_violations,
    validate_game,
)


def _dist_items(d: Distribution, key: str) -> list[dict]:
    return [{key: o, "p": format_rational(p)} for o, p in d.items()]


def game_to_dict(g: GameStructure) -> dict:
    return {
        "states": [{"id": s, "name": g.name(s), "absorbing": g.is_absorbing(s)} for s in g.states],
        "players": g.players,
        "actions": {str(s): [list(acts) for acts in g.actions[s]] for s in g.states},
        "transitions": [
            {"state": s, "profile": list(profile), "dist": _dist_items(g.delta(s, profile), "state")}
            for s in g.states
            for profile in g.profiles(s)
        ],
        "objectives": [
            {"player": i, "kind": obj.kind, "targets": sorted(obj.targets)}
            for i, obj in enumerate(g.objectives, start=1)
        ],
    }


def game_from_dict(data: dict) -> GameStructure:
    """Parse a game file, collecting every violation before failing."""
    try:
        states = data["states"]
        ids = tuple(int(entry["id"]) for entry in states)
        names = tuple(str(entry["name"]) for entry in states)
        flags = tuple(bool(entry.get("absorbing", False)) for entry in states)
        players = int(data["players"])
        raw_actions = data["actions"]
        position = {sid: i for i, sid in enumerate(ids)}
        actions = [None] * len(ids)
        for key, per_player in raw_actions.items():
            actions[position[int(key)]] = tuple(tuple(str(a) for a in acts) for acts in per_player)
        violations = []
        if any(a is None for a in actions):
            missing = [names[i] for i, a in enumerate(actions) if a is None]
            raise DomainError("invalid game", [f"no action lists for states {missing}"])
        transitions = {}
        for entry in data["transitions"]:
            s = position[int(entry["state"])]
            profile = tuple(int(a) for a in entry["profile"])
            weights = [(position[int(item["state"])], as_rational(item["p"])) for item in entry["dist"]]
            label = ",".join(
                [names[s]]
                + [
                    actions[s][i][a] if 0 <= i < len(actions[s]) and 0 <= a < len(actions[s][i]) else str(a)
                    for i, a in enumerate(profile)
                ]
            )
            problems = raw_distribution_violations(label, weights)
            if problems:
                violations.extend(problems)
                continue
            transitions[(s, profile)] = Distribution(weights)
        objectives = [None] * players
        for entry in data["objectives"]:
            kind = entry["kind"]
            if kind not in (REACH, SAFETY):
                violations.append(f"objective of player {entry['player']} has unknown kind {kind!r}")
                continue
            objectives[int(entry["player"]) - 1] = Objective(
                kind, frozenset(position[int(t)] for t in entry["targets"])
            )
        if any(o is None for o in objectives):
            violations.append("every player needs exactly one objective")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, DomainError):
            raise
        raise DomainError(f"malformed game file: {exc!r}") from exc
    if violations:
        raise DomainError("invalid game", violations)
    g = GameStructure(names, players, tuple(actions), transitions, tuple(objectives), ids, flags)
    violations = validate_game(g)
    if violations:
        raise DomainError("invalid game", violations)
    return g


def strategy_to_dict(sigma: Strategy) -> dict:
    if isinstance(sigma, StationaryStrategy):
        return {
            "player": sigma.player,
            "kind": "stationary",
            "choice": [{"state": s, "dist": _dist_items(sigma.choice[s], "action")} for s in sorted(sigma.choice)],
        }
    keys = sorted(sigma.choice, key=lambda k: (k[1], sorted(k[0])))
    return {
        "player": sigma.player,
        "kind": "player-stationary",
        "choice": [
            {"state": s, "alive": sorted(alive), "dist": _dist_items(sigma.choice[(alive, s)], "action")}
            for alive, s in keys
        ],
        "fallback": [{"state": s, "action": a} for s, a in sorted(sigma.fallback.items())],
    }


def _parse_dist(items: list[dict]) -> Distribution:
    return Distribution((int(item["action"]), as_rational(item["p"])) for item in items)


def strategy_from_dict(data: dict) -> Strategy:
    try:
        player = int(data["player"])
        kind = data["kind"]
        if kind == "stationary":
            return StationaryStrategy(
                player, {int(entry["state"]): _parse_dist(entry["dist"]) for entry in data["choice"]}
            )
        if kind == "player-stationary":
            choice = {
                (frozenset(int(p) for p in entry["alive"]), int(entry["state"])): _parse_dist(entry["dist"])
                for entry in data["choice"]
            }
            fallback = {int(entry["state"]): int(entry["action"]) for entry in data.get("fallback", [])}
            return PlayerStationaryStrategy(player, choice, fallback)
    except (KeyError, TypeError) as exc:
        raise DomainError(f"malformed strategy: {exc!r}") from exc
    raise DomainError(f"unknown strategy kind {data.get('kind')!r}")


def profile_to_dict(profile: StrategyProfile) -> dict:
    return {"profile": [strategy_to_dict(sigma) for sigma in profile.strategies]}


def profile_from_dict(data: dict) -> StrategyProfile:
    if "profile" in data:
        return StrategyProfile(tuple(strategy_from_dict(item) for item in data["profile"]))
    return StrategyProfile((strategy_from_dict(data),))


def values_to_dict(g: GameStructure, values) -> dict[str, str]:
    return {g.name(s): format_rational(values[s]) for s in g.states}


def values_from_dict(g: GameStructure, data: dict) -> tuple[Fraction, ...]:
    missing = [g.name(s) for s in g.states if g.name(s) not in data]
    if missing:
        raise DomainError("value vector misses states", missing)
    return tuple(as_rational(data[g.name(s)]) for s in g.states)


def dumps(data) -> str:
    return json.dumps(data, indent=2, sort_keys=False) + "\n"


def load_json(path: str | Path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DomainError(f"{path}: not valid JSON ({exc.msg})") from exc
    except OSError as exc:
        raise DomainError(f"{path}: {exc.strerror}") from exc


def load_game(path: str | Path) -> GameStructure:
    return game_from_dict(load_json(path))


def load_profile(path: str | Path) -> StrategyProfile:
    return profile_from_dict(load_json(path))
