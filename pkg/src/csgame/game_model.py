"""Core data model for k-player concurrent stochastic games.

All probabilities and values are exact ``fractions.Fraction`` objects.
States and actions are addressed by integer ids (positions in their lists),
which fixes a canonical order for every serialized object.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

from .exact import int_to_str, str_to_int

REACH = "reach"
SAFETY = "safety"
MAX_ALIVE_PLAYERS = 16

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)(?:\s*/\s*(\d+))?\s*$")


class DomainError(ValueError):
    """Raised when an input is well-typed but violates a domain rule."""

    def __init__(self, message: str, violations: Sequence[str] = ()):
        super().__init__(message)
        self.violations = list(violations)


class CapacityError(DomainError):
    """Raised when a construction would exceed a documented size limit."""


def as_rational(value) -> Fraction:
    """Coerce ints, Fractions and "num/den" strings; reject floats and decimals."""
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        match = _RATIONAL_RE.match(value)
        if match is None:
            raise DomainError(f"not an exact rational: {value!r}")
        num, den = match.groups()
        den = str_to_int(den) if den is not None else 1
        if den == 0:
            raise DomainError(f"zero denominator: {value!r}")
        return Fraction(str_to_int(num), den)
    raise TypeError(f"inexact or unsupported number type: {type(value).__name__}")


def format_rational(value: Fraction) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return int_to_str(value.numerator)
    return f"{int_to_str(value.numerator)}/{int_to_str(value.denominator)}"


class Distribution(Mapping[int, Fraction]):
    """Finite distribution over integer outcome ids, stored sorted with positive mass."""

    __slots__ = ("_items", "_hash")

    def __init__(self, weights: Mapping[int, object] | Iterable[tuple[int, object]]):
        pairs = weights.items() if isinstance(weights, Mapping) else weights
        merged: dict[int, Fraction] = {}
        for outcome, p in pairs:
            p = as_rational(p)
            if p < 0:
                raise DomainError(f"negative probability {format_rational(p)} on outcome {outcome}")
            merged[int(outcome)] = merged.get(int(outcome), Fraction(0)) + p
        items = tuple(sorted((o, p) for o, p in merged.items() if p != 0))
        total = sum((p for _, p in items), Fraction(0))
        if total != 1:
            raise DomainError(f"distribution sums to {format_rational(total)}")
        self._items = items
        self._hash = hash(items)

    @classmethod
    def point(cls, outcome: int) -> "Distribution":
        return cls({outcome: 1})

    @classmethod
    def uniform(cls, outcomes: Iterable[int]) -> "Distribution":
        outcomes = list(outcomes)
        weight = Fraction(1, len(outcomes))
        return cls([(o, weight) for o in outcomes])

    @classmethod
    def two_point(cls, first: int, second: int) -> "Distribution":
        """The uniform distribution U(first, second)."""
        return cls([(first, Fraction(1, 2)), (second, Fraction(1, 2))])

    def __getitem__(self, outcome: int) -> Fraction:
        for o, p in self._items:
            if o == outcome:
                return p
        return Fraction(0)

    def __contains__(self, outcome) -> bool:
        return any(o == outcome for o, _ in self._items)

    def __iter__(self) -> Iterator[int]:
        return (o for o, _ in self._items)

    def __len__(self) -> int:
        return len(self._items)

    def items(self):
        return self._items

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(o for o, _ in self._items)

    def is_pure(self) -> bool:
        return len(self._items) == 1

    def __eq__(self, other) -> bool:
        if isinstance(other, Distribution):
            return self._items == other._items
        return NotImplemented

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        body = ", ".join(f"{o}: {format_rational(p)}" for o, p in self._items)
        return f"Distribution({{{body}}})"


def mix(weighted: Iterable[tuple[Fraction, Distribution]]) -> Distribution:
    """Exact convex combination of distributions."""
    acc: dict[int, Fraction] = {}
    for weight, dist in weighted:
        for outcome, p in dist.items():
            acc[outcome] = acc.get(outcome, Fraction(0)) + weight * p
    return Distribution(acc)


def distribution_patience(d: Distribution) -> Fraction:
    return max(1 / p for _, p in d.items())


def distribution_roundedness(d: Distribution) -> int:
    return max(p.denominator for _, p in d.items())


def variation_distance(d1: Distribution, d2: Distribution) -> Fraction:
    outcomes = set(d1) | set(d2)
    return sum((abs(d1[o] - d2[o]) for o in outcomes), Fraction(0)) / 2


@dataclass(frozen=True)
class Objective:
    kind: str
    targets: frozenset[int]

    def __post_init__(self):
        if self.kind not in (REACH, SAFETY):
            raise DomainError(f"unknown objective kind {self.kind!r}")
        object.__setattr__(self, "targets", frozenset(self.targets))

    def satisfied_at(self, state: int) -> bool:
        """For safety: is the state safe. For reach: is it a target."""
        return state in self.targets


@dataclass(frozen=True)
class GameStructure:
    """A concurrent game structure with per-player reach or safety objectives.

    ``actions[s][i]`` lists the action names of player ``i + 1`` at state ``s``;
    ``transitions[(s, profile)]`` is the successor distribution, where the
    profile holds one action index per player.
    """

    state_names: tuple[str, ...]
    players: int
    actions: tuple[tuple[tuple[str, ...], ...], ...]
    transitions: Mapping[tuple[int, tuple[int, ...]], Distribution]
    objectives: tuple[Objective, ...]
    state_ids: tuple[int, ...] | None = field(default=None, compare=False)
    absorbing_flags: tuple[bool, ...] | None = field(default=None, compare=False)
    _index: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {name: i for i, name in enumerate(self.state_names)})

    @property
    def num_states(self) -> int:
        return len(self.state_names)

    @property
    def states(self) -> range:
        return range(len(self.state_names))

    def state(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise DomainError(f"unknown state {name!r}") from None

    def name(self, s: int) -> str:
        return self.state_names[s]

    def action_count(self, s: int, player: int) -> int:
        return len(self.actions[s][player - 1])

    def profiles(self, s: int) -> Iterator[tuple[int, ...]]:
        return itertools.product(*(range(len(acts)) for acts in self.actions[s]))

    def delta(self, s: int, profile: Sequence[int]) -> Distribution:
        return self.transitions[(s, tuple(profile))]

    def is_absorbing(self, s: int) -> bool:
        if any(len(acts) != 1 for acts in self.actions[s]):
            return False
        return self.transitions.get((s, (0,) * self.players)) == Distribution.point(s)

    def objective(self, player: int) -> Objective:
        return self.objectives[player - 1]

    def is_zero_sum(self) -> bool:
        """Two players, player 1 reach T, player 2 safety on the complement of T."""
        if self.players != 2:
            return False
        first, second = self.objectives
        if first.kind != REACH or second.kind != SAFETY:
            return False
        return second.targets == frozenset(self.states) - first.targets

    def max_actions(self) -> int:
        return max(len(acts) for per_state in self.actions for acts in per_state)


def validate_game(g: GameStructure) -> list[str]:
    """Return a list of human-readable invariant violations (empty if well-formed)."""
    violations: list[str] = []
    n = g.num_states
    if g.players < 1:
        violations.append(f"player count {g.players} is not positive")
    seen: dict[str, int] = {}
    for s, name in enumerate(g.state_names):
        if name in seen:
            violations.append(f"duplicate state name {name!r} (ids {seen[name]} and {s})")
        seen[name] = s
    if g.state_ids is not None:
        seen_ids: set[int] = set()
        for position, sid in enumerate(g.state_ids):
            if sid in seen_ids:
                violations.append(f"duplicate state id {sid}")
            elif sid != position:
                violations.append(f"state id {sid} at position {position} breaks canonical order")
            seen_ids.add(sid)
    if len(g.actions) != n:
        violations.append(f"action table covers {len(g.actions)} states, expected {n}")
        return violations
    for s in g.states:
        per_state = g.actions[s]
        if len(per_state) != g.players:
            violations.append(f"state {g.name(s)} lists actions for {len(per_state)} players")
            continue
        for i, acts in enumerate(per_state, start=1):
            if not acts:
                violations.append(f"state {g.name(s)} has no actions for player {i}")
            if len(set(acts)) != len(acts):
                violations.append(f"state {g.name(s)} has repeated action names for player {i}")
    if violations:
        return violations
    expected = {(s, p) for s in g.states for p in g.profiles(s)}
    for key in sorted(expected - set(g.transitions)):
        violations.append(f"missing transition ({_profile_label(g, *key)})")
    for key in sorted(set(g.transitions) - expected):
        violations.append(f"transition for illegal profile ({key[0]},{','.join(map(str, key[1]))})")
    for key in sorted(expected & set(g.transitions)):
        dist = g.transitions[key]
        if not isinstance(dist, Distribution):
            violations.append(f"transition ({_profile_label(g, *key)}) is not a Distribution")
            continue
        for outcome in dist:
            if not 0 <= outcome < n:
                violations.append(f"transition ({_profile_label(g, *key)}) targets unknown state {outcome}")
    if len(g.objectives) != g.players:
        violations.append(f"{len(g.objectives)} objectives for {g.players} players")
    for i, obj in enumerate(g.objectives, start=1):
        bad = sorted(t for t in obj.targets if not 0 <= t < n)
        if bad:
            violations.append(f"objective of player {i} names unknown states {bad}")
    if g.absorbing_flags is not None:
        for s, flag in enumerate(g.absorbing_flags):
            if flag and not g.is_absorbing(s):
                violations.append(f"state {g.name(s)} is flagged absorbing but is not a singleton self-loop")
    return violations


def _profile_label(g: GameStructure, s: int, profile: tuple[int, ...]) -> str:
    return ",".join([g.name(s), *(str(a + 1) for a in profile)])


def check_game(g: GameStructure) -> GameStructure:
    violations = validate_game(g)
    if violations:
        raise DomainError("invalid game", violations)
    return g


def raw_distribution_violations(label: str, weights: Sequence[tuple[int, Fraction]]) -> list[str]:
    """Violations for an unnormalized weight list, used when loading files."""
    total = sum((p for _, p in weights), Fraction(0))
    out = []
    if any(p < 0 for _, p in weights):
        out.append(f"transition ({label}) has a negative probability")
    if total != 1:
        out.append(f"transition ({label}) sums to {format_rational(total)}")
    return out


def delta_min(g: GameStructure) -> Fraction:
    return min(p for dist in g.transitions.values() for _, p in dist.items())


@dataclass(frozen=True)
class StationaryStrategy:
    """A per-state distribution over the player's action indices."""

    player: int
    choice: Mapping[int, Distribution]

    def at(self, s: int) -> Distribution:
        return self.choice.get(s, Distribution.point(0))

    def distributions(self) -> list[Distribution]:
        return [self.choice[s] for s in sorted(self.choice)]

    def __eq__(self, other) -> bool:
        if not isinstance(other, StationaryStrategy):
            return NotImplemented
        return self.player == other.player and dict(self.choice) == dict(other.choice)

    def __hash__(self) -> int:
        return hash((self.player, tuple(sorted(self.choice.items()))))


@dataclass(frozen=True)
class PlayerStationaryStrategy:
    """Play depends on the state and on which players have not lost yet.

    ``choice`` is keyed by (alive-set, state); ``fallback`` holds the pure action
    index played once this player has lost.
    """

    player: int
    choice: Mapping[tuple[frozenset[int], int], Distribution]
    fallback: Mapping[int, int]

    def at(self, alive: frozenset[int], s: int) -> Distribution:
        if self.player not in alive:
            return Distribution.point(self.fallback.get(s, 0))
        return self.choice.get((frozenset(alive), s), Distribution.point(0))

    def distributions(self) -> list[Distribution]:
        keys = sorted(self.choice, key=lambda k: (sorted(k[0]), k[1]))
        return [self.choice[k] for k in keys]

    @classmethod
    def from_stationary(cls, sigma: StationaryStrategy, players: int) -> "PlayerStationaryStrategy":
        """Ignore the alive-set: the same distribution for every alive-set containing the player."""
        if players > MAX_ALIVE_PLAYERS:
            raise CapacityError(f"alive-set tables support at most {MAX_ALIVE_PLAYERS} players")
        others = [p for p in range(1, players + 1) if p != sigma.player]
        choice = {}
        for r in range(len(others) + 1):
            for subset in itertools.combinations(others, r):
                alive = frozenset((sigma.player, *subset))
                for s, d in sigma.choice.items():
                    choice[(alive, s)] = d
        fallback = {s: d.support[0] for s, d in sigma.choice.items()}
        return cls(sigma.player, choice, fallback)


Strategy = StationaryStrategy | PlayerStationaryStrategy


@dataclass(frozen=True)
class StrategyProfile:
    strategies: tuple[Strategy, ...]

    def __post_init__(self):
        players = [s.player for s in self.strategies]
        if sorted(players) != list(range(1, len(players) + 1)):
            raise DomainError(f"profile player indices {players} are not exactly 1..k")
        kinds = {type(s) for s in self.strategies}
        if len(kinds) > 1:
            raise DomainError("profile mixes stationary and player-stationary strategies")
        object.__setattr__(self, "strategies", tuple(sorted(self.strategies, key=lambda s: s.player)))

    def __getitem__(self, player: int) -> Strategy:
        return self.strategies[player - 1]

    @property
    def players(self) -> int:
        return len(self.strategies)

    @property
    def is_player_stationary(self) -> bool:
        return isinstance(self.strategies[0], PlayerStationaryStrategy)


def check_strategy(g: GameStructure, sigma: Strategy) -> None:
    """Raise DomainError if a strategy does not fit the game's action sets."""
    problems = []
    if not 1 <= sigma.player <= g.players:
        raise DomainError(f"player {sigma.player} not in 1..{g.players}")
    if isinstance(sigma, StationaryStrategy):
        entries = [(s, d) for s, d in sigma.choice.items()]
        required = [s for s in g.states if g.action_count(s, sigma.player) > 1]
        missing = [g.name(s) for s in required if s not in sigma.choice]
        if missing:
            problems.append(f"no choice for player {sigma.player} at states {missing}")
    else:
        if g.players > MAX_ALIVE_PLAYERS:
            raise CapacityError(f"alive-set tables support at most {MAX_ALIVE_PLAYERS} players")
        entries = [(s, d) for (_, s), d in sigma.choice.items()]
        entries += [(s, Distribution.point(a)) for s, a in sigma.fallback.items()]
    for s, d in entries:
        if not 0 <= s < g.num_states:
            problems.append(f"choice at unknown state {s}")
            continue
        count = g.action_count(s, sigma.player)
        if any(not 0 <= a < count for a in d.support):
            problems.append(f"choice at {g.name(s)} uses an action outside 0..{count - 1}")
    if problems:
        raise DomainError("strategy does not fit the game", problems)
