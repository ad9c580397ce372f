"""Generators for the Purgatory, Purgatory Duel, 3-state duel and safety duel families.

State names are canonical: ``v{side}_{level}`` for duel states, ``v{j}`` for
Purgatory states and the safety duel's two choice states, plus ``vs``,
``top`` and ``bot``. Actions are numbered from 1 in their names and from 0 as
indices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .game_model import (
    REACH,
    SAFETY,
    Distribution,
    DomainError,
    GameStructure,
    Objective,
    StationaryStrategy,
    as_rational,
)
from .matrix_game import solve_matrix_game
from .value_iteration import DEFAULT_MAX_BITS, bit_size, fixpoint_residual, local_matrix

FAMILY_NAMES = (
    "purgatory",
    "purgatory-duel",
    "three-state-duel",
    "restricted-three-state-duel",
    "safety-duel",
)

SAFETY_DUEL_MAX_DELTA = Fraction(1, 216)


def _check_sizes(**sizes: int) -> None:
    for name, value in sizes.items():
        if not isinstance(value, int) or value < 1:
            raise DomainError(f"{name} must be a positive integer, got {value!r}")


class _Builder:
    def __init__(self, names: list[str], players: int = 2):
        self.names = names
        self.index = {name: i for i, name in enumerate(names)}
        self.players = players
        self.actions: dict[int, tuple[tuple[str, ...], ...]] = {}
        self.transitions: dict = {}

    def absorbing(self, name: str) -> None:
        s = self.index[name]
        self.actions[s] = (("1",),) * self.players
        self.transitions[(s, (0,) * self.players)] = Distribution.point(s)

    def build(self, objectives) -> GameStructure:
        return GameStructure(
            tuple(self.names),
            self.players,
            tuple(self.actions[s] for s in range(len(self.names))),
            self.transitions,
            tuple(objectives),
        )


def _numbered(m: int) -> tuple[str, ...]:
    return tuple(str(a) for a in range(1, m + 1))


def purgatory(n: int, m: int) -> GameStructure:
    """Player 1 must match player 2 n times in a row; playing above restarts, below loses."""
    _check_sizes(n=n, m=m)
    names = [f"v{j}" for j in range(1, n + 1)] + ["top", "bot"]
    b = _Builder(names)
    top, bot = b.index["top"], b.index["bot"]
    for j in range(n):
        following = j + 1 if j + 1 < n else top
        b.actions[j] = (_numbered(m), _numbered(m))
        for a1, a2 in itertools.product(range(m), repeat=2):
            if a1 > a2:
                nxt = 0
            elif a1 < a2:
                nxt = bot
            else:
                nxt = following
            b.transitions[(j, (a1, a2))] = Distribution.point(nxt)
    b.absorbing("top")
    b.absorbing("bot")
    return b.build([Objective(REACH, {top}), Objective(SAFETY, set(range(len(names))) - {top})])


def duel_state_names(n: int) -> list[str]:
    return [f"v{side}_{j}" for side in (1, 2) for j in range(1, n + 1)] + ["vs", "top", "bot"]


def purgatory_duel(n: int, m: int) -> GameStructure:
    """Two mirrored Purgatory chains joined by a fair coin at ``vs``.

    At a chain state the lower number restarts play at ``vs``; the higher
    number sends play to the chain's losing end (``bot`` on side 1, ``top``
    on side 2), and equal numbers advance one level.
    """
    _check_sizes(n=n, m=m)
    b = _Builder(duel_state_names(n))
    vs, top, bot = b.index["vs"], b.index["top"], b.index["bot"]
    for side in (1, 2):
        exit_low = bot if side == 1 else top
        exit_high = top if side == 1 else bot
        for j in range(1, n + 1):
            s = b.index[f"v{side}_{j}"]
            advance = b.index[f"v{side}_{j + 1}"] if j < n else exit_high
            b.actions[s] = (_numbered(m), _numbered(m))
            for a1, a2 in itertools.product(range(m), repeat=2):
                if a1 < a2:
                    nxt = vs
                elif a1 > a2:
                    nxt = exit_low
                else:
                    nxt = advance
                b.transitions[(s, (a1, a2))] = Distribution.point(nxt)
    b.actions[vs] = (("1",), ("1",))
    b.transitions[(vs, (0, 0))] = Distribution.two_point(b.index["v1_1"], b.index["v2_1"])
    b.absorbing("top")
    b.absorbing("bot")
    return b.build([Objective(REACH, {top}), Objective(SAFETY, set(range(len(b.names))) - {top})])


def duel_shape(g: GameStructure) -> tuple[int, int]:
    """Recover (n, m) from a game laid out like ``purgatory_duel``; reject anything else."""
    n, rem = divmod(g.num_states - 3, 2)
    if n < 1 or rem or list(g.state_names) != duel_state_names(n):
        raise DomainError("game is not a Purgatory Duel (state naming does not match)")
    m = g.action_count(g.state("v1_1"), 1)
    if g != purgatory_duel(n, m):
        raise DomainError("game has Purgatory Duel state names but different transitions")
    return n, m


def three_state_pair(a: int, b: int) -> str:
    return f"({a},{b})"


def _three_state(m: int, restricted: bool) -> GameStructure:
    _check_sizes(m=m)
    side1 = purgatory_duel(1, m)
    b = _Builder(["vs", "top", "bot"])
    vs, top, bot = 0, 1, 2
    # Outcomes of the two duel chain states, translated to the 3-state names.
    translate = {side1.state("vs"): vs, side1.state("top"): top, side1.state("bot"): bot}
    first, second = side1.state("v1_1"), side1.state("v2_1")
    pairs = list(itertools.product(range(m), repeat=2))
    if restricted:
        p1_pairs = [p for p in pairs if p[0] == 0 or p[1] == 0]
        p2_pairs = [p for p in pairs if p[0] == m - 1 or p[1] == m - 1]
    else:
        p1_pairs = p2_pairs = pairs
    label = lambda p: three_state_pair(p[0] + 1, p[1] + 1)
    b.actions[vs] = (tuple(map(label, p1_pairs)), tuple(map(label, p2_pairs)))
    for i, (x1, x2) in enumerate(p1_pairs):
        for j, (y1, y2) in enumerate(p2_pairs):
            left = translate[side1.delta(first, (x1, y1)).support[0]]
            right = translate[side1.delta(second, (x2, y2)).support[0]]
            weights: dict[int, Fraction] = {}
            for outcome in (left, right):
                weights[outcome] = weights.get(outcome, Fraction(0)) + Fraction(1, 2)
            b.transitions[(vs, (i, j))] = Distribution(weights)
    b.absorbing("top")
    b.absorbing("bot")
    return b.build([Objective(REACH, {top}), Objective(SAFETY, {vs, bot})])


def three_state_duel(m: int) -> GameStructure:
    """Both chain states of the one-level duel played at once; the outcome is a fair coin between them."""
    return _three_state(m, restricted=False)


def restricted_three_state_duel(m: int) -> GameStructure:
    """The 3-state duel where player 1 only plays pairs containing 1 and player 2 only pairs containing m."""
    return _three_state(m, restricted=True)


def pair_of_action(g: GameStructure, player: int, action: int) -> tuple[int, int]:
    """0-based (first, second) components of a 3-state duel action."""
    text = g.actions[g.state("vs")][player - 1][action]
    first, second = text.strip("()").split(",")
    return int(first) - 1, int(second) - 1


def safety_duel_names(c: int) -> list[str]:
    levels = [f"v{j}_{level}" for j in (1, 2) for level in range(1, 2 * c)]
    return ["vs", "v1", "v2", "top", "bot"] + levels


def safety_duel(c: int, delta_min) -> GameStructure:
    """Two-player safety game where patient strategies are needed for an equilibrium."""
    _check_sizes(c=c)
    delta = as_rational(delta_min)
    if not 0 < delta <= SAFETY_DUEL_MAX_DELTA:
        raise DomainError(f"delta_min must lie in (0, 1/216], got {delta}")
    b = _Builder(safety_duel_names(c))
    vs, top, bot = b.index["vs"], b.index["top"], b.index["bot"]

    def level(j: int, lvl: int) -> int:
        if lvl == 0:
            return top if j == 1 else bot
        return b.index[f"v{j}_{lvl}"]

    def step(target: int) -> Distribution:
        return Distribution([(vs, 1 - delta), (target, delta)])

    for j in (1, 2):
        other = 3 - j
        s = b.index[f"v{j}"]
        b.actions[s] = (("1", "2"), ("1", "2"))
        for a1, a2 in itertools.product(range(2), repeat=2):
            if a1 == a2:
                d = step(level(j, c - 1))
            elif a1 < a2:
                d = step(level(other, 2 * c - 1))
            else:
                d = Distribution.point(level(other, 0))
            b.transitions[(s, (a1, a2))] = d
        for lvl in range(1, 2 * c):
            t = level(j, lvl)
            b.actions[t] = (("1",), ("1",))
            b.transitions[(t, (0, 0))] = step(level(j, lvl - 1))
    b.actions[vs] = (("1",), ("1",))
    b.transitions[(vs, (0, 0))] = Distribution.two_point(b.index["v1"], b.index["v2"])
    b.absorbing("top")
    b.absorbing("bot")
    everything = set(range(len(b.names)))
    return b.build([Objective(SAFETY, everything - {bot}), Objective(SAFETY, everything - {top})])


def safe_optimal_profile(c: int, delta_min) -> tuple[StationaryStrategy, StationaryStrategy]:
    """The explicit equilibrium strategies of the safety duel.

    Player 1 puts weight (1+d^-c)/(2+d^-c+d^c) on action 1 at both choice
    states; player 2 plays the same weights with its actions swapped, which is
    the image of player 1's strategy under the game's symmetry.
    """
    g = safety_duel(c, delta_min)
    delta = as_rational(delta_min)
    denom = 2 + delta ** -c + delta ** c
    heavy = (1 + delta ** -c) / denom
    light = (1 + delta ** c) / denom
    p1 = {g.state(f"v{j}"): Distribution([(0, heavy), (1, light)]) for j in (1, 2)}
    p2 = {g.state(f"v{j}"): Distribution([(0, light), (1, heavy)]) for j in (1, 2)}
    return StationaryStrategy(1, p1), StationaryStrategy(2, p2)


def low_outcome_reply(g: GameStructure, sigma: StationaryStrategy) -> StationaryStrategy:
    """Pure player-2 reply in the safety duel that punishes an impatient player-1 strategy.

    At v_j: if player 1 gives action 2 positive weight, play action j
    (winning the race on the mismatched branch); if player 1 is pure on
    action 1, play the other side's action, which hands play to the far chain.
    """
    if sigma.player != 1:
        raise DomainError("the punishing reply is built against player 1's strategy")
    choice = {}
    for j in (1, 2):
        s = g.state(f"v{j}")
        d = sigma.at(s)
        reply = j - 1 if d[1] > 0 else (2 - j)
        choice[s] = Distribution.point(reply)
    return StationaryStrategy(2, choice)


# ---------------------------------------------------------------- exact duel values


@dataclass(frozen=True)
class DuelValueTable:
    n: int
    m: int
    game: GameStructure
    values: tuple[Fraction, ...]
    player1: StationaryStrategy
    player2: StationaryStrategy

    def value(self, name: str) -> Fraction:
        return self.values[self.game.state(name)]


class BitSizeExceeded(DomainError):
    pass


def exact_duel_values(n: int, m: int, max_bits: int = DEFAULT_MAX_BITS) -> DuelValueTable:
    """Exact values and optimal stationary strategies of the Purgatory Duel.

    Uses val(vs) = 1/2, solves side 1 backwards from the top level, sets side
    2 by complement, and then re-certifies the whole table as a fixpoint of
    the local games.
    """
    g = purgatory_duel(n, m)
    values = [Fraction(0)] * g.num_states
    values[g.state("top")] = Fraction(1)
    values[g.state("vs")] = Fraction(1, 2)
    for j in range(n, 0, -1):
        s = g.state(f"v1_{j}")
        value = solve_matrix_game(local_matrix(g, s, values)).value
        if bit_size(value) > max_bits:
            raise BitSizeExceeded(
                f"value of v1_{j} needs {bit_size(value)} bits, above the cap of {max_bits}"
            )
        values[s] = value
        values[g.state(f"v2_{j}")] = 1 - value
    residual = fixpoint_residual(g, values)
    broken = [g.name(s) for s, r in residual.items() if r != 0]
    if broken:
        raise ArithmeticError(f"duel table fails the fixpoint check at {broken}")
    p1, p2 = {}, {}
    for s in g.states:
        if g.action_count(s, 1) == 1:
            p1[s] = p2[s] = Distribution.point(0)
            continue
        solution = solve_matrix_game(local_matrix(g, s, values))
        p1[s], p2[s] = solution.row_strategy, solution.col_strategy
    return DuelValueTable(n, m, g, tuple(values), StationaryStrategy(1, p1), StationaryStrategy(2, p2))


# ---------------------------------------------------------------- projection and lifting


def project_strategy(g3: GameStructure, tau: StationaryStrategy) -> StationaryStrategy:
    """Marginals of a 3-state duel strategy, as a strategy on the one-level duel."""
    pairs = [pair_of_action(g3, tau.player, a) for a in range(g3.action_count(g3.state("vs"), tau.player))]
    m = 1 + max(max(p) for p in pairs)
    duel = purgatory_duel(1, m)
    d = tau.at(g3.state("vs"))
    first: dict[int, Fraction] = {}
    second: dict[int, Fraction] = {}
    for action, p in d.items():
        a, b = pairs[action]
        first[a] = first.get(a, Fraction(0)) + p
        second[b] = second.get(b, Fraction(0)) + p
    choice = {s: Distribution.point(0) for s in duel.states}
    choice[duel.state("v1_1")] = Distribution(first)
    choice[duel.state("v2_1")] = Distribution(second)
    return StationaryStrategy(tau.player, choice)


def lift_strategy(sigma: StationaryStrategy, m: int) -> StationaryStrategy:
    """Product-distribution strategy on the unrestricted 3-state duel with the given marginals."""
    duel = purgatory_duel(1, m)
    g3 = three_state_duel(m)
    first = sigma.at(duel.state("v1_1"))
    second = sigma.at(duel.state("v2_1"))
    if max(first.support) >= m or max(second.support) >= m:
        raise DomainError("strategy uses actions beyond m")
    weights = {a * m + b: p * q for a, p in first.items() for b, q in second.items()}
    choice = {s: Distribution.point(0) for s in g3.states}
    choice[g3.state("vs")] = Distribution(weights)
    return StationaryStrategy(sigma.player, choice)
