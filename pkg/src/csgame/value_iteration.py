"""Value iteration for zero-sum concurrent reachability games."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .game_model import (
    DomainError,
    as_rational,
    Distribution,
    GameStructure,
    StationaryStrategy,
)
from .exact import bit_length, fast, to_fraction
from .matrix_game import MatrixGame, matrix_value, solve_matrix_game

ValueVector = tuple[Fraction, ...]

BUDGET_EXHAUSTED = "budget_exhausted"
GAP_BELOW_THRESHOLD = "gap_below_threshold"
FIXPOINT_REACHED = "fixpoint_reached"

DEFAULT_MAX_BITS = 1_000_000


def require_zero_sum(g: GameStructure) -> None:
    if not g.is_zero_sum():
        raise DomainError("expected a two-player game: reach for player 1, complementary safety for player 2")


def local_matrix(g: GameStructure, s: int, v: Sequence[Fraction]) -> MatrixGame:
    """Rows are player-1 actions, columns player-2 actions, entries E[v(next state)]."""
    require_zero_sum(g)
    if g.is_absorbing(s):
        raise DomainError(f"state {g.name(s)} is absorbing; it has no local game")
    rows, cols = g.action_count(s, 1), g.action_count(s, 2)
    return MatrixGame(
        tuple(
            tuple(
                sum((p * v[t] for t, p in g.delta(s, (i, j)).items()), Fraction(0))
                for j in range(cols)
            )
            for i in range(rows)
        )
    )


def bit_size(x: Fraction) -> int:
    return bit_length(x)


@dataclass(frozen=True)
class IterationTrace:
    vectors: tuple[ValueVector, ...]
    stop_reason: str

    def rows(self):
        for t, vector in enumerate(self.vectors):
            for s, value in enumerate(vector):
                yield t, s, value

    @property
    def last(self) -> ValueVector:
        return self.vectors[-1]


def initial_vector(g: GameStructure) -> ValueVector:
    targets = g.objective(1).targets
    return tuple(Fraction(int(s in targets)) for s in g.states)


class _FastStepper:
    """One value-iteration step on backend rationals, with the game's probabilities converted once."""

    def __init__(self, g: GameStructure):
        self.one = fast(Fraction(1))
        targets = g.objective(1).targets
        self.fixed = {s for s in g.states if s in targets or g.is_absorbing(s)}
        self.cells = {
            s: [
                [
                    [(t, fast(p)) for t, p in g.delta(s, (i, j)).items()]
                    for j in range(g.action_count(s, 2))
                ]
                for i in range(g.action_count(s, 1))
            ]
            for s in g.states
            if s not in self.fixed
        }
        self.states = g.states

    def step(self, v: list) -> list:
        zero = self.one - self.one
        out = []
        for s in self.states:
            if s in self.fixed:
                out.append(v[s])
                continue
            entries = [[sum((p * v[t] for t, p in cell), zero) for cell in row] for row in self.cells[s]]
            out.append(matrix_value(entries, self.one))
        return out


def iterate_once(g: GameStructure, v: ValueVector) -> ValueVector:
    require_zero_sum(g)
    if len(v) != g.num_states:
        raise DomainError(f"value vector has {len(v)} entries, game has {g.num_states} states")
    result = _FastStepper(g).step([fast(as_rational(x)) for x in v])
    return tuple(to_fraction(x) for x in result)


def value_iterate(
    g: GameStructure,
    budget: int,
    gap_threshold: Fraction | None = None,
    max_bits: int = DEFAULT_MAX_BITS,
) -> IterationTrace:
    """Run up to ``budget`` steps from the indicator of player 1's targets.

    ``gap_threshold`` only detects a stall; it does not certify closeness to
    the value. A step whose values would exceed ``max_bits`` is dropped and
    the trace ends with ``budget_exhausted``.
    """
    require_zero_sum(g)
    if budget < 0:
        raise DomainError("budget must be nonnegative")
    stepper = _FastStepper(g)
    threshold = None if gap_threshold is None else fast(as_rational(gap_threshold))
    current = [fast(x) for x in initial_vector(g)]
    raw = [current]
    reason = BUDGET_EXHAUSTED
    for _ in range(budget):
        nxt = stepper.step(current)
        if nxt == current:
            reason = FIXPOINT_REACHED
            break
        if any(bit_length(x) > max_bits for x in nxt):
            break
        raw.append(nxt)
        if threshold is not None and all(b - a < threshold for a, b in zip(current, nxt)):
            reason = GAP_BELOW_THRESHOLD
            break
        current = nxt
    vectors = tuple(tuple(to_fraction(x) for x in vector) for vector in raw)
    return IterationTrace(vectors, reason)


def greedy_strategy_from_values(g: GameStructure, v: Sequence[Fraction], player: int) -> StationaryStrategy:
    """At each state, the player's optimal strategy in the local game under ``v``."""
    require_zero_sum(g)
    choice = {}
    for s in g.states:
        if g.action_count(s, player) == 1 or g.is_absorbing(s):
            choice[s] = Distribution.point(0)
            continue
        solution = solve_matrix_game(local_matrix(g, s, v))
        choice[s] = solution.row_strategy if player == 1 else solution.col_strategy
    return StationaryStrategy(player, choice)


def fixpoint_residual(g: GameStructure, v: Sequence[Fraction]) -> dict[int, Fraction]:
    """Per-state difference val(A^s[v]) - v(s); targets must carry 1, other absorbing states 0."""
    require_zero_sum(g)
    targets = g.objective(1).targets
    residual = {}
    for s in g.states:
        if s in targets:
            residual[s] = 1 - v[s]
        elif g.is_absorbing(s):
            residual[s] = -v[s]
        else:
            residual[s] = solve_matrix_game(local_matrix(g, s, v)).value - v[s]
    return residual
