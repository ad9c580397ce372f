"""Exact zero-sum matrix games.

The row player maximizes. Games are solved by a rational tableau simplex with
Bland's rule, so results are exact and the pivot sequence is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .game_model import (
    DomainError,
    Distribution,
    as_rational,
    distribution_patience,
)


@dataclass(frozen=True)
class MatrixGame:
    entries: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(as_rational(x) for x in row) for row in self.entries)
        if not rows or not rows[0]:
            raise DomainError("a matrix game needs at least one row and one column")
        if any(len(row) != len(rows[0]) for row in rows):
            raise DomainError("ragged matrix")
        object.__setattr__(self, "entries", rows)

    @classmethod
    def of(cls, rows: Sequence[Sequence[object]]) -> "MatrixGame":
        return cls(tuple(tuple(row) for row in rows))

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    def payoff(self, row: Distribution, col: Distribution) -> Fraction:
        return sum(
            (p * q * self.entries[i][j] for i, p in row.items() for j, q in col.items()),
            Fraction(0),
        )

    def row_guarantee(self, row: Distribution) -> Fraction:
        """Worst payoff of a row strategy against pure columns."""
        return min(
            sum((p * self.entries[i][j] for i, p in row.items()), Fraction(0))
            for j in range(self.cols)
        )

    def col_guarantee(self, col: Distribution) -> Fraction:
        """Largest payoff a pure row achieves against a column strategy."""
        return max(
            sum((q * self.entries[i][j] for j, q in col.items()), Fraction(0))
            for i in range(self.rows)
        )


@dataclass(frozen=True)
class MatrixSolution:
    value: Fraction
    row_strategy: Distribution
    col_strategy: Distribution

    @property
    def row_patience(self) -> Fraction:
        return distribution_patience(self.row_strategy)

    @property
    def col_patience(self) -> Fraction:
        return distribution_patience(self.col_strategy)


def _simplex_max_ones(a: list[list], one=Fraction(1)) -> tuple[list, list]:
    """Maximize sum(y) subject to a·y <= 1, y >= 0, for a strictly positive matrix a.

    Returns the primal optimum y and the dual optimum x (min sum(x) with
    a^T x >= 1). The origin is feasible, so no phase one is needed. Works
    over any exact field; ``one`` fixes the number type.
    """
    zero = one - one
    r, c = len(a), len(a[0])
    width = c + r
    # Column j < c is y_j, column c + i is the slack of row i.
    tableau = [a[i][:] + [one if k == i else zero for k in range(r)] + [one] for i in range(r)]
    basis = [c + i for i in range(r)]
    # Reduced costs for a maximization: entering candidates have positive cost.
    cost = [one] * c + [zero] * r
    while True:
        entering = next((j for j in range(width) if cost[j] > 0), None)
        if entering is None:
            break
        best = None
        for i in range(r):
            pivot = tableau[i][entering]
            if pivot > 0:
                key = (tableau[i][-1] / pivot, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        # a is positive, so every column has a positive entry: never unbounded.
        row = best[1]
        pivot = tableau[row][entering]
        tableau[row] = [x / pivot for x in tableau[row]]
        for i in range(r):
            factor = tableau[i][entering]
            if i != row and factor:
                tableau[i] = [x - factor * y for x, y in zip(tableau[i], tableau[row])]
        factor = cost[entering]
        cost = [x - factor * y for x, y in zip(cost, tableau[row][:width])]
        basis[row] = entering
    y = [zero] * c
    for i, var in enumerate(basis):
        if var < c:
            y[var] = tableau[i][-1]
    x = [-cost[c + i] for i in range(r)]
    return y, x


def solve_matrix_game(game: MatrixGame) -> MatrixSolution:
    """Exact value and one optimal strategy per player."""
    low = min(min(row) for row in game.entries)
    shift = 1 - low
    positive = [[x + shift for x in row] for row in game.entries]
    y, x = _simplex_max_ones(positive)
    total = sum(y, Fraction(0))
    dual_total = sum(x, Fraction(0))
    if total != dual_total or total <= 0:
        raise ArithmeticError("simplex failed to certify optimality")
    shifted_value = 1 / total
    row = Distribution([(i, xi / total) for i, xi in enumerate(x) if xi])
    col = Distribution([(j, yj / total) for j, yj in enumerate(y) if yj])
    value = shifted_value - shift
    if game.row_guarantee(row) != value or game.col_guarantee(col) != value:
        raise ArithmeticError("simplex strategies do not certify the value")
    return MatrixSolution(value, row, col)


def matrix_value(entries: Sequence[Sequence], one=Fraction(1)):
    """Value only, over any exact field, certified by LP duality.

    Used by value iteration, where entries can be huge and building
    Distribution objects would cost a gcd per probability.
    """
    low = min(min(row) for row in entries)
    shift = one - low
    positive = [[x + shift for x in row] for row in entries]
    y, x = _simplex_max_ones(positive, one)
    total = sum(y, one - one)
    primal_ok = all(sum((a * b for a, b in zip(row, y)), one - one) <= one for row in positive)
    dual_ok = all(
        sum((positive[i][j] * x[i] for i in range(len(x))), one - one) >= one for j in range(len(y))
    )
    if total <= 0 or total != sum(x, one - one) or not (primal_ok and dual_ok):
        raise ArithmeticError("simplex failed to certify optimality")
    return one / total - shift


def build_tri_matrix(x, y, z, m: int) -> MatrixGame:
    """m×m matrix with x below the diagonal, y on it and z above it."""
    if m < 1:
        raise DomainError(f"tri-band matrix needs m >= 1, got {m}")
    x, y, z = as_rational(x), as_rational(y), as_rational(z)
    return MatrixGame(
        tuple(tuple(x if i > j else y if i == j else z for j in range(m)) for i in range(m))
    )


def closed_form_tri(eps, m: int) -> MatrixSolution:
    """Closed-form solution of the tri-band game with 0 below, 1/2+eps on and 1/2 above the diagonal."""
    eps = as_rational(eps)
    if not 0 < eps <= Fraction(1, 2):
        raise DomainError(f"eps must lie in (0, 1/2], got {eps}")
    if m < 1:
        raise DomainError(f"tri-band matrix needs m >= 1, got {m}")
    ratio = (Fraction(1, 2) + eps) / eps
    weights = [ratio ** (m - a) for a in range(1, m + 1)]
    total = sum(weights, Fraction(0))
    row = [w / total for w in weights]
    value = eps * row[-1] + Fraction(1, 2)
    return MatrixSolution(
        value,
        Distribution(enumerate(row)),
        Distribution((a, row[m - 1 - a]) for a in range(m)),
    )
