"""Independent reference implementations used only by the tests.

Nothing here calls the package's solvers: matrix games are solved by
enumerating square kernels with Cramer's rule, and MDPs by enumerating
every positional policy and solving each chain with a separate elimination.
"""

from __future__ import annotations

import itertools
from fractions import Fraction


def _det(m: list[list[Fraction]]) -> Fraction:
    n = len(m)
    total = Fraction(0)
    for perm in itertools.permutations(range(n)):
        sign = 1
        for i in range(n):
            for j in range(i + 1, n):
                if perm[i] > perm[j]:
                    sign = -sign
        prod = Fraction(sign)
        for i in range(n):
            prod *= m[i][perm[i]]
            if not prod:
                break
        total += prod
    return total


def _cramer(a: list[list[Fraction]], b: list[Fraction]):
    d = _det(a)
    if d == 0:
        return None
    out = []
    for col in range(len(a)):
        swapped = [row[:col] + [b[i]] + row[col + 1:] for i, row in enumerate(a)]
        out.append(_det(swapped) / d)
    return out


def _side(matrix, rows, cols):
    """Solve sum_i x_i matrix[i][j] = v (j in cols), sum x = 1 for x on rows."""
    k = len(rows)
    a = [[matrix[i][j] for i in rows] + [Fraction(-1)] for j in cols]
    a.append([Fraction(1)] * k + [Fraction(0)])
    b = [Fraction(0)] * k + [Fraction(1)]
    return _cramer(a, b)


def matrix_value_by_kernels(entries) -> Fraction:
    """Value of a zero-sum matrix game by enumerating square support pairs."""
    entries = [[Fraction(x) for x in row] for row in entries]
    shift = 1 - min(min(row) for row in entries)
    matrix = [[x + shift for x in row] for row in entries]
    r, c = len(matrix), len(matrix[0])
    for k in range(1, min(r, c) + 1):
        for rows in itertools.combinations(range(r), k):
            for cols in itertools.combinations(range(c), k):
                xs = _side(matrix, rows, cols)
                if xs is None or any(x < 0 for x in xs[:k]):
                    continue
                transposed = [[matrix[i][j] for i in range(r)] for j in range(c)]
                ys = _side(transposed, cols, rows)
                if ys is None or any(y < 0 for y in ys[:k]):
                    continue
                v = xs[k]
                if ys[k] != v:
                    continue
                row_ok = all(sum(xs[t] * matrix[i][j] for t, i in enumerate(rows)) >= v for j in range(c))
                col_ok = all(sum(ys[t] * matrix[i][j] for t, j in enumerate(cols)) <= v for i in range(r))
                if row_ok and col_ok:
                    return v - shift
    raise AssertionError("no kernel found")


def _gauss(a, b):
    n = len(a)
    m = [row[:] + [b[i]] for i, row in enumerate(a)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(m[r][col]))
        if m[piv][col] == 0:
            raise ArithmeticError("singular")
        m[col], m[piv] = m[piv], m[col]
        for r in range(col + 1, n):
            f = m[r][col] / m[col][col]
            if f:
                for k in range(col, n + 1):
                    m[r][k] -= f * m[col][k]
    x = [Fraction(0)] * n
    for i in range(n - 1, -1, -1):
        x[i] = (m[i][n] - sum(m[i][k] * x[k] for k in range(i + 1, n))) / m[i][i]
    return x


def chain_reach(rows: list[dict[int, Fraction]], target: set[int]) -> list[Fraction]:
    """Reach probabilities of a chain given as a list of successor dicts."""
    n = len(rows)
    reach = set(target)
    grew = True
    while grew:
        grew = False
        for s in range(n):
            if s not in reach and any(t in reach for t in rows[s]):
                reach.add(s)
                grew = True
    unknown = sorted(reach - target)
    pos = {s: i for i, s in enumerate(unknown)}
    a = [[Fraction(int(i == j)) for j in range(len(unknown))] for i in range(len(unknown))]
    b = [Fraction(0)] * len(unknown)
    for s in unknown:
        for t, p in rows[s].items():
            if t in target:
                b[pos[s]] += p
            elif t in pos:
                a[pos[s]][pos[t]] -= p
    x = _gauss(a, b) if unknown else []
    return [Fraction(1) if s in target else x[pos[s]] if s in pos else Fraction(0) for s in range(n)]


def mdp_value_by_enumeration(actions, transition, kind, targets, maximize):
    """Per-state optimum over all positional policies.

    ``transition[(s, a)]`` is a dict successor -> probability.
    """
    n = len(actions)
    targets = set(targets)
    best = None
    for policy in itertools.product(*(range(k) for k in actions)):
        rows = [dict(transition[(s, policy[s])]) for s in range(n)]
        if kind == "reach":
            values = chain_reach(rows, targets)
        else:
            values = [1 - x for x in chain_reach(rows, set(range(n)) - targets)]
        if best is None:
            best = values
        else:
            pick = max if maximize else min
            best = [pick(a, b) for a, b in zip(best, values)]
    return best
