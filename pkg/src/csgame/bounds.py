"""Closed-form bound calculators with exact, conservatively rounded arithmetic.

Natural logarithms are enclosed in rational intervals using the series
ln x = e·ln 2 + 2·atanh((r-1)/(r+1)) with x = 2^e·r and 1 <= r < 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .game_model import DomainError, as_rational, format_rational

LN_PRECISION_BITS = 128
TOWER_VALUE_CAP_BITS = 1_000_000

BOUND_NAMES = {
    "a": "horizon_ell",
    "b": "roundedness_q",
    "c": "duel_value",
    "d": "duel_patience",
    "e": "safety_duel_patience",
}


def _atanh_interval(y: Fraction, bits: int) -> tuple[Fraction, Fraction]:
    """Enclosure of atanh(y) for 0 <= y <= 1/3."""
    if y == 0:
        return Fraction(0), Fraction(0)
    total = Fraction(0)
    power = y
    square = y * y
    k = 0
    tolerance = Fraction(1, 2 ** bits)
    while True:
        term = power / (2 * k + 1)
        total += term
        k += 1
        power *= square
        tail = power / ((2 * k + 1) * (1 - square))
        if tail < tolerance:
            return total, total + tail


def ln_interval(x, bits: int = LN_PRECISION_BITS) -> tuple[Fraction, Fraction]:
    """Rational lo <= ln(x) <= hi with hi - lo below roughly 2^-bits times |exponent|."""
    x = as_rational(x)
    if x <= 0:
        raise DomainError("logarithm of a nonpositive number")
    exponent = x.numerator.bit_length() - x.denominator.bit_length()
    r = x / Fraction(2) ** exponent
    if r < 1:
        exponent -= 1
        r *= 2
    elif r >= 2:
        exponent += 1
        r /= 2
    ln2_lo, ln2_hi = (2 * v for v in _atanh_interval(Fraction(1, 3), bits))
    r_lo, r_hi = (2 * v for v in _atanh_interval((r - 1) / (r + 1), bits))
    if exponent >= 0:
        return exponent * ln2_lo + r_lo, exponent * ln2_hi + r_hi
    return exponent * ln2_hi + r_lo, exponent * ln2_lo + r_hi


def integer_root_bounds(value: int, degree: int) -> tuple[int, int]:
    """floor and ceil of the degree-th root of a nonnegative integer."""
    if value < 0:
        raise DomainError("root of a negative integer")
    if value < 2:
        return value, value
    guess = 1 << ((value.bit_length() + degree - 1) // degree)
    while True:
        better = ((degree - 1) * guess + value // guess ** (degree - 1)) // degree
        if better >= guess:
            break
        guess = better
    while guess ** degree > value:
        guess -= 1
    while (guess + 1) ** degree <= value:
        guess += 1
    return guess, guess if guess ** degree == value else guess + 1


def rational_power_bounds(base: Fraction, exponent: Fraction, bits: int = 64) -> tuple[Fraction, Fraction]:
    """Enclosure of base^exponent for base > 0; exact (lo == hi) when the root is rational."""
    if exponent < 0:
        return rational_power_bounds(1 / base, -exponent, bits)
    raised = base ** exponent.numerator
    degree = exponent.denominator
    num_lo, num_hi = integer_root_bounds(raised.numerator, degree)
    den_lo, den_hi = integer_root_bounds(raised.denominator, degree)
    if num_lo == num_hi and den_lo == den_hi:
        exact = Fraction(num_lo, den_lo)
        return exact, exact
    scale = 2 ** bits
    scaled = raised.numerator * scale ** degree
    lo_root = integer_root_bounds(scaled // raised.denominator, degree)[0]
    hi_root = integer_root_bounds(-(-scaled // raised.denominator), degree)[1]
    return Fraction(lo_root, scale), Fraction(hi_root, scale)


@dataclass(frozen=True)
class BoundReport:
    name: str
    parameters: tuple[tuple[str, str], ...]
    direction: str
    value: Fraction | None
    integer: int | None
    log2: Fraction | None
    interval: tuple[Fraction, Fraction] | None

    def as_dict(self) -> dict:
        def fmt(x):
            return None if x is None else format_rational(x)

        return {
            "name": self.name,
            "parameters": dict(self.parameters),
            "direction": self.direction,
            "value": fmt(self.value),
            "integer": None if self.integer is None else str(self.integer),
            "log2": fmt(self.log2),
            "interval": None if self.interval is None else [fmt(x) for x in self.interval],
        }


def _positive_int(params: dict, key: str) -> int:
    if key not in params:
        raise DomainError(f"missing parameter {key}")
    value = params[key]
    if isinstance(value, str):
        value = int(value)
    if not isinstance(value, int) or value < 1:
        raise DomainError(f"{key} must be a positive integer")
    return value


def _open_unit(params: dict, key: str, upper_inclusive: bool = False) -> Fraction:
    if key not in params:
        raise DomainError(f"missing parameter {key}")
    value = as_rational(params[key])
    ok = 0 < value <= 1 if upper_inclusive else 0 < value < 1
    if not ok:
        raise DomainError(f"{key} = {format_rational(value)} is out of range")
    return value


def _echo(**params) -> tuple[tuple[str, str], ...]:
    return tuple((k, format_rational(v) if isinstance(v, Fraction) else str(v)) for k, v in params.items())


def bounds(which: str, params: dict) -> BoundReport:
    """Evaluate one of the named bounds (a)-(e)."""
    if which not in BOUND_NAMES:
        raise DomainError(f"unknown bound {which!r}; expected one of {sorted(BOUND_NAMES)}")
    name = BOUND_NAMES[which]
    if which in ("a", "b"):
        n = _positive_int(params, "n")
        k = _positive_int(params, "k")
        eps = _open_unit(params, "eps")
        delta = _open_unit(params, "delta_min", upper_inclusive=True)
        ln_lo, ln_hi = ln_interval(4 * k / eps)
        factor = n * k * delta ** -n
        echo = dict(n=n, k=k, eps=eps, delta_min=delta)
        if which == "b":
            m = _positive_int(params, "m")
            factor = 4 * n * k * k * m / eps * delta ** -n
            echo = dict(n=n, k=k, m=m, eps=eps, delta_min=delta)
        hi = factor * ln_hi
        return BoundReport(name, _echo(**echo), "upper", hi, math.ceil(hi), None, (factor * ln_lo, hi))
    n = _positive_int(params, "n")
    if which in ("c", "d"):
        m = _positive_int(params, "m")
        j = _positive_int(params, "j")
        if j > n:
            raise DomainError(f"level j = {j} exceeds n = {n}")
        echo = _echo(n=n, m=m, j=j)
        if which == "c":
            exponent = Fraction((1 - m) * m ** (n - j) - 1)
            value = Fraction(1, 2) + Fraction(2) ** int(exponent)
            return BoundReport(name, echo, "upper", value, None, exponent, None)
        exponent = (m - 1) ** 2 * Fraction(m) ** (n - j - 1)
        value = None
        integer = None
        if exponent.denominator == 1 and exponent <= TOWER_VALUE_CAP_BITS:
            integer = 2 ** int(exponent)
            value = Fraction(integer)
        return BoundReport(name, echo, "lower", value, integer, exponent, None)
    delta = _open_unit(params, "delta_min")
    if n < 3:
        raise DomainError("the safety duel patience bound needs n >= 3")
    exponent = Fraction(-(n - 3), 6)
    lo, hi = rational_power_bounds(delta, exponent)
    exact = lo if lo == hi else None
    return BoundReport(
        name,
        _echo(n=n, delta_min=delta),
        "lower",
        exact,
        None if exact is None or exact.denominator != 1 else exact.numerator,
        None,
        (lo, hi),
    )
