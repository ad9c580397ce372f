"""Exact rational backend for hot loops.

Uses GMP rationals from gmpy2 when it is installed (subquadratic gcd, which
matters once values reach hundreds of thousands of bits) and falls back to
fractions.Fraction otherwise. Public results are always Fractions.
"""

from __future__ import annotations

from fractions import Fraction

try:
    from gmpy2 import mpq as _mpq
except ImportError:  # pragma: no cover - exercised only without gmpy2
    _mpq = None

HAVE_GMP = _mpq is not None


def fast(x: Fraction):
    """Convert a Fraction to the backend type."""
    if _mpq is None:
        return x
    return _mpq(x.numerator, x.denominator)


def to_fraction(q) -> Fraction:
    """Convert a backend value to Fraction without repeating the gcd."""
    if isinstance(q, Fraction):
        return q
    n, d = int(q.numerator), int(q.denominator)
    try:
        # Backend values are already in lowest terms.
        return Fraction(n, d, _normalize=False)
    except TypeError:
        return Fraction(n, d)


def bit_length(q) -> int:
    return max(int(q.numerator).bit_length(), int(q.denominator).bit_length())


try:
    from gmpy2 import mpz as _mpz
except ImportError:  # pragma: no cover - exercised only without gmpy2
    _mpz = None


def int_to_str(n: int) -> str:
    """Decimal text of n with no digit-count cap."""
    try:
        return str(n)
    except ValueError:
        pass
    if _mpz is not None:
        return str(_mpz(n))
    if n < 0:
        return "-" + int_to_str(-n)
    half = (n.bit_length() * 3 // 10) // 2
    high, low = divmod(n, 10 ** half)
    return int_to_str(high) + int_to_str(low).rjust(half, "0")


def str_to_int(text: str) -> int:
    """Parse decimal digits with no digit-count cap."""
    try:
        return int(text)
    except ValueError:
        if not text.lstrip("+-").isdigit():
            raise
    if _mpz is not None:
        return int(_mpz(text))
    sign, digits = (-1, text[1:]) if text[0] == "-" else (1, text.lstrip("+"))
    half = len(digits) // 2
    return sign * (str_to_int(digits[:half]) * 10 ** (len(digits) - half) + str_to_int(digits[half:]))
