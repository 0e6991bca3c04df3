"""Exact rational arithmetic with a selectable backend.

All times and works in the simulator are exact rationals.  The hot loops
(event-time computation, allocation integrals, oracle enumeration) are
dominated by rational arithmetic, so we use gmpy2's compiled ``mpq`` type
when it is available and fall back to the pure-Python ``fractions.Fraction``
otherwise.  The backend is chosen once at import time; set
``TAPLAB_RATIONAL=fractions`` (or ``gmpy2``) to force a backend.

Both types normalise to lowest terms with a positive denominator and
interoperate with Python ints, which is all the rest of the package relies
on.  ``benchmarks/bench_backends.py`` compares the two.
"""

from __future__ import annotations

import os
from fractions import Fraction

_requested = os.environ.get("TAPLAB_RATIONAL", "").strip().lower()

if _requested in ("", "gmpy2"):
    try:
        from gmpy2 import mpq as _mpq  # type: ignore[import-not-found]

        BACKEND = "gmpy2"
    except ImportError:
        if _requested == "gmpy2":
            raise
        _mpq = None
        BACKEND = "fractions"
elif _requested in ("fractions", "python", "fraction"):
    _mpq = None
    BACKEND = "fractions"
else:
    raise RuntimeError(f"unknown TAPLAB_RATIONAL backend {_requested!r}")

if BACKEND == "gmpy2":
    Rat = _mpq
else:
    Rat = Fraction

#: Rational zero and one in the active backend.
ZERO = Rat(0)
ONE = Rat(1)

# Fixed rational stand-ins for irrational constants.  Assertions that
# involve them carry a 1e-2 tolerance, which dominates both errors.
PHI = Rat(987, 610)  # golden ratio, Fibonacci convergent, error < 3e-6
SQRT3 = Rat(26, 15)  # error < 1e-3

#: "Infinitesimal" arrival separation used by the lower-bound generators.
EPS = Rat(1, 2**20)


def rat(numerator, denominator=1):
    """Build a rational from ints, a rational, or a ``"a/b"`` string."""
    if isinstance(numerator, str):
        return parse_rat(numerator)
    return Rat(numerator) / Rat(denominator) if denominator != 1 else Rat(numerator)


def parse_rat(text: str):
    """Parse ``"a"`` or ``"a/b"`` into a rational."""
    text = text.strip()
    if "/" in text:
        a, b = text.split("/", 1)
        den = int(b)
        if den <= 0:
            raise ValueError(f"denominator must be positive in {text!r}")
        return Rat(int(a), den)
    return Rat(int(text))


def rat_str(value) -> str:
    """Serialise a rational as ``"a"`` or ``"a/b"`` in lowest terms."""
    value = Rat(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def is_power_of_two(value) -> bool:
    """True iff ``value`` equals 2**e for some (possibly negative) int e."""
    value = Rat(value)
    if value <= 0:
        return False
    num, den = int(value.numerator), int(value.denominator)
    if num == 1:
        return den & (den - 1) == 0
    if den == 1:
        return num & (num - 1) == 0
    return False


def pow2_ceil(value):
    """Smallest power of two (possibly with negative exponent) >= value."""
    value = Rat(value)
    if value <= 0:
        raise ValueError("pow2_ceil requires a positive argument")
    return Rat(2) ** pow2_ceil_exponent(value)


def pow2_ceil_exponent(value) -> int:
    """Smallest integer e with 2**e >= value (value > 0)."""
    value = Rat(value)
    num, den = int(value.numerator), int(value.denominator)
    e = num.bit_length() - den.bit_length()
    while not _pow2_at_least(e, num, den):
        e += 1
    while _pow2_at_least(e - 1, num, den):
        e -= 1
    return e


def _pow2_at_least(e: int, num: int, den: int) -> bool:
    """True iff 2**e >= num/den."""
    if e >= 0:
        return (1 << e) * den >= num
    return den >= num << (-e)


def floor_log2(value) -> int:
    """Exact log2 of a power-of-two rational."""
    if not is_power_of_two(value):
        raise ValueError(f"{value} is not a power of two")
    value = Rat(value)
    num, den = int(value.numerator), int(value.denominator)
    if den == 1:
        return num.bit_length() - 1
    return -(den.bit_length() - 1)
