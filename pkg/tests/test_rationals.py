from hypothesis import given
from hypothesis import strategies as st

from taplab.rationals import (
    BACKEND,
    EPS,
    ONE,
    PHI,
    SQRT3,
    ZERO,
    Rat,
    floor_log2,
    is_power_of_two,
    parse_rat,
    pow2_ceil,
    pow2_ceil_exponent,
    rat,
    rat_str,
)

from conftest import rationals


def test_backend_selected():
    assert BACKEND in ("gmpy2", "fractions")


def test_constants():
    assert PHI == Rat(987, 610)
    assert SQRT3 == Rat(26, 15)
    assert EPS == Rat(1, 2**20)
    # convergents straddle their targets closely
    assert abs(PHI * PHI - PHI - 1) < Rat(1, 10**5)
    assert abs(SQRT3 * SQRT3 - 3) < Rat(1, 100)


def test_parse_and_str():
    assert parse_rat("3/4") == Rat(3, 4)
    assert parse_rat("7") == Rat(7)
    assert rat_str(Rat(6, 4)) == "3/2"
    assert rat_str(Rat(8, 4)) == "2"
    assert rat(2, 6) == Rat(1, 3)


@given(rationals(max_value=1000, max_denominator=997))
def test_rat_str_roundtrip(x):
    assert parse_rat(rat_str(x)) == x


@given(rationals(min_value=1, max_value=1000, max_denominator=64))
def test_exact_inverse(x):
    assert x * (ONE / x) == ONE


def test_power_of_two_predicates():
    assert is_power_of_two(Rat(4))
    assert is_power_of_two(Rat(1, 8))
    assert not is_power_of_two(Rat(3))
    assert not is_power_of_two(Rat(2, 3))
    assert not is_power_of_two(ZERO)


def test_pow2_ceil():
    assert pow2_ceil(Rat(3)) == Rat(4)
    assert pow2_ceil(Rat(4)) == Rat(4)
    assert pow2_ceil(Rat(1, 3)) == Rat(1, 2)
    assert pow2_ceil_exponent(Rat(5)) == 3
    assert pow2_ceil_exponent(Rat(1, 4)) == -2


@given(rationals(min_value=1, max_value=512, max_denominator=32))
def test_pow2_ceil_bounds(x):
    y = pow2_ceil(x)
    assert is_power_of_two(y)
    assert x <= y < 2 * x


@given(st.integers(min_value=-20, max_value=20))
def test_floor_log2_on_powers(e):
    assert floor_log2(Rat(2) ** e) == e
