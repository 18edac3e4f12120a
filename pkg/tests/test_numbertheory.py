from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circlebounds import DomainError, RotationNumber, continued_fraction, gauss_map, parse_rotation
from circlebounds.errors import InsufficientDepth
from circlebounds.numbertheory import GOLDEN, evaluate, is_bounded_type

# 60 digits of pi; the oracle below does exact integer long division on it
PI_DIGITS = "3.14159265358979323846264338327950288419716939937510582097494"


def long_division_quotients(x: Fraction, depth: int) -> list[int]:
    out = []
    for _ in range(depth):
        x = 1 / x
        r = x.numerator // x.denominator
        out.append(r)
        x -= r
    return out


def test_golden_quotients_and_fibonacci():
    rho = continued_fraction(GOLDEN, 8)
    assert rho.quotients == (1,) * 8
    assert rho.q[1:] == [1, 2, 3, 5, 8, 13, 21, 34]
    assert not rho.numerically_rational


def test_two_then_golden():
    x = 1.0 / (2.0 + GOLDEN)
    assert abs(x - 0.3819660) < 1e-7
    assert continued_fraction(x, 5).quotients == (2, 1, 1, 1, 1)


def test_pi_minus_three_against_long_division():
    oracle = long_division_quotients(Fraction(PI_DIGITS) - 3, 4)
    assert oracle == [7, 15, 1, 292]
    assert list(continued_fraction(math.pi - 3.0, 4).quotients) == oracle


@pytest.mark.parametrize("x", [0.0, 1.0, 1.5, -0.2, math.nan, math.inf])
def test_domain(x):
    with pytest.raises(DomainError):
        continued_fraction(x, 4)


def test_depth_must_be_positive():
    with pytest.raises(DomainError):
        continued_fraction(0.3, 0)


def test_rational_input_flagged():
    rho = continued_fraction(0.375, 10)  # 3/8 = [2, 1, 2]
    assert rho.numerically_rational
    assert rho.quotients == (2, 1, 2)


def test_overflow_guard_flags_rational():
    rho = continued_fraction(1.0 / (1.0 + 2e6), 5)
    assert rho.numerically_rational
    assert rho.quotients == ()


def test_gauss_map_examples():
    two = continued_fraction(1.0 / (2.0 + GOLDEN), 12)
    g = gauss_map(two)
    assert g.quotients == (1,) * 11
    assert abs(g.value - 0.6180339887) < 1e-10
    gold = continued_fraction(GOLDEN, 10)
    assert gauss_map(gold).quotients == (1,) * 9
    pi4 = continued_fraction(math.pi - 3.0, 4)
    assert gauss_map(pi4).quotients == (15, 1, 292)


def test_gauss_map_needs_two():
    with pytest.raises(InsufficientDepth):
        gauss_map(continued_fraction(0.3, 1))


def test_bounded_type():
    assert is_bounded_type(continued_fraction(GOLDEN, 20), 1)
    assert not is_bounded_type(continued_fraction(1.0 / (2.0 + GOLDEN), 20), 1)
    assert not is_bounded_type(continued_fraction(math.pi - 3.0, 4), 100)


def test_parse_rotation_forms():
    assert parse_rotation("golden").quotients[:5] == (1,) * 5
    assert parse_rotation("[2,1,1]").quotients[:3] == (2, 1, 1)
    p = parse_rotation("periodic:1,2")
    assert p.quotients[:6] == (1, 2, 1, 2, 1, 2)
    # x = 1/(1 + 1/(2 + x))  =>  x^2 + 2x - 2 = 0
    assert abs(p.value - (math.sqrt(3.0) - 1.0)) < 1e-15
    with pytest.raises(DomainError):
        parse_rotation("nonsense")


def test_from_quotients_tail():
    rho = RotationNumber.from_quotients([3, 1], tail="golden")
    assert continued_fraction(rho.value, 6).quotients == (3, 1, 1, 1, 1, 1)
    with pytest.raises(DomainError):
        RotationNumber.from_quotients([0, 1])


# -- properties --------------------------------------------------------------


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=1e-4, max_value=1 - 1e-4), st.integers(1, 12))
def test_recurrence_and_round_trip(x, depth):
    rho = continued_fraction(x, depth)
    conv = rho.convergents
    assert conv[0] == (0, 1)
    for m, r in enumerate(rho.quotients, start=1):
        p_prev, q_prev = conv[m - 2] if m >= 2 else (1, 0)
        assert conv[m][1] == r * conv[m - 1][1] + q_prev
        assert conv[m][0] == r * conv[m - 1][0] + p_prev
        assert math.gcd(*conv[m]) == 1
    d = len(rho.quotients)
    if d:
        p, q = conv[d]
        assert evaluate(rho.quotients) == Fraction(p, q)
    qs = [q for _, q in conv[1:]]
    assert all(a < b for a, b in zip(qs[1:], qs[2:]))


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=1e-3, max_value=1 - 1e-3), st.integers(2, 10))
def test_convergent_error_bound(x, depth):
    rho = continued_fraction(x, depth)
    conv = rho.convergents
    exact = Fraction(x)
    for (p, q), (_, q1) in zip(conv[:-1], conv[1:]):
        assert abs(exact - Fraction(p, q)) <= Fraction(1, q * q1)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(1, 9), min_size=3, max_size=6))
def test_gauss_map_matches_analytic_shift(prefix):
    rho = RotationNumber.from_quotients(prefix)
    full = continued_fraction(rho.value, len(prefix) + 4)
    g = gauss_map(full)
    analytic = 1.0 / rho.value - math.floor(1.0 / rho.value)
    assert abs(g.value - analytic) < 1e-10
    assert g.quotients[: len(prefix) - 1] == tuple(prefix[1:])
