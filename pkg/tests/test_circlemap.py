from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circlebounds import (
    DomainError,
    RationalLock,
    closest_returns,
    continued_fraction,
    rotation_number,
    standard_map,
)
from circlebounds.circlemap import (
    CriticalCircleMap,
    blaschke_circle_map,
    detect_cycle,
    inverse_branch,
    rotation_bracket,
)
from circlebounds.errors import BranchAmbiguity, InsufficientBudget
from circlebounds.numbertheory import GOLDEN

from .conftest import solved


def birkhoff(f: CriticalCircleMap, N: int) -> float:
    # independent estimate: |F^N(0)/N - rho| < 1/N
    return f.iterate(0.0, N) / N


def test_standard_map_basics():
    f = standard_map(0.0)
    assert f.lift(0.0) == 0.0
    assert rotation_number(f) == 0.0
    assert standard_map(0.5).lift(0.0) == 0.5


@pytest.mark.parametrize("family", ["standard", "blaschke-circle"])
def test_cubic_critical_point_and_degree_one(family):
    f = CriticalCircleMap(family, 0.3)
    h = 1e-3
    # F(h) - F(0) ~ c h^3 with c != 0
    d3 = (f.lift(h) - 2 * f.lift(0.0) + f.lift(-h)) / h**2
    assert abs(complex(f.derivative(0.0))) < 1e-14
    assert abs(d3) < 1e-6
    c = (f.lift(h) - f.lift(-h)) / (2 * h**3)
    assert abs(c) > 1.0
    x = np.linspace(-1.0, 1.0, 1001)
    assert np.max(np.abs(f.lift_array(x + 1.0) - f.lift_array(x) - 1.0)) < 1e-12
    assert np.all(np.diff(f.lift_array(np.linspace(0, 1, 2001))) >= 0.0)


def test_complex_extension_agrees_on_reals():
    for f in (standard_map(0.2), blaschke_circle_map(0.2)):
        x = np.linspace(-0.5, 0.5, 101)
        assert np.max(np.abs(f(x + 0j).real - f.lift_array(x))) < 1e-13
        assert np.max(np.abs(f(x + 0j).imag)) < 1e-13


def test_golden_parameter_against_birkhoff_oracle(golden_map):
    assert abs(golden_map.param - 0.6066) < 1e-3
    assert abs(birkhoff(golden_map, 200_000) - GOLDEN) < 1e-5
    assert abs(rotation_number(golden_map) - GOLDEN) < 1e-8


def test_blaschke_golden_rotation():
    f = solved("blaschke-circle", "golden")
    assert abs(rotation_number(f) - GOLDEN) < 1e-8
    assert abs(birkhoff(f, 200_000) - GOLDEN) < 1e-5


def test_rotation_budget_guard():
    with pytest.raises(DomainError):
        rotation_number(standard_map(0.3), budget=10)


def test_closest_returns_fibonacci(golden_map):
    orb = closest_returns(golden_map, 10)
    assert list(orb.q) == [1, 2, 3, 5, 8, 13, 21, 34, 55, 89]
    pts = np.asarray(orb.points)
    assert np.all(np.sign(pts[:-1]) != np.sign(pts[1:]))
    assert np.all(np.diff(orb.lengths) < 0)


def test_closest_returns_two_then_golden():
    f = solved("standard", "[2,1,1]")
    assert list(closest_returns(f, 6).q) == [2, 3, 5, 8, 13, 21]


def test_returns_match_convergents(periodic12_map):
    orb = closest_returns(periodic12_map, 10)
    rho = continued_fraction(rotation_number(periodic12_map), 11)
    assert list(orb.q) == rho.q[1:11]


def test_ratio_band(golden_map):
    # observed band; the ratios approach the golden scaling constant ~1.2885
    r = closest_returns(golden_map, 11).ratios()[3:10]
    assert np.all((r > 1.25) & (r < 1.35))
    assert abs(r[-1] - 1.2885) < 2e-3


def test_rational_lock():
    with pytest.raises(RationalLock):
        closest_returns(standard_map(0.5), 5)


def test_detect_cycle_on_plateau():
    f = standard_map(0.5)
    assert detect_cycle(f, 1000, 10) == 1 / 2


def test_rotation_bracket_contains_truth(golden_map):
    est, lo, hi = rotation_bracket(golden_map, 100_000)
    assert lo <= GOLDEN <= hi
    assert hi - lo < 1e-8


def test_insufficient_budget():
    with pytest.raises(InsufficientBudget):
        rotation_bracket(standard_map(1e-4), 1000, strict=True)


def test_inverse_branch_real_preimage(golden_map):
    x0 = 0.3
    w = inverse_branch(golden_map, golden_map.lift(x0), x0 + 0.01)
    assert abs(w - x0) < 1e-10


def test_inverse_branch_at_critical_value(golden_map):
    w = inverse_branch(golden_map, golden_map.lift(0.0), 0.05, tol=1e-12)
    assert abs(complex(golden_map(w)) - golden_map.lift(0.0)) < 1e-12
    # cubic flattening: preimage accuracy is the cube root of the residual
    assert abs(w) < 1e-3


def test_inverse_branch_complex_forward_check(golden_map):
    orb = closest_returns(golden_map, 6)
    x4 = orb.points[3]
    z = 0.5 * x4 + 0.1j
    seed = golden_map.inverse_real(z.real) + 0.0j
    w = inverse_branch(golden_map, z, seed + 0.01j, max_jump=0.5)
    assert np.isfinite(w)
    assert abs(complex(golden_map(w)) - z) < 1e-12


def test_inverse_branch_jump_guard(golden_map):
    with pytest.raises(BranchAmbiguity):
        inverse_branch(golden_map, 3.0 + 2.0j, 0.1, max_jump=0.05)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_rotation_number_monotone(a, b):
    lo, hi = sorted((a, b))
    r_lo = rotation_bracket(standard_map(lo), 20_000, strict=False)
    r_hi = rotation_bracket(standard_map(hi), 20_000, strict=False)
    # brackets are certified, so monotonicity shows up as ordered brackets
    assert r_lo[1] <= r_hi[2] + 1e-12


@settings(max_examples=25, deadline=None)
@given(st.floats(-3.0, 3.0), st.sampled_from(["standard", "blaschke-circle"]), st.floats(0.0, 1.0))
def test_lift_degree_one(x, family, param):
    f = CriticalCircleMap(family, param)
    assert abs(f.lift(x + 1.0) - f.lift(x) - 1.0) < 1e-12
    assert f.lift(x + 1e-6) >= f.lift(x) - 1e-15


def test_unknown_family():
    with pytest.raises(DomainError):
        CriticalCircleMap("tent", 0.1)


def test_circle_points_alternate(golden_map):
    orb = closest_returns(golden_map, 8)
    for m in range(1, 8):
        _, _, x = orb.level(m)
        _, _, y = orb.level(m + 1)
        assert x * y < 0
        assert abs(y) < abs(x)
    assert orb.interval(1)[0] <= 0.0 <= orb.interval(1)[1]
    assert math.isclose(orb.level(0)[2], golden_map.lift(0.0))
