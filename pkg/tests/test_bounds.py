from __future__ import annotations

import functools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circlebounds import bounds
from circlebounds.errors import DomainError
from circlebounds.geometry import angles_to_interval, dist_to_interval

from .conftest import solved


@pytest.fixture(scope="module")
def psi5(golden_map):
    return bounds.decompose(golden_map, 5)


def test_decompose_real_midpoint(psi5):
    d = psi5.data
    a, b = d.J0
    w = psi5(0.5 * (a + b))
    lo, hi = d.f_In
    assert lo <= w.real <= hi and abs(w.imag) < 1e-14


def test_decompose_endpoint_bookkeeping(psi5, golden_map):
    d = psi5.data
    _, _, x_next = d.orbit.level(d.n + 1)
    # f^p(0) in J_0 coordinates is the closest-return point itself
    assert psi5(x_next + 0j) == pytest.approx(golden_map.lift(0.0), abs=1e-13)


def test_decompose_forward_check(psi5):
    d = psi5.data
    D1 = d.D(1)
    L1 = abs(d.orbit.level(1)[2])
    z = 0.5 * (D1.a + D1.b) + 0.3j * L1
    w = psi5(z)
    assert np.isfinite(w)
    assert psi5.forward_residual(z, w) < 1e-9


def test_level_data_orbit(psi5, golden_map):
    d = psi5.data
    assert d.p == 13 and d.J.shape == (13, 2)
    # F(J_{-i-1}) = J_{-i} + shift
    for i in range(d.p - 1):
        img = golden_map.lift_array(d.J[i + 1])
        assert np.allclose(img, d.J[i] + d.shift[i], atol=1e-13)


def test_trace_real_point_contained(golden_map, psi5):
    d = psi5.data
    a, b = d.J0
    tr = bounds.trace_backward(golden_map, 5, 0.5 * (a + b) + 0j, psi=psi5)
    assert {e.label for e in tr.events} <= {bounds.STAYED, bounds.CONTAINED}
    end = tr.z[-1] + d.k[-1]
    assert d.f_In[0] <= end.real <= d.f_In[1]


def test_trace_good_angle_bypass(golden_map, psi5):
    a, b = psi5.data.J0
    z = 0.5 * (a + b) + 1.6j * (b - a)
    tr = bounds.trace_backward(golden_map, 5, z, psi=psi5)
    assert len(tr.events) == 1
    assert tr.terminal.label == bounds.BYPASS
    assert tr.terminal.angle > 0.2 and tr.terminal.distance >= 1.0


def test_trace_outside_d1(golden_map, psi5):
    with pytest.raises(DomainError):
        bounds.trace_backward(golden_map, 5, 5.0 + 5.0j, psi=psi5)


def test_campaign_invariants(golden_map):
    n = 6
    psi = bounds.decompose(golden_map, n)
    d = psi.data
    zs = bounds.random_points(d.D(1), 30, seed=3)
    assert np.all(zs.imag > 0) and np.all(d.D(1).contains(zs))
    L1 = abs(d.orbit.level(1)[2])
    for tr in bounds.trace_many(golden_map, n, zs, psi=psi):
        assert tr.classified
        W = tr.z
        res = max(abs(complex(golden_map(W[i + 1])) - (W[i] + d.shift[i])) for i in range(len(W) - 1))
        assert res < 1e-9 * L1
        for e in tr.events:
            if e.label == bounds.JUMP:
                J = tuple(d.J[e.index])
                assert float(angles_to_interval(W[e.index], J)[()]) > tr.eps


def test_random_points_deterministic(psi5):
    D = psi5.data.D(1)
    assert np.array_equal(bounds.random_points(D, 10, 4), bounds.random_points(D, 10, 4))


def test_linear_growth_real_samples(psi5):
    d = psi5.data
    a, b = d.J0
    z = np.linspace(a, b, 41)[1:-1] + 0j
    w = psi5(z)
    fI = d.f_In
    resp = dist_to_interval(w, fI) / (fI[1] - fI[0])
    assert np.all(resp <= 1e-12)


def test_linear_growth_fit(golden_map, psi5):
    fit = bounds.fit_linear_growth(golden_map, 5, psi=psi5)
    assert math.isfinite(fit.C1) and math.isfinite(fit.C2)
    assert fit.survival >= 0.9
    assert fit.envelope_holds()
    alt = bounds.fit_linear_growth(golden_map, 5, D0="Dalpha", psi=psi5)
    assert math.isfinite(alt.C1) and math.isfinite(alt.C2)
    fine = bounds.fit_linear_growth(golden_map, 5, grid=(48, 96), psi=psi5)
    assert fine.C1 >= 0.95 * fit.C1 and fine.C2 >= 0.95 * fit.C2


def test_envelope_helper():
    x = np.array([0.1, 0.5, 2.0, 4.0])
    y = np.array([0.3, 0.7, 2.0, 3.0])
    C1, C2 = bounds.envelope(x, y)
    assert C2 == 0.7
    assert np.all(y <= C1 * x + C2 + 1e-12)
    assert C1 == pytest.approx(max((2.0 - 0.7) / 2.0, (3.0 - 0.7) / 4.0))


def test_cubic_fit(golden_map, psi5):
    cf = bounds.fit_cubic(golden_map, 5, B=5.0, psi=psi5)
    assert cf.c > 0
    assert np.all(cf.radii_w > cf.B)
    assert np.all(cf.radii_w >= cf.c * cf.radii_z**3 * (1 - 1e-12))
    cs = [bounds.fit_cubic(golden_map, 5, B=B, psi=psi5).c for B in (2.0, 5.0, 10.0)]
    assert all(c > 0 for c in cs)
    nxt = bounds.fit_cubic(golden_map, 6, B=5.0).c
    assert 0.1 <= nxt / cf.c <= 10.0


def test_saddle_node_trend():
    mult = []
    for N in (5, 10, 20, 40):
        f = solved("standard", f"[{N},1,1]")
        rep = bounds.saddle_node_probe(f, 0)
        assert rep.residual < 1e-11
        mult.append(rep.multiplier)
    dev = [abs(m - 1.0) for m in mult]
    assert all(a > b for a, b in zip(dev, dev[1:]))
    # near-parabolic: lambda ~ 1 + i alpha with alpha N approaching 2 pi from below
    for N, m in zip((5, 10, 20, 40), mult):
        assert abs(m.real - 1.0) < 1e-9
        assert 5.0 < N * m.imag < 2 * math.pi


def test_saddle_node_golden_contrast(golden_map):
    rep = bounds.saddle_node_probe(golden_map, 3)
    assert abs(rep.multiplier - 1.0) > 1.0


def test_saddle_node_no_real_fixed_point(golden_map):
    for which in ("slow", "return"):
        rep = bounds.saddle_node_probe(golden_map, 4, which)
        _, _, x = bounds.level_data(golden_map, 4).orbit.level(4)
        lo, hi = min(0.0, x), max(0.0, x)
        real_inside = abs(rep.point.imag) < 1e-9 and lo <= rep.point.real < hi
        assert not real_inside


def test_saddle_node_validation(golden_map):
    with pytest.raises(DomainError):
        bounds.saddle_node_probe(golden_map, -1)
    with pytest.raises(DomainError):
        bounds.saddle_node_probe(golden_map, 2, "other")


@functools.lru_cache(maxsize=None)
def _psi4():
    return bounds.decompose(solved("standard", "golden"), 4)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.1, 0.9))
def test_psi_forward_property(u, v):
    # points of D_1 in the upper half plane pull back with a small forward residual
    psi = _psi4()
    d = psi.data
    D = d.D(1)
    x = D.a + u * (D.b - D.a)
    r = 0.5 * (D.b - D.a)
    c = 0.5 * (D.a + D.b)
    y = v * math.sqrt(max(r * r - (x - c) ** 2, 0.0))
    z = complex(x, max(y, 1e-6))
    w = psi(np.array([z]))
    if np.isfinite(w[0]):
        assert psi.forward_residual(np.array([z]), w)[0] < 1e-9
