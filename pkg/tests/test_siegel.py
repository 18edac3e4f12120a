from __future__ import annotations

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circlebounds import parse_rotation
from circlebounds.errors import DomainError
from circlebounds.numbertheory import GOLDEN
from circlebounds.siegel import (
    BlaschkeMap,
    GridSpec,
    critical_hits,
    density_probe,
    drop,
    drop_in_piece,
    empty_fraction,
    equipotential,
    fixed_point_beta,
    green,
    inscribed_disc_polygon,
    render_blaschke,
    render_quadratic,
    solve_tau,
    symmetry_audit,
    trace_ray,
    verify_rotation,
    winding_number,
)
from circlebounds.siegel.blaschke import fixed_points, on_circle
from circlebounds.siegel.puzzle import (
    backward_returns,
    complex_backward_orbit,
    is_simple,
    trace_on_raster,
)
from circlebounds.siegel.render import (
    BASIN_INF,
    BASIN_ZERO,
    DISC,
    DROP,
    J_CAND,
    classify_blaschke,
    read_pgm,
)

# --------------------------------------------------------------------------
# the map
# --------------------------------------------------------------------------


def test_circle_invariance(golden_blaschke):
    z = on_circle(np.linspace(0.0, 1.0, 10_000, endpoint=False))
    assert np.max(np.abs(np.abs(golden_blaschke(z)) - 1.0)) < 1e-12


def test_cubic_critical_point(golden_blaschke):
    f = golden_blaschke
    assert abs(complex(f.derivative(1.0))) < 1e-10
    assert abs(complex(f.second_derivative(1.0))) < 1e-8
    assert abs(complex(f.third_derivative(1.0))) == pytest.approx(3.0)
    # finite-difference oracle for f'''
    h = 1e-2
    fd = (f(1 + 2 * h) - 2 * f(1 + h) + 2 * f(1 - h) - f(1 - 2 * h)) / (2 * h**3)
    assert abs(fd - complex(f.third_derivative(1.0))) < 1e-2


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(-3, 3), st.floats(-3, 3))
def test_reflection_symmetry(tau, x, y):
    z = complex(x, y)
    if abs(z) < 0.2 or abs(abs(z) - 1 / 3) < 1e-3 or abs(z - 1 / 3) < 1e-3:
        return
    f = BlaschkeMap(tau)
    lhs = complex(f(1.0 / z.conjugate()))
    rhs = 1.0 / complex(f(z)).conjugate()
    assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs))


def test_tau_zero_fixes_one():
    f = BlaschkeMap(0.0)
    assert complex(f(1.0)) == pytest.approx(1.0)
    assert f.circle_map().lift(0.0) == 0.0


def test_solve_tau_golden(golden_blaschke):
    lo, hi = verify_rotation(golden_blaschke)
    assert lo - 1e-8 <= GOLDEN <= hi + 1e-8
    assert abs(0.5 * (lo + hi) - GOLDEN) < 1e-8


def test_solve_tau_monotone(golden_blaschke):
    other = solve_tau(parse_rotation("[2,1,1]"), 1e-8)
    assert other.tau != golden_blaschke.tau
    # rho = 0.382 < 0.618, so tau must be smaller
    assert other.tau < golden_blaschke.tau
    assert other.bracket[1] <= golden_blaschke.bracket[0]


def test_solve_tau_domain():
    with pytest.raises(DomainError):
        solve_tau(1.5)
    with pytest.raises(DomainError):
        solve_tau(parse_rotation("0.5"))


def test_preimages_structure(golden_blaschke):
    f = golden_blaschke
    c = cmath.exp(0.7j)
    roots = f.preimages(c)
    assert np.allclose(f(roots), c, atol=1e-12)
    mods = np.sort(np.abs(roots))
    assert mods[0] < 1 - 1e-6 and abs(mods[1] - 1) < 1e-12 and mods[2] > 1 + 1e-6


def test_beta(golden_blaschke):
    f = golden_blaschke
    beta = fixed_point_beta(f)
    assert abs(complex(f(beta)) - beta) < 1e-12
    assert abs(complex(f.derivative(beta))) > 1.0
    # oracle: the quadratic for the fixed points other than 0 and infinity
    lam = f.lam
    assert abs(lam * beta**2 + 3 * (1 - lam) * beta - 1) < 1e-12
    assert min(abs(fixed_points(f) - beta)) < 1e-8
    assert beta == pytest.approx(5.09479394702454 - 1.9004837067203049j, abs=1e-6)


def test_drops(golden_blaschke):
    f = golden_blaschke
    W = drop(f, 0)
    assert W.forward_residual(f) < 1e-9
    # interior points of W map into the disc
    from shapely.geometry import Point, Polygon

    poly = Polygon(np.column_stack([W.boundary.real, W.boundary.imag]))
    c = poly.representative_point()
    inner = complex(c.x, c.y)
    assert abs(complex(f(inner))) < 1.0
    assert not poly.contains(Point(0.0, 0.0))
    diams = [drop(f, k).diameter for k in range(1, 4)]
    assert all(d < W.diameter for d in diams)
    for k in range(1, 4):
        assert drop(f, k).forward_residual(f) < 1e-9


def test_drop_path_validation(golden_blaschke):
    with pytest.raises(DomainError):
        drop(golden_blaschke, [2.0 + 0j])
    with pytest.raises(DomainError):
        drop(golden_blaschke, [1.0 + 0j, 0.5 + 0j])
    with pytest.raises(DomainError):
        drop(golden_blaschke, -1)


# --------------------------------------------------------------------------
# Green's function, rays, equipotentials
# --------------------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 2 * math.pi), st.floats(4.0, 30.0))
def test_green_functional_equation(angle, r):
    f = BlaschkeMap(0.6136486389004858)
    z = r * cmath.exp(1j * angle)
    g = green(f, z)
    if g > 0.1:
        assert abs(green(f, complex(f(z))) - 2 * g) < 1e-6


def test_green_zero_on_filled_set(golden_blaschke):
    assert green(golden_blaschke, 0.01 + 0j) == 0.0
    assert green(golden_blaschke, 0.5 + 0j) > 0.0  # the disc is not invariant
    assert green(golden_blaschke, 3.0 + 0j) == 0.0


def test_equipotential_encloses_disc(golden_blaschke):
    curve = equipotential(golden_blaschke, 1.0, n=512)
    assert abs(winding_number(curve, 0.0) - 1.0) < 1e-9
    assert np.min(np.abs(curve)) > 1.0
    assert np.allclose(green(golden_blaschke, curve), 1.0, atol=1e-6)


def test_ray_zero_lands_at_beta(golden_blaschke):
    beta = fixed_point_beta(golden_blaschke)
    ray = trace_ray(golden_blaschke, 0.0, floor=1e-6, land_at=beta, land_tol=1e-3)
    assert ray.landed and not ray.stalled
    assert abs(ray.end - beta) < 1e-3
    assert np.all(np.diff(ray.potentials) < 0)


# --------------------------------------------------------------------------
# puzzle
# --------------------------------------------------------------------------


def test_backward_returns_fibonacci(golden_blaschke):
    rets = backward_returns(golden_blaschke, 8)
    assert [q for q, _ in rets] == [1, 2, 3, 5, 8, 13, 21, 34]
    xs = np.array([x for _, x in rets[1:]])
    assert np.all(np.sign(xs[:-1]) != np.sign(xs[1:]))
    assert np.all(np.diff(np.abs(xs)) < 0)


def test_base_piece(golden_pieces):
    base = golden_pieces.base
    assert base.contains(np.array([3.0 + 0j]))[0]
    assert not base.contains(np.array([0.0 + 0j]))[0]
    assert abs(base.gamma[-1] - base.beta) < 1e-4


def test_trace_endpoints(golden_pieces):
    f = golden_pieces.f
    for p in golden_pieces.pieces:
        end, one = p.trace
        assert one == 1.0
        assert abs(complex(f.iterate(end, p.q)) - 1.0) < 1e-9
        assert abs(end - complex(on_circle(p.trace_x))) < 1e-9
        assert abs(end - complex_backward_orbit(f, p.q, p.trace_x)) < 1e-12
        lo, hi = trace_on_raster(p)
        # the raster resolves the trace to within a couple of pixels
        tol = 3 * p.grid.step
        assert abs(min(p.trace_x, 0.0) - lo) * 2 * math.pi < tol
        assert abs(max(p.trace_x, 0.0) - hi) * 2 * math.pi < tol


def test_traces_alternate(golden_pieces):
    xs = [p.trace_x for p in golden_pieces.pieces]
    for a, b in zip(xs, xs[1:]):
        assert a * b < 0  # never nested: opposite sides of 1


def test_pieces_shrink_and_are_simple(golden_pieces):
    d = [p.diameter for p in golden_pieces.pieces]
    assert all(a > b for a, b in zip(d, d[1:]))
    for p in golden_pieces.pieces:
        assert is_simple(p.boundary)
    ratios = [p.diameter / p.trace_length for p in golden_pieces.pieces[2:]]
    assert max(ratios) / min(ratios) < 2.0


def test_inscribed_discs(golden_pieces):
    ratios = [p.inscribed_radius / p.diameter for p in golden_pieces.pieces[1:5]]
    assert min(ratios) > 0.1
    assert max(ratios) / min(ratios) < 2.0


def test_inscribed_square():
    square = np.array([0, 1, 1 + 1j, 1j, 0], dtype=complex)
    assert inscribed_disc_polygon(square, 512) == pytest.approx(0.5, abs=2e-3)


def test_drop_in_piece(golden_pieces):
    assert drop_in_piece(golden_pieces, 3)


# --------------------------------------------------------------------------
# rasters
# --------------------------------------------------------------------------


def test_classify_points(golden_blaschke):
    label, dyn, region = classify_blaschke(golden_blaschke, np.array([3.0, 10.0, 0.01, 1.0 + 0j]))
    assert label[0] == BASIN_ZERO
    assert label[1] == BASIN_INF
    assert label[2] == BASIN_ZERO
    # the unit circle never leaves, so it stays undetermined
    assert dyn[3] == 2 and label[3] == DROP
    lab5, _, _ = classify_blaschke(golden_blaschke, np.array([10.0 + 0j]), budget=5)
    assert lab5[0] == BASIN_INF


def test_raster_symmetry_and_determinism(golden_blaschke):
    grid = GridSpec(0.5 + 0j, 3.0, 128)
    r1 = render_blaschke(golden_blaschke, grid, budget=500)
    r2 = render_blaschke(golden_blaschke, grid, budget=500, tile=37)
    assert np.array_equal(r1.label, r2.label)
    assert symmetry_audit(r1, golden_blaschke).fraction <= 0.005
    assert set(np.unique(r1.label)) <= {BASIN_INF, BASIN_ZERO, J_CAND, DISC, DROP}


def test_raster_files(tmp_path, golden_blaschke):
    r = render_blaschke(golden_blaschke, GridSpec(0.5 + 0j, 3.0, 64), budget=200)
    pgm, ppm, js = r.write(tmp_path / "j", {"seed": 1})
    assert np.array_equal(read_pgm(pgm), r.label)
    assert ppm.read_bytes().startswith(b"P6\n64 64\n255\n")
    import json

    side = json.loads(js.read_text())
    assert side["seed"] == 1 and side["grid"]["res"] == 64 and "legend" in side


def test_quadratic_render():
    r = render_quadratic(GOLDEN, GridSpec(0j, 2.0, 96), budget=400)
    pts = r.grid.points()
    r_, c_, _ = r.grid.index(np.array([0.0 + 0j, 1.9 + 1.9j]))
    assert r.label[r_[0], c_[0]] == DISC
    assert r.label[r_[1], c_[1]] == BASIN_INF
    assert np.any(r.label == J_CAND)
    assert pts.shape == (96, 96)


# --------------------------------------------------------------------------
# density
# --------------------------------------------------------------------------


def test_empty_fraction_in_disc(raster512):
    frac, n = empty_fraction(raster512, 0.0 + 0.1j, 0.3)
    assert frac == 1.0 and n > 100


def test_empty_fraction_resolution_guard(raster512):
    with pytest.raises(DomainError):
        empty_fraction(raster512, 0.001 + 0.001j, 1e-6)


def test_density_probe(raster512, golden_blaschke, golden_pieces):
    rep = density_probe(raster512, golden_blaschke, golden_pieces, samples=25, seed=2)
    assert len(rep.samples) == 25
    assert rep.delta > 0
    again = density_probe(raster512, golden_blaschke, golden_pieces, samples=25, seed=2)
    assert np.array_equal(rep.fractions, again.fractions)
    for s in rep.samples:
        assert raster512.label[tuple(np.array(raster512.grid.index(np.array([s.z]))[:2])[:, 0])] == J_CAND


def test_density_needs_blaschke(golden_blaschke, golden_pieces):
    r = render_quadratic(GOLDEN, GridSpec(0j, 2.0, 32), budget=50)
    with pytest.raises(DomainError):
        density_probe(r, golden_blaschke, golden_pieces)


def test_critical_hits_at_most_once(raster512, golden_blaschke, golden_pieces):
    rep = density_probe(raster512, golden_blaschke, golden_pieces, samples=50, seed=5, depth=3,
                        min_radius=0.0 + 2 * raster512.grid.step, max_radius=10.0)
    counts = [critical_hits(golden_blaschke, golden_pieces, s.z, 3) for s in rep.samples]
    assert all(c is not None and c <= 1 for c in counts)
