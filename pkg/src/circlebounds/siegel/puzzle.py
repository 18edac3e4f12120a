"""Puzzle pieces around the critical point 1.

``P_0`` is cut out by the ray of argument 0 (landing at the repelling fixed
point beta), the chain of drop boundaries from 1 to beta, the circle arc
``[1, f^{-1}(1)]``, the preimage chain from ``f^{-1}(1)``, the ray of
argument 1/2 and an equipotential.  Deeper pieces are pullbacks.

Pullbacks are done on rasters of the symmetrised piece ``Q_n = P_n u P_n'``
(``P_n'`` its reflection in the circle).  The circle arc is then interior to
``Q_n``, so the fold of the boundary at the critical point does not need
branch bookkeeping: ``Q_n`` is the component of ``f^{-q}(Q_{n-1})`` that
contains the arc, read off with a connected-component labelling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import shapely
from scipy import ndimage
from shapely.geometry import LineString, Polygon
from skimage import measure

from ..errors import BranchAmbiguity, DomainError, NotConverged
from .blaschke import BlaschkeMap, fixed_point_beta, on_circle, polish, pullback_polyline
from .green import boettcher_point, equipotential, trace_ray

TWO_PI = 2.0 * math.pi
CHAIN_TOL = 1e-4


# ---------------------------------------------------------------------------
# return times of the inverse critical orbit
# ---------------------------------------------------------------------------


def backward_returns(f: BlaschkeMap, count: int, budget: int = 100_000) -> list[tuple[int, float]]:
    """Closest returns ``(q, x)`` of the backward orbit ``x = F^{-q}(0) + p``.

    ``x`` is the lift coordinate of ``f^{-q}(1)`` in ``(-1/2, 1/2]``; the
    first entry is ``q = 1``.  Successive entries alternate sides of 0.
    """
    g = f.circle_map()
    x, best = 0.0, math.inf
    runs: list[tuple[int, float]] = []
    for q in range(1, budget + 1):
        x = g.inverse_real(x)
        x -= math.floor(x + 0.5)
        if abs(x) < best:
            best = abs(x)
            # keep only the last record of each same-side run
            if runs and (runs[-1][1] > 0) == (x > 0):
                runs[-1] = (q, x)
            elif len(runs) == count:
                return runs
            else:
                runs.append((q, x))
    raise NotConverged("backward returns: budget exhausted")


def complex_backward_orbit(f: BlaschkeMap, q: int, x_guess: float) -> complex:
    """``f^{-q}(1)`` by cubic-root pullback along the circle, independently of the lift."""
    g = f.circle_map()
    xs = [0.0]
    for _ in range(q):
        xs.append(g.inverse_real(xs[-1]))
    w = 1.0 + 0j
    for x in xs[1:]:
        roots = f.preimages(w)
        # of the three preimages exactly one lies on the circle
        i = np.argmin(np.abs(np.abs(roots) - 1.0) + 1e-3 * np.abs(roots - on_circle(x)))
        w = polish(f, w, complex(roots[i]), iters=4)
    return w


# ---------------------------------------------------------------------------
# P_0
# ---------------------------------------------------------------------------


def _drop_arc(f: BlaschkeMap, t0: float, t1: float, n: int) -> np.ndarray:
    """Part of the boundary of W over circle arguments ``t0 -> t1`` (turns)."""
    s = 0.5 - 0.5 * np.cos(math.pi * np.linspace(0.0, 1.0, n))
    out = np.empty(n, dtype=complex)
    for i, t in enumerate(t0 + (t1 - t0) * s):
        roots = f.preimages(np.exp(1j * TWO_PI * t))
        out[i] = roots[np.argmax(np.abs(roots))]
    return out


def drop_chain(f: BlaschkeMap, arc: np.ndarray, beta: complex, tol: float = CHAIN_TOL, max_links: int = 200) -> np.ndarray:
    """``gamma_0 u gamma_1 u ... u {beta}``: pullbacks of ``arc`` by the branch fixing beta."""
    links = [arc]
    cur = arc
    while abs(cur[-1] - beta) >= tol:
        if len(links) > max_links:
            raise NotConverged("drop chain does not converge to beta")
        cur = pullback_polyline(f, cur, cur[-1])
        links.append(cur[1:])
    return np.concatenate(links + [np.array([beta])])


@dataclass
class BasePiece:
    """``P_0`` and the curves that cut it out."""

    f: BlaschkeMap
    beta: complex
    beta_hat: complex
    gamma: np.ndarray       # 1 -> beta, drop side facing away from the trace
    gamma_other: np.ndarray  # 1 -> beta, other drop side
    gamma_hat: np.ndarray   # f^{-1}(1) -> beta_hat
    ray: np.ndarray         # potential ``level`` -> beta
    ray_hat: np.ndarray     # potential ``level`` -> beta_hat
    equipotential: np.ndarray
    trace: tuple[float, float]  # lift coordinates of the circle trace
    boundary: np.ndarray
    level: float
    polygon: Polygon = field(repr=False, default=None)

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return shapely.contains_xy(self.polygon, z.real, z.imag)


def _cut_at_level(f, ray, level):
    """Part of a traced ray below ``level``, starting exactly on the equipotential."""
    pts, pots = ray.points, ray.potentials
    i = int(np.searchsorted(-pots, -level))  # first index with potential <= level
    top = boettcher_point(f, level, ray.t, guess=pts[max(i - 1, 0)])
    return np.concatenate([[top], pts[i:]])


def base_piece(f: BlaschkeMap, level: float = 1.0, n: int = 400) -> BasePiece:
    beta = fixed_point_beta(f)
    g = f.circle_map()
    x1 = g.inverse_real(0.0)
    x1 -= math.floor(x1 + 0.5)
    tau = f.tau % 1.0
    # boundary of W from the root 1 to the preimage of 1, over the arc [f(1), 1]
    # and over its complement
    arc_short = _drop_arc(f, tau, 1.0, n)
    arc_long = _drop_arc(f, tau, 0.0, n)
    arc_short[0] = arc_long[0] = 1.0
    chain_short = drop_chain(f, arc_short, beta)
    chain_long = drop_chain(f, arc_long, beta)
    z1 = complex(on_circle(x1))
    # pick the side whose W-drop is across from the trace: that chain and its
    # preimage from f^{-1}(1) bound P_0
    best = None
    for chain, other in ((chain_short, chain_long), (chain_long, chain_short)):
        hat = pullback_polyline(f, chain, z1)
        rays = trace_ray(f, 0.0, land_at=beta)
        rays_hat = trace_ray(f, 0.5, land_at=hat[-1])
        if not (rays.landed and rays_hat.landed):
            raise NotConverged("external rays did not land")
        r = _cut_at_level(f, rays, level)
        rh = _cut_at_level(f, rays_hat, level)
        for t0, t1 in ((0.5, 1.0), (0.5, 0.0)):
            E = equipotential(f, level, t0, t1, 1024, start=rh[0])
            if abs(E[-1] - r[0]) > 1e-6:
                continue
            arc = on_circle(np.linspace(0.0, x1, 256))
            bnd = np.concatenate([arc, hat[1:], rh[::-1], E[1:], r[1:], [beta], chain[::-1][1:]])
            poly = Polygon(np.column_stack([bnd.real, bnd.imag]))
            if poly.is_valid and shapely.contains_xy(poly, 3.0, 0.0) and not shapely.contains_xy(poly, 0.0, 0.0):
                cand = BasePiece(f, beta, complex(hat[-1]), chain, other, hat, r, rh, E,
                                 (0.0, x1), bnd, level, poly)
                if best is None or poly.area < best.polygon.area:
                    best = cand
    if best is None:
        raise BranchAmbiguity("could not assemble a simple P_0 containing W")
    return best


# ---------------------------------------------------------------------------
# rasters
# ---------------------------------------------------------------------------


@dataclass
class Grid:
    center: complex
    half: float
    res: int

    @property
    def step(self) -> float:
        return 2.0 * self.half / self.res

    def points(self) -> np.ndarray:
        c = (np.arange(self.res) + 0.5) * self.step - self.half
        return (self.center.real + c)[None, :] + 1j * (self.center.imag + c)[:, None]

    def index(self, z):
        """Row/column of the pixel containing ``z`` and an in-window flag."""
        z = np.asarray(z)
        col = np.floor((z.real - self.center.real + self.half) / self.step)
        row = np.floor((z.imag - self.center.imag + self.half) / self.step)
        ok = np.isfinite(col) & np.isfinite(row) & (col >= 0) & (col < self.res) & (row >= 0) & (row < self.res)
        return np.where(ok, row, 0).astype(int), np.where(ok, col, 0).astype(int), ok


@dataclass
class PuzzlePiece:
    n: int
    q: int
    trace: tuple[complex, complex]  # (f^{-q}(1), 1)
    trace_x: float                  # lift coordinate of f^{-q}(1)
    grid: Grid
    mask: np.ndarray = field(repr=False)   # symmetric piece Q_n on the grid
    boundary: np.ndarray = field(repr=False, default=None)
    diameter: float = math.nan
    inscribed_radius: float = math.nan

    @property
    def trace_length(self) -> float:
        """Arc length of the circle trace."""
        return TWO_PI * abs(self.trace_x)

    def outer_mask(self) -> np.ndarray:
        return self.mask & (np.abs(self.grid.points()) >= 1.0)

    def contains_sym(self, z) -> np.ndarray:
        r, c, ok = self.grid.index(z)
        return ok & self.mask[r, c]

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return self.contains_sym(z) & (np.abs(z) >= 1.0)


def _symmetric(member):
    def sym(z):
        z = np.asarray(z, dtype=complex)
        out = np.abs(z) >= 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(out, z, 1.0 / np.conj(z))
        return member(w)

    return sym


def _component(mask: np.ndarray, grid: Grid, seeds: np.ndarray, cut: list[complex]) -> np.ndarray:
    """Connected component of ``mask`` through the seed points.

    Pixels within two pixels of the points in ``cut`` are removed before
    labelling so that pieces touching only at those points stay apart.
    """
    work = mask.copy()
    pts = grid.points()
    for p in cut:
        work &= np.abs(pts - p) > 2.0 * grid.step
    lab, _ = ndimage.label(work)
    r, c, ok = grid.index(seeds)
    ids = set(lab[r[ok], c[ok]].tolist()) - {0}
    if not ids:
        raise BranchAmbiguity("pullback component does not meet the circle trace")
    comp = np.isin(lab, list(ids))
    # restore the cut neighbourhoods that touch the component
    removed = mask & ~work
    grown = ndimage.binary_dilation(comp, iterations=3) & removed
    return comp | grown


def _touches_border(mask: np.ndarray) -> bool:
    return bool(mask[0].any() or mask[-1].any() or mask[:, 0].any() or mask[:, -1].any())


def outside_orbit(f: BlaschkeMap, z: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray]:
    """``(f^q(z), ok)`` with ``ok`` true when ``|f^j(z)| > 1`` for ``0 <= j <= q``.

    Orbits entering the disc are absorbed there in the Siegel model (the disc
    plays the role of the Siegel disc), so they never reach an outer piece.
    """
    ok = np.abs(z) > 1.0
    w = z
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(q):
            w = f(w)
            ok &= np.abs(w) > 1.0
    return w, ok


def pull_back(
    f: BlaschkeMap,
    member,
    q: int,
    x_end: float,
    res: int = 640,
    half0: float | None = None,
    max_half: float = 40.0,
) -> tuple[Grid, np.ndarray]:
    """Raster of the symmetric piece whose circle trace is ``[x_end, 0]``.

    The outer half is the component of ``{z : f^j(z) outside the disc for
    j <= q, f^q(z) in Q}`` along the trace; ``member`` tests membership in the
    symmetric previous piece ``Q``.  Pixels inside the disc take the value
    at their reflection.
    """
    xs = np.linspace(0.0, x_end, 41)[1:-1]
    seeds = on_circle(xs)
    mid = on_circle(0.5 * x_end)
    chord = abs(on_circle(x_end) - 1.0)
    half = half0 if half0 is not None else max(1.5 * chord, 0.05)
    while True:
        grid = Grid(complex(0.5 * (mid + 1.0)), half, res)
        z = grid.points()
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(np.abs(z) >= 1.0, z, 1.0 / np.conj(z))
        w, ok = outside_orbit(f, z, q)
        hit = ok & member(np.where(ok, w, 0.0))
        comp = _component(hit, grid, seeds, [1.0 + 0j, complex(on_circle(x_end))])
        if not _touches_border(comp):
            return grid, comp
        if half >= max_half:
            raise DomainError("pullback component does not fit the raster window")
        half *= 2.0


def boundary_polyline(piece_mask: np.ndarray, grid: Grid) -> np.ndarray:
    """Longest contour of the mask, as a closed complex polyline."""
    pad = np.pad(piece_mask.astype(float), 1)
    cs = measure.find_contours(pad, 0.5)
    c = max(cs, key=len) - 1.0
    z = (grid.center.real - grid.half + (c[:, 1] + 0.5) * grid.step) + 1j * (
        grid.center.imag - grid.half + (c[:, 0] + 0.5) * grid.step
    )
    if z[0] != z[-1]:
        z = np.append(z, z[0])
    return z


def is_simple(poly: np.ndarray) -> bool:
    ring = LineString(np.column_stack([poly.real, poly.imag]))
    return bool(ring.is_simple)


def diameter_of(mask: np.ndarray, grid: Grid) -> float:
    """Euclidean diameter of the union of pixel centres (via the convex hull)."""
    pts = grid.points()[mask]
    if pts.size == 0:
        return 0.0
    hull = shapely.MultiPoint(np.column_stack([pts.real, pts.imag])).convex_hull
    h = np.asarray(hull.exterior.coords) if hull.geom_type == "Polygon" else np.asarray(hull.coords)
    hz = h[:, 0] + 1j * h[:, 1]
    return float(np.max(np.abs(hz[:, None] - hz[None, :])))


def inscribed_radius(mask: np.ndarray, step: float) -> float:
    """Largest inscribed disc radius from the Euclidean distance transform."""
    if not mask.any():
        raise DomainError("empty mask")
    d = ndimage.distance_transform_edt(np.pad(mask, 1))
    return float(d.max() * step)


def inscribed_disc_polygon(poly: np.ndarray, res: int = 512) -> float:
    """Inscribed radius of a closed polyline via a local raster."""
    poly = np.asarray(poly, dtype=complex)
    lo = complex(poly.real.min(), poly.imag.min())
    hi = complex(poly.real.max(), poly.imag.max())
    half = 0.5 * max(hi.real - lo.real, hi.imag - lo.imag) * 1.05
    grid = Grid(0.5 * (lo + hi), half, res)
    pg = Polygon(np.column_stack([poly.real, poly.imag]))
    z = grid.points()
    mask = shapely.contains_xy(pg, z.real, z.imag)
    if mask.sum() < 16:
        raise DomainError("raster resolution insufficient for the inscribed disc")
    # distance to the nearest outside pixel centre; add half a pixel for the
    # boundary lying between pixel centres
    return inscribed_radius(mask, grid.step) - 0.5 * grid.step


# ---------------------------------------------------------------------------
# the sequence P_0, P_1, ...
# ---------------------------------------------------------------------------


@dataclass
class PuzzleSequence:
    f: BlaschkeMap
    base: BasePiece
    returns: list[tuple[int, float]]
    pieces: list[PuzzlePiece]

    def piece(self, n: int) -> PuzzlePiece:
        return self.pieces[n - 1]


def puzzle_pieces(f: BlaschkeMap, max_n: int = 6, res: int = 640, level: float = 1.0) -> PuzzleSequence:
    """``P_1..P_max_n``; ``P_n`` is the pullback of ``P_{n-1}`` by ``f^{q_n}``.

    The return times ``q_0 = 1, q_1, ...`` are the closest returns of the
    backward orbit of 1, so the traces alternate sides of 1.
    """
    base = base_piece(f, level)
    rets = backward_returns(f, max_n + 1)
    if rets[0][0] != 1:
        raise DomainError("first backward return must be q = 1")
    member = _symmetric(base.contains)
    pieces: list[PuzzlePiece] = []
    for n in range(1, max_n + 1):
        q, x = rets[n]
        grid, mask = pull_back(f, member, q, x, res)
        end = complex_backward_orbit(f, q, x)
        piece = PuzzlePiece(n, q, (end, 1.0 + 0j), x, grid, mask)
        outer = piece.outer_mask()
        piece.diameter = diameter_of(outer, grid)
        piece.inscribed_radius = inscribed_radius(outer, grid.step)
        piece.boundary = boundary_polyline(outer, grid)
        pieces.append(piece)
        member = piece.contains_sym
    return PuzzleSequence(f, base, rets[: max_n + 1], pieces)


def trace_on_raster(piece: PuzzlePiece, n: int = 4000) -> tuple[float, float]:
    """Lift-coordinate extent of ``{x : e^{2 pi i x} in Q_n}`` near 0."""
    xs = np.linspace(-0.5, 0.5, n)
    inside = piece.contains_sym(on_circle(xs))
    if not inside.any():
        return math.nan, math.nan
    return float(xs[inside].min()), float(xs[inside].max())


def drop_in_piece(seq: PuzzleSequence, n: int, resolution: int = 256) -> bool:
    """Whether the drop rooted at ``f^{-q_{n+2}}(1)`` lies in ``P_n`` (sampled boundary)."""
    from .blaschke import drop

    if n + 2 >= len(seq.returns):
        raise DomainError("need the return time two levels deeper")
    q = seq.returns[n + 2][0]
    w = drop(seq.f, q, resolution)
    return bool(np.all(seq.piece(n).contains_sym(w.boundary)))
