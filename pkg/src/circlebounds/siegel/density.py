"""Empty space around points of J_theta.

For a sampled J_theta-candidate ``z`` the orbit first enters a puzzle piece
``P_n`` at time ``k``.  The pullback of ``P_n`` along that orbit has size
about ``diam P_n / |(f^k)'(z)|``; the ball of that radius about ``z`` is where
the measure-zero argument finds a definite fraction of non-J_theta points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, NoAdmissibleSamples
from .blaschke import BlaschkeMap
from .puzzle import PuzzleSequence, outside_orbit
from .render import J_CAND, JuliaRaster

MIN_PIXELS = 4.0
ORBIT_BUDGET = 400


@dataclass
class DensitySample:
    z: complex
    depth: int
    entry: int
    radius: float
    fraction: float
    pixels: int


@dataclass
class DensityReport:
    samples: list[DensitySample]
    skipped: int
    seed: int
    min_radius: float
    fractions: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        self.fractions = np.array([s.fraction for s in self.samples])

    @property
    def delta(self) -> float:
        return float(self.fractions.min())

    @property
    def median(self) -> float:
        return float(np.median(self.fractions))

    def points(self) -> np.ndarray:
        return np.array([s.z for s in self.samples])


def empty_fraction(raster: JuliaRaster, z: complex, radius: float) -> tuple[float, int]:
    """Fraction of pixels in ``B(z, radius)`` that are not J_theta-candidates."""
    g = raster.grid
    r0, c0, ok = g.index(np.array([z]))
    if not ok[0]:
        raise DomainError("ball centre outside the raster")
    k = int(math.ceil(radius / g.step)) + 1
    rows = np.arange(max(r0[0] - k, 0), min(r0[0] + k + 1, g.res))
    cols = np.arange(max(c0[0] - k, 0), min(c0[0] + k + 1, g.res))
    c = (np.arange(g.res) + 0.5) * g.step - g.half
    xs = g.center.real + c[cols]
    ys = g.center.imag + c[rows]
    inside = (xs[None, :] - z.real) ** 2 + (ys[:, None] - z.imag) ** 2 <= radius * radius
    n = int(inside.sum())
    if n == 0:
        raise DomainError("insufficient raster resolution: the ball contains no pixel centre")
    block = raster.label[np.ix_(rows, cols)]
    empty = int(np.sum(inside & (block != J_CAND)))
    return empty / n, n


def first_entry(f: BlaschkeMap, pieces: PuzzleSequence, z: complex, n: int, budget: int = ORBIT_BUDGET):
    """``(k, |(f^k)'(z)|)`` at the first ``k`` with ``f^k(z)`` in ``P_n``, or None."""
    piece = pieces.piece(n)
    w = complex(z)
    d = 1.0
    for k in range(budget + 1):
        if abs(w) < 1.0 or abs(w) > 1e6 or not math.isfinite(d):
            return None
        if piece.contains(np.array([w]))[0]:
            return k, d
        d *= abs(complex(f.derivative(w)))
        w = complex(f(w))
    return None


def density_probe(
    raster: JuliaRaster,
    f: BlaschkeMap,
    pieces: PuzzleSequence,
    samples: int = 100,
    seed: int = 0,
    depth: int | None = None,
    min_radius: float | None = None,
    points: np.ndarray | None = None,
    budget: int = ORBIT_BUDGET,
    max_radius: float | None = None,
) -> DensityReport:
    """Empty-space fractions at ``samples`` J_theta-candidate pixels.

    With ``depth=None`` each sample uses the deepest piece whose pulled-back
    scale is still at least ``min_radius`` (default ``MIN_PIXELS`` pixels)
    and at most ``max_radius`` (default an eighth of the window).
    Pass ``points`` and ``min_radius`` from an earlier report to repeat the
    measurement at another resolution.
    """
    if raster.kind != "blaschke":
        raise DomainError("density probe runs on Blaschke rasters")
    g = raster.grid
    if min_radius is None:
        min_radius = MIN_PIXELS * g.step
    if max_radius is None:
        max_radius = g.half / 4.0
    if min_radius < 2.0 * g.step:
        raise DomainError("insufficient raster resolution for the requested ball scale")
    depths = [depth] if depth is not None else list(range(len(pieces.pieces), 0, -1))
    if points is None:
        cand = np.argwhere(raster.j_theta())
        if len(cand) == 0:
            raise NoAdmissibleSamples("raster has no J_theta-candidate pixels")
        rng = np.random.default_rng(seed)
        order = rng.permutation(len(cand))
        pts = g.points()
        points = pts[cand[order, 0], cand[order, 1]]
        limit = samples
    else:
        points = np.asarray(points, dtype=complex)
        limit = len(points)
    out: list[DensitySample] = []
    skipped = 0
    for z in points:
        if len(out) >= limit:
            break
        chosen = None
        for n in depths:
            hit = first_entry(f, pieces, z, n, budget)
            if hit is None:
                continue
            k, d = hit
            radius = pieces.piece(n).diameter / d
            if min_radius <= radius <= max_radius:
                chosen = (n, k, radius)
                break
        if chosen is None:
            skipped += 1
            continue
        n, k, radius = chosen
        frac, npx = empty_fraction(raster, complex(z), radius)
        out.append(DensitySample(complex(z), n, k, radius, frac, npx))
    if not out:
        raise NoAdmissibleSamples("no sample reached a resolvable puzzle scale")
    return DensityReport(out, skipped, seed, min_radius)


# ---------------------------------------------------------------------------
# critical hits along first-entry pullbacks
# ---------------------------------------------------------------------------


def critical_hits(f: BlaschkeMap, pieces: PuzzleSequence, z: complex, n: int, budget: int = ORBIT_BUDGET,
                  segment: int = 64) -> int | None:
    """Number of pullback steps along the first-entry orbit whose region meets 1.

    The region ``U_j`` (component of ``f^{-j}(P_n)`` through ``f^{k-j}(z)``)
    is counted when ``f^j(1)`` lies on the circle trace of ``P_n`` and the
    segment from ``f^{k-j}(z)`` to 1 maps into ``P_n`` under ``f^j``; the
    segment test certifies a common component, so this is a lower bound on
    contact that is exact whenever the pullback is star-shaped about 1.
    """
    hit = first_entry(f, pieces, z, n, budget)
    if hit is None:
        return None
    k, _ = hit
    piece = pieces.piece(n)
    orbit = [complex(z)]
    for _ in range(k):
        orbit.append(complex(f(orbit[-1])))
    g = f.circle_map()
    lo, hi = sorted((piece.trace_x, 0.0))
    x = 0.0
    count = 0
    s = np.linspace(0.0, 1.0, segment)
    for j in range(1, k + 1):
        x = g.lift(x)
        y = x - math.floor(x + 0.5)
        if not lo <= y <= hi:
            continue
        w0 = orbit[k - j]
        seg = w0 + (1.0 - w0) * s
        with np.errstate(divide="ignore", invalid="ignore"):
            seg = np.where(np.abs(seg) >= 1.0, seg, 1.0 / np.conj(seg))
        img, ok = outside_orbit(f, seg[:-1], j)
        if np.all(ok & piece.contains_sym(img)):
            count += 1
    return count
