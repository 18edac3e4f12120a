"""The Blaschke model ``f(z) = e^{2 pi i tau} z^2 (z-3)/(1-3z)``.

On the unit circle ``f`` is a critical circle map with a cubic critical point
at ``z = 1``.  All inverse images are roots of the cubic

    lam w^3 - 3 lam w^2 + 3 c w - c = 0,      f(w) = c,

so branch tracking reduces to picking one of three roots by continuity.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from ..circlemap import CriticalCircleMap, blaschke_circle_map, rotation_bracket, solve_parameter
from ..errors import BranchAmbiguity, DomainError, NotConverged
from ..numbertheory import RotationNumber

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class BlaschkeMap:
    tau: float
    theta: float | None = None
    bracket: tuple[float, float] | None = field(default=None, compare=False)

    @property
    def lam(self) -> complex:
        return cmath.exp(1j * TWO_PI * self.tau)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.lam * z * z * (z - 3.0) / (1.0 - 3.0 * z)

    def derivative(self, z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            return -6.0 * self.lam * z * (z - 1.0) ** 2 / (3.0 * z - 1.0) ** 2

    def second_derivative(self, z):
        z = np.asarray(z, dtype=complex)
        return -6.0 * self.lam * (z - 1.0) * (3.0 * z * z + 1.0) / (3.0 * z - 1.0) ** 3

    def third_derivative(self, z):
        z = np.asarray(z, dtype=complex)
        return -48.0 * self.lam / (3.0 * z - 1.0) ** 4

    def iterate(self, z, n: int):
        z = np.asarray(z, dtype=complex)
        for _ in range(n):
            z = self(z)
        return z

    def iterate_with_derivative(self, z, n: int):
        z = np.asarray(z, dtype=complex)
        d = np.ones_like(z)
        for _ in range(n):
            d = d * self.derivative(z)
            z = self(z)
        return z, d

    def circle_map(self) -> CriticalCircleMap:
        """Lift of the circle restriction (critical point 1 at ``x = 0``)."""
        return blaschke_circle_map(self.tau)

    def preimages(self, c: complex) -> np.ndarray:
        """The three roots of ``f(w) = c`` (with multiplicity)."""
        lam = self.lam
        return np.roots([lam, -3.0 * lam, 3.0 * c, -c]).astype(complex)

    def preimage_near(self, c: complex, guess: complex) -> complex:
        roots = self.preimages(c)
        w = roots[np.argmin(np.abs(roots - guess))]
        return polish(self, c, complex(w))


def polish(f: BlaschkeMap, c: complex, w: complex, iters: int = 3) -> complex:
    """A few Newton steps on ``f(w) = c`` (np.roots is only ~1e-15 relative)."""
    for _ in range(iters):
        d = complex(f.derivative(w))
        if d == 0 or not cmath.isfinite(d):
            break
        step = (complex(f(w)) - c) / d
        if abs(step) > 1e-6 * max(1.0, abs(w)):
            break
        w -= step
    return w


def on_circle(x) -> np.ndarray:
    """Point of the unit circle for lift coordinate ``x`` (1 at ``x = 0``)."""
    return np.exp(1j * TWO_PI * np.asarray(x, dtype=float))


def solve_tau(theta: RotationNumber | float, tol: float = 1e-8) -> BlaschkeMap:
    """The ``tau`` in ``[0, 1)`` whose circle restriction has rotation number ``theta``."""
    target = theta.value if isinstance(theta, RotationNumber) else float(theta)
    if not 0.0 <= target < 1.0:
        raise DomainError(f"theta must lie in [0, 1), got {target}")
    if isinstance(theta, RotationNumber) and theta.numerically_rational:
        raise DomainError("theta is rational to working precision")
    tau, bracket = solve_parameter("blaschke-circle", target, tol)
    return BlaschkeMap(tau, target, bracket)


def verify_rotation(f: BlaschkeMap, budget: int = 400_000) -> tuple[float, float]:
    """Post-hoc rotation bracket of the circle restriction with a fresh budget."""
    _, lo, hi = rotation_bracket(f.circle_map(), budget, tol=0.0, strict=False)
    return lo, hi


def fixed_points(f: BlaschkeMap) -> np.ndarray:
    """Fixed points other than 0 and infinity: ``lam z^2 + 3(1 - lam) z - 1 = 0``."""
    lam = f.lam
    return np.roots([lam, 3.0 * (1.0 - lam), -1.0]).astype(complex)


def fixed_point_beta(f: BlaschkeMap, tol: float = 1e-13) -> complex:
    """The repelling fixed point outside the closed disc."""
    for z in fixed_points(f):
        if abs(z) <= 1.0 + 1e-9:
            continue
        for _ in range(20):
            g = complex(f(z)) - z
            z -= g / (complex(f.derivative(z)) - 1.0)
            if abs(g) < tol:
                break
        if abs(complex(f(z)) - z) < 1e-12 and abs(complex(f.derivative(z))) > 1.0:
            return complex(z)
    raise NotConverged("no repelling fixed point outside the unit disc")


# ---------------------------------------------------------------------------
# branch-tracked pullbacks of polylines
# ---------------------------------------------------------------------------


def pullback_polyline(
    f: BlaschkeMap,
    pts: np.ndarray,
    start: complex,
    max_ratio: float = 0.35,
    max_insert: int = 12,
) -> np.ndarray:
    """Preimage of the polyline ``pts`` under the branch with ``pts[0] -> start``.

    Each vertex takes the root nearest to the previous preimage.  When the
    nearest root is not clearly separated from the runner-up (ratio above
    ``max_ratio``), the segment is bisected, up to ``max_insert`` times.
    """
    pts = np.asarray(pts, dtype=complex)
    out = [complex(start)]
    prev_c, prev_w = complex(pts[0]), complex(start)
    for i in range(1, len(pts)):
        target = complex(pts[i])
        stack = [target]
        depth = 0
        while stack:
            c = stack[-1]
            roots = f.preimages(c)
            d = np.abs(roots - prev_w)
            order = np.argsort(d)
            near, second = d[order[0]], d[order[1]]
            if second > 0 and near / second > max_ratio and depth < max_insert and abs(c - prev_c) > 1e-14:
                stack.append(0.5 * (prev_c + c))
                depth += 1
                continue
            w = polish(f, c, complex(roots[order[0]]))
            stack.pop()
            prev_c, prev_w = c, w
        out.append(prev_w)
    return np.asarray(out)


def circle_arc(x0: float, x1: float, n: int) -> np.ndarray:
    """Points of the unit circle along lift coordinates ``x0 -> x1``."""
    return on_circle(np.linspace(x0, x1, n))


# ---------------------------------------------------------------------------
# drops
# ---------------------------------------------------------------------------


@dataclass
class DropRegion:
    root: complex
    depth: int
    boundary: np.ndarray  # closed polyline, boundary[0] == boundary[-1] == root

    @property
    def diameter(self) -> float:
        b = self.boundary
        return float(np.max(np.abs(b[:, None] - b[None, :])))

    def forward_residual(self, f: BlaschkeMap) -> float:
        """max ``||f^{depth+1}(z)| - 1|`` over the boundary polyline."""
        z = f.iterate(self.boundary, self.depth + 1)
        return float(np.max(np.abs(np.abs(z) - 1.0)))


def _drop_boundary(f: BlaschkeMap, n: int) -> np.ndarray:
    """Boundary of W: the root of ``f(w) = e^{2 pi i t}`` outside the disc.

    Parametrised from the critical value (``t = tau``) once round, so the
    polyline starts and ends at the root ``1``.
    """
    # cluster samples near the cusp at the root
    s = np.linspace(0.0, 1.0, n + 1)
    s = 0.5 - 0.5 * np.cos(math.pi * s)
    t = f.tau + s
    pts = np.empty(n + 1, dtype=complex)
    for i, ti in enumerate(t):
        roots = f.preimages(cmath.exp(1j * TWO_PI * ti))
        pts[i] = roots[np.argmax(np.abs(roots))]
    pts[0] = pts[-1] = 1.0
    return pts


def circle_preimage_path(f: BlaschkeMap, depth: int) -> list[complex]:
    """``[1, f^{-1}(1), ..., f^{-depth}(1)]`` along the circle restriction."""
    g = f.circle_map()
    x, path = 0.0, [1.0 + 0j]
    for _ in range(depth):
        x = g.inverse_real(x)
        path.append(complex(on_circle(x)))
    return path


def drop(f: BlaschkeMap, path: int | list[complex] = 0, resolution: int = 512) -> DropRegion:
    """The drop ``W(zeta)`` rooted at the end of a backward orbit of 1.

    ``path`` is either a depth (the orbit along the circle) or an explicit
    list ``[1, zeta_1, ..., zeta_i]`` with ``f(zeta_j) = zeta_{j-1}``.
    """
    if isinstance(path, int):
        if path < 0:
            raise DomainError("depth must be nonnegative")
        path = circle_preimage_path(f, path)
    path = [complex(p) for p in path]
    if abs(path[0] - 1.0) > 1e-12:
        raise DomainError("a root orbit starts at the critical point 1")
    for a, b in zip(path, path[1:]):
        if abs(complex(f(b)) - a) > 1e-9:
            raise DomainError("path is not a backward orbit of 1")
    bnd = _drop_boundary(f, resolution)
    for zeta in path[1:]:
        bnd = pullback_polyline(f, bnd, zeta)
        if abs(bnd[-1] - zeta) > 1e-8:
            raise BranchAmbiguity("pulled-back drop boundary failed to close at its root")
        bnd[-1] = bnd[0]
    return DropRegion(path[-1], len(path) - 1, bnd)
