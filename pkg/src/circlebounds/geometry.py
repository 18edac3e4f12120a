"""Slit-plane geometry: geodesic neighbourhoods ``D_theta(J)`` and friends.

``D_theta(J)`` is the union of the two real-symmetric disc segments based on
``J = [a, b]`` that meet the real line at angle ``theta``.  Membership is
decided exactly by the angle ``phi_J(z)`` that ``J`` subtends at ``z``:
``z`` lies in ``D_theta(J)`` iff ``phi_J(z) > pi - theta`` (points of the
open interval subtend ``pi``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, NoAdmissibleSamples

Interval = tuple[float, float]


def _check_interval(J) -> tuple[float, float]:
    a, b = float(J[0]), float(J[1])
    if not (math.isfinite(a) and math.isfinite(b)) or a == b:
        raise DomainError(f"degenerate interval {J!r}")
    return a, b


def _normalize(z, J):
    # affine chart sending J[0] -> 0 and J[1] -> 1
    a, b = _check_interval(J)
    return (np.asarray(z, dtype=complex) - a) / (b - a)


def subtended_angle(z, J=(0.0, 1.0)):
    """Angle ``phi_J(z)`` in [0, pi] under which ``J`` is seen from ``z``."""
    w = _normalize(z, J)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.abs(np.angle(w / (w - 1.0)))
    # the open interval itself subtends a straight angle
    inside = (w.imag == 0.0) & (w.real > 0.0) & (w.real < 1.0)
    return np.where(inside, math.pi, phi)


@dataclass(frozen=True)
class GeodesicNeighborhood:
    """``D_theta([a, b])``; ``theta = pi/2`` is the Euclidean disc on ``[a, b]``."""

    a: float
    b: float
    theta: float

    def __post_init__(self):
        if not self.a < self.b:
            raise DomainError("need a < b")
        if not 0.0 < self.theta < math.pi:
            raise DomainError("theta must lie in (0, pi)")

    @property
    def J(self) -> Interval:
        return (self.a, self.b)

    def contains(self, z):
        return subtended_angle(z, self.J) > math.pi - self.theta

    def boundary(self, n: int = 512) -> np.ndarray:
        return geodesic_boundary(self.J, self.theta, n)

    @property
    def diameter(self) -> float:
        L = self.b - self.a
        if self.theta <= math.pi / 2:
            return L
        return L / math.sin(self.theta)


def in_geodesic_nbhd(z, D: GeodesicNeighborhood):
    out = D.contains(z)
    return bool(out) if np.ndim(out) == 0 else out


def geodesic_boundary(J, theta: float, n: int = 512) -> np.ndarray:
    """``n`` points of the boundary of ``D_theta(J)``, clustered at the endpoints.

    The upper arc is sampled at cosine-spaced midpoints (so the endpoints
    themselves are excluded) and the lower arc is its mirror image.
    """
    a, b = _check_interval(J)
    if not 0.0 < theta < math.pi:
        raise DomainError("theta must lie in (0, pi)")
    half = max(n // 2, 1)
    yc = -0.5 / math.tan(theta)
    R = 0.5 / math.sin(theta)
    a0 = math.atan2(-yc, 0.5)
    t = (np.arange(half) + 0.5) / half
    alpha = a0 + (math.pi - 2.0 * a0) * 0.5 * (1.0 - np.cos(math.pi * t))
    w = 0.5 + 1j * yc + R * np.exp(1j * alpha)
    w = np.concatenate([w, np.conj(w[::-1])])
    return a + (b - a) * w


def _seg_dist(z, a: float, b: float):
    z = np.asarray(z, dtype=complex)
    x = np.clip(z.real, min(a, b), max(a, b))
    return np.abs(z - x)


def dist_to_interval(z, J):
    a, b = _check_interval(J)
    return _seg_dist(z, a, b)


# ---------------------------------------------------------------------------
# angle between a point and an interval
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AngleMeasurement:
    z: complex
    J: Interval
    angle: float


def angle_to_interval(z: complex, J) -> float:
    """``angle(z, J)``: the lesser of the angles that ``[a, z]`` and ``[b, z]``
    make with the rays ``(-inf, a]`` and ``[b, +inf)``."""
    a, b = sorted(_check_interval(J))
    z = complex(z)
    if z == a or z == b:
        raise DomainError("angle is undefined at an endpoint of J")
    at_a = math.pi - abs(math.atan2(z.imag, z.real - a))
    at_b = abs(math.atan2(z.imag, z.real - b))
    return min(at_a, at_b)


def measure_angle(z: complex, J) -> AngleMeasurement:
    return AngleMeasurement(complex(z), tuple(J), angle_to_interval(z, J))


def angles_to_interval(z, J) -> np.ndarray:
    """Vectorised ``angle_to_interval``; endpoints give ``nan``."""
    a, b = sorted(_check_interval(J))
    z = np.asarray(z, dtype=complex)
    at_a = math.pi - np.abs(np.arctan2(z.imag, z.real - a))
    at_b = np.abs(np.arctan2(z.imag, z.real - b))
    out = np.minimum(at_a, at_b)
    return np.where((z == a) | (z == b), np.nan, out)


# ---------------------------------------------------------------------------
# Schwarz lemma sampling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SchwarzReport:
    margin: float
    n: int
    worst: complex

    @property
    def held(self) -> bool:
        return self.margin <= 0.0


def schwarz_sample_check(branch: Callable, J, J2, theta: float, n: int = 512) -> SchwarzReport:
    """Check ``branch(D_theta(J)) subset D_theta(J2)`` on boundary samples.

    ``J2`` is given with its endpoints in the order of the images of ``J``'s
    endpoints.  The margin is ``max(phi_J(z) - phi_J2(branch z))`` over
    samples; a non-positive margin means every image landed in the closure.
    """
    z = geodesic_boundary(J, theta, n)
    w = np.asarray(branch(z), dtype=complex)
    gap = subtended_angle(z, J) - subtended_angle(w, J2)
    k = int(np.argmax(gap))
    return SchwarzReport(float(gap[k]), len(z), complex(z[k]))


# ---------------------------------------------------------------------------
# configurations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConfigurationReport:
    points: tuple[float, ...]
    K: float


def commensurability(points: Sequence[float]) -> ConfigurationReport:
    """Smallest ``K`` making all intervals spanned by the points K-commensurable."""
    x = np.sort(np.asarray(points, dtype=float))
    if x.size < 3:
        raise DomainError("need at least three points")
    gaps = np.diff(x)
    if np.any(gaps == 0.0):
        raise DomainError("duplicate points")
    return ConfigurationReport(tuple(float(v) for v in x), float((x[-1] - x[0]) / gaps.min()))


@dataclass(frozen=True)
class GoodAngleReport:
    C: float
    used: int
    skipped: tuple[int, ...] = field(default=())


def good_angle_check(branch: Callable, J, J2, eps: float, samples) -> GoodAngleReport:
    """Fit ``C`` in ``dist(phi z, J2)/|J2| <= C dist(z, J)/|J|`` over samples.

    Samples violating ``dist(z, J) >= |J|`` or ``angle(z, J) >= eps`` are
    skipped and their indices reported.
    """
    a, b = _check_interval(J)
    a2, b2 = _check_interval(J2)
    z = np.asarray(samples, dtype=complex).ravel()
    L, L2 = abs(b - a), abs(b2 - a2)
    d = _seg_dist(z, a, b)
    ang = angles_to_interval(z, J)
    ok = (d >= L) & (ang >= eps)
    skipped = tuple(int(i) for i in np.flatnonzero(~ok))
    if not ok.any():
        raise NoAdmissibleSamples("no sample satisfies the good-angle precondition")
    w = np.asarray(branch(z[ok]), dtype=complex)
    ratio = (_seg_dist(w, a2, b2) / L2) / (d[ok] / L)
    return GoodAngleReport(float(ratio.max()), int(ok.sum()), skipped)


# ---------------------------------------------------------------------------
# cube root
# ---------------------------------------------------------------------------


def cube_root(z):
    """Principal branch of the cube root on ``C \\ R_-`` (upper bank on the cut)."""
    z = np.asarray(z, dtype=complex)
    return np.abs(z) ** (1.0 / 3.0) * np.exp(1j * np.angle(z) / 3.0)


@dataclass(frozen=True)
class CubeRootReport:
    theta2: float  # image inside D_theta2([0, 1])
    theta_cover: float  # angle used on [b, 1] in the two-disc cover
    b: float
    c: float
    sigma: float  # angle on [0, c], below pi/2
    K: float  # boundedness constant of {0, b, c, 1}
    eps: float
    dist_min: float
    dist_max: float


def _upper_region(a: float, theta: float, n: int, layers: int = 24) -> np.ndarray:
    # D_theta([-a, 1]) in the closed upper half-plane, swept by the boundaries
    # of D_t([-a, 1]) for 0 < t <= theta plus the upper bank of [-a, 1]
    ts = theta * (np.arange(1, layers + 1) / layers)
    pts = [geodesic_boundary((-a, 1.0), t, n)[: n // 2] for t in ts]
    s = np.linspace(-a, 1.0, n)
    pts.append(s + 0j)
    return np.concatenate(pts)


def cube_root_hull(a: float, theta: float, n: int = 512, delta: float = 0.1,
                   grid: int = 41) -> CubeRootReport:
    """Sample the cube-root image of ``D_theta([-a, 1])``.

    Returns the least ``theta2`` with the image inside ``D_theta2([0, 1])``;
    a cover of the image by ``D_theta_cover([b, 1]) U D_sigma([0, c])`` with
    ``sigma < pi/2`` and ``theta_cover`` at most halfway from ``theta2`` to
    ``pi``, found by grid search minimising the boundedness constant of
    ``{0, b, c, 1}``; and the least angle and the
    distance range to ``[0, 1]`` of the image of the Euclidean disc on
    ``[-a, 1]`` outside ``D([-delta, 1 + delta])``.
    """
    if a <= 0.0:
        raise DomainError("a must be positive")
    if not 0.0 < theta < math.pi:
        raise DomainError("theta must lie in (0, pi)")
    w = cube_root(_upper_region(a, theta, n))
    # the endpoints 0 = phi(0) and 1 = phi(1) of [0, 1] lie in the closure of every neighbourhood
    w = w[(np.abs(w - 1.0) > 1e-12) & (np.abs(w) > 1e-12)]
    seen = subtended_angle(w, (0.0, 1.0))
    theta2 = float(math.pi - seen.min())

    # two-disc cover: for each (b, c, sigma) the points missed by
    # D_sigma([0, c]) fix the angle needed on [b, 1].  Among covers whose
    # angle stays below the midpoint of (theta2, pi), keep the best bounded
    # configuration {0, b, c, 1}.
    sub = w[:: max(1, w.size // 2000)]
    sigmas = np.linspace(math.pi / 3, 0.49 * math.pi, 8)
    cap = 0.5 * (theta2 + math.pi)
    best = (math.inf, math.inf, 0.5, 1.0, sigmas[-1])
    for b in np.linspace(0.0, 1.0, grid)[1:-1]:
        from_b = subtended_angle(sub, (b, 1.0))
        for c in np.linspace(b, 1.0, grid)[1:-1]:
            from_c = subtended_angle(sub, (0.0, c))
            K = commensurability([0.0, b, c, 1.0]).K
            for sig in sigmas:
                miss = from_c <= math.pi - sig
                need = 0.0 if not miss.any() else float(math.pi - from_b[miss].min())
                if need <= cap and (K, need) < best[:2]:
                    best = (K, need, float(b), float(c), float(sig))
    K, theta_cover, b, c, sigma = best

    # third bullet uses the Euclidean disc D(T)
    wd = cube_root(_upper_region(a, math.pi / 2, n))
    big = GeodesicNeighborhood(-delta, 1.0 + delta, math.pi / 2)
    rest = wd[~big.contains(wd)]
    if rest.size:
        eps = float(np.nanmin(angles_to_interval(rest, (0.0, 1.0))))
        d = _seg_dist(rest, 0.0, 1.0)
        dmin, dmax = float(d.min()), float(d.max())
    else:
        eps, dmin, dmax = math.pi, 0.0, 0.0
    return CubeRootReport(theta2, theta_cover, b, c, sigma, K, eps, dmin, dmax)
