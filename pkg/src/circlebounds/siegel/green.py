"""Green's function of the basin of infinity, external rays, equipotentials.

Near infinity ``f(z) = a z^2 (1 - 8/(3z) + O(z^-2))`` with ``a = -lam/3``, so
the Boettcher coordinate is ``phi(z) = a (z - 4/3) + O(1/z)``.  A point with
``phi(z) = exp(G + 2 pi i t)`` is found by solving ``f^k(z) = phi^{-1}(phi^{2^k})``
with Newton, ``k`` large enough that the asymptotic inverse is accurate.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from ..errors import NotConverged
from .blaschke import BlaschkeMap

TWO_PI = 2.0 * math.pi
FAR_POTENTIAL = 12.0  # phi^{-1} is used only where log|phi| >= this


def green(f: BlaschkeMap, z, max_iter: int = 64, escape: float = 1e8):
    """``G(z) = lim 2^{-k} log|f^k(z)|``; 0 where the orbit stays bounded."""
    z = np.array(z, dtype=complex, copy=True)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.zeros(z.shape)
    alive = np.ones(z.shape, dtype=bool)
    loga = math.log(1.0 / 3.0)
    for k in range(max_iter):
        big = alive & (np.abs(z) > escape)
        if np.any(big):
            out[big] = (np.log(np.abs(z[big] - 4.0 / 3.0)) + loga) / 2.0**k
            alive &= ~big
        if not alive.any():
            break
        z[alive] = f(z[alive])
    return float(out[0]) if scalar else out


def _target(f: BlaschkeMap, G: float, t: float, k: int) -> complex:
    a = -f.lam / 3.0
    scale = 2.0**k
    return cmath.exp(scale * G + 1j * TWO_PI * ((scale * t) % 1.0)) / a + 4.0 / 3.0


def _newton(f: BlaschkeMap, target: complex, z: complex, k: int, tol: float = 1e-12, max_iter: int = 40):
    for _ in range(max_iter):
        w, d = f.iterate_with_derivative(z, k)
        w, d = complex(w), complex(d)
        if d == 0 or not cmath.isfinite(w):
            return None
        step = (w - target) / d
        z -= step
        if abs(step) <= tol * max(1.0, abs(z)):
            return z
    return None


def _levels(G: float) -> int:
    return max(0, math.ceil(math.log2(FAR_POTENTIAL / G)))


def boettcher_point(f: BlaschkeMap, G: float, t: float, guess: complex | None = None) -> complex:
    """The point with potential ``G`` and external argument ``t``."""
    k = _levels(G)
    if guess is None:
        # walk in from far away along the ray
        return trace_ray(f, t, G_stop=G, G_start=max(G, FAR_POTENTIAL)).points[-1]
    z = _newton(f, _target(f, G, t, k), complex(guess), k)
    if z is None:
        raise NotConverged(f"Newton failed at potential {G} argument {t}")
    return z


@dataclass
class RayTrace:
    t: float
    points: np.ndarray
    potentials: np.ndarray
    landed: bool
    stalled: bool

    @property
    def end(self) -> complex:
        return complex(self.points[-1])


def trace_ray(
    f: BlaschkeMap,
    t: float,
    G_stop: float = 1e-5,
    G_start: float = FAR_POTENTIAL,
    per_level: int = 16,
    floor: float = 1e-6,
    land_at: complex | None = None,
    land_tol: float = 1e-3,
) -> RayTrace:
    """External ray of argument ``t`` from potential ``G_start`` inwards.

    Potentials decrease geometrically (``per_level`` steps per halving);
    Newton failures halve the step in ``log G`` down to ``floor``.  With
    ``land_at`` given, tracing stops once the ray is within ``land_tol``.
    """
    G = G_start
    z = _target(f, G, t, 0) if G >= FAR_POTENTIAL else None
    if z is None:
        raise NotConverged("G_start must be in the asymptotic range")
    pts, pots = [z], [G]
    dlog = math.log(2.0) / per_level
    step = dlog
    landed = stalled = False
    while G > G_stop:
        if land_at is not None and abs(z - land_at) < land_tol:
            landed = True
            break
        G_new = max(G * math.exp(-step), G_stop)
        k = _levels(G_new)
        z_new = _newton(f, _target(f, G_new, t, k), z, k)
        if z_new is None or abs(z_new - z) > 0.5 * max(abs(z), 1.0):
            step *= 0.5
            if step < floor:
                stalled = True
                break
            continue
        z, G = z_new, G_new
        pts.append(z)
        pots.append(G)
        step = min(dlog, 2.0 * step)
    if land_at is not None and abs(z - land_at) < land_tol:
        landed = True
    return RayTrace(t, np.asarray(pts), np.asarray(pots), landed, stalled)


def equipotential(
    f: BlaschkeMap,
    level: float = 1.0,
    t0: float = 0.0,
    t1: float = 1.0,
    n: int = 2048,
    start: complex | None = None,
) -> np.ndarray:
    """Arc ``{G = level}`` for external arguments ``t0 -> t1``, by continuation."""
    k = _levels(level)
    z = start if start is not None else boettcher_point(f, level, t0)
    ts = np.linspace(t0, t1, n)
    out = [complex(z)]
    for t in ts[1:]:
        z_new = None
        sub = 1
        while z_new is None and sub <= 64:
            zz = out[-1]
            t_prev = t - (ts[1] - ts[0])
            ok = True
            for s in np.linspace(t_prev, t, sub + 1)[1:]:
                zz = _newton(f, _target(f, level, s, k), zz, k)
                if zz is None:
                    ok = False
                    break
            z_new = zz if ok else None
            sub *= 2
        if z_new is None:
            raise NotConverged(f"equipotential continuation failed at t = {t}")
        out.append(z_new)
    return np.asarray(out)


def winding_number(curve: np.ndarray, z0: complex = 0.0) -> float:
    """Winding number of a closed polyline around ``z0``."""
    c = np.asarray(curve) - z0
    ang = np.angle(np.roll(c, -1) / c)
    return float(np.sum(ang) / TWO_PI)
