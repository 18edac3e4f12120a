"""Critical circle maps: the standard family and the Blaschke circle restriction.

Maps are handled through lifts ``F: R -> R`` with ``F(x + 1) = F(x) + 1`` and
the critical point at ``0``.  Each lift extends holomorphically to a strip
(the whole plane for the standard family).

Closest-return times are read off the circular *order* of the critical orbit,
which a topological conjugacy to the rotation preserves: after time 1, the
orbit sets new one-sided records (closer to 0 from the right, or from the
left) in alternating runs, and the last time of each run is a ``q_m``.
"""

from __future__ import annotations

import cmath
import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import BranchAmbiguity, DomainError, InsufficientBudget, RationalLock
from .numbertheory import RotationNumber, continued_fraction

TWO_PI = 2.0 * math.pi
LOCK_TOL = 1e-14
MIN_INTERVAL = 1e-11


@dataclass(frozen=True)
class CriticalCircleMap:
    family: str
    param: float

    def __post_init__(self):
        if self.family not in ("standard", "blaschke-circle"):
            raise DomainError(f"unknown family {self.family!r}")

    # real lift -----------------------------------------------------------
    def lift(self, x: float) -> float:
        if self.family == "standard":
            return x + self.param - math.sin(TWO_PI * x) / TWO_PI
        s, c = math.sin(TWO_PI * x), math.cos(TWO_PI * x)
        return self.param + x + math.atan2(-s / 3.0, 1.0 - c / 3.0) / math.pi

    def lift_array(self, x):
        x = np.asarray(x, dtype=float)
        if self.family == "standard":
            return x + self.param - np.sin(TWO_PI * x) / TWO_PI
        s, c = np.sin(TWO_PI * x), np.cos(TWO_PI * x)
        return self.param + x + np.arctan2(-s / 3.0, 1.0 - c / 3.0) / np.pi

    # complex extension ---------------------------------------------------
    def __call__(self, z):
        """Holomorphic extension of the lift (numpy-aware)."""
        z = np.asarray(z, dtype=complex)
        if self.family == "standard":
            return z + self.param - np.sin(TWO_PI * z) / TWO_PI
        u = np.exp(1j * TWO_PI * z)
        return self.param + z + (np.log(1.0 - u / 3.0) - np.log(1.0 - 1.0 / (3.0 * u))) / (1j * TWO_PI)

    def derivative(self, z):
        z = np.asarray(z, dtype=complex)
        if self.family == "standard":
            return 1.0 - np.cos(TWO_PI * z)
        u = np.exp(1j * TWO_PI * z)
        return 1.0 - u / (3.0 - u) - 1.0 / (3.0 * u - 1.0)

    @property
    def strip_halfwidth(self) -> float:
        """Half-width of the horizontal strip where the extension is valid."""
        return math.inf if self.family == "standard" else math.log(3.0) / TWO_PI

    def critical_points_near(self, z: complex) -> complex:
        # critical points of both lifts are exactly the integers
        return complex(round(z.real), 0.0)

    # iteration -------------------------------------------------------------
    def iterate(self, x: float, n: int) -> float:
        """``F^n(x)`` on the lift, keeping the fractional part well conditioned."""
        k = math.floor(x)
        y = x - k
        for _ in range(n):
            y = self.lift(y)
            j = math.floor(y)
            k += j
            y -= j
        return k + y

    def iterate_array(self, x, n: int):
        """``F^n`` applied elementwise to a real or complex array."""
        x = np.asarray(x)
        cplx = np.iscomplexobj(x)
        y = x.astype(complex if cplx else float, copy=True)
        k = np.floor(y.real)
        y = y - k
        for _ in range(n):
            y = self(y) if cplx else self.lift_array(y)
            j = np.floor(y.real)
            k = k + j
            y = y - j
        return y + k

    def inverse_real(self, y: float) -> float:
        """The real ``x`` with ``F(x) = y`` (the lift is monotone)."""
        x0 = y - self.lift(0.0)
        g = lambda x: self.lift(x) - y
        lo, hi = x0 - 1.0, x0 + 1.0
        return brentq(g, lo, hi, xtol=1e-16, rtol=8.9e-16, maxiter=200)

    def backward(self, x: float, n: int) -> float:
        for _ in range(n):
            x = self.inverse_real(x)
        return x


def standard_map(theta: float) -> CriticalCircleMap:
    """``x -> x + theta - sin(2 pi x)/(2 pi)``."""
    return CriticalCircleMap("standard", float(theta))


def blaschke_circle_map(tau: float) -> CriticalCircleMap:
    """Lift of ``z -> e^{2 pi i tau} z^2 (z-3)/(1-3z)`` restricted to the unit circle,
    recentred so the cubic critical point ``z = 1`` sits at ``x = 0``."""
    return CriticalCircleMap("blaschke-circle", float(tau))


# ---------------------------------------------------------------------------
# closest returns from circular order
# ---------------------------------------------------------------------------


@dataclass
class _Records:
    q: list[int] = field(default_factory=list)
    p: list[int] = field(default_factory=list)
    points: list[float] = field(default_factory=list)
    pending_side: str | None = None
    pending_run: int = 0  # intermediate records seen in the unfinished run
    locked: tuple[int, int] | None = None  # (n, turns) when the orbit hit 0
    iterations: int = 0
    final: float = 0.0  # F^iterations(0) on the lift


def _scan_records(lift: Callable[[float], float], budget: int, stop=None) -> _Records:
    """Iterate the orbit of 0 and extract confirmed closest returns.

    ``stop(records)`` is consulted at every new record once a ``q_m`` is known.
    """
    rec = _Records()
    k, y = 0, 0.0
    lo_rec, hi_rec = math.inf, -math.inf
    run_side: str | None = None
    last: tuple[int, int, float] | None = None  # (n, turns, frac) of the current run's last record
    for n in range(1, budget + 1):
        y = lift(y)
        j = math.floor(y)
        k += j
        y -= j
        rec.iterations = n
        rec.final = k + y
        if y < LOCK_TOL or 1.0 - y < LOCK_TOL:
            rec.locked = (n, k + (1 if y > 0.5 else 0))
            return rec
        if n == 1:
            lo_rec = hi_rec = y
            continue
        side = None
        if y < lo_rec:
            lo_rec, side = y, "R"
        elif y > hi_rec:
            hi_rec, side = y, "L"
        if side is None:
            continue
        if run_side is None:
            run_side = side
            if side == "R":
                # time 1 sat on the left: rho > 1/2 and q_1 = 1
                y1 = hi_rec
                rec.q.append(1)
                rec.p.append(1)
                rec.points.append(y1 - 1.0)
            last = (n, k, y)
            rec.pending_run = 1
            continue
        if side == run_side:
            last = (n, k, y)
            rec.pending_run += 1
            if stop is not None and rec.q and stop(rec):
                break
            continue
        # side switch: the previous run's last record is a closest return
        ln, lk, ly = last
        if run_side == "L":
            rec.q.append(ln)
            rec.p.append(lk + 1)
            rec.points.append(ly - 1.0)
        else:
            rec.q.append(ln)
            rec.p.append(lk)
            rec.points.append(ly)
        run_side = side
        last = (n, k, y)
        rec.pending_run = 1
        if stop is not None and stop(rec):
            break
    rec.pending_side = run_side
    return rec


def _bracket(rec: _Records) -> tuple[float, float]:
    """Interval guaranteed to contain rho from the confirmed convergents.

    With ``M`` the deepest confirmed level, rho lies between ``p_M/q_M`` and
    ``p_{M+1}/q_{M+1}``; the unfinished run shows ``r_M >= k_obs`` intermediate
    records, which pins ``p_{M+1}/q_{M+1}`` between ``p_M/q_M`` and
    ``(p_{M-1} + k_obs p_M)/(q_{M-1} + k_obs q_M)``.
    """
    qs, ps = rec.q, rec.p
    M = len(qs)
    if M == 0:
        # only the first run (left side, times 2..k+1) has been seen: (k+1) rho < 1
        return 0.0, 1.0 / (rec.pending_run + 1)
    a = ps[-1] / qs[-1]
    if M == 1:
        q_prev, p_prev = 1, 0  # q_0 = 1, p_0 = 0
    else:
        q_prev, p_prev = qs[-2], ps[-2]
    # number of intermediate records after q_M: the run after q_M contains
    # q_{M-1} + j q_M for j = 1..r_M (the last of which would be q_{M+1})
    k_obs = max(rec.pending_run, 1)
    b = (p_prev + k_obs * ps[-1]) / (q_prev + k_obs * qs[-1])
    return (a, b) if a <= b else (b, a)


def rotation_bracket(
    f, budget: int = 200_000, tol: float = 0.0, target: float | None = None, strict: bool = True
) -> tuple[float, float, float]:
    """Return ``(estimate, lo, hi)`` for the rotation number of a lift.

    ``f`` is a ``CriticalCircleMap`` or any callable lift with the critical
    point at 0.  Iteration stops once ``hi - lo < tol``, once ``target`` falls
    outside the bracket, or when the budget runs out.  A lock returns the
    exact rational value with a degenerate bracket.
    """
    lift = f.lift if isinstance(f, CriticalCircleMap) else f

    def stop(rec):
        if len(rec.q) < 1:
            return False
        lo, hi = _bracket(rec)
        if target is not None and not (lo <= target <= hi):
            return True
        return hi - lo < tol

    rec = _scan_records(lift, budget, stop if (tol > 0 or target is not None) else None)
    if rec.locked is not None:
        n, turns = rec.locked
        v = float(Fraction(turns, n))
        return v, v, v
    lo, hi = _bracket(rec)
    # |F^N(0) - N rho| < 1 for any lift of a circle homeomorphism
    N = rec.iterations
    lo, hi = max(lo, (rec.final - 1.0) / N), min(hi, (rec.final + 1.0) / N)
    if len(rec.q) < 2:
        if strict:
            raise InsufficientBudget("no closest return beyond q_1 within budget")
        return 0.5 * (lo + hi), lo, hi
    return rec.p[-1] / rec.q[-1], lo, hi


def rotation_number(f, budget: int = 200_000, tol: float = 1e-10) -> float:
    """Convergent-based rotation number ``p_M/q_M`` of the deepest confirmed return.

    Guarantees ``|rho - p_M/q_M| <= 1/(q_M q_{M+1}) <= 1/q_M^2``.
    """
    if budget < 1000:
        raise DomainError("budget must be at least 1000")
    est, _, _ = rotation_bracket(f, budget, tol)
    return est


@dataclass(frozen=True)
class CriticalOrbit:
    f: CriticalCircleMap
    q: tuple[int, ...]
    p: tuple[int, ...]
    points: tuple[float, ...]  # signed residuals f^{q_m}(0) in (-1/2, 1/2)

    @property
    def lengths(self) -> np.ndarray:
        return np.abs(np.asarray(self.points))

    def interval(self, m: int) -> tuple[float, float]:
        """``I_m = [0, f^{q_m}(0)]`` as an ordered pair (levels start at 1)."""
        x = self.points[m - 1]
        return (min(0.0, x), max(0.0, x))

    def qm(self, m: int) -> int:
        return self.level(m)[0]

    def pm(self, m: int) -> int:
        return self.level(m)[1]

    def level(self, m: int) -> tuple[int, int, float]:
        """``(q_m, p_m, f^{q_m}(0) - p_m)``; level 0 is ``(1, 0, F(0))``."""
        if m == 0:
            return 1, 0, self.f.lift(0.0)
        if not 1 <= m <= len(self.q):
            raise IndexError(f"level {m} not computed (have 1..{len(self.q)})")
        return self.q[m - 1], self.p[m - 1], self.points[m - 1]

    def ratios(self) -> np.ndarray:
        L = self.lengths
        return L[:-1] / L[1:]

    @property
    def levels(self) -> int:
        return len(self.q)


def closest_returns(
    f: CriticalCircleMap,
    max_level: int,
    min_interval: float = MIN_INTERVAL,
    budget: int = 50_000_000,
) -> CriticalOrbit:
    """Closest-return times ``q_1..q_M`` with the points ``f^{q_m}(0)``."""
    if max_level < 1:
        raise DomainError("max_level must be positive")

    def stop(rec):
        return len(rec.q) >= max_level or abs(rec.points[-1]) < min_interval

    rec = _scan_records(f.lift, budget, stop)
    if rec.locked is not None:
        n, turns = rec.locked
        raise RationalLock(f"critical orbit returns to 0 at n={n} (rho = {turns}/{n})")
    q, p, pts = rec.q[:max_level], rec.p[:max_level], rec.points[:max_level]
    while pts and abs(pts[-1]) < min_interval:
        q, p, pts = q[:-1], p[:-1], pts[:-1]
    if not q:
        raise InsufficientBudget("no closest returns found within budget")
    return CriticalOrbit(f, tuple(q), tuple(p), tuple(pts))


def rotation_of(f: CriticalCircleMap, depth: int = 12, budget: int = 2_000_000) -> RotationNumber:
    """Continued-fraction expansion of the measured rotation number."""
    est = rotation_number(f, budget=budget, tol=1e-15)
    return continued_fraction(est, depth)


# ---------------------------------------------------------------------------
# parameter solving
# ---------------------------------------------------------------------------


def detect_cycle(f: CriticalCircleMap, warmup: int, max_period: int, tol: float = 1e-11) -> Fraction | None:
    """Exact rotation number ``P/Q`` when the critical orbit is attracted to a cycle.

    Iterates ``warmup`` steps, then looks for the first ``Q <= max_period``
    with ``F^Q(y) - P`` back within ``tol`` of ``y``.
    """
    y0 = f.iterate(0.0, warmup)
    y0 -= math.floor(y0)
    k, y = 0, y0
    for n in range(1, max_period + 1):
        y = f.lift(y)
        j = math.floor(y)
        k += j
        y -= j
        d = abs(y - y0)
        if min(d, 1.0 - d) < tol:
            turns = k + (1 if y - y0 < -0.5 else 0) - (1 if y - y0 > 0.5 else 0)
            return Fraction(turns, n)
    return None


@functools.lru_cache(maxsize=256)
def solve_parameter(
    family: str,
    target: float,
    tol: float = 1e-10,
    bracket: tuple[float, float] = (0.0, 1.0),
    max_budget: int = 4_000_000,
    max_steps: int = 200,
) -> tuple[float, tuple[float, float]]:
    """Bisection on the family parameter so that ``|rho - target| < tol``.

    The rotation number is nondecreasing in the additive parameter for both
    families.  Returns ``(parameter, (lo, hi))`` with the final bracket.
    """
    lo, hi = bracket
    budget = 4000
    for _ in range(max_steps):
        mid = 0.5 * (lo + hi)
        f = CriticalCircleMap(family, mid)
        est, rlo, rhi = rotation_bracket(f, budget, tol=tol / 4, target=target, strict=False)
        if target < rlo:
            hi = mid
        elif target > rhi:
            lo = mid
        elif rhi - rlo < tol:
            return mid, (lo, hi)
        elif budget >= 64_000 and (cyc := detect_cycle(f, budget, budget)) is not None:
            # rational plateau: rho is exactly P/Q and target is irrational
            if target < cyc:
                hi = mid
            else:
                lo = mid
        elif budget < max_budget:
            budget *= 4
        else:
            raise InsufficientBudget(f"bracket [{lo!r}, {hi!r}] cannot resolve rho within {tol}")
        if hi - lo < 1e-16:
            break
    raise InsufficientBudget(f"bisection exhausted; best bracket [{lo!r}, {hi!r}]")


def inverse_branch(
    f: CriticalCircleMap,
    target: complex,
    seed: complex,
    tol: float = 1e-12,
    max_iter: int = 60,
    max_jump: float = 0.25,
) -> complex:
    """Solve ``F(w) = target`` by Newton from ``seed`` on the seed's branch.

    Steps are clamped to half the distance from the current iterate to the
    nearest critical point; a result further than ``max_jump`` from the seed
    counts as a branch jump.
    """
    w = complex(seed)
    target = complex(target)
    res = math.inf
    for _ in range(max_iter):
        val = complex(f(w)) - target
        res = abs(val)
        d = complex(f.derivative(w))
        if d == 0:
            break
        step = val / d
        guard = 0.5 * abs(w - f.critical_points_near(w))
        if guard > 0 and abs(step) > guard:
            step *= guard / abs(step)
        w -= step
        if res <= tol and abs(step) <= max(tol, 1e-15):
            break
        if abs(w - seed) > max_jump:
            raise BranchAmbiguity(f"Newton left the seed neighbourhood (|w - seed| = {abs(w - seed):.3g})")
    res = abs(complex(f(w)) - target)
    if not cmath.isfinite(w) or res > tol:
        raise BranchAmbiguity(f"Newton stalled with residual {res:.3g}")
    if abs(w - seed) > max_jump:
        raise BranchAmbiguity("converged to a different branch")
    return w
