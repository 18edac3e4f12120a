"""Backward-orbit instrumentation for the linear-growth and cubic estimates.

Fix a level ``n`` and ``p = q_{n+1}``.  Then ``f^p = psi_n o f`` near
``f(I_n)``, and ``psi_n^{-1}`` is the composition of ``p - 1`` inverse
branches of ``f`` along the real backward orbit

    J_0 = f^p(I_n), J_{-1} = f^{p-1}(I_n), ..., J_{-(p-1)} = f(I_n).

Branches are followed by Newton continuation from a real base point along
a straight path, for many sample points at once.  A sample whose
continuation stalls or jumps, even after refining the path, counts as
outside the univalence domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circlemap import CriticalCircleMap, CriticalOrbit, closest_returns
from .errors import BranchAmbiguity, DomainError, NoAdmissibleSamples, NotConverged, NumericalFailure
from .geometry import GeodesicNeighborhood, angles_to_interval, dist_to_interval

EPS_DEFAULT = 0.2
K_GOOD_DEFAULT = 50.0
B_DEFAULT = 5.0
GRID_DEFAULT = (32, 64)
NEWTON_TOL = 1e-13


def _reduce(x: float) -> tuple[int, float]:
    k = math.floor(x)
    return k, x - k


# ---------------------------------------------------------------------------
# real combinatorics of one level
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LevelData:
    """Real backward orbit of ``I_n`` with integer representatives.

    Index ``i`` refers to ``J_{-i} = F^{p-i}(I_n) - k[i]``; ``k[0]`` is the
    closest-return translation ``p_{n+1}`` and the other ``k[i]`` centre
    ``J_{-i}`` in ``[-1/2, 1/2)``.  ``base[i]`` is the orbit of the midpoint
    of ``I_n`` in the same coordinates, so ``F(base[i+1]) = base[i] + shift[i]``.
    """

    f: CriticalCircleMap
    n: int
    orbit: CriticalOrbit
    p: int
    P: int
    xn: float
    k: np.ndarray
    J: np.ndarray  # (p, 2), sorted endpoints
    base: np.ndarray

    @property
    def shift(self) -> np.ndarray:
        return self.k[:-1] - self.k[1:]

    @property
    def I_n(self) -> tuple[float, float]:
        return (min(0.0, self.xn), max(0.0, self.xn))

    @property
    def J0(self) -> tuple[float, float]:
        return tuple(self.J[0])

    @property
    def f_In(self) -> tuple[float, float]:
        """``f(I_n)`` in absolute lift coordinates."""
        a, b = self.J[-1] + self.k[-1]
        return (float(a), float(b))

    def T(self, m: int) -> tuple[float, float]:
        """``[f^{q_{m+1}}(0), f^{q_m - q_{m+1}}(0)]`` as a sorted pair near 0."""
        q_m, p_m, _ = self.orbit.level(m)
        q1, p1, x1 = self.orbit.level(m + 1)
        # lift of f^{q_m - q_{m+1}}(0): lies beyond f^{q_m}(0), possibly past -1/2
        y = self.f.backward(0.0, q1 - q_m) + (p1 - p_m)
        return (min(x1, y), max(x1, y))

    def D(self, m: int, theta: float = math.pi / 2) -> GeodesicNeighborhood:
        a, b = self.T(m)
        return GeodesicNeighborhood(a, b, theta)


def level_data(f: CriticalCircleMap, n: int, orbit: CriticalOrbit | None = None) -> LevelData:
    if n < 1:
        raise DomainError("level must be at least 1")
    need = n + 2
    if orbit is None or orbit.levels < need:
        orbit = closest_returns(f, need)
    if orbit.levels < need:
        raise DomainError(f"closest returns available only to level {orbit.levels}")
    p, P, xn1 = orbit.level(n + 1)
    _, _, xn = orbit.level(n)
    ends = np.empty((p + 1, 3))
    starts = (0.0, xn, 0.5 * xn)
    for c, x in enumerate(starts):
        kx, y = 0, x
        for j in range(p + 1):
            ends[j, c] = kx + y
            y = f.lift(y)
            jj = math.floor(y)
            kx += jj
            y -= jj
    # index i <-> iterate p - i, for i = 0 .. p-1
    lifts = ends[p:0:-1]
    k = np.floor(lifts[:, 2] + 0.5).astype(np.int64)
    k[0] = P
    J = np.sort(lifts[:, :2] - k[:, None], axis=1)
    base = lifts[:, 2] - k
    return LevelData(f, n, orbit, p, P, xn, k, J, base)


# ---------------------------------------------------------------------------
# vectorised branch continuation
# ---------------------------------------------------------------------------


def _newton_level(f, target, seed, max_iter=40):
    w = seed.copy()
    for _ in range(max_iter):
        with np.errstate(all="ignore"):
            g = f(w) - target
            d = f.derivative(w)
            step = g / d
        guard = 0.5 * np.abs(w - np.round(w.real))
        big = np.abs(step) > guard
        step = np.where(big, step * guard / np.where(big, np.abs(step), 1.0), step)
        w = w - step
        if not np.any(np.abs(step) > 1e-15):
            break
    with np.errstate(all="ignore"):
        res = np.abs(f(w) - target)
    ok = np.isfinite(res) & (res < NEWTON_TOL * np.maximum(1.0, np.abs(target)))
    # a genuine continuation step moves less than the distance to the critical points
    ok &= np.abs(w - seed) <= 0.5 * np.abs(seed - np.round(seed.real)) + 1e-14
    return w, ok


def _pull_chain(f, shifts, bases, z, steps: int, scale: float):
    """Continue all levels of the chain along the path ``base[0] -> z``.

    Returns ``(W, ok, fail_level)``; ``W[i]`` is the level-``i`` point.
    """
    L = len(bases)
    z = np.asarray(z, dtype=complex)
    N = z.size
    W = np.empty((L, N), dtype=complex)
    W[:] = np.asarray(bases, dtype=float)[:, None]
    ok = np.ones(N, dtype=bool)
    fail = np.full(N, -1, dtype=np.int64)
    b0 = bases[0]
    span = np.abs(z - b0)
    smin = np.minimum(1.0, 0.02 * scale / np.maximum(span, 1e-300))
    for s in np.linspace(0.0, 1.0, steps + 1)[1:]:
        # geometric in distance near the base, where the scale is |J_0|
        t = smin ** (1.0 - s)
        live = ok.copy()
        if not live.any():
            break
        W[0, live] = b0 + (z[live] - b0) * t[live]
        for i in range(1, L):
            idx = np.flatnonzero(live)
            if idx.size == 0:
                break
            w, good = _newton_level(f, W[i - 1, idx] + shifts[i - 1], W[i, idx])
            W[i, idx] = w
            bad = idx[~good]
            if bad.size:
                fail[bad] = i
                live[bad] = False
                ok[bad] = False
    return W, ok, fail


def continue_chain(f, shifts, bases, z, steps: int = 48, scale: float = 1.0, refine: int = 2):
    """``_pull_chain`` with path refinement (4x steps, ``refine`` times) for failures."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    W, ok, fail = _pull_chain(f, shifts, bases, z, steps, scale)
    for r in range(refine):
        bad = np.flatnonzero(~ok)
        if bad.size == 0:
            break
        W2, ok2, fail2 = _pull_chain(f, shifts, bases, z[bad], steps * 4 ** (r + 1), scale)
        W[:, bad] = W2
        ok[bad] = ok2
        fail[bad] = fail2
    return W, ok, fail


@dataclass(frozen=True)
class PsiInverse:
    """Evaluator of ``psi_n^{-1}``: ``C_{J_0} -> `` neighbourhood of ``f(I_n)``.

    Inputs are in the coordinates of ``J_0`` (near 0); outputs are in
    absolute lift coordinates where ``f(I_n) = [F(0), F(x_n)]``.
    """

    data: LevelData
    steps: int = 48

    @property
    def scale(self) -> float:
        a, b = self.data.J0
        return b - a

    def chain(self, z, extra: bool = False):
        """All levels of the backward orbit; ``extra`` appends ``f^{-1}`` onto ``I_n``."""
        d = self.data
        shifts = list(d.shift)
        bases = list(d.base)
        if extra:
            shifts.append(d.k[-1])
            bases.append(0.5 * d.xn)
        return continue_chain(d.f, np.asarray(shifts, dtype=float), np.asarray(bases), z, self.steps, self.scale)

    def __call__(self, z):
        scalar = np.ndim(z) == 0
        W, ok, fail = self.chain(z)
        if scalar and not ok[0]:
            raise BranchAmbiguity(f"branch continuation failed at step {int(fail[0])}", int(fail[0]))
        out = W[-1] + self.data.k[-1]
        out = np.where(ok, out, np.nan + 0j)
        return complex(out[0]) if scalar else out

    def forward_residual(self, z, w) -> np.ndarray:
        """``|F^{p-1}(w) - P - z|`` with ``w`` in ``f(I_n)`` coordinates."""
        d = self.data
        y = d.f.iterate_array(np.asarray(w, dtype=complex) - d.k[-1], d.p - 1)
        # F^{p-1}(w - k_{p-1}) = z + k_0 - k_{p-1}
        return np.abs(y - (np.asarray(z) + d.k[0] - d.k[-1]))


def decompose(f: CriticalCircleMap, n: int, orbit: CriticalOrbit | None = None, steps: int = 48) -> PsiInverse:
    return PsiInverse(level_data(f, n, orbit), steps)


# ---------------------------------------------------------------------------
# orbit tracker
# ---------------------------------------------------------------------------

STAYED = "stayed"
JUMP = "epsilon-jump"
ENTERED = "entered"
UNCLASSIFIED = "unclassified"
BYPASS = "good-angle-bypass"
CONTAINED = "contained"
BRANCH_FAILURE = "branch-failure"


@dataclass(frozen=True)
class TraceEvent:
    index: int  # i in z_{-i}
    level: int
    label: str
    angle: float = math.nan
    distance: float = math.nan  # dist(z_{-i}, J_{-i}) / |I_m|
    good: bool | None = None
    K: float = math.nan  # commensurability of J_{-i} with J_0


@dataclass(frozen=True)
class OrbitTrace:
    n: int
    p: int
    z: np.ndarray
    J: np.ndarray
    events: tuple[TraceEvent, ...]
    eps: float
    start_level: int

    @property
    def terminal(self) -> TraceEvent:
        return self.events[-1]

    @property
    def classified(self) -> bool:
        return all(e.label not in (UNCLASSIFIED, BRANCH_FAILURE) for e in self.events)


def _levels_T(d: LevelData, top: int) -> list[tuple[float, float]]:
    # T[m] for m = 1..top (index 0 unused)
    return [(0.0, 0.0)] + [d.T(m) for m in range(1, top + 1)]


def _classify(d: LevelData, zorb: np.ndarray, T, eps: float, K_good: float,
              start_level: int) -> tuple[TraceEvent, ...]:
    top = len(T) - 1
    Ilen = [0.0] + [abs(d.orbit.level(m)[2]) for m in range(1, top + 1)]
    L = d.J[:, 1] - d.J[:, 0]
    L0 = L[0]
    # integer shift putting J_{-i} inside T_m, or absent
    inside, shift = [None], [None]
    for m in range(1, top + 1):
        a, b = T[m]
        hit = np.zeros(d.p, dtype=bool)
        sh = np.zeros(d.p)
        for s in (0.0, -1.0, 1.0):
            h = ~hit & (d.J[:, 0] + s >= a) & (d.J[:, 1] + s <= b)
            sh[h] = s
            hit |= h
        inside.append(hit)
        shift.append(sh)

    def in_D(m, i):
        a, b = T[m]
        return abs(zorb[i] + shift[m][i] - 0.5 * (a + b)) < 0.5 * (b - a)

    def jump_event(i, m, label):
        z = zorb[i]
        ang = float(angles_to_interval(z, tuple(d.J[i]))[()])
        dist = float(dist_to_interval(z, tuple(d.J[i]))[()]) / Ilen[m]
        K = max(L[i] / L0, L0 / L[i])
        if ang > eps:
            return TraceEvent(i, m, JUMP, ang, dist, bool(K <= K_good), K)
        return TraceEvent(i, m, label, ang, dist, bool(K <= K_good), K)

    events: list[TraceEvent] = []
    m = start_level
    i = 0
    seen_next = 0  # returns to level m+1 since arriving at level m
    for i in range(1, d.p):
        if m < top and inside[m + 1][i]:
            seen_next += 1
            if seen_next == 2:
                # second return to the finer level decides the inductive step
                if in_D(m + 1, i):
                    events.append(TraceEvent(i, m + 1, ENTERED))
                    m += 1
                    seen_next = 0
                    continue
                ev = jump_event(i, m + 1, UNCLASSIFIED)
                events.append(ev)
                return tuple(events)
            continue
        if inside[m][i]:
            if in_D(m, i):
                events.append(TraceEvent(i, m, STAYED))
                continue
            ev = jump_event(i, m, UNCLASSIFIED)
            events.append(ev)
            return tuple(events)
    events.append(TraceEvent(d.p - 1, m, CONTAINED))
    return tuple(events)


def _start_level(d: LevelData, z: complex, T) -> int:
    top = len(T) - 1
    best = 0
    for m in range(1, min(top, d.n) + 1):
        a, b = T[m]
        if abs(z - 0.5 * (a + b)) < 0.5 * (b - a):
            best = m
    return best


def trace_many(f: CriticalCircleMap, n: int, zs, eps: float = EPS_DEFAULT, K_good: float = K_GOOD_DEFAULT,
               psi: PsiInverse | None = None, allow_outside: bool = False) -> list[OrbitTrace]:
    """Trace a batch of points; chains are continued jointly, classification per point."""
    psi = psi or decompose(f, n)
    d = psi.data
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    T = _levels_T(d, n + 1)
    W, ok, fail = psi.chain(zs)
    out = []
    for s, z in enumerate(zs):
        zorb = W[:, s]
        m0 = _start_level(d, complex(z), T)
        if m0 == 0:
            if not allow_outside:
                raise DomainError(f"z = {z} is outside D_1")
            m0 = 1
        if not ok[s]:
            ev = (TraceEvent(int(fail[s]), m0, BRANCH_FAILURE),)
            out.append(OrbitTrace(n, d.p, zorb, d.J, ev, eps, m0))
            continue
        J0 = tuple(d.J[0])
        L0 = d.J[0, 1] - d.J[0, 0]
        ang0 = float(angles_to_interval(z, J0)[()])
        dist0 = float(dist_to_interval(z, J0)[()])
        if ang0 > eps and dist0 >= L0:
            ev = (TraceEvent(0, m0, BYPASS, ang0, dist0 / L0, True, 1.0),)
        else:
            ev = _classify(d, zorb, T, eps, K_good, m0)
        out.append(OrbitTrace(n, d.p, zorb, d.J, ev, eps, m0))
    return out


def trace_backward(f: CriticalCircleMap, n: int, z: complex, eps: float = EPS_DEFAULT,
                   K_good: float = K_GOOD_DEFAULT, psi: PsiInverse | None = None) -> OrbitTrace:
    tr = trace_many(f, n, [z], eps, K_good, psi)[0]
    if tr.terminal.label == BRANCH_FAILURE:
        raise BranchAmbiguity("branch continuation failed", tr.terminal.index)
    return tr


# ---------------------------------------------------------------------------
# sampling grids
# ---------------------------------------------------------------------------


def sampling_disc(d: LevelData, choice: str = "D1") -> GeodesicNeighborhood:
    """``D_0``: ``D_1`` or ``D_alpha(T_1)`` with ``alpha = 2 pi / 3``."""
    if choice in ("D1", "D_1"):
        return d.D(1)
    if choice in ("Dalpha", "D_alpha"):
        return d.D(1, 2.0 * math.pi / 3.0)
    raise DomainError(f"unknown D0 choice {choice!r}")


def random_points(D: GeodesicNeighborhood, count: int, seed: int = 0, upper: bool = True) -> np.ndarray:
    """``count`` uniform points of ``D`` (upper half-plane part by default), by rejection."""
    rng = np.random.default_rng(seed)
    pts = D.boundary(256)
    x0, x1 = pts.real.min(), pts.real.max()
    y0, y1 = (0.0 if upper else pts.imag.min()), pts.imag.max()
    out: list[complex] = []
    while len(out) < count:
        z = rng.uniform(x0, x1, 4 * count) + 1j * rng.uniform(y0, y1, 4 * count)
        z = z[D.contains(z) & (z.imag > 0 if upper else True)]
        out.extend(z.tolist())
    return np.asarray(out[:count])


def _radius_about_zero(D: GeodesicNeighborhood) -> float:
    pts = D.boundary(256)
    return float(np.abs(pts).max())


def polar_grid(r_min: float, r_max: float, grid=GRID_DEFAULT) -> np.ndarray:
    """Upper half of a log-radial grid about 0 (angles at midpoints of (0, pi))."""
    nr, na = grid
    half = max(na // 2, 1)
    r = np.geomspace(r_min, r_max, nr)
    a = (np.arange(half) + 0.5) * math.pi / half
    return (r[:, None] * np.exp(1j * a)[None, :]).ravel()


# ---------------------------------------------------------------------------
# linear growth fit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearGrowthFit:
    n: int
    inputs: np.ndarray
    responses: np.ndarray
    C1: float
    C2: float
    D0: GeodesicNeighborhood
    total: int
    survived: int

    @property
    def survival(self) -> float:
        return self.survived / self.total if self.total else 0.0

    def envelope_holds(self) -> bool:
        return bool(np.all(self.responses <= self.C1 * self.inputs + self.C2 + 1e-12))


def envelope(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Upper envelope ``y <= C1 x + C2``: ``C2`` from the near field ``x <= 1``,
    then the least slope covering the far field."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    near = x <= 1.0
    C2 = float(y[near].max()) if near.any() else 0.0
    far = ~near
    C1 = float(max(0.0, ((y[far] - C2) / x[far]).max())) if far.any() else 0.0
    return C1, C2


def fit_linear_growth(f: CriticalCircleMap, n: int, grid=GRID_DEFAULT, D0: str = "D1",
                      psi: PsiInverse | None = None, min_survival: float = 0.9) -> LinearGrowthFit:
    psi = psi or decompose(f, n)
    d = psi.data
    disc = sampling_disc(d, D0)
    In = abs(d.xn)
    z = polar_grid(0.05 * In, _radius_about_zero(disc), grid)
    z = z[disc.contains(z)]
    if z.size == 0:
        raise NoAdmissibleSamples("sampling grid missed D_0")
    w = psi(z)
    ok = np.isfinite(w)
    if ok.mean() < min_survival:
        raise NumericalFailure(f"only {ok.mean():.1%} of samples survived branch tracking")
    fI = d.f_In
    x = dist_to_interval(z[ok], d.I_n) / In
    y = dist_to_interval(w[ok], fI) / (fI[1] - fI[0])
    order = np.lexsort((y, x))
    x, y = x[order], y[order]
    C1, C2 = envelope(x, y)
    return LinearGrowthFit(n, x, y, C1, C2, disc, int(z.size), int(ok.sum()))


# ---------------------------------------------------------------------------
# cubic estimate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CubicFit:
    n: int
    B: float
    radii_z: np.ndarray  # |z~|
    radii_w: np.ndarray  # |f~^p(z~)|
    c: float
    total: int
    retained: int
    outer: float


def fit_cubic(f: CriticalCircleMap, n: int, grid=GRID_DEFAULT, B: float = B_DEFAULT, D0: str = "D1",
              psi: PsiInverse | None = None) -> CubicFit:
    """Sample ``w~ = f~^p(z~)`` on a log-polar annulus ``B < |w~| < R`` and pull
    back to ``z~`` in the univalence domain; ``c = min |w~| / |z~|^3``.

    Coordinates are rescaled by ``1/|I_n|``.  ``R`` is the larger of the
    rescaled radius of ``D_0`` and ``4B``.
    """
    psi = psi or decompose(f, n)
    d = psi.data
    s = abs(d.xn)
    outer = max(_radius_about_zero(sampling_disc(d, D0)) / s, 4.0 * B)
    nr, na = grid
    r = np.geomspace(B, outer, nr + 1)[1:]
    half = max(na // 2, 1)
    a = (np.arange(half) + 0.5) * math.pi / half
    wt = (r[:, None] * np.exp(1j * a)[None, :]).ravel()
    W, ok, _ = psi.chain(wt * s, extra=True)
    zt = W[-1] / s
    keep = ok & (np.abs(wt) > B) & np.isfinite(zt)
    if not keep.any():
        raise NoAdmissibleSamples(f"no retained samples with |w| > {B}")
    rz, rw = np.abs(zt[keep]), np.abs(wt[keep])
    order = np.lexsort((rw, rz))
    rz, rw = rz[order], rw[order]
    c = float((rw / rz**3).min())
    return CubicFit(n, B, rz, rw, c, int(wt.size), int(keep.sum()), outer)


# ---------------------------------------------------------------------------
# saddle-node probe
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SaddleNodeReport:
    m: int
    count: int
    shift: int
    point: complex
    multiplier: complex
    residual: float


def _iterate_with_derivative(f, z: complex, count: int) -> tuple[complex, complex]:
    d = 1.0 + 0j
    for _ in range(count):
        d *= complex(f.derivative(z))
        z = complex(f(z))
    return z, d


def saddle_node_probe(f: CriticalCircleMap, m: int, which: str = "slow",
                      orbit: CriticalOrbit | None = None, max_iter: int = 200) -> SaddleNodeReport:
    """Fixed point of a return map near ``I_m`` and its multiplier.

    ``which="slow"`` uses ``f^{q_m} - p_m``, the map iterated ``r_m`` times to
    produce the return ``q_{m+1}``; it is close to a parabolic map when
    ``q_{m+1}/q_m`` is large.  ``which="return"`` uses ``f^{q_{m+1}} - p_{m+1}``.
    Newton is seeded at the midpoint of ``I_m`` and at ``+- i|I_m|/2`` from it.
    """
    if m < 0:
        raise DomainError("level must be nonnegative")
    if orbit is None or orbit.levels < m + 1:
        orbit = closest_returns(f, m + 1)
    _, _, x_m = orbit.level(m)
    if which == "slow":
        count, shift, _ = orbit.level(m)
    elif which == "return":
        count, shift, _ = orbit.level(m + 1)
    else:
        raise DomainError(f"unknown return map {which!r}")
    L = abs(x_m)
    mid = 0.5 * x_m
    best = None
    for seed in (mid, mid + 0.5j * L, mid - 0.5j * L):
        z = complex(seed)
        for _ in range(max_iter):
            w, dw = _iterate_with_derivative(f, z, count)
            g = w - shift - z
            if not (math.isfinite(g.real) and math.isfinite(g.imag)):
                break
            step = g / (dw - 1.0)
            if abs(step) > 0.25 * L:
                step *= 0.25 * L / abs(step)
            z -= step
            if abs(g) < 1e-14:
                break
        w, dw = _iterate_with_derivative(f, z, count)
        res = abs(w - shift - z)
        if not res < 1e-11:
            continue
        dist = float(dist_to_interval(z, (min(0.0, x_m), max(0.0, x_m)))[()])
        if best is None or dist < best[0]:
            best = (dist, z, dw, res)
    if best is None:
        raise NotConverged("Newton did not converge from any seed")
    _, z, dw, res = best
    return SaddleNodeReport(m, count, shift, z, dw, res)
