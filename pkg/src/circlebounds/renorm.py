"""Critical commuting pairs as iterate records over a parent circle map.

A pair stores, for each of its two maps, an iterate count and an integer
translation: ``eta = F^a - P_a`` and ``xi = F^b - P_b`` on the lift.  The
affine change of variables to normalized coordinates (``xi(0) = 1``) is
applied at evaluation time, so renormalization is exact integer
bookkeeping and only evaluation touches floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circlemap import CriticalCircleMap, CriticalOrbit, closest_returns, rotation_bracket, MIN_INTERVAL
from .errors import DomainError, DomainExhausted, LevelTooDeep
from .numbertheory import RotationNumber, continued_fraction


@dataclass(frozen=True)
class CommutingPair:
    f: CriticalCircleMap
    eta_count: int
    eta_shift: int
    xi_count: int
    xi_shift: int

    # physical value of xi(0); its modulus is |I_eta| and its sign the orientation
    @property
    def xi0_physical(self) -> float:
        return self.f.iterate(0.0, self.xi_count) - self.xi_shift

    @property
    def eta0_physical(self) -> float:
        return self.f.iterate(0.0, self.eta_count) - self.eta_shift

    @property
    def scale(self) -> float:
        """``lambda = 1/|I_eta|``."""
        return 1.0 / abs(self.xi0_physical)

    def _apply(self, u, count: int, shift: int):
        s = self._xi0
        if isinstance(u, float):
            return (self.f.iterate(u * s, count) - shift) / s
        x = np.asarray(u) * s
        return (self.f.iterate_array(x, count) - shift) / s

    @property
    def _xi0(self) -> float:
        # cached physical xi(0); frozen dataclass, so stash via object.__setattr__
        try:
            return self.__dict__["_xi0_cache"]
        except KeyError:
            v = self.xi0_physical
            object.__setattr__(self, "_xi0_cache", v)
            return v

    def eta(self, u):
        """Normalized ``eta`` (``I_eta = [0, 1]``); accepts real or complex arrays."""
        return self._apply(u, self.eta_count, self.eta_shift)

    def xi(self, u):
        """Normalized ``xi`` on ``I_xi = [eta(0), 0]``."""
        return self._apply(u, self.xi_count, self.xi_shift)

    @property
    def eta0(self) -> float:
        return self.eta(0.0)

    @property
    def xi0(self) -> float:
        return self.xi(0.0)

    def glued_lift(self, y: float) -> float:
        """Lift of ``f_zeta`` reflected so it advances points (rotation in (0,1))."""
        x = -y
        k = math.floor(x)
        u = x - k
        v = self.eta(float(u))
        val = self.xi(v) - 1.0 if v < 0.0 else v
        return -(val + k)

    def first_quotient(self, max_r: int = 100_000) -> int:
        """Number ``r`` of eta-steps with ``eta^r(xi(0)) > 0 >= eta^{r+1}(xi(0))``."""
        x = 1.0
        for r in range(max_r + 1):
            y = self.eta(x)
            if y <= 0.0:
                return r
            x = y
        raise DomainExhausted("eta orbit of xi(0) did not leave I_eta")

    def commutation_residual(self, n: int = 100) -> float:
        u = np.linspace(self.eta0, 1.0, n)
        return float(np.max(np.abs(self.eta(self.xi(u)) - self.xi(self.eta(u)))))


def pair_from_map(f: CriticalCircleMap, m: int, orbit: CriticalOrbit | None = None,
                  min_interval: float = MIN_INTERVAL) -> CommutingPair:
    """The pair ``(f^{q_{m+1}}|I_m, f^{q_m}|I_{m+1})``."""
    if m < 0:
        raise DomainError("level must be nonnegative")
    if orbit is None or orbit.levels < m + 1:
        orbit = closest_returns(f, m + 1, min_interval=min_interval)
    if orbit.levels < m + 1:
        raise LevelTooDeep(f"|I_{m + 1}| fell below {min_interval} before level {m + 1}")
    qa, pa, _ = orbit.level(m + 1)
    qb, pb, _ = orbit.level(m)
    return CommutingPair(f, qa, pa, qb, pb)


def renormalize(pair: CommutingPair) -> CommutingPair:
    """``R(eta, xi) = (eta^r o xi | I_xi, eta | [0, eta^r(xi(0))])``, rescaled."""
    r = pair.first_quotient()
    if r < 1:
        raise DomainExhausted("first quotient is zero: pair is not normalized")
    a = r * pair.eta_count + pair.xi_count
    pa = r * pair.eta_shift + pair.xi_shift
    return CommutingPair(pair.f, a, pa, pair.eta_count, pair.eta_shift)


def rotation_number_of_pair(pair: CommutingPair, budget: int = 20_000, tol: float = 1e-9) -> float:
    est, _, _ = rotation_bracket(pair.glued_lift, budget, tol)
    return est


def pair_rotation(pair: CommutingPair, depth: int = 6, budget: int = 20_000) -> RotationNumber:
    return continued_fraction(rotation_number_of_pair(pair, budget, tol=1e-12), depth)


@dataclass(frozen=True)
class EpsteinDescriptor:
    s: float
    J: tuple[float, float]
    J_tilde: tuple[float, float]

    @classmethod
    def from_intervals(cls, J, J_tilde) -> "EpsteinDescriptor":
        a, b = sorted(J)
        A, B = sorted(J_tilde)
        if A > a or B < b:
            raise DomainError("J_tilde must contain J")
        s = min(a - A, B - b) / (b - a)
        return cls(s, (a, b), (A, B))


def _margin(f: CriticalCircleMap, count: int, shift: int, domain_end: float) -> EpsteinDescriptor:
    # image interval J = F^count([0, domain_end]) - shift, near 0
    j0 = f.iterate(0.0, count) - shift
    j1 = f.iterate(domain_end, count) - shift
    a, b = min(j0, j1), max(j0, j1)
    # critical values of F^{count-1} on F(I): the points f^i(0), 1 <= i <= count-1
    pts = []
    y = 0.0
    for _ in range(1, count):
        y = f.lift(y)
        y -= math.floor(y)
        pts.append(y)
    pts = np.asarray(pts)
    # bring to representatives around the middle of J
    c = 0.5 * (a + b)
    reps = pts - np.round(pts - c)
    left = reps[reps <= a]
    right = reps[reps >= b]
    A = left.max() if left.size else (right.min() - 1.0 if right.size else a - 1.0 + (b - a))
    B = right.min() if right.size else (left.max() + 1.0 if left.size else b + 1.0 - (b - a))
    return EpsteinDescriptor.from_intervals((a, b), (A, B))


def epstein_check(pair: CommutingPair) -> EpsteinDescriptor:
    """Certified relative extension margin ``s`` of both maps of the pair.

    The inverse of the diffeomorphic factor ``F^{k-1}`` extends univalently
    over the component of the circle cut at the critical values
    ``f^i(0), 1 <= i < k``; ``s`` is the smaller relative margin of the two
    maps, measured in physical units.
    """
    x_xi = pair.xi0_physical
    x_eta = pair.eta0_physical
    d_eta = _margin(pair.f, pair.eta_count, pair.eta_shift, x_xi)
    d_xi = _margin(pair.f, pair.xi_count, pair.xi_shift, x_eta)
    return d_eta if d_eta.s <= d_xi.s else d_xi
