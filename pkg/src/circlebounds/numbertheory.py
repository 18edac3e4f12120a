"""Continued fractions, convergents and the Gauss map.

Convention: ``rho = [r_0, r_1, ...] = 1/(r_0 + 1/(r_1 + ...))`` with
convergents ``p_m/q_m = [r_0, ..., r_{m-1}]``, ``q_0 = 1``, ``q_{-1} = 0``,
``p_0 = 0``, ``p_{-1} = 1``.  Convergents are kept as Python ints but are
range-checked against a signed 64-bit word.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import DomainError, InsufficientDepth

QUOTIENT_GUARD = 10**6
INT64_MAX = 2**63 - 1

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def convergents(quotients: Sequence[int]) -> list[tuple[int, int]]:
    """Return ``[(p_0, q_0), ..., (p_d, q_d)]`` for quotients of length d."""
    p_prev, q_prev = 1, 0
    p, q = 0, 1
    out = [(p, q)]
    for r in quotients:
        p, p_prev = r * p + p_prev, p
        q, q_prev = r * q + q_prev, q
        if q > INT64_MAX or p > INT64_MAX:
            raise OverflowError("convergent exceeds 64-bit range")
        out.append((p, q))
    return out


def evaluate(quotients: Sequence[int]) -> Fraction:
    """Exact value of the finite continued fraction ``[r_0, ..., r_{d-1}]``."""
    x = Fraction(0)
    for r in reversed(quotients):
        x = 1 / (r + x)
    return x


@dataclass(frozen=True)
class RotationNumber:
    value: float
    quotients: tuple[int, ...]
    convergents: tuple[tuple[int, int], ...] = field(repr=False)
    numerically_rational: bool = False

    @classmethod
    def from_quotients(cls, quotients: Sequence[int], tail: str = "golden") -> "RotationNumber":
        """Build from a quotient prefix followed by an infinite tail.

        ``tail="golden"`` appends ``[1, 1, 1, ...]``; ``tail="none"`` treats the
        prefix as the whole (rational) expansion.
        """
        qs = tuple(int(r) for r in quotients)
        if not qs or min(qs) < 1:
            raise DomainError("quotients must be positive integers")
        if tail == "golden":
            x = GOLDEN
        elif tail == "none":
            x = 0.0
        else:
            raise DomainError(f"unknown tail {tail!r}")
        for r in reversed(qs):
            x = 1.0 / (r + x)
        return cls(x, qs, tuple(convergents(qs)))

    @property
    def q(self) -> list[int]:
        return [q for _, q in self.convergents]

    @property
    def p(self) -> list[int]:
        return [p for p, _ in self.convergents]

    @property
    def depth(self) -> int:
        return len(self.quotients)


def continued_fraction(x: float, depth: int) -> RotationNumber:
    """Expand ``x`` in (0, 1) to at most ``depth`` partial quotients.

    The expansion runs in exact rational arithmetic on the binary value of
    ``x``.  It stops early, flagging ``numerically_rational``, when the
    remainder vanishes or a quotient would exceed ``QUOTIENT_GUARD``.
    """
    if not (0.0 < x < 1.0) or not math.isfinite(x):
        raise DomainError(f"x must lie in (0, 1), got {x!r}")
    if depth < 1:
        raise DomainError("depth must be at least 1")
    rem = Fraction(x)
    quotients: list[int] = []
    rational = False
    while len(quotients) < depth:
        if rem == 0:
            rational = True
            break
        inv = 1 / rem
        r = math.floor(inv)
        if r > QUOTIENT_GUARD:
            rational = True
            break
        quotients.append(r)
        rem = inv - r
    return RotationNumber(float(x), tuple(quotients), tuple(convergents(quotients)), rational)


def gauss_map(rho: RotationNumber) -> RotationNumber:
    """Shift the expansion by one: ``x -> frac(1/x)``."""
    if len(rho.quotients) < 2:
        raise InsufficientDepth("gauss_map needs at least two stored quotients")
    tail = rho.quotients[1:]
    value = 1.0 / rho.value - rho.quotients[0]
    return RotationNumber(value, tail, tuple(convergents(tail)), rho.numerically_rational)


def is_bounded_type(rho: RotationNumber, bound: int) -> bool:
    """True iff every *stored* quotient is at most ``bound``.

    This says nothing about the quotients past the truncation.
    """
    if not rho.quotients:
        raise DomainError("no stored quotients")
    return max(rho.quotients) <= bound


def parse_rotation(spec: str | float, depth: int = 40) -> RotationNumber:
    """Parse a CLI-style rotation number.

    Accepts ``golden``, a bracketed quotient prefix such as ``[2,1,1]``
    (continued with a golden tail), ``periodic:1,2`` for ``[1,2,1,2,...]``,
    or a decimal in (0, 1).
    """
    if isinstance(spec, (int, float)):
        return continued_fraction(float(spec), depth)
    s = spec.strip().lower()
    if s == "golden":
        return RotationNumber.from_quotients([1] * depth)
    if s.startswith("periodic:"):
        block = [int(t) for t in s[len("periodic:"):].split(",") if t]
        if not block:
            raise DomainError("empty periodic block")
        qs = (block * (depth // len(block) + 1))[:depth]
        # exact value of the purely periodic expansion solves a quadratic
        return _periodic(block, qs)
    if s.startswith("["):
        body = s.strip("[]")
        qs = [int(t) for t in body.split(",") if t.strip()]
        return RotationNumber.from_quotients(qs)
    try:
        x = float(s)
    except ValueError as exc:
        raise DomainError(f"cannot parse rotation number {spec!r}") from exc
    return continued_fraction(x, depth)


def _periodic(block: Sequence[int], qs: Sequence[int]) -> RotationNumber:
    # fixed point of x -> [block..., x] by iteration; contraction is strong
    x = GOLDEN
    for _ in range(200):
        y = x
        for r in reversed(block):
            y = 1.0 / (r + y)
        if abs(y - x) < 1e-17:
            x = y
            break
        x = y
    return RotationNumber(x, tuple(qs), tuple(convergents(qs)))
