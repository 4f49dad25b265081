"""Exact rational intervals with outward-rounded transcendental enclosures.

All real quantities in this package that are not exactly rational (logs of
rationals, exp of rationals) are represented by a pair of rationals known to
bracket the true value.  Directed rounding comes from mpmath's libmp layer;
every transcendental call is additionally widened by a relative safety margin
of 2**-(prec-6) to absorb the (at most 1-2 ulp) rounding slack of libmp.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Union

from mpmath.libmp import from_int, mpf_div, mpf_exp, mpf_log

Rat = Union[int, Fraction]

DEFAULT_LOG_PREC = 128


def _mpf_to_fraction(t) -> Fraction:
    sign, man, exp, _bc = t
    m = int(man)
    if sign:
        m = -m
    if exp >= 0:
        return Fraction(m << exp) if m else Fraction(0)
    return Fraction(m, 1 << -exp)


def _widen(v: Fraction, prec: int, up: bool) -> Fraction:
    # relative margin; |v| scales the ulp for floating-point style results
    slack = (abs(v) + Fraction(1, 1 << prec)) / (1 << (prec - 6))
    return v + slack if up else v - slack


class RInt:
    """Closed interval [lo, hi] with exact rational endpoints."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo: Rat, hi: Rat | None = None):
        lo = Fraction(lo)
        hi = lo if hi is None else Fraction(hi)
        if lo > hi:
            raise ValueError(f"interval endpoints out of order: {lo} > {hi}")
        self.lo = lo
        self.hi = hi

    # -- basic geometry -------------------------------------------------

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, x: Rat) -> bool:
        return self.lo <= x <= self.hi

    def contains_interval(self, other: "RInt") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def intersects(self, other: "RInt") -> bool:
        return not (self.hi < other.lo or other.hi < self.lo)

    def hull(self, other: "RInt") -> "RInt":
        return RInt(min(self.lo, other.lo), max(self.hi, other.hi))

    # -- arithmetic ------------------------------------------------------

    def __neg__(self) -> "RInt":
        return RInt(-self.hi, -self.lo)

    def __add__(self, other) -> "RInt":
        if isinstance(other, RInt):
            return RInt(self.lo + other.lo, self.hi + other.hi)
        return RInt(self.lo + other, self.hi + other)

    __radd__ = __add__

    def __sub__(self, other) -> "RInt":
        return self + (-other if isinstance(other, RInt) else RInt(-Fraction(other)))

    def __rsub__(self, other) -> "RInt":
        return RInt(Fraction(other)) - self

    def __mul__(self, other) -> "RInt":
        if not isinstance(other, RInt):
            other = RInt(other)
        cands = (self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi)
        return RInt(min(cands), max(cands))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "RInt":
        if not isinstance(other, RInt):
            other = RInt(other)
        if other.lo <= 0 <= other.hi:
            raise ZeroDivisionError("interval division by an interval containing 0")
        return self * RInt(1 / other.hi, 1 / other.lo)

    def __repr__(self) -> str:
        return f"RInt({self.lo}, {self.hi})"

    def __eq__(self, other) -> bool:
        return isinstance(other, RInt) and self.lo == other.lo and self.hi == other.hi

    def __hash__(self) -> int:
        return hash((self.lo, self.hi))

    # -- decided comparisons ----------------------------------------------
    # Three-valued: True / False when the interval settles the question,
    # None when it straddles and a refinement is needed.

    def gt(self, x: Rat) -> bool | None:
        if self.lo > x:
            return True
        if self.hi <= x:
            return False
        return None

    def lt(self, x: Rat) -> bool | None:
        if self.hi < x:
            return True
        if self.lo >= x:
            return False
        return None

    def gt_interval(self, other: "RInt") -> bool | None:
        if self.lo > other.hi:
            return True
        if self.hi <= other.lo:
            return False
        return None

    def lt_interval(self, other: "RInt") -> bool | None:
        return other.gt_interval(self)


def log_int_enclosure(n: int, prec: int = DEFAULT_LOG_PREC) -> RInt:
    """Enclosure of ln(n) for a positive integer n."""
    if n <= 0:
        raise ValueError("log of non-positive integer")
    if n == 1:
        return RInt(0)
    x = from_int(n)
    lo = _widen(_mpf_to_fraction(mpf_log(x, prec, "f")), prec, up=False)
    hi = _widen(_mpf_to_fraction(mpf_log(x, prec, "c")), prec, up=True)
    return RInt(lo, hi)


def log_enclosure(x: Rat, prec: int = DEFAULT_LOG_PREC) -> RInt:
    """Enclosure of ln(x) for a positive rational x."""
    x = Fraction(x)
    if x <= 0:
        raise ValueError("log of non-positive rational")
    if x == 1:
        return RInt(0)
    return log_int_enclosure(x.numerator, prec) - log_int_enclosure(x.denominator, prec)


def log_rint(x: RInt, prec: int = DEFAULT_LOG_PREC) -> RInt:
    """Enclosure of ln over an interval with positive lower endpoint."""
    if x.lo <= 0:
        raise ValueError("log over an interval reaching 0")
    return RInt(log_enclosure(x.lo, prec).lo, log_enclosure(x.hi, prec).hi)


def exp_enclosure(t: Rat, prec: int = DEFAULT_LOG_PREC) -> RInt:
    """Enclosure of exp(t) for a rational t."""
    t = Fraction(t)
    if t == 0:
        return RInt(1)
    wp = prec + 10
    num, den = from_int(t.numerator), from_int(t.denominator)
    lo = mpf_exp(mpf_div(num, den, wp, "f"), prec, "f")
    hi = mpf_exp(mpf_div(num, den, wp, "c"), prec, "c")
    flo = _widen(_mpf_to_fraction(lo), prec, up=False)
    fhi = _widen(_mpf_to_fraction(hi), prec, up=True)
    return RInt(max(Fraction(0), flo), fhi)


def exp_rint(t: RInt, prec: int = DEFAULT_LOG_PREC) -> RInt:
    return RInt(exp_enclosure(t.lo, prec).lo, exp_enclosure(t.hi, prec).hi)


def ceil_of_exp(t: Rat, prec: int = DEFAULT_LOG_PREC, max_prec: int = 4096) -> int:
    """Exact ceil(exp(t)) for rational t > 0, refining until decided.

    exp of a nonzero rational is irrational, so the ceiling is decidable at
    some finite precision; the cap guards against pathological inputs.
    """
    t = Fraction(t)
    if t == 0:
        return 1
    from math import ceil

    while prec <= max_prec:
        enc = exp_enclosure(t, prec)
        clo, chi = ceil(enc.lo), ceil(enc.hi)
        if clo == chi:
            return clo
        prec *= 2
    from .errors import UndecidableAtCap

    raise UndecidableAtCap(f"ceil(exp({t})) undecided at {max_prec} bits")


# frequently used constant enclosures, cached at module import
E4: RInt = exp_enclosure(4)
E_MINUS4: RInt = exp_enclosure(-4)
E8: RInt = exp_enclosure(8)
E_MINUS8: RInt = exp_enclosure(-8)
LN2: RInt = log_enclosure(2)
