"""Digit/value laws with exact, truncation-free sampling.

Each law is sampled by inverse CDF on a lazily refined uniform: a draw starts
from one 64-bit word and extends only while the class decision is still open.
Cumulative masses are held as two-sided dyadic enclosures, so no tail is ever
cut off; draws landing beyond any feasible table are served by an exact
rejection sampler driven by the law's integral tail brackets.

Determinism: decisions follow a fixed refinement ladder depending only on the
law parameters and the random words consumed, never on shared cache state, so
identical seeds replay identically at any parallelism level.  Batch sampling
consumes one word per draw up front plus extra words for the (rare) draws the
fast tier cannot settle, resolved in ascending index order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional

import numpy as np

from .errors import CfLabError, DigitTooLarge, UndecidableAtCap
from .rint import LN2, RInt, log_int_enclosure

SCALE_BITS = 192
_SCALE = 1 << SCALE_BITS
TABLE_SIZE = 1 << 15
TABLE_MAX = 1 << 20
DIGIT_BIT_CAP = 1 << 22
_U_BIT_CAP = 4096
_REJECT_CAP = 100_000


def int_nthroot(x: int, k: int) -> int:
    """floor(x ** (1/k)) for x >= 0, exact."""
    if x < 0 or k < 1:
        raise ValueError("int_nthroot needs x >= 0, k >= 1")
    if x < 2 or k == 1:
        return x
    r = 1 << -(-x.bit_length() // k)
    while True:
        nr = ((k - 1) * r + x // r ** (k - 1)) // k
        if nr >= r:
            return r
        r = nr


def pow_frac_enclosure(n: int, e: Fraction, bits: int = 96) -> RInt:
    """Enclosure of n**e for integer n >= 1 and rational e > 0."""
    if n < 1 or e <= 0:
        raise ValueError("pow_frac_enclosure needs n >= 1, e > 0")
    p, q = e.numerator, e.denominator
    if q == 1:
        return RInt(n ** p)
    r = int_nthroot(n ** p << (q * bits), q)
    return RInt(Fraction(r, 1 << bits), Fraction(r + 2, 1 << bits))


def inv_pow_enclosure(n: int, e: Fraction, bits: int = 96) -> RInt:
    """Enclosure of n**(-e) for rational e > 0."""
    enc = pow_frac_enclosure(n, e, bits)
    return RInt(Fraction(1) / enc.hi, Fraction(1) / enc.lo)


def inv_pow_frac_enclosure(x: Fraction, e: Fraction, bits: int = 96) -> RInt:
    """Enclosure of x**(-e) for rational x > 0 and rational e > 0."""
    num = pow_frac_enclosure(x.denominator, e, bits)
    den = pow_frac_enclosure(x.numerator, e, bits)
    return RInt(num.lo / den.hi, num.hi / den.lo)


def ln_enclosure_wide(n: int) -> RInt:
    """Cheap enclosure of ln(n) from libm, widened by 16 ulps.

    Assumes the platform log is within a couple ulps of correctly rounded
    (true for every mainstream libm); used only where tolerances are far
    coarser than 1e-12.
    """
    if n < 1:
        raise ValueError("ln of non-positive")
    if n == 1:
        return RInt(0)
    if n.bit_length() > 900:
        return log_int_enclosure(n, prec=96)
    v = math.log(n)
    lo, hi = v, v
    for _ in range(16):
        lo = math.nextafter(lo, -math.inf)
        hi = math.nextafter(hi, math.inf)
    return RInt(Fraction(lo), Fraction(hi))


def ln_big_enclosure(n: int, head_bits: int = 96, prec: int = 128) -> RInt:
    """Enclosure of ln(n) for arbitrarily large n via its leading bits."""
    L = n.bit_length()
    if L <= head_bits:
        return log_int_enclosure(n, prec)
    shift = L - head_bits
    h = n >> shift
    lo = log_int_enclosure(h, prec).lo + (LN2 * shift).lo
    hi = log_int_enclosure(h + 1, prec).hi + (LN2 * shift).hi
    return RInt(lo, hi)


def ln_ratio_enclosure(n: int) -> RInt:
    """Enclosure of ln(n/(n-1)) for n >= 2 via t - t^2/2 <= ln(1+t) <= t."""
    t = Fraction(1, n - 1)
    return RInt(t - t * t / 2, t)


class UDraw:
    """A uniform variate in [0,1) revealed word-by-word:
    u is in [m/2^b, (m+1)/2^b)."""

    __slots__ = ("m", "b", "_rng")

    def __init__(self, rng, first_word: int | None = None):
        self._rng = rng
        self.m = (
            int(rng.integers(0, 1 << 64, dtype=np.uint64))
            if first_word is None
            else int(first_word)
        )
        self.b = 64

    def extend(self) -> None:
        if self.b >= _U_BIT_CAP:
            raise UndecidableAtCap(f"uniform refined past {_U_BIT_CAP} bits without deciding")
        w = int(self._rng.integers(0, 1 << 64, dtype=np.uint64))
        self.m = (self.m << 64) | w
        self.b += 64

    def interval(self) -> tuple[Fraction, Fraction]:
        return Fraction(self.m, 1 << self.b), Fraction(self.m + 1, 1 << self.b)

    @property
    def width(self) -> Fraction:
        return Fraction(1, 1 << self.b)

    def cmp_fraction(self, c: Fraction) -> bool | None:
        """Is u < c?  None while the current window straddles c."""
        lo, hi = self.interval()
        if hi <= c:
            return True
        if lo >= c:
            return False
        return None

    def less_than(self, c: Fraction) -> bool:
        while True:
            r = self.cmp_fraction(c)
            if r is not None:
                return r
            self.extend()

    def bernoulli(self, p_enclosure: Callable[[int], RInt]) -> bool:
        """Exact coin with success probability given by a refinable enclosure
        (argument = precision generation)."""
        gen = 0
        while True:
            p = p_enclosure(gen)
            lo, hi = self.interval()
            if hi <= p.lo:
                return True
            if lo >= p.hi:
                return False
            if self.width > p.width:
                self.extend()
            else:
                gen += 1
                if gen > 64:
                    raise UndecidableAtCap("bernoulli coin undecided after 64 refinements")


def _build_edges(lowers: list[Fraction], uppers: list[Fraction]) -> np.ndarray:
    """Interleaved certain-class boundaries for the vectorized fast tier.

    A word w settles class k iff lo64[k] <= w <= hi64[k]; searchsorted
    (side='left') then lands on an odd position exactly for settled words.
    Words on or between range boundaries fall through to the exact path.
    """
    two64 = 1 << 64
    n = len(lowers)
    lo64 = np.empty(n, dtype=np.uint64)
    hi64 = np.empty(n, dtype=np.uint64)
    prev_hi = 0
    for k in range(n):
        lo = math.floor(lowers[k] * two64) + 1
        hi = math.floor(uppers[k] * two64) - 1
        lo = max(lo, prev_hi + 1)
        hi = min(hi, two64 - 1)
        if hi < lo:
            # empty certain-range: a duplicate of the previous boundary keeps
            # the edge array sorted and catches nothing new
            lo = hi = prev_hi
        lo64[k] = lo
        hi64[k] = hi
        prev_hi = max(prev_hi, hi)
    edges = np.empty(2 * n, dtype=np.uint64)
    edges[0::2] = lo64
    edges[1::2] = hi64
    return edges


def _vector_sample(
    edges: np.ndarray,
    vals64: np.ndarray,
    exact_cb: Callable[[object, int], int],
    rng,
    size: int,
) -> list[int]:
    words = rng.integers(0, 1 << 64, size=size, dtype=np.uint64)
    idx = np.searchsorted(edges, words, side="left")
    certain = (idx & 1).astype(bool)
    out_np = np.zeros(size, dtype=np.int64)
    k = np.minimum(idx >> 1, len(vals64) - 1)
    out_np[certain] = vals64[k[certain]]
    out: list[int] = out_np.tolist()
    for i in np.nonzero(~certain)[0]:
        out[int(i)] = exact_cb(rng, int(words[int(i)]))
    return out


@dataclass(frozen=True)
class LawTraits:
    mean_finite: Optional[bool]
    log_mean_finite: Optional[bool]


class DigitLaw:
    """Law on positive integers with exact sampling and enclosure queries."""

    traits: LawTraits
    support_min: int = 1

    def mass(self, n: int) -> RInt:
        raise NotImplementedError

    def tail_mass(self, n: int) -> RInt:
        """Enclosure of P(X > n)."""
        raise NotImplementedError

    def interval_mass_below(self, t: RInt) -> RInt:
        """Enclosure of mu((0,t)) for the iid coding measure: x < t is decided
        by the first digit up to the cylinder straddling t."""
        if t.hi <= 0:
            return RInt(0)
        if t.lo >= 1:
            return RInt(1)
        if t.lo > 0:
            k_full = math.ceil(Fraction(1) / t.lo)  # [k] inside (0,t) iff k >= 1/t
            lo = self.tail_mass(k_full - 1).lo
        else:
            lo = Fraction(0)
        inv = Fraction(1) / t.hi
        k_meet = int(inv) if inv.denominator == 1 else math.floor(inv)
        hi = self.tail_mass(max(k_meet - 1, 0)).hi
        lo = max(Fraction(0), min(lo, Fraction(1)))
        hi = max(lo, min(hi, Fraction(1)))
        return RInt(lo, hi)

    def sample_one(self, rng) -> int:
        raise NotImplementedError

    def sample_batch(self, rng, size: int) -> list[int]:
        return [self.sample_one(rng) for _ in range(size)]

    def sample_log_batch(self, rng, size: int) -> np.ndarray:
        """Natural logs of a batch of draws."""
        vals = self.sample_batch(rng, size)
        out = np.empty(size, dtype=np.float64)
        for i, v in enumerate(vals):
            out[i] = math.log(v) if v > 1 else 0.0
        return out


# --------------------------------------------------------------------------
# exact rational tables


class TablePmf(DigitLaw):
    def __init__(self, masses: dict[int, Fraction]):
        items = sorted((int(k), Fraction(v)) for k, v in masses.items())
        if not items:
            raise ValueError("empty pmf table")
        if any(k < 1 or v <= 0 for k, v in items):
            raise ValueError("table pmf needs values >= 1 and positive masses")
        if sum(v for _, v in items) != 1:
            raise ValueError("table pmf masses must sum to 1 exactly")
        self.values = [k for k, _ in items]
        self.masses = [v for _, v in items]
        self.cum: list[Fraction] = []
        acc = Fraction(0)
        for v in self.masses:
            acc += v
            self.cum.append(acc)
        self.support_min = self.values[0]
        self.traits = LawTraits(mean_finite=True, log_mean_finite=True)
        self._edges = None
        self._vals64 = None

    def mass(self, n: int) -> RInt:
        try:
            return RInt(self.masses[self.values.index(n)])
        except ValueError:
            return RInt(0)

    def tail_mass(self, n: int) -> RInt:
        t = sum((m for v, m in zip(self.values, self.masses) if v > n), Fraction(0))
        return RInt(t)

    def _exact_draw(self, rng, first_word: int | None = None) -> int:
        u = UDraw(rng, first_word=first_word)
        lo, hi = 0, len(self.values) - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if u.less_than(self.cum[mid]):
                hi = mid
            else:
                lo = mid + 1
        return self.values[lo]

    def sample_one(self, rng) -> int:
        return self._exact_draw(rng)

    def sample_batch(self, rng, size: int) -> list[int]:
        if self._edges is None:
            lowers = [Fraction(0)] + self.cum[:-1]
            self._edges = _build_edges(lowers, self.cum)
            self._vals64 = np.array(self.values, dtype=np.int64)
        return _vector_sample(self._edges, self._vals64, self._exact_draw, rng, size)


def uniform_table(values: Iterable[int]) -> TablePmf:
    vals = list(values)
    return TablePmf({v: Fraction(1, len(vals)) for v in vals})


# --------------------------------------------------------------------------
# dyadic-exponent laws, exact by leading-zero runs


class Pow2GeometricLaw(DigitLaw):
    """P(X = 2^k) = 2^-k for k >= 1; infinite mean, finite log-mean."""

    support_min = 2
    traits = LawTraits(mean_finite=False, log_mean_finite=True)

    def _sample_k(self, rng) -> int:
        base = 0
        while True:
            w = int(rng.integers(0, 1 << 64, dtype=np.uint64))
            if w:
                return base + (65 - w.bit_length())
            base += 64

    def sample_k_batch(self, rng, size: int) -> np.ndarray:
        words = rng.integers(0, 1 << 64, size=size, dtype=np.uint64)
        # exact bit length of the top 53 bits via frexp (values < 2^53 are
        # exactly representable, so the exponent is exact)
        hi53 = (words >> np.uint64(11)).astype(np.float64)
        _, exp = np.frexp(hi53)
        ks = 54 - exp  # = 65 - (bitlength(hi53) + 11)
        small = hi53 == 0.0
        if small.any():
            out = ks.astype(np.int64)
            for i in np.nonzero(small)[0]:
                w = int(words[int(i)])
                out[int(i)] = 65 - w.bit_length() if w else 64 + self._sample_k(rng)
            return out
        return ks.astype(np.int64)

    def sample_one(self, rng) -> int:
        return 1 << self._sample_k(rng)

    def sample_batch(self, rng, size: int) -> list[int]:
        return [1 << int(k) for k in self.sample_k_batch(rng, size)]

    def sample_log_batch(self, rng, size: int) -> np.ndarray:
        return self.sample_k_batch(rng, size).astype(np.float64) * math.log(2)

    def mass(self, n: int) -> RInt:
        k = n.bit_length() - 1
        return RInt(Fraction(1, 1 << k)) if n == 1 << k and k >= 1 else RInt(0)

    def tail_mass(self, n: int) -> RInt:
        if n < 2:
            return RInt(1)
        k = n.bit_length() - 1  # largest k with 2^k <= n
        return RInt(Fraction(1, 1 << k))


class DoubleExponentialLaw(Pow2GeometricLaw):
    """P(X = 2^(2^k)) = 2^-k for k >= 1; infinite mean and infinite log-mean."""

    support_min = 4
    traits = LawTraits(mean_finite=False, log_mean_finite=False)

    def sample_one(self, rng) -> int:
        k = self._sample_k(rng)
        if (1 << k) > DIGIT_BIT_CAP:
            raise DigitTooLarge(f"2^(2^{k}) exceeds the materialization cap")
        return 1 << (1 << k)

    def sample_batch(self, rng, size: int) -> list[int]:
        return [1 << (1 << int(k)) for k in self.sample_k_batch(rng, size)]

    def sample_log_batch(self, rng, size: int) -> np.ndarray:
        ks = self.sample_k_batch(rng, size).astype(np.float64)
        return np.exp2(ks) * math.log(2)

    def mass(self, n: int) -> RInt:
        e = n.bit_length() - 1
        if n != 1 << e:
            return RInt(0)
        k = e.bit_length() - 1
        return RInt(Fraction(1, 1 << k)) if e == 1 << k and k >= 1 else RInt(0)

    def tail_mass(self, n: int) -> RInt:
        if n < 4:
            return RInt(1)
        e = n.bit_length() - 1
        k = e.bit_length() - 1  # largest k with 2^(2^k) <= n
        return RInt(Fraction(1, 1 << k))


# --------------------------------------------------------------------------
# enclosure-table laws (power and log-squared families)


class _EnclosureLaw(DigitLaw):
    """Shared machinery: unnormalized dyadic cumulative table, integral tail
    brackets, deterministic refinement ladder, exact far-tail rejection."""

    table_cap = TABLE_MAX

    def __init__(self):
        self._cum_lo = [0]
        self._cum_hi = [0]
        self._edges = None
        self._vals64 = None

    # subclass hooks -------------------------------------------------------

    def _support(self, i: int) -> int:
        """i-th support value (0-indexed, strictly increasing)."""
        raise NotImplementedError

    def _count_upto(self, n: int) -> int:
        """Number of support points <= n."""
        raise NotImplementedError

    def _term(self, i: int) -> tuple[int, int]:
        """floor/ceil of 2^SCALE_BITS times the unnormalized i-th mass."""
        raise NotImplementedError

    def _tail_unnorm(self, i: int) -> RInt:
        """Unnormalized mass beyond the first i support points."""
        raise NotImplementedError

    def _far_tail_draw(self, rng, boundary_index: int) -> int:
        raise NotImplementedError

    # table ------------------------------------------------------------------

    def _extend(self, count: int) -> None:
        while len(self._cum_lo) - 1 < count:
            i = len(self._cum_lo) - 1
            tlo, thi = self._term(i)
            self._cum_lo.append(self._cum_lo[-1] + tlo)
            self._cum_hi.append(self._cum_hi[-1] + thi)

    def _z_interval(self, m: int) -> tuple[Fraction, Fraction]:
        self._extend(m)
        tail = self._tail_unnorm(m)
        return (
            Fraction(self._cum_lo[m], _SCALE) + tail.lo,
            Fraction(self._cum_hi[m], _SCALE) + tail.hi,
        )

    # queries ------------------------------------------------------------------

    def mass(self, n: int) -> RInt:
        i = self._count_upto(n) - 1
        if i < 0 or self._support(i) != n:
            return RInt(0)
        tlo, thi = self._term(i)
        zlo, zhi = self._z_interval(min(max(i + 1, 256), TABLE_SIZE))
        return RInt(max(Fraction(0), Fraction(tlo, _SCALE) / zhi), Fraction(thi, _SCALE) / zlo)

    def tail_mass(self, n: int) -> RInt:
        m = self._count_upto(n)
        zlo, zhi = self._z_interval(min(max(m, 256), TABLE_SIZE))
        t = self._tail_unnorm(m)
        return RInt(max(Fraction(0), t.lo / zhi), min(Fraction(1), t.hi / zlo))

    # sampling -----------------------------------------------------------------

    def sample_one(self, rng) -> int:
        return self._exact_draw(rng)

    def _exact_draw(self, rng, first_word: int | None = None) -> int:
        u = UDraw(rng, first_word=first_word)
        m = TABLE_SIZE
        while True:
            zlo, zhi = self._z_interval(m)
            pos = self._locate(u, zlo, zhi, m)
            if pos == "beyond":
                if m < self.table_cap:
                    m *= 2
                    continue
                return self._far_tail_draw(rng, m)
            if pos is not None:
                return self._support(pos)
            # straddling: refine whichever side is coarser
            rel_slack = (zhi - zlo) / zlo
            if u.width > 4 * rel_slack or m >= self.table_cap:
                u.extend()
            else:
                m = min(2 * m, self.table_cap)

    def _locate(self, u: UDraw, zlo: Fraction, zhi: Fraction, m: int) -> int | str | None:
        """Leftmost class i with u*Z <= cum_{i+1} surely, or 'beyond'/None."""
        ulo, uhi = u.interval()
        tlo, thi = ulo * zlo, uhi * zhi
        if tlo > Fraction(self._cum_hi[m], _SCALE):
            return "beyond"
        if not thi <= Fraction(self._cum_lo[m], _SCALE):
            return None
        lo, hi = 0, m - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if thi <= Fraction(self._cum_lo[mid + 1], _SCALE):
                hi = mid
            elif tlo > Fraction(self._cum_hi[mid + 1], _SCALE):
                lo = mid + 1
            else:
                return None
        if lo > 0 and not tlo > Fraction(self._cum_hi[lo], _SCALE):
            return None
        return lo

    def sample_batch(self, rng, size: int) -> list[int]:
        if self._edges is None:
            self._extend(TABLE_SIZE)
            zlo, zhi = self._z_interval(TABLE_SIZE)
            lowers = [Fraction(self._cum_hi[k], _SCALE) / zlo for k in range(TABLE_SIZE)]
            uppers = [Fraction(self._cum_lo[k + 1], _SCALE) / zhi for k in range(TABLE_SIZE)]
            self._edges = _build_edges(lowers, uppers)
            self._vals64 = np.array(
                [self._support(i) for i in range(TABLE_SIZE)], dtype=np.int64
            )
        return _vector_sample(self._edges, self._vals64, self._exact_draw, rng, size)


def _scaled_inv_pow(n: int, s: Fraction) -> tuple[int, int]:
    """floor/ceil-style bracket of 2^SCALE_BITS * n^(-s)."""
    p, q = s.numerator, s.denominator
    if q == 1:
        d = n ** p
        lo = _SCALE // d
        return lo, lo + (1 if _SCALE % d else 0)
    r = int_nthroot(n ** p << (q * 64), q)  # bracket of n^s * 2^64
    lo = (_SCALE << 64) // (r + 2)
    hi = (_SCALE << 64) // r + 1
    return lo, hi


class PowerLaw(_EnclosureLaw):
    """Unnormalized masses n^-s on n >= n_min, rational s > 1."""

    def __init__(self, s, n_min: int = 1):
        super().__init__()
        s = Fraction(s)
        if s <= 1:
            raise ValueError("power law needs s > 1 for summability")
        if n_min < 1:
            raise ValueError("n_min must be >= 1")
        self.s = s
        self.n_min = n_min
        self.support_min = n_min
        self.traits = LawTraits(mean_finite=bool(s > 2), log_mean_finite=True)

    def _support(self, i: int) -> int:
        return self.n_min + i

    def _count_upto(self, n: int) -> int:
        return max(0, n - self.n_min + 1)

    def _term(self, i: int) -> tuple[int, int]:
        return _scaled_inv_pow(self.n_min + i, self.s)

    def _tail_unnorm(self, i: int) -> RInt:
        # x^-s is convex decreasing, so the trapezoid rule bounds the tail
        # from below and the midpoint rule from above:
        #   F(m+1) + f(m+1)/2  <=  sum_{j>m} f(j)  <=  F(m+1/2)
        # with F(x) = x^(1-s)/(s-1); the bracket width is O(f(m)/m^2)
        m = max(self.n_min + i - 1, 0)
        e = self.s - 1
        lo = inv_pow_enclosure(m + 1, e).lo / e + inv_pow_enclosure(m + 1, self.s).lo / 2
        hi = inv_pow_frac_enclosure(Fraction(2 * m + 1, 2), e).hi / e
        return RInt(min(lo, hi), hi)

    # exact far tail -----------------------------------------------------------

    def _far_tail_draw(self, rng, boundary_index: int) -> int:
        """Rejection on n >= B: propose from the telescoped integral tail,
        accept with probability e*n^-s / ((n-1)^-e - n^-e) <= 1, e = s-1."""
        B = self._support(boundary_index)
        e = self.s - 1
        p = e.numerator
        q = e.denominator
        base = (B - 1) ** p  # (B-1)^(e*q)
        for _ in range(_REJECT_CAP):
            w = UDraw(rng)
            n = self._invert_tail(w, base, p, q, B)
            if n.bit_length() > DIGIT_BIT_CAP:
                raise DigitTooLarge("far-tail power draw exceeds the bit cap")
            coin = UDraw(rng)
            if coin.bernoulli(lambda gen, n=n: self._accept_prob(n, gen)):
                return n
        raise UndecidableAtCap("power-law far tail rejected too many proposals")

    def _invert_tail(self, w: UDraw, base: int, p: int, q: int, B: int) -> int:
        """min { n >= B : W^q * n^p >= (B-1)^p } with W = 1 - V uniform."""

        def cmp_n(n: int) -> bool | None:
            c = Fraction(base, n ** p)
            ulo, uhi = w.interval()
            wlo, whi = 1 - uhi, 1 - ulo
            if wlo < 0:
                wlo = Fraction(0)
            if (wlo ** q) >= c:
                return True
            if (whi ** q) < c:
                return False
            return None

        def decided(n: int) -> bool:
            while True:
                r = cmp_n(n)
                if r is not None:
                    return r
                w.extend()

        hi = B
        while not decided(hi):
            hi *= 2
            if hi.bit_length() > DIGIT_BIT_CAP:
                raise DigitTooLarge("far-tail power search exceeded the bit cap")
        lo = max(B, hi // 2)
        while lo < hi:
            mid = (lo + hi) // 2
            if decided(mid):
                hi = mid
            else:
                lo = mid + 1
        return lo

    def _accept_prob(self, n: int, gen: int) -> RInt:
        bits = 96 << min(gen, 5)
        e = self.s - 1
        ns = pow_frac_enclosure(n, self.s, bits)
        a = inv_pow_enclosure(n - 1, e, bits)
        b = inv_pow_enclosure(n, e, bits)
        g_lo, g_hi = a.lo - b.hi, a.hi - b.lo
        if g_lo <= 0:
            # not yet separated; report a full-width coin so the caller refines
            return RInt(0, 1)
        lo = e / (ns.hi * g_hi)
        hi = e / (ns.lo * g_lo)
        return RInt(max(Fraction(0), min(lo, 1)), max(Fraction(0), min(hi, 1)))


class LogSquaredLaw(_EnclosureLaw):
    """Unnormalized masses 1/(n ln^2 n) on n >= n_min >= 2.

    The canonical infinite-log-mean family: summable, but E[ln X] diverges,
    so iid digit streams drawn from it are Liouville-typical.
    """

    table_cap = TABLE_SIZE  # the tail decays too slowly for bigger tables to help

    def __init__(self, n_min: int = 2):
        super().__init__()
        if n_min < 2:
            raise ValueError("log-squared law needs n_min >= 2")
        self.n_min = n_min
        self.support_min = n_min
        self.traits = LawTraits(mean_finite=False, log_mean_finite=False)
        self._bitlength_law: Optional["PowerLaw"] = None
        self._bitlength_L0 = 0

    def _support(self, i: int) -> int:
        return self.n_min + i

    def _count_upto(self, n: int) -> int:
        return max(0, n - self.n_min + 1)

    def _term(self, i: int) -> tuple[int, int]:
        n = self.n_min + i
        ln = ln_enclosure_wide(n)
        lo = Fraction(_SCALE) / (n * ln.hi * ln.hi)
        hi = Fraction(_SCALE) / (n * ln.lo * ln.lo)
        return math.floor(lo), math.ceil(hi)

    def _tail_unnorm(self, i: int) -> RInt:
        # 1/(x ln^2 x) is convex decreasing on [3/2, inf), so
        #   F(m+1) + f(m+1)/2  <=  sum_{j>m} f(j)  <=  F(m+1/2)
        # with F(x) = 1/ln(x); the bracket width is O(f(m)/m^2)
        m = max(self.n_min + i - 1, 1)
        ln_next = ln_enclosure_wide(m + 1)
        lo = Fraction(1) / ln_next.hi + Fraction(1, 2 * (m + 1)) / (ln_next.hi * ln_next.hi)
        # ln(m + 1/2) = ln(2m+1) - ln(2)
        ln_mid_lo = ln_enclosure_wide(2 * m + 1).lo - LN2.hi
        hi = Fraction(1) / ln_mid_lo
        return RInt(min(lo, hi), hi)

    def _far_tail_draw(self, rng, boundary_index: int) -> int:
        """Exact rejection beyond the table via a bit-length-first proposal.

        Propose the bit length L with masses proportional to 1/L^2 (this
        matches the true binade masses of the 1/ln tail up to a bounded
        factor), then a uniform integer in the binade; accept with
        probability f(n) * L^2 * 2^(L-1) / C.  Every quantity needs only
        relative precision, so proposals with millions of bits stay cheap.
        """
        B = self._support(boundary_index)
        L0 = B.bit_length()
        if self._bitlength_law is None or self._bitlength_L0 != L0:
            self._bitlength_law = PowerLaw(Fraction(2), n_min=L0)
            self._bitlength_L0 = L0
        # C >= sup f(n) L^2 2^(L-1) over n >= 2^(L0-1), from
        # f(n) <= 2^-(L-1) / ((L-1)^2 ln^2 2)
        C = Fraction(L0, L0 - 1) ** 2 / (LN2.lo * LN2.lo)
        for _ in range(_REJECT_CAP):
            L = self._bitlength_law.sample_one(rng)
            if L > DIGIT_BIT_CAP:
                raise DigitTooLarge("far-tail log-squared draw exceeds the bit cap")
            n = self._uniform_in_binade(rng, L)
            if n < B:
                continue
            coin = UDraw(rng)
            scale = Fraction(L * L * (1 << (L - 1)), 1) / C
            if coin.bernoulli(lambda gen, n=n, scale=scale: self._accept_prob(n, scale, gen)):
                return n
        raise UndecidableAtCap("log-squared far tail rejected too many proposals")

    @staticmethod
    def _uniform_in_binade(rng, L: int) -> int:
        bits = L - 1
        words = (bits + 63) // 64
        val = 0
        for _ in range(words):
            val = (val << 64) | int(rng.integers(0, 1 << 64, dtype=np.uint64))
        val &= (1 << bits) - 1
        return (1 << bits) | val

    def _accept_prob(self, n: int, scale: Fraction, gen: int) -> RInt:
        # alpha(n) = scale / (n ln^2 n), needing only relative precision
        ln_n = ln_big_enclosure(n, head_bits=96 << min(gen, 3), prec=128 << min(gen, 3))
        lo = scale / (n * ln_n.hi * ln_n.hi)
        hi = scale / (n * ln_n.lo * ln_n.lo)
        return RInt(max(Fraction(0), min(lo, 1)), max(Fraction(0), min(hi, 1)))


# --------------------------------------------------------------------------
# restricted digit sets


class RestrictedLaw(_EnclosureLaw):
    """A power-type law restricted to a digit set K.

    K is given by a membership predicate plus an increasing enumeration and
    must be infinite unless the explicit override flag is set.  The far tail
    proposes from the unrestricted law and keeps members only.
    """

    def __init__(
        self,
        base: PowerLaw,
        member: Callable[[int], bool],
        enumerate_k: Callable[[int], int],
        allow_finite: bool = False,
        finite_size: int | None = None,
    ):
        super().__init__()
        if finite_size is not None and not allow_finite:
            raise ValueError("finite digit sets need the explicit override flag")
        self.base = base
        self.member = member
        self.enumerate_k = enumerate_k
        self.finite_size = finite_size
        first = enumerate_k(0)
        if not member(first):
            raise ValueError("enumeration and membership disagree at index 0")
        if first < base.n_min:
            raise ValueError("digit set reaches below the base law's support")
        self.support_min = first
        self.traits = base.traits

    _SENTINEL = 1 << 200

    def _support(self, i: int) -> int:
        if self.finite_size is not None and i >= self.finite_size:
            return self._SENTINEL + i
        return self.enumerate_k(i)

    def _count_upto(self, n: int) -> int:
        if n < self.support_min:
            return 0
        lo, hi = 0, 1
        while self._support(hi) <= n:
            hi *= 2
        while lo < hi:
            mid = (lo + hi) // 2
            if self._support(mid) <= n:
                lo = mid + 1
            else:
                hi = mid
        return lo

    def _term(self, i: int) -> tuple[int, int]:
        v = self._support(i)
        if v >= self._SENTINEL:
            return 0, 0
        return _scaled_inv_pow(v, self.base.s)

    def _tail_unnorm(self, i: int) -> RInt:
        if self.finite_size is not None and i >= self.finite_size:
            return RInt(0)
        v = self._support(i - 1) if i > 0 else self.base.n_min - 1
        full = self.base._tail_unnorm(max(v - self.base.n_min + 1, 0))
        return RInt(0, full.hi)

    def _far_tail_draw(self, rng, boundary_index: int) -> int:
        if self.finite_size is not None:
            raise CfLabError("finite restricted law has no far tail")
        base_boundary = self._support(boundary_index) - self.base.n_min
        for _ in range(1000):
            n = self.base._far_tail_draw(rng, base_boundary)
            if self.member(n):
                return n
        raise UndecidableAtCap("restricted far tail found no member in 1000 proposals")


def evens_law(s) -> RestrictedLaw:
    return RestrictedLaw(
        PowerLaw(Fraction(s), n_min=2),
        member=lambda n: n % 2 == 0,
        enumerate_k=lambda i: 2 * (i + 1),
    )
