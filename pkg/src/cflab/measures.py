"""Samplers realizing the measures and stationary processes under study.

Four families of randomness feed the experiments:

* Lebesgue-uniform irrationals, produced as exact digit streams by refining
  a lazy dyadic real until each partial quotient is certain (a linear
  fractional transformation tracks the unconsumed randomness exactly);
* iid digit laws from :mod:`cflab.pmf`, including heavy tails sampled with
  no truncation;
* restricted digit sets (full-shift subsystems) as iid laws on the set;
* the tower ("skyscraper") process: iid base heights, tent-shaped
  observable a^(n /\\ (phi - n)) climbing then descending each block.

Seed discipline: every replica derives its generator from
(seed, replica, label) via numpy's SeedSequence spawn keys, so replicas are
independent, order-free, and identical at any parallelism level.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional

import numpy as np

from . import pmf
from .cf import DigitStream
from .errors import ConfigError, DigitTooLarge, UndecidableAtCap
from .pmf import DigitLaw, int_nthroot
from .rint import LN2, RInt, ceil_of_exp, log_int_enclosure

LEBESGUE_BITS_PER_DIGIT_CAP = 4096
PSI_MATERIALIZE_CAP = 1 << 20  # largest exponent for ceil(exp(psi)) digits


def replica_rng(seed: int, replica: int = 0, label: str = "") -> np.random.Generator:
    """Derived generator for one replica; splittable and documented:
    spawn key = (replica, crc32(label))."""
    key = (replica,) if not label else (replica, zlib.crc32(label.encode()))
    ss = np.random.SeedSequence(entropy=seed, spawn_key=key)
    return np.random.Generator(np.random.PCG64(ss))


# ---------------------------------------------------------------------------
# sampler specifications


_PMF_FAMILIES = {
    "table",
    "uniform",
    "power",
    "log_squared",
    "pow2_geometric",
    "double_exponential",
    "evens_power",
}

_KINDS = {
    "lebesgue",
    "iid_pmf",
    "restricted_iid",
    "skyscraper",
    "constant",
    "geometric",
}


_LAW_CACHE: dict[str, DigitLaw] = {}


def law_from_config(cfg: dict) -> DigitLaw:
    """Build (or fetch) the law described by a pmf config dict.

    Instances are cached by canonical config; their internal tables are pure
    refinements, so sharing them across replicas never changes results.
    """
    import json

    key = json.dumps(cfg, sort_keys=True, default=str)
    if key in _LAW_CACHE:
        return _LAW_CACHE[key]
    law = _build_law(dict(cfg))
    _LAW_CACHE[key] = law
    return law


def _build_law(cfg: dict) -> DigitLaw:
    family = cfg.pop("family", None)
    if family == "table":
        masses = {int(k): Fraction(v) for k, v in cfg.pop("masses").items()}
        law = pmf.TablePmf(masses)
    elif family == "uniform":
        law = pmf.uniform_table(int(v) for v in cfg.pop("values"))
    elif family == "power":
        law = pmf.PowerLaw(Fraction(cfg.pop("s")), n_min=int(cfg.pop("n_min", 1)))
    elif family == "log_squared":
        law = pmf.LogSquaredLaw(n_min=int(cfg.pop("n_min", 2)))
    elif family == "pow2_geometric":
        law = pmf.Pow2GeometricLaw()
    elif family == "double_exponential":
        law = pmf.DoubleExponentialLaw()
    elif family == "evens_power":
        law = pmf.evens_law(Fraction(cfg.pop("s")))
    else:
        raise ConfigError(f"unknown pmf family {family!r}")
    if cfg:
        raise ConfigError(f"unknown pmf fields {sorted(cfg)} for family {family!r}")
    return law


@dataclass(frozen=True)
class SamplerSpec:
    """Declarative description of a digit/value process."""

    kind: str
    pmf: Optional[dict] = None
    a: Optional[str] = None          # tower growth factor, exact rational string
    base: Optional[dict] = None      # tower base height pmf
    value: Optional[str] = None      # constant kind
    rho: Optional[str] = None        # geometric kind
    transform: str = "none"          # none | log (observable = log digit)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown sampler kind {self.kind!r}")
        if self.transform not in ("none", "log"):
            raise ConfigError(f"unknown transform {self.transform!r}")
        if self.kind in ("iid_pmf", "restricted_iid"):
            if not self.pmf:
                raise ConfigError(f"{self.kind} needs a pmf")
            law_from_config(self.pmf)  # validates
        if self.kind == "skyscraper":
            a = Fraction(self.a if self.a is not None else 0)
            if a <= 1:
                raise ConfigError("skyscraper needs a > 1")
            base = self.base or {"family": "power", "s": "5/2", "n_min": 1}
            law = law_from_config(base)
            if law.traits.mean_finite is False:
                raise ConfigError("skyscraper base heights must have finite mean")
            if base.get("family") == "power" and Fraction(base["s"]) <= 2:
                raise ConfigError("power-law tower heights need s > 2")
        if self.kind == "constant" and self.value is None:
            raise ConfigError("constant sampler needs a value")
        if self.kind == "geometric":
            if self.rho is None or Fraction(self.rho) <= 0:
                raise ConfigError("geometric sampler needs rho > 0")

    # canonical dict for configs and hashing
    def to_dict(self) -> dict:
        out: dict[str, Any] = {"kind": self.kind}
        for name in ("pmf", "a", "base", "value", "rho"):
            v = getattr(self, name)
            if v is not None:
                out[name] = v
        if self.transform != "none":
            out["transform"] = self.transform
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "SamplerSpec":
        d = dict(d)
        kind = d.pop("kind", None)
        if kind is None:
            raise ConfigError("sampler spec needs a kind")
        known = {"pmf", "a", "base", "value", "rho", "transform"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown sampler fields {sorted(unknown)}")
        return cls(kind=kind, **d)

    # convenience constructors
    @classmethod
    def lebesgue(cls) -> "SamplerSpec":
        return cls(kind="lebesgue")

    @classmethod
    def iid(cls, pmf_cfg: dict, transform: str = "none") -> "SamplerSpec":
        return cls(kind="iid_pmf", pmf=pmf_cfg, transform=transform)

    @classmethod
    def skyscraper_spec(cls, a, base: Optional[dict] = None) -> "SamplerSpec":
        return cls(kind="skyscraper", a=str(Fraction(a)), base=base)

    @classmethod
    def constant(cls, c) -> "SamplerSpec":
        return cls(kind="constant", value=str(Fraction(c)))

    @classmethod
    def geometric(cls, rho) -> "SamplerSpec":
        return cls(kind="geometric", rho=str(Fraction(rho)))


# ---------------------------------------------------------------------------
# Lebesgue digit extraction


class LebesgueDigitStream(DigitStream):
    """Digits of a uniform point of (0,1), exact.

    The unconsumed randomness r is uniform on (0,1); the current Gauss-orbit
    tail is t = (a r + b)/(c r + d) with integer coefficients.  A digit is
    emitted only when the whole t-interval sits inside one cylinder; a random
    bit halves the r-interval otherwise.  The emitted stream therefore agrees
    exactly with the digit expansion of the sampled real.
    """

    def __init__(self, rng, bits_per_digit_cap: int = LEBESGUE_BITS_PER_DIGIT_CAP):
        super().__init__()
        self._rng = rng
        self._mat = (1, 0, 0, 1)  # t = (a r + b) / (c r + d)
        self._cap = bits_per_digit_cap
        self._word = 0
        self._word_bits = 0
        self.bits_consumed = 0
        self._xm = 0  # dyadic enclosure of the sampled x itself
        self._xb = 0

    def _next_bit(self) -> int:
        if self._word_bits == 0:
            self._word = int(self._rng.integers(0, 1 << 64, dtype=np.uint64))
            self._word_bits = 64
        self._word_bits -= 1
        bit = (self._word >> self._word_bits) & 1
        self.bits_consumed += 1
        self._xm = (self._xm << 1) | bit
        self._xb += 1
        return bit

    def x_enclosure(self) -> RInt:
        return RInt(Fraction(self._xm, 1 << self._xb), Fraction(self._xm + 1, 1 << self._xb))

    def _produce(self, index0: int) -> int:
        a, b, c, d = self._mat
        for _ in range(self._cap):
            e0_num, e0_den = b, d
            e1_num, e1_den = a + b, c + d
            # interval endpoints of t over r in [0,1]
            lo_num, lo_den, hi_num, hi_den = (
                (e0_num, e0_den, e1_num, e1_den)
                if e0_num * e1_den <= e1_num * e0_den
                else (e1_num, e1_den, e0_num, e0_den)
            )
            if lo_num > 0 and hi_num <= hi_den:
                k = hi_den // hi_num  # floor(1/hi); exact also when 1/hi is integral
                if lo_num * (k + 1) > lo_den:  # lo > 1/(k+1): inside cylinder [k]
                    a, b, c, d = c - k * a, d - k * b, a, b
                    g = math.gcd(math.gcd(abs(a), abs(b)), math.gcd(abs(c), abs(d)))
                    if g > 1:
                        a, b, c, d = a // g, b // g, c // g, d // g
                    self._mat = (a, b, c, d)
                    return k
            bit = self._next_bit()
            a, b, c, d = a, a * bit + 2 * b, c, c * bit + 2 * d
            g = math.gcd(math.gcd(abs(a), abs(b)), math.gcd(abs(c), abs(d)))
            if g > 1:
                a, b, c, d = a // g, b // g, c // g, d // g
        raise UndecidableAtCap(
            f"digit {index0 + 1} still straddles a cylinder boundary after {self._cap} bits"
        )


class IidDigitStream(DigitStream):
    """iid partial quotients with a given law (digits must be >= 1)."""

    def __init__(self, law: DigitLaw, rng):
        super().__init__()
        if law.support_min < 1:
            raise ConfigError("digit law must be supported on integers >= 1")
        self._law = law
        self._rng = rng

    def _produce(self, index0: int) -> int:
        return self._law.sample_one(self._rng)


# ---------------------------------------------------------------------------
# tower (skyscraper) process


@dataclass(frozen=True)
class TowerState:
    """Position inside one tower block: 0 <= level < base_value; the
    emitted observable is a^(level /\\ (base_value - level))."""

    base_value: int
    level: int
    a: Fraction

    def __post_init__(self):
        if not 0 <= self.level < self.base_value:
            raise ValueError("tower level out of range")

    def emitted(self) -> Fraction:
        return self.a ** min(self.level, self.base_value - self.level)

    def step(self) -> "TowerState":
        if self.level + 1 < self.base_value:
            return TowerState(self.base_value, self.level + 1, self.a)
        raise ValueError("block exhausted; next block needs a fresh height")


def tent_levels(phi: int) -> list[int]:
    """Exponent profile of one block: n /\\ (phi - n) for n = 0..phi-1."""
    return [min(n, phi - n) for n in range(phi)]


def tent_block(a: Fraction, phi: int) -> list[Fraction]:
    return [Fraction(a) ** lv for lv in tent_levels(phi)]


def block_sum_closed_form(a: Fraction, phi: int) -> Fraction:
    """Exact block sum: the even-phi geometric closed form
    (a+1)/(a-1) * (a^floor(phi/2) - 1) plus the repeated-peak term a^floor(phi/2)
    when phi is odd."""
    a = Fraction(a)
    h = phi // 2
    s = Fraction(a + 1, a - 1) * (a ** h - 1)
    if phi % 2 == 1:
        s += a ** h
    return s


@dataclass
class ProcessSample:
    """A finite realization of a non-negative stationary process, stored in
    the log domain (values can dwarf float range)."""

    log_values: np.ndarray
    spec: SamplerSpec
    seed: int
    replica: int
    block_heights: Optional[np.ndarray] = None
    levels: Optional[np.ndarray] = None
    extras: dict = field(default_factory=dict)


def _skyscraper_levels(base_law: DigitLaw, rng, horizon: int) -> tuple[np.ndarray, np.ndarray]:
    """Concatenated tent exponents up to the horizon, plus block heights."""
    heights: list[int] = []
    total = 0
    while total < horizon:
        chunk = max(1024, (horizon - total) // 2)
        batch = base_law.sample_batch(rng, chunk)
        for phi in batch:
            if phi > 1 << 40:
                raise DigitTooLarge("tower height beyond any feasible horizon")
        heights.extend(batch)
        total += int(sum(batch))
    phis = np.array(heights, dtype=np.int64)
    ends = np.cumsum(phis)
    n_total = int(ends[-1])
    block_id = np.repeat(np.arange(len(phis)), phis)
    starts = ends - phis
    offsets = np.arange(n_total, dtype=np.int64) - starts[block_id]
    levels = np.minimum(offsets, phis[block_id] - offsets)
    keep = np.searchsorted(ends, horizon, side="left") + 1
    return levels[:horizon], phis[:keep]


class SkyscraperDigitStream(DigitStream):
    """Digits ceil(exp(psi_n)) driven by the tower observable.

    Digits explode doubly-exponentially, so materialization stops at a cap;
    log enclosures [psi, psi + e^-psi] remain available for every index and
    keep the digit-route extravagance identified with the tower's.
    """

    def __init__(self, a: Fraction, base_law: DigitLaw, rng):
        super().__init__()
        self.a = Fraction(a)
        self._law = base_law
        self._rng = rng
        self._levels: list[int] = []

    def _ensure_levels(self, n: int) -> None:
        while len(self._levels) < n:
            phi = self._law.sample_one(self._rng)
            self._levels.extend(min(j, phi - j) for j in range(phi))

    def psi(self, n: int) -> Fraction:
        """Tower observable at step n (1-indexed), exact."""
        self._ensure_levels(n)
        return self.a ** self._levels[n - 1]

    def digit(self, n: int) -> int:
        while len(self._cache) < n:
            i = len(self._cache)
            psi = self.psi(i + 1)
            if psi > PSI_MATERIALIZE_CAP:
                raise DigitTooLarge(
                    f"digit {i + 1} is ceil(exp({float(psi):.3g})), beyond materialization"
                )
            self._cache.append(ceil_of_exp(psi))
        return self._cache[n - 1]

    def log_digit(self, n: int, prec: int = 128) -> RInt:
        psi = self.psi(n)
        # ln(ceil(e^psi)) - psi lies in [0, e^-psi]; bound e^-psi by 2^-k
        k = int(psi / LN2.hi)
        return RInt(psi, psi + Fraction(1, 1 << max(k, 0)))


# ---------------------------------------------------------------------------
# engineered streams with prescribed digit-route extravagance


class EngineeredStream(DigitStream):
    """a_1 = 2 and a_{n+1} = ceil((a_1 ... a_n)^r): the next digit's log is r
    times the running log-sum, so the digit-route extravagance is r by
    construction and the irrationality exponent is 2 + r.

    Digits are exact integers while they fit the bit budget; beyond it the
    stream switches to exact interval bookkeeping of the logs.
    """

    def __init__(self, r: Fraction, materialize_bit_cap: int = 1 << 21):
        super().__init__()
        self.r = Fraction(r)
        if self.r <= 0:
            raise ValueError("engineered stream needs r > 0")
        self._cap = materialize_bit_cap
        self._product: Optional[int] = 2  # prod of materialized digits
        self._log_product: RInt = log_int_enclosure(2, prec=192)
        self._log_digits: list[RInt] = [log_int_enclosure(2, prec=192)]
        self._ints: list[Optional[int]] = [2]

    def _grow(self) -> None:
        lp = self._log_product
        if self._product is not None and (
            self.r * self._product.bit_length() <= self._cap
        ):
            u, v = self.r.numerator, self.r.denominator
            pu = self._product ** u
            root = int_nthroot(pu, v) if v > 1 else pu
            nxt = root if root ** v == pu else root + 1
            self._ints.append(nxt)
            self._log_digits.append(log_int_enclosure(nxt, prec=192))
            if nxt.bit_length() + self._product.bit_length() <= self._cap:
                self._product *= nxt
            else:
                self._product = None
        else:
            self._product = None
            # ln a_{n+1} in [r lp, r lp + ln(1 + P^-r)], the slack below 2^-k
            k = max(int((self.r * lp.lo) / LN2.hi) - 1, 0)
            enc = RInt(self.r * lp.lo, self.r * lp.hi + Fraction(1, 1 << k))
            self._ints.append(None)
            self._log_digits.append(enc)
        self._log_product = lp + self._log_digits[-1]

    def digit(self, n: int) -> int:
        while len(self._log_digits) < n:
            self._grow()
        v = self._ints[n - 1]
        if v is None:
            raise DigitTooLarge(f"engineered digit {n} exceeds the bit budget")
        return v

    def log_digit(self, n: int, prec: int = 128) -> RInt:
        while len(self._log_digits) < n:
            self._grow()
        return self._log_digits[n - 1]


# ---------------------------------------------------------------------------
# realization dispatch


def make_digit_stream(spec: SamplerSpec, seed: int, replica: int = 0) -> DigitStream:
    """Digit stream for digit-valued sampler kinds."""
    if spec.kind == "lebesgue":
        return LebesgueDigitStream(replica_rng(seed, replica, "digits"))
    if spec.kind in ("iid_pmf", "restricted_iid"):
        law = law_from_config(spec.pmf)
        return IidDigitStream(law, replica_rng(seed, replica, "digits"))
    if spec.kind == "skyscraper":
        base = spec.base or {"family": "power", "s": "5/2", "n_min": 1}
        return SkyscraperDigitStream(
            Fraction(spec.a), law_from_config(base), replica_rng(seed, replica, "digits")
        )
    raise ConfigError(f"sampler kind {spec.kind!r} does not generate digit streams")


def realize_process(
    spec: SamplerSpec, horizon: int, seed: int, replica: int = 0, rng_label: str = "process"
) -> ProcessSample:
    """Log-domain realization of the process described by the spec."""
    if horizon < 1:
        raise ConfigError("horizon must be >= 1")
    if spec.kind == "constant":
        c = Fraction(spec.value)
        lv = np.full(horizon, math.log(c) if c > 0 else -np.inf)
        return ProcessSample(lv, spec, seed, replica)
    if spec.kind == "geometric":
        rho = Fraction(spec.rho)
        lv = np.arange(1, horizon + 1, dtype=np.float64) * math.log(rho)
        return ProcessSample(lv, spec, seed, replica)
    rng = replica_rng(seed, replica, rng_label)
    if spec.kind in ("iid_pmf", "restricted_iid"):
        law = law_from_config(spec.pmf)
        raw_log = law.sample_log_batch(rng, horizon)
        if spec.transform == "log":
            with np.errstate(divide="ignore"):
                lv = np.where(raw_log > 0, np.log(np.maximum(raw_log, 1e-300)), -np.inf)
        else:
            lv = raw_log
        return ProcessSample(lv, spec, seed, replica)
    if spec.kind == "skyscraper":
        a = Fraction(spec.a)
        base = spec.base or {"family": "power", "s": "5/2", "n_min": 1}
        law = law_from_config(base)
        levels, phis = _skyscraper_levels(law, rng, horizon)
        lv = levels.astype(np.float64) * math.log(a)
        return ProcessSample(lv, spec, seed, replica, block_heights=phis, levels=levels)
    if spec.kind == "lebesgue":
        stream = LebesgueDigitStream(rng)
        lv = np.array([math.log(stream.digit(i)) for i in range(1, horizon + 1)])
        return ProcessSample(lv, spec, seed, replica)
    raise ConfigError(f"cannot realize process for kind {spec.kind!r}")
