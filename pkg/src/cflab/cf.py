"""Exact continued-fraction machinery.

Irrationals live here purely as digit streams (partial quotients); the Gauss
map acts as an exact shift on the coding, so orbits carry no round-off at
all.  Convergents are exact big integers, cylinders are exact rational
intervals, and every tail quantity is produced as an enclosure between two
consecutive convergents.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Sequence

from .errors import StreamExhausted, UndecidableAtCap
from .rint import DEFAULT_LOG_PREC, E4, E_MINUS4, RInt, log_int_enclosure

TAIL_DEPTH_CAP = 256


def _check_digit(a: int) -> int:
    if not isinstance(a, int) or isinstance(a, bool) or a < 1:
        raise ValueError(f"partial quotient must be an integer >= 1, got {a!r}")
    return a


class DigitStream:
    """Lazy, replayable sequence of partial quotients a_1, a_2, ...

    Digits are cached on first production, so requesting digit n twice always
    yields the same value, also for seeded random sources.
    """

    def __init__(self):
        self._cache: list[int] = []

    def _produce(self, index0: int) -> int:
        raise NotImplementedError

    def digit(self, n: int) -> int:
        """1-indexed digit a_n."""
        if n < 1:
            raise ValueError("digit index starts at 1")
        while len(self._cache) < n:
            self._cache.append(_check_digit(self._produce(len(self._cache))))
        return self._cache[n - 1]

    def prefix(self, n: int) -> list[int]:
        self.digit(n)
        return self._cache[:n]

    def log_digit(self, n: int, prec: int = DEFAULT_LOG_PREC) -> RInt:
        """Enclosure of ln(a_n); overridden by streams whose digits are too
        large to materialize."""
        return log_int_enclosure(self.digit(n), prec)

    def shifted(self, k: int) -> "DigitStream":
        """View of the stream with the first k digits dropped (the Gauss
        shift in digit space)."""
        if k == 0:
            return self
        return _ShiftedStream(self, k)


class _ShiftedStream(DigitStream):
    def __init__(self, parent: DigitStream, k: int):
        super().__init__()
        self._parent = parent
        self._k = k

    def digit(self, n: int) -> int:
        return self._parent.digit(n + self._k)

    def log_digit(self, n: int, prec: int = DEFAULT_LOG_PREC) -> RInt:
        return self._parent.log_digit(n + self._k, prec)

    def shifted(self, k: int) -> DigitStream:
        return self._parent.shifted(self._k + k) if k else self


class FiniteDigitStream(DigitStream):
    def __init__(self, digits: Sequence[int]):
        super().__init__()
        self._digits = [_check_digit(int(a)) for a in digits]

    def _produce(self, index0: int) -> int:
        if index0 >= len(self._digits):
            raise StreamExhausted(index0 + 1, len(self._digits))
        return self._digits[index0]

    def __len__(self) -> int:
        return len(self._digits)


class FunctionDigitStream(DigitStream):
    """Deterministic stream a_n = fn(n) (1-indexed)."""

    def __init__(self, fn: Callable[[int], int]):
        super().__init__()
        self._fn = fn

    def _produce(self, index0: int) -> int:
        return self._fn(index0 + 1)


def periodic_stream(block: Sequence[int]) -> DigitStream:
    block = [_check_digit(int(a)) for a in block]
    return FunctionDigitStream(lambda n: block[(n - 1) % len(block)])


def golden_stream() -> DigitStream:
    return FunctionDigitStream(lambda n: 1)


@dataclass(frozen=True)
class ConvergentState:
    """(p_{n-1}, q_{n-1}, p_n, q_n) advanced by the standard recurrence."""

    p_prev: int
    q_prev: int
    p_cur: int
    q_cur: int
    n: int

    @classmethod
    def initial(cls) -> "ConvergentState":
        # (p_{-1}, q_{-1}, p_0, q_0) = (1, 0, 0, 1)
        return cls(1, 0, 0, 1, 0)

    def advance(self, a: int) -> "ConvergentState":
        _check_digit(a)
        return ConvergentState(
            self.p_cur,
            self.q_cur,
            a * self.p_cur + self.p_prev,
            a * self.q_cur + self.q_prev,
            self.n + 1,
        )

    @property
    def determinant(self) -> int:
        return self.p_cur * self.q_prev - self.p_prev * self.q_cur

    def value(self) -> Fraction:
        if self.q_cur == 0:
            raise ZeroDivisionError("convergent value undefined at n = -1")
        return Fraction(self.p_cur, self.q_cur)

    def check_invariants(self) -> None:
        if abs(self.determinant) != 1:
            raise AssertionError(f"determinant invariant broken at n={self.n}")
        if self.n >= 1 and self.q_cur * self.q_cur < 1 << (self.n - 1):
            raise AssertionError(f"growth bound q_n >= 2^((n-1)/2) broken at n={self.n}")


def advance_convergent(state: ConvergentState, a: int) -> ConvergentState:
    return state.advance(a)


def convergent_states(digits: DigitStream, upto: int) -> Iterator[ConvergentState]:
    """Yield states for n = 1 .. upto."""
    st = ConvergentState.initial()
    for n in range(1, upto + 1):
        st = st.advance(digits.digit(n))
        yield st


def _pq_through(digits: DigitStream, n: int) -> tuple[int, int, int, int]:
    """(p_n, q_n, p_{n+1}, q_{n+1}) via a raw integer loop."""
    p_prev, q_prev, p, q = 1, 0, 0, 1
    for i in range(1, n + 2):
        a = digits.digit(i)
        p_prev, q_prev, p, q = p, q, a * p + p_prev, a * q + q_prev
    return p_prev, q_prev, p, q


def evaluate(digits: DigitStream, n: int) -> RInt:
    """Enclosure of the stream's value between consecutive convergents
    p_n/q_n and p_{n+1}/q_{n+1}; exact width 1/(q_n q_{n+1})."""
    if n < 1:
        raise ValueError("evaluation depth must be >= 1")
    p_n, q_n, p_n1, q_n1 = _pq_through(digits, n)
    a, b = Fraction(p_n, q_n), Fraction(p_n1, q_n1)
    return RInt(a, b) if a <= b else RInt(b, a)


def exact_evaluate(digits: Sequence[int]) -> Fraction:
    """Exact value of the finite continued fraction [0; a_1, ..., a_m]."""
    if not digits:
        raise ValueError("empty digit list")
    p_prev, q_prev, p, q = 1, 0, 0, 1
    for a in digits:
        _check_digit(int(a))
        p_prev, q_prev, p, q = p, q, a * p + p_prev, a * q + q_prev
    return Fraction(p, q)


def canonicalize_finite(digits: Sequence[int]) -> list[int]:
    """Fold a trailing digit 1 into the canonical shorter form."""
    ds = [int(a) for a in digits]
    if len(ds) >= 2 and ds[-1] == 1:
        ds = ds[:-2] + [ds[-2] + 1]
    return ds


def expand_rational(x: Fraction) -> list[int]:
    """Finite digit expansion of a rational in (0,1) via Euclid's algorithm.

    Round-trips exactly with exact_evaluate; the final digit is always >= 2
    so the expansion is canonical.
    """
    x = Fraction(x)
    if not 0 < x < 1:
        raise ValueError(f"expand_rational requires 0 < x < 1, got {x}")
    p, q = x.numerator, x.denominator
    digits = []
    while p:
        a, r = divmod(q, p)
        digits.append(a)
        p, q = r, p
    return digits


def gauss_tail(digits: DigitStream, n: int, depth: int) -> RInt:
    """Enclosure of G^n(x) computed from the shifted digit stream."""
    if n < 0:
        raise ValueError("shift must be >= 0")
    return evaluate(digits.shifted(n), depth)


def refine_tail(
    digits: DigitStream,
    n: int,
    decide: Callable[[RInt], bool | None] | None = None,
    max_width: Fraction | None = None,
    start_depth: int = 8,
    depth_cap: int = TAIL_DEPTH_CAP,
) -> RInt:
    """Adaptively deepen the enclosure of G^n(x) by doubling the depth until
    `decide` settles (returns non-None) or the width target is met.

    Raises UndecidableAtCap past depth_cap extra digits.
    """
    depth = start_depth
    while True:
        iv = gauss_tail(digits, n, depth)
        if decide is not None and decide(iv) is not None:
            return iv
        if max_width is not None and iv.width <= max_width:
            return iv
        if decide is None and max_width is None:
            return iv
        if depth >= depth_cap:
            raise UndecidableAtCap(
                f"tail enclosure at shift {n} undecided after {depth_cap} extra digits"
            )
        depth = min(2 * depth, depth_cap) if depth < depth_cap else depth_cap


@dataclass(frozen=True)
class CylinderId:
    """Finite digit word a_1 ... a_n naming a rank-n cylinder."""

    prefix: tuple[int, ...]

    def __post_init__(self):
        if not self.prefix:
            raise ValueError("cylinder prefix must be non-empty")
        for a in self.prefix:
            _check_digit(a)

    def __len__(self) -> int:
        return len(self.prefix)

    def concat(self, other: "CylinderId") -> "CylinderId":
        return CylinderId(self.prefix + other.prefix)


def _cylinder_pq(cyl: CylinderId) -> tuple[int, int, int, int]:
    """(p_{n-1}, q_{n-1}, p_n, q_n) for the prefix."""
    p_prev, q_prev, p, q = 1, 0, 0, 1
    for a in cyl.prefix:
        p_prev, q_prev, p, q = p, q, a * p + p_prev, a * q + q_prev
    return p_prev, q_prev, p, q


def cylinder_interval(cyl: CylinderId) -> RInt:
    """Exact interval spanned by the cylinder: endpoints p_n/q_n and
    (p_n + p_{n-1})/(q_n + q_{n-1})."""
    p_prev, q_prev, p, q = _cylinder_pq(cyl)
    a, b = Fraction(p, q), Fraction(p + p_prev, q + q_prev)
    return RInt(a, b) if a <= b else RInt(b, a)


def cylinder_length(cyl: CylinderId) -> Fraction:
    p_prev, q_prev, p, q = _cylinder_pq(cyl)
    return Fraction(1, q * (q + q_prev))


@dataclass(frozen=True)
class DistortionBounds:
    """sup and inf of |branch derivative| over [0,1], relative to the
    cylinder's Lebesgue measure."""

    sup_ratio: Fraction
    inf_ratio: Fraction

    def within_e4(self) -> bool:
        return (
            E_MINUS4.hi < self.inf_ratio
            and self.sup_ratio < E4.lo
        )


def distortion_bounds(cyl: CylinderId) -> DistortionBounds:
    """Distortion of the inverse branch onto the cylinder.

    |branch'(x)| = 1/(q_n + q_{n-1} x)^2, so the sup/inf over [0,1] relative
    to the cylinder length 1/(q_n (q_n + q_{n-1})) are exact rationals.
    """
    p_prev, q_prev, p, q = _cylinder_pq(cyl)
    bounds = DistortionBounds(
        sup_ratio=Fraction(q + q_prev, q),
        inf_ratio=Fraction(q, q + q_prev),
    )
    if not bounds.within_e4():
        raise AssertionError(f"distortion bound e^4 violated for {cyl}")
    return bounds
