import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from cflab.cf import (
    ConvergentState,
    CylinderId,
    FiniteDigitStream,
    FunctionDigitStream,
    advance_convergent,
    canonicalize_finite,
    convergent_states,
    cylinder_interval,
    cylinder_length,
    distortion_bounds,
    evaluate,
    exact_evaluate,
    expand_rational,
    gauss_tail,
    golden_stream,
    periodic_stream,
    refine_tail,
)
from cflab.errors import StreamExhausted
from cflab.rint import E4, E_MINUS4, RInt

digit_lists = st.lists(st.integers(min_value=1, max_value=50), min_size=1, max_size=40)


# ---------------------------------------------------------------- convergents


def test_all_ones_gives_fibonacci():
    st_ = ConvergentState.initial()
    ps, qs = [st_.p_cur], [st_.q_cur]
    for _ in range(4):
        st_ = advance_convergent(st_, 1)
        ps.append(st_.p_cur)
        qs.append(st_.q_cur)
    assert qs == [1, 1, 2, 3, 5]
    assert ps == [0, 1, 1, 2, 3]


def test_stream_3_7_convergents():
    states = list(convergent_states(FiniteDigitStream([3, 7]), 2))
    assert states[0].value() == Fraction(1, 3)
    assert states[1].value() == Fraction(7, 22)


def test_advance_rejects_bad_digit():
    with pytest.raises(ValueError):
        advance_convergent(ConvergentState.initial(), 0)


@given(digit_lists)
def test_determinant_identity_everywhere(digits):
    st_ = ConvergentState.initial()
    for a in digits:
        st_ = st_.advance(a)
        assert abs(st_.p_cur * st_.q_prev - st_.p_prev * st_.q_cur) == 1


@given(digit_lists)
def test_growth_bound(digits):
    st_ = ConvergentState.initial()
    for a in digits:
        st_ = st_.advance(a)
        assert st_.q_cur ** 2 >= 1 << (st_.n - 1)


@given(digit_lists)
def test_gcd_coprime(digits):
    import math

    st_ = ConvergentState.initial()
    for a in digits:
        st_ = st_.advance(a)
    assert math.gcd(st_.p_cur, st_.q_cur) == 1


# ---------------------------------------------------------------- evaluate


def test_evaluate_golden_depth3():
    iv = evaluate(golden_stream(), 3)
    assert iv.lo == Fraction(3, 5) and iv.hi == Fraction(2, 3)
    # contains (sqrt5 - 1)/2:  r < (sqrt5-1)/2  iff  (2r+1)^2 < 5
    assert (2 * iv.lo + 1) ** 2 < 5 < (2 * iv.hi + 1) ** 2


@given(digit_lists.filter(lambda d: len(d) >= 5))
def test_evaluate_width_exact(digits):
    stream = FiniteDigitStream(digits)
    n = len(digits) - 1
    iv = evaluate(stream, n - 1) if n >= 2 else evaluate(stream, 1)
    n_used = n - 1 if n >= 2 else 1
    states = list(convergent_states(FiniteDigitStream(digits), n_used + 1))
    q_n, q_n1 = states[n_used - 1].q_cur, states[n_used].q_cur
    assert iv.width == Fraction(1, q_n * q_n1)


def test_evaluate_3_7_15_1_brackets_brute_force():
    digits = [3, 7, 15, 1, 2, 9]
    x = exact_evaluate(digits)
    iv = evaluate(FiniteDigitStream(digits), 3)
    assert iv.lo <= x <= iv.hi


@given(digit_lists.filter(lambda d: len(d) >= 6))
def test_nesting(digits):
    stream = FiniteDigitStream(digits)
    last = None
    for n in range(1, len(digits)):
        iv = evaluate(stream, n)
        if last is not None:
            assert last.contains_interval(iv)
        last = iv


def test_evaluate_exhaustion():
    with pytest.raises(StreamExhausted):
        evaluate(FiniteDigitStream([2, 3]), 2)  # needs 3 digits


# ---------------------------------------------------------------- expand


def test_expand_7_22():
    assert expand_rational(Fraction(7, 22)) == [3, 7]


def test_expand_half():
    assert expand_rational(Fraction(1, 2)) == [2]


def test_expand_rejects_out_of_range():
    for bad in (Fraction(0), Fraction(1), Fraction(3, 2), Fraction(-1, 2)):
        with pytest.raises(ValueError):
            expand_rational(bad)


def test_round_trip_1000_random_rationals():
    rng = random.Random(20240817)
    for _ in range(1000):
        q = rng.randint(2, 10**6)
        p = rng.randint(1, q - 1)
        x = Fraction(p, q)
        digits = expand_rational(x)
        assert digits[-1] >= 2 or len(digits) == 1
        assert exact_evaluate(digits) == x


def test_canonicalize_trailing_one():
    assert canonicalize_finite([3, 7, 1]) == [3, 8]
    assert exact_evaluate([3, 7, 1]) == exact_evaluate([3, 8])


# ---------------------------------------------------------------- gauss tail


def test_gauss_tail_zero_shift_is_evaluate():
    s = periodic_stream([2, 3])
    assert gauss_tail(s, 0, 5) == evaluate(s, 5)


def test_gauss_tail_golden_shift_invariant():
    s = golden_stream()
    for n in (0, 1, 7):
        iv = gauss_tail(s, n, 10)
        assert (2 * iv.lo + 1) ** 2 < 5 < (2 * iv.hi + 1) ** 2


def test_gauss_tail_periodic_23():
    # shift of (2,3,2,3,...) by 1 encodes (3,2,3,2,...) = (sqrt(15)-3)/3:
    # r < (sqrt15-3)/3  iff  (3r+3)^2 < 15
    iv = gauss_tail(periodic_stream([2, 3]), 1, 4)
    assert (3 * iv.lo + 3) ** 2 < 15 < (3 * iv.hi + 3) ** 2


def test_refine_tail_decides_predicate():
    s = periodic_stream([1, 2])
    iv = refine_tail(s, 0, decide=lambda v: v.gt(Fraction(1, 2)))
    assert iv.gt(Fraction(1, 2)) is not None


# ---------------------------------------------------------------- cylinders


def test_cylinder_digit_one():
    iv = cylinder_interval(CylinderId((1,)))
    assert iv.lo == Fraction(1, 2) and iv.hi == Fraction(1)
    assert cylinder_length(CylinderId((1,))) == Fraction(1, 2)


def test_cylinder_digit_two():
    assert cylinder_length(CylinderId((2,))) == Fraction(1, 6)


def test_cylinder_length_matches_interval_width():
    for prefix in [(1, 1), (2, 5, 1), (3, 7), (5, 4, 3, 2)]:
        cyl = CylinderId(prefix)
        assert cylinder_interval(cyl).width == cylinder_length(cyl)


@given(st.lists(st.integers(min_value=1, max_value=9), min_size=1, max_size=6))
def test_cylinder_length_q_squared_bound(prefix):
    cyl = CylinderId(tuple(prefix))
    length = cylinder_length(cyl)
    q = ConvergentState.initial()
    for a in prefix:
        q = q.advance(a)
    val = length * q.q_cur ** 2
    assert Fraction(1, 2) <= val <= 1


def test_cylinder_rejects_empty_and_bad():
    with pytest.raises(ValueError):
        CylinderId(())
    with pytest.raises(ValueError):
        CylinderId((1, 0))


# ---------------------------------------------------------------- distortion


def test_distortion_single_digit():
    for k in range(1, 10):
        b = distortion_bounds(CylinderId((k,)))
        assert b.sup_ratio == Fraction(k + 1, k)
        assert b.sup_ratio <= 2


def test_distortion_1_1():
    b = distortion_bounds(CylinderId((1, 1)))
    assert b.sup_ratio <= 4 and b.inf_ratio >= Fraction(1, 4)


def test_distortion_all_short_prefixes_within_e4():
    from itertools import product

    for length in (1, 2, 3):
        for prefix in product(range(1, 6), repeat=length):
            b = distortion_bounds(CylinderId(prefix))
            assert E_MINUS4.hi < b.inf_ratio <= 1 <= b.sup_ratio < E4.lo


# ---------------------------------------------------------------- shifted view


def test_shifted_stream_shares_cache():
    calls = []

    def fn(n):
        calls.append(n)
        return n

    s = FunctionDigitStream(fn)
    sh = s.shifted(2)
    assert sh.digit(1) == 3
    assert s.digit(3) == 3
    assert calls.count(3) == 1  # cached, produced once
