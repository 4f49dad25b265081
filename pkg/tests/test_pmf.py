import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cflab.measures import replica_rng
from cflab.pmf import (
    DoubleExponentialLaw,
    LogSquaredLaw,
    Pow2GeometricLaw,
    PowerLaw,
    RestrictedLaw,
    TablePmf,
    UDraw,
    evens_law,
    int_nthroot,
    inv_pow_enclosure,
    ln_big_enclosure,
    ln_enclosure_wide,
    ln_ratio_enclosure,
    pow_frac_enclosure,
    uniform_table,
)
from cflab.rint import RInt


@given(st.integers(min_value=0, max_value=10**30), st.integers(min_value=1, max_value=7))
def test_int_nthroot_exact(x, k):
    r = int_nthroot(x, k)
    assert r ** k <= x
    assert (r + 1) ** k > x


@given(
    st.integers(min_value=1, max_value=10**6),
    st.fractions(min_value=Fraction(1, 4), max_value=Fraction(4)),
)
def test_pow_frac_enclosure_contains(n, e):
    enc = pow_frac_enclosure(n, e)
    ref = n ** float(e)
    assert float(enc.lo) <= ref * (1 + 1e-9)
    assert float(enc.hi) >= ref * (1 - 1e-9)


@given(st.integers(min_value=2, max_value=10**12))
def test_ln_enclosure_wide_contains(n):
    enc = ln_enclosure_wide(n)
    assert enc.lo < Fraction(math.log(n)) < enc.hi or enc.contains(Fraction(math.log(n)))


def test_ln_big_enclosure_huge():
    n = 7 ** 5000
    enc = ln_big_enclosure(n)
    ref = 5000 * math.log(7)
    assert float(enc.lo) <= ref <= float(enc.hi)
    assert float(enc.width) < 1e-9


@given(st.integers(min_value=2, max_value=10**9))
def test_ln_ratio_enclosure(n):
    enc = ln_ratio_enclosure(n)
    ref = math.log(n / (n - 1))
    assert float(enc.lo) <= ref * (1 + 1e-9)
    assert float(enc.hi) >= ref * (1 - 1e-9)


# ----------------------------------------------------------------- tables


def test_table_pmf_validation():
    with pytest.raises(ValueError):
        TablePmf({})
    with pytest.raises(ValueError):
        TablePmf({1: Fraction(1, 2)})  # does not sum to 1
    with pytest.raises(ValueError):
        TablePmf({0: Fraction(1)})


def test_table_pmf_masses():
    law = uniform_table([1, 2])
    assert law.mass(1) == RInt(Fraction(1, 2))
    assert law.mass(3) == RInt(0)
    assert law.tail_mass(1) == RInt(Fraction(1, 2))


def test_table_sampling_deterministic_and_uniform():
    law = uniform_table([1, 2])
    a = law.sample_batch(replica_rng(7, 0), 20000)
    b = law.sample_batch(replica_rng(7, 0), 20000)
    assert a == b
    freq1 = a.count(1) / len(a)
    assert abs(freq1 - 0.5) < 0.02


def test_table_batch_matches_law():
    law = TablePmf({1: Fraction(1, 4), 5: Fraction(3, 4)})
    vals = law.sample_batch(replica_rng(3, 1), 4000)
    assert set(vals) <= {1, 5}
    assert abs(vals.count(5) / 4000 - 0.75) < 0.03


# ----------------------------------------------------------------- pow2 laws


def test_pow2_geometric_exact_masses():
    law = Pow2GeometricLaw()
    assert law.mass(2) == RInt(Fraction(1, 2))
    assert law.mass(8) == RInt(Fraction(1, 8))
    assert law.mass(3) == RInt(0)
    assert law.tail_mass(2) == RInt(Fraction(1, 2))
    assert law.tail_mass(7) == RInt(Fraction(1, 2))
    assert law.tail_mass(8) == RInt(Fraction(1, 8))


def test_pow2_sampling_distribution():
    law = Pow2GeometricLaw()
    ks = law.sample_k_batch(replica_rng(11, 0), 100000)
    assert abs((ks == 1).mean() - 0.5) < 0.01
    assert abs((ks == 2).mean() - 0.25) < 0.01
    assert (ks >= 1).all()
    vals = law.sample_batch(replica_rng(11, 1), 100)
    assert all(v & (v - 1) == 0 and v >= 2 for v in vals)


def test_pow2_batch_matches_singles():
    law = Pow2GeometricLaw()
    batch = law.sample_k_batch(replica_rng(5, 0), 500)
    singles = [law._sample_k(replica_rng(5, 0)) for _ in range(1)]
    assert batch[0] == singles[0]


def test_double_exponential_law():
    law = DoubleExponentialLaw()
    vals = law.sample_batch(replica_rng(2, 0), 200)
    for v in vals:
        e = v.bit_length() - 1
        assert v == 1 << e and e == 1 << (e.bit_length() - 1)
    assert law.mass(4) == RInt(Fraction(1, 2))
    assert law.mass(16) == RInt(Fraction(1, 4))
    assert law.mass(8) == RInt(0)
    assert law.tail_mass(100) == RInt(Fraction(1, 4))


# ----------------------------------------------------------------- power law


def test_power_law_masses_match_zeta():
    import mpmath

    law = PowerLaw(Fraction(3), n_min=1)
    z3 = float(mpmath.zeta(3))
    for n in (1, 2, 5, 20):
        m = law.mass(n)
        ref = n ** -3 / z3
        assert float(m.lo) <= ref <= float(m.hi)
        assert float(m.width) < 1e-6


def test_power_law_sampling_frequencies():
    law = PowerLaw(Fraction(3), n_min=1)
    vals = law.sample_batch(replica_rng(13, 0), 50000)
    n = len(vals)
    for cls in (1, 2, 3):
        p = float(law.mass(cls).mid)
        obs = vals.count(cls) / n
        se = math.sqrt(p * (1 - p) / n)
        assert abs(obs - p) < 4 * se + 1e-9


def test_power_law_deterministic():
    law = PowerLaw(Fraction(5, 2), n_min=1)
    a = law.sample_batch(replica_rng(99, 4), 2000)
    b = PowerLaw(Fraction(5, 2), n_min=1).sample_batch(replica_rng(99, 4), 2000)
    assert a == b


def test_power_law_far_tail_conditional_law():
    # exercise the rejection sampler directly: conditional on the tail it must
    # reproduce masses proportional to n^-s
    law = PowerLaw(Fraction(3), n_min=1)
    law._extend(64)
    rng = replica_rng(17, 0)
    draws = [law._far_tail_draw(rng, 64) for _ in range(4000)]
    assert min(draws) >= 65
    # P(X = 65 | X >= 65) = 65^-3 / sum_{n>=65} n^-3 ~ 65^-3 * 2*64.5^2
    tail = float(law.tail_mass(64).mid)
    p65 = float(law.mass(65).mid) / tail
    obs = draws.count(65) / len(draws)
    se = math.sqrt(p65 * (1 - p65) / len(draws))
    assert abs(obs - p65) < 4 * se + 0.005


def test_power_law_rational_exponent():
    law = PowerLaw(Fraction(5, 2), n_min=1)
    m1, m2 = law.mass(1), law.mass(2)
    ratio_ref = 2 ** 2.5
    lo = float(m1.lo) / float(m2.hi)
    hi = float(m1.hi) / float(m2.lo)
    assert lo <= ratio_ref <= hi


# ----------------------------------------------------------------- log squared


def test_log_squared_masses():
    law = LogSquaredLaw()
    m2 = law.mass(2)
    m4 = law.mass(4)
    # ratio m(2)/m(4) = (4 ln^2 4)/(2 ln^2 2) = 2*(2)^2 = 8
    lo = float(m2.lo) / float(m4.hi)
    hi = float(m2.hi) / float(m4.lo)
    assert lo <= 8.0 <= hi


def test_log_squared_sampling_and_far_tail():
    law = LogSquaredLaw()
    vals = law.sample_batch(replica_rng(23, 0), 3000)
    assert min(vals) >= 2
    # the tail is so heavy that a few thousand draws should cross the table
    assert max(vals) > (1 << 15) + 2
    p2 = float(law.mass(2).mid)
    obs = vals.count(2) / len(vals)
    se = math.sqrt(p2 * (1 - p2) / len(vals))
    assert abs(obs - p2) < 4 * se + 0.01


def test_log_squared_infinite_log_mean_flag():
    assert LogSquaredLaw().traits.log_mean_finite is False
    assert PowerLaw(Fraction(3)).traits.log_mean_finite is True


# ----------------------------------------------------------------- restricted


def test_evens_law_draws_even():
    law = evens_law(Fraction(3))
    vals = law.sample_batch(replica_rng(31, 0), 2000)
    assert all(v % 2 == 0 for v in vals)
    assert law.mass(3) == RInt(0)
    assert float(law.mass(2).mid) > 0.8  # 2^-3 dominates sum over evens


def test_finite_restricted_needs_override():
    base = PowerLaw(Fraction(3), n_min=1)
    with pytest.raises(ValueError):
        RestrictedLaw(base, lambda n: n in (1, 2), lambda i: (1, 2)[i] if i < 2 else 10**9,
                      finite_size=2)
    law = RestrictedLaw(
        base,
        lambda n: n in (1, 2),
        lambda i: (1, 2)[i] if i < 2 else 10**9,
        allow_finite=True,
        finite_size=2,
    )
    vals = law.sample_batch(replica_rng(37, 0), 1000)
    assert set(vals) <= {1, 2}


# ----------------------------------------------------------------- udraw


def test_udraw_bernoulli_frequency():
    rng = replica_rng(41, 0)
    p = RInt(Fraction(1, 3))
    hits = sum(UDraw(rng).bernoulli(lambda gen: p) for _ in range(20000))
    assert abs(hits / 20000 - 1 / 3) < 0.015


def test_udraw_comparisons_refine():
    rng = replica_rng(43, 0)
    u = UDraw(rng)
    assert u.less_than(Fraction(1)) is True
    assert u.less_than(Fraction(0)) is False


def test_interval_mass_below_uniform():
    law = uniform_table([1, 2])
    # t = 2/5: only cylinder [2]=(1/3,1/2] meets (0,t); [3]+ would be inside
    enc = law.interval_mass_below(RInt(Fraction(2, 5)))
    assert enc.lo == 0 and enc.hi == Fraction(1, 2)
    # t above 1 saturates
    assert law.interval_mass_below(RInt(Fraction(3, 2))).lo == 1
