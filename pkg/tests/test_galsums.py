from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from cyclozeta.arith import FactoredInteger
from cyclozeta.dedekind import coefficient
from cyclozeta.errors import PreconditionError
from cyclozeta.galsums import (gal_sum, gal_sum_truncated, gal_sum_weighted, max_ratio_log,
                               rankin_check, rankin_profile, component_bound_sides, report, sigma_sum,
                               trend_slope, truncated_profile, verify_gcd_identity,
                               verify_lemma2, cofactor_bound_sides)
from cyclozeta.resonator import build_params, synthetic_set
from cyclozeta.suites import construction

F = FactoredInteger.from_int


def brute_weighted(ms: list[int], d: int, alpha: float, X: float = math.inf) -> float:
    total = []
    for m in ms:
        for n in ms:
            g, l = math.gcd(m, n), math.lcm(m, n)
            if l / g <= X:
                total.append(coefficient(m // g, d) * coefficient(n // g, d) * (g / l) ** alpha)
    return math.fsum(total)


def test_plain_examples():
    assert gal_sum([F(1)], 0.5) == 1
    assert gal_sum([F(1), F(2)], 0.5) == pytest.approx(2 + math.sqrt(2), rel=1e-15)
    assert gal_sum([F(2), F(3)], 1.0) == pytest.approx(2 + 2 / 6, rel=1e-15)


def test_weighted_examples():
    assert gal_sum_weighted([F(1)], 5, 0.5) == 1
    assert gal_sum_weighted([F(1), F(11)], 5, 0.5) == pytest.approx(2 + 8 / math.sqrt(11), rel=1e-14)
    assert gal_sum_weighted([F(11), F(31)], 5, 0.5) == pytest.approx(2 + 32 / math.sqrt(341), rel=1e-14)
    assert gal_sum_truncated([F(1), F(11)], 5, 0.5, 10) == 2
    assert gal_sum_truncated([F(1), F(11)], 5, 0.5, 1) == 2


def test_rankin_examples():
    M = [F(1), F(11)]
    assert rankin_check(M, 5, 10)
    assert rankin_check(M, 5, 1)
    assert rankin_check(M, 5, 11)


def test_alpha_range():
    with pytest.raises(PreconditionError):
        gal_sum([F(1)], 0.0)
    with pytest.raises(PreconditionError):
        gal_sum_truncated([F(1)], 5, 0.5, 0.5)


element_lists = st.lists(st.integers(1, 5000), min_size=1, max_size=25, unique=True)


@given(element_lists, st.sampled_from([3, 4, 5]), st.sampled_from([1 / 3, 0.5, 1.0]))
def test_weighted_matches_brute_force(ms, d, alpha):
    fs = [F(m) for m in ms]
    assert gal_sum_weighted(fs, d, alpha) == pytest.approx(brute_weighted(ms, d, alpha),
                                                           rel=1e-12)


@given(element_lists, st.floats(1, 1e4))
def test_truncation_matches_brute_force(ms, X):
    fs = [F(m) for m in ms]
    got = gal_sum_truncated(fs, 3, 0.5, X)
    # pairs with ratio within rounding of X may fall either way
    lo, hi = brute_weighted(ms, 3, 0.5, X * (1 - 1e-9)), brute_weighted(ms, 3, 0.5, X * (1 + 1e-9))
    assert lo * (1 - 1e-12) <= got <= hi * (1 + 1e-12)


@given(element_lists)
def test_order_and_thread_invariance(ms):
    fs = [F(m) for m in ms]
    a = gal_sum_weighted(fs, 5, 0.5)
    assert gal_sum_weighted(fs[::-1], 5, 0.5) == a
    assert gal_sum_weighted(fs, 5, 0.5, threads=3) == a


def test_large_set_thread_and_reversal_bit_identical():
    M = list(construction(3, 2**11).elements)
    a = gal_sum_weighted(M, 3, 0.5)
    assert gal_sum_weighted(M[::-1], 3, 0.5, threads=4) == a


def test_product_over_components():
    M = construction(3, 2**12)
    total = gal_sum_weighted(list(M.elements), 3, 0.5)
    parts = [gal_sum_weighted([e.value for e in comp], 3, 0.5) for comp in M.components]
    assert total == pytest.approx(math.prod(parts), rel=1e-12)
    # exactly on a tiny two-component instance with rational arithmetic at alpha = 1
    A, B = synthetic_set(3, [7, 13], 2), synthetic_set(3, [19, 31], 2)
    prod_set = [a * b for a in A for b in B]

    def exact(ms):
        out = Fraction(0)
        for m in ms:
            for n in ms:
                g, l = m.gcd(n), m.lcm(n)
                out += coefficient(m / g, 3) * coefficient(n / g, 3) * Fraction(int(g), int(l))
        return out
    assert exact(prod_set) == exact(A) * exact(B)


def test_truncated_profile_monotone_and_full():
    M = list(construction(3, 2**10).elements)
    hi = math.exp(max_ratio_log(M))
    cutoffs = [1, 2, 10, 100, hi / 2, hi]
    prof = truncated_profile(M, 3, 0.5, cutoffs)
    vals = [prof[X] for X in cutoffs]
    assert vals == sorted(vals)
    assert vals[0] == len(M)
    assert vals[-1] == pytest.approx(gal_sum_weighted(M, 3, 0.5), rel=1e-12)
    assert all(ok for *_, ok in rankin_profile(M, 3, cutoffs))


def test_sigma_sum_examples():
    params = build_params(3, 10**6, u=math.e, b=1.2, gamma=0.3)
    lev = params.level(1)
    assert sigma_sum(params, 1, 0, FactoredInteger.one()) == 1
    e1 = sigma_sum(params, 1, 1, FactoredInteger.one())
    assert e1 == pytest.approx(1 + sum(2 / math.sqrt(p) for p in lev.primes), rel=1e-14)
    without = sigma_sum(params, 1, 1, FactoredInteger.from_primes(lev.primes))
    assert without == 1


def test_pair_checks_on_diagonal_and_small_component():
    M = construction(3, 2**12)
    k = next(lev.k for lev in M.params.levels if lev.P > 0)
    for e in M.components[k - 1][:20]:
        lhs, rhs = cofactor_bound_sides(k, e.value, e.value, M.params)
        assert lhs == 1 and rhs == 1
        assert verify_gcd_identity(k, e.value, e.value, M.params)
    comp = M.components[k - 1]
    for a in comp[:15]:
        for b in comp[:15]:
            assert verify_lemma2(k, a.value, b.value, M.params)
            assert verify_gcd_identity(k, a.value, b.value, M.params)


@pytest.mark.parametrize("primes,J", [([7], 2), ([7, 13], 2), ([7, 13, 19], 4),
                                      ([7, 13, 19, 31], 4), ([7, 13, 19, 31], 0)])
def test_component_sum_lower_bound(primes, J):
    lhs, rhs = component_bound_sides(3, primes, J)
    assert lhs >= rhs * (1 - 1e-12)


def test_report_trivial_and_trend():
    M = construction(3, 2**9)
    r = report(M, truncation_points=5)
    assert r.size == len(M)
    assert r.normalized == pytest.approx(r.s_half_weighted / r.size)
    assert list(r.truncated.values()) == sorted(r.truncated.values())
    assert r.to_text().startswith("d = 3")
    assert trend_slope([r]) is None
    assert trend_slope([r, report(construction(3, 2**11), truncation_points=3)]) > 0
