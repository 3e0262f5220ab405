from __future__ import annotations

import io
import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from cyclozeta.arith import FactoredInteger, euler_phi, factorize
from cyclozeta.dedekind import (a_prime_companion, coefficient, coefficient_oracle,
                                coefficient_prime_power, coefficient_table, read_coefficients_csv,
                                splitting_data, verify_lemma1_part2, write_coefficients_csv)
from cyclozeta.errors import CapacityError, PreconditionError


def test_splitting_examples():
    s = splitting_data(11, 5)
    assert (s.e, s.f, s.g) == (1, 1, 4)
    s = splitting_data(2, 5)
    assert (s.e, s.f, s.g) == (1, 4, 1)
    s = splitting_data(2, 4)
    assert (s.e, s.f, s.g) == (2, 1, 1)
    s = splitting_data(3, 12)
    assert (s.e, s.f, s.g) == (2, 2, 1)


@given(st.sampled_from([3, 4, 5, 7, 8, 9, 12, 15, 16, 20]), st.integers(2, 3000))
def test_efg_equals_degree(d, p):
    if any(p % k == 0 for k in range(2, math.isqrt(p) + 1)):
        return
    s = splitting_data(p, d)
    assert s.e * s.f * s.g == euler_phi(d)


def test_coefficient_examples():
    assert coefficient(121, 5) == 10
    assert coefficient(143, 5) == 0
    assert coefficient(16, 5) == 1
    assert coefficient(1, 7) == 1
    assert a_prime_companion(77, 5) == Fraction(25, 4)
    assert a_prime_companion(1, 5) == 1


@pytest.mark.parametrize("d", [3, 4, 5, 7, 8, 12, 15])
def test_fast_path_matches_character_product(d):
    n_max = 3000
    oracle = coefficient_oracle(n_max, d)
    table = coefficient_table(n_max, d)
    assert table[1:].tolist() == oracle
    assert [coefficient(n, d) for n in range(1, 400)] == oracle[:399]


def test_quadratic_field_counts_representations():
    # Q(i): a(n) = (1/4) #{(x, y) : x^2 + y^2 = n}
    for n in range(1, 500):
        r = sum(1 for x in range(-23, 24) for y in range(-23, 24) if x * x + y * y == n)
        assert 4 * coefficient(n, 4) == r


@given(st.integers(1, 10**6), st.integers(1, 10**6), st.sampled_from([3, 5, 8, 12]))
def test_multiplicativity(m, n, d):
    if math.gcd(m, n) == 1:
        assert coefficient(m * n, d) == coefficient(m, d) * coefficient(n, d)


@given(st.sampled_from([3, 4, 5, 7, 11]), st.integers(1, 6))
def test_split_prime_powers(d, k):
    p = next(q for q in range(d + 1, 10**4, d)
             if all(q % r for r in range(2, math.isqrt(q) + 1)))
    phi = euler_phi(d)
    assert coefficient_prime_power(p, k, d) == math.comb(k + phi - 1, phi - 1)


@given(st.lists(st.sampled_from([7, 13, 19, 31, 37, 43, 61, 67]), unique=True),
       st.lists(st.sampled_from([7, 13, 19, 31, 37, 43, 61, 67]), unique=True))
def test_lower_bound_on_squarefree_products(ms, ns):
    m, n = FactoredInteger.from_primes(ms), FactoredInteger.from_primes(ns)
    assert verify_lemma1_part2(m, n, 3)


def test_lower_bound_rejects_bad_input():
    with pytest.raises(PreconditionError):
        verify_lemma1_part2(FactoredInteger.from_int(5), FactoredInteger.one(), 3)
    with pytest.raises(PreconditionError):
        verify_lemma1_part2(FactoredInteger.from_int(49), FactoredInteger.one(), 3)


def test_csv_round_trip():
    table = coefficient_table(200, 5)[1:]
    buf = io.StringIO()
    write_coefficients_csv(table, buf)
    buf.seek(0)
    assert read_coefficients_csv(buf) == table.tolist()
    with pytest.raises(PreconditionError):
        read_coefficients_csv(io.StringIO("x,y\n1,1\n"))


def test_errors():
    with pytest.raises(PreconditionError):
        coefficient(10, 2)
    with pytest.raises(CapacityError):
        coefficient_table(10**5, 5, capacity=10**4)
    with pytest.raises(PreconditionError):
        splitting_data(15, 5)


def test_factorize_used_by_coefficient_agrees():
    n = 2**3 * 3 * 11**2 * 31
    direct = math.prod(coefficient_prime_power(p, k, 5) for p, k in factorize(n).items())
    assert coefficient(n, 5) == direct
