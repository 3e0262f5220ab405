from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cyclozeta import arith
from cyclozeta.arith import (FactoredInteger, compare, compositions_count, divisors, euler_phi,
                             gcd_lcm, is_prime, iterated_log, lcal, load_prime_table,
                             multiplicative_order, omega, p_plus, prime_pi, primes_up_to,
                             ratio_log, save_prime_table, sieve_primes_in_ap)
from cyclozeta.errors import CapacityError, PreconditionError

F = FactoredInteger.from_int


def trial_division_primes(lo: int, hi: int) -> list[int]:
    return [n for n in range(max(lo + 1, 2), hi + 1)
            if all(n % k for k in range(2, math.isqrt(n) + 1))]


def test_sieve_in_progression_examples():
    assert sieve_primes_in_ap(2, 20, 5, 1) == [11]
    assert sieve_primes_in_ap(0, 20, 3, 1) == [7, 13, 19]
    assert sieve_primes_in_ap(10, 10.5, 3, 1) == []


def test_sieve_matches_trial_division():
    for lo, hi in [(0, 2), (0, 3), (1, 1000), (997, 2048), (5000, 7919)]:
        assert primes_up_to(hi)[primes_up_to(hi) > lo].tolist() == trial_division_primes(lo, hi)


def test_segment_boundaries():
    # span several segments so that the segmented path is exercised
    hi = 3 * arith.SEGMENT_SIZE + 17
    primes = arith._segmented(2, hi)
    reference = arith._simple_sieve(hi)
    assert np.array_equal(primes, reference)


def test_progressions_partition_the_primes():
    lo, hi, d = 100, 50000, 12
    total = sum(len(sieve_primes_in_ap(lo, hi, d, r)) for r in range(d) if math.gcd(r, d) == 1)
    ramified = [p for p in (2, 3) if lo < p <= hi]
    assert total + len(ramified) == len(trial_division_primes(lo, hi))


def test_sieve_errors():
    with pytest.raises(CapacityError):
        sieve_primes_in_ap(0, 10**6, 3, 1, capacity=10**5)
    with pytest.raises(PreconditionError):
        sieve_primes_in_ap(0, 100, 6, 3)
    with pytest.raises(PreconditionError):
        sieve_primes_in_ap(50, 10, 3, 1)


def test_prime_counts():
    assert prime_pi(10**6) == 78498
    assert prime_pi(100, 4, 1) == 11


def test_prime_table_round_trip(tmp_path):
    primes = primes_up_to(10**4)
    path = tmp_path / "p.bin"
    save_prime_table(path, primes, 10**4)
    cap, loaded = load_prime_table(path)
    assert cap == 10**4 and np.array_equal(loaded, primes)
    raw = bytearray(path.read_bytes())
    raw[0] ^= 0xFF
    path.write_bytes(bytes(raw))
    assert load_prime_table(path) is None
    path.write_bytes(b"short")
    assert load_prime_table(path) is None


def test_prime_cache_directory_is_used(tmp_path):
    arith._primes_up_to_cached.cache_clear()
    first = primes_up_to(10**6, cache_dir=tmp_path)
    assert list(tmp_path.glob("primes-*.bin"))
    arith._primes_up_to_cached.cache_clear()
    again = primes_up_to(5 * 10**5, cache_dir=tmp_path)
    assert np.array_equal(again, first[first <= 5 * 10**5])


def test_is_prime_against_sieve():
    table = set(primes_up_to(20000).tolist())
    assert all(is_prime(n) == (n in table) for n in range(20000))
    assert is_prime(2**61 - 1) and not is_prime(2**61 + 1)


def test_multiplicative_order_examples():
    assert multiplicative_order(11, 5) == 1
    assert multiplicative_order(2, 5) == 4
    assert multiplicative_order(3, 4) == 2
    assert multiplicative_order(7, 1) == 1
    with pytest.raises(PreconditionError):
        multiplicative_order(6, 4)


@given(st.integers(2, 500), st.integers(1, 500))
def test_order_divides_phi(p, m):
    if math.gcd(p, m) != 1:
        return
    f = multiplicative_order(p, m)
    assert euler_phi(m) % f == 0
    assert pow(p, f, m) == 1 % m
    assert all(pow(p, k, m) != 1 % m for k in range(1, f))


def test_compositions_examples():
    assert compositions_count(0, 7) == 1
    assert compositions_count(3, 2) == 4
    assert compositions_count(2, 3) == 6
    with pytest.raises(OverflowError):
        compositions_count(200, 200)


@given(st.integers(0, 30), st.integers(1, 30))
def test_compositions_binomial(j, r):
    assert compositions_count(j, r) == math.comb(j + r - 1, r - 1)


def test_gcd_lcm_and_ratio_examples():
    g, l = gcd_lcm(F(12), F(18))
    assert (int(g), int(l)) == (6, 36)
    g, l = gcd_lcm(F(30), FactoredInteger.one())
    assert g.is_one() and int(l) == 30
    g, l = gcd_lcm(F(7), F(11))
    assert g.is_one() and int(l) == 77
    assert ratio_log(F(9), F(9)) == 0
    assert ratio_log(F(2), F(8)) == pytest.approx(-math.log(4), rel=1e-15)
    assert ratio_log(F(12), F(18)) == pytest.approx(-math.log(6), rel=1e-15)


def test_small_accessors():
    assert euler_phi(5) == 4 and euler_phi(1) == 1 and euler_phi(12) == 4
    assert omega(F(12)) == 2 and omega(FactoredInteger.one()) == 0
    assert p_plus(FactoredInteger.one()) == 1 and p_plus(F(90)) == 5
    assert divisors(12) == [1, 2, 3, 4, 6, 12]


small_ints = st.integers(1, 10**9)


@given(small_ints, small_ints)
def test_factored_gcd_lcm_match_integers(m, n):
    fm, fn = F(m), F(n)
    assert int(fm.gcd(fn)) == math.gcd(m, n)
    assert int(fm.lcm(fn)) == math.lcm(m, n)
    assert fm.gcd(fn) * fm.lcm(fn) == fm * fn
    assert int(fm * fn) == m * n
    assert fm.divides(fn) == (n % m == 0)
    assert fm.coprime(fn) == (math.gcd(m, n) == 1)


@given(small_ints, small_ints)
def test_compare_matches_integer_order(m, n):
    assert compare(F(m), F(n)) == (m > n) - (m < n)


@given(small_ints)
def test_log_value_and_text(n):
    fn = F(n)
    assert fn.log_value == pytest.approx(math.log(n), rel=1e-12, abs=1e-15)
    text = str(fn)
    back = FactoredInteger(tuple(tuple(int(x) for x in tok.split(":")) for tok in text.split())) \
        if text != "1" else FactoredInteger.one()
    assert back == fn


def test_division_requires_divisibility():
    assert int(F(36) / F(4)) == 9
    with pytest.raises(PreconditionError):
        F(10) / F(4)


def test_invalid_factorisations_rejected():
    with pytest.raises(PreconditionError):
        FactoredInteger(((3, 1), (2, 1)))
    with pytest.raises(PreconditionError):
        FactoredInteger(((2, 0),))


def test_iterated_logs():
    assert iterated_log(math.e**math.e, 2) == pytest.approx(1.0)
    assert lcal(10**6) == pytest.approx(math.exp(math.sqrt(
        math.log(1e6) * iterated_log(1e6, 3) / iterated_log(1e6, 2))))
    with pytest.raises(PreconditionError):
        lcal(16)
