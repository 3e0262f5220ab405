"""Dirichlet coefficients a(n) of the Dedekind zeta function of Q(zeta_d).

a(n) counts ideals of norm n.  The fast path uses the cyclotomic splitting
law prime by prime; ``coefficient_oracle`` rebuilds the same numbers from the
product of zeta(s) with the primitive L-series and never looks at splitting.
"""

from __future__ import annotations

import csv
import functools
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from .arith import (FactoredInteger, compositions_count, euler_phi, is_prime,
                    multiplicative_order, omega, primes_up_to)
from .characters import primitive_factors
from .errors import CapacityError, OracleMismatchError, PreconditionError

TABLE_CAPACITY = 6 * 10**7


@dataclass(frozen=True)
class SplittingData:
    """Ramification index e, residue degree f and number g of primes above p."""

    p: int
    d: int
    e: int
    f: int
    g: int


def _check_modulus(d: int) -> None:
    if d < 3:
        raise PreconditionError(f"cyclotomic modulus must be >= 3, got {d}")


@functools.lru_cache(maxsize=4096)
def splitting_data(p: int, d: int) -> SplittingData:
    _check_modulus(d)
    if not is_prime(p):
        raise PreconditionError(f"{p} is not prime")
    v, m = 0, d
    while m % p == 0:
        m //= p
        v += 1
    if v == 0:
        f = multiplicative_order(p, d)
        return SplittingData(p, d, 1, f, euler_phi(d) // f)
    # d = p^v m: totally ramified in Q(zeta_{p^v}), unramified in Q(zeta_m)
    f = multiplicative_order(p, m)
    return SplittingData(p, d, euler_phi(p**v), f, euler_phi(m) // f)


@functools.lru_cache(maxsize=65536)
def coefficient_prime_power(p: int, k: int, d: int) -> int:
    """a(p^k): the number of ideals of norm p^k."""
    if k < 0:
        raise PreconditionError("exponent must be >= 0")
    if k == 0:
        return 1
    s = splitting_data(p, d)
    return compositions_count(k // s.f, s.g) if k % s.f == 0 else 0


def coefficient(n: FactoredInteger | int, d: int) -> int:
    _check_modulus(d)
    if not isinstance(n, FactoredInteger):
        n = FactoredInteger.from_int(n)
    out = 1
    for p, k in n.factors:
        out *= coefficient_prime_power(p, k, d)
        if out == 0:
            break
    return out


def coefficient_table(n_max: int, d: int, *, capacity: int = TABLE_CAPACITY) -> np.ndarray:
    """a(0..n_max) as int64 (a(0) = 0), by a multiplicative sieve."""
    _check_modulus(d)
    if n_max > capacity:
        raise CapacityError(f"coefficient table size {n_max} exceeds capacity {capacity}")
    a = np.ones(n_max + 1, dtype=np.int64)
    a[0] = 0
    if n_max < 2:
        return a
    primes = primes_up_to(n_max)
    small = primes[primes <= math.isqrt(n_max)]
    for p in small:
        p = int(p)
        col = np.full(n_max // p, coefficient_prime_power(p, 1, d), dtype=np.int64)
        pk, k = p, 1
        while pk * p <= n_max:
            pk *= p
            k += 1
            step = pk // p
            col[step - 1 :: step] = coefficient_prime_power(p, k, d)
        a[p::p] *= col
    # for p > sqrt(n_max), a(p) depends only on p mod d (none of them divide d)
    large = primes[primes > math.isqrt(n_max)]
    by_value: dict[int, list[int]] = {}
    for r in range(d):
        if math.gcd(r, d) != 1:
            continue
        sel = large[large % d == r]
        if sel.size:
            val = coefficient_prime_power(int(sel[0]), 1, d)
            if val != 1:
                by_value.setdefault(val, []).append(sel)
    for val, chunks in by_value.items():
        for p in np.concatenate(chunks):
            a[p::p] *= val
    return a


def _dirichlet_convolve(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    n_max = x.size - 1
    out = np.zeros_like(x)
    for m in range(1, n_max + 1):
        if x[m] != 0:
            out[m::m] += x[m] * y[1 : n_max // m + 1]
    return out


def coefficient_oracle(n_max: int, d: int) -> list[int]:
    """a(1..n_max) as coefficients of zeta(s) * prod L(s, chi*) (index 0 holds a(1))."""
    _check_modulus(d)
    if n_max < 1:
        raise PreconditionError("n_max must be >= 1")
    n = np.arange(n_max + 1)
    series = np.ones(n_max + 1, dtype=complex)
    series[0] = 0
    for chi in primitive_factors(d):
        values = chi.values_array()
        seq = values[n % chi.modulus]
        seq[0] = 0
        series = _dirichlet_convolve(series, seq)
    out = np.rint(series.real)
    bad = (np.abs(series.real - out) > 1e-6) | (np.abs(series.imag) > 1e-6)
    if np.any(bad[1:]):
        k = int(np.flatnonzero(bad[1:])[0]) + 1
        raise OracleMismatchError(f"non-integral coefficient at n={k}: {series[k]}")
    return [int(v) for v in out[1:]]


def a_prime_companion(n: FactoredInteger | int, d: int) -> Fraction:
    """((phi(d) + 1) / 2) ** omega(n)."""
    _check_modulus(d)
    if not isinstance(n, FactoredInteger):
        n = FactoredInteger.from_int(n)
    return Fraction(euler_phi(d) + 1, 2) ** omega(n)


def _check_split_squarefree(x: FactoredInteger, d: int) -> None:
    if not x.is_squarefree() or any(p % d != 1 for p in x.primes):
        raise PreconditionError(f"{x} must be squarefree with all primes = 1 mod {d}")


def verify_lemma1_part2(m: FactoredInteger, n: FactoredInteger, d: int) -> bool:
    """Exact check of a(mn) >= a'(m) a(n)."""
    _check_split_squarefree(m, d)
    _check_split_squarefree(n, d)
    return coefficient(m * n, d) >= a_prime_companion(m, d) * coefficient(n, d)


def write_coefficients_csv(table: Iterable[int], stream: io.TextIOBase, start: int = 1) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["n", "a"])
    for i, v in enumerate(table, start=start):
        writer.writerow([i, int(v)])


def read_coefficients_csv(stream: io.TextIOBase) -> list[int]:
    reader = csv.reader(stream)
    header = next(reader)
    if header != ["n", "a"]:
        raise PreconditionError(f"unexpected header {header}")
    out = []
    for i, row in enumerate(reader, start=1):
        if int(row[0]) != i:
            raise PreconditionError(f"row {i} has index {row[0]}")
        out.append(int(row[1]))
    return out
