"""Exact elementary number theory.

Prime sieving (optionally restricted to an arithmetic progression), integers
held as prime/exponent vectors, multiplicative orders and the small
arithmetic functions the rest of the package needs.
"""

from __future__ import annotations

import functools
import math
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import CapacityError, PreconditionError

DEFAULT_SIEVE_CAPACITY = 10**8
SEGMENT_SIZE = 1 << 21
LOG_SLACK = 1e-12

CACHE_ENV = "CYCLOZETA_CACHE"
_PRIME_MAGIC = b"CZPRIME1"
_HEADER = struct.Struct("<8sQ")


# ---------------------------------------------------------------------------
# Sieving
# ---------------------------------------------------------------------------

def _simple_sieve(n: int) -> np.ndarray:
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    flags[4::2] = False
    for p in range(3, math.isqrt(n) + 1, 2):
        if flags[p]:
            flags[p * p :: 2 * p] = False
    return np.flatnonzero(flags).astype(np.int64)


def _segmented(lo: int, hi: int) -> np.ndarray:
    """Primes in the closed integer range [lo, hi]."""
    lo = max(lo, 2)
    if hi < lo:
        return np.zeros(0, dtype=np.int64)
    base = _simple_sieve(math.isqrt(hi))
    out = []
    start = lo
    while start <= hi:
        stop = min(start + SEGMENT_SIZE - 1, hi)
        flags = np.ones(stop - start + 1, dtype=bool)
        for p in base:
            p = int(p)
            if p * p > stop:
                break
            first = max(p * p, ((start + p - 1) // p) * p)
            if first <= stop:
                flags[first - start :: p] = False
        out.append(np.flatnonzero(flags).astype(np.int64) + start)
        start = stop + 1
    return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)


def _cache_dir(cache_dir: str | os.PathLike | None) -> Path | None:
    if cache_dir is not None:
        return Path(cache_dir)
    env = os.environ.get(CACHE_ENV)
    return Path(env) if env else None


def save_prime_table(path: str | os.PathLike, primes: np.ndarray, capacity: int) -> None:
    """Write primes <= capacity as little-endian int64 behind a 16-byte header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(_HEADER.pack(_PRIME_MAGIC, capacity))
        fh.write(np.asarray(primes, dtype="<i8").tobytes())
    os.replace(tmp, path)


def load_prime_table(path: str | os.PathLike) -> tuple[int, np.ndarray] | None:
    """Read a table written by :func:`save_prime_table`; None if absent or corrupt."""
    try:
        raw = Path(path).read_bytes()
    except OSError:
        return None
    if len(raw) < _HEADER.size or (len(raw) - _HEADER.size) % 8:
        return None
    magic, capacity = _HEADER.unpack_from(raw)
    if magic != _PRIME_MAGIC:
        return None
    primes = np.frombuffer(raw, dtype="<i8", offset=_HEADER.size).astype(np.int64)
    if primes.size and (primes[0] != 2 or primes[-1] > capacity or np.any(np.diff(primes) <= 0)):
        return None
    return int(capacity), primes


@functools.lru_cache(maxsize=4)
def _primes_up_to_cached(n: int, cache_dir: str | None) -> np.ndarray:
    directory = _cache_dir(cache_dir)
    if directory is not None:
        for entry in sorted(directory.glob("primes-*.bin")):
            loaded = load_prime_table(entry)
            if loaded is not None and loaded[0] >= n:
                cap, table = loaded
                return table[: np.searchsorted(table, n, side="right")]
    primes = _segmented(2, n)
    if directory is not None and n >= 10**6:
        save_prime_table(directory / f"primes-{n}.bin", primes, n)
    primes.setflags(write=False)
    return primes


def primes_up_to(n: int, *, capacity: int = DEFAULT_SIEVE_CAPACITY,
                 cache_dir: str | os.PathLike | None = None) -> np.ndarray:
    """All primes <= n as an int64 array (read-only)."""
    n = int(n)
    if n > capacity:
        raise CapacityError(f"sieve limit {n} exceeds capacity {capacity}")
    d = _cache_dir(cache_dir)
    return _primes_up_to_cached(n, str(d) if d is not None else None)


def sieve_primes_in_ap(lo: float, hi: float, d: int, residue: int, *,
                       capacity: int = DEFAULT_SIEVE_CAPACITY) -> list[int]:
    """Primes p with lo < p <= hi and p = residue (mod d), ascending.

    >>> sieve_primes_in_ap(0, 20, 3, 1)
    [7, 13, 19]
    """
    if lo < 0 or not hi > lo:
        raise PreconditionError(f"need 0 <= lo < hi, got ({lo}, {hi})")
    if d < 1:
        raise PreconditionError("modulus d must be >= 1")
    if d > 1 and math.gcd(residue, d) != 1:
        raise PreconditionError(f"gcd(residue={residue}, d={d}) != 1")
    top = math.floor(hi)
    if top > capacity:
        raise CapacityError(f"sieve limit {top} exceeds capacity {capacity}")
    bottom = math.floor(lo) + 1
    if top < bottom:
        return []
    primes = _segmented(bottom, top)
    if d > 1:
        primes = primes[primes % d == residue % d]
    return [int(p) for p in primes]


def prime_pi(x: float, d: int = 1, residue: int = 1, *,
             capacity: int = DEFAULT_SIEVE_CAPACITY) -> int:
    """Count of primes <= x (in the class residue mod d when d > 1)."""
    top = math.floor(x)
    if top > capacity:
        raise CapacityError(f"sieve limit {top} exceeds capacity {capacity}")
    primes = primes_up_to(top, capacity=capacity)
    if d > 1:
        return int(np.count_nonzero(primes % d == residue % d))
    return int(primes.size)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    if n < 41 * 41:
        return True
    # deterministic Miller-Rabin for n < 3.3e24
    dd, s = n - 1, 0
    while dd % 2 == 0:
        dd //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41):
        x = pow(a, dd, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def factorize(n: int) -> dict[int, int]:
    """Trial-division factorisation of a machine-sized positive integer."""
    if n < 1:
        raise PreconditionError(f"cannot factor {n}")
    out: dict[int, int] = {}
    for p in (2, 3):
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
    f = 5
    while f * f <= n:
        for p in (f, f + 2):
            while n % p == 0:
                out[p] = out.get(p, 0) + 1
                n //= p
        f += 6
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


# ---------------------------------------------------------------------------
# Factored integers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FactoredInteger:
    """A positive integer stored as its sorted (prime, exponent) pairs.

    The integer value itself is never formed in the arithmetic; sizes are
    compared through ``log_value``.
    """

    factors: tuple[tuple[int, int], ...] = ()
    log_value: float = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        facs = tuple((int(p), int(e)) for p, e in self.factors)
        prev = 1
        for p, e in facs:
            if p <= prev or e < 1:
                raise PreconditionError(f"malformed factorisation {facs}")
            prev = p
        object.__setattr__(self, "factors", facs)
        object.__setattr__(self, "log_value",
                           math.fsum(e * math.log(p) for p, e in facs))

    # constructors -------------------------------------------------------
    @classmethod
    def one(cls) -> "FactoredInteger":
        return _ONE

    @classmethod
    def from_int(cls, n: int) -> "FactoredInteger":
        return cls.from_mapping(factorize(int(n)))

    @classmethod
    def from_mapping(cls, exps: Mapping[int, int]) -> "FactoredInteger":
        return cls(tuple(sorted((p, e) for p, e in exps.items() if e)))

    @classmethod
    def from_primes(cls, primes: Iterable[int]) -> "FactoredInteger":
        """Squarefree product of distinct primes."""
        return cls(tuple((p, 1) for p in sorted(set(primes))))

    # accessors ----------------------------------------------------------
    def as_dict(self) -> dict[int, int]:
        return dict(self.factors)

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factors)

    def exponent(self, p: int) -> int:
        for q, e in self.factors:
            if q == p:
                return e
            if q > p:
                break
        return 0

    def is_one(self) -> bool:
        return not self.factors

    def is_squarefree(self) -> bool:
        return all(e == 1 for _, e in self.factors)

    def __int__(self) -> int:
        out = 1
        for p, e in self.factors:
            out *= p**e
        return out

    def __str__(self) -> str:
        return " ".join(f"{p}:{e}" for p, e in self.factors) or "1"

    # arithmetic ---------------------------------------------------------
    def _combine(self, other: "FactoredInteger", op) -> "FactoredInteger":
        a, b = self.as_dict(), other.as_dict()
        out = {p: op(a.get(p, 0), b.get(p, 0)) for p in a.keys() | b.keys()}
        return FactoredInteger.from_mapping(out)

    def __mul__(self, other: "FactoredInteger") -> "FactoredInteger":
        return self._combine(other, lambda x, y: x + y)

    def __truediv__(self, other: "FactoredInteger") -> "FactoredInteger":
        if not other.divides(self):
            raise PreconditionError(f"{other} does not divide {self}")
        return self._combine(other, lambda x, y: x - y)

    def gcd(self, other: "FactoredInteger") -> "FactoredInteger":
        return self._combine(other, min)

    def lcm(self, other: "FactoredInteger") -> "FactoredInteger":
        return self._combine(other, max)

    def divides(self, other: "FactoredInteger") -> bool:
        theirs = other.as_dict()
        return all(theirs.get(p, 0) >= e for p, e in self.factors)

    def coprime(self, other: "FactoredInteger") -> bool:
        return not (set(self.primes) & set(other.primes))


_ONE = FactoredInteger()


def compare(m: FactoredInteger, n: FactoredInteger) -> int:
    """Order by magnitude with a relative log slack, ties broken on exponent vectors."""
    a, b = m.log_value, n.log_value
    if abs(a - b) > LOG_SLACK * max(1.0, abs(a), abs(b)):
        return -1 if a < b else 1
    if m.factors == n.factors:
        return 0
    return -1 if m.factors < n.factors else 1


sort_key = functools.cmp_to_key(compare)


def gcd_lcm(m: FactoredInteger, n: FactoredInteger) -> tuple[FactoredInteger, FactoredInteger]:
    return m.gcd(n), m.lcm(n)


def ratio_log(m: FactoredInteger, n: FactoredInteger) -> float:
    """ln(gcd(m, n) / lcm(m, n)), always <= 0.

    Only the exponent differences |e_p(m) - e_p(n)| enter, so a single fsum of
    exact integer multiples of ln p is formed.
    """
    a, b = m.as_dict(), n.as_dict()
    return -math.fsum(abs(a.get(p, 0) - b.get(p, 0)) * math.log(p)
                      for p in a.keys() | b.keys())


def omega(n: FactoredInteger) -> int:
    return len(n.factors)


def p_plus(n: FactoredInteger) -> int:
    """Largest prime factor, with P+(1) = 1."""
    return n.factors[-1][0] if n.factors else 1


def euler_phi(d: int) -> int:
    if d < 1:
        raise PreconditionError("euler_phi needs d >= 1")
    out = d
    for p in factorize(d):
        out = out // p * (p - 1)
    return out


def divisors(n: int) -> list[int]:
    out = [1]
    for p, e in factorize(n).items():
        out = [x * p**k for x in out for k in range(e + 1)]
    return sorted(out)


def multiplicative_order(p: int, m: int) -> int:
    """Smallest f >= 1 with p**f = 1 (mod m)."""
    if m < 1:
        raise PreconditionError("modulus must be >= 1")
    if m == 1:
        return 1
    if math.gcd(p, m) != 1:
        raise PreconditionError(f"gcd({p}, {m}) > 1: no multiplicative order")
    for f in divisors(euler_phi(m)):
        if pow(p, f, m) == 1:
            return f
    raise AssertionError("unreachable: order divides phi(m)")


_INT64_MAX = 2**63 - 1


def compositions_count(j: int, r: int) -> int:
    """Number of ways to write j as an ordered sum of r non-negative integers."""
    if j < 0 or r < 1:
        raise PreconditionError(f"need j >= 0 and r >= 1, got ({j}, {r})")
    out = 1
    for i in range(1, r):
        out = out * (j + i) // i
        if out > _INT64_MAX:
            raise OverflowError(f"C({j + r - 1}, {r - 1}) exceeds 64 bits")
    return out


def iterated_log(x: float, k: int) -> float:
    """log applied k times; log_2 x = log log x."""
    for _ in range(k):
        x = math.log(x)
    return x


def lcal(x: float) -> float:
    """The growth scale exp(sqrt(log x log_3 x / log_2 x)), defined for x > 16."""
    if not x > 16:
        raise PreconditionError("L(x) is defined for x > 16")
    return math.exp(math.sqrt(math.log(x) * iterated_log(x, 3) / iterated_log(x, 2)))


def product(values: Sequence[FactoredInteger]) -> FactoredInteger:
    out = _ONE
    for v in values:
        out = out * v
    return out
