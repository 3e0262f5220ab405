"""The multiplicative resonator set built from primes = 1 (mod d).

For each level k the primes of I_k (those = 1 mod d in a geometric window
above log N log_2 N) multiply to N_k, and the component M_k collects the
integers (l/q) N_k with l, q coprime divisors of N_k carrying at most J_k/2
primes each.  The resonator set M is the product set of the components.
"""

from __future__ import annotations

import io
import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

from .arith import (FactoredInteger, euler_phi, iterated_log, prime_pi,
                    sieve_primes_in_ap, sort_key)
from .errors import (AdmissibilityError, ConstructionError, DecompositionError,
                     PreconditionError)

DEFAULT_U = 2.4
DEFAULT_B = 2.0
DEFAULT_GAMMA = 0.3
BLOWUP_FACTOR = 10


class RegimeWarning(UserWarning):
    """d is large compared with (log_2 N)^2; the construction is outside its regime."""


def h_constant(u: float, b: float) -> float:
    return math.e**2 * b * (math.sqrt(u) - 1) / (math.sqrt(u) + 1)


def optimal_lambda(u: float, b: float) -> float:
    return math.sqrt(h_constant(u, b)) / math.e


@dataclass(frozen=True)
class Level:
    k: int
    lower: float
    upper: float
    primes: tuple[int, ...]
    J: int
    j: int

    @property
    def P(self) -> int:
        return len(self.primes)

    @property
    def N_k(self) -> FactoredInteger:
        return FactoredInteger.from_primes(self.primes)


@dataclass(frozen=True)
class ResonatorParams:
    d: int
    N: int
    u: float
    b: float
    gamma: float
    lam: float
    levels: tuple[Level, ...]

    @property
    def phi(self) -> int:
        return euler_phi(self.d)

    @property
    def K_levels(self) -> int:
        return len(self.levels)

    @property
    def h(self) -> float:
        return h_constant(self.u, self.b)

    def level(self, k: int) -> Level:
        if not 1 <= k <= self.K_levels:
            raise PreconditionError(f"level {k} outside 1..{self.K_levels}")
        return self.levels[k - 1]

    def header(self) -> dict[str, str]:
        return {"d": str(self.d), "N": str(self.N), "u": repr(self.u), "b": repr(self.b),
                "gamma": repr(self.gamma), "lambda": repr(self.lam)}


def budget_J(N: int, k: int, phi: int, b: float) -> int:
    log_n, log3 = math.log(N), iterated_log(N, 3)
    return 2 * math.floor(b * log_n / (2 * k * k * phi * log3))


def budget_j(N: int, k: int, lam: float) -> int:
    log_n, log2, log3 = math.log(N), iterated_log(N, 2), iterated_log(N, 3)
    return math.floor(lam / k * math.sqrt(log_n / (log2 * log3)))


def build_params(d: int, N: int, u: float = DEFAULT_U, b: float = DEFAULT_B,
                 gamma: float = DEFAULT_GAMMA, lam: float | None = None) -> ResonatorParams:
    """Validate the parameters and compute every per-level quantity."""
    if d < 3:
        raise PreconditionError(f"d must be >= 3, got {d}")
    if not N > 16:
        raise PreconditionError(f"N must exceed 16, got {N}")
    if not 1 < u <= math.e:
        raise AdmissibilityError(f"u must lie in (1, e], got {u}")
    if not b > 1:
        raise AdmissibilityError(f"b must exceed 1, got {b}")
    if not 0 < gamma < 1:
        raise AdmissibilityError(f"gamma must lie in (0, 1), got {gamma}")
    if not b * gamma < 1 / math.log(u):
        raise AdmissibilityError(
            f"b*gamma = {b * gamma:.6g} must be < 1/log(u) = {1 / math.log(u):.6g}")
    lam = optimal_lambda(u, b) if lam is None else lam
    if not lam > 0:
        raise PreconditionError("lambda must be positive")
    phi = euler_phi(d)
    log_n, log2 = math.log(N), iterated_log(N, 2)
    if d > log2**2:
        warnings.warn(f"d = {d} exceeds (log_2 N)^2 = {log2**2:.3g}", RegimeWarning,
                      stacklevel=2)
    n_levels = math.floor(log2 ** (gamma * phi))
    base = log_n * log2
    levels = []
    for k in range(1, n_levels + 1):
        lo, hi = u**k * base, u ** (k + 1) * base
        primes = tuple(sieve_primes_in_ap(lo, hi, d, 1))
        levels.append(Level(k, lo, hi, primes, budget_J(N, k, phi, b), budget_j(N, k, lam)))
    return ResonatorParams(d, N, u, b, gamma, lam, tuple(levels))


# ---------------------------------------------------------------------------
# Components and the product set
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComponentElement:
    value: FactoredInteger
    ell: FactoredInteger
    q: FactoredInteger


def component_size(P: int, J: int) -> int:
    half = J // 2
    return sum(math.comb(P, i) * math.comb(P - i, j)
               for i in range(min(half, P) + 1) for j in range(min(half, P - i) + 1))


def component_elements(primes: Sequence[int], J: int) -> list[ComponentElement]:
    """All (l/q) N with l, q disjoint subsets of ``primes`` of size <= J/2."""
    half = max(J, 0) // 2
    primes = tuple(sorted(primes))
    out = []
    for i in range(min(half, len(primes)) + 1):
        for ell in itertools.combinations(primes, i):
            rest = [p for p in primes if p not in ell]
            for j in range(min(half, len(rest)) + 1):
                for q in itertools.combinations(rest, j):
                    exps = {p: 1 for p in primes}
                    for p in ell:
                        exps[p] = 2
                    for p in q:
                        del exps[p]
                    out.append(ComponentElement(FactoredInteger.from_mapping(exps),
                                                FactoredInteger.from_primes(ell),
                                                FactoredInteger.from_primes(q)))
    out.sort(key=lambda e: sort_key(e.value))
    return out


def decompose(m: FactoredInteger, primes: Sequence[int], J: int) -> ComponentElement:
    """Recover (l, q) from m = (l/q) N_k and check it belongs to the component."""
    pset = set(primes)
    exps = m.as_dict()
    if not set(exps) <= pset or any(e > 2 for e in exps.values()):
        raise DecompositionError(f"{m} is not of the form (l/q) N_k over {sorted(pset)}")
    ell = [p for p, e in exps.items() if e == 2]
    q = [p for p in pset if p not in exps]
    if len(ell) > J // 2 or len(q) > J // 2:
        raise DecompositionError(f"{m} exceeds the omega budget J/2 = {J // 2}")
    return ComponentElement(m, FactoredInteger.from_primes(ell), FactoredInteger.from_primes(q))


@dataclass(frozen=True)
class ResonatorSet:
    params: ResonatorParams
    components: tuple[tuple[ComponentElement, ...], ...]
    elements: tuple[FactoredInteger, ...]

    def __len__(self) -> int:
        return len(self.elements)

    def component_values(self, k: int) -> list[FactoredInteger]:
        return [e.value for e in self.components[k - 1]]

    def decompose(self, k: int, m: FactoredInteger) -> ComponentElement:
        lev = self.params.level(k)
        return decompose(m, lev.primes, lev.J)

    def to_text(self) -> str:
        buf = io.StringIO()
        for key, val in self.params.header().items():
            buf.write(f"# {key} = {val}\n")
        buf.write(f"# size = {len(self.elements)}\n")
        for m in self.elements:
            buf.write(f"{m}\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "ResonatorSet":
        header, rows = {}, []
        for line in text.splitlines():
            if line.startswith("#"):
                key, val = line[1:].split("=", 1)
                header[key.strip()] = val.strip()
            elif line.strip():
                rows.append(_parse_element(line))
        with warnings.catch_warnings():
            # the regime warning was already issued when the set was first built
            warnings.simplefilter("ignore", RegimeWarning)
            params = build_params(int(header["d"]), int(header["N"]), float(header["u"]),
                                  float(header["b"]), float(header["gamma"]),
                                  float(header["lambda"]))
        if int(header["size"]) != len(rows):
            raise PreconditionError("element count does not match the header")
        comps = []
        for lev in params.levels:
            pset = set(lev.primes)
            seen = {FactoredInteger.from_mapping({p: e for p, e in m.factors if p in pset})
                    for m in rows}
            comps.append(tuple(sorted((decompose(v, lev.primes, lev.J) for v in seen),
                                      key=lambda e: sort_key(e.value))))
        return cls(params, tuple(comps), tuple(rows))


def _parse_element(line: str) -> FactoredInteger:
    line = line.strip()
    if line == "1":
        return FactoredInteger.one()
    return FactoredInteger(tuple(tuple(int(x) for x in tok.split(":")) for tok in line.split()))


def build_set(params: ResonatorParams) -> ResonatorSet:
    """Enumerate every component and form the deduplicated product set."""
    expected = 1
    for lev in params.levels:
        expected *= component_size(lev.P, lev.J)
        if expected > BLOWUP_FACTOR * params.N:
            raise ConstructionError(
                f"enumeration would exceed {BLOWUP_FACTOR}*N = {BLOWUP_FACTOR * params.N} "
                f"candidates (level {lev.k}, P_k = {lev.P}, J_k = {lev.J})")
    components = tuple(tuple(component_elements(lev.primes, lev.J)) for lev in params.levels)
    products = [FactoredInteger.one()]
    for comp in components:
        products = [m * e.value for m in products for e in comp]
    elements = tuple(sorted(set(products), key=sort_key))
    if len(elements) > params.N:
        raise ConstructionError(f"|M| = {len(elements)} exceeds N = {params.N}")
    return ResonatorSet(params, components, elements)


def siegel_walfisz_check(x: float, d: int) -> float:
    """pi(x; d, 1) * phi(d) / pi(x), computed exactly by sieving."""
    if x < 1e3:
        raise PreconditionError("x must be at least 1000")
    return prime_pi(x, d, 1) * euler_phi(d) / prime_pi(x)


def synthetic_set(d: int, primes: Iterable[int], J: int) -> list[FactoredInteger]:
    """A single stand-alone component over the given primes (for small experiments)."""
    primes = sorted(primes)
    if any(p % d != 1 for p in primes):
        raise PreconditionError(f"all primes must be = 1 mod {d}")
    return [e.value for e in component_elements(primes, J)]
