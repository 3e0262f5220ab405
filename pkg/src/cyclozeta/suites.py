"""Randomised and exhaustive verification sweeps shared by the CLI and the test suite."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .arith import FactoredInteger, euler_phi, prime_pi, sieve_primes_in_ap
from .dedekind import (a_prime_companion, coefficient, coefficient_oracle,
                       coefficient_prime_power, verify_lemma1_part2)
from .errors import PreconditionError
from .galsums import (component_bound_sides, log_grid, max_ratio_log, rankin_profile,
                      verify_gcd_identity, verify_lemma2)
from .resonator import ResonatorSet, build_params, build_set, siegel_walfisz_check

SUITES = ("coefficients", "lemma1", "lemma1-values", "lemma2", "gcd", "component-bound", "rankin",
          "siegel-walfisz")
DEFAULT_VERIFY_N = {3: 2**14, 4: 2**14, 5: 10**4}


@dataclass
class SuiteResult:
    suite: str
    d: int
    checked: int
    violations: int
    detail: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.violations == 0 and self.checked > 0

    def to_dict(self) -> dict:
        out = asdict(self)
        out["ok"] = self.ok
        return out


def rng_for(seed: int) -> np.random.Generator:
    if seed < 0:
        raise PreconditionError("seed must be >= 0")
    return np.random.Generator(np.random.Philox(key=seed))


def construction(d: int, N: int | None = None) -> ResonatorSet:
    """The resonator set used by the pair sweeps (default N per modulus)."""
    N = DEFAULT_VERIFY_N.get(d, 10**4) if N is None else N
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return build_set(build_params(d, N))


def _populated_levels(M: ResonatorSet) -> list[int]:
    return [lev.k for lev in M.params.levels if lev.P > 0]


def _random_pairs(M: ResonatorSet, pairs: int, rng: np.random.Generator):
    levels = _populated_levels(M)
    if not levels:
        raise PreconditionError("the construction has no nonempty level")
    for _ in range(pairs):
        k = levels[int(rng.integers(len(levels)))]
        comp = M.components[k - 1]
        a, b = rng.integers(len(comp), size=2)
        yield k, comp[int(a)].value, comp[int(b)].value


def cofactor_bound_suite(d: int, pairs: int, seed: int, N: int | None = None) -> SuiteResult:
    M = construction(d, N)
    rng = rng_for(seed)
    bad = sum(not verify_lemma2(k, m, m2, M.params) for k, m, m2 in _random_pairs(M, pairs, rng))
    return SuiteResult("lemma2", d, pairs, bad, {"N": M.params.N, "size": len(M)})


def gcd_suite(d: int, pairs: int, seed: int, N: int | None = None) -> SuiteResult:
    M = construction(d, N)
    rng = rng_for(seed)
    bad = sum(not verify_gcd_identity(k, m, m2, M.params)
              for k, m, m2 in _random_pairs(M, pairs, rng))
    return SuiteResult("gcd", d, pairs, bad, {"N": M.params.N, "size": len(M)})


def companion_bound_suite(d: int, pairs: int, seed: int, N: int | None = None) -> SuiteResult:
    """a(mn) >= a'(m) a(n) for random squarefree m, n over the construction's primes."""
    M = construction(d, N)
    primes = sorted({p for lev in M.params.levels for p in lev.primes})
    if not primes:
        raise PreconditionError("the construction has no primes")
    rng = rng_for(seed)
    bad = 0
    for _ in range(pairs):
        picks = []
        for _side in range(2):
            mask = rng.random(len(primes)) < 0.5
            picks.append(FactoredInteger.from_primes([p for p, keep in zip(primes, mask) if keep]))
        bad += not verify_lemma1_part2(picks[0], picks[1], d)
    return SuiteResult("lemma1", d, pairs, bad, {"primes": len(primes)})


def split_prime_values_suite(d: int, count: int = 50) -> SuiteResult:
    """a(p) = phi(d) and a(p^2) = phi(d)(phi(d)+1)/2 for the first ``count`` primes = 1 mod d."""
    phi = euler_phi(d)
    hi = 1000
    primes: list[int] = []
    while len(primes) < count:
        primes = sieve_primes_in_ap(0, hi, d, 1)
        hi *= 2
    primes = primes[:count]
    bad = 0
    for p in primes:
        bad += coefficient_prime_power(p, 1, d) != phi
        bad += coefficient_prime_power(p, 2, d) != phi * (phi + 1) // 2
        bad += coefficient(p * p, d) != coefficient(p, d) * a_prime_companion(p, d)
    return SuiteResult("lemma1-values", d, len(primes), bad, {"largest": primes[-1]})


def coefficients_suite(d: int, n_max: int = 5000) -> SuiteResult:
    oracle = coefficient_oracle(n_max, d)
    bad = [n for n in range(1, n_max + 1) if coefficient(n, d) != oracle[n - 1]]
    return SuiteResult("coefficients", d, n_max, len(bad), {"first_bad": bad[:5]})


def component_bound_suite(d: int, instances: int, seed: int, max_primes: int = 4) -> SuiteResult:
    """Exhaustive check of the single-component lower bound on random tiny components."""
    rng = rng_for(seed)
    pool = sieve_primes_in_ap(0, 4000, d, 1)
    bad, worst = 0, math.inf
    for _ in range(instances):
        P = int(rng.integers(1, max_primes + 1))
        primes = sorted(int(p) for p in rng.choice(pool, size=P, replace=False))
        J = 2 * int(rng.integers(0, P + 1))
        lhs, rhs = component_bound_sides(d, primes, J)
        bad += lhs < rhs * (1 - 1e-12)
        worst = min(worst, lhs / rhs)
    return SuiteResult("component-bound", d, instances, bad, {"min_ratio": worst})


def rankin_suite(d: int, N: int, points: int = 20) -> SuiteResult:
    M = construction(d, N)
    hi = math.exp(max_ratio_log(M.elements))
    prof = rankin_profile(M.elements, d, log_grid(hi, points))
    bad = sum(not ok for *_, ok in prof)
    truncs = [tr for _, tr, _, _ in prof]
    monotone = all(b >= a for a, b in zip(truncs, truncs[1:]))
    return SuiteResult("rankin", d, len(prof), bad + (not monotone),
                       {"monotone": monotone, "size": len(M)})


def siegel_walfisz_suite(d: int, x: float = 1e7) -> SuiteResult:
    ratio = siegel_walfisz_check(x, d)
    return SuiteResult("siegel-walfisz", d, 1, int(not 0.95 <= ratio <= 1.05),
                       {"ratio": ratio, "pi_x": prime_pi(x)})


def run_suite(suite: str, d: int, *, pairs: int = 10**4, seed: int = 0,
              N: int | None = None) -> SuiteResult:
    if suite not in SUITES:
        raise PreconditionError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    if suite == "coefficients":
        return coefficients_suite(d)
    if suite == "lemma1":
        return companion_bound_suite(d, pairs, seed, N)
    if suite == "lemma1-values":
        return split_prime_values_suite(d)
    if suite == "lemma2":
        return cofactor_bound_suite(d, pairs, seed, N)
    if suite == "gcd":
        return gcd_suite(d, pairs, seed, N)
    if suite == "component-bound":
        return component_bound_suite(d, min(pairs, 100), seed)
    if suite == "rankin":
        return rankin_suite(d, N or 2**12)
    return siegel_walfisz_suite(d)
