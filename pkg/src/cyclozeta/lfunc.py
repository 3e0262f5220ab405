"""Numerical zeta(s), L(s, chi) and the Dedekind zeta of Q(zeta_d) near the critical line.

``zeta_value`` and ``lfunction_value`` use a sharp partial sum over residue
classes plus an Euler-Maclaurin tail through the B4 term.  The number of
terms is chosen from the standard remainder bound of the next (B6) term, so
the returned value carries a bound, not a guess.  ``dedekind_zeta_direct`` is
an independent route: a smoothly cut off Dirichlet series over the ideal
counts a(n), used to cross-check the product form.
"""

from __future__ import annotations

import cmath
import csv
import enum
import functools
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import erfc

from .arith import euler_phi, factorize
from .characters import DirichletCharacter, character_group, conductor_and_primitive
from .dedekind import TABLE_CAPACITY, coefficient_table
from .errors import CapacityError, PoleError, PrecisionError, PreconditionError

HEIGHT_CEILING = 1e5
SIGMA_RANGE = (0.4, 3.0)
# |B6| / 6!
B6_OVER_FACT = 1 / 30240
# cutoff weight 0.5 * erfc(TAIL_WIDTHS) ~ 1e-10 at n = X
TAIL_WIDTHS = 4.6
# width of the dual-side margin, in units of the smoothing width
DUAL_WIDTHS_PER_ROOT_DEGREE = 4.0


class Smoothing(str, enum.Enum):
    SHARP_EM = "sharp+euler-maclaurin"
    SMOOTH = "smooth-cutoff"


@dataclass(frozen=True)
class EvalConfig:
    tolerance: float = 1e-10
    max_terms: int = 10**7
    smoothing: Smoothing = Smoothing.SMOOTH
    height_ceiling: float = HEIGHT_CEILING

    def __post_init__(self):
        if not 1e-12 <= self.tolerance <= 1e-3:
            raise PreconditionError(f"tolerance must lie in [1e-12, 1e-3], got {self.tolerance}")
        if self.max_terms < 10:
            raise PreconditionError("max_terms must be >= 10")
        object.__setattr__(self, "smoothing", Smoothing(self.smoothing))

    def with_tolerance(self, tol: float) -> "EvalConfig":
        return EvalConfig(min(max(tol, 1e-12), 1e-3), self.max_terms, self.smoothing,
                          self.height_ceiling)


def _check_point(s: complex, cfg: EvalConfig) -> complex:
    s = complex(s)
    if not SIGMA_RANGE[0] <= s.real <= SIGMA_RANGE[1]:
        raise PreconditionError(f"Re(s) = {s.real} outside {SIGMA_RANGE}")
    if abs(s.imag) > cfg.height_ceiling:
        raise PreconditionError(f"|Im(s)| = {abs(s.imag)} exceeds {cfg.height_ceiling}")
    return s


# ---------------------------------------------------------------------------
# Euler-Maclaurin core
# ---------------------------------------------------------------------------

@functools.lru_cache(maxsize=4)
def _log_table(n: int) -> np.ndarray:
    return np.log(np.arange(1, n + 1, dtype=np.float64))


def _logs(n: int) -> np.ndarray:
    # round the cached length up so that nearby lengths share one table
    size = 1 << max(10, (n - 1).bit_length())
    return _log_table(size)[:n]


def _remainder_coefficient(s: complex) -> float:
    poch = 1.0
    for j in range(6):
        poch *= abs(s + j)
    return poch * B6_OVER_FACT / (s.real + 5)


def _terms_needed(s: complex, modulus: int, weight: float, tol: float, cfg: EvalConfig) -> int:
    """Smallest block count K with weight * f^-sigma * C(s) * K^-(sigma+5) <= tol."""
    c = weight * modulus ** (-s.real) * _remainder_coefficient(s)
    K = max(2, math.ceil((c / tol) ** (1 / (s.real + 5))), math.ceil(abs(s.imag) / (2 * math.pi * modulus)) + 1)
    if K * modulus > cfg.max_terms:
        raise PrecisionError(f"tolerance {tol:g} at s = {s} needs {K * modulus} terms "
                             f"(max_terms = {cfg.max_terms})")
    return K


def _series_with_tail(s: complex, chi_values: np.ndarray, modulus: int, tol: float,
                      cfg: EvalConfig, principal_pole: bool) -> tuple[complex, float]:
    """sum_n chi(n) n^-s for a character given by its value table mod ``modulus``.

    Returns (value, remainder bound).  ``principal_pole`` keeps the x^(1-s)/(s-1)
    pole term (zeta itself); otherwise sum chi = 0 over a period and the pole
    cancels, which also makes s = 1 legal.
    """
    residues = [a for a in range(1, modulus + 1) if chi_values[a % modulus] != 0]
    K = _terms_needed(s, modulus, float(len(residues)), tol, cfg)
    n_terms = K * modulus
    logs = _logs(n_terms)
    coeff = chi_values[np.arange(1, n_terms + 1) % modulus]
    mask = coeff != 0
    main = complex(np.sum(coeff[mask] * np.exp(-s * logs[mask])))
    tail = []
    for a in residues:
        x = n_terms + a
        lx = math.log(x)
        chi_a = complex(chi_values[a % modulus])
        if principal_pole:
            pole = cmath.exp((1 - s) * lx) / (modulus * (s - 1))
        elif s == 1:
            pole = -lx / modulus
        else:
            pole = _expm1((1 - s) * lx) / (modulus * (s - 1))
        x_s = cmath.exp(-s * lx)
        corr = (0.5 * x_s + s * modulus / 12 * x_s / x
                - s * (s + 1) * (s + 2) * modulus**3 / 720 * x_s / x**3)
        tail.append(chi_a * (pole + corr))
    tail_sum = complex(math.fsum(z.real for z in tail), math.fsum(z.imag for z in tail))
    bound = len(residues) * modulus ** (-s.real) * _remainder_coefficient(s) * K ** (-s.real - 5)
    return main + tail_sum, bound


def _expm1(z: complex) -> complex:
    # exp(z) - 1 without cancellation for small |z|
    if abs(z) < 1e-5:
        return z + z * z / 2 + z**3 / 6
    return cmath.exp(z) - 1


def zeta_value(s: complex, cfg: EvalConfig = EvalConfig()) -> complex:
    return zeta_with_error(s, cfg)[0]


def zeta_with_error(s: complex, cfg: EvalConfig = EvalConfig()) -> tuple[complex, float]:
    s = _check_point(s, cfg)
    if s == 1:
        raise PoleError("zeta has a pole at s = 1")
    return _series_with_tail(s, np.array([1.0 + 0j]), 1, cfg.tolerance, cfg, True)


def _euler_factor(s: complex, chi: DirichletCharacter | None, p: int) -> complex:
    value = 1 if chi is None else chi(p)
    return 1 - value * cmath.exp(-s * math.log(p))


def lfunction_value(chi: DirichletCharacter, s: complex, cfg: EvalConfig = EvalConfig()) -> complex:
    return lfunction_with_error(chi, s, cfg)[0]


def lfunction_with_error(chi: DirichletCharacter, s: complex,
                         cfg: EvalConfig = EvalConfig()) -> tuple[complex, float]:
    s = _check_point(s, cfg)
    primes_of_d = sorted(factorize(chi.modulus))
    if chi.is_principal:
        if s == 1:
            raise PoleError("principal L-function has a pole at s = 1")
        factors = [_euler_factor(s, None, p) for p in primes_of_d]
        scale = math.prod(abs(f) for f in factors)
        z, err = _series_with_tail(s, np.array([1.0 + 0j]), 1, cfg.tolerance / max(scale, 1e-300),
                                   cfg, True)
        return z * math.prod(factors), err * scale
    f, prim = conductor_and_primitive(chi)
    factors = [_euler_factor(s, prim, p) for p in primes_of_d if f % p != 0]
    scale = math.prod(abs(x) for x in factors) if factors else 1.0
    z, err = _series_with_tail(s, prim.values_array(), f, cfg.tolerance / scale, cfg, False)
    return z * math.prod(factors), err * scale


# ---------------------------------------------------------------------------
# Dedekind zeta: product form
# ---------------------------------------------------------------------------

def _primitive_nonprincipal(d: int) -> list[DirichletCharacter]:
    return [conductor_and_primitive(chi)[1] for chi in character_group(d) if not chi.is_principal]


def dedekind_zeta_value(s: complex, d: int, cfg: EvalConfig = EvalConfig()) -> complex:
    return dedekind_zeta_with_error(s, d, cfg)[0]


def dedekind_zeta_with_error(s: complex, d: int,
                             cfg: EvalConfig = EvalConfig()) -> tuple[complex, float]:
    """zeta(s) * prod L(s, chi*), with cfg.tolerance read as a relative target.

    Each factor gets the share tol / phi(d) of the relative budget; a factor
    first evaluated at that absolute accuracy is recomputed when its modulus
    turns out to be below 1.
    """
    if d < 3:
        raise PreconditionError("d must be >= 3")
    s = _check_point(s, cfg)
    if s == 1:
        raise PoleError("the Dedekind zeta function has a pole at s = 1")
    share = cfg.tolerance / euler_phi(d)
    chars = [None] + _primitive_nonprincipal(d)
    value, rel = 1 + 0j, 0.0
    for chi in chars:
        sub = cfg.with_tolerance(share)
        z, err = _factor(chi, s, sub)
        if abs(z) < 1 and err > share * abs(z):
            z, err = _factor(chi, s, cfg.with_tolerance(share * max(abs(z), 1e-12)))
        value *= z
        rel += err / max(abs(z), 1e-300)
    return value, rel * abs(value)


def _factor(chi: DirichletCharacter | None, s: complex, cfg: EvalConfig) -> tuple[complex, float]:
    if chi is None:
        return zeta_with_error(s, cfg)
    return _series_with_tail(s, chi.values_array(), chi.modulus, cfg.tolerance, cfg, False)


def discriminant_abs(d: int) -> int:
    """|disc Q(zeta_d)| as the product of conductors of the characters mod d."""
    return math.prod(conductor_and_primitive(chi)[0] for chi in character_group(d))


# ---------------------------------------------------------------------------
# Dedekind zeta: smoothed direct series
# ---------------------------------------------------------------------------

def smoothing_width(t: float) -> float:
    """Width of the log-scale cutoff: wide near the real axis, narrow higher up."""
    return min(1.0, max(0.25, 8.0 / max(abs(t), 1e-300)))


def analytic_conductor(s: complex, d: int) -> float:
    return discriminant_abs(d) * (max(abs(s.imag), 2 * math.pi) / (2 * math.pi)) ** euler_phi(d)


def recommended_cutoff(s: complex, d: int) -> int:
    """Length X at which the direct series reaches roughly 1e-7 relative accuracy."""
    s = complex(s)
    width = smoothing_width(s.imag)
    margin = DUAL_WIDTHS_PER_ROOT_DEGREE * math.sqrt(euler_phi(d)) * width
    return int(analytic_conductor(s, d) * math.exp(margin + TAIL_WIDTHS * width)) + 1


@functools.lru_cache(maxsize=2)
def _float_coefficients(X: int, d: int) -> np.ndarray:
    return coefficient_table(X, d)[1:].astype(np.float64)


def _smoothed_sum(s: complex, a: np.ndarray, logs: np.ndarray, center: float,
                  width: float) -> complex:
    weighted = a * (0.5 * erfc((logs - math.log(center)) / width))
    value = complex(np.sum(weighted * np.exp(-s * logs)))
    if s != 1:
        # residue of zeta_K from the same smoothed sum at s = 1
        residue = float(np.sum(weighted)) / (center * math.exp(width**2 / 4))
        value -= residue * cmath.exp((1 - s) * math.log(center)
                                     + width**2 * (1 - s) ** 2 / 4) / (1 - s)
    return value


@dataclass(frozen=True)
class DirectValue:
    value: complex
    est_error: float
    X: int
    width: float
    center: float


def dedekind_zeta_direct(s: complex, d: int, X: int, cfg: EvalConfig = EvalConfig(), *,
                         capacity: int = TABLE_CAPACITY) -> complex:
    return dedekind_zeta_direct_detail(s, d, X, cfg, capacity=capacity).value


def dedekind_zeta_direct_detail(s: complex, d: int, X: int, cfg: EvalConfig = EvalConfig(), *,
                                capacity: int = TABLE_CAPACITY) -> DirectValue:
    """sum_{n <= X} a(n) w(n) n^-s with w(n) = erfc(log(n / x_c) / width) / 2.

    The cutoff is centred at x_c = X exp(-4.6 width) so that w(X) ~ 1e-10.
    The smoothed sum differs from zeta_K(s) by a pole term, which is removed
    using the residue estimated from the same sum at s = 1; the remaining
    error is the dual-side contribution; ``est_error`` is a heuristic estimate.
    With sharp smoothing the plain partial sum is returned, only for Re(s) > 1.
    """
    s = complex(s)
    if d < 3:
        raise PreconditionError("d must be >= 3")
    if s.real < 0.5:
        raise PreconditionError("Re(s) must be >= 1/2")
    if X < 1:
        raise PreconditionError("X must be >= 1")
    if X > capacity:
        raise CapacityError(f"X = {X} exceeds the coefficient capacity {capacity}")
    a = _float_coefficients(X, d)
    logs = _logs(X)
    if cfg.smoothing is Smoothing.SHARP_EM:
        if s.real <= 1:
            raise PreconditionError("a sharp partial sum needs Re(s) > 1")
        value = complex(np.sum(a * np.exp(-s * logs)))
        # residue estimated as the mean coefficient; heuristic tail size
        tail = float(np.sum(a)) / X * X ** (1 - s.real) / (s.real - 1)
        return DirectValue(value, tail, X, 0.0, float(X))
    width = smoothing_width(s.imag)
    center = X * math.exp(-TAIL_WIDTHS * width)
    value = _smoothed_sum(s, a, logs, center, width)
    # the error falls quickly with the centre, so the change caused by moving
    # the centre down by one width overestimates the error at the full centre
    est = abs(value - _smoothed_sum(s, a, logs, center * math.exp(-width), width))
    return DirectValue(value, est, X, width, center)


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridRow:
    t: float
    value: complex
    est_error: float

    def csv_row(self) -> list:
        return [repr(self.t), repr(self.value.real), repr(self.value.imag),
                repr(abs(self.value)), repr(self.est_error)]


GRID_FIELDS = ("t", "re", "im", "abs", "est_error")


def evaluate_grid(d: int, ts: Sequence[float], cfg: EvalConfig = EvalConfig(), *,
                  sigma: float = 0.5, threads: int = 1) -> list[GridRow]:
    def one(t):
        z, err = dedekind_zeta_with_error(complex(sigma, t), d, cfg)
        return GridRow(float(t), z, err)

    if threads == 1:
        return [one(t) for t in ts]
    with ThreadPoolExecutor(max_workers=threads or None) as pool:
        return list(pool.map(one, ts))


def grid_to_csv(rows: Iterable[GridRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(GRID_FIELDS)
    for r in rows:
        w.writerow(r.csv_row())
    return buf.getvalue()
