"""Fejer-type kernel, resonator buckets and a resonator-guided search for large values.

The kernel is K(u) = c (sin(cu)/(cu))^(2 eta) with c = epsilon log T / eta.  Its
cosine transform is band-limited to |v| <= 2 epsilon log T.  The search scores
a fine t-grid by |R(t)|^2 Phi(t log T / T), spends its zeta_K budget on the
best-scored points, refines the winner by golden-section search, and compares
with uniform random sampling at the same budget.
"""

from __future__ import annotations

import csv
import io
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy import integrate

from .arith import FactoredInteger, euler_phi, lcal, sort_key
from .errors import ConstructionError, PrecisionError, PreconditionError
from .lfunc import EvalConfig, dedekind_zeta_value
from .resonator import ResonatorSet, build_params, build_set

QUAD_TAIL = 1e-10
ETA_ONE_EXTENT = 10 * math.pi
GRID_FACTOR = 50
GRID_BLOCK = 512


# ---------------------------------------------------------------------------
# Kernel
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KernelParams:
    eta: int
    epsilon: float
    T: float

    def __post_init__(self):
        if self.eta < 1:
            raise PreconditionError("eta must be >= 1")
        if not self.epsilon > 0:
            raise PreconditionError("epsilon must be positive")
        if not self.T > 16:
            raise PreconditionError("T must exceed 16")

    @property
    def c(self) -> float:
        return self.epsilon * math.log(self.T) / self.eta

    @property
    def band_limit(self) -> float:
        return 2 * self.epsilon * math.log(self.T)

    @classmethod
    def default(cls, d: int, T: float, epsilon: float = 0.05) -> "KernelParams":
        return cls(2 * euler_phi(d), epsilon, T)


def kernel_value(u: float, kp: KernelParams) -> float:
    """K(u) computed in log space; K(0) = c."""
    c = kp.c
    x = c * u
    if abs(x) < 1e-8:
        return c * (1 - x * x / 6) ** (2 * kp.eta)
    s = math.sin(x)
    if s == 0:
        return 0.0
    return math.exp(2 * kp.eta * (math.log(abs(s)) - math.log(abs(x))) + math.log(c))


def _sinc_power(x: float, power: int) -> float:
    return 1.0 if x == 0 else (math.sin(x) / x) ** power


def _quad_extent(eta: int) -> float:
    """U with integral_U^inf x^(-2 eta) dx <= QUAD_TAIL, rounded up to a multiple of pi."""
    if eta == 1:
        # the remaining tail is integrated separately, see _eta_one_tail
        return ETA_ONE_EXTENT
    U = (QUAD_TAIL * (2 * eta - 1)) ** (-1 / (2 * eta - 1))
    return math.pi * max(1, math.ceil(U / math.pi))


def _chunked_quad(fn, lo: float, hi: float) -> float:
    """Integrate fn over [lo, hi] in pieces of length pi; pieces added with fsum."""
    pieces = []
    edges = np.arange(lo, hi, math.pi).tolist() + [hi]
    for a, b in zip(edges, edges[1:]):
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                val, _ = integrate.quad(fn, a, b, epsabs=1e-14, epsrel=1e-12, limit=200)
            except integrate.IntegrationWarning as exc:
                raise PrecisionError(f"kernel quadrature did not converge on [{a}, {b}]") from exc
        pieces.append(val)
    return math.fsum(pieces)


def _eta_one_tail(omega: float, U: float) -> float:
    # sin^2 x = (1 - cos 2x) / 2 turns the tail into Fourier integrals of x^-2
    def fourier(w):
        if w == 0:
            return 1 / U
        val, _ = integrate.quad(lambda x: x**-2, U, np.inf, weight="cos", wvar=abs(w))
        return val
    return 0.5 * fourier(omega) - 0.25 * (fourier(omega + 2) + fourier(omega - 2))


def sinc_power_integral(eta: int, omega: float) -> float:
    """integral over R of (sin x / x)^(2 eta) cos(omega x) dx."""
    if abs(omega) >= 2 * eta:
        return 0.0
    U = _quad_extent(eta)
    body = _chunked_quad(lambda x: _sinc_power(x, 2 * eta) * math.cos(omega * x),
                         0.0, U)
    if eta == 1:
        body += _eta_one_tail(omega, U)
    return 2 * body


def kernel_hat(v: float, kp: KernelParams) -> float:
    """Cosine transform of K at v; 0 outside the band |v| <= 2 epsilon log T."""
    if abs(v) > kp.band_limit:
        return 0.0
    return sinc_power_integral(kp.eta, v / kp.c)


def kernel_hat_imag(v: float, kp: KernelParams) -> float:
    """Sine part of the transform, integrated over the full symmetric range (ideally 0)."""
    if abs(v) > kp.band_limit:
        return 0.0
    omega, U = v / kp.c, _quad_extent(kp.eta)
    fn = lambda x: _sinc_power(x, 2 * kp.eta) * math.sin(omega * x)  # noqa: E731
    return _chunked_quad(fn, -U, 0.0) + _chunked_quad(fn, 0.0, U)


def kernel_hat_zero_asymptotic(eta: int) -> float:
    return math.sqrt(3 * math.pi / eta)


@dataclass
class KernelCheckReport:
    ok: bool
    hat_zero: float
    asymptotic_ratio: float
    max_increase: float
    min_value: float
    max_derivative: float
    derivative_bound: float
    values: list[float]


def default_grid(kp: KernelParams, points: int = 200) -> list[float]:
    return np.linspace(0.0, kp.band_limit, points).tolist()


def kernel_check_report(kp: KernelParams, grid: Sequence[float] | None = None, *,
                  tolerance: float = 1e-10, derivative_slack: float = 0.01) -> KernelCheckReport:
    """Check 0 <= K^(v) <= K^(0), monotone decrease and the derivative bound on a grid.

    The derivative is checked through difference quotients between adjacent
    grid points, which by the mean value theorem cannot exceed max |K^'|.
    """
    grid = default_grid(kp) if grid is None else list(grid)
    if any(b < a for a, b in zip(grid, grid[1:])) or any(v < 0 for v in grid):
        raise PreconditionError("grid must be sorted and nonnegative")
    hat0 = kernel_hat(0.0, kp)
    vals = [kernel_hat(v, kp) for v in grid]
    inc = max([b - a for a, b in zip(vals, vals[1:])], default=0.0)
    quot = [abs(b - a) / (y - x) for (x, a), (y, b) in zip(zip(grid, vals), zip(grid[1:], vals[1:]))
            if y > x]
    max_der = max(quot, default=0.0)
    bound = (sinc_power_integral(kp.eta - 1, 0.0) / kp.c) if kp.eta > 1 else math.inf
    ok = (all(-tolerance <= v <= hat0 + tolerance for v in vals) and inc <= tolerance
          and max_der <= bound * (1 + derivative_slack) + tolerance)
    return KernelCheckReport(ok, hat0, hat0 / kernel_hat_zero_asymptotic(kp.eta), inc,
                        min(vals, default=hat0), max_der, bound, vals)


def verify_lemma4(kp: KernelParams, grid: Sequence[float] | None = None) -> bool:
    return kernel_check_report(kp, grid).ok


# ---------------------------------------------------------------------------
# Buckets and the resonator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Bucket:
    j: int
    h: FactoredInteger
    r: float


@dataclass(frozen=True)
class ResonatorBuckets:
    buckets: tuple[Bucket, ...]
    T: float

    def log_h(self) -> np.ndarray:
        return np.array([b.h.log_value for b in self.buckets])

    def weights(self) -> np.ndarray:
        return np.array([b.r for b in self.buckets])


def bucket_index(log_value: float, T: float) -> int:
    """j with (1+1/T)^j < m <= (1+1/T)^(j+1)."""
    return math.ceil(log_value / math.log1p(1 / T)) - 1


def build_buckets(M: ResonatorSet | Sequence[FactoredInteger], T: float) -> ResonatorBuckets:
    if not T > 16:
        raise PreconditionError("T must exceed 16")
    elements = M.elements if isinstance(M, ResonatorSet) else M
    groups: dict[int, list[FactoredInteger]] = {}
    for m in elements:
        groups.setdefault(bucket_index(m.log_value, T), []).append(m)
    buckets = tuple(Bucket(j, min(ms, key=sort_key), math.sqrt(len(ms)))
                    for j, ms in sorted(groups.items()))
    return ResonatorBuckets(buckets, T)


def resonator_value(t: float, rb: ResonatorBuckets) -> complex:
    terms = rb.weights() * np.exp(-1j * t * rb.log_h())
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def resonator_on_grid(t0: float, step: float, count: int, rb: ResonatorBuckets) -> np.ndarray:
    """R(t0 + i*step) for i < count, one block of phase steps at a time."""
    logh, r = rb.log_h(), rb.weights()
    out = np.empty(count, dtype=complex)
    offsets = np.arange(GRID_BLOCK) * step
    stepper = np.exp(-1j * np.outer(offsets, logh))
    for start in range(0, count, GRID_BLOCK):
        n = min(GRID_BLOCK, count - start)
        anchor = r * np.exp(-1j * (t0 + start * step) * logh)
        out[start:start + n] = stepper[:n] @ anchor
    return out


def gaussian(x: np.ndarray | float):
    return np.exp(-np.square(x) / 2)


# ---------------------------------------------------------------------------
# Search
# ---------------------------------------------------------------------------

@dataclass
class SearchResult:
    d: int
    T: float
    N: int
    set_size: int
    t_star: float
    zeta_abs: float
    baseline_t: float
    baseline_max: float
    reference: float
    budget: int
    seed: int
    evaluations: int
    exhausted: bool
    weighting: str = "none"

    LEDGER_FIELDS = ("seed", "T", "d", "budget", "t_star", "zeta_abs", "baseline_max",
                     "reference")

    def to_text(self) -> str:
        return "".join(f"{k} = {v!r}\n" for k, v in asdict(self).items())

    @classmethod
    def from_text(cls, text: str) -> "SearchResult":
        import ast

        fields = {}
        for line in text.splitlines():
            if line.strip():
                k, v = line.split("=", 1)
                fields[k.strip()] = ast.literal_eval(v.strip())
        return cls(**fields)

    def ledger_row(self) -> list:
        return [getattr(self, k) for k in self.LEDGER_FIELDS]


def append_ledger(result: SearchResult, path: str | os.PathLike) -> None:
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new:
            w.writerow(SearchResult.LEDGER_FIELDS)
        w.writerow([repr(x) if isinstance(x, float) else x for x in result.ledger_row()])


def default_resonator(d: int, T: float, beta: float = 0.0, **params) -> ResonatorSet:
    """Resonator set for N = floor(T^(1-beta)), halving N while the construction guard trips."""
    if not 0 <= beta < 1:
        raise PreconditionError("beta must lie in [0, 1)")
    N = math.floor(T ** (1 - beta))
    while N > 16:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                return build_set(build_params(d, N, **params))
        except ConstructionError:
            N //= 2
    raise ConstructionError(f"no admissible N > 16 below T^(1-beta) = {T ** (1 - beta)}")


def _rng(seed: int, stream: int) -> np.random.Generator:
    if seed < 0:
        raise PreconditionError("seed must be >= 0")
    return np.random.Generator(np.random.Philox(key=[seed, stream]))


def _zeta_abs(d: int, cfg: EvalConfig):
    return lambda t: abs(dedekind_zeta_value(complex(0.5, t), d, cfg))


def _evaluate(fn, ts: Sequence[float], threads: int) -> list[float]:
    if threads == 1:
        return [fn(t) for t in ts]
    with ThreadPoolExecutor(max_workers=threads or None) as pool:
        return list(pool.map(fn, ts))


def golden_section_max(fn, lo: float, hi: float, evaluations: int, tol: float
                       ) -> tuple[float, float, int]:
    """Maximise fn on [lo, hi] with at most ``evaluations`` calls; returns (x, fn(x), used)."""
    inv = (math.sqrt(5) - 1) / 2
    if evaluations < 2:
        return lo, -math.inf, 0
    a, b = lo, hi
    x1, x2 = b - inv * (b - a), a + inv * (b - a)
    f1, f2 = fn(x1), fn(x2)
    used = 2
    while used < evaluations and b - a > tol:
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - inv * (b - a)
            f1 = fn(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + inv * (b - a)
            f2 = fn(x2)
        used += 1
    return (x1, f1, used) if f1 >= f2 else (x2, f2, used)


def refine_share(budget: int) -> int:
    return min(30, max(2, budget // 20))


WEIGHTINGS = ("gaussian", "none")


def score_grid(M: ResonatorSet, T: float, count: int, offset: float,
               weighting: str = "gaussian") -> tuple[np.ndarray, np.ndarray]:
    """(t, score) on t_i = offset + i T / count with score |R(t)|^2 Phi(t log T / T).

    weighting = "none" drops the Gaussian factor and scores by |R(t)|^2 alone.
    """
    if weighting not in WEIGHTINGS:
        raise PreconditionError(f"weighting must be one of {WEIGHTINGS}")
    step = T / count
    R = resonator_on_grid(offset, step, count, build_buckets(M, T))
    ts = offset + step * np.arange(count)
    score = np.abs(R) ** 2
    if weighting == "gaussian":
        score = score * gaussian(ts * math.log(T) / T)
    return ts, score


def search_large_values(d: int, T: float, M: ResonatorSet, budget: int, seed: int,
                        cfg: EvalConfig = EvalConfig(tolerance=1e-6), *,
                        threads: int = 1, time_limit: float | None = None,
                        weighting: str = "none") -> SearchResult:
    """Resonator-guided maximisation of |zeta_K(1/2 + it)| on [0, T] plus a random baseline."""
    import time

    if budget < 10:
        raise PreconditionError("budget must be >= 10")
    if not 16 < T <= cfg.height_ceiling:
        raise PreconditionError(f"T must lie in (16, {cfg.height_ceiling}]")
    started = time.monotonic()
    fn = _zeta_abs(d, cfg)

    # coarse scoring grid with a seed-derived offset
    count = GRID_FACTOR * budget
    step = T / count
    offset = float(_rng(seed, 0).random()) * step
    n_refine = refine_share(budget)
    n_guided = budget - n_refine
    if n_guided >= T * math.log(T):
        # the budget covers [0, T] at spacing <= 1/log T: scoring cannot beat a full sweep
        frac = offset / step
        step = T / n_guided
        chosen = (step * (np.arange(n_guided) + frac)).tolist()
    else:
        ts, score = score_grid(M, T, count, offset, weighting)
        order = np.lexsort((ts, -score))[:n_guided]
        chosen = sorted(float(ts[i]) for i in order)

    exhausted = False
    values: list[float] = []
    for start in range(0, len(chosen), 64):
        if time_limit is not None and time.monotonic() - started > time_limit:
            exhausted = True
            break
        values.extend(_evaluate(fn, chosen[start:start + 64], threads))
    evaluated = chosen[: len(values)]
    best = int(np.argmax(values))
    t_star, z_star = evaluated[best], values[best]
    used = len(values)
    if not exhausted:
        lo, hi = max(0.0, t_star - step), min(T, t_star + step)
        t_ref, z_ref, n_used = golden_section_max(fn, lo, hi, n_refine, 1e-9 * T)
        used += n_used
        if z_ref > z_star:
            t_star, z_star = t_ref, z_ref

    rand_ts = (_rng(seed, 1).random(budget) * T).tolist()
    rand_vals = _evaluate(fn, rand_ts, threads)
    rb_best = int(np.argmax(rand_vals))
    reference = lcal(T) ** euler_phi(d)
    return SearchResult(d, float(T), M.params.N, len(M), t_star, z_star, rand_ts[rb_best],
                        rand_vals[rb_best], reference, budget, seed, used, exhausted, weighting)


def results_to_csv(results: Sequence[SearchResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SearchResult.LEDGER_FIELDS)
    for r in results:
        w.writerow(r.ledger_row())
    return buf.getvalue()
