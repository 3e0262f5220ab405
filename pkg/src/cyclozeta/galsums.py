"""Plain and coefficient-weighted GCD (Gal) sums over sets of factored integers.

All pair sums are O(|M|^2) double loops evaluated in row blocks.  Every term
is computed elementwise from integer exponent vectors, and the terms are added
with ``math.fsum`` (correctly rounded), so the result does not depend on the
order of M, the block size or the number of worker threads.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .arith import FactoredInteger, euler_phi, iterated_log, lcal
from .dedekind import a_prime_companion, coefficient, coefficient_prime_power
from .errors import PreconditionError
from .resonator import ResonatorParams, ResonatorSet, decompose

BLOCK_ROWS = 256
LOG_CUTOFF_SLACK = 1e-12


class _PairTable:
    """Exponent matrix of a set plus per-prime log and coefficient tables."""

    def __init__(self, M: Sequence[FactoredInteger], d: int | None):
        primes = sorted({p for m in M for p in m.primes})
        index = {p: i for i, p in enumerate(primes)}
        self.E = np.zeros((len(M), len(primes)), dtype=np.int64)
        for r, m in enumerate(M):
            for p, e in m.factors:
                self.E[r, index[p]] = e
        self.logp = [math.log(p) for p in primes]
        self.n = len(M)
        self.coeff = None
        if d is not None:
            top = int(self.E.max()) if self.E.size else 0
            self.coeff = [np.array([coefficient_prime_power(p, k, d) for k in range(top + 1)],
                                   dtype=np.float64) for p in primes]

    def block(self, rows: slice) -> tuple[np.ndarray, np.ndarray | None]:
        """(-ratio_log, weight) for every pair with the first index in ``rows``."""
        A = self.E[rows, None, :]
        B = self.E[None, :, :]
        shape = (A.shape[0], self.n)
        dist = np.zeros(shape)
        weight = np.ones(shape) if self.coeff is not None else None
        for c, lp in enumerate(self.logp):
            diff = A[:, :, c] - B[:, :, c]
            dist += np.abs(diff) * lp
            if weight is not None:
                tab = self.coeff[c]
                weight *= tab[np.maximum(diff, 0)] * tab[np.maximum(-diff, 0)]
        return dist, weight


def _blocks(n: int) -> list[slice]:
    return [slice(i, min(i + BLOCK_ROWS, n)) for i in range(0, n, BLOCK_ROWS)]


def _map_blocks(fn, n: int, threads: int) -> list:
    blocks = _blocks(n)
    if threads == 1 or len(blocks) <= 1:
        return [fn(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=threads or None) as pool:
        return list(pool.map(fn, blocks))


def _exact_sum(values: np.ndarray) -> float:
    return math.fsum(values.ravel().tolist())


def _check_alpha(alpha: float) -> None:
    if not 0 < alpha <= 1:
        raise PreconditionError("alpha must lie in (0, 1]")


def _pair_sums(M: Sequence[FactoredInteger], alphas: Sequence[float], d: int | None,
               cutoff_logs: Sequence[float] = (), threads: int = 1) -> list:
    """Per alpha: the full pair sum, and the truncated sums at each cutoff.

    Each row block is reduced with ``math.fsum`` and the block results are added
    in block order, so the value does not depend on ``threads``.
    """
    table = _PairTable(M, d)
    edges = np.array([c + LOG_CUTOFF_SLACK * max(1.0, c) for c in cutoff_logs])

    def work(rows):
        dist, weight = table.block(rows)
        # bin b holds pairs whose ratio lies above cutoff b-1 and within cutoff b
        bins = np.searchsorted(edges, dist, side="left") if edges.size else None
        out = []
        for a in alphas:
            t = np.exp(-a * dist)
            if weight is not None:
                t *= weight
            per_bin = []
            if bins is not None:
                order = np.argsort(bins, kind="stable", axis=None)
                flat_t, flat_b = t.ravel()[order], bins.ravel()[order]
                bounds = np.searchsorted(flat_b, np.arange(edges.size + 1), side="left")
                bounds = np.append(bounds, flat_b.size)
                per_bin = [math.fsum(flat_t[bounds[i]:bounds[i + 1]].tolist())
                           for i in range(edges.size)]
            out.append((_exact_sum(t), per_bin))
        return out

    results = _map_blocks(work, table.n, threads)
    summary = []
    for ai in range(len(alphas)):
        full = math.fsum(r[ai][0] for r in results)
        trunc = []
        for ci in range(len(cutoff_logs)):
            trunc.append(math.fsum(r[ai][1][i] for r in results for i in range(ci + 1)))
        summary.append((full, trunc))
    return summary


def gal_sum(M: Sequence[FactoredInteger], alpha: float, *, threads: int = 1) -> float:
    """Sum over pairs of (gcd/lcm)^alpha."""
    _check_alpha(alpha)
    return _pair_sums(M, [alpha], None, threads=threads)[0][0]


def gal_sum_weighted(M: Sequence[FactoredInteger], d: int, alpha: float, *,
                     threads: int = 1) -> float:
    """Sum over pairs of a(m/g) a(n/g) (g/l)^alpha, g = gcd, l = lcm."""
    _check_alpha(alpha)
    return _pair_sums(M, [alpha], d, threads=threads)[0][0]


def truncated_profile(M: Sequence[FactoredInteger], d: int, alpha: float,
                      cutoffs: Sequence[float], *, threads: int = 1) -> dict[float, float]:
    """gal_sum_weighted restricted to lcm/gcd <= X, for each X in ``cutoffs``."""
    _check_alpha(alpha)
    if any(X < 1 for X in cutoffs):
        raise PreconditionError("cutoffs must be >= 1")
    order = sorted(set(cutoffs))
    _, trunc = _pair_sums(M, [alpha], d, [math.log(X) for X in order], threads)[0]
    values = dict(zip(order, trunc))
    return {X: values[X] for X in cutoffs}


def gal_sum_truncated(M: Sequence[FactoredInteger], d: int, alpha: float, X: float, *,
                      threads: int = 1) -> float:
    return truncated_profile(M, d, alpha, [X], threads=threads)[X]


def max_ratio_log(M: Sequence[FactoredInteger], *, threads: int = 1) -> float:
    """max over pairs of ln(lcm/gcd)."""
    if len(M) < 2:
        return 0.0
    table = _PairTable(M, None)
    return max(_map_blocks(lambda b: float(table.block(b)[0].max()), table.n, threads))


def rankin_check(M: Sequence[FactoredInteger], d: int, X: float) -> bool:
    """Truncated sum >= S_1/2 - S_1/3 * X^(-1/6) (absolute slack 1e-9)."""
    if X < 1:
        raise PreconditionError("X must be >= 1")
    (full_half, (trunc,)), (full_third, _) = _pair_sums(M, [0.5, 1 / 3], d, [math.log(X)])
    return trunc >= full_half - full_third * X ** (-1 / 6) - 1e-9


def rankin_profile(M: Sequence[FactoredInteger], d: int, cutoffs: Sequence[float], *,
                   threads: int = 1) -> list[tuple[float, float, float, bool]]:
    """(X, truncated, lower bound, holds) for each cutoff, from one pass over the pairs."""
    order = sorted(cutoffs)
    (half, trunc), (third, _) = _pair_sums(M, [0.5, 1 / 3], d,
                                           [math.log(X) for X in order], threads)
    out = []
    for X, tr in zip(order, trunc):
        bound = half - third * X ** (-1 / 6)
        out.append((X, tr, bound, tr >= bound - 1e-9))
    return out


def log_grid(hi: float, points: int = 20) -> list[float]:
    """``points`` cutoffs spaced geometrically over [1, hi]."""
    if hi <= 1 or points < 2:
        return [1.0] * max(points, 1)
    return [math.exp(math.log(hi) * i / (points - 1)) for i in range(points)]


# ---------------------------------------------------------------------------
# sigma sums and exact pair identities
# ---------------------------------------------------------------------------

def sigma_sum(params: ResonatorParams, k: int, R: int, r: FactoredInteger) -> float:
    """Sum of a(n)/sqrt(n) over squarefree n | N_k with omega(n) <= R and (n, r) = 1."""
    if R < 0:
        raise PreconditionError("R must be >= 0")
    lev = params.level(k)
    excluded = set(r.primes)
    xs = [coefficient_prime_power(p, 1, params.d) / math.sqrt(p)
          for p in lev.primes if p not in excluded]
    # elementary symmetric sums e_0..e_R of xs
    e = [1.0] + [0.0] * R
    for x in xs:
        for j in range(R, 0, -1):
            e[j] += e[j - 1] * x
    return math.fsum(e)


def _component_pair(params: ResonatorParams, k: int, m: FactoredInteger,
                    m2: FactoredInteger):
    lev = params.level(k)
    return decompose(m, lev.primes, lev.J), decompose(m2, lev.primes, lev.J), lev


def cofactor_bound_sides(k: int, m: FactoredInteger, m2: FactoredInteger,
                 params: ResonatorParams) -> tuple[int, Fraction]:
    """Both sides of the cofactor-weight lower bound for two elements of M_k."""
    x, y, _ = _component_pair(params, k, m, m2)
    d = params.d
    g = m.gcd(m2)
    lhs = coefficient(m / g, d) * coefficient(m2 / g, d)
    gl, gq = x.ell.gcd(y.ell), x.q.gcd(y.q)
    rhs = (a_prime_companion(x.ell, d) * a_prime_companion(y.ell, d)
           * coefficient(x.q, d) * coefficient(y.q, d)
           / (a_prime_companion(gl, d) ** 2 * coefficient(gq, d) ** 2))
    return lhs, rhs


def verify_lemma2(k: int, m: FactoredInteger, m2: FactoredInteger,
                  params: ResonatorParams) -> bool:
    lhs, rhs = cofactor_bound_sides(k, m, m2, params)
    return lhs >= rhs


def verify_gcd_identity(k: int, m: FactoredInteger, m2: FactoredInteger,
                        params: ResonatorParams) -> bool:
    """gcd(m, m') = N_k (l, l') / [q, q'] together with both cofactor identities."""
    x, y, lev = _component_pair(params, k, m, m2)
    g = m.gcd(m2)
    gl, lq, gq = x.ell.gcd(y.ell), x.q.lcm(y.q), x.q.gcd(y.q)
    if g * lq != lev.N_k * gl:
        return False
    return (m / g == (x.ell / gl) * (y.q / gq)) and (m2 / g == (y.ell / gl) * (x.q / gq))


def component_bound_sides(d: int, primes: Sequence[int], J: int) -> tuple[float, float]:
    """Exhaustive (S_1/2(M_k, a), lower double sum) for one component over ``primes``."""
    from .resonator import component_elements

    comp = [e.value for e in component_elements(primes, J)]
    lhs = gal_sum_weighted(comp, d, 0.5)
    half = J // 2
    subsets = [FactoredInteger.from_primes(c) for i in range(min(half, len(primes)) + 1)
               for c in itertools.combinations(sorted(primes), i)]
    ap = {s: float(a_prime_companion(s, d)) for s in subsets}
    aa = {s: float(coefficient(s, d)) for s in subsets}
    sq = {s: math.exp(0.5 * s.log_value) for s in subsets}
    terms = []
    for l1, l2 in itertools.product(subsets, repeat=2):
        g = l1.gcd(l2)
        outer = math.exp(g.log_value) * ap[l1] * ap[l2] / (ap[g] ** 2 * sq[l1] * sq[l2])
        for q1, q2 in itertools.product(subsets, repeat=2):
            if not (q1.coprime(l1) and q2.coprime(l2)):
                continue
            gq = q1.gcd(q2)
            terms.append(outer * math.exp(gq.log_value) * aa[q1] * aa[q2]
                         / (aa[gq] ** 2 * sq[q1] * sq[q2]))
    return lhs, math.fsum(terms)


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------

def beta_theoretical(params: ResonatorParams, lam: float | None = None) -> float:
    lam = params.lam if lam is None else lam
    return 2 * params.gamma * params.phi * lam * math.log(params.h / lam**2)


def t_sigma(params: ResonatorParams, k: int, alpha: float = 0.5) -> float:
    """The reference size 2 k e (sqrt u - 1) u^(k/2) sqrt(log_3 N) / alpha for sigma."""
    u = params.u
    return (2 * k * math.e * (math.sqrt(u) - 1) * u ** (k / 2) / alpha
            * math.sqrt(iterated_log(params.N, 3)))


@dataclass
class SigmaLevel:
    k: int
    j_k: int
    sigma_exact: float
    T_sigma: float
    T_sigma_pow: float


@dataclass
class GalSumReport:
    d: int
    N: int
    size: int
    s_half_weighted: float
    s_third_weighted: float
    s_alpha_plain: float | None
    truncated: dict[float, float]
    normalized: float
    beta_empirical: float
    beta_theoretical: float
    h: float
    lcal_N: float
    sigma_levels: list[SigmaLevel] = field(default_factory=list)

    CSV_FIELDS = ("d", "N", "size", "s_half_weighted", "s_third_weighted", "s_alpha_plain",
                  "normalized", "beta_empirical", "beta_theoretical", "h", "lcal_N")

    def to_text(self) -> str:
        lines = [f"{k} = {getattr(self, k)!r}" for k in self.CSV_FIELDS]
        for X, v in self.truncated.items():
            lines.append(f"truncated[{X!r}] = {v!r}")
        for s in self.sigma_levels:
            lines.append(f"sigma[{s.k}] = j_k={s.j_k} exact={s.sigma_exact!r} "
                         f"T_sigma={s.T_sigma!r} T_sigma^j_k={s.T_sigma_pow!r}")
        return "\n".join(lines) + "\n"

    def csv_row(self) -> list:
        return [getattr(self, k) for k in self.CSV_FIELDS]

    def to_dict(self) -> dict:
        out = asdict(self)
        out["truncated"] = {repr(k): v for k, v in self.truncated.items()}
        return out


def report(M: ResonatorSet, *, truncation_points: int = 20, sigma_alpha: float = 0.5,
           plain_alpha: float | None = 0.5, threads: int = 1) -> GalSumReport:
    params, elements = M.params, list(M.elements)
    d = params.d
    grid = log_grid(math.exp(max_ratio_log(elements, threads=threads)), truncation_points)
    (s_half, trunc), (s_third, _) = _pair_sums(elements, [0.5, 1 / 3], d,
                                               [math.log(X) for X in grid], threads)
    plain = None if plain_alpha is None else gal_sum(elements, plain_alpha, threads=threads)
    normalized = s_half / len(elements)
    L = lcal(params.N)
    sig = [SigmaLevel(lev.k, lev.j, sigma_sum(params, lev.k, lev.j, FactoredInteger.one()),
                      t_sigma(params, lev.k, sigma_alpha),
                      t_sigma(params, lev.k, sigma_alpha) ** lev.j)
           for lev in params.levels]
    return GalSumReport(d, params.N, len(elements), s_half, s_third, plain,
                        dict(zip(grid, trunc)), normalized,
                        math.log(normalized) / math.log(L), beta_theoretical(params),
                        params.h, L, sig)


def reports_to_csv(reports: Sequence[GalSumReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(GalSumReport.CSV_FIELDS)
    for r in reports:
        w.writerow(r.csv_row())
    return buf.getvalue()


def trend_slope(reports: Sequence[GalSumReport]) -> float | None:
    """Least-squares slope of log(normalized) against phi(d) * log L(N)."""
    if len(reports) < 2:
        return None
    xs = np.array([euler_phi(r.d) * math.log(r.lcal_N) for r in reports])
    ys = np.array([math.log(r.normalized) for r in reports])
    xc = xs - xs.mean()
    denom = float(xc @ xc)
    if denom == 0:
        return None
    return float(xc @ (ys - ys.mean()) / denom)
