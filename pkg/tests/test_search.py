from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cyclozeta.arith import FactoredInteger
from cyclozeta.errors import PreconditionError
from cyclozeta.search import (KernelParams, SearchResult, append_ledger, bucket_index,
                              build_buckets, default_resonator, golden_section_max, kernel_hat,
                              kernel_hat_imag, kernel_value, kernel_check_report, resonator_on_grid,
                              resonator_value, results_to_csv, score_grid, search_large_values,
                              sinc_power_integral)
from cyclozeta.suites import construction

F = FactoredInteger.from_int


def closed_form_sinc_power(n: int, w: float) -> float:
    """integral over R of (sin x / x)^n cos(w x) dx via the piecewise polynomial formula."""
    total = 0.0
    for k in range(n + 1):
        base = n - 2 * k - abs(w)
        if base > 0:
            total += (-1) ** k * math.comb(n, k) * base ** (n - 1)
    return math.pi / (2 ** (n - 1) * math.factorial(n - 1)) * total


@pytest.mark.parametrize("eta", [1, 2, 3, 4])
def test_quadrature_matches_closed_form(eta):
    for w in (0.0, 0.3, 1.0, 1.7, 2 * eta - 0.5):
        assert sinc_power_integral(eta, w) == pytest.approx(closed_form_sinc_power(2 * eta, w),
                                                            abs=1e-9)
    assert sinc_power_integral(eta, 2 * eta + 0.1) == 0


def test_kernel_pointwise():
    kp = KernelParams(4, 0.05, 1e4)
    assert kernel_value(0.0, kp) == pytest.approx(kp.c)
    assert kernel_value(math.pi / kp.c, kp) == pytest.approx(0, abs=1e-20)
    us = np.linspace(-500, 500, 1001)
    assert all(kernel_value(u, kp) >= 0 for u in us)


def test_kernel_transform_properties():
    kp = KernelParams(4, 0.05, 1e4)
    grid = np.linspace(0, kp.band_limit, 25)
    for v in grid:
        assert abs(kernel_hat_imag(v, kp)) < 1e-10
        assert kernel_hat(-v, kp) == kernel_hat(v, kp)
    assert kernel_hat(kp.band_limit * 1.01, kp) == 0
    rep = kernel_check_report(kp, [0.0])
    assert rep.ok


def test_kernel_asymptotic_constant():
    rep = kernel_check_report(KernelParams(100, 0.05, 1e4), [0.0])
    assert rep.hat_zero == pytest.approx(0.306768, abs=5e-6)
    assert 0.95 <= rep.asymptotic_ratio <= 1.05


def test_bucket_rules():
    rb = build_buckets([F(1)], 1e4)
    assert len(rb.buckets) == 1 and rb.buckets[0].r == 1
    # 10000 and 10001 differ by a factor below 1 + 1/T and share one bucket
    rb = build_buckets([F(10000), F(10001)], 100)
    assert len(rb.buckets) == 1
    assert rb.buckets[0].r == pytest.approx(math.sqrt(2)) and int(rb.buckets[0].h) == 10000
    assert bucket_index(0.0, 100) == -1


@given(st.floats(1e-6, 50), st.floats(20, 1e6))
def test_bucket_index_brackets(log_m, T):
    j = bucket_index(log_m, T)
    step = math.log1p(1 / T)
    assert j * step < log_m * (1 + 1e-12) and log_m <= (j + 1) * step * (1 + 1e-12)


def test_bucket_partition_and_resonator_bound():
    M = construction(3, 2**11)
    rb = build_buckets(M, 1e4)
    assert sum(b.r**2 for b in rb.buckets) == pytest.approx(len(M), rel=1e-12)
    R0 = resonator_value(0.0, rb)
    assert R0.imag == 0 and R0.real == pytest.approx(sum(b.r for b in rb.buckets))
    grid = resonator_on_grid(3.0, 0.7, 700, rb)
    assert np.all(np.abs(grid) <= R0.real * (1 + 1e-12))
    for i in (0, 1, 511, 512, 699):
        assert grid[i] == pytest.approx(resonator_value(3.0 + 0.7 * i, rb), rel=1e-9, abs=1e-9)


def test_single_bucket_resonator_is_unimodular():
    rb = build_buckets([F(7)], 1e4)
    assert all(abs(abs(resonator_value(t, rb)) - 1) < 1e-15 for t in (0, 1.3, 99.9))


def test_score_grid_weightings():
    M = construction(3, 2**10)
    ts, plain = score_grid(M, 1e3, 100, 0.5, "none")
    _, weighted = score_grid(M, 1e3, 100, 0.5, "gaussian")
    assert ts[0] == 0.5 and ts[1] == pytest.approx(10.5)
    assert np.all(weighted <= plain)
    with pytest.raises(PreconditionError):
        score_grid(M, 1e3, 100, 0.5, "other")


def test_golden_section():
    x, fx, used = golden_section_max(lambda t: -(t - 1.234) ** 2, 0, 3, 60, 1e-12)
    assert x == pytest.approx(1.234, abs=1e-8) and used <= 60


def test_search_runs_and_is_deterministic(tmp_path):
    M = default_resonator(3, 200.0)
    a = search_large_values(3, 200.0, M, 40, 3)
    b = search_large_values(3, 200.0, M, 40, 3)
    assert a == b
    assert a.evaluations <= a.budget and 0 <= a.t_star <= 200 and 0 <= a.baseline_t <= 200
    assert SearchResult.from_text(a.to_text()) == a
    path = tmp_path / "ledger.csv"
    append_ledger(a, path)
    append_ledger(b, path)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(SearchResult.LEDGER_FIELDS) and len(lines) == 3
    assert results_to_csv([a]).splitlines()[0] == lines[0]


def test_degenerate_resonator_still_searches():
    from cyclozeta.resonator import RegimeWarning, build_params, build_set
    with pytest.warns(RegimeWarning):
        M = build_set(build_params(3, 17))
    assert len(M) >= 1
    r = search_large_values(3, 100.0, M, 20, 0, weighting="gaussian")
    assert r.zeta_abs > 0 and r.weighting == "gaussian"


def test_exhaustive_budget_beats_random():
    # with enough evaluations the guided grid is finer than 1/log T across [0, T]
    T = 60.0
    M = default_resonator(3, T)
    r = search_large_values(3, T, M, 400, 1)
    assert r.zeta_abs >= r.baseline_max


def test_search_argument_checks():
    M = default_resonator(3, 200.0)
    with pytest.raises(PreconditionError):
        search_large_values(3, 200.0, M, 5, 0)
    with pytest.raises(PreconditionError):
        search_large_values(3, 2e5, M, 50, 0)
    with pytest.raises(PreconditionError):
        search_large_values(3, 200.0, M, 50, -1)


def test_threaded_search_matches_serial():
    M = default_resonator(3, 300.0)
    a = search_large_values(3, 300.0, M, 60, 2)
    b = search_large_values(3, 300.0, M, 60, 2, threads=3)
    assert abs(a.t_star - b.t_star) <= 1e-9 * 300 and a.zeta_abs == pytest.approx(b.zeta_abs)
