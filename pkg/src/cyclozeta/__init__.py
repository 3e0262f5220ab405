"""Large values of Dedekind zeta functions of cyclotomic fields: exact arithmetic,
the multiplicative resonator construction, weighted GCD sums and a guided search."""

from __future__ import annotations

__version__ = "0.1.0"

from .arith import FactoredInteger
from .characters import DirichletCharacter, character_group
from .dedekind import coefficient, coefficient_oracle, coefficient_table
from .galsums import GalSumReport, gal_sum, gal_sum_truncated, gal_sum_weighted, report
from .lfunc import EvalConfig, dedekind_zeta_direct, dedekind_zeta_value, lfunction_value, zeta_value
from .resonator import ResonatorParams, ResonatorSet, build_params, build_set
from .search import KernelParams, SearchResult, kernel_hat, kernel_value, search_large_values

__all__ = [
    "DirichletCharacter", "EvalConfig", "FactoredInteger", "GalSumReport", "KernelParams",
    "ResonatorParams", "ResonatorSet", "SearchResult", "build_params", "build_set",
    "character_group", "coefficient", "coefficient_oracle", "coefficient_table",
    "dedekind_zeta_direct", "dedekind_zeta_value", "gal_sum", "gal_sum_truncated",
    "gal_sum_weighted", "kernel_hat", "kernel_value", "lfunction_value", "report",
    "search_large_values", "zeta_value",
]
