"""Numeric tolerances used throughout the package.

Every tolerance lives on one frozen record so callers can override a single
value with :func:`dataclasses.replace` and pass it down.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class NumericSettings:
    hermitian_atol: float = 1e-12
    # X is treated as PSD when lambda_min >= -psd_rtol * ||X||
    psd_rtol: float = 1e-8
    pd_rtol: float = 1e-12
    # feasibility certificate slack (normalized constraint units)
    feasibility_tol: float = 1e-7
    # relative width at which bisection over t stops
    bisection_tol: float = 1e-6
    rank_ratio_flag: float = 1e-4
    ipm_max_iter: int = 200
    ipm_gap_tol: float = 1e-10
    ipm_feas_tol: float = 1e-10


DEFAULT_SETTINGS = NumericSettings()


def resolve(settings: NumericSettings | None) -> NumericSettings:
    return DEFAULT_SETTINGS if settings is None else settings
