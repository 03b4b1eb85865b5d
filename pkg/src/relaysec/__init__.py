"""Secrecy-rate beamforming for collaborative relay networks.

Decode-and-forward designs live in :mod:`relaysec.df`, amplify-and-forward
in :mod:`relaysec.af`, designs under imperfect channel knowledge in
:mod:`relaysec.robust`. All of them run on the small dense conic solver in
:mod:`relaysec.conic`.
"""

from .af import (
    AfChannelData,
    af_achievable,
    af_individual_bounds,
    af_optimize,
    af_precompute,
    af_secrecy_rate,
    af_total_bounds,
)
from .channel import (
    ChannelRealization,
    ChannelStatistics,
    PowerConstraint,
    PowerKind,
    load_channel,
    sample_channel,
    save_channel,
)
from .df import (
    df_individual_socp,
    df_individual_sdr,
    df_low_snr_direction,
    df_null_space,
    df_secrecy_rate,
    df_suboptimal,
    df_total_power,
)
from .errors import DegenerateError, DomainError, ParseError, RelaySecError, SolverError, ValidationError
from .oracle import random_search_oracle
from .robust import CsiUncertainty, robust_statistical, robust_worst_case, validate_nonoutage
from .settings import NumericSettings

__version__ = "0.1.0"

__all__ = [
    "AfChannelData",
    "ChannelRealization",
    "ChannelStatistics",
    "CsiUncertainty",
    "DegenerateError",
    "DomainError",
    "NumericSettings",
    "ParseError",
    "PowerConstraint",
    "PowerKind",
    "RelaySecError",
    "SolverError",
    "ValidationError",
    "af_achievable",
    "af_individual_bounds",
    "af_optimize",
    "af_precompute",
    "af_secrecy_rate",
    "af_total_bounds",
    "df_individual_socp",
    "df_individual_sdr",
    "df_low_snr_direction",
    "df_null_space",
    "df_secrecy_rate",
    "df_suboptimal",
    "df_total_power",
    "load_channel",
    "random_search_oracle",
    "robust_statistical",
    "robust_worst_case",
    "sample_channel",
    "save_channel",
    "validate_nonoutage",
]
