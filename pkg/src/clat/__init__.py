"""Interval-rejection multiple testing with cdf-based error control."""

__version__ = "0.1.0"

from .dist import (
    DistributionSpec,
    FiniteMixture,
    GeneralizedGaussian,
    LocationScale,
    Normal,
    SpikeTriangle,
    StandardNormal,
    StudentT,
    TwoGroupModel,
    Uniform01,
    likelihood_ratio,
    mixture_cdf,
    mixture_pdf,
)
from .errors import ClatError, ConfigurationError, DomainError, ParameterError, SizeError, UndefinedPointError
from .procedure import (
    ClatConfig,
    PValueVector,
    RejectionResult,
    TwoSidedResult,
    clat,
    clat_brute_force,
    clat_left,
    clat_right,
    clat_search,
    clat_two_sided,
    pvalues_left,
    pvalues_right,
)
from .baselines import bh, em_fit, lfdr_em, lfdr_oracle, lfdr_sc, lfdr_stepup, z_from_t, z_from_unif
from .oracle import exists_rejection, oracle_bh_threshold, oracle_clat_interval, oracle_report
