"""Two-sample test for equality of spectral density operators of functional time series."""

from .bandwidth import CVResult, averaged_periodogram, cv_score, select
from .bootstrap import BootstrapDistribution, BootstrapPlan, run
from .errors import (ContractViolation, DegenerateStatisticError, IncompatibleError, ParseError,
                     ScopeError, SpecopError)
from .fdata import FunctionalSample, Grid, center, fourier_smooth, load_csv, write_csv
from .spectral import SpectralEstimate, WeightKernel, dft_frame, estimate, get_kernel, pooled, smooth
from .teststat import TestResult, u_statistic

__version__ = "0.1.0"

__all__ = [
    "BootstrapDistribution", "BootstrapPlan", "CVResult", "ContractViolation",
    "DegenerateStatisticError", "FunctionalSample", "Grid", "IncompatibleError", "ParseError",
    "ScopeError", "SpecopError", "SpectralEstimate", "TestResult", "WeightKernel",
    "averaged_periodogram", "center", "cv_score", "dft_frame", "estimate", "fourier_smooth",
    "get_kernel", "load_csv", "pooled", "run", "select", "smooth", "u_statistic", "write_csv",
]
