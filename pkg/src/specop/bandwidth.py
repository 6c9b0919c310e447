"""Leave-one-out cross-validated bandwidth for the pooled spectral estimator."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .bootstrap import prepare
from .errors import ContractViolation, NoValidBandwidthError
from .fdata import FunctionalSample
from .spectral import WeightKernel, dft_frame, frequency_weights, get_kernel

logger = logging.getLogger(__name__)

DEFAULT_GRID = tuple(np.geomspace(0.02, 0.6, 25))


@dataclass(frozen=True, eq=False)
class CVResult:
    b_grid: np.ndarray
    scores: np.ndarray
    b_cv: float

    def to_dict(self) -> dict:
        return {"b_cv": self.b_cv, "b_grid": self.b_grid.tolist(),
                "scores": [s if np.isfinite(s) else None for s in self.scores.tolist()]}


def _averaged_periodogram_full(x: FunctionalSample, y: FunctionalSample) -> np.ndarray:
    """Averaged pooled periodogram for ``t = 0..N``.

    Summing the rank-one kernel over the grid gives ``|sum_i J(s_i)|^2``, so
    the average is computed from the grid-mean of the Fourier coefficients.
    """
    jx = dft_frame(x).coefficients.mean(axis=1)
    jy = dft_frame(y).coefficients.mean(axis=1)
    return 0.5 * (jx.real ** 2 + jx.imag ** 2) + 0.5 * (jy.real ** 2 + jy.imag ** 2)


def averaged_periodogram(x: FunctionalSample, y: FunctionalSample) -> np.ndarray:
    """``k^-2 sum_{r,s} (p_X + p_Y) / 2`` at ``lambda_t``, ``t = 1..N``."""
    x, y = prepare(x, y)
    return _averaged_periodogram_full(x, y)[1:]


def _loo_estimates(ihat: np.ndarray, T: int, b: float, kernel: WeightKernel, wrap: bool) -> np.ndarray:
    pos, neg = frequency_weights(T, float(b), kernel.name, wrap)
    t = np.arange(1, ihat.size)
    full = pos[1:] @ ihat + neg[1:, 1:] @ ihat[1:]
    # Drop s = t and s = -t.
    return full - (pos[t, t] + neg[t, t]) * ihat[1:]


def cv_score(b: float, x: FunctionalSample, y: FunctionalSample,
             kernel: WeightKernel | None = None, wrap: bool = False) -> float:
    """Whittle-type leave-one-out criterion; ``inf`` when any leave-one-out estimate is not positive."""
    if not 0.0 < b < np.pi:
        raise ContractViolation(f"bandwidth must lie in (0, pi), got {b}")
    kernel = kernel or get_kernel()
    x, y = prepare(x, y)
    ihat = _averaged_periodogram_full(x, y)
    if ihat.size < 2:
        return float("inf")
    g = _loo_estimates(ihat, x.T, b, kernel, wrap)
    if np.any(g <= 0):
        return float("inf")
    return float(np.mean(np.log(g) + ihat[1:] / g))


def select(x: FunctionalSample, y: FunctionalSample, b_grid=None,
           kernel: WeightKernel | None = None, wrap: bool = False) -> CVResult:
    """Minimize the CV score over ``b_grid``; ties go to the smaller bandwidth."""
    grid = np.asarray(DEFAULT_GRID if b_grid is None else b_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ContractViolation("bandwidth grid must be non-empty")
    if np.any(np.diff(grid) <= 0):
        raise ContractViolation("bandwidth grid must be strictly ascending")
    if grid[0] <= 0 or grid[-1] >= np.pi:
        raise ContractViolation("bandwidth grid must lie in (0, pi)")
    scores = np.array([cv_score(b, x, y, kernel, wrap) for b in grid])
    if not np.any(np.isfinite(scores)):
        raise NoValidBandwidthError("cross-validation score is infinite on the whole grid")
    best = int(np.argmin(scores))
    if grid.size > 1 and best in (0, grid.size - 1):
        logger.warning("cross-validation minimum at the grid edge b=%g; consider widening the grid", grid[best])
    return CVResult(grid, scores, float(grid[best]))
