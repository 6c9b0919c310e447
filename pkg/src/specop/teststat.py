"""L2 distance between two spectral density estimates and its studentization."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContractViolation, DegenerateStatisticError
from .spectral import SpectralEstimate, WeightKernel, fourier_frequencies, hs_sq, pooled

THETA_FLOOR = 1e-300


def _full_range_sum(per_freq: np.ndarray) -> np.ndarray:
    """Sum over ``t = -N..N`` of a quantity even in ``t``, given ``t = 0..N`` on the last axis."""
    return per_freq[..., 0] + 2.0 * per_freq[..., 1:].sum(axis=-1)


def u_statistic(fx: SpectralEstimate, fy: SpectralEstimate) -> float:
    """Riemann sum over the Fourier frequencies of the squared HS distance."""
    fx.check_compatible(fy)
    delta = fx.values - fy.values
    return float(2 * np.pi / fx.T * _full_range_sum(hs_sq(delta)))


def mu0_hat(pool: SpectralEstimate, kernel: WeightKernel | None = None) -> float:
    kernel = kernel or pool.kernel
    trace = np.einsum("tii->t", pool.values).real / pool.k
    integral = 2 * np.pi / pool.T * _full_range_sum(trace ** 2)
    return float(integral * kernel.c_w2 / np.pi)


def theta0_hat(pool: SpectralEstimate, kernel: WeightKernel | None = None) -> float:
    kernel = kernel or pool.kernel
    integral = 2 * np.pi / pool.T * _full_range_sum(hs_sq(pool.values) ** 2)
    theta = float(np.sqrt(4.0 / np.pi ** 2 * kernel.c_conv * integral))
    if not theta > THETA_FLOOR:
        raise DegenerateStatisticError("pooled spectral estimate is identically zero")
    return theta


def studentize(u: float, mu0: float, theta0: float, b: float, T: int) -> float:
    """``(sqrt(b) T u - mu0 / sqrt(b)) / theta0``."""
    if not theta0 > 0:
        raise DegenerateStatisticError(f"theta0 must be positive, got {theta0}")
    return (np.sqrt(b) * T * u - mu0 / np.sqrt(b)) / theta0


def q_profile(fx: SpectralEstimate, fy: SpectralEstimate, theta0: float, b: float) -> np.ndarray:
    """Per-frequency contribution ``2 pi sqrt(b) ||dF_j||^2 / theta0``, ``j = 0..N``."""
    if not theta0 > 0:
        raise DegenerateStatisticError(f"theta0 must be positive, got {theta0}")
    fx.check_compatible(fy)
    return 2 * np.pi * np.sqrt(b) * hs_sq(fx.values - fy.values) / theta0


def d_map(fx: SpectralEstimate, fy: SpectralEstimate, theta0: float, b: float,
          norm: str = "k") -> np.ndarray:
    """Per-grid-cell contribution summed over all frequencies ``-N..N``.

    ``norm="k"`` divides by ``k**2`` so the map sums to the full-range sum of
    :func:`q_profile`. ``norm="T"`` divides by ``T**2`` instead.
    """
    if norm not in ("k", "T"):
        raise ContractViolation(f"norm must be 'k' or 'T', got {norm!r}")
    if not theta0 > 0:
        raise DegenerateStatisticError(f"theta0 must be positive, got {theta0}")
    fx.check_compatible(fy)
    delta = fx.values - fy.values
    sq = delta.real ** 2 + delta.imag ** 2
    total = sq[0] + 2.0 * sq[1:].sum(axis=0)
    denom = fx.k ** 2 if norm == "k" else fx.T ** 2
    return 2 * np.pi * np.sqrt(b) / denom * total / theta0


@dataclass
class TestResult:
    u_stat: float
    mu0_hat: float
    theta0_hat: float
    t_stat: float
    b: float
    T: int
    k: int
    q_profile: np.ndarray = field(repr=False)
    d_map: np.ndarray = field(repr=False)
    p_value: float | None = None
    t_star: np.ndarray | None = field(default=None, repr=False)
    grid: np.ndarray | None = field(default=None, repr=False)

    __test__ = False  # not a pytest class

    def to_dict(self, include_bootstrap: bool = False) -> dict:
        d = {
            "u_stat": self.u_stat,
            "mu0_hat": self.mu0_hat,
            "theta0_hat": self.theta0_hat,
            "t_stat": self.t_stat,
            "p_value": self.p_value,
            "b": self.b,
            "T": self.T,
            "k": self.k,
            "q_profile": np.asarray(self.q_profile).tolist(),
            "d_map": np.asarray(self.d_map).tolist(),
        }
        if include_bootstrap and self.t_star is not None:
            d["t_star_sorted"] = np.sort(self.t_star).tolist()
        return d

    def to_json(self, include_bootstrap: bool = False, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(include_bootstrap), indent=indent)

    def write_q_csv(self, path) -> None:
        lam = fourier_frequencies(self.T)
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["lambda", "q"])
            for x, q in zip(lam, self.q_profile):
                w.writerow([repr(float(x)), repr(float(q))])

    def write_d_csv(self, path) -> None:
        pts = self.grid if self.grid is not None else (2 * np.arange(1, self.k + 1) - 1) / (2 * self.k)
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["sigma", "tau", "d2"])
            for r in range(self.k):
                for l in range(self.k):
                    w.writerow([repr(float(pts[r])), repr(float(pts[l])), repr(float(self.d_map[r, l]))])


def compute(fx: SpectralEstimate, fy: SpectralEstimate, d_norm: str = "k") -> TestResult:
    """All sample-level quantities; studentization uses the pooled estimate."""
    pool = pooled(fx, fy)
    u = u_statistic(fx, fy)
    mu0 = mu0_hat(pool)
    theta0 = theta0_hat(pool)
    t = studentize(u, mu0, theta0, fx.b, fx.T)
    return TestResult(
        u_stat=u, mu0_hat=mu0, theta0_hat=theta0, t_stat=float(t), b=fx.b, T=fx.T, k=fx.k,
        q_profile=q_profile(fx, fy, theta0, fx.b),
        d_map=d_map(fx, fy, theta0, fx.b, d_norm),
        grid=fx.grid.points,
    )
