"""Finite Fourier transforms, periodogram kernels and smoothed spectral density kernels.

Frequency-indexed objects are stored for ``t = 0..N`` only, ``N = (T - 1) // 2``.
Values at ``-t`` are the complex conjugates of those at ``t``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import ContractViolation, IncompatibleError
from .fdata import FunctionalSample, Grid


# -- weight kernels ----------------------------------------------------------

def _epanechnikov(x):
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) <= np.pi, 1.5 * (1.0 - (x / np.pi) ** 2), 0.0)


def _triangular(x):
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) <= np.pi, 2.0 * (1.0 - np.abs(x) / np.pi), 0.0)


_KERNELS: dict[str, Callable] = {
    "epanechnikov-2pi": _epanechnikov,
    "triangular-2pi": _triangular,
}


@dataclass(frozen=True, eq=False)
class WeightKernel:
    """Symmetric nonnegative weight function supported on ``[-pi, pi]``, integrating to ``2 pi``.

    ``c_w2`` is the integral of ``W**2`` and ``c_conv`` the integral over
    ``[-2 pi, 2 pi]`` of the squared self-convolution of ``W``. Both enter
    the centering and scaling of the studentized statistic.
    """

    name: str
    evaluator: Callable = field(repr=False)
    c_w2: float = field(init=False)
    c_conv: float = field(init=False)
    support_radius: float = np.pi

    def __post_init__(self):
        w = self.evaluator
        xs = np.linspace(-np.pi, np.pi, 2001)
        vals = w(xs)
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise ContractViolation(f"kernel {self.name!r} must be finite and nonnegative")
        if not np.allclose(vals, w(-xs), rtol=0, atol=1e-12):
            raise ContractViolation(f"kernel {self.name!r} is not symmetric")
        mass = integrate.quad(lambda u: float(w(u)), -np.pi, np.pi, points=[0.0],
                              epsabs=1e-12, epsrel=1e-12, limit=200)[0]
        if abs(mass - 2 * np.pi) > 1e-8:
            raise ContractViolation(f"kernel {self.name!r} integrates to {mass}, not 2*pi")
        c_w2 = integrate.quad(lambda u: float(w(u)) ** 2, -np.pi, np.pi, points=[0.0],
                              epsabs=1e-12, epsrel=1e-12, limit=200)[0]
        c_conv = _self_convolution_l2(w)
        if not (c_w2 > 0 and c_conv > 0):
            raise ContractViolation(f"kernel {self.name!r} has degenerate constants")
        object.__setattr__(self, "c_w2", c_w2)
        object.__setattr__(self, "c_conv", c_conv)

    def __call__(self, x):
        return self.evaluator(x)


def _self_convolution_l2(w) -> float:
    def conv(x):
        lo, hi = max(-np.pi, x - np.pi), min(np.pi, x + np.pi)
        if hi <= lo:
            return 0.0
        pts = [p for p in (0.0, x) if lo < p < hi]
        return integrate.quad(lambda u: float(w(u)) * float(w(u - x)), lo, hi,
                              points=pts or None, epsabs=1e-12, epsrel=1e-12, limit=200)[0]

    # The convolution is even in x.
    half = integrate.quad(lambda x: conv(x) ** 2, 0.0, 2 * np.pi, points=[np.pi],
                          epsabs=1e-10, epsrel=1e-12, limit=200)[0]
    return 2.0 * half


@lru_cache(maxsize=None)
def get_kernel(name: str = "epanechnikov-2pi") -> WeightKernel:
    try:
        return WeightKernel(name, _KERNELS[name])
    except KeyError:
        raise ContractViolation(
            f"unknown kernel {name!r}; choose from {sorted(_KERNELS)}") from None


def kernel_names() -> list[str]:
    return sorted(_KERNELS)


# -- finite Fourier transforms -----------------------------------------------

def n_frequencies(T: int) -> int:
    return (T - 1) // 2


def fourier_frequencies(T: int) -> np.ndarray:
    """``lambda_t = 2 pi t / T`` for ``t = 0..N``."""
    return 2 * np.pi * np.arange(n_frequencies(T) + 1) / T


@dataclass(frozen=True, eq=False)
class DFTFrame:
    """``coefficients[t, j] = J_{lambda_t}(s_j)`` for ``t = 0..N``."""

    T: int
    coefficients: np.ndarray
    grid: Grid

    @property
    def N(self) -> int:
        return n_frequencies(self.T)

    @property
    def k(self) -> int:
        return self.grid.k

    def at(self, t: int) -> np.ndarray:
        """Coefficient vector at frequency index ``t`` in ``-N..N``."""
        if abs(t) > self.N:
            raise IndexError(f"frequency index {t} outside -{self.N}..{self.N}")
        row = self.coefficients[abs(t)]
        return row if t >= 0 else np.conj(row)


def dft_frame(sample: FunctionalSample) -> DFTFrame:
    """``J_t(s_j) = (2 pi T)^{-1/2} sum_{u=1..T} X_u(s_j) exp(-i u lambda_t)`` via FFT."""
    T = sample.T
    N = n_frequencies(T)
    spec = np.fft.fft(sample.values, axis=0)[: N + 1]
    # numpy indexes time from 0; the definition starts at u = 1.
    phase = np.exp(-1j * fourier_frequencies(T))
    coef = spec * phase[:, None] / np.sqrt(2 * np.pi * T)
    coef.setflags(write=False)
    return DFTFrame(T, coef, sample.grid)


@dataclass(frozen=True, eq=False)
class PeriodogramKernel:
    frequency_index: int
    values: np.ndarray


def periodogram(frame: DFTFrame, t: int) -> PeriodogramKernel:
    """Rank-one kernel ``J_t(s_i) conj(J_t(s_j))``; negative ``t`` allowed."""
    j = frame.at(t)
    return PeriodogramKernel(t, np.outer(j, np.conj(j)))


# -- smoothing ---------------------------------------------------------------

@lru_cache(maxsize=64)
def frequency_weights(T: int, b: float, kernel_name: str = "epanechnikov-2pi",
                      wrap: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Raw smoothing weights on the stored half-range.

    Returns ``(pos, neg)`` of shape ``(N + 1, N + 1)`` with
    ``pos[u, t] = W((lambda_u - lambda_t) / b) / (b T)`` and
    ``neg[u, t] = W((lambda_u + lambda_t) / b) / (b T)``, the weight given to
    frequency ``-t``.
    """
    if not 0.0 < b < np.pi:
        raise ContractViolation(f"bandwidth must lie in (0, pi), got {b}")
    kernel = get_kernel(kernel_name)
    lam = fourier_frequencies(T)
    diff_pos = lam[:, None] - lam[None, :]
    diff_neg = lam[:, None] + lam[None, :]
    if wrap:
        diff_pos = np.angle(np.exp(1j * diff_pos))
        diff_neg = np.angle(np.exp(1j * diff_neg))
    pos = kernel(diff_pos / b) / (b * T)
    neg = kernel(diff_neg / b) / (b * T)
    for a in (pos, neg):
        a.setflags(write=False)
    return pos, neg


@lru_cache(maxsize=64)
def smoothing_weights(T: int, b: float, kernel_name: str = "epanechnikov-2pi",
                      wrap: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Folded weight matrices acting on the stored half-range ``t = 0..N``.

    ``plus[u, t] = pos[u, t] + neg[u, t]`` and ``minus[u, t] = pos[u, t] - neg[u, t]``
    for ``t >= 1``; column 0 holds ``pos[u, 0]`` (frequency zero counted once).
    The real part of the smoothed kernel is ``plus @ Re p`` and the imaginary
    part ``minus @ Im p``.
    """
    pos, neg = frequency_weights(T, b, kernel_name, wrap)
    plus = pos + neg
    minus = pos - neg
    plus[:, 0] = pos[:, 0]
    minus[:, 0] = pos[:, 0]
    for a in (plus, minus):
        a.setflags(write=False)
    return plus, minus


def smooth_coefficients(coef: np.ndarray, plus: np.ndarray, minus: np.ndarray) -> np.ndarray:
    """Smoothed kernels from Fourier coefficients of shape ``(..., N + 1, k)``.

    Returns complex ``(..., N + 1, k, k)``. Leading axes are batch axes.
    """
    p = coef[..., :, None] * np.conj(coef[..., None, :])
    *lead, n1, k, _ = p.shape
    flat = p.reshape(*lead, n1, k * k)
    re = np.matmul(plus, np.ascontiguousarray(flat.real))
    im = np.matmul(minus, np.ascontiguousarray(flat.imag))
    return (re + 1j * im).reshape(*lead, n1, k, k)


@dataclass(frozen=True, eq=False)
class SpectralEstimate:
    """Smoothed spectral density kernels ``values[t, i, j]`` for ``t = 0..N``."""

    T: int
    b: float
    kernel: WeightKernel
    values: np.ndarray
    grid: Grid
    wrap: bool = False

    @property
    def N(self) -> int:
        return n_frequencies(self.T)

    @property
    def k(self) -> int:
        return self.grid.k

    def at(self, t: int) -> np.ndarray:
        if abs(t) > self.N:
            raise IndexError(f"frequency index {t} outside -{self.N}..{self.N}")
        v = self.values[abs(t)]
        return v if t >= 0 else np.conj(v)

    def check_compatible(self, other: "SpectralEstimate") -> None:
        if (self.T != other.T or self.grid != other.grid or self.b != other.b
                or self.kernel.name != other.kernel.name or self.wrap != other.wrap
                or self.values.shape != other.values.shape):
            raise IncompatibleError("spectral estimates differ in T, grid, bandwidth or kernel")

    def with_values(self, values: np.ndarray) -> "SpectralEstimate":
        return SpectralEstimate(self.T, self.b, self.kernel, values, self.grid, self.wrap)

    def to_dict(self) -> dict:
        return {
            "T": self.T,
            "N": self.N,
            "b": self.b,
            "kernel_name": self.kernel.name,
            "grid": self.grid.points.tolist(),
            "re": self.values.real.ravel().tolist(),
            "im": self.values.imag.ravel().tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def smooth(frame: DFTFrame, b: float, kernel: WeightKernel | None = None,
           wrap: bool = False) -> SpectralEstimate:
    """Kernel-smoothed periodogram over ``t = -N..N``.

    No periodic wrap of the frequency window unless ``wrap`` is set.
    """
    kernel = kernel or get_kernel()
    plus, minus = smoothing_weights(frame.T, float(b), kernel.name, wrap)
    values = smooth_coefficients(frame.coefficients, plus, minus)
    values.setflags(write=False)
    return SpectralEstimate(frame.T, float(b), kernel, values, frame.grid, wrap)


def estimate(sample: FunctionalSample, b: float, kernel: WeightKernel | None = None,
             wrap: bool = False) -> SpectralEstimate:
    return smooth(dft_frame(sample), b, kernel, wrap)


def pooled(fx: SpectralEstimate, fy: SpectralEstimate) -> SpectralEstimate:
    fx.check_compatible(fy)
    values = 0.5 * fx.values + 0.5 * fy.values
    values.setflags(write=False)
    return fx.with_values(values)


def hs_inner(a: np.ndarray, b: np.ndarray, grid: Grid | None = None) -> complex:
    """Grid version of the Hilbert-Schmidt inner product, ``k^-2 sum a conj(b)``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise IncompatibleError(f"shape mismatch: {a.shape} vs {b.shape}")
    k = a.shape[0]
    if grid is not None and grid.k != k:
        raise IncompatibleError(f"slices are {k}x{k} but grid has {grid.k} points")
    return complex(np.vdot(b, a)) / k ** 2


def hs_sq(values: np.ndarray) -> np.ndarray:
    """Squared HS norm of each trailing ``k x k`` slice."""
    k = values.shape[-1]
    return (values.real ** 2 + values.imag ** 2).sum(axis=(-2, -1)) / k ** 2


def integrated_scalar_estimate(sample: FunctionalSample, b: float,
                               kernel: WeightKernel | None = None,
                               wrap: bool = False) -> np.ndarray:
    """Smoothed spectral density of the grid-averaged scalar series, ``t = 0..N``."""
    v = sample.values.mean(axis=1, keepdims=True)
    scalar = FunctionalSample(Grid([0.5]), v)
    est = smooth(dft_frame(scalar), b, kernel, wrap)
    return est.values[:, 0, 0].real.copy()
