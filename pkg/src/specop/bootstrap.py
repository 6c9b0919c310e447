"""Frequency-domain bootstrap for the spectral L2 test.

Fourier coefficients are redrawn at ``lambda_1..lambda_N`` as circular
complex Gaussian vectors whose covariance is the pooled spectral estimate,
smoothed exactly like the data, and turned into studentized replicates of
the test statistic.

Replicate ``r`` always draws from its own random substream derived from
``(master_seed, r)``, and replicates are processed in fixed-size chunks, so
results do not depend on the number of workers.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import teststat
from .errors import (ContractViolation, DegenerateStatisticError, IncompatibleError,
                     InvalidEstimateError, ScopeError)
from .fdata import FunctionalSample, center
from .spectral import (SpectralEstimate, WeightKernel, estimate, frequency_weights, get_kernel,
                       pooled)

logger = logging.getLogger(__name__)

_BOOTSTRAP_STREAM = 1
_REDRAW_STREAM = 2
HERMITIAN_TOL = 1e-10


def substream(master_seed: int, *path: int) -> np.random.Generator:
    """Counter-based generator keyed by ``master_seed`` and an integer path."""
    ss = np.random.SeedSequence(int(master_seed) & (2 ** 64 - 1), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(master_seed: int, *path: int) -> int:
    """A 64-bit integer seed for a child computation."""
    ss = np.random.SeedSequence(int(master_seed) & (2 ** 64 - 1), spawn_key=tuple(int(p) for p in path))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)


@dataclass(frozen=True)
class BootstrapPlan:
    B: int = 1000
    master_seed: int = 0
    workers: int = 1
    studentization: str = "full"
    chunk_size: int = 50

    def __post_init__(self):
        if self.B < 1:
            raise ContractViolation("B must be at least 1")
        if self.studentization not in ("full", "plugin"):
            raise ContractViolation(f"studentization must be 'full' or 'plugin', got {self.studentization!r}")
        if self.chunk_size < 1:
            raise ContractViolation("chunk_size must be positive")


@dataclass(frozen=True, eq=False)
class FrequencyFactor:
    frequency_index: int
    factor: np.ndarray


@dataclass(eq=False)
class BootstrapDistribution:
    t_star: np.ndarray
    mu0_star: np.ndarray
    theta0_star: np.ndarray
    u_star: np.ndarray
    sorted_t_star: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.sorted_t_star = np.sort(self.t_star)

    @property
    def B(self) -> int:
        return self.t_star.size

    def p_value(self, t_stat: float) -> float:
        return (1.0 + np.count_nonzero(self.t_star >= t_stat)) / (self.B + 1.0)

    def quantile(self, level: float) -> float:
        return float(np.quantile(self.t_star, level))


def factor_matrix(sigma: np.ndarray) -> np.ndarray:
    """``L`` with ``L L^H`` equal to ``sigma`` with negative eigenvalues clamped to zero."""
    if not np.allclose(sigma, sigma.conj().T, rtol=0,
                       atol=HERMITIAN_TOL * max(1.0, float(np.abs(sigma).max(initial=0.0)))):
        raise InvalidEstimateError("spectral slice is not Hermitian")
    herm = 0.5 * (sigma + sigma.conj().T)
    eig, vec = np.linalg.eigh(herm)
    # Largest eigenvalue first; the stable sort keeps ties in place so that I maps to I.
    order = np.argsort(-eig, kind="stable")
    return vec[:, order] * np.sqrt(np.clip(eig[order], 0.0, None))


def factorize(pool: SpectralEstimate) -> list[FrequencyFactor]:
    """Sampling factors for ``t = 1..N``."""
    return [FrequencyFactor(t, factor_matrix(pool.values[t])) for t in range(1, pool.N + 1)]


def standard_complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Circular complex normal with ``E[Z Z^H] = I`` and ``E[Z Z^T] = 0``."""
    z = rng.standard_normal((2, *shape))
    return (z[0] + 1j * z[1]) * np.sqrt(0.5)


def draw_coefficients(factor: FrequencyFactor | np.ndarray, rng: np.random.Generator) -> np.ndarray:
    L = factor.factor if isinstance(factor, FrequencyFactor) else np.asarray(factor)
    return L @ standard_complex_normal(rng, (L.shape[1],))


class _Context:
    """Read-only state shared by all replicates of one test."""

    def __init__(self, pool: SpectralEstimate, mu0: float | None = None,
                 theta0: float | None = None, studentization: str = "full"):
        self.pool = pool
        self.T, self.N, self.k, self.b = pool.T, pool.N, pool.k, pool.b
        self.kernel = pool.kernel
        self.factors = np.stack([f.factor for f in factorize(pool)]) if pool.N else np.zeros((0, pool.k, pool.k))
        pos, neg = frequency_weights(pool.T, pool.b, pool.kernel.name, pool.wrap)
        # Bootstrap coefficients vanish at frequency zero, so only columns 1..N matter.
        self.w_pos = np.ascontiguousarray(pos[:, 1:])
        w_neg = neg[:, 1:]
        self.fold = np.flatnonzero(np.any(w_neg != 0.0, axis=0))
        self.w_neg_f = np.ascontiguousarray(w_neg[:, self.fold])
        self.w_sum = self.w_pos + w_neg
        self.studentization = studentization
        self.mu0, self.theta0 = mu0, theta0
        if studentization == "plugin" and not (theta0 is not None and theta0 > 0):
            raise DegenerateStatisticError("plug-in studentization needs a positive theta0")

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        """Standard normals for one replicate, shape ``(2, N, k)`` (X then Y)."""
        return standard_complex_normal(rng, (2, self.N, self.k))

    def statistics(self, z: np.ndarray):
        """``(U*, mu0*, theta0*)`` for standard normals ``z`` of shape ``(m, 2, N, k)``.

        Only HS norms and traces of the smoothed kernels are needed, so they
        are evaluated as quadratic forms in the smoothing weights over the
        moduli ``|J_s^H J_s'|^2`` instead of forming the ``k x k`` kernels.
        Frequencies ``-s`` contribute through ``J_{-s} = conj(J_s)``.
        """
        j = np.matmul(self.factors, z[..., None])[..., 0]
        x, y = j[:, 0], j[:, 1]
        q_xx, d_x = self._self_forms(x)
        q_yy, d_y = self._self_forms(y)
        q_xy = self._cross_form(x, y)
        kk = float(self.k) ** 2
        scale = 2 * np.pi / self.T
        hs_diff = (q_xx + q_yy - 2.0 * q_xy) / kk
        hs_pool = 0.25 * (q_xx + q_yy + 2.0 * q_xy) / kk
        trace_pool = 0.5 * np.matmul(d_x + d_y, self.w_sum.T) / self.k
        u = scale * teststat._full_range_sum(hs_diff)
        mu0 = scale * teststat._full_range_sum(trace_pool ** 2) * self.kernel.c_w2 / np.pi
        theta2 = 4.0 / np.pi ** 2 * self.kernel.c_conv * scale * teststat._full_range_sum(hs_pool ** 2)
        return u, mu0, np.sqrt(theta2)

    def _form(self, w_left, kmat, w_right):
        """``sum_{s,s'} w_left[u, s] kmat[r, s, s'] w_right[u, s']`` for every ``r, u``."""
        return (np.matmul(w_left, kmat) * w_right).sum(axis=-1)

    def _self_forms(self, x):
        g1 = np.matmul(np.conj(x), np.swapaxes(x, -1, -2))
        k1 = g1.real ** 2 + g1.imag ** 2
        q = self._form(self.w_pos, k1, self.w_pos)
        fold = self.fold
        if fold.size:
            k1f = k1[:, fold][:, :, fold]
            q += self._form(self.w_neg_f, k1f, self.w_neg_f)
            g2 = np.matmul(x, np.swapaxes(x[:, fold], -1, -2))
            k2 = g2.real ** 2 + g2.imag ** 2
            q += 2.0 * self._form(self.w_pos, k2, self.w_neg_f)
        d = np.einsum("rsi,rsi->rs", x.real, x.real) + np.einsum("rsi,rsi->rs", x.imag, x.imag)
        return q, d

    def _cross_form(self, x, y):
        g1 = np.matmul(np.conj(x), np.swapaxes(y, -1, -2))
        k1 = g1.real ** 2 + g1.imag ** 2
        q = self._form(self.w_pos, k1, self.w_pos)
        fold = self.fold
        if fold.size:
            q += self._form(self.w_neg_f, k1[:, fold][:, :, fold], self.w_neg_f)
            ga = np.matmul(x, np.swapaxes(y[:, fold], -1, -2))
            q += self._form(self.w_pos, ga.real ** 2 + ga.imag ** 2, self.w_neg_f)
            gb = np.matmul(x[:, fold], np.swapaxes(y, -1, -2))
            q += self._form(self.w_neg_f, gb.real ** 2 + gb.imag ** 2, self.w_pos)
        return q

    def studentized(self, u, mu0, theta0):
        if self.studentization == "plugin":
            mu0 = np.full_like(u, self.mu0)
            theta0 = np.full_like(u, self.theta0)
        sb = np.sqrt(self.b)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (sb * self.T * u - mu0 / sb) / theta0
        return t, mu0, theta0

    def run_chunk(self, master_seed: int, start: int, stop: int):
        z = np.stack([self.draw(substream(master_seed, _BOOTSTRAP_STREAM, r)) for r in range(start, stop)])
        u, mu0, theta0 = self.statistics(z)
        bad = np.flatnonzero(~(theta0 > teststat.THETA_FLOOR))
        for i in bad:
            r = start + int(i)
            logger.warning("degenerate bootstrap replicate %d; redrawing", r)
            z1 = self.draw(substream(master_seed, _REDRAW_STREAM, r))[None]
            u1, mu1, th1 = self.statistics(z1)
            if not th1[0] > teststat.THETA_FLOOR:
                raise DegenerateStatisticError(
                    "bootstrap pooled estimate is identically zero; the pooled input is degenerate")
            u[i], mu0[i], theta0[i] = u1[0], mu1[0], th1[0]
        t, mu0, theta0 = self.studentized(u, mu0, theta0)
        return t, mu0, theta0, u


def _hs_sq(values: np.ndarray) -> np.ndarray:
    k = values.shape[-1]
    return (values.real ** 2 + values.imag ** 2).sum(axis=(-2, -1)) / k ** 2


def replicate(pool: SpectralEstimate, b: float | None = None, kernel: WeightKernel | None = None,
              rng: np.random.Generator | None = None, *, studentization: str = "full",
              mu0: float | None = None, theta0: float | None = None):
    """One bootstrap draw; returns ``(t_star, mu0_star, theta0_star)``.

    ``b`` and ``kernel`` default to those of ``pool``; when given they must match.
    """
    if b is not None and b != pool.b:
        raise IncompatibleError("bootstrap bandwidth must equal the bandwidth of the pooled estimate")
    if kernel is not None and kernel.name != pool.kernel.name:
        raise IncompatibleError("bootstrap kernel must equal the kernel of the pooled estimate")
    rng = rng if rng is not None else np.random.default_rng()
    ctx = _Context(pool, mu0, theta0, studentization)
    u, m, th = ctx.statistics(ctx.draw(rng)[None])
    if not th[0] > teststat.THETA_FLOOR:
        u, m, th = ctx.statistics(ctx.draw(rng)[None])
        if not th[0] > teststat.THETA_FLOOR:
            raise DegenerateStatisticError("bootstrap pooled estimate is identically zero")
    t, m, th = ctx.studentized(u, m, th)
    return float(t[0]), float(m[0]), float(th[0])


def bootstrap_distribution(pool: SpectralEstimate, plan: BootstrapPlan,
                           mu0: float | None = None, theta0: float | None = None) -> BootstrapDistribution:
    ctx = _Context(pool, mu0, theta0, plan.studentization)
    bounds = [(s, min(s + plan.chunk_size, plan.B)) for s in range(0, plan.B, plan.chunk_size)]
    workers = plan.workers
    if workers <= 0:
        workers = os.cpu_count() or 1
    if workers == 1 or len(bounds) == 1:
        parts = [ctx.run_chunk(plan.master_seed, s, e) for s, e in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda se: ctx.run_chunk(plan.master_seed, *se), bounds))
    t, m, th, u = (np.concatenate(x) for x in zip(*parts))
    return BootstrapDistribution(t, m, th, u)


def prepare(x: FunctionalSample, y: FunctionalSample) -> tuple[FunctionalSample, FunctionalSample]:
    if x.T != y.T:
        raise ScopeError(f"samples must have equal length (got T={x.T} and T={y.T}); "
                         "unequal lengths are not supported")
    if x.grid != y.grid:
        raise ScopeError(f"samples must share the same grid (k={x.k} vs k={y.k})")
    return center(x), center(y)


def run(x: FunctionalSample, y: FunctionalSample, b: float, kernel: WeightKernel | None = None,
        plan: BootstrapPlan | None = None, wrap: bool = False, d_norm: str = "k",
        return_distribution: bool = False):
    """Bootstrap-calibrated test of equal spectral density operators.

    Samples are centered first (a no-op on centered input). The p-value is
    ``(1 + #{t* >= t_U}) / (B + 1)``.
    """
    plan = plan or BootstrapPlan()
    kernel = kernel or get_kernel()
    x, y = prepare(x, y)
    fx = estimate(x, b, kernel, wrap)
    fy = estimate(y, b, kernel, wrap)
    result = teststat.compute(fx, fy, d_norm)
    dist = bootstrap_distribution(pooled(fx, fy), plan, result.mu0_hat, result.theta0_hat)
    result.p_value = dist.p_value(result.t_stat)
    result.t_star = dist.t_star
    if return_distribution:
        return result, dist
    return result


def gaussian_p_value(t_stat: float) -> float:
    """Upper-tail p-value from the standard normal limit."""
    return float(stats.norm.sf(t_stat))
