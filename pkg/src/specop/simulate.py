"""Functional moving-average generators and the size/power Monte-Carlo harness."""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed
from scipy import special

from . import teststat
from .bootstrap import BootstrapPlan, bootstrap_distribution, derive_seed, prepare, substream
from .errors import ContractViolation
from .fdata import FunctionalSample, Grid, fourier_smooth
from .spectral import estimate, get_kernel, pooled

_DATA_STREAM = 3
_BOOT_STREAM = 4
_DENSITY_STREAM = 5

# 4 * int_0^1 exp(-t^2) dt
PSI_NORMALIZER = 2.0 * np.sqrt(np.pi) * special.erf(1.0)


def psi(u, v):
    return np.exp(-(np.asarray(u) ** 2 + np.asarray(v) ** 2) / 2.0) / PSI_NORMALIZER


@dataclass(frozen=True, eq=False)
class FMAModel:
    """``X_t = A1(eps_{t-1}) + a2 eps_{t-2} + eps_t`` against ``Y_t = A1(e_{t-1}) + e_t``."""

    a2: float = 0.0
    T: int = 100
    grid: Grid = field(default_factory=lambda: Grid.midpoint(21))
    n_basis: int | None = 21

    @property
    def psi_matrix(self) -> np.ndarray:
        s = self.grid.points
        return psi(s[:, None], s[None, :])

    @property
    def k(self) -> int:
        return self.grid.k


def _key(x: float) -> int:
    return int(round(x * 1_000_000))


def brownian_bridges(grid: Grid, rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` independent Brownian bridges on ``grid``, shape ``(n, k)``."""
    s = grid.points
    dt = np.diff(np.concatenate([[0.0], s, [1.0]]))
    w = np.cumsum(rng.standard_normal((n, s.size + 1)) * np.sqrt(dt), axis=1)
    return w[:, :-1] - s * w[:, -1:]


def brownian_bridge(grid: Grid, rng: np.random.Generator) -> np.ndarray:
    return brownian_bridges(grid, rng, 1)[0]


def apply_a1(model: FMAModel, curve: np.ndarray) -> np.ndarray:
    """Riemann quadrature of the integral operator with kernel ``psi``; acts on the last axis."""
    return np.asarray(curve) @ model.psi_matrix.T / model.k


def gen_pair(model: FMAModel, rng: np.random.Generator, smooth: bool = True):
    """One ``(X, Y)`` pair with independent innovation streams and exact MA start."""
    eps_rng, e_rng = rng.spawn(2)
    eps = brownian_bridges(model.grid, eps_rng, model.T + 2)
    e = brownian_bridges(model.grid, e_rng, model.T + 1)
    x = eps[2:] + apply_a1(model, eps[1:-1]) + model.a2 * eps[:-2]
    y = e[1:] + apply_a1(model, e[:-1])
    xs = FunctionalSample(model.grid, x)
    ys = FunctionalSample(model.grid, y)
    if smooth and model.n_basis:
        xs, ys = fourier_smooth(xs, model.n_basis), fourier_smooth(ys, model.n_basis)
    return xs, ys


@dataclass(frozen=True)
class ExperimentConfig:
    T: tuple = (100,)
    a2: tuple = (0.0,)
    b: tuple = (0.2,)
    alpha: tuple = (0.01, 0.05, 0.10)
    R: int = 500
    B: int = 1000
    master_seed: int = 0
    n_basis: int | None = 21
    k: int = 21
    grid_policy: str = "midpoint"
    kernel: str = "epanechnikov-2pi"
    studentization: str = "full"
    workers: int = 1

    def __post_init__(self):
        for name in ("T", "a2", "b", "alpha"):
            val = getattr(self, name)
            if not isinstance(val, tuple):
                object.__setattr__(self, name, tuple(val) if np.ndim(val) else (val,))
            if not getattr(self, name):
                raise ContractViolation(f"{name} list must be non-empty")
        if self.R < 1 or self.B < 1:
            raise ContractViolation("R and B must be at least 1")


def repetition(cfg: ExperimentConfig, T: int, a2: float, b: float, r: int):
    """Full bootstrap test on the ``r``-th simulated pair of a cell.

    Returns the sample-level :class:`~specop.teststat.TestResult` (with its
    p-value) and the bootstrap distribution.
    """
    model = FMAModel(a2, T, Grid.make(cfg.k, cfg.grid_policy), cfg.n_basis)
    rng = substream(cfg.master_seed, _DATA_STREAM, T, _key(a2), r)
    x, y = prepare(*gen_pair(model, rng))
    kernel = get_kernel(cfg.kernel)
    fx, fy = estimate(x, b, kernel), estimate(y, b, kernel)
    res = teststat.compute(fx, fy)
    plan = BootstrapPlan(B=cfg.B, studentization=cfg.studentization,
                         master_seed=derive_seed(cfg.master_seed, _BOOT_STREAM, T, _key(a2), _key(b), r))
    dist = bootstrap_distribution(pooled(fx, fy), plan, res.mu0_hat, res.theta0_hat)
    res.p_value = dist.p_value(res.t_stat)
    return res, dist


def repetition_pvalue(cfg: ExperimentConfig, T: int, a2: float, b: float, r: int) -> float:
    return repetition(cfg, T, a2, b, r)[0].p_value


def _map(func, jobs, workers: int):
    if workers == 1:
        return [func(*j) for j in jobs]
    return Parallel(n_jobs=workers)(delayed(func)(*j) for j in jobs)


@dataclass
class TableRow:
    T: int
    b: float
    a2: float
    R: int
    rates: dict
    p_values: np.ndarray = field(repr=False)

    def se(self, alpha: float) -> float:
        p = self.rates[alpha]
        return float(np.sqrt(p * (1 - p) / self.R))


def run_table(cfg: ExperimentConfig) -> list[TableRow]:
    """Empirical rejection rates for every ``(T, b, a2)`` cell and level ``alpha``."""
    rows = []
    for T, b, a2 in itertools.product(cfg.T, cfg.b, cfg.a2):
        jobs = [(cfg, T, a2, b, r) for r in range(cfg.R)]
        pv = np.array(_map(repetition_pvalue, jobs, cfg.workers))
        rates = {alpha: float(np.mean(pv <= alpha)) for alpha in cfg.alpha}
        rows.append(TableRow(T, b, a2, cfg.R, rates, pv))
    return rows


def write_table_csv(rows: list[TableRow], alphas, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["T", "b", "a2", "R"] + [f"alpha={a:g}" for a in alphas] + [f"se={a:g}" for a in alphas])
        for row in rows:
            w.writerow([row.T, row.b, row.a2, row.R]
                       + [f"{row.rates[a]:.3f}" for a in alphas]
                       + [f"{row.se(a):.4f}" for a in alphas])


def write_pvalues_csv(rows: list[TableRow], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["T", "b", "a2", "rep", "p_value"])
        for row in rows:
            for r, p in enumerate(row.p_values):
                w.writerow([row.T, row.b, row.a2, r, repr(float(p))])


def _exact_t(cfg: ExperimentConfig, T: int, b: float, r: int):
    model = FMAModel(0.0, T, Grid.make(cfg.k, cfg.grid_policy), cfg.n_basis)
    x, y = prepare(*gen_pair(model, substream(cfg.master_seed, _DENSITY_STREAM, T, r)))
    kernel = get_kernel(cfg.kernel)
    fx, fy = estimate(x, b, kernel), estimate(y, b, kernel)
    res = teststat.compute(fx, fy)
    return res.t_stat, fx, fy, res


def run_null_density(T: int, b: float, R_exact: int, B: int, master_seed: int = 0,
                     n_datasets: int = 1, cfg: ExperimentConfig | None = None):
    """Exact null draws of ``t_U`` and full bootstrap ``t*`` arrays for a few of the datasets.

    Returns ``(t_exact, t_star)`` with ``t_star`` of shape ``(n_datasets, B)``.
    """
    cfg = cfg or ExperimentConfig(T=(T,), b=(b,), a2=(0.0,), R=R_exact, B=B, master_seed=master_seed)
    cfg = ExperimentConfig(**{**cfg.__dict__, "master_seed": master_seed, "R": R_exact, "B": B})
    t_exact = np.array([_exact_t(cfg, T, b, r)[0] for r in range(R_exact)])
    chooser = substream(master_seed, _DENSITY_STREAM, T, 2 ** 31)
    chosen = chooser.choice(R_exact, size=n_datasets, replace=False)
    t_star = []
    for r in chosen:
        _, fx, fy, res = _exact_t(cfg, T, b, int(r))
        plan = BootstrapPlan(B=B, master_seed=derive_seed(master_seed, _DENSITY_STREAM, T, int(r)),
                             studentization=cfg.studentization, workers=cfg.workers)
        t_star.append(bootstrap_distribution(pooled(fx, fy), plan, res.mu0_hat, res.theta0_hat).t_star)
    return t_exact, np.array(t_star)


def write_density_csv(t_exact: np.ndarray, t_star: np.ndarray, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "exact.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["rep", "t_U"])
        for i, t in enumerate(t_exact):
            w.writerow([i, repr(float(t))])
    with (out / "bootstrap.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["dataset", "replicate", "t_star"])
        for d, row in enumerate(np.atleast_2d(t_star)):
            for i, t in enumerate(row):
                w.writerow([d, i, repr(float(t))])
