"""Functional samples: curves observed on a common grid in [0, 1]."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContractViolation, IllPosedProjectionError, InputSizeError, ParseError

MIN_LENGTH = 4
GRID_HEADER = "# grid:"


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Grid:
    """Ordered evaluation points ``0 <= s_1 < ... < s_k <= 1``."""

    points: np.ndarray

    def __post_init__(self):
        pts = _frozen(self.points)
        if pts.ndim != 1 or pts.size == 0:
            raise ContractViolation("grid must be a non-empty 1-d array")
        if not np.all(np.isfinite(pts)) or pts[0] < 0.0 or pts[-1] > 1.0:
            raise ContractViolation("grid points must lie in [0, 1]")
        if np.any(np.diff(pts) <= 0):
            raise ContractViolation("grid points must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @property
    def k(self) -> int:
        return self.points.size

    @classmethod
    def midpoint(cls, k: int) -> "Grid":
        """Equidistant midpoints ``(2j - 1) / (2k)``."""
        if k < 1:
            raise ContractViolation("k must be positive")
        return cls((2.0 * np.arange(1, k + 1) - 1.0) / (2.0 * k))

    @classmethod
    def endpoint(cls, k: int) -> "Grid":
        if k < 1:
            raise ContractViolation("k must be positive")
        if k == 1:
            return cls([0.5])
        return cls(np.linspace(0.0, 1.0, k))

    @classmethod
    def make(cls, k: int, policy: str = "midpoint") -> "Grid":
        if policy == "midpoint":
            return cls.midpoint(k)
        if policy == "endpoint":
            return cls.endpoint(k)
        raise ContractViolation(f"unknown grid policy {policy!r}")

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return self.k == other.k and bool(np.array_equal(self.points, other.points))

    def __hash__(self):
        return hash(self.points.tobytes())


@dataclass(frozen=True, eq=False)
class FunctionalSample:
    """``T`` curves (rows) evaluated on ``grid`` (columns)."""

    grid: Grid
    values: np.ndarray
    centered: bool = False

    def __post_init__(self):
        vals = _frozen(self.values)
        if vals.ndim == 1:
            vals = _frozen(vals.reshape(-1, 1))
        if vals.ndim != 2:
            raise ContractViolation("values must be a T x k array")
        if vals.shape[1] != self.grid.k:
            raise ContractViolation(
                f"values have {vals.shape[1]} columns but grid has {self.grid.k} points")
        if vals.shape[0] < MIN_LENGTH:
            raise InputSizeError(f"need at least {MIN_LENGTH} curves, got {vals.shape[0]}")
        if not np.all(np.isfinite(vals)):
            raise ContractViolation("values must be finite")
        if self.centered:
            scale = np.maximum(np.abs(vals).max(axis=0), 1.0)
            if np.any(np.abs(vals.sum(axis=0)) > 1e-10 * vals.shape[0] * scale):
                raise ContractViolation("sample flagged as centered has nonzero column means")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_array(cls, values, grid: Grid | None = None, centered: bool = False):
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        if grid is None:
            grid = Grid.midpoint(values.shape[1])
        return cls(grid, values, centered)

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def k(self) -> int:
        return self.grid.k

    def scaled(self, c: float) -> "FunctionalSample":
        return FunctionalSample(self.grid, c * self.values, self.centered)


@dataclass(frozen=True, eq=False)
class BasisProjection:
    """Fourier coefficients of each curve (constant, then cos/sin pairs)."""

    n_basis: int
    coefficients: np.ndarray = field(repr=False)


def load_csv(path, delimiter: str = ",", grid_policy: str = "midpoint") -> FunctionalSample:
    """Read one curve per row.

    An optional first line ``# grid: s_1,...,s_k`` supplies the grid
    coordinates; otherwise the grid is built from ``grid_policy``.
    Blank lines are ignored. Raises :class:`ParseError` naming the
    offending line on ragged rows or non-numeric cells.
    """
    path = Path(path)
    grid_pts = None
    rows = []
    width = None
    with path.open(encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith("#"):
                if stripped.lower().startswith(GRID_HEADER) and grid_pts is None and not rows:
                    body = stripped[len(GRID_HEADER):]
                    try:
                        grid_pts = [float(c) for c in body.split(delimiter)]
                    except ValueError as exc:
                        raise ParseError(f"{path}: bad grid header on line {lineno}: {exc}") from None
                continue
            cells = next(csv.reader([stripped], delimiter=delimiter))
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise ParseError(
                    f"{path}: ragged row {lineno}: expected {width} fields, got {len(cells)}")
            row = []
            for col, cell in enumerate(cells, start=1):
                try:
                    row.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"{path}: non-numeric cell {cell!r} at row {lineno}, column {col}") from None
            rows.append(row)
    if len(rows) < MIN_LENGTH:
        raise InputSizeError(f"{path}: need at least {MIN_LENGTH} rows, got {len(rows)}")
    values = np.array(rows, dtype=float)
    if not np.all(np.isfinite(values)):
        raise ParseError(f"{path}: non-finite values")
    if grid_pts is not None:
        if len(grid_pts) != values.shape[1]:
            raise ParseError(
                f"{path}: grid header has {len(grid_pts)} points, rows have {values.shape[1]}")
        try:
            grid = Grid(grid_pts)
        except ContractViolation as exc:
            raise ParseError(f"{path}: invalid grid header: {exc}") from None
    else:
        grid = Grid.make(values.shape[1], grid_policy)
    return FunctionalSample(grid, values, centered=False)


def write_csv(sample: FunctionalSample, path, delimiter: str = ",", with_grid: bool = True) -> None:
    """Write ``sample`` at 17 significant digits so that reloading is exact."""
    fmt = "%.17g"
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        if with_grid:
            fh.write(GRID_HEADER + " " + delimiter.join(fmt % s for s in sample.grid.points) + "\n")
        for row in sample.values:
            fh.write(delimiter.join(fmt % v for v in row) + "\n")


def center(sample: FunctionalSample) -> FunctionalSample:
    """Subtract the sample mean function."""
    if sample.centered:
        return sample
    values = sample.values - sample.values.mean(axis=0)
    # A second pass removes the O(eps) residual mean so that centering is idempotent.
    values = values - values.mean(axis=0)
    return FunctionalSample(sample.grid, values, centered=True)


def fourier_basis(points, n_basis: int) -> np.ndarray:
    """Evaluate ``1, sqrt2 cos(2 pi m s), sqrt2 sin(2 pi m s)`` for ``m = 1..(n_basis-1)/2``.

    Returns an array of shape ``(len(points), n_basis)``.
    """
    if n_basis < 1 or n_basis % 2 == 0:
        raise ContractViolation(f"n_basis must be an odd positive integer, got {n_basis}")
    s = np.asarray(points, dtype=float)
    cols = [np.ones_like(s)]
    for m in range(1, (n_basis - 1) // 2 + 1):
        cols.append(np.sqrt(2.0) * np.cos(2 * np.pi * m * s))
        cols.append(np.sqrt(2.0) * np.sin(2 * np.pi * m * s))
    return np.column_stack(cols)


def project(sample: FunctionalSample, n_basis: int) -> BasisProjection:
    """Coefficients of the quadrature (weight ``1/k``) projection onto the basis."""
    k = sample.k
    phi = fourier_basis(sample.grid.points, n_basis)
    if n_basis > k:
        raise IllPosedProjectionError(f"n_basis={n_basis} exceeds the number of grid points k={k}")
    gram = phi.T @ phi / k
    # On the midpoint grid gram is the identity; elsewhere it corrects for
    # the non-orthogonality of the sampled basis.
    if np.linalg.cond(gram) > 1e10:
        raise IllPosedProjectionError(
            f"Fourier basis with {n_basis} functions is rank deficient on this grid")
    inner = sample.values @ phi / k
    coef = np.linalg.solve(gram, inner.T).T
    return BasisProjection(n_basis, _frozen(coef))


def fourier_smooth(sample: FunctionalSample, n_basis: int = 21) -> FunctionalSample:
    """Replace each curve by its projection onto the Fourier basis span."""
    proj = project(sample, n_basis)
    phi = fourier_basis(sample.grid.points, n_basis)
    return FunctionalSample(sample.grid, proj.coefficients @ phi.T, sample.centered)
