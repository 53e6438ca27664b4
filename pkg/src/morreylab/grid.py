"""Uniform Cartesian grids on a box, midpoint quadrature and dyadic cubes.

Functions live on cell centers ``x_i = -L + (i + 1/2) h`` and are extended by
zero outside the box.  A cell belongs to a ball or cube iff its center does.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Union

import numpy as np

# Relative slack (in units of h) used for every strict "|x - c| < r" test so
# that lattice ties are excluded consistently instead of by rounding luck.
TIE_SLACK = 1e-9


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    dim: int
    half_width: float
    points_per_axis: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"unsupported dimension {self.dim}")
        if not (isinstance(self.points_per_axis, (int, np.integer))
                and _is_power_of_two(int(self.points_per_axis))
                and self.points_per_axis >= 8):
            raise ValueError(
                f"points_per_axis must be a power of two >= 8, got {self.points_per_axis}")
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points_per_axis

    h = spacing

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dim

    @property
    def n_cells(self) -> int:
        return self.points_per_axis ** self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    @property
    def diameter(self) -> float:
        return 2.0 * self.half_width * np.sqrt(self.dim)

    @cached_property
    def axis_centers(self) -> np.ndarray:
        N, L, h = self.points_per_axis, self.half_width, self.spacing
        return -L + (np.arange(N) + 0.5) * h

    @cached_property
    def points(self) -> np.ndarray:
        """Cell centers as an ``(n_cells, dim)`` array in C order."""
        axes = np.meshgrid(*([self.axis_centers] * self.dim), indexing="ij")
        return np.stack([a.ravel() for a in axes], axis=-1)

    @cached_property
    def radii(self) -> np.ndarray:
        """Distance of every cell center to the origin, shaped like the grid."""
        return np.sqrt((self.points ** 2).sum(axis=1)).reshape(self.shape)

    def contains(self, point) -> bool:
        p = np.atleast_1d(np.asarray(point, dtype=float))
        return p.shape == (self.dim,) and bool(np.all(np.abs(p) <= self.half_width))

    def describe(self) -> dict:
        return {"dim": self.dim, "L": self.half_width, "N": self.points_per_axis}


def build_grid(dim: int, half_width: float, points_per_axis: int) -> Grid:
    return Grid(int(dim), float(half_width), points_per_axis)


@dataclass(frozen=True, eq=False)
class SampledFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.size != self.grid.n_cells:
            raise ValueError(f"expected {self.grid.n_cells} values, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise ValueError("sampled function has non-finite values")
        v = v.reshape(self.grid.shape)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def __add__(self, other: "SampledFunction") -> "SampledFunction":
        return SampledFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "SampledFunction") -> "SampledFunction":
        return SampledFunction(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> "SampledFunction":
        return SampledFunction(self.grid, c * self.values)

    __rmul__ = __mul__

    def __abs__(self) -> "SampledFunction":
        return SampledFunction(self.grid, np.abs(self.values))

    def shifted(self, cells) -> "SampledFunction":
        """Translate by an integer number of cells per axis, filling with zeros."""
        cells = np.broadcast_to(np.atleast_1d(cells), (self.grid.dim,))
        out = np.zeros(self.grid.shape)
        src, dst = [], []
        for s in cells:
            s = int(s)
            N = self.grid.points_per_axis
            if abs(s) >= N:
                return SampledFunction(self.grid, out)
            src.append(slice(max(0, -s), N - max(0, s)))
            dst.append(slice(max(0, s), N - max(0, -s)))
        out[tuple(dst)] = self.values[tuple(src)]
        return SampledFunction(self.grid, out)


def sample_on_grid(generator: Callable, grid: Grid) -> SampledFunction:
    """Evaluate ``generator`` at every cell center.

    The generator receives the center coordinates: a 1-D array of shape
    ``(n_cells,)`` when ``dim == 1`` and an ``(n_cells, 2)`` array otherwise.
    Scalar-valued (non-vectorized) callables are also accepted.
    """
    pts = grid.points[:, 0] if grid.dim == 1 else grid.points
    try:
        vals = np.asarray(generator(pts), dtype=float)
        if vals.shape == ():
            vals = np.full(grid.n_cells, float(vals))
        elif vals.size != grid.n_cells:
            raise TypeError
    except (TypeError, ValueError):
        vals = np.array([float(generator(p)) for p in pts])
    if not np.all(np.isfinite(vals)):
        bad = int(np.flatnonzero(~np.isfinite(vals))[0])
        raise ValueError(f"generator is not finite at cell center {grid.points[bad]}")
    return SampledFunction(grid, vals)


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")

    def dilate(self, factor: float) -> "Ball":
        return Ball(self.center, self.radius * factor)


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``[lo_i, hi_i)``."""
    lo: tuple
    hi: tuple


@dataclass(frozen=True, order=True)
class DyadicCube:
    level: int
    anchor: tuple
    side: float

    def __post_init__(self):
        object.__setattr__(self, "anchor", tuple(float(a) for a in np.atleast_1d(self.anchor)))
        if not self.side > 0:
            raise ValueError("cube side must be positive")
        if self.level < 0:
            raise ValueError("cube level must be nonnegative")

    @property
    def center(self) -> tuple:
        return tuple(a + self.side / 2 for a in self.anchor)

    @property
    def volume(self) -> float:
        return self.side ** len(self.anchor)


def root_cube(grid: Grid) -> DyadicCube:
    return DyadicCube(0, (-grid.half_width,) * grid.dim, 2.0 * grid.half_width)


def cube_slices(grid: Grid, q: DyadicCube) -> tuple[slice, ...]:
    """Index slices of the cells of a grid-aligned cube."""
    h = grid.spacing
    out = []
    for a in q.anchor:
        i0 = (a + grid.half_width) / h
        n = q.side / h
        i0r, nr = round(i0), round(n)
        if abs(i0 - i0r) > 1e-6 or abs(n - nr) > 1e-6 or nr < 1:
            raise ValueError(f"cube {q} is not aligned with the grid")
        out.append(slice(max(i0r, 0), min(i0r + nr, grid.points_per_axis)))
    return tuple(out)


Region = Union[None, Box, Ball, DyadicCube]


def region_mask(grid: Grid, region: Region) -> np.ndarray:
    """Boolean mask (grid-shaped) of cells whose center lies in ``region``."""
    if region is None:
        return np.ones(grid.shape, dtype=bool)
    pts = grid.points
    if isinstance(region, Ball):
        c = np.asarray(region.center)
        d = np.sqrt(((pts - c) ** 2).sum(axis=1))
        m = d < region.radius - TIE_SLACK * grid.spacing
    elif isinstance(region, DyadicCube):
        lo = np.asarray(region.anchor)
        m = np.all((pts >= lo) & (pts < lo + region.side), axis=1)
    elif isinstance(region, Box):
        m = np.all((pts >= np.asarray(region.lo)) & (pts < np.asarray(region.hi)), axis=1)
    else:
        raise TypeError(f"unsupported region {region!r}")
    return m.reshape(grid.shape)


def quad_integral(f: SampledFunction, region: Region = None) -> float:
    """Midpoint rule over the cells of ``region`` (the full box when None)."""
    if region is None:
        return float(f.values.sum() * f.grid.cell_volume)
    m = region_mask(f.grid, region)
    return float(f.values[m].sum() * f.grid.cell_volume)


def dyadic_children(q: DyadicCube, grid: Grid) -> list[DyadicCube]:
    half = q.side / 2
    if half < grid.spacing * (1 - 1e-9):
        raise ValueError(f"cube of side {q.side} is at cell level")
    n = len(q.anchor)
    kids = []
    for corner in np.ndindex(*(2,) * n):
        anchor = tuple(a + c * half for a, c in zip(q.anchor, corner))
        kids.append(DyadicCube(q.level + 1, anchor, half))
    return kids
