"""Power weights, finite ball families and Muckenhoupt / reverse Hölder diagnostics.

Every supremum "over all balls" is replaced by a maximum over a finite
:class:`BallFamily`.  The same family is shared with the Morrey norms so both
sides of an inequality see the same balls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Optional

import numpy as np
from scipy.signal import fftconvolve

from .grid import TIE_SLACK, Grid, SampledFunction


@dataclass(frozen=True, eq=False)
class Weight:
    data: SampledFunction
    family_tag: dict = field(default_factory=dict)

    def __post_init__(self):
        v = self.data.values
        if not (np.all(np.isfinite(v)) and np.all(v > 0)):
            raise ValueError("weight values must be positive and finite")

    @property
    def grid(self) -> Grid:
        return self.data.grid

    @property
    def flat(self) -> np.ndarray:
        return self.data.flat

    @property
    def exponent(self) -> Optional[float]:
        return self.family_tag.get("a")

    def scaled(self, c: float) -> "Weight":
        return Weight(SampledFunction(self.grid, c * self.data.values), dict(self.family_tag))

    def label(self) -> str:
        a = self.exponent
        return "custom" if a is None else f"|x|^{a:g}"


def build_power_weight(a: float, grid: Grid) -> Weight:
    """``|x|^a`` sampled at cell centers (no center sits at the origin)."""
    if a <= -grid.dim:
        raise ValueError(f"|x|^{a} is not locally integrable in dimension {grid.dim}")
    vals = np.ones(grid.shape) if a == 0 else grid.radii ** a
    return Weight(SampledFunction(grid, vals), {"kind": "power", "a": float(a)})


def _ball_stencil(grid: Grid, radius: float) -> np.ndarray:
    M = int(math.floor(radius / grid.spacing))
    m = np.arange(-M, M + 1) * grid.spacing
    mesh = np.meshgrid(*([m] * grid.dim), indexing="ij")
    return (np.sqrt(sum(g * g for g in mesh)) < radius - TIE_SLACK * grid.spacing).astype(float)


def _valid_conv(a: np.ndarray, k: np.ndarray) -> np.ndarray:
    if a.ndim == 1:
        return np.convolve(a, k, mode="valid")
    return fftconvolve(a, k, mode="valid")


@lru_cache(maxsize=512)
def _power_ball_sums(a: float, grid: Grid, radius: float) -> np.ndarray:
    D = _ball_stencil(grid, radius)
    M = (D.shape[0] - 1) // 2
    h = grid.spacing
    axis = grid.axis_centers
    ext = np.concatenate([axis[0] - h * np.arange(M, 0, -1), axis, axis[-1] + h * np.arange(1, M + 1)])
    mesh = np.meshgrid(*([ext] * grid.dim), indexing="ij")
    r = np.sqrt(sum(g * g for g in mesh))
    vals = np.ones_like(r) if a == 0 else r ** a
    out = _valid_conv(vals, D) * grid.cell_volume
    out.setflags(write=False)
    return out


def lattice_ball_sums(w: Weight, radius: float) -> np.ndarray:
    """``w(B(y, radius))`` at every cell center ``y``, over the unbounded lattice.

    Power weights are extended beyond the box by their formula; any other
    weight is taken as zero outside the box.
    """
    g = w.grid
    if w.family_tag.get("kind") == "power":
        base = _power_ball_sums(float(w.exponent), g, float(radius))
        scale = w.data.values.flat[0] / (g.radii.flat[0] ** w.exponent)
        return base if scale == 1.0 else base * scale
    D = _ball_stencil(g, radius)
    M = (D.shape[0] - 1) // 2
    return _valid_conv(np.pad(w.data.values, M), D) * g.cell_volume


def is_a1_exponent(a: float, n: int) -> bool:
    return -n < a <= 0


def is_ap_exponent(a: float, n: int, p: float) -> bool:
    if p == 1:
        return is_a1_exponent(a, n)
    return -n < a < n * (p - 1)


@dataclass(eq=False)
class BallFamily:
    """An explicit finite list of balls ``B(centers[i], radii[i])`` on a grid."""

    grid: Grid
    centers: np.ndarray
    radii: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.centers = np.atleast_2d(np.asarray(self.centers, dtype=float)).reshape(-1, self.grid.dim)
        self.radii = np.asarray(self.radii, dtype=float).ravel()
        if len(self.centers) != len(self.radii):
            raise ValueError("centers and radii must have equal length")
        if len(self.radii) == 0:
            raise ValueError("ball family is empty")
        if np.any(self.radii <= 0):
            raise ValueError("ball radii must be positive")

    def __len__(self) -> int:
        return len(self.radii)

    @classmethod
    def lattice(cls, grid: Grid, stride: Optional[int] = None, k_min: int = 0,
                k_max: Optional[int] = None) -> "BallFamily":
        """Centers on every ``stride``-th cell center, radii ``h * 2**k``."""
        N, h = grid.points_per_axis, grid.spacing
        stride = max(N // 16, 1) if stride is None else int(stride)
        if stride < 1:
            raise ValueError("stride must be >= 1")
        if k_max is None:
            k_max = int(np.floor(np.log2(grid.half_width / 2 / h) + 1e-9))
        if k_max < k_min:
            raise ValueError("empty radius range")
        axis = grid.axis_centers[stride // 2::stride]
        cs = np.stack([a.ravel() for a in np.meshgrid(*([axis] * grid.dim), indexing="ij")], -1)
        rs = h * 2.0 ** np.arange(k_min, k_max + 1)
        centers = np.repeat(cs, len(rs), axis=0)
        radii = np.tile(rs, len(cs))
        return cls(grid, centers, radii,
                   {"kind": "lattice", "stride": stride, "k_min": k_min, "k_max": int(k_max)})

    @classmethod
    def centered(cls, grid: Grid, center, radii) -> "BallFamily":
        radii = np.asarray(radii, dtype=float).ravel()
        c = np.broadcast_to(np.asarray(center, dtype=float), (len(radii), grid.dim))
        return cls(grid, c, radii, {"kind": "centered", "center": list(np.atleast_1d(center))})

    def union(self, other: "BallFamily") -> "BallFamily":
        return BallFamily(self.grid, np.vstack([self.centers, other.centers]),
                          np.concatenate([self.radii, other.radii]),
                          {"kind": "union", "parts": [self.meta, other.meta]})

    def dilated(self, factor: float) -> "BallFamily":
        return BallFamily(self.grid, self.centers, self.radii * factor,
                          {**self.meta, "dilation": factor})

    def inside_box(self) -> np.ndarray:
        """Which balls lie within the closed box."""
        L = self.grid.half_width
        reach = np.abs(self.centers).max(axis=1) + self.radii
        return reach <= L * (1 + 1e-12)

    @cached_property
    def masks(self) -> np.ndarray:
        """Boolean ``(n_balls, n_cells)`` cell-membership matrix."""
        pts = self.grid.points
        out = np.empty((len(self), self.grid.n_cells), dtype=bool)
        slack = TIE_SLACK * self.grid.spacing
        for lo in range(0, len(self), 512):
            c = self.centers[lo:lo + 512]
            d2 = ((c[:, None, :] - pts[None, :, :]) ** 2).sum(axis=-1)
            r = self.radii[lo:lo + 512, None] - slack
            out[lo:lo + 512] = d2 < r * r
        return out

    @cached_property
    def indicator(self) -> np.ndarray:
        return self.masks.astype(float)

    @cached_property
    def counts(self) -> np.ndarray:
        return self.masks.sum(axis=1)

    @cached_property
    def member_groups(self) -> list:
        """Balls grouped by cell count: ``(ball_ids, cells)`` with ``cells`` padded by ``n_cells``."""
        order = np.argsort(self.counts, kind="stable")
        groups = []
        for lo in range(0, len(order), 256):
            ids = order[lo:lo + 256]
            width = max(int(self.counts[ids].max()), 1)
            cells = np.full((len(ids), width), self.grid.n_cells, dtype=np.int64)
            for row, b in enumerate(ids):
                nz = np.flatnonzero(self.masks[b])
                cells[row, :len(nz)] = nz
            groups.append((ids, cells))
        return groups

    def sums(self, values: np.ndarray) -> np.ndarray:
        """Cell sums (without the ``h**n`` factor) of ``values`` over each ball."""
        return self.indicator @ np.asarray(values, dtype=float).ravel()

    def averages(self, values: np.ndarray) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.sums(values) / self.counts

    def describe(self) -> dict:
        return {**self.meta, "count": len(self)}


def _nonempty(balls: BallFamily) -> np.ndarray:
    ok = balls.counts > 0
    if not ok.any():
        raise ValueError("ball family has no ball containing a cell")
    return ok


def ball_minima(values: np.ndarray, balls: BallFamily) -> np.ndarray:
    v = np.asarray(values, dtype=float).ravel()
    return np.where(balls.masks, v[None, :], np.inf).min(axis=1)


def characteristic_profile(w: Weight, p: float, balls: BallFamily) -> np.ndarray:
    """Per-ball A_p quantity (NaN for balls with no cells)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    ok = _nonempty(balls)
    avg = balls.averages(w.flat)
    if p == 1:
        out = avg / ball_minima(w.flat, balls)
    else:
        dual = balls.averages(w.flat ** (-1.0 / (p - 1)))
        out = avg * dual ** (p - 1)
    return np.where(ok, out, np.nan)


def muckenhoupt_characteristic(w: Weight, p: float, balls: BallFamily) -> float:
    """Largest A_p (or A_1, with the cell minimum as ess inf) ratio over the family."""
    return float(np.nanmax(characteristic_profile(w, p, balls)))


def reverse_holder_constant(w: Weight, r: float, balls: BallFamily) -> float:
    if not r > 1:
        raise ValueError("reverse Hölder exponent must exceed 1")
    ok = _nonempty(balls)
    num = balls.averages(w.flat ** r) ** (1.0 / r)
    q = num / balls.averages(w.flat)
    return float(np.max(q[ok]))


def hl_maximal(w: Weight, balls: BallFamily) -> SampledFunction:
    """Uncentered maximal function restricted to the family.

    Cells covered by no ball of the family get the value 0.
    """
    _nonempty(balls)
    avg = np.nan_to_num(balls.averages(w.flat), nan=0.0)
    m = np.where(balls.masks, avg[:, None], 0.0).max(axis=0)
    return SampledFunction(w.grid, m)


@dataclass
class WeightReport:
    p: float
    ap_characteristic: float
    rh_exponent: float
    rh_constant: float
    doubling_constant: float
    subset_ratio: float
    q: float
    tail_ratio: float
    skipped: int = 0
    ap_admissible: Optional[bool] = None
    rh_divergent: Optional[bool] = None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _subset_ratios(w: Weight, balls: BallFamily, r: float, rng: np.random.Generator) -> float:
    wv = w.flat
    pts = w.grid.points
    expo = (r - 1) / r
    best = 0.0
    for i in np.flatnonzero(balls.counts >= 2):
        idx = np.flatnonzero(balls.masks[i])
        wb = wv[idx].sum()
        subsets = []
        for frac in (1 / 8, 1 / 4, 1 / 2):
            k = max(1, int(round(frac * len(idx))))
            subsets.append(rng.choice(idx, size=k, replace=False))
        d = np.sqrt(((pts[idx] - balls.centers[i]) ** 2).sum(axis=1))
        ann = idx[d >= balls.radii[i] / 2]
        if 0 < len(ann):
            subsets.append(ann)
        for e in subsets:
            q = (wv[e].sum() / wb) / (len(e) / len(idx)) ** expo
            best = max(best, q)
    return float(best)


def tail_ratio(w: Weight, q: float, radius: float) -> float:
    """``int_{|x|>=R} w/|x|^{nq}`` over ``R^{-nq} w(Q(0, 2R))``, box-truncated."""
    g = w.grid
    n, hn = g.dim, g.cell_volume
    rad = g.radii.ravel()
    wv = w.flat
    far = rad >= radius
    num = (wv[far] / rad[far] ** (n * q)).sum() * hn
    cube = np.all(np.abs(g.points) < radius, axis=1)
    den = radius ** (-n * q) * wv[cube].sum() * hn
    return float(num / den)


def weight_lemma_report(w: Weight, p: float, r: float, q: float, balls: BallFamily,
                        tail_radii=None, seed: int = 0) -> WeightReport:
    if not q > 1:
        raise ValueError("q must exceed 1")
    g = w.grid
    skipped = 0

    twice = balls.dilated(2.0)
    inside = twice.inside_box() & (balls.counts > 0)
    skipped += int((~inside).sum())
    if inside.any():
        # 2^n |B| avg_{2B} w / (|B| avg_B w): exact volumes, sampled averages
        ratio = twice.averages(w.flat)[inside] / balls.averages(w.flat)[inside]
        doubling = float(2 ** g.dim * np.max(ratio))
    else:
        doubling = float("nan")

    if tail_radii is None:
        tail_radii = [g.half_width / 8, g.half_width / 4, g.half_width / 2]
    tails = []
    for R in tail_radii:
        if R > g.half_width or R <= 0:
            skipped += 1
            continue
        tails.append(tail_ratio(w, q, R))

    a = w.exponent
    return WeightReport(
        p=p,
        ap_characteristic=muckenhoupt_characteristic(w, p, balls),
        rh_exponent=r,
        rh_constant=reverse_holder_constant(w, r, balls),
        doubling_constant=doubling,
        subset_ratio=_subset_ratios(w, balls, r, np.random.default_rng(seed)),
        q=q,
        tail_ratio=float(max(tails)) if tails else float("nan"),
        skipped=skipped,
        ap_admissible=None if a is None else is_ap_exponent(a, g.dim, p),
        rh_divergent=None if a is None else bool(a * r <= -g.dim),
    )
