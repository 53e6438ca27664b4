"""Intrinsic square functions on a uniform grid.

The local supremum ``A_alpha(f)(y, t)`` is evaluated once per scale of a
geometric ladder ``t_k = t_min 2^{k/m}`` (bank-restricted, so a lower bound of
the true supremum) and stored in an :class:`AlphaField`.  All four operators
are weighted sums of ``A_alpha^2`` over that field:

* cone (aperture beta):  sum_k sum_{|x-y| < beta t_k} A^2 h^n / t_k^n * ln2/m
* g-function:            sum_k A(x, t_k)^2 * ln2/m
* g*-function:           sum_k sum_y (t_k / (t_k + |x-y|))^{lambda n} A^2 h^n / t_k^n * ln2/m

Spatial sums are discrete convolutions: direct in 1-D (exact zeros, pointwise
relative accuracy), FFT in 2-D.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.signal import fftconvolve

from .grid import TIE_SLACK, Grid, SampledFunction
from .kernels import KernelBank, balance, dilated_stencil, evaluate_dilated, lattice_points
from .weights import Weight, lattice_ball_sums

LN2 = math.log(2.0)


@dataclass(frozen=True)
class ConeSpec:
    aperture: float = 1.0
    t_min: float = 0.0
    t_max: float = 0.0
    scales_per_octave: int = 4

    def __post_init__(self):
        if self.aperture < 1:
            raise ValueError("aperture must be >= 1")
        if not 0 < self.t_min < self.t_max:
            raise ValueError("need 0 < t_min < t_max")
        if int(self.scales_per_octave) != self.scales_per_octave or self.scales_per_octave < 2:
            raise ValueError("scales_per_octave must be an integer >= 2")

    @classmethod
    def default(cls, grid: Grid, aperture: float = 1.0, m: int = 4) -> "ConeSpec":
        return cls(aperture, 4 * grid.spacing, grid.half_width / 2, m)

    @property
    def scales(self) -> np.ndarray:
        m = self.scales_per_octave
        K = int(math.floor(m * math.log2(self.t_max / self.t_min) + 1e-9))
        return self.t_min * 2.0 ** (np.arange(K + 1) / m)

    @property
    def dlog(self) -> float:
        return LN2 / self.scales_per_octave

    def with_aperture(self, beta: float) -> "ConeSpec":
        return ConeSpec(beta, self.t_min, self.t_max, self.scales_per_octave)

    def describe(self) -> dict:
        return {"beta": self.aperture, "t_min": self.t_min, "t_max": self.t_max,
                "m": self.scales_per_octave}


def covering_shells(grid: Grid, t_min: float) -> int:
    """Smallest J with ``2^J t_min`` beyond the box diameter."""
    return max(1, int(math.ceil(math.log2(grid.diameter / t_min) + 1e-9)) + 1)


@dataclass(frozen=True)
class GStarSpec:
    lam: float
    shell_count: int
    cone: ConeSpec

    def __post_init__(self):
        if not self.lam > 1:
            raise ValueError("lambda must exceed 1")
        if self.shell_count < 1:
            raise ValueError("shell_count must be >= 1")

    @classmethod
    def default(cls, grid: Grid, lam: float = 6.0, cone: Optional[ConeSpec] = None) -> "GStarSpec":
        cone = ConeSpec.default(grid) if cone is None else cone
        return cls(lam, covering_shells(grid, cone.t_min), cone)

    @staticmethod
    def threshold(n: int, alpha: float) -> float:
        return (3 * n + 2 * alpha) / n

    def above_threshold(self, n: int, alpha: float) -> bool:
        return self.lam > self.threshold(n, alpha)

    def covers(self, grid: Grid) -> bool:
        return 2.0 ** self.shell_count * self.cone.t_min > grid.diameter

    def describe(self) -> dict:
        return {"lambda": self.lam, "J": self.shell_count}


def _conv_same(a: np.ndarray, stencil: np.ndarray) -> np.ndarray:
    """``out[x] = sum_d stencil[M + d] a[x - d]`` for a centered odd stencil."""
    M = [(s - 1) // 2 for s in stencil.shape]
    if a.ndim == 1:
        full = np.convolve(a, stencil, mode="full")
    else:
        full = fftconvolve(a, stencil, mode="full")
    idx = tuple(slice(m, m + n) for m, n in zip(M, a.shape))
    return full[idx]


def _aggregate(a: np.ndarray, stencil: np.ndarray) -> np.ndarray:
    """``_conv_same`` by direct summation, for nonnegative data and stencils.

    FFT rounding leaves an absolute noise floor that the square root in the
    square functions turns into ``sqrt(eps)`` relative errors at small values;
    direct sums keep the error relative per cell.  In 2-D each stencil row is
    applied as a Toeplitz matrix product.
    """
    if a.ndim == 1:
        return _conv_same(a, stencil)
    (N0, N1), (M0, M1) = a.shape, [(s - 1) // 2 for s in stencil.shape]
    # offsets beyond the box never contribute; crop to |d| <= N - 1
    r0, r1 = min(M0, N0 - 1), min(M1, N1 - 1)
    S = stencil[M0 - r0:M0 + r0 + 1, M1 - r1:M1 + r1 + 1]
    R = 2 * r0 + 1
    cols = np.arange(N1)
    d1 = cols[None, :] - cols[:, None]          # x1 - x1'
    # a trailing zero column stands in for offsets outside the stencil
    idx = np.where(np.abs(d1) <= r1, d1 + r1, 2 * r1 + 1)
    T = np.pad(S, ((0, 0), (0, 1)))[:, idx]    # T[d0, x1', x1] = S[d0, x1 - x1']
    # one gemm: B[d0, x0', x1] = sum_x1' a[x0', x1'] T[d0, x1', x1]
    B = (a @ T.transpose(1, 0, 2).reshape(N1, R * N1)).reshape(N0, R, N1).transpose(1, 0, 2)
    out = np.zeros(a.shape)
    for i, d0 in enumerate(range(-r0, r0 + 1)):
        if d0 >= 0:
            out[d0:] += B[i, :N0 - d0]
        else:
            out[:d0] += B[i, -d0:]
    return out


def _offset_radius(grid: Grid, half: int) -> np.ndarray:
    """``|m h|`` on the offset lattice ``|m_i| <= half``."""
    m = np.arange(-half, half + 1) * grid.spacing
    mesh = np.meshgrid(*([m] * grid.dim), indexing="ij")
    return np.sqrt(sum(g * g for g in mesh))


@dataclass(frozen=True, eq=False)
class AlphaField:
    grid: Grid
    scales: np.ndarray
    values: np.ndarray          # (K, *grid.shape), A_alpha(f)(y, t_k)
    dlog: float
    meta: dict = field(default_factory=dict)

    @property
    def squared(self) -> np.ndarray:
        return self.values ** 2


def _check_scale_resolution(grid: Grid, t_min: float):
    if t_min < 2 * grid.spacing * (1 - 1e-12):
        raise ValueError(f"t_min={t_min:g} below 2h leaves kernels unresolved")


def alpha_field(f: SampledFunction, bank: KernelBank, cone: ConeSpec) -> AlphaField:
    g = f.grid
    _check_scale_resolution(g, cone.t_min)
    h, hn = g.spacing, g.cell_volume
    scales = cone.scales
    out = np.zeros((len(scales),) + g.shape)
    if np.any(f.values != 0):
        for k, t in enumerate(scales):
            acc = out[k]
            for member in bank:
                conv = _conv_same(f.values, dilated_stencil(member, t, h)) * hn
                np.maximum(acc, np.abs(conv), out=acc)
    return AlphaField(g, scales, out, cone.dlog, {"bank_size": len(bank)})


def a_alpha_at(f: SampledFunction, bank: KernelBank, y, t: float,
               cone: Optional[ConeSpec] = None) -> float:
    """Bank supremum of ``|f * phi_t(y)|`` by direct summation at one point."""
    g = f.grid
    cone = ConeSpec.default(g) if cone is None else cone
    if not cone.t_min * (1 - 1e-12) <= t <= cone.t_max * (1 + 1e-12):
        raise ValueError(f"t={t:g} outside the scale range [{cone.t_min:g}, {cone.t_max:g}]")
    h = g.spacing
    y = np.atleast_1d(np.asarray(y, dtype=float))
    # offsets y - z lie on the lattice shift + h Z^n
    shift = (y - g.axis_centers[0]) - np.round((y - g.axis_centers[0]) / h) * h
    shift[np.abs(shift) < 1e-9 * h] = 0.0
    d = g.points
    offs = y - d
    near = np.all(np.abs(offs) <= t, axis=1)
    fv = f.flat[near]
    best = 0.0
    for member in bank:
        kb = balance(member, h / t, shift / t)
        val = abs(float((evaluate_dilated(kb, t, offs[near]) * fv).sum() * g.cell_volume))
        best = max(best, val)
    return best


def _cone_sum(field_: AlphaField, aperture: float) -> np.ndarray:
    g = field_.grid
    h, hn, n = g.spacing, g.cell_volume, g.dim
    N = g.points_per_axis
    total = np.zeros(g.shape)
    for t, a2 in zip(field_.scales, field_.squared):
        reach = aperture * t
        half = min(int(math.floor(reach / h)), N - 1)
        D = (_offset_radius(g, half) < reach - TIE_SLACK * h).astype(float)
        total += _aggregate(a2, D) * (hn / t ** n * field_.dlog)
    return np.maximum(total, 0.0)


def cone_field(field_: AlphaField, aperture: float = 1.0) -> np.ndarray:
    """S_{alpha, beta} as a grid-shaped array from a precomputed field."""
    return np.sqrt(_cone_sum(field_, aperture))


def cone_energy(field_: AlphaField, w: Weight, aperture: float = 1.0) -> float:
    """``||S_{alpha, beta} f||^2`` in ``L^2_w`` over the whole lattice ``h Z^n``.

    Summing over ``x`` first turns the norm into
    ``sum_k sum_y A^2(y, t_k) w(B(y, beta t_k)) h^n / t_k^n * dlog``, so points
    ``x`` outside the box are included.  ``A`` is taken as zero outside the box.
    """
    g = field_.grid
    hn, n = g.cell_volume, g.dim
    total = 0.0
    for t, a2 in zip(field_.scales, field_.squared):
        if not a2.any():
            continue
        W = lattice_ball_sums(w, aperture * t)
        total += float((a2 * W).sum()) * hn / t ** n * field_.dlog
    return total


def g_from_field(field_: AlphaField) -> np.ndarray:
    return np.sqrt(field_.squared.sum(axis=0) * field_.dlog)


def gstar_from_field(field_: AlphaField, lam: float) -> np.ndarray:
    g = field_.grid
    hn, n = g.cell_volume, g.dim
    N = g.points_per_axis
    rad = _offset_radius(g, N - 1)
    total = np.zeros(g.shape)
    for t, a2 in zip(field_.scales, field_.squared):
        K = (t / (t + rad)) ** (lam * n)
        total += _aggregate(a2, K) * (hn / t ** n * field_.dlog)
    return np.sqrt(np.maximum(total, 0.0))


def shell_bound_from_field(field_: AlphaField, lam: float, shells: int) -> np.ndarray:
    n = field_.grid.dim
    acc = _cone_sum(field_, 1.0)
    for j in range(1, shells + 1):
        acc = acc + 2.0 ** (-j * lam * n) * _cone_sum(field_, 2.0 ** j)
    return np.sqrt(2.0 ** (lam * n) * acc)


def _wrap(grid: Grid, values: np.ndarray) -> SampledFunction:
    return SampledFunction(grid, values)


def s_alpha_field(f: SampledFunction, bank: KernelBank, cone: ConeSpec) -> SampledFunction:
    return _wrap(f.grid, cone_field(alpha_field(f, bank, cone), cone.aperture))


def g_alpha_field(f: SampledFunction, bank: KernelBank, cone: ConeSpec) -> SampledFunction:
    return _wrap(f.grid, g_from_field(alpha_field(f, bank, cone)))


def g_star_field(f: SampledFunction, bank: KernelBank, spec: GStarSpec) -> SampledFunction:
    return _wrap(f.grid, gstar_from_field(alpha_field(f, bank, spec.cone), spec.lam))


def g_star_shell_bound(f: SampledFunction, bank: KernelBank, spec: GStarSpec) -> SampledFunction:
    fld = alpha_field(f, bank, spec.cone)
    return _wrap(f.grid, shell_bound_from_field(fld, spec.lam, spec.shell_count))


def aperture_fields(field_: AlphaField, apertures: Sequence[float]) -> dict:
    return {float(b): cone_field(field_, b) for b in apertures}
