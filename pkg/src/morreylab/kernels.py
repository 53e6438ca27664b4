"""Two-bump kernels: a finite, certified subfamily of the Hölder class C_alpha.

A kernel is ``s * [c1 b(|x-u1|/r1)/r1^n - c2 b(|x-u2|/r2)/r2^n]`` with the
profile ``b(s) = (1 - s^2)^3`` on ``[0, 1]``.  Support in the unit ball is
guaranteed by ``|u_i| + r_i <= 1``; the Hölder seminorm is certified by the
analytic Lipschitz bound; ``c2`` is chosen so that the midpoint sums of the two
bumps cancel on the sampling lattice.

Sampling lattices change with the dilation ``t`` (spacing ``h/t`` in kernel
coordinates), so operators use :func:`balance` to re-solve ``c2`` (and the
normalization) for each lattice.  Each balanced kernel is again a closed-form
member of the family with its own certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .grid import Grid

# max |b'(s)| = 6 s (1-s^2)^2 at s = 1/sqrt(5)
PROFILE_LIP = 96.0 / (25.0 * math.sqrt(5.0))

R_MIN, R_MAX = 0.36, 0.7


def profile(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    return np.where(s < 1.0, (1.0 - np.minimum(s, 1.0) ** 2) ** 3, 0.0)


def _bump(x: np.ndarray, u: np.ndarray, r: float) -> np.ndarray:
    n = len(u)
    d = np.sqrt(((x - u) ** 2).sum(axis=-1))
    return profile(d / r) / r ** n


@dataclass(frozen=True)
class Kernel:
    alpha: float
    u1: tuple
    r1: float
    u2: tuple
    r2: float
    c1: float = 1.0
    c2: float = 1.0
    scale: float = 1.0

    @property
    def dim(self) -> int:
        return len(self.u1)

    def lipschitz_bound(self) -> float:
        """Analytic Lipschitz bound of the kernel without ``scale``."""
        n = self.dim
        return PROFILE_LIP * (abs(self.c1) / self.r1 ** (n + 1) + abs(self.c2) / self.r2 ** (n + 1))

    def certified_scale(self) -> float:
        return 1.0 / (2.0 ** (1.0 - self.alpha) * self.lipschitz_bound())

    def support_radius(self) -> float:
        return max(float(np.linalg.norm(self.u1)) + self.r1, float(np.linalg.norm(self.u2)) + self.r2)

    def scaled(self, c: float) -> "Kernel":
        return replace(self, scale=self.scale * c)

    def parts(self, x) -> tuple[np.ndarray, np.ndarray]:
        x = _as_points(x, self.dim)
        return _bump(x, np.asarray(self.u1), self.r1), _bump(x, np.asarray(self.u2), self.r2)

    def __call__(self, x) -> np.ndarray:
        b1, b2 = self.parts(x)
        return self.scale * (self.c1 * b1 - self.c2 * b2)

    def describe(self) -> dict:
        return {"u1": list(self.u1), "r1": self.r1, "u2": list(self.u2), "r2": self.r2,
                "c1": self.c1, "c2": self.c2, "scale": self.scale}


def _as_points(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if n == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    return x


def lattice_points(spacing: float, n: int, radius: float = 1.0, shift=None) -> np.ndarray:
    """Points ``shift + m * spacing`` of the cube ``[-radius, radius]^n``."""
    shift = np.zeros(n) if shift is None else np.broadcast_to(np.asarray(shift, float), (n,))
    axes = []
    for s in shift:
        m = np.arange(math.floor((-radius - s) / spacing) - 1, math.ceil((radius - s) / spacing) + 2)
        p = s + m * spacing
        axes.append(p[np.abs(p) <= radius])
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def balance(k: Kernel, spacing: float, shift=None) -> Kernel:
    """Kernel with ``c2`` re-solved so its midpoint sum on the lattice vanishes.

    The normalization is recomputed so the Hölder certificate still holds.
    """
    pts = lattice_points(spacing, k.dim, 1.0, shift)
    b1, b2 = k.parts(pts)
    s1, s2 = b1.sum(), b2.sum()
    if s2 <= 0 or s1 <= 0:
        raise ValueError(f"bump unresolved on lattice of spacing {spacing:g}")
    k2 = replace(k, c2=k.c1 * s1 / s2, scale=1.0)
    return replace(k2, scale=k2.certified_scale())


def evaluate_dilated(k: Kernel, t: float, x) -> np.ndarray:
    """``t^{-n} k(x / t)`` from the closed form."""
    if not t > 0:
        raise ValueError("dilation t must be positive")
    x = _as_points(x, k.dim)
    return k(x / t) / t ** k.dim


@lru_cache(maxsize=4096)
def _stencil_cached(k: Kernel, t: float, h: float) -> np.ndarray:
    n = k.dim
    M = int(math.floor(t / h * (1 + 1e-12)))
    kb = balance(k, h / t)
    m = np.arange(-M, M + 1) * h
    offs = np.stack([g.ravel() for g in np.meshgrid(*([m] * n), indexing="ij")], -1)
    st = evaluate_dilated(kb, t, offs).reshape((2 * M + 1,) * n)
    st.setflags(write=False)
    return st


def dilated_stencil(k: Kernel, t: float, h: float) -> np.ndarray:
    """Lattice-balanced ``phi_t`` sampled at offsets ``m h``, ``|m_i| <= t/h``.

    Index ``M`` along each axis is offset zero.  The stencil's sum is zero up
    to rounding.
    """
    return _stencil_cached(k, float(t), float(h))


@dataclass(frozen=True)
class KernelBank:
    alpha: float
    members: tuple
    seed: int
    reference_spacing: float

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def prefix(self, size: int) -> "KernelBank":
        return replace(self, members=self.members[:size])

    def describe(self) -> dict:
        return {"alpha": self.alpha, "size": len(self), "seed": self.seed,
                "reference_spacing": self.reference_spacing,
                "members": [m.describe() for m in self.members]}


def _even_inner_radius(n: int) -> float:
    # maximizes (1 - r^2) / (r^{-(n+1)} + 1): second moment per unit of Lipschitz bound
    r = np.linspace(0.05, 0.95, 1801)
    return float(r[np.argmax((1 - r * r) / (r ** -(n + 1) + 1))])


def _canonical(n: int) -> list[tuple]:
    """Odd kernels along each axis and one even kernel, each maximizing its
    first (resp. second) moment per unit of the Lipschitz bound."""
    e = np.eye(n)
    d, r = 1.0 / (n + 2), (n + 1.0) / (n + 2)
    out = [(d * e[i], r, -d * e[i], r) for i in range(n)]
    out.append((np.zeros(n), _even_inner_radius(n), np.zeros(n), 1.0))
    return out


def _random_bump(rng: np.random.Generator, n: int) -> tuple[np.ndarray, float]:
    r = rng.uniform(R_MIN, R_MAX)
    direction = rng.normal(size=n)
    direction /= np.linalg.norm(direction)
    return direction * rng.uniform(0, 1 - r), r


def build_bank(alpha: float, size: int, seed: int, grid: Grid) -> KernelBank:
    """Deterministic bank; banks with equal seed are prefixes of each other."""
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if int(size) != size or size < 1:
        raise ValueError("bank size must be a positive integer")
    h = grid.spacing
    if 2.0 / h < 8:
        raise ValueError("grid too coarse to resolve unit-ball kernels")
    n = grid.dim
    rng = np.random.default_rng(seed)
    members = []
    for i in range(int(size)):
        canon = _canonical(n)
        if i < len(canon):
            u1, r1, u2, r2 = canon[i]
        else:
            u1, r1 = _random_bump(rng, n)
            u2, r2 = _random_bump(rng, n)
        k = Kernel(float(alpha), tuple(float(v) for v in u1), float(r1),
                   tuple(float(v) for v in u2), float(r2))
        members.append(balance(k, h))
    return KernelBank(float(alpha), tuple(members), int(seed), h)


@dataclass
class AdmissibilityReport:
    support_ok: bool
    mean_ok: bool
    holder_ok: bool
    support_radius: float
    mean: float
    holder_quotient: float

    @property
    def passed(self) -> bool:
        return self.support_ok and self.mean_ok and self.holder_ok


def holder_quotient(k: Kernel, spacing: float, n_random: int = 20000, seed: int = 0) -> float:
    """Largest sampled ``|k(x) - k(x')| / |x - x'|^alpha``."""
    n = k.dim
    pts = lattice_points(spacing, n, 1.0)
    vals = k(pts)
    best = 0.0
    # lattice neighbour pairs along each axis at several distances
    N = round(len(pts) ** (1 / n))
    grid_vals = vals.reshape((N,) * n)
    for step in (1, 2, 3, 5, 8, 13, 21, 34):
        if step >= N:
            break
        for ax in range(n):
            d = np.abs(np.take(grid_vals, range(step, N), axis=ax)
                       - np.take(grid_vals, range(0, N - step), axis=ax))
            best = max(best, float(d.max()) / (step * spacing) ** k.alpha)
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1, 1, size=(n_random, n))
    b = a + rng.normal(scale=rng.choice([0.02, 0.1, 0.5, 1.0], size=(n_random, 1)), size=(n_random, n))
    dist = np.sqrt(((a - b) ** 2).sum(axis=1))
    ok = dist > 1e-12
    q = np.abs(k(a[ok]) - k(b[ok])) / dist[ok] ** k.alpha
    return max(best, float(q.max()))


def admissibility_report(k: Kernel, grid: Grid) -> AdmissibilityReport:
    h = grid.spacing
    n = k.dim
    pts = lattice_points(h, n, 2.0)
    v = k(pts)
    nz = pts[np.abs(v) > 0]
    radius = float(np.sqrt((nz ** 2).sum(axis=1)).max()) if len(nz) else 0.0
    support_ok = radius <= 1.0 and k.support_radius() <= 1.0 + 1e-12
    mean = float(k(lattice_points(h, n, 1.0)).sum() * h ** n)
    hq = holder_quotient(k, min(h, 1 / 32) / 2)
    return AdmissibilityReport(support_ok, abs(mean) <= 1e-12, hq <= 1.0, radius, mean, hq)
