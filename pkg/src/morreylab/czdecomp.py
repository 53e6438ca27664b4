"""Calderón–Zygmund decomposition of a sampled function at height sigma.

Stopping time on the dyadic tree below a grid-aligned root cube: a cube is
selected when its |f|-average first exceeds sigma.  On each selected cube the
good part is the signed average of f, so every bad part has zero integral.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import DyadicCube, Grid, SampledFunction, cube_slices, dyadic_children, root_cube


@dataclass(frozen=True, eq=False)
class CZDecomposition:
    sigma: float
    cubes: tuple
    good: SampledFunction
    bad_parts: tuple            # (DyadicCube, SampledFunction) pairs
    variant: str = "signed-average"

    @property
    def centers(self) -> list:
        return [q.center for q in self.cubes]

    @property
    def sides(self) -> list:
        return [q.side for q in self.cubes]

    def bad(self) -> SampledFunction:
        total = np.zeros(self.good.grid.shape)
        for _, b in self.bad_parts:
            total += b.values
        return SampledFunction(self.good.grid, total)


def _avg_abs(a: np.ndarray, sl) -> float:
    return float(np.abs(a[sl]).mean())


def cz_decompose(f: SampledFunction, sigma: float, root: DyadicCube | None = None) -> CZDecomposition:
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    g: Grid = f.grid
    root = root_cube(g) if root is None else root
    a = f.values
    if _avg_abs(a, cube_slices(g, root)) > sigma:
        raise ValueError("average of |f| over the root exceeds sigma; stopping time cannot start")

    selected = []
    stack = [root]
    while stack:
        q = stack.pop()
        if q.side <= g.spacing * (1 + 1e-9):
            continue
        for child in dyadic_children(q, g):
            if _avg_abs(a, cube_slices(g, child)) > sigma:
                selected.append(child)
            else:
                stack.append(child)
    selected.sort()

    good = a.copy()
    bad_parts = []
    for q in selected:
        sl = cube_slices(g, q)
        mean = a[sl].mean()
        good[sl] = mean
        b = np.zeros(g.shape)
        b[sl] = a[sl] - mean
        bad_parts.append((q, SampledFunction(g, b)))
    return CZDecomposition(float(sigma), tuple(selected), SampledFunction(g, good), tuple(bad_parts))


@dataclass
class CZReport:
    stopping_bounds: bool
    good_bounded: bool
    reconstruction: bool
    bad_mean_zero: bool
    disjoint: bool
    bad_l1: bool
    support: bool
    measure_bound: bool
    details: dict = field(default_factory=dict)

    CHECKS = ("stopping_bounds", "good_bounded", "reconstruction", "bad_mean_zero",
              "disjoint", "bad_l1", "support", "measure_bound")

    @property
    def passed(self) -> bool:
        return all(getattr(self, c) for c in self.CHECKS)

    def failures(self) -> list[str]:
        return [c for c in self.CHECKS if not getattr(self, c)]

    def as_dict(self) -> dict:
        return {c: bool(getattr(self, c)) for c in self.CHECKS} | {"details": self.details}


def cz_verify(d: CZDecomposition, f: SampledFunction, sigma: float) -> CZReport:
    g = f.grid
    n, hn = g.dim, g.cell_volume
    a = f.values
    l1 = float(np.abs(a).sum() * hn)
    top = 2 ** n * sigma
    eps = 1e-12

    avgs = [_avg_abs(a, cube_slices(g, q)) for q in d.cubes]
    stopping = all(sigma < v <= top * (1 + eps) for v in avgs)
    good_ok = bool(np.all(np.abs(d.good.values) <= top * (1 + eps)))
    scale = max(float(np.abs(a).max()), 1e-300)
    recon = bool(np.all(np.abs(d.good.values + d.bad().values - a) <= eps * scale))

    means, l1_ok, supp_ok = [], True, True
    for q, b in d.bad_parts:
        sl = cube_slices(g, q)
        inside = np.zeros(g.shape, dtype=bool)
        inside[sl] = True
        supp_ok &= bool(np.all(b.values[~inside] == 0))
        means.append(float(b.values.sum() * hn))
        l1_ok &= float(np.abs(b.values).sum()) <= 2 * float(np.abs(a[sl]).sum()) * (1 + eps)
    mean_ok = all(abs(m) <= eps * max(l1, 1e-300) for m in means)

    cover = np.zeros(g.shape, dtype=int)
    for q in d.cubes:
        cover[cube_slices(g, q)] += 1
    disjoint = bool(cover.max(initial=0) <= 1)
    measure = sum(q.volume for q in d.cubes)
    measure_ok = measure <= l1 / sigma * (1 + eps)

    return CZReport(stopping, good_ok, recon, mean_ok, disjoint, l1_ok, supp_ok, measure_ok,
                    {"cube_averages": avgs, "bad_means": means, "measure": measure,
                     "l1": l1, "variant": d.variant})
