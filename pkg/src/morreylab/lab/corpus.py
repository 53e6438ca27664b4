"""Parametric test functions and the default corpus."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..grid import Grid, SampledFunction, sample_on_grid
from ..kernels import profile
from ..weights import Weight, build_power_weight, is_a1_exponent

KINDS = ("bump", "pair", "indicator", "osc")


@dataclass(frozen=True)
class FunctionSpec:
    """A closed-form test function.

    ``terms`` holds ``(center, radius, amplitude)`` bumps for the bump kinds and
    a single ``(lo, hi, amplitude)`` box for ``indicator``.  ``osc`` multiplies
    its bump by ``cos(2 pi freq (x - c)_1 + phase)``.
    """

    kind: str
    terms: tuple
    freq: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown function kind {self.kind!r}")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if self.kind == "indicator":
            lo, hi, amp = self.terms[0]
            inside = np.all((x >= np.asarray(lo)) & (x < np.asarray(hi)), axis=1)
            return amp * inside.astype(float)
        out = np.zeros(len(x))
        for c, r, amp in self.terms:
            d = np.sqrt(((x - np.asarray(c)) ** 2).sum(axis=1))
            bump = amp * profile(d / r)
            if self.kind == "osc":
                bump = bump * np.cos(2 * math.pi * self.freq * (x[:, 0] - c[0]) + self.phase)
            out += bump
        return out

    def sample(self, grid: Grid) -> SampledFunction:
        return sample_on_grid(self, grid)

    def reach(self) -> float:
        """Largest sup-norm coordinate touched by the support."""
        if self.kind == "indicator":
            lo, hi, _ = self.terms[0]
            return float(max(np.abs(lo).max(), np.abs(hi).max()))
        return float(max(np.abs(c).max() + r for c, r, _ in self.terms))

    def descriptor(self) -> str:
        def fmt(v):
            return "(" + ",".join(f"{x:.4g}" for x in v) + ")" if len(v) > 1 else f"{v[0]:.4g}"
        if self.kind == "indicator":
            lo, hi, amp = self.terms[0]
            return f"indicator[{fmt(lo)}..{fmt(hi)},a={amp:.4g}]"
        body = ";".join(f"c={fmt(c)},r={r:.4g},a={a:.4g}" for c, r, a in self.terms)
        extra = f",freq={self.freq:.4g},phase={self.phase:.4g}" if self.kind == "osc" else ""
        return f"{self.kind}[{body}{extra}]"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "freq": self.freq, "phase": self.phase,
                "terms": [[list(v) if isinstance(v, tuple) else v for v in term]
                          for term in self.terms]}


def bump(center, radius, amp=1.0) -> FunctionSpec:
    return FunctionSpec("bump", ((tuple(np.atleast_1d(center).astype(float)), float(radius), float(amp)),))


def pair(c1, r1, c2, r2, a1=1.0, a2=-1.0) -> FunctionSpec:
    return FunctionSpec("pair", ((tuple(np.atleast_1d(c1).astype(float)), float(r1), float(a1)),
                                 (tuple(np.atleast_1d(c2).astype(float)), float(r2), float(a2))))


def indicator(lo, hi, amp=1.0) -> FunctionSpec:
    return FunctionSpec("indicator", ((tuple(np.atleast_1d(lo).astype(float)),
                                       tuple(np.atleast_1d(hi).astype(float)), float(amp)),))


def osc(center, radius, freq, phase=0.0, amp=1.0) -> FunctionSpec:
    return FunctionSpec("osc", ((tuple(np.atleast_1d(center).astype(float)), float(radius), float(amp)),),
                        float(freq), float(phase))


def default_specs(dim: int, L: float) -> list[FunctionSpec]:
    """Twelve functions inside the half box, in units of ``L``."""
    def pt(a, b=None):
        return (a * L,) if dim == 1 else (a * L, (a / 2 if b is None else b) * L)

    def box(a, b):
        return (pt(a, a), pt(b, b)) if dim == 2 else ((a * L,), (b * L,))

    specs = [
        bump(pt(0.0), 0.1 * L),
        bump(pt(0.2), 0.25 * L),
        bump(pt(-0.3), 0.05 * L),
        pair(pt(-0.15), 0.1 * L, pt(0.15), 0.1 * L),
        pair(pt(0.0), 0.05 * L, pt(0.1), 0.2 * L, 2.0, -0.5),
        pair(pt(-0.3), 0.15 * L, pt(0.25), 0.1 * L),
        indicator(*box(-0.1, 0.1)),
        indicator(*box(0.05, 0.45)),
        indicator(*box(-0.4, -0.2)),
        osc(pt(0.0), 0.3 * L, 8.0 / L),
        osc(pt(0.2), 0.2 * L, 12.0 / L, 0.5),
        osc(pt(-0.2), 0.25 * L, 5.0 / L, 1.0),
    ]
    return specs


@dataclass(eq=False)
class Corpus:
    grid: Grid
    specs: list
    functions: list                 # (descriptor, SampledFunction)
    weights: list                   # Weight objects tagged with exponent and A_1 flag
    seed: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.functions:
            raise ValueError("corpus has no functions")
        if not self.weights:
            raise ValueError("corpus has no weights")
        outer = np.abs(self.grid.points).max(axis=1) > self.grid.half_width / 2
        for desc, f in self.functions:
            if np.any(f.flat[outer] != 0):
                raise ValueError(f"{desc} is not supported inside the half box")

    def instances(self):
        for i, (desc, f) in enumerate(self.functions):
            for j, w in enumerate(self.weights):
                yield i, j, desc, f, w

    def describe(self) -> dict:
        return {"seed": self.seed,
                "functions": [d for d, _ in self.functions],
                "weights": [{"label": w.label(), "a": w.exponent, "a1": w.family_tag.get("a1")}
                            for w in self.weights]}


def tagged_weight(a: float, grid: Grid) -> Weight:
    w = build_power_weight(a, grid)
    w.family_tag["a1"] = is_a1_exponent(a, grid.dim)
    return w


def build_corpus(grid: Grid, exponents=None, seed: int = 0, specs=None) -> Corpus:
    n = grid.dim
    exponents = (0.0, -n / 4, -n / 2) if exponents is None else exponents
    specs = default_specs(n, grid.half_width) if specs is None else list(specs)
    funcs = [(s.descriptor(), s.sample(grid)) for s in specs]
    weights = [tagged_weight(a, grid) for a in exponents]
    return Corpus(grid, specs, funcs, weights, seed)


def zero_corpus(grid: Grid, exponents=(0.0,)) -> Corpus:
    z = FunctionSpec("bump", (((0.0,) * grid.dim, 0.1 * grid.half_width, 0.0),))
    return build_corpus(grid, exponents, specs=[z])
