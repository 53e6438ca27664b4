"""Random-restart hill climbing for the worst ratio of an experiment.

Every corpus instance is evaluated first, so the reported worst ratio never
falls below the corpus maximum.  The budget then counts hill-climbing
evaluations.  A proposal perturbs the unit-cube encoding of the instance
(function parameters, weight exponent and, for Morrey experiments, kappa)
with a Gaussian step; the step halves after 10 consecutive rejections and a
restart happens once it drops below 1/32 of its initial value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..config import RunConfig
from ..spaces import MorreyParams
from .corpus import Corpus, FunctionSpec, build_corpus, tagged_weight
from .experiments import Workspace, check_experiment, evaluate
from .report import ExperimentReport, make_instance

SEARCHABLE = ("T1.1", "T1.2", "C1.3", "T3.1", "T4.2", "L4.1")
MORREY = {"T1.1", "T1.2", "C1.3"}
FAMILIES = {"bump": "bump", "bump_pair": "pair", "osc": "osc"}

INITIAL_STEP = 0.15
PATIENCE = 10
MIN_STEP_FRACTION = 1 / 32
KAPPA_RANGE = (0.05, 0.95)


@dataclass(frozen=True)
class Codec:
    """Maps the unit cube onto valid instances of one family."""

    family: str
    dim: int
    L: float
    r_min: float
    morrey: bool

    @property
    def kind(self) -> str:
        return FAMILIES[self.family]

    @property
    def n_func(self) -> int:
        n = self.dim
        return {"bump": n + 1, "pair": 2 * n + 3, "osc": n + 3}[self.kind]

    @property
    def size(self) -> int:
        return self.n_func + 1 + int(self.morrey)

    # unit <-> physical helpers
    def _c(self, u):
        return (np.asarray(u) - 0.5) * self.L

    def _c_inv(self, c):
        return np.asarray(c) / self.L + 0.5

    def _r(self, u):
        return self.r_min + u * (self.L / 4 - self.r_min)

    def _r_inv(self, r):
        return (r - self.r_min) / (self.L / 4 - self.r_min)

    def _fit(self, c, r):
        # keep the support inside the half box
        r = float(min(max(r, self.r_min), self.L / 4))
        lim = self.L / 2 - r
        return tuple(float(v) for v in np.clip(c, -lim, lim)), r

    def decode(self, u: np.ndarray) -> tuple[FunctionSpec, float, Optional[float]]:
        u = np.clip(u, 0.0, 1.0)
        n = self.dim
        if self.kind == "bump":
            c, r = self._fit(self._c(u[:n]), self._r(u[n]))
            spec = FunctionSpec("bump", ((c, r, 1.0),))
        elif self.kind == "pair":
            c1, r1 = self._fit(self._c(u[:n]), self._r(u[n]))
            c2, r2 = self._fit(self._c(u[n + 1:2 * n + 1]), self._r(u[2 * n + 1]))
            a2 = 4.0 * u[2 * n + 2] - 2.0
            spec = FunctionSpec("pair", ((c1, r1, 1.0), (c2, r2, float(a2))))
        else:
            c, r = self._fit(self._c(u[:n]), self._r(u[n]))
            freq = 16.0 / self.L * u[n + 1]
            phase = 2 * math.pi * u[n + 2]
            spec = FunctionSpec("osc", ((c, r, 1.0),), float(freq), float(phase))
        k = self.n_func
        a = -0.9 * self.dim * u[k]
        kappa = KAPPA_RANGE[0] + (KAPPA_RANGE[1] - KAPPA_RANGE[0]) * u[k + 1] if self.morrey else None
        return spec, float(a), kappa

    def encode(self, spec: FunctionSpec, a: float, kappa: Optional[float]) -> np.ndarray:
        n = self.dim
        if spec.kind != self.kind:
            raise ValueError(f"cannot encode a {spec.kind} instance in the {self.family} family")
        t = spec.terms
        if self.kind == "pair":
            (c1, r1, a1), (c2, r2, a2) = t
            f = [*self._c_inv(c1), self._r_inv(r1), *self._c_inv(c2), self._r_inv(r2),
                 (a2 / a1 + 2.0) / 4.0]
        elif self.kind == "bump":
            c, r, _ = t[0]
            f = [*self._c_inv(c), self._r_inv(r)]
        else:
            c, r, _ = t[0]
            f = [*self._c_inv(c), self._r_inv(r), spec.freq * self.L / 16.0,
                 (spec.phase % (2 * math.pi)) / (2 * math.pi)]
        f.append(-a / (0.9 * self.dim))
        if self.morrey:
            f.append((kappa - KAPPA_RANGE[0]) / (KAPPA_RANGE[1] - KAPPA_RANGE[0]))
        return np.clip(np.asarray(f, dtype=float), 0.0, 1.0)


def _score(exp_id: str, ws: Workspace, spec: FunctionSpec, a: float, kappa: Optional[float],
           cache: bool = False):
    f = spec.sample(ws.grid)
    w = tagged_weight(a, ws.grid)
    params = MorreyParams(ws.morrey.p, kappa) if kappa is not None else ws.morrey
    rows = evaluate(exp_id, ws, ws.field_of(f, cache=cache), f, w, params)
    best = None
    for sfx, lhs, rhs, flags in rows:
        r = None if rhs == 0 else lhs / rhs
        if best is None or (r is not None and (best[3] is None or r > best[3])):
            best = (sfx, lhs, rhs, r, flags)
    return best, w.label()


def adversarial_search(exp_id: str, config: Optional[RunConfig] = None, budget: Optional[int] = None,
                       seed: Optional[int] = None, family: Optional[str] = None,
                       corpus: Optional[Corpus] = None) -> ExperimentReport:
    check_experiment(exp_id)
    if exp_id not in SEARCHABLE:
        raise ValueError(f"search is not defined for {exp_id} (searchable: {', '.join(SEARCHABLE)})")
    config = config or RunConfig()
    budget = config.budget if budget is None else int(budget)
    seed = config.corpus_seed if seed is None else int(seed)
    family = config.search_family if family is None else family
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if family not in FAMILIES:
        raise ValueError(f"unknown search family {family!r} (known: {', '.join(FAMILIES)})")

    ws = Workspace.from_config(config)
    g = ws.grid
    corpus = corpus or build_corpus(g, config.weight_exponents(), seed)
    morrey = exp_id in MORREY
    codec = Codec(family, g.dim, g.half_width, 4 * g.spacing, morrey)
    rng = np.random.default_rng(seed)
    kappa0 = ws.morrey.kappa if morrey else None

    instances = []
    best = {"ratio": -math.inf, "descriptor": None, "weight": None}
    trace = []

    def record(spec, a, kappa, phase):
        (sfx, lhs, rhs, r, flags), wlabel = _score(exp_id, ws, spec, a, kappa, phase == "corpus")
        desc = spec.descriptor() + sfx + (f"|kappa={kappa:.4g}" if kappa is not None else "")
        if r is not None and r > best["ratio"]:
            best.update(ratio=r, descriptor=desc, weight=wlabel)
        trace.append(best["ratio"])
        fl = dict(flags, phase=phase, evaluation=len(trace), best_so_far=best["ratio"])
        if kappa is not None:
            fl["kappa"] = kappa
        instances.append(make_instance(desc, wlabel, lhs, rhs, fl))
        return -math.inf if r is None else r

    # corpus phase
    starts = []
    for i, j, desc, f, w in corpus.instances():
        spec = corpus.specs[i]
        r = record(spec, w.exponent, kappa0, "corpus")
        if spec.kind == codec.kind:
            starts.append((r, i, j, spec, w.exponent))
    starts.sort(key=lambda s: (-s[0], s[1], s[2]))
    queue = [codec.encode(spec, a, kappa0) for _, _, _, spec, a in starts]

    def fresh():
        return queue.pop(0) if queue else rng.random(codec.size)

    x = fresh()
    fx = record(*codec.decode(x), "start")
    used, step, rejects = 1, INITIAL_STEP, 0
    while used < budget:
        y = np.clip(x + step * rng.standard_normal(codec.size), 0.0, 1.0)
        fy = record(*codec.decode(y), "climb")
        used += 1
        if fy > fx:
            x, fx, rejects = y, fy, 0
            continue
        rejects += 1
        if rejects >= PATIENCE:
            step, rejects = step / 2, 0
            if step < INITIAL_STEP * MIN_STEP_FRACTION and used < budget:
                x = fresh()
                fx = record(*codec.decode(x), "restart")
                used += 1
                step = INITIAL_STEP

    prov = ws.provenance(corpus)
    prov["search"] = {"family": family, "budget": budget, "seed": seed,
                      "initial_step": INITIAL_STEP, "patience": PATIENCE}
    report = ExperimentReport(exp_id, instances, prov, {"search": True})
    report.summary = {
        "instances": len(instances), "skipped": report.skipped, "max_ratio": report.max_ratio,
        "best_ratio": best["ratio"], "best_descriptor": best["descriptor"], "best_weight": best["weight"],
        "best_so_far": trace, "corpus_evaluations": sum(1 for i in instances
                                                        if i.flags["phase"] == "corpus"),
    }
    return report
