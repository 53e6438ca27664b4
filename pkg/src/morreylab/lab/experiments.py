"""Evaluate both sides of each inequality over a corpus.

Each experiment id maps to an evaluator returning ``(lhs, rhs, flags)`` per
instance.  The A_alpha field of every corpus function is computed once and
shared between operators and weights.
"""

from __future__ import annotations

import hashlib
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .. import __version__
from ..config import RunConfig
from ..czdecomp import cz_decompose, cz_verify
from ..grid import Ball, Grid, SampledFunction, region_mask, root_cube
from ..kernels import KernelBank
from ..spaces import MorreyParams, lp_w_norm, morrey_norm, weak_lp_norm, weak_morrey_norm
from ..sqfn import (AlphaField, ConeSpec, GStarSpec, alpha_field, cone_energy, cone_field, g_from_field,
                    gstar_from_field, shell_bound_from_field)
from ..weights import BallFamily, Weight, hl_maximal, is_a1_exponent, muckenhoupt_characteristic
from .corpus import Corpus, build_corpus
from .report import ExperimentReport, InstanceResult, make_instance

EXPERIMENTS = ("T1.1", "T1.2", "C1.3", "T3.1", "T4.2", "L4.1", "INEQ6", "TAIL", "CZ")
NEEDS_A1 = {"T1.1", "T1.2", "C1.3", "T3.1", "T4.2", "L4.1"}
INEQ6_TOL = 1e-9
COMPARABILITY_FLOOR = 1e-3   # cells below this fraction of the peak are ignored


def thread_count() -> int:
    env = os.environ.get("MORREYLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def ordered_map(fn: Callable, items: list, threads: Optional[int] = None) -> list:
    """``map`` over a thread pool; results always come back in input order."""
    threads = thread_count() if threads is None else threads
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))


@dataclass
class Workspace:
    """Grid, bank, cones and ball family built once from a config."""

    config: RunConfig
    grid: Grid
    bank: KernelBank
    cone: ConeSpec
    gstar: GStarSpec
    family: BallFamily
    morrey: MorreyParams
    _fields: dict = field(default_factory=dict)

    @classmethod
    def from_config(cls, config: RunConfig, grid: Optional[Grid] = None) -> "Workspace":
        g = grid or config.grid()
        return cls(config, g, config.bank(g), config.cone(g), config.gstar(g), config.family(g),
                   config.morrey())

    def field_of(self, f: SampledFunction, cache: bool = True) -> AlphaField:
        """A_alpha field of ``f``, cached by a digest of its samples."""
        if not cache:
            return alpha_field(f, self.bank, self.cone)
        key = hashlib.sha1(f.values.tobytes()).hexdigest()
        if key not in self._fields:
            self._fields[key] = alpha_field(f, self.bank, self.cone)
        return self._fields[key]

    def provenance(self, corpus: Optional[Corpus] = None) -> dict:
        prov = {
            "version": __version__,
            "grid": self.grid.describe(),
            "bank": self.bank.describe(),
            "cone": self.cone.describe(),
            "gstar": self.gstar.describe(),
            "family": self.family.describe(),
            "morrey": {"p": self.morrey.p, "kappa": self.morrey.kappa},
            "config": self.config.as_dict(),
        }
        if corpus is not None:
            prov["corpus"] = corpus.describe()
        return prov


def _wrap(g: Grid, a: np.ndarray) -> SampledFunction:
    return SampledFunction(g, a)


# ---------------------------------------------------------------- evaluators
# signature: (ws, fld, f, w, params) -> list of (suffix, lhs, rhs, flags)

def _eval_t11(ws, fld, f, w, params):
    S = _wrap(ws.grid, cone_field(fld, 1.0))
    return [("", weak_morrey_norm(S, params, w, ws.family), morrey_norm(f, params, w, ws.family), {})]


def _eval_t12(ws, fld, f, w, params):
    G = _wrap(ws.grid, gstar_from_field(fld, ws.gstar.lam))
    flags = {"lambda": ws.gstar.lam,
             "threshold": GStarSpec.threshold(ws.grid.dim, ws.bank.alpha),
             "guarantee": ws.gstar.above_threshold(ws.grid.dim, ws.bank.alpha)}
    return [("", weak_morrey_norm(G, params, w, ws.family), morrey_norm(f, params, w, ws.family), flags)]


def comparability(S: np.ndarray, G: np.ndarray) -> tuple[float, float]:
    """``max S/g`` and ``max g/S`` over cells where both are non-negligible."""
    top = max(float(S.max()), float(G.max()))
    ok = (S > COMPARABILITY_FLOOR * top) & (G > COMPARABILITY_FLOOR * top)
    if not ok.any():
        return 0.0, 0.0
    return float((S[ok] / G[ok]).max()), float((G[ok] / S[ok]).max())


def _eval_c13(ws, fld, f, w, params):
    Gv = g_from_field(fld)
    Sv = cone_field(fld, 1.0)
    k1, k2 = comparability(Sv, Gv)
    G = _wrap(ws.grid, Gv)
    return [("", weak_morrey_norm(G, params, w, ws.family), morrey_norm(f, params, w, ws.family),
             {"S_over_g_max": k1, "g_over_S_max": k2})]


def _eval_t31(ws, fld, f, w, params):
    S = _wrap(ws.grid, cone_field(fld, 1.0))
    mw = hl_maximal(w, ws.family).flat
    flags = {"a1_characteristic": muckenhoupt_characteristic(w, 1.0, ws.family),
             "Mw_over_w_max": float((mw / w.flat).max())}
    return [("", weak_lp_norm(S, w, 1.0), lp_w_norm(f, 1.0, w), flags)]


def _eval_t42(ws, fld, f, w, params):
    G = _wrap(ws.grid, gstar_from_field(fld, ws.gstar.lam))
    flags = {"lambda": ws.gstar.lam,
             "threshold": GStarSpec.threshold(ws.grid.dim, ws.bank.alpha),
             "guarantee": ws.gstar.above_threshold(ws.grid.dim, ws.bank.alpha)}
    return [("", weak_lp_norm(G, w, 1.0), lp_w_norm(f, 1.0, w), flags)]


def _eval_l41(ws, fld, f, w, params):
    n = ws.grid.dim
    base = math.sqrt(cone_energy(fld, w, 1.0))
    out = []
    for beta in ws.config.apertures:
        j = math.log2(beta)
        lhs = math.sqrt(cone_energy(fld, w, beta))
        out.append((f"|j={j:g}", lhs, 2.0 ** (j * n / 2) * base, {"j": j, "aperture": beta}))
    return out


def _eval_ineq6(ws, fld, f, w, params):
    spec = ws.gstar
    G = gstar_from_field(fld, spec.lam)
    B = shell_bound_from_field(fld, spec.lam, spec.shell_count)
    viol = int(np.sum(G > B * (1 + INEQ6_TOL) + 1e-300))
    with np.errstate(invalid="ignore", divide="ignore"):
        q = np.where(B > 0, G / np.where(B > 0, B, 1.0), 0.0)
    i = int(np.argmax(q))
    flags = {"violations": viol, "J": spec.shell_count, "covers": spec.covers(ws.grid),
             "tolerance": INEQ6_TOL}
    return [("", float(G.ravel()[i]), float(B.ravel()[i]), flags)]


def _ball_volume(n: int, r: float) -> float:
    return 2 * r if n == 1 else math.pi * r * r


def tail_balls(grid: Grid) -> list[Ball]:
    L, n = grid.half_width, grid.dim
    e = np.eye(n)[0]
    out = []
    for c in (0.0, 0.25, -0.25):
        for r in (L / 16, L / 8):
            out.append(Ball(tuple(c * L * e), r))
    return out


def dyadic_average_sum(f: SampledFunction, ball: Ball) -> float:
    """``sum_{j>=1} |2^{j+1}B|^{-1} int_{2^{j+1}B} |f|`` with the geometric tail in closed form."""
    g = f.grid
    n, hn = g.dim, g.cell_volume
    af = np.abs(f.values)
    total_l1 = float(af.sum() * hn)
    far = float(np.abs(ball.center).max()) + g.half_width * math.sqrt(n)
    total, j = 0.0, 1
    while True:
        R = 2.0 ** (j + 1) * ball.radius
        vol = _ball_volume(n, R)
        if R > far:
            # every remaining ball contains the box: sum_{i>=j} total / vol(2^{i+1} r)
            total += total_l1 / vol / (1 - 2.0 ** (-n))
            return total
        total += float(af[region_mask(g, Ball(ball.center, R))].sum() * hn) / vol
        j += 1


def _tail_instances(ws: Workspace, corpus: Corpus, threads: Optional[int]) -> list[InstanceResult]:
    jobs = []
    for i, (desc, f) in enumerate(corpus.functions):
        for b in tail_balls(ws.grid):
            jobs.append((desc, f, b))

    def run(job):
        desc, f, b = job
        g = ws.grid
        outside = ~region_mask(g, b.dilate(2.0))
        f2 = _wrap(g, np.where(outside, f.values, 0.0))
        label = f"{desc}|B(c={b.center[0]:.4g},r={b.radius:.4g})"
        if not np.any(f2.values):
            return make_instance(label, "-", 0.0, 0.0, {"empty": True})
        S = cone_field(ws.field_of(f2), 1.0)
        inB = region_mask(g, b)
        lhs = float(S[inB].max()) if inB.any() else 0.0
        return make_instance(label, "-", lhs, dyadic_average_sum(f2, b),
                             {"ball_center": list(b.center), "ball_radius": b.radius})

    return ordered_map(run, jobs, threads)


def _cz_instances(ws: Workspace, corpus: Corpus, threads: Optional[int]) -> list[InstanceResult]:
    jobs = [(desc, f, m) for desc, f in corpus.functions for m in (1.0, 2.0, 4.0, 8.0)]

    def run(job):
        desc, f, m = job
        avg = float(np.abs(f.values).mean())
        label = f"{desc}|sigma={m:g}*avg"
        if avg == 0:
            return make_instance(label, "-", 0.0, 0.0, {"empty": True})
        sigma = m * avg
        d = cz_decompose(f, sigma, root_cube(ws.grid))
        rep = cz_verify(d, f, sigma)
        l1 = rep.details["l1"]
        flags = {c: bool(getattr(rep, c)) for c in rep.CHECKS}
        flags.update(passed=rep.passed, cubes=len(d.cubes), variant=d.variant)
        return make_instance(label, "-", rep.details["measure"], l1 / sigma, flags)

    return ordered_map(run, jobs, threads)


EVALUATORS = {
    "T1.1": _eval_t11, "T1.2": _eval_t12, "C1.3": _eval_c13, "T3.1": _eval_t31,
    "T4.2": _eval_t42, "L4.1": _eval_l41, "INEQ6": _eval_ineq6,
}


def evaluate(exp_id: str, ws: Workspace, fld: AlphaField, f: SampledFunction, w: Optional[Weight],
             params: Optional[MorreyParams] = None) -> list:
    return EVALUATORS[exp_id](ws, fld, f, w, params or ws.morrey)


def check_experiment(exp_id: str):
    if exp_id not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {exp_id!r} (known: {', '.join(EXPERIMENTS)})")


def run_experiment(exp_id: str, corpus: Optional[Corpus] = None, config: Optional[RunConfig] = None,
                   threads: Optional[int] = None, workspace: Optional[Workspace] = None) -> ExperimentReport:
    check_experiment(exp_id)
    config = config or RunConfig()
    ws = workspace or Workspace.from_config(config, corpus.grid if corpus is not None else None)
    if corpus is None:
        corpus = build_corpus(ws.grid, config.weight_exponents(), config.corpus_seed)
    if corpus.grid != ws.grid:
        raise ValueError("corpus and workspace grids differ")

    validity = {"a1_weights": all(is_a1_exponent(w.exponent, ws.grid.dim) for w in corpus.weights
                                  if w.exponent is not None)}
    if exp_id in NEEDS_A1 and not validity["a1_weights"]:
        bad = [w.label() for w in corpus.weights if not is_a1_exponent(w.exponent, ws.grid.dim)]
        raise ValueError(f"{exp_id} requires A_1 weights; got {', '.join(bad)}")
    if exp_id in ("T1.2", "T4.2", "INEQ6"):
        validity["lambda"] = ws.gstar.lam
        validity["lambda_threshold"] = GStarSpec.threshold(ws.grid.dim, ws.bank.alpha)
        validity["lambda_guarantee"] = ws.gstar.above_threshold(ws.grid.dim, ws.bank.alpha)
        if exp_id != "INEQ6" and not validity["lambda_guarantee"]:
            validity["label"] = "no guarantee"
    if exp_id == "INEQ6":
        validity["shells_cover_box"] = ws.gstar.covers(ws.grid)

    if exp_id == "TAIL":
        instances = _tail_instances(ws, corpus, threads)
    elif exp_id == "CZ":
        instances = _cz_instances(ws, corpus, threads)
    else:
        fields = ordered_map(ws.field_of, [f for _, f in corpus.functions], threads)
        if exp_id == "INEQ6":
            jobs = [(i, desc, f, None) for i, (desc, f) in enumerate(corpus.functions)]
        else:
            jobs = [(i, desc, f, w) for i, _, desc, f, w in corpus.instances()]

        def run(job):
            i, desc, f, w = job
            rows = evaluate(exp_id, ws, fields[i], f, w)
            label = "-" if w is None else w.label()
            return [make_instance(desc + sfx, label, lhs, rhs, fl) for sfx, lhs, rhs, fl in rows]

        instances = [r for rows in ordered_map(run, jobs, threads) for r in rows]

    report = ExperimentReport(exp_id, instances, ws.provenance(corpus), validity)
    report.summary = summarize(exp_id, report)
    return report


def summarize(exp_id: str, report: ExperimentReport) -> dict:
    out = {"instances": len(report.instances), "skipped": report.skipped,
           "max_ratio": report.max_ratio}
    if exp_id == "INEQ6":
        out["violations"] = sum(int(r.flags.get("violations", 0)) for r in report.instances)
    if exp_id == "CZ":
        out["failures"] = sum(not r.flags.get("passed", True) for r in report.instances
                              if not r.flags.get("empty"))
    if exp_id == "C1.3":
        ks = [max(r.flags["S_over_g_max"], r.flags["g_over_S_max"]) for r in report.instances
              if not r.skipped]
        out["comparability_K"] = max(ks) if ks else None
    if exp_id == "L4.1":
        spread = {}
        for r in report.instances:
            if r.ratio is None:
                continue
            key = (r.descriptor.rsplit("|j=", 1)[0], r.weight)
            spread.setdefault(key, []).append(r.ratio)
        out["max_spread_across_j"] = max((max(v) / min(v) for v in spread.values() if min(v) > 0),
                                         default=None)
    return out
