"""Discretization sensitivity: rerun an experiment along one refinement axis."""

from __future__ import annotations

import math
from typing import Optional, Sequence

from ..config import RunConfig
from .corpus import build_corpus
from .experiments import Workspace, check_experiment, run_experiment
from .report import ExperimentReport, InstanceResult

AXES = {
    "grid.N": "grid.N", "N": "grid.N",
    "bank.size": "bank.size", "bank": "bank.size",
    "cone.m": "cone.m", "m": "cone.m",
    "cone.t_range": "cone.t_range", "t-range": "cone.t_range", "t_range": "cone.t_range",
    "gstar.J": "gstar.J", "J": "gstar.J",
    "family.stride": "family.stride", "stride": "family.stride",
}


def axis_name(axis: str) -> str:
    if axis not in AXES:
        raise ValueError(f"unknown axis {axis!r} (known: {', '.join(sorted(set(AXES.values())))})")
    return AXES[axis]


def default_values(axis: str, config: RunConfig) -> tuple:
    axis = axis_name(axis)
    if axis == "grid.N":
        return (config.points // 4, config.points // 2, config.points)
    if axis == "bank.size":
        return (max(config.bank_size // 2, 1), config.bank_size, 2 * config.bank_size)
    if axis == "cone.m":
        return (2, 4, 8)
    if axis == "cone.t_range":
        return (1.0, 1.5, 2.0)
    if axis == "gstar.J":
        J = config.gstar().shell_count
        return tuple(range(max(J - 2, 1), J + 1))
    stride = config.family().meta["stride"]
    return tuple(s for s in (4 * stride, 2 * stride, stride) if s >= 1)


def _monotone(values: Sequence[float]) -> bool:
    d = [b - a for a, b in zip(values, values[1:])]
    return all(x > 0 for x in d) or all(x < 0 for x in d)


def ladder_factor(tau: float, m: int) -> float:
    """``tau`` snapped to ``2^{j/m}`` so a widened ladder contains the original scales."""
    if tau < 1:
        raise ValueError("t-range factors must be >= 1")
    return 2.0 ** (round(m * math.log2(tau)) / m)


def level_config(config: RunConfig, axis: str, value) -> RunConfig:
    axis = axis_name(axis)
    if axis == "cone.t_range":
        base = config.cone()
        tau = ladder_factor(value, base.scales_per_octave)
        return config.with_key("cone.t_min", base.t_min / tau).with_key("cone.t_max", base.t_max * tau)
    return config.with_key(axis, int(value))


def convergence_study(exp_id: str, config: Optional[RunConfig] = None, axis: str = "grid.N",
                      values: Optional[Sequence] = None, specs=None,
                      threads: Optional[int] = None) -> ExperimentReport:
    """Run ``exp_id`` at every level of ``axis``; report max ratios and relative drifts.

    ``cone.t_range`` values are widening factors ``tau >= 1`` applied as
    ``[t_min / tau, t_max * tau]``, with ``tau`` snapped to the scale ladder.
    """
    check_experiment(exp_id)
    config = config or RunConfig()
    axis = axis_name(axis)
    values = tuple(default_values(axis, config) if values is None else values)
    if len(values) < 2:
        raise ValueError("a convergence study needs at least 2 axis values")
    if not _monotone(values):
        raise ValueError(f"axis values must be strictly monotone, got {list(values)}")

    instances, max_ratios, skipped, levels = [], [], [], []
    for v in values:
        cfg = level_config(config, axis, v)
        ws = Workspace.from_config(cfg)
        corpus = build_corpus(ws.grid, cfg.weight_exponents(), cfg.corpus_seed, specs)
        rep = run_experiment(exp_id, corpus, cfg, threads=threads, workspace=ws)
        for r in rep.instances:
            instances.append(InstanceResult(f"{axis}={v:g}|{r.descriptor}", r.weight, r.lhs, r.rhs,
                                            r.ratio, dict(r.flags, level=v)))
        max_ratios.append(rep.max_ratio)
        skipped.append(rep.skipped)
        levels.append({"value": v, "provenance": rep.provenance, "validity": rep.validity})

    drifts = []
    for a, b in zip(max_ratios, max_ratios[1:]):
        drifts.append(None if a is None or b is None or a == 0 else abs(b - a) / abs(a))

    prov = {"axis": axis, "values": list(values), "levels": levels}
    report = ExperimentReport(exp_id, instances, prov, {"convergence": True})
    report.summary = {"instances": len(instances), "skipped": report.skipped, "axis": axis,
                      "values": list(values), "max_ratios": max_ratios, "drifts": drifts,
                      "skipped_per_level": skipped}
    return report
