"""Command-line front end: ``morreylab <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from .config import ConfigError, RunConfig, default_config_text, load_config
from .kernels import admissibility_report
from .lab import adversarial_search, convergence_study, run_experiment, write_report
from .lab.convergence import AXES
from .lab.experiments import EXPERIMENTS
from .weights import build_power_weight, weight_lemma_report


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="morreylab",
                                description="Numerical experiments for intrinsic square functions "
                                            "on weighted Morrey spaces.")
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    def common(sp, output=True):
        sp.add_argument("--config", help="flat key = value config file (defaults when omitted)")
        if output:
            sp.add_argument("--output", help="report path (overrides output.path)")
            sp.add_argument("--format", choices=("csv", "json"), help="report format (overrides output.format)")

    c = sub.add_parser("check", help="run experiments over the default corpus")
    c.add_argument("--experiment", help="experiment id (default: the config's experiments list)")
    common(c)

    s = sub.add_parser("search", help="adversarial search for the worst ratio")
    s.add_argument("--experiment", required=True)
    s.add_argument("--budget", type=int, help="hill-climbing evaluations (overrides search.budget)")
    s.add_argument("--seed", type=int, help="search seed (default: corpus.seed)")
    s.add_argument("--family", help="bump, bump_pair or osc (overrides search.family)")
    common(s)

    v = sub.add_parser("converge", help="rerun an experiment along one refinement axis")
    v.add_argument("--experiment", required=True)
    v.add_argument("--axis", required=True, choices=sorted(AXES))
    v.add_argument("--values", help="comma separated, strictly monotone axis values")
    common(v)

    b = sub.add_parser("validate-bank", help="admissibility table of the kernel bank")
    common(b, output=False)

    w = sub.add_parser("weights-report", help="weight diagnostics for the configured exponents")
    common(w, output=False)

    sub.add_parser("default-config", help="print every config key with its default")
    return p


def _output(args, cfg: RunConfig, exp_id: str, multi: bool):
    path = args.output or cfg.output_path
    fmt = args.format or cfg.output_format
    if multi:
        stem, dot, ext = path.rpartition(".")
        path = f"{stem}-{exp_id}.{ext}" if dot else f"{path}-{exp_id}"
    return path, fmt


def _finish(report, args, cfg, exp_id, multi=False):
    path, fmt = _output(args, cfg, exp_id, multi)
    write_report(report, path, fmt)
    mr = report.max_ratio
    print(f"{exp_id}: {len(report.instances)} instances, {report.skipped} skipped, "
          f"max ratio {'n/a' if mr is None else f'{mr:.6g}'} -> {path}")


def _check(args, cfg):
    ids = [args.experiment] if args.experiment else list(cfg.experiments)
    for e in ids:
        if e not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {e!r} (known: {', '.join(EXPERIMENTS)})")
    for e in ids:
        _finish(run_experiment(e, config=cfg), args, cfg, e, multi=len(ids) > 1)


def _search(args, cfg):
    rep = adversarial_search(args.experiment, cfg, args.budget, args.seed, args.family)
    _finish(rep, args, cfg, args.experiment)
    print(f"best: {rep.summary['best_descriptor']} with {rep.summary['best_weight']}")


def _converge(args, cfg):
    values = None
    if args.values:
        values = [float(v) for v in args.values.replace(",", " ").split()]
        values = [int(v) if v.is_integer() and AXES[args.axis] != "cone.t_range" else v for v in values]
    rep = convergence_study(args.experiment, cfg, args.axis, values)
    _finish(rep, args, cfg, args.experiment)
    fmt = lambda xs: ", ".join("n/a" if x is None else f"{x:.4g}" for x in xs)  # noqa: E731
    print(f"max ratios: {fmt(rep.summary['max_ratios'])}")
    print(f"drifts:     {fmt(rep.summary['drifts'])}")


def _validate_bank(args, cfg):
    g = cfg.grid()
    bank = cfg.bank(g)
    print(f"{'#':>3} {'support':>8} {'mean':>10} {'holder':>8}  ok")
    bad = 0
    for i, k in enumerate(bank):
        r = admissibility_report(k, g)
        bad += not r.passed
        print(f"{i:>3} {r.support_radius:8.4f} {r.mean:10.2e} {r.holder_quotient:8.4f}  "
              f"{'yes' if r.passed else 'NO'}")
    print(f"{len(bank) - bad}/{len(bank)} kernels admissible (alpha={bank.alpha:g}, seed={bank.seed})")
    return 1 if bad else 0


def _weights_report(args, cfg):
    g = cfg.grid()
    fam = cfg.family(g)
    rows = []
    for a in cfg.weight_exponents():
        w = build_power_weight(a, g)
        rep = weight_lemma_report(w, cfg.weight_p, cfg.weight_r, cfg.weight_q, fam, seed=cfg.corpus_seed)
        rows.append({"weight": w.label(), **rep.as_dict()})
    print(json.dumps(rows, indent=2, sort_keys=True))


COMMANDS = {"check": _check, "search": _search, "converge": _converge,
            "validate-bank": _validate_bank, "weights-report": _weights_report}


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "default-config":
        sys.stdout.write(default_config_text())
        return 0
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](args, cfg) or 0
    except ConfigError as exc:
        print(f"morreylab: invalid config: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"morreylab: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
