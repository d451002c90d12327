"""Command-line interface: ``python3 -m topobench <command> ...``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from .harness import (
    default_matrix, export_convergence, export_summary, load_config, parse_seeds, probe_feasible_fraction,
    read_run, read_runs, render_design, run_matrix,
)
from .harness.export import split_config_id


def _cmd_run(args) -> int:
    configs = load_config(args.config) if args.config else default_matrix()
    if args.seeds:
        seeds = parse_seeds(args.seeds)
        configs = [c.with_seeds(seeds) for c in configs]
    out = Path(args.out) if args.out else Path(configs[0].out)

    def progress(res):
        print(f"{res.config_id} seed={res.seed} {res.status} best={res.final_best:.6g} ({res.wall_time:.1f}s)",
              flush=True)

    results = run_matrix(configs, out, workers=args.workers, resume=args.resume, progress=progress)
    failed = [r for r in results if r.status.startswith("failed")]
    print(f"{len(results)} runs, {len(failed)} failed; manifest at {out / 'manifest.csv'}")
    return 1 if failed else 0


def _cmd_stats(args) -> int:
    logs = read_runs(args.indir)
    if not logs:
        print(f"no run files under {args.indir}", file=sys.stderr)
        return 1
    summaries, tests, summary_csv, _ = export_summary(logs, args.indir)
    print(summary_csv, end="")
    print()
    for p, d, t in tests:
        flag = "" if t.significant else "  (not significantly different)"
        print(f"{p} {d}D {t.pair[0]} vs {t.pair[1]}: U={t.u:g} p={t.p_value:.4f}{flag}")
    return 0


def _design_from_arg(text: str):
    """Returns (vector, config id or None)."""
    path, sep, row = text.rpartition(":")
    if sep and Path(path).is_file():
        log = read_run(path)
        if row == "best":
            x = log.best_x
        else:
            hit = np.nonzero(log.eval_index == int(row))[0]
            if not len(hit):
                raise ValueError(f"{path} has no evaluation {row}")
            x = log.x[hit[0]]
        return x, log.config_id
    if Path(text).is_file():
        return read_run(text).best_x, read_run(text).config_id
    return np.array([float(v) for v in text.split(",")]), None


def _cmd_render(args) -> int:
    x, config_id = _design_from_arg(args.design)
    if args.config:
        cfgs = load_config(args.config)
        if len({(c.parameterization, c.dimension) for c in cfgs}) != 1:
            print("render needs a config with a single parameterization and dimension", file=sys.stderr)
            return 2
        param, dim = cfgs[0].parameterization, cfgs[0].dimension
    elif config_id is not None:
        param, dim, _ = split_config_id(config_id)
    else:
        print("--config is required when --design is a literal vector", file=sys.stderr)
        return 2
    out = Path(args.out)
    render_design(x, param, dim, out)
    print(f"wrote {out.with_suffix('.svg')} and {out.with_suffix('.pgm')}")
    return 0


def _cmd_probe(args) -> int:
    res = probe_feasible_fraction(args.param, args.dim, None if args.exhaustive else args.samples,
                                  seed=args.seed, exhaustive=args.exhaustive)
    print(f"{res.parameterization} {res.dimension}D {res.mode}: {res.n_feasible}/{res.n_samples} feasible "
          f"= {100 * res.fraction:.6f}% (95% Wilson interval {100 * res.ci_low:.6f}% to {100 * res.ci_high:.6f}%)")
    return 0


def _cmd_convergence(args) -> int:
    logs = read_runs(args.indir)
    if not logs:
        print(f"no run files under {args.indir}", file=sys.stderr)
        return 1
    out = Path(args.out) if args.out else Path(args.indir) / f"convergence_{args.axis}.csv"
    export_convergence(logs, args.axis, out)
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="topobench", description="Black-box cantilever topology benchmark.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute an experiment matrix")
    p.add_argument("--config", help="flat key = value config file (default: full 27-config matrix)")
    p.add_argument("--seeds", help="seed list such as '0-14' or '1,3,5'")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--resume", action="store_true", help="skip runs whose CSV already exists")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("stats", help="summary table and pairwise Mann-Whitney tests")
    p.add_argument("--in", dest="indir", required=True)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("render", help="draw one design as SVG and PGM")
    p.add_argument("--config")
    p.add_argument("--design", required=True,
                   help="comma-separated vector, RUN.csv (best row), RUN.csv:best or RUN.csv:EVAL_INDEX")
    p.add_argument("--out", default="design", help="output path prefix")
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("probe", help="feasible fraction of the design space")
    p.add_argument("--param", required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--exhaustive", action="store_true", help="enumerate all honeycomb on/off patterns")
    p.set_defaults(func=_cmd_probe)

    p = sub.add_parser("convergence", help="mean best-so-far curves per config")
    p.add_argument("--in", dest="indir", required=True)
    p.add_argument("--axis", choices=("total", "simulations"), default="total")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_convergence)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
