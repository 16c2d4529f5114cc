"""Command-line driver: ``manifold-lqg run <config.json>`` and ``manifold-lqg plot <summary.csv> <out.svg>``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from .artifacts import RunManifest, write_outputs
from .config import ExperimentConfig
from .errors import ConfigError, ManifoldLQGError, NumericalFailure, SchemaMismatch
from .experiment import monte_carlo_regret
from .plotting import emit_plot

log = logging.getLogger("manifold_lqg")

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _threads(arg):
    if arg is not None:
        return arg
    env = os.environ.get("MANIFOLD_LQG_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"MANIFOLD_LQG_THREADS must be an integer, got {env!r}", key="MANIFOLD_LQG_THREADS")
    return 1


def run_experiment(config_path, output_dir=None, threads=None, seed_override=None) -> RunManifest:
    cfg = ExperimentConfig.load(config_path)
    if output_dir is not None:
        cfg.output_dir = str(output_dir)
    if seed_override is not None:
        cfg.master_seed = int(seed_override)
    cfg.validate()
    nthreads = _threads(threads)
    out = Path(cfg.output_dir)
    start = time.perf_counter()
    mc = monte_carlo_regret(cfg, threads=nthreads)
    written, summary = write_outputs(mc, out)
    svg = emit_plot(summary, out / "regret.svg")
    resolved = out / "config.resolved.json"
    resolved.write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
    artifacts = [str(p) for p in written + [svg, resolved]]
    manifest = RunManifest(cfg.to_dict(), artifacts, time.perf_counter() - start, threads=nthreads)
    manifest.artifacts.append(str(out / "manifest.json"))
    manifest.write(out / "manifest.json")
    for res in mc.results:
        log.info("%s: final mean regret %.6g over %d runs", res.label, res.final_mean, len(res.runs))
    return manifest


def build_parser():
    parser = argparse.ArgumentParser(prog="manifold-lqg", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-algorithm results")
    # accepted after the subcommand too; SUPPRESS keeps it from resetting the top-level flag
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", parents=[common], help="run an experiment described by a JSON config")
    run.add_argument("config")
    run.add_argument("--output-dir", default=None, help="overrides the config's output_dir")
    run.add_argument("--threads", type=int, default=None,
                     help="worker threads for Monte-Carlo runs (default: $MANIFOLD_LQG_THREADS or 1)")
    run.add_argument("--seed-override", type=int, default=None, help="replaces master_seed")
    plot = sub.add_parser("plot", parents=[common], help="render a summary CSV as an SVG regret plot")
    plot.add_argument("summary")
    plot.add_argument("out")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            manifest = run_experiment(args.config, args.output_dir, args.threads, args.seed_override)
            print(f"wrote {len(manifest.artifacts)} artifacts to {manifest.config['output_dir']}")
        else:
            emit_plot(args.summary, args.out)
            print(f"wrote {args.out}")
    except ConfigError as exc:
        print(f"config error [{exc.key}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SchemaMismatch as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure (algorithm={exc.algorithm}, t={exc.t}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ManifoldLQGError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
