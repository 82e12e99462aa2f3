"""Batch command-line front end: config in, CSV out.

Exit codes: 0 success, 1 runtime failure, 2 bad config/usage. Errors print a
single machine-parsable line ``erfas: error: <message>`` on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import fields, replace

from .scenario import (
    ExperimentConfig,
    beampattern_study,
    emit_beampattern_csv,
    emit_csv,
    greedy_vs_exhaustive,
    near_field_sweep,
    run_sweep,
)

SUBCOMMANDS = (
    "rate-sweep",
    "aod-sweep",
    "multipath-sweep",
    "near-field",
    "greedy-vs-exhaustive",
    "beampattern",
)

# Per-subcommand defaults layered over ExperimentConfig defaults. The AoD
# sweep is LoS-only (the multipath effect is its own sweep); the near-field
# study is deterministic apart from optimizer initialization, so fewer
# trials suffice.
SUBCOMMAND_DEFAULTS = {
    "aod-sweep": {"n_clusters": 0},
    "near-field": {"trials": 10},
}


def _config_epilog() -> str:
    lines = ["config keys (JSON or YAML) and defaults:"]
    for f in fields(ExperimentConfig):
        default = f.default
        lines.append(f"  {f.name} = {default!r}")
    return "\n".join(lines)


def load_config(path: str | None, subcommand: str) -> ExperimentConfig:
    doc = dict(SUBCOMMAND_DEFAULTS.get(subcommand, {}))
    if path is not None:
        with open(path) as fh:
            text = fh.read()
        if path.endswith((".yaml", ".yml")):
            import yaml

            user = yaml.safe_load(text) or {}
        else:
            user = json.loads(text)
        if not isinstance(user, dict):
            raise ValueError("config file must contain a mapping")
        doc.update(user)
    return ExperimentConfig.from_dict(doc)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="erfas",
        description="Reconfigurable-pattern antenna array link simulator",
        epilog=_config_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, epilog=_config_epilog(),
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config", help="JSON/YAML config file")
        p.add_argument("--out", required=True, help="output CSV path")
        p.add_argument("--seed", type=int, default=None,
                       help="master seed override (env ERFAS_SEED as fallback)")
        p.add_argument("--threads", type=int, default=None,
                       help="worker process count for trial parallelism")
        p.add_argument("--timing", action="store_true",
                       help="measure optimizer wall time (runtime column is 0 "
                            "otherwise; timing makes output non-reproducible)")
        p.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def _resolve_seed(args) -> int | None:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("ERFAS_SEED")
    return int(env) if env else None


def run(args) -> int:
    try:
        cfg = load_config(args.config, args.subcommand)
        seed = _resolve_seed(args)
        if seed is not None:
            cfg = replace(cfg, master_seed=seed)
        if args.threads is not None:
            cfg = replace(cfg, threads=args.threads)
        if args.timing:
            cfg = replace(cfg, measure_runtime=True)
    except (OSError, ValueError, TypeError, KeyError) as exc:
        print(f"erfas: error: bad config: {exc}", file=sys.stderr)
        return 2
    if args.verbose:
        print(f"# {args.subcommand}: seed={cfg.master_seed} trials={cfg.trials}",
              file=sys.stderr)
    try:
        if args.subcommand == "rate-sweep":
            emit_csv(run_sweep(cfg, "power_dbm"), args.out)
        elif args.subcommand == "aod-sweep":
            emit_csv(run_sweep(cfg, "aod_deg"), args.out)
        elif args.subcommand == "multipath-sweep":
            emit_csv(run_sweep(cfg, "n_paths"), args.out)
        elif args.subcommand == "near-field":
            emit_csv(near_field_sweep(cfg), args.out)
        elif args.subcommand == "greedy-vs-exhaustive":
            emit_csv(greedy_vs_exhaustive(cfg), args.out)
        elif args.subcommand == "beampattern":
            emit_beampattern_csv(beampattern_study(cfg), args.out)
    except Exception as exc:  # runtime failure: one-line diagnostic, exit 1
        print(f"erfas: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
