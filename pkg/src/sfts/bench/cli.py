"""Command-line interface.

    sfts <task> [--config file.json] [--seed N] [--trials N] [--out path]
                [--set key=value ...] [--timings]
    sfts lattice expand --basis basis.json --freqs L.json --radius R [--out path]

Tasks: setquery | estimate1d | estimatehd | distill | qsample-bench |
energy-check | snap.  Exit codes: 0 pass, 2 pass-rate threshold missed,
1 error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .config import TASKS, ExperimentConfig
from .runner import run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sfts", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    for task in TASKS:
        p = sub.add_parser(task, help=f"run the {task} experiment")
        p.add_argument("--config", help="JSON config file (flags win over file values)")
        p.add_argument("--seed", type=int, help="base seed; trial i uses seed + i")
        p.add_argument("--trials", type=int)
        p.add_argument("--out", help="output directory for CSV/JSON artifacts")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override any config field")
        p.add_argument("--timings", action="store_true",
                       help="record real wall times in the CSV (breaks byte-reproducibility)")

    lat = sub.add_parser("lattice", help="lattice utilities")
    lat_sub = lat.add_subparsers(dest="lattice_command", required=True)
    exp = lat_sub.add_parser("expand", help="expand candidate frequencies around centers")
    exp.add_argument("--basis", required=True, help='JSON file {"columns": [[...], ...]}')
    exp.add_argument("--freqs", required=True, help="JSON file with the center list")
    exp.add_argument("--radius", required=True, type=float)
    exp.add_argument("--out", help="write candidates JSON here (default stdout)")
    return parser


def _run_task(args) -> int:
    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig(task=args.command)
    overrides = [f"task={args.command}"]
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.trials is not None:
        overrides.append(f"trials={args.trials}")
    if args.out is not None:
        overrides.append(f"out={args.out}")
    if args.timings:
        overrides.append("timings=true")
    overrides.extend(args.set)
    cfg = cfg.apply_overrides(overrides)
    summary = run(cfg)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return int(summary["exit_code"])


def _run_lattice_expand(args) -> int:
    from ..lattice import LatticeBasis, expand_candidates

    with open(args.basis) as fh:
        basis = LatticeBasis(np.asarray(json.load(fh)["columns"], dtype=float).T)
    with open(args.freqs) as fh:
        raw = json.load(fh)
    centers = np.asarray(raw["freqs"] if isinstance(raw, dict) else raw, dtype=float)
    if centers.ndim == 1:
        centers = centers.reshape(-1, 1)
    cand = expand_candidates(basis, centers, args.radius)
    payload = json.dumps({"count": cand.size, "candidates": cand.frequencies.tolist()}, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(payload + "\n")
    else:
        print(payload)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "lattice":
            code = _run_lattice_expand(args)
        else:
            code = _run_task(args)
    except Exception as exc:  # surface errors with exit code 1
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return code


if __name__ == "__main__":
    sys.exit(main())
