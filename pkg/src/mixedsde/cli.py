"""Command line entry point ``mixedsde``.

Subcommands::

    mixedsde run CONFIG [--workers N] [--out DIR] [--dump-paths]
    mixedsde replay --seed S --level N --preset P [--kind K] [--fine M] ...
    mixedsde bihari-eval PARAMS

Exit status is 0 exactly when every verdict passes.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .harness import (
    load_config,
    replay_case,
    run_bihari_eval,
    run_study,
    tomllib,
    write_outputs,
)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mixedsde", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a study described by a TOML or JSON file")
    run.add_argument("config", type=Path)
    run.add_argument("--workers", type=int, default=None, help="override the worker count")
    run.add_argument("--out", type=Path, default=None, help="override the output directory")
    run.add_argument("--dump-paths", action="store_true", help="write one CSV per solved path")

    rep = sub.add_parser("replay", help="recompute one case from a failure record")
    rep.add_argument("--seed", type=int, required=True)
    rep.add_argument("--level", type=int, required=True)
    rep.add_argument("--preset", required=True)
    rep.add_argument("--kind", default="convergence", choices=("convergence", "uniqueness", "audit"))
    rep.add_argument("--fine", type=int, default=None, help="driver grid size (default 2*level)")
    rep.add_argument("--hurst", type=float, default=0.75)
    rep.add_argument("--alpha", type=float, default=0.3)
    rep.add_argument("--master-seed", type=int, default=0)
    rep.add_argument("--preset-params", type=json.loads, default=None, help="JSON object of preset parameters")
    rep.add_argument("--levels", default=None, help="comma-separated partition sizes (uniqueness)")
    rep.add_argument("--family-ratio", type=float, default=None, help="second family size ratio (uniqueness)")

    bih = sub.add_parser("bihari-eval", help="evaluate the Bihari bound from a parameter file")
    bih.add_argument("params", type=Path)
    return p


def _read_params(path: Path) -> dict:
    text = path.read_text()
    data = tomllib.loads(text) if path.suffix.lower() == ".toml" else json.loads(text)
    return data.get("bihari", data)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "run":
        cfg = load_config(args.config)
        changes = {}
        if args.workers is not None:
            changes["workers"] = args.workers
        if args.out is not None:
            changes["output_dir"] = str(args.out)
        if args.dump_paths:
            changes["dump_paths"] = True
        cfg = cfg.replace(**changes)
        report = run_study(cfg)
        if cfg.output_dir:
            write_outputs(report, cfg.output_dir)
        print(json.dumps({"kind": report.kind, "verdicts": report.verdicts, "passed": report.passed},
                         indent=2, sort_keys=True))
        return 0 if report.passed else 1
    if args.command == "replay":
        extra = {}
        if args.levels:
            extra["levels"] = tuple(int(v) for v in args.levels.split(","))
        if args.preset_params:
            extra["preset_params"] = args.preset_params
        if args.family_ratio is not None:
            extra["family_ratio"] = args.family_ratio
        out = replay_case(args.kind, args.seed, args.level, args.preset, args.fine,
                          args.hurst, args.alpha, args.master_seed, **extra)
        print(json.dumps(out, indent=2, sort_keys=True))
        return 0 if not out.get("censored") else 1
    out = run_bihari_eval(_read_params(args.params))
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0 if out["in_domain"] else 1


if __name__ == "__main__":
    sys.exit(main())
