"""Command-line entry point: run, batch, oracle, gen-suite."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .agent import Mode, TestingTask
from .harness import HarnessError
from .oracle import TooLarge, oracle_solvable
from .suite import SUITE, generate_suite


def _radius(text: str) -> float:
    value = float(text)
    if value < 1:
        raise argparse.ArgumentTypeError("radius must be >= 1 (or 'inf')")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gamesearch", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one agent on one level")
    run.add_argument("--level", required=True)
    run.add_argument("--goal", required=True)
    run.add_argument("--phi", default="isOpen", help="comma-separated atoms: isOpen,isClosed,isReached")
    run.add_argument("--psi", default="")
    run.add_argument("--mode", choices=[m.value for m in Mode], default="search")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--radius", type=_radius)
    run.add_argument("--budget", type=int, help="Random only; default is 1.2x a Search run")
    run.add_argument("--trace")
    run.add_argument("--model-dump")
    run.add_argument("--report", help="write the JSON report here")

    batch = sub.add_parser("batch", help="run an experiment spec")
    batch.add_argument("--spec", required=True)
    batch.add_argument("--out", required=True)

    oracle = sub.add_parser("oracle", help="brute-force solvability check")
    oracle.add_argument("--level", required=True)
    oracle.add_argument("--goal", required=True)
    oracle.add_argument("--phi", default="isOpen")

    gen = sub.add_parser("gen-suite", help="write the benchmark levels and a batch spec")
    gen.add_argument("--out", required=True)
    return p


def cmd_run(args) -> int:
    level = harness.open_level(args.level)
    task = TestingTask(args.goal, args.phi, args.psi)
    if args.budget is not None and args.budget <= 0:
        raise HarnessError(harness.EXIT_SPEC, "--budget must be positive")
    rep = harness.run_single(level, task, args.mode, args.seed, args.radius, args.budget)
    if args.trace:
        Path(args.trace).write_text(rep.trace)
    if args.model_dump:
        Path(args.model_dump).write_text(rep.model_dump)
    if args.report:
        Path(args.report).write_text(json.dumps(rep.to_dict(), sort_keys=True, indent=2) + "\n")
    sys.stdout.write(rep.to_text())
    return rep.exit_code


def cmd_batch(args) -> int:
    spec = harness.ExperimentSpec.load(args.spec)
    report = harness.write_batch(spec, args.out)
    sys.stdout.write(harness.batch_text(report))
    return 0


def cmd_oracle(args) -> int:
    level = harness.open_level(args.level)
    task = TestingTask(args.goal, args.phi)
    harness.check_goal(level, task)
    try:
        ok, k = oracle_solvable(level, task)
    except TooLarge as exc:
        raise HarnessError(harness.EXIT_SPEC, str(exc)) from None
    print(f"solvable min_interactions={k}" if ok else "unsolvable")
    return 0 if ok else 1


def cmd_gen_suite(args) -> int:
    paths = generate_suite(args.out)
    spec = {"levels": [{"path": f"{name}.level"} for name in SUITE],
            "modes": ["search", "basic", "random"], "random_repeats": 10, "seed": 0}
    spec_path = Path(args.out) / "suite.json"
    spec_path.write_text(json.dumps(spec, indent=2) + "\n")
    for path in paths + [spec_path]:
        print(path)
    return 0


COMMANDS = {"run": cmd_run, "batch": cmd_batch, "oracle": cmd_oracle, "gen-suite": cmd_gen_suite}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except HarnessError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
