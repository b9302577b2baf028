"""Command line front end: ``python -m onlinemil <command> [flags]``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional

from .gridworld import DEFAULT_STEP_PENALTY, MapError, lava_river, parse_size
from .harness import (
    ExperimentConfig,
    benchmark_scaling,
    parse_trajectory,
    prepare_out_dir,
    replay,
    run_experiment,
    transfer,
)
from .hypothesis import Hypothesis
from .learner import OnlineLearner


def _size(text: str):
    try:
        return parse_size(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _common(default_gen: str = "10x10", default_episodes: int = 120) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--map", help="map file (# . L G @)")
    src.add_argument("--gen", type=_size, default=_size(default_gen), metavar="WxH",
                     help="generate a lava-river map (default %s)" % default_gen)
    p.add_argument("--episodes", type=int, default=default_episodes)
    p.add_argument("--d-max", type=int, default=4, help="maximum abstraction depth")
    p.add_argument("--metarules", help="metarule file (default: built-in set)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", help="directory for CSV logs, program dump and summary")
    p.add_argument("--step-penalty", type=float, default=DEFAULT_STEP_PENALTY)
    p.add_argument("--step-cap", type=int, default=None,
                   help="steps per episode (default: 200, widened on large maps)")
    p.add_argument("--solution-cap", type=int, default=64,
                   help="solutions kept per generalisation; 0 means uncapped")
    return p


def _config(args) -> ExperimentConfig:
    return ExperimentConfig(
        map_path=args.map, gen=None if args.map else args.gen, episodes=args.episodes,
        d_max=args.d_max, metarules_path=args.metarules,
        solution_cap=args.solution_cap or None, step_penalty=args.step_penalty,
        step_cap=args.step_cap, seed=args.seed, out_dir=args.out_dir,
    )


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as f:
        return f.read()


def _print_summary(summary: dict) -> None:
    print(json.dumps(summary, indent=2, sort_keys=True))


def cmd_run(args) -> int:
    _print_summary(run_experiment(_config(args)).summary)
    return 0


def cmd_transfer(args) -> int:
    _print_summary(transfer(_read(args.program), _config(args)).summary)
    return 0


def cmd_dump_program(args) -> int:
    cfg = _config(args)
    text = run_experiment(cfg).hypothesis.dump()
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_replay(args) -> int:
    cfg = _config(args)
    kb = cfg.load_map().kb()
    h = Hypothesis.load(_read(args.program), kb) if args.program else None
    learner = OnlineLearner(kb, cfg.engine(), h)
    transitions = parse_trajectory(_read(args.trajectory), kb.signatures)
    reports = replay(transitions, learner, args.passes)
    if cfg.out_dir is not None:
        prepare_out_dir(cfg.out_dir)
        with open(os.path.join(cfg.out_dir, "program.pl"), "w", encoding="utf-8", newline="") as f:
            f.write(learner.h.dump())
    a, d, c = learner.h.size()
    _print_summary({
        "transitions": len(transitions), "passes": args.passes,
        "steps_with_errors": sum(1 for r in reports if r.errors),
        "final_abstractions": a, "final_dynamics": d, "final_constraints": c,
    })
    return 0


def cmd_bench_scale(args) -> int:
    cfg = _config(args)
    small = cfg.load_map()
    large = lava_river(*args.large)
    _print_summary(benchmark_scaling(small, large, cfg.engine(), args.repeats))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="python -m onlinemil",
                                     description="Online learning of lifted world models in a lava gridworld.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[_common()], help="learn while acting; write logs")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("replay", parents=[_common()], help="feed a trajectory file to the learner")
    p.add_argument("trajectory", help="one 'state | action | state' transition per line")
    p.add_argument("--program", help="start from this dumped program")
    p.add_argument("--passes", type=int, default=1)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("transfer", parents=[_common("100x100", 1)], help="act on a new map with a dumped program")
    p.add_argument("program", help="program dump from an earlier run")
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("bench-scale", parents=[_common()], help="compare induction cost on two map sizes")
    p.add_argument("--large", type=_size, default=(100, 100), metavar="WxH")
    p.add_argument("--repeats", type=int, default=3)
    p.set_defaults(func=cmd_bench_scale)

    p = sub.add_parser("dump-program", parents=[_common()], help="run and print the learned program")
    p.add_argument("--output", help="write the program here instead of stdout")
    p.set_defaults(func=cmd_dump_program)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, MapError) as e:
        print("error: %s" % e, file=sys.stderr)
        return 1
