"""Command-line entry point: ``dualsource-aoi {solve,simulate,sweep,convergence}``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from . import csvio
from .config import SWEEP_POLICIES, Config, SweepSpec, parse_config
from .experiments import POLICY_NAMES, build_policy, convergence_rows, evaluate, run_sweep
from .simulator import simulate_episode, write_trajectory_csv
from .solver import rvi_solve

log = logging.getLogger("dualsource_aoi")

EVAL_CHOICES = {"oracle": "oracle", "mc": "monte_carlo"}


def _load(args) -> Config:
    config = parse_config(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, run=dataclasses.replace(config.run, seed=args.seed))
    return config


def cmd_solve(args) -> None:
    config = _load(args)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    result = rvi_solve(config.params, config.run.epsilon, config.run.max_iters,
                        aperiodicity=config.run.aperiodicity)
    csvio.write_policy_csv(result.policy, out / "policy.csv")
    csvio.write_value_csv(result.value, config.params, out / "value.csv")
    print(f"gain={csvio.fmt(float(result.gain))} iterations={result.iterations} "
          f"final_span={csvio.fmt(float(result.final_span))}")


def cmd_simulate(args) -> None:
    config = _load(args)
    params, run = config.params, config.run
    name = args.policy or "optimal"
    policy = build_policy(name, params, run)
    evaluation = EVAL_CHOICES[args.eval or "mc"]
    avg, std = evaluate(policy, params, run, evaluation)
    print(f"policy={name} eval={args.eval or 'mc'} avg_aoi={csvio.fmt(float(avg))} "
          f"std_aoi={csvio.fmt(None if std is None else float(std))} "
          f"runs={run.runs if std is not None else ''} slots={run.slots}")
    if args.out:
        episode = simulate_episode(policy, params, run.slots, run.seed, record_trajectory=True,
                                   start=run.start_state(params), warmup=run.warmup)
        write_trajectory_csv(episode, args.out)


def _split(text: str) -> List[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def cmd_sweep(args) -> None:
    config = _load(args)
    if not args.param or args.values is None:
        raise ValueError("sweep requires --param and --values")
    try:
        values = [float(v) for v in _split(args.values)]
    except ValueError:
        raise ValueError(f"cannot parse --values {args.values!r}") from None
    policies = _split(args.policy) if args.policy else list(SWEEP_POLICIES)
    spec = SweepSpec(args.param, tuple(values), tuple(policies),
                     EVAL_CHOICES[args.eval or "oracle"])
    rows = run_sweep(spec, config)
    out = args.out or "sweep.csv"
    csvio.write_rows(out, csvio.SWEEP_HEADER, rows)
    print(f"wrote {len(rows)} rows to {out}")


def cmd_convergence(args) -> None:
    config = _load(args)
    rows = convergence_rows(config)
    out = args.out or "convergence.csv"
    csvio.write_rows(out, csvio.CONVERGENCE_HEADER, rows)
    print(f"wrote {len(rows)} rows to {out}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dualsource-aoi",
        description="Average-age scheduling with a primary and a backup source.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="key=value configuration file")
        p.add_argument("--out", help="output path (directory for solve)")
        p.add_argument("--seed", type=int, help="override the configured seed")
        p.set_defaults(func=func)
        return p

    add("solve", cmd_solve, "solve with RVI; write policy.csv and value.csv")
    p = add("simulate", cmd_simulate, "evaluate one policy")
    p.add_argument("--policy", choices=POLICY_NAMES)
    p.add_argument("--eval", choices=sorted(EVAL_CHOICES))
    p = add("sweep", cmd_sweep, "sweep one parameter")
    p.add_argument("--param", choices=("cost_ratio", "harvest_prob", "reliability_backup"))
    p.add_argument("--values", help="comma-separated, strictly increasing")
    p.add_argument("--policy", help="comma-separated subset of optimal,aggressive")
    p.add_argument("--eval", choices=sorted(EVAL_CHOICES))
    add("convergence", cmd_convergence, "running-average traces for optimal and aggressive")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        args.func(args)
    except Exception as exc:  # noqa: BLE001 - report any failure as one diagnostic line
        if args.verbose:
            raise
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
