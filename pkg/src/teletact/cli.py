"""Command-line entry points.

    teletact robot --config robot.json
    teletact operator --config op.json --policy policy.json
    teletact bridge --config bridge.json
    teletact replay --log session.log.operator [more logs]
    teletact experiment <stiffness|blind|slide|deform|all> [--trials N]
                        [--seed S] [--out DIR]

Exit codes: 0 ok, 2 configuration error, 3 network error.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import experiments, logs
from .bridge import run_bridge
from .policies import OperatorPolicy
from .sessions import (EXIT_CONFIG, EXIT_NETWORK, EXIT_OK, BindFailure,
                       ConnectFailure, config_from_file, policy_from_dict,
                       replay_check, run_operator, run_robot)
from .simworld import ConfigError


def _load_config(path):
    try:
        return config_from_file(path)
    except (OSError, ValueError, KeyError, TypeError) as err:
        print(f"config error: {err}", file=sys.stderr)
        sys.exit(EXIT_CONFIG)


def _load_policy(path) -> OperatorPolicy:
    if path is None:
        return OperatorPolicy()
    try:
        with open(path) as fh:
            return policy_from_dict(json.load(fh))
    except (OSError, ValueError, TypeError) as err:
        print(f"policy error: {err}", file=sys.stderr)
        sys.exit(EXIT_CONFIG)


def _print_report(report) -> None:
    print(json.dumps(report.summary(), indent=2, sort_keys=True))


def cmd_robot(args) -> int:
    cfg = _load_config(args.config)
    try:
        report = run_robot(cfg)
    except BindFailure as err:
        print(f"network error: {err}", file=sys.stderr)
        return EXIT_NETWORK
    _print_report(report)
    return EXIT_OK


def cmd_operator(args) -> int:
    cfg = _load_config(args.config)
    policy = _load_policy(args.policy)
    try:
        report = run_operator(cfg, policy)
    except ConnectFailure as err:
        print(f"network error: {err}", file=sys.stderr)
        return EXIT_NETWORK
    _print_report(report)
    return EXIT_OK


def cmd_bridge(args) -> int:
    cfg = _load_config(args.config)
    try:
        report = run_bridge(
            cfg, ready=lambda port: print(f"console endpoint: "
                                          f"ws://{cfg.bridge_host}:{port}",
                                          flush=True))
    except (BindFailure, ConnectFailure) as err:
        print(f"network error: {err}", file=sys.stderr)
        return EXIT_NETWORK
    _print_report(report)
    return EXIT_OK


def cmd_replay(args) -> int:
    records = []
    try:
        for path in args.log:
            records.extend(logs.load_log(path))
    except (OSError, ValueError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    counts = {}
    for rec in records:
        key = f"{rec.direction_name}/{type(rec.message).__name__}"
        counts[key] = counts.get(key, 0) + 1
    fidelity = replay_check(records)
    print(json.dumps({"records": len(records), "counts": counts,
                      "retargeting_fidelity": fidelity},
                     indent=2, sort_keys=True))
    return EXIT_OK


def cmd_experiment(args) -> int:
    names = list(experiments.EXPERIMENTS) if args.name == "all" else [args.name]
    results = []
    try:
        for name in names:
            fn = experiments.EXPERIMENTS[name]
            kwargs = {"seed": args.seed}
            if args.trials is not None and name != "stiffness":
                kwargs["n_trials"] = args.trials
            results.append(fn(**kwargs))
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    paths = experiments.emit_report(results, args.out)
    for res in results:
        for check, ok in res.verdicts.items():
            print(f"{res.name}: {check}: {'PASS' if ok else 'FAIL'}")
    print(f"report written to {paths['summary']}")
    return EXIT_OK if all(r.passed for r in results) else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="teletact", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("robot", help="serve the simulated robot side")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=cmd_robot)

    p = sub.add_parser("operator", help="drive a robot with a policy")
    p.add_argument("--config", required=True)
    p.add_argument("--policy", default=None)
    p.set_defaults(fn=cmd_operator)

    p = sub.add_parser("bridge", help="operator side plus console endpoint")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=cmd_bridge)

    p = sub.add_parser("replay", help="inspect session logs offline")
    p.add_argument("--log", required=True, nargs="+")
    p.set_defaults(fn=cmd_replay)

    p = sub.add_parser("experiment", help="run an experiment family")
    p.add_argument("name", choices=[*experiments.EXPERIMENTS, "all"])
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="results")
    p.set_defaults(fn=cmd_experiment)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
