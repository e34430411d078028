"""Command-line interface: ``run``, ``table``, ``curve``, ``verify`` and ``replay``."""

from __future__ import annotations

import argparse
import logging
import sys
import typing
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import bench
from .config import ConfigError, SimConfig
from .engine import CoalitionGame, EngineState, LearningParams, is_nash_stable, run
from .objective import Objective
from .oracle import global_optimum, verify_nash
from .partition import Partition

log = logging.getLogger("vanetcfg")


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    """One ``--field`` flag per SimConfig field, defaulting to None (= keep file/default)."""
    group = parser.add_argument_group("config overrides")
    hints = typing.get_type_hints(SimConfig)
    for f in fields(SimConfig):
        flag = "--" + f.name.replace("_", "-")
        tp = hints[f.name]
        if tp is bool:
            group.add_argument(flag, dest=f.name, action=argparse.BooleanOptionalAction, default=None)
        elif typing.get_origin(tp) is list:
            (inner,) = typing.get_args(tp)
            group.add_argument(flag, dest=f.name, type=inner, nargs="+", default=None)
        else:
            group.add_argument(flag, dest=f.name, type=tp, default=None)


def config_from_args(args: argparse.Namespace) -> SimConfig:
    cfg = SimConfig.load(args.config) if args.config else SimConfig()
    data = cfg.to_dict()
    for f in fields(SimConfig):
        val = getattr(args, f.name, None)
        if val is not None:
            data[f.name] = val
    return SimConfig.from_dict(data).validate()


def cmd_run(args) -> int:
    cfg = config_from_args(args)
    stats = bench.run_experiment(cfg, args.out, args.workers)
    print(bench.emit_table(stats))
    print(f"results written to {args.out} (config {cfg.config_hash()})")
    return 0


def cmd_table(args) -> int:
    print(bench.table_from_dir(args.out))
    return 0


def cmd_curve(args) -> int:
    out = Path(args.out)
    header, _ = bench.read_csv(out / "per_run.csv")
    path = bench.write_curve(out, header["config_hash"])
    print(f"wrote {path}")
    return 0


def cmd_verify(args) -> int:
    """Greedy DCA on small frozen instances, checked against the exhaustive oracle."""
    failures = 0
    ratios = []
    for k in range(args.instances):
        graph, params = bench.static_instance(args.nodes, args.area, [args.seed, k])
        state = EngineState.start(Partition.singletons(graph.n), [args.seed, k, 1])
        run(state, graph, params, LearningParams(greedy=True), args.max_rounds)
        obj = Objective(graph, params)
        engine_ok, _ = is_nash_stable(state.partition, CoalitionGame(obj))
        oracle_ok, witness = verify_nash(state.partition, obj, max_n=None)
        line = f"instance {k}: engine_stable={engine_ok} oracle_stable={oracle_ok}"
        if engine_ok != oracle_ok or not oracle_ok:
            failures += 1
            line += f" witness={witness}"
        if graph.n <= 10:
            opt = global_optimum(obj).score
            ratio = obj.global_objective(state.partition) / opt
            ratios.append(ratio)
            line += f" G1/opt={ratio:.4f}"
        print(line)
    if ratios:
        print(f"mean G1/opt = {np.mean(ratios):.4f}")
    print("OK" if failures == 0 else f"{failures} instance(s) failed")
    return 0 if failures == 0 else 1


def cmd_replay(args) -> int:
    same, _ = bench.replay(args.trace, args.config_json)
    print("identical" if same else "MISMATCH")
    return 0 if same else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vanetcfg", description="Coalition-game clustering for vehicular networks")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a seeded multi-run experiment")
    p.add_argument("--config", help="YAML or JSON file with SimConfig keys")
    p.add_argument("--out", default="results")
    p.add_argument("--workers", type=int, default=1)
    _add_config_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("table", help="rebuild aggregate.csv and table.txt from per_run.csv")
    p.add_argument("--out", default="results")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("curve", help="rebuild curve.csv from the run traces")
    p.add_argument("--out", default="results")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("verify", help="check greedy DCA fixed points against the brute-force oracle")
    p.add_argument("--instances", type=int, default=10)
    p.add_argument("--nodes", type=int, default=8)
    p.add_argument("--area", type=float, default=600.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-rounds", type=int, default=200)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("replay", help="re-run the job behind a trace file and compare bytes")
    p.add_argument("trace")
    p.add_argument("--config-json", default=None)
    p.set_defaults(func=cmd_replay)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
