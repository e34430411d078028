"""Seeded multi-run experiments, result files and summary tables.

Layout of an output directory::

    config.json              full config + its hash
    runs/<tag>.trace.csv     per-slot trace of one run (header carries provenance)
    runs/<tag>.partition.json
    per_run.csv              one row per run
    aggregate.csv            mean/best/worst per (N, init, algorithm)
    table.txt                the same, formatted
    curve.csv                mean G1 per slot for the distributed algorithms
    timing.csv               wall-clock seconds (the only non-reproducible file)
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from dataclasses import dataclass, field, replace
from multiprocessing import Pool
from pathlib import Path

import numpy as np

from .baselines import ca_bp_init, greedy_unilateral, mst_cfa
from .config import SimConfig
from .engine import EngineState, LearningParams, SlotRecord, run
from .netmodel import ChannelParams, MobileNetwork, build_graph, generate_scenario
from .objective import Objective, ObjectiveParams
from .partition import Partition

log = logging.getLogger(__name__)

TRACE_FIELDS = ("slot", "G1", "chi_total", "E_total", "M", "ops_applied", "epsilon")
PER_RUN_FIELDS = ("n_nodes", "init", "algorithm", "run_index", "seed", "G1", "chi_total",
                  "E_total", "M", "slots", "converged")
AGG_FIELDS = ("n_nodes", "init", "algorithm", "runs", "R_mean", "best", "worst",
              "chi_total", "E_total", "slots_mean")
DISTRIBUTED = ("DCA", "GreedyUnilateral")


@dataclass
class RunResult:
    n_nodes: int
    algorithm: str
    init: str
    run_index: int
    seed: int
    G1: float
    chi_total: float
    e_total: float
    m: int
    slots: int
    converged: bool
    partition: Partition
    trace: list[SlotRecord] = field(default_factory=list)
    wall: float = 0.0

    @property
    def tag(self) -> str:
        return f"{self.algorithm}_{self.init}_N{self.n_nodes}_r{self.run_index:03d}"


def run_seed(base_seed: int, n_nodes: int, run_index: int) -> int:
    """Per-run seed shared by every algorithm (common random numbers)."""
    ss = np.random.SeedSequence([base_seed, n_nodes, run_index])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _fmt(x: float) -> str:
    return repr(float(x))


def run_single(cfg: SimConfig, n_nodes: int, algorithm: str, init: str, run_index: int) -> RunResult:
    sub = replace(cfg, n_nodes=n_nodes).validate()
    seed = run_seed(cfg.seed, n_nodes, run_index)
    scen_ss, fade_ss, engine_ss = np.random.SeedSequence(seed).spawn(3)
    nodes = generate_scenario(sub, scen_ss)
    ch = ChannelParams.from_config(sub)
    fade_rng = np.random.default_rng(fade_ss) if ch.fading else None
    params = ObjectiveParams.from_config(sub)
    learn = LearningParams(sub.epsilon, sub.epsilon_decay, sub.epsilon_floor, sub.greedy)

    network = MobileNetwork(nodes, ch, sub.area, sub.dt, fade_rng) if sub.mobility \
        else build_graph(nodes, ch, fade_rng)
    graph0 = network.graph if sub.mobility else network
    start = time.perf_counter()

    if algorithm in DISTRIBUTED:
        init_part = ca_bp_init(graph0, sub.n_max) if init == "CABP" else Partition.singletons(n_nodes)
        state = EngineState.start(init_part, engine_ss)
        if algorithm == "DCA":
            run(state, network, params, learn, sub.slots)
        else:
            greedy_unilateral(state, network, params, sub.slots)
        final_graph = network.graph if sub.mobility else network
        partition, trace = state.partition, state.trace
        slots, converged = len(trace), state.converged
    elif algorithm == "MSTCFA":
        # centralised: clusters the network as it stands in the last slot
        if sub.mobility:
            for _ in range(sub.slots - 1):
                network.step()
        final_graph = network.graph if sub.mobility else network
        init_part = ca_bp_init(final_graph, sub.n_max) if init == "CABP" else None
        res = mst_cfa(final_graph, params, init_part)
        partition = res.partition
        trace = [SlotRecord(k, pot, math.nan, math.nan, 0, int(k > 0), 0, 0.0)
                 for k, pot in enumerate(res.potentials)]
        slots, converged = res.iterations, True
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")

    b = Objective(final_graph, params).breakdown(partition)
    if algorithm == "MSTCFA":
        trace[-1] = SlotRecord(trace[-1].slot, b.G1, b.chi_total, b.e_total, len(partition),
                               trace[-1].ops_applied, 0, 0.0)
    return RunResult(n_nodes, algorithm, init, run_index, seed, b.G1, b.chi_total, b.e_total,
                     len(partition), slots, converged, partition, trace,
                     time.perf_counter() - start)


def _header(cfg: SimConfig, res: RunResult) -> str:
    return (f"# config_hash={cfg.config_hash()} base_seed={cfg.seed} seed={res.seed} "
            f"algorithm={res.algorithm} init={res.init} n_nodes={res.n_nodes} "
            f"run_index={res.run_index}\n")


def trace_csv(cfg: SimConfig, res: RunResult) -> str:
    buf = io.StringIO()
    buf.write(_header(cfg, res))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_FIELDS)
    for r in res.trace:
        w.writerow([r.slot, _fmt(r.G1), _fmt(r.chi_total), _fmt(r.E_total), r.M, r.ops_applied,
                    _fmt(r.epsilon)])
    return buf.getvalue()


def partition_json(cfg: SimConfig, res: RunResult) -> str:
    return json.dumps({"config_hash": cfg.config_hash(), "seed": res.seed, "algorithm": res.algorithm,
                       "init": res.init, "n_nodes": res.n_nodes, "run_index": res.run_index,
                       "baseline_note": "GreedyUnilateral: joins only, no head election"
                       if res.algorithm == "GreedyUnilateral" else None,
                       "partition": res.partition.to_json_obj()}, indent=1, sort_keys=True) + "\n"


def parse_header(line: str) -> dict:
    if not line.startswith("#"):
        raise ValueError("missing provenance header")
    return dict(tok.split("=", 1) for tok in line[1:].split())


@dataclass
class AggregateRow:
    n_nodes: int
    init: str
    algorithm: str
    runs: int
    R_mean: float
    best: float
    worst: float
    chi_total: float
    E_total: float
    slots_mean: float


def aggregate(rows: list[dict]) -> list[AggregateRow]:
    """Mean/best/worst per (N, init, algorithm) from per-run records."""
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        groups.setdefault((int(r["n_nodes"]), r["init"], r["algorithm"]), []).append(r)
    out = []
    for (n, init, alg), rs in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1], _alg_order(kv[0][2]))):
        g = [float(r["G1"]) for r in rs]
        out.append(AggregateRow(n, init, alg, len(rs), math.fsum(g) / len(g), max(g), min(g),
                                math.fsum(float(r["chi_total"]) for r in rs) / len(rs),
                                math.fsum(float(r["E_total"]) for r in rs) / len(rs),
                                math.fsum(float(r["slots"]) for r in rs) / len(rs)))
    return out


def _alg_order(alg: str) -> int:
    order = ("DCA", "GreedyUnilateral", "MSTCFA")
    return order.index(alg) if alg in order else len(order)


def emit_table(stats: list[AggregateRow]) -> str:
    """Plain-text results table, one section per initialisation mode."""
    if not stats:
        raise ValueError("no statistics to tabulate")
    titles = {"none": "without initial clustering", "CABP": "with CA-BP initial clustering"}
    lines = []
    for init in sorted({s.init for s in stats}, key=lambda i: i != "none"):
        lines.append(f"Algorithm comparison {titles.get(init, init)}")
        lines.append(f"{'Node num':>8}  {'Algorithm':<16} {'R_mean':>8} {'Best':>8} {'Worst':>8} "
                     f"{'chi_total[Gb/s]':>16} {'E_total':>10}")
        for s in stats:
            if s.init != init:
                continue
            lines.append(f"{s.n_nodes:>8}  {s.algorithm:<16} {s.R_mean:>8.4f} {s.best:>8.4f} "
                         f"{s.worst:>8.4f} {s.chi_total / 1e9:>16.2f} {s.E_total:>10.2f}")
        lines.append("")
    return "\n".join(lines)


def write_aggregate(stats: list[AggregateRow], path: Path, cfg_hash: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_hash={cfg_hash}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGG_FIELDS)
        for s in stats:
            w.writerow([s.n_nodes, s.init, s.algorithm, s.runs, _fmt(s.R_mean), _fmt(s.best),
                        _fmt(s.worst), _fmt(s.chi_total), _fmt(s.E_total), _fmt(s.slots_mean)])


def read_csv(path: Path) -> tuple[dict, list[dict]]:
    with open(path) as fh:
        first = fh.readline()
        header = parse_header(first)
        return header, list(csv.DictReader(fh))


def convergence_curve(traces: dict[tuple, list[list[float]]]) -> list[dict]:
    """Mean G1 per slot; runs that stopped early are held at their last value."""
    rows = []
    for (n, init, alg), runs in sorted(traces.items()):
        length = max(len(t) for t in runs)
        padded = np.array([t + [t[-1]] * (length - len(t)) for t in runs])
        mean = padded.mean(axis=0)
        ref = mean[0] if mean[0] != 0 else 1.0
        for slot, val in enumerate(mean):
            rows.append({"n_nodes": n, "init": init, "algorithm": alg, "slot": slot,
                         "G1_mean": _fmt(val), "G1_normalized": _fmt(val / ref)})
    return rows


def write_curve(out: Path, cfg_hash: str) -> Path:
    traces: dict[tuple, list[list[float]]] = {}
    for path in sorted((out / "runs").glob("*.trace.csv")):
        header, rows = read_csv(path)
        if header["algorithm"] not in DISTRIBUTED:
            continue
        key = (int(header["n_nodes"]), header["init"], header["algorithm"])
        traces.setdefault(key, []).append([float(r["G1"]) for r in rows])
    target = out / "curve.csv"
    with open(target, "w", newline="") as fh:
        fh.write(f"# config_hash={cfg_hash}\n")
        w = csv.DictWriter(fh, ["n_nodes", "init", "algorithm", "slot", "G1_mean", "G1_normalized"],
                           lineterminator="\n")
        w.writeheader()
        w.writerows(convergence_curve(traces))
    return target


def _job(args):
    cfg, n, alg, init, r = args
    return run_single(cfg, n, alg, init, r)


def run_experiment(cfg: SimConfig, out: str | Path, workers: int = 1) -> list[AggregateRow]:
    """Execute every (N, init, algorithm, run) combination and write all artefacts."""
    cfg.validate()
    out = Path(out)
    (out / "runs").mkdir(parents=True, exist_ok=True)
    cfg_hash = cfg.config_hash()
    (out / "config.json").write_text(json.dumps({"config_hash": cfg_hash, "config": cfg.to_dict()},
                                                indent=2, sort_keys=True) + "\n")
    jobs = [(cfg, n, alg, init, r) for n in cfg.node_counts for init in cfg.inits
            for alg in cfg.algorithms for r in range(cfg.runs)]
    log.info("running %d jobs (config %s)", len(jobs), cfg_hash)
    if workers > 1:
        with Pool(workers) as pool:
            results = pool.map(_job, jobs)
    else:
        results = [_job(j) for j in jobs]

    per_run = []
    for res in results:
        (out / "runs" / f"{res.tag}.trace.csv").write_text(trace_csv(cfg, res))
        (out / "runs" / f"{res.tag}.partition.json").write_text(partition_json(cfg, res))
        per_run.append({"n_nodes": res.n_nodes, "init": res.init, "algorithm": res.algorithm,
                        "run_index": res.run_index, "seed": res.seed, "G1": _fmt(res.G1),
                        "chi_total": _fmt(res.chi_total), "E_total": _fmt(res.e_total), "M": res.m,
                        "slots": res.slots, "converged": int(res.converged)})
    with open(out / "per_run.csv", "w", newline="") as fh:
        fh.write(f"# config_hash={cfg_hash} base_seed={cfg.seed}\n")
        w = csv.DictWriter(fh, PER_RUN_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(per_run)
    with open(out / "timing.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tag", "seconds"])
        for res in results:
            w.writerow([res.tag, f"{res.wall:.4f}"])

    stats = aggregate(per_run)
    write_aggregate(stats, out / "aggregate.csv", cfg_hash)
    (out / "table.txt").write_text(emit_table(stats))
    write_curve(out, cfg_hash)
    return stats


def table_from_dir(out: str | Path) -> str:
    """Recompute the aggregate table from ``per_run.csv``."""
    out = Path(out)
    header, rows = read_csv(out / "per_run.csv")
    stats = aggregate(rows)
    write_aggregate(stats, out / "aggregate.csv", header["config_hash"])
    text = emit_table(stats)
    (out / "table.txt").write_text(text)
    return text


def replay(trace_path: str | Path, config_path: str | Path | None = None) -> tuple[bool, str]:
    """Re-run the job named in a trace header and compare the regenerated bytes."""
    trace_path = Path(trace_path)
    config_path = Path(config_path) if config_path else trace_path.parent.parent / "config.json"
    stored = json.loads(config_path.read_text())
    cfg = SimConfig.from_dict(stored["config"])
    original = trace_path.read_text()
    header = parse_header(original.splitlines()[0])
    if header["config_hash"] != cfg.config_hash():
        raise ValueError(f"config hash mismatch: trace {header['config_hash']} vs {cfg.config_hash()}")
    res = run_single(cfg, int(header["n_nodes"]), header["algorithm"], header["init"],
                     int(header["run_index"]))
    regenerated = trace_csv(cfg, res)
    return regenerated == original, regenerated


def static_instance(n_nodes: int, area: float, seed, base: SimConfig | None = None):
    """Frozen graph for small-scale checks: reference parameters except N and L."""
    cfg = replace(base or SimConfig(), n_nodes=n_nodes, area=area).validate()
    nodes = generate_scenario(cfg, seed)
    return build_graph(nodes, ChannelParams.from_config(cfg)), ObjectiveParams.from_config(cfg)


def final_graph(cfg: SimConfig, n_nodes: int, run_index: int):
    """Network snapshot of the last slot of a run, rebuilt from its seed."""
    sub = replace(cfg, n_nodes=n_nodes).validate()
    scen_ss, fade_ss, _ = np.random.SeedSequence(run_seed(cfg.seed, n_nodes, run_index)).spawn(3)
    ch = ChannelParams.from_config(sub)
    fade_rng = np.random.default_rng(fade_ss) if ch.fading else None
    nodes = generate_scenario(sub, scen_ss)
    if not sub.mobility:
        return build_graph(nodes, ch, fade_rng)
    network = MobileNetwork(nodes, ch, sub.area, sub.dt, fade_rng)
    for _ in range(sub.slots - 1):
        network.step()
    return network.graph
