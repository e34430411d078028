import csv
import json
import math

import pytest

from vanetcfg import bench
from vanetcfg.config import SimConfig
from vanetcfg.partition import Partition

SMALL = dict(node_counts=[15, 25], runs=2, slots=15, area=1000.0, inits=["none", "CABP"])


@pytest.fixture(scope="module")
def experiment(tmp_path_factory):
    out = tmp_path_factory.mktemp("exp")
    cfg = SimConfig(**SMALL)
    stats = bench.run_experiment(cfg, out)
    return cfg, out, stats


def _rows(path):
    with open(path) as fh:
        fh.readline()
        return list(csv.DictReader(fh))


def test_artifacts_and_headers(experiment):
    cfg, out, stats = experiment
    h = cfg.config_hash()
    assert json.loads((out / "config.json").read_text())["config_hash"] == h
    for name in ("per_run.csv", "aggregate.csv", "curve.csv"):
        assert (out / name).read_text().startswith(f"# config_hash={h}")
    traces = sorted((out / "runs").glob("*.trace.csv"))
    assert len(traces) == 2 * 2 * 3 * 2
    for t in traces:
        header = bench.parse_header(t.read_text().splitlines()[0])
        assert header["config_hash"] == h and int(header["base_seed"]) == cfg.seed
    for pj in (out / "runs").glob("*.partition.json"):
        data = json.loads(pj.read_text())
        assert data["config_hash"] == h and "seed" in data
        Partition.from_json_obj(data["partition"], data["n_nodes"])


def test_table_shape(experiment):
    cfg, out, stats = experiment
    assert len(stats) == 2 * 3 * 2  # node counts x algorithms x inits
    table = (out / "table.txt").read_text()
    assert "Node num" in table and "R_mean" in table and "chi_total" in table and "E_total" in table
    assert "with CA-BP initial clustering" in table
    rows = [ln for ln in table.splitlines() if ln.strip() and ln.strip()[0].isdigit()]
    assert len(rows) == 12


def test_aggregate_recomputes_from_per_run(experiment):
    cfg, out, _ = experiment
    per_run = _rows(out / "per_run.csv")
    for agg in _rows(out / "aggregate.csv"):
        mine = [r for r in per_run if (r["n_nodes"], r["init"], r["algorithm"]) ==
                (agg["n_nodes"], agg["init"], agg["algorithm"])]
        chi = math.fsum(float(r["chi_total"]) for r in mine) / len(mine)
        g1 = [float(r["G1"]) for r in mine]
        assert abs(float(agg["chi_total"]) - chi) <= 1e-9 * max(1.0, abs(chi))
        assert float(agg["best"]) == max(g1) and float(agg["worst"]) == min(g1)
        assert abs(float(agg["R_mean"]) - sum(g1) / len(g1)) <= 1e-12
    before = (out / "table.txt").read_text()
    assert bench.table_from_dir(out) == before


def test_curve(experiment):
    cfg, out, _ = experiment
    rows = _rows(out / "curve.csv")
    assert {r["algorithm"] for r in rows} == {"DCA", "GreedyUnilateral"}
    for r in rows:
        if r["slot"] == "0":
            assert float(r["G1_normalized"]) == 1.0
    assert max(int(r["slot"]) for r in rows) == cfg.slots - 1


def test_single_run_best_equals_worst():
    row = {"n_nodes": 5, "init": "none", "algorithm": "DCA", "G1": 0.8, "chi_total": 3.0,
           "E_total": 2.0, "slots": 4}
    (s,) = bench.aggregate([row])
    assert s.best == s.worst == s.R_mean == 0.8
    with pytest.raises(ValueError):
        bench.emit_table([])


def test_rerun_is_byte_identical(tmp_path):
    cfg = SimConfig(node_counts=[20], runs=1, slots=10, area=900.0)
    bench.run_experiment(cfg, tmp_path / "a")
    bench.run_experiment(cfg, tmp_path / "b", workers=2)
    for path in sorted((tmp_path / "a").rglob("*")):
        if path.is_file() and path.name != "timing.csv":
            assert path.read_bytes() == (tmp_path / "b" / path.relative_to(tmp_path / "a")).read_bytes()


def test_replay_from_header(experiment):
    cfg, out, _ = experiment
    for tag in ("DCA_none_N15_r001", "MSTCFA_CABP_N25_r000", "GreedyUnilateral_CABP_N15_r000"):
        same, _ = bench.replay(out / "runs" / f"{tag}.trace.csv")
        assert same


def test_common_random_numbers():
    assert bench.run_seed(0, 30, 1) == bench.run_seed(0, 30, 1)
    assert len({bench.run_seed(0, 30, r) for r in range(20)}) == 20


def test_unknown_algorithm():
    with pytest.raises(ValueError):
        bench.run_single(SimConfig(), 10, "RLOC", "none", 0)
