import itertools

import numpy as np
import pytest

from vanetcfg.netmodel import NetworkGraph
from vanetcfg.objective import ObjectiveParams


def random_graph(n: int, p: float, seed, low: float = 1.0, high: float = 20.0) -> NetworkGraph:
    """Erdos-Renyi graph with symmetric integer-ish rates."""
    rng = np.random.default_rng(seed)
    rates = {}
    for i, j in itertools.combinations(range(n), 2):
        if rng.random() < p:
            rates[(i, j)] = float(rng.uniform(low, high))
    return NetworkGraph.from_edges(n, rates)


@pytest.fixture
def params():
    return ObjectiveParams()


# -- one pass/fail line per acceptance criterion -------------------------------------

_criteria: dict[int, tuple[str, bool]] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1].split("[")[0]
        number = int(name.split("_")[2])
        title = " ".join(name.split("_")[3:])
        _, ok_before = _criteria.get(number, (title, True))
        _criteria[number] = (title, ok_before and report.outcome == "passed")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok = _criteria[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  ({title})")
