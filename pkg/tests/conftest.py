"""Per-criterion PASS/FAIL reporting for tests marked ``criterion(k)``."""
from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

CRITERIA = {
    1: "distribution samplers vs quadrature oracles",
    2: "Gibbs joint-distribution and conjugate checks",
    3: "marginal density slopes and envelopes",
    4: "mass near zero regression slopes",
    5: "desk-scale sparse-regression simulation",
    6: "R-squared of the second simulated design",
    7: "prediction workflow with permuted control",
    8: "determinism across reruns and worker counts",
}

_outcomes: dict[int, list[tuple[str, str]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k): test belongs to acceptance criterion k")


def pytest_collection_modifyitems(config, items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            item.user_properties.append(("criterion", mark.args[0]))


def pytest_runtest_logreport(report):
    crit = dict(report.user_properties).get("criterion")
    if crit is None:
        return
    if report.when == "call" or report.outcome != "passed":
        _outcomes.setdefault(crit, []).append((report.nodeid, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k, title in CRITERIA.items():
        runs = _outcomes.get(k)
        if not runs:
            tr.write_line(f"criterion {k}: NOT RUN  ({title})")
            continue
        failed = [nid.split("::")[-1] for nid, outcome in runs if outcome != "passed"]
        status = "FAIL" if failed else "PASS"
        detail = f"; failing: {', '.join(failed)}" if failed else ""
        tr.write_line(f"criterion {k}: {status}  ({title}, {len(runs)} checks{detail})")
