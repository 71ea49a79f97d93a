import pytest

from advtraffic.lane import run_lane
from advtraffic.scenarios import COLLISION_GRID, grid_lane_config

_criteria = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    label = _labels.get(report.nodeid)
    if label is None:
        return
    num, title = label
    ok = report.outcome == "passed"
    prev = _criteria.get(num, (title, True))
    _criteria[num] = (title, prev[1] and ok)


_labels = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            _labels[item.nodeid] = mark.args


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        title, ok = _criteria[num]
        terminalreporter.write_line(f"criterion {num:2d} {'PASS' if ok else 'FAIL'}: {title}")


@pytest.fixture(scope="session")
def grid_results():
    """Single-lane results for every grid cell at the default step."""
    return [(cell, run_lane(grid_lane_config(cell))) for cell in COLLISION_GRID]
