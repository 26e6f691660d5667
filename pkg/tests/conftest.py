import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_criteria: dict[int, dict] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    entry = _criteria.setdefault(marker.args[0], {"ok": True, "tests": 0, "notes": []})
    if report.when == "call":
        entry["tests"] += 1
        entry["notes"] += [v for k, v in report.user_properties if k == "detail"]
    if report.failed or (report.when == "setup" and report.skipped):
        entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        entry = _criteria[n]
        status = "PASS" if entry["ok"] and entry["tests"] else "FAIL"
        notes = "; ".join(entry["notes"])
        terminalreporter.write_line(f"CRITERION {n}: {status}" + (f"  ({notes})" if notes else ""))
