import sys
from pathlib import Path

# helper modules (oracles, exprgen) live next to the tests
sys.path.insert(0, str(Path(__file__).parent))

_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion n")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m:
            n, title = m.args
            _criteria.setdefault(n, {"title": title, "outcomes": {}})
            _criteria[n]["outcomes"][item.nodeid] = None


def pytest_runtest_logreport(report):
    for c in _criteria.values():
        if report.nodeid in c["outcomes"] and (report.when == "call" or report.failed or report.skipped):
            prev = c["outcomes"][report.nodeid]
            if prev in (None, "passed"):
                c["outcomes"][report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        c = _criteria[n]
        outs = list(c["outcomes"].values())
        if all(o == "passed" for o in outs):
            verdict = "PASS"
        elif any(o == "failed" for o in outs):
            verdict = "FAIL"
        else:
            verdict = "NOT RUN"
        terminalreporter.write_line(f"criterion {n:2d}: {verdict:7} {c['title']}")
