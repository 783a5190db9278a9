"""Collects the outcome of every test marked ``acceptance`` and prints one
PASS/FAIL line per criterion at the end of the run.
"""

_LABELS: dict[str, str] = {}
_OUTCOMES: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): release acceptance criterion")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("acceptance")
        if mark is not None:
            _LABELS[item.nodeid] = mark.args[0]


def pytest_runtest_logreport(report):
    if report.nodeid not in _LABELS:
        return
    if report.failed:
        _OUTCOMES[report.nodeid] = "FAIL"
    elif report.when == "call" and report.nodeid not in _OUTCOMES:
        _OUTCOMES[report.nodeid] = "PASS" if report.passed else "SKIP"


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, label in _LABELS.items():
        if nodeid in _OUTCOMES:
            terminalreporter.write_line(f"{_OUTCOMES[nodeid]:4}  {label}")
