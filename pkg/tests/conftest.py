from collections import OrderedDict

import pytest

# criterion id -> list of (check name, passed, detail)
_ACCEPTANCE: "OrderedDict[str, list]" = OrderedDict()


@pytest.fixture
def acceptance(request):
    """Record the outcome of one acceptance check under its criterion id."""
    marker = request.node.get_closest_marker("criterion")
    cid, title = marker.args
    entry = {"detail": ""}
    yield entry
    rep = getattr(request.node, "rep_call", None)
    passed = rep is not None and rep.passed
    _ACCEPTANCE.setdefault(f"{cid}. {title}", []).append((request.node.name, passed, entry["detail"]))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id, title): acceptance criterion a test belongs to")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for name, checks in _ACCEPTANCE.items():
        ok = all(p for _, p, _ in checks)
        details = "; ".join(d for _, _, d in checks if d)
        tr.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f" -- {details}" if details else ""))
