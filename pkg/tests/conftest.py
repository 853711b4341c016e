"""Session-wide checks shared by the test modules.

Every ``run_o2nc`` call made anywhere in the suite is routed through a
wrapper that checks the trace geometry, and the acceptance tests report one
pass/fail line per criterion at the end of the session.
"""
import functools
import sys

import pytest

import ddzo.o2nc

from .invariants import trace_violations

TRACE_LOG = {"runs": 0, "violations": []}
ACCEPTANCE = {}


def _checked(run):
    @functools.wraps(run)
    def wrapper(cfg, *args, **kwargs):
        tr = run(cfg, *args, **kwargs)
        bad = trace_violations(tr, cfg)
        TRACE_LOG["runs"] += 1
        TRACE_LOG["violations"].extend(bad)
        assert not bad, bad
        return tr

    wrapper.checked = True
    return wrapper


def _install():
    original = ddzo.o2nc.run_o2nc
    if getattr(original, "checked", False):
        return
    wrapped = _checked(original)
    for name, mod in list(sys.modules.items()):
        if name.startswith("ddzo") and getattr(mod, "run_o2nc", None) is original:
            mod.run_o2nc = wrapped


_install()


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    n, title = marker.args
    ok, detail = call.excinfo is None, getattr(item, "detail", "")
    if n in ACCEPTANCE:
        # parametrized criteria pass only if every case passes
        _, ok_prev, detail_prev = ACCEPTANCE[n]
        ok, detail = ok and ok_prev, "; ".join(d for d in (detail_prev, detail) if d)
    ACCEPTANCE[n] = (title, ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        if n == 5:
            ok = ok and not TRACE_LOG["violations"]
            detail = f"{detail}; {TRACE_LOG['runs']} O2NC runs checked session-wide, " \
                     f"{len(TRACE_LOG['violations'])} violations"
        tr.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}: {title}" + (f" ({detail})" if detail else ""))


@pytest.fixture
def detail(request):
    """Attach a one-line result summary to the acceptance report."""
    def note(text):
        request.node.detail = text
    return note
