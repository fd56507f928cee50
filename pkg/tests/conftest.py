import re
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE = re.compile(r"test_criterion_(\d+)_")
_results: dict = {}


def pytest_runtest_logreport(report):
    m = _ACCEPTANCE.search(report.nodeid)
    if not m:
        return
    n = int(m.group(1))
    if report.when == "call" or report.outcome != "passed":
        detail = dict(report.user_properties).get("detail", "")
        if report.failed:
            msg = str(report.longrepr).strip().splitlines()
            last = next((ln for ln in reversed(msg) if ln.startswith("E ")), msg[-1] if msg else "")
            detail = detail or last[1:].strip()
        _results[n] = ("PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        status, detail = _results[n]
        terminalreporter.write_line(f"ACCEPTANCE {n}: {status} - {detail}")
