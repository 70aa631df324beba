import time

RESULTS: list[tuple[str, bool, str]] = []
_START = time.perf_counter()
SUITE_BUDGET_S = 600.0


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    elapsed = time.perf_counter() - _START
    tr = terminalreporter
    tr.section("acceptance criteria")
    for label, ok, detail in RESULTS:
        tr.write_line(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
    ok = elapsed <= SUITE_BUDGET_S
    tr.write_line(f"{'PASS' if ok else 'FAIL'}  10b test session runtime: {elapsed:.1f} s (limit {SUITE_BUDGET_S:.0f} s)")
