"""Suite-level timing: acceptance criterion 13 budgets the whole run."""

from __future__ import annotations

import time

SUITE_BUDGET_SECONDS = 60.0

_started = time.perf_counter()


def pytest_sessionfinish(session, exitstatus):
    elapsed = time.perf_counter() - _started
    ok = elapsed < SUITE_BUDGET_SECONDS
    print(
        f"\n[acceptance] criterion 13 whole-suite runtime: {elapsed:.2f}s "
        f"(budget {SUITE_BUDGET_SECONDS:.0f}s, offline) -> {'PASS' if ok else 'FAIL'}"
    )
    if not ok and session.exitstatus == 0:
        session.exitstatus = 1
