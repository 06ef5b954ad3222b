"""Acceptance gate: each criterion runs at full size and must also meet its runtime budget.

One summary line per criterion is printed at the end of the session
(see ``pytest_terminal_summary`` in conftest.py).
"""
import time

import pytest

from contagion.protocols import ACCEPTANCE

# wall-clock budgets in seconds
BUDGET = {"AC1": 30, "AC2": 120, "AC3": 120, "AC4": 600, "AC5": 300, "AC6": 120, "AC7": 60, "AC8": 120}

RESULTS: dict = {}


@pytest.mark.slow
@pytest.mark.parametrize("key", sorted(ACCEPTANCE))
def test_acceptance(key):
    name, fn = ACCEPTANCE[key]
    t0 = time.perf_counter()
    checks = fn()
    elapsed = time.perf_counter() - t0
    failed = [c for c in checks if not c.passed]
    in_time = elapsed < BUDGET[key]
    ok = not failed and in_time
    worst = failed[0].line() if failed else f"{len(checks)} checks"
    RESULTS[key] = f"{'PASS' if ok else 'FAIL'} {key} {name}: {worst}; {elapsed:.1f} s (budget {BUDGET[key]} s)"
    report = "\n".join(c.line() for c in checks)
    assert in_time, f"{key} took {elapsed:.1f} s, budget {BUDGET[key]} s\n{report}"
    assert not failed, f"{key} failed:\n{report}"
