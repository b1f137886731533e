"""Acceptance gate: every criterion at its stated tolerance and time budget.

Run with `pytest tests/test_acceptance.py -s` to see one pass/fail line per
criterion.  Each test executes one registered suite (the same ones exposed
by the `finsler suite` command), asserts every contained check, and holds
the wall-time budget.
"""

import pytest

from finsler.suites import run_suite_timed

SEED = 20240809

CRITERIA = [
    # (number, suite name, wall budget in seconds)
    (1, "hessian-consistency", 10.0),
    (2, "randers-criterion", 30.0),
    (3, "constant-wind", 60.0),
    (4, "lift-nullity", 30.0),
    (5, "product-future", 60.0),
    (6, "cauchy-horizon", 60.0),
    (7, "reachability", 120.0),
    (8, "homogeneity", 10.0),
    (9, "projective-change", 60.0),
    (10, "conjugate-points", 60.0),
    (11, "separation", 120.0),
    (12, "determinism", 120.0),
]


def _report_line(number, name, report, elapsed, budget):
    status = "PASS" if report["passed"] and elapsed < budget else "FAIL"
    print(f"[{status}] criterion {number:2d} {name}: "
          f"{report['failures']} failed check(s), {elapsed:.2f}s (< {budget:.0f}s)")


@pytest.mark.parametrize("number,name,budget", CRITERIA,
                         ids=[f"criterion-{n:02d}-{s}" for n, s, _ in CRITERIA])
def test_acceptance_criterion(number, name, budget):
    report, elapsed = run_suite_timed(name, seed=SEED)
    _report_line(number, name, report, elapsed, budget)
    failed = [r for r in report["results"] if not r["passed"]]
    assert not failed, f"criterion {number} ({name}) failed checks: {failed}"
    assert elapsed < budget, f"criterion {number} ({name}) took {elapsed:.1f}s " \
                             f"(budget {budget:.0f}s)"
