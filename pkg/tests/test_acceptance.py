"""Acceptance criteria at their stated tolerances, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL]`` line; the lines are also
repeated in the terminal summary by ``conftest.py``.
"""
import pytest

from qlinv.suites import CRITERIA, run_criterion

ACCEPTANCE_LINES: dict = {}


@pytest.mark.acceptance
@pytest.mark.parametrize("cid", sorted(CRITERIA))
def test_criterion(cid):
    res = run_criterion(cid, {}, seed=0)
    metrics = ", ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in sorted(res.metrics.items()))
    line = f"{res.line()}  ({metrics})"
    ACCEPTANCE_LINES[cid] = line
    print(line)
    assert res.passed, line
