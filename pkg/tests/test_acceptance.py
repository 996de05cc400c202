"""Acceptance gate: every criterion at the full budget.

Each test prints one machine-greppable line with the measured value,
the tolerance, and the binding sub-check, then asserts the criterion
passed. These are the same code paths `isofield verify --budget full`
reports on.
"""

import pytest

from isofield import acceptance

_IDS = [cid for cid, _, _ in acceptance._CRITERIA]


@pytest.mark.parametrize("cid", _IDS)
def test_criterion(cid):
    result = acceptance.run_criterion(cid, budget="full")
    status = "PASS" if result.passed else "FAIL"
    binding = result.detail.get("binding", "-")
    print(
        "[%s] criterion %d: %s (measured=%.6g, tolerance=%.6g, binding=%s, %.2fs)"
        % (status, result.cid, result.name, result.measured, result.tolerance,
           binding, result.seconds)
    )
    assert result.passed, (
        "criterion %d (%s) failed: measured %.6g against tolerance %.6g; detail %r"
        % (result.cid, result.name, result.measured, result.tolerance, result.detail)
    )


def test_full_report_assembles():
    report = acceptance.run_all("fast")
    assert report["all_passed"] is True
    assert [c["cid"] for c in report["criteria"]] == _IDS
