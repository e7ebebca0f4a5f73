import json

import pytest

from kahlerradial import model_geometry
from kahlerradial.validation import (
    ALL_CHECKS,
    LEVELS,
    QUICK_NOTES,
    CheckResult,
    ValidationReport,
    bessel_j0_first_zero,
    check_mass_consistency,
    check_small_ball,
    run_validation,
)


def test_bessel_oracle():
    # mpmath.besseljzero(0, 1)
    assert bessel_j0_first_zero() == pytest.approx(2.4048255576957728, rel=1e-15)


def test_mass_consistency_detects_tampered_normalization(monkeypatch):
    assert check_mass_consistency(level="quick").passed
    original = model_geometry.normalization_constant
    monkeypatch.setattr(model_geometry, "normalization_constant", lambda spec: 1.001 * original(spec))
    res = check_mass_consistency(level="quick")
    assert not res.passed
    assert res.measured_error == pytest.approx(1e-3, rel=1e-6)
    assert not check_small_ball(level="quick").passed


def test_report_json_round_trip():
    report = run_validation("quick", 7, checks=[check_mass_consistency, check_small_ball])
    text = report.to_json()
    again = ValidationReport.from_json(text)
    assert again.to_json() == text
    data = json.loads(text)
    assert data["status"] == "pass" and data["seed"] == 7
    for c in data["checks"]:
        assert {"name", "target", "measured_error", "tolerance", "passed"} <= set(c)


def test_overall_status_is_conjunction():
    ok = CheckResult("a", "x", 0.0, 1.0, True)
    bad = CheckResult("b", "y", 2.0, 1.0, False)
    assert ValidationReport([ok, ok], 1).passed
    assert not ValidationReport([ok, bad], 1).passed
    text = ValidationReport([ok, bad], 1).to_text()
    assert "[FAIL] b" in text and text.endswith("overall: FAIL")


def test_levels_documented():
    assert set(LEVELS) == {"quick", "full"}
    assert set(LEVELS["quick"]) == set(LEVELS["full"])
    assert len(ALL_CHECKS) == 11
    assert QUICK_NOTES
    with pytest.raises(ValueError):
        run_validation("medium", 7)


@pytest.mark.slow
def test_quick_validation_passes():
    report = run_validation("quick", 7)
    assert report.passed, report.to_text()
    assert sum(c.runtime for c in report.checks) < 120
