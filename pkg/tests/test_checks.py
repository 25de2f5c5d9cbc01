import json

import numpy as np
import pytest

from alphavortex import checks, kernels

IDS = {
    "kernel-sign", "trace-l1-bound", "homogeneous-l2-scaling", "green-derivative-norms",
    "corrector-decay", "smoothed-kernel-bounds", "pairing-kernel-bound",
    "pairing-kernel-convergence", "pairing-kernel-envelope",
}
FAST = ["kernel-sign", "smoothed-kernel-bounds", "pairing-kernel-bound"]


def test_registry_ids():
    assert set(checks.REGISTRY) == IDS


def test_reports_are_sorted_and_serialisable():
    reports = checks.run_all_checks(0, 0.25, only=FAST[::-1])
    assert [r.check_id for r in reports] == sorted(FAST)
    doc = json.loads(checks.reports_json(reports, 0, 0.25))
    assert doc["seed"] == 0 and len(doc["checks"]) == 3
    assert doc["all_passed"] == all(r.passed for r in reports)
    table = checks.reports_table(reports)
    assert all(cid in table for cid in FAST)


def test_deterministic_for_fixed_seed():
    a = checks.reports_json(checks.run_all_checks(7, 0.25, only=FAST), 7, 0.25)
    b = checks.reports_json(checks.run_all_checks(7, 0.25, only=FAST), 7, 0.25)
    assert a == b


def test_stream_independent_of_selection():
    alone = checks.run_all_checks(3, 0.25, only=["pairing-kernel-bound"])[0]
    together = [r for r in checks.run_all_checks(3, 0.25, only=FAST) if r.check_id == "pairing-kernel-bound"][0]
    assert alone.to_json() == together.to_json()


def test_budget_and_unknown_ids():
    with pytest.raises(ValueError):
        checks.run_all_checks(0, 0.0)
    with pytest.raises(KeyError):
        checks.run_all_checks(0, 1.0, only=["no-such-check"])


def test_kernel_sign_detects_wrong_sign(monkeypatch):
    good = checks.run_all_checks(0, 0.25, only=["kernel-sign"])[0]
    assert good.passed and good.measured["min_value"]["1.0"] >= 0.0
    orig = kernels.d2_h_alpha
    monkeypatch.setattr(kernels, "d2_h_alpha", lambda x, a: -orig(x, a))
    bad = checks.run_all_checks(0, 0.25, only=["kernel-sign"])[0]
    assert not bad.passed and bad.worst_case["value"] < 0.0


def test_smoothed_constant_value():
    assert checks.smoothing_constant() == pytest.approx(0.10024, abs=1e-5)


def test_no_growth_rule():
    assert checks._no_growth([1.0, 1.5, 0.5], 1.0) == 1.5
    assert checks._no_growth(np.array([2.0, 3.0]), 2.0) == 1.5
