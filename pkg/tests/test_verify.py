"""Verification-suite behavior: isolation, fault injection, reproducibility."""

from time import perf_counter

import pytest

import bohmsim.verify as verify_mod
from bohmsim.config import parse_config
from bohmsim.scenarios import run_scenario
from bohmsim.verify import CHECK_NAMES, verify_all

FAST_SUBSET = [
    "uncertainty_product",
    "exponent_identity",
    "com_multiplier_residual",
    "estimate_windows",
    "regime_windows",
    "sde_shared_noise",
]


def test_registry_names_are_stable():
    assert len(CHECK_NAMES) == 25
    assert len(set(CHECK_NAMES)) == 25
    for name in FAST_SUBSET:
        assert name in CHECK_NAMES


def test_subset_runs_and_passes():
    suite = verify_all(1, only=FAST_SUBSET)
    assert suite.passed
    assert [c.name for c in suite.checks] == FAST_SUBSET


def test_reports_are_byte_identical_across_runs():
    a = verify_all(3, only=FAST_SUBSET).report_text()
    b = verify_all(3, only=FAST_SUBSET).report_text()
    assert a == b
    assert a.startswith("verification suite seed=3\n")
    assert f"{len(FAST_SUBSET)}/{len(FAST_SUBSET)} checks passed" in a


def test_corrupted_threshold_fails_only_that_check():
    suite = verify_all(1, overrides={"uncertainty_product": 1e-18}, only=FAST_SUBSET)
    assert not suite.passed
    failed = [c.name for c in suite.checks if not c.passed]
    assert failed == ["uncertainty_product"]
    line = next(c.line() for c in suite.checks if c.name == "uncertainty_product")
    assert "FAIL" in line


def test_unknown_names_rejected():
    with pytest.raises(ValueError):
        verify_all(1, only=["nonsense"])
    with pytest.raises(ValueError):
        verify_all(1, overrides={"nonsense": 1.0})


def test_verify_all_scenario_runs_full_registry(tmp_path):
    """All 25 checks pass at desk scale, far inside the ten-minute budget."""
    t0 = perf_counter()
    result = run_scenario(parse_config("", "verify-all", seed=1), tmp_path / "v")
    elapsed = perf_counter() - t0
    report = (tmp_path / "v" / "report.txt").read_text()
    assert result.passed, report
    assert len(result.checks) == len(CHECK_NAMES)
    assert "report.txt" in result.artifacts
    assert f"{len(CHECK_NAMES)}/{len(CHECK_NAMES)} checks passed" in report
    assert elapsed < 600.0


def test_blown_check_is_reported_not_raised(monkeypatch):
    def boom(seed, thr):
        raise RuntimeError("synthetic failure")

    patched = dict(verify_mod._REGISTRY)
    patched["uncertainty_product"] = (boom, 1e-10)
    monkeypatch.setattr(verify_mod, "_REGISTRY", patched)
    suite = verify_all(1, only=["uncertainty_product", "exponent_identity"])
    assert not suite.passed
    bad = suite.checks[0]
    assert bad.name == "uncertainty_product"
    assert not bad.passed
    assert "RuntimeError: synthetic failure" in bad.detail
    assert suite.checks[1].passed  # the rest of the suite still ran
