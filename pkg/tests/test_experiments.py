import json

import numpy as np
import pytest

from teletact.experiments import (emit_report, exp_blind_grasp,
                                  exp_deform_grasp, exp_stiffness_curves,
                                  exp_active_slide, fit_slope,
                                  paired_sign_test, sign_test_p)
from teletact.simworld import ConfigError


from tests_protocol_helpers import refit_slopes_from_csv as refit_from_csv


def test_sign_test_threshold_values():
    # Frozen from the binomial tail: P(X>=18 | n=25) ~ 0.0216,
    # P(X>=17 | n=25) ~ 0.0539.
    assert sign_test_p(18, 7) == pytest.approx(0.021643, abs=1e-5)
    assert sign_test_p(17, 8) == pytest.approx(0.053876, abs=1e-5)
    assert sign_test_p(18, 7) < 0.05 < sign_test_p(17, 8)


def test_paired_sign_test_counts_ties():
    result = paired_sign_test([1.0, -1.0, 0.0, 2.0])
    assert result == {"wins": 2, "losses": 1, "ties": 1,
                      "p": sign_test_p(2, 1)}


def test_fit_slope_flat_without_contact():
    assert fit_slope([0.1, 0.2, 0.3], [0.0, 0.0, 0.0]) == 0.0


def test_stiffness_curves_ordering_and_independent_refit():
    res = exp_stiffness_curves()
    assert res.verdicts["slopes_strictly_increasing"]
    slopes = refit_from_csv(res.to_csv())
    ordered = [slopes[f"object_k{k}"] for k in (200, 800, 3000)]
    assert ordered[0] < ordered[1] < ordered[2]
    # The fitted slopes track the configured stiffnesses.
    for k, slope in zip((200, 800, 3000), ordered):
        assert slope == pytest.approx(k, rel=0.05)


def test_stiffness_near_zero_control_object_is_flat():
    res = exp_stiffness_curves(stiffnesses=(1e-6, 800.0, 3000.0))
    slopes = res.summary["slopes"]
    assert abs(slopes["object_k0"]) < 1e-3


def test_stiffness_equal_objects_fail_verdict():
    res = exp_stiffness_curves(stiffnesses=(800.0, 800.0, 800.0),
                               names=("bottle_a", "bottle_b", "bottle_c"))
    assert not res.verdicts["slopes_strictly_increasing"]


def test_stiffness_duplicate_objects_config_error():
    with pytest.raises(ConfigError):
        exp_stiffness_curves(stiffnesses=(800.0, 800.0, 3000.0))


def test_blind_grasp_requires_enough_trials():
    with pytest.raises(ConfigError):
        exp_blind_grasp(n_trials=10)


def test_deform_single_condition_runs():
    res = exp_deform_grasp(strategy="aggressive", mode="visual_plus_haptic",
                           n_trials=2)
    assert len(res.trials) == 2
    assert res.summary["aggressive/visual_plus_haptic"]["mean_deformation_mm"] > 0


def test_slide_single_mode_runs():
    res = exp_active_slide(n_trials=1, mode="visual_plus_haptic")
    assert len(res.trials) == 1
    assert res.trials[0]["success"]


def test_emit_report_writes_deterministic_files(tmp_path):
    res1 = exp_stiffness_curves(seed=4)
    res2 = exp_stiffness_curves(seed=4)
    paths1 = emit_report([res1], tmp_path / "a")
    paths2 = emit_report([res2], tmp_path / "b")
    csv1 = open(paths1["stiffness_curves"], "rb").read()
    csv2 = open(paths2["stiffness_curves"], "rb").read()
    assert csv1 == csv2
    summary1 = open(paths1["summary"], "rb").read()
    summary2 = open(paths2["summary"], "rb").read()
    assert summary1 == summary2


def test_summary_json_structure(tmp_path):
    res = exp_stiffness_curves()
    paths = emit_report([res], tmp_path)
    with open(paths["summary"]) as fh:
        summary = json.load(fh)
    entry = summary["experiments"]["stiffness_curves"]
    assert entry["passed"] is True
    assert entry["n_rows"] == len(res.trials)


def test_summary_recomputable_from_trial_rows():
    res = exp_deform_grasp(strategy="conservative", mode="visual_only",
                           n_trials=3)
    rows = [r for r in res.trials
            if r["strategy"] == "conservative" and r["mode"] == "visual_only"]
    mean = float(np.mean([r["deformation_mm"] for r in rows]))
    assert res.summary["conservative/visual_only"]["mean_deformation_mm"] == (
        pytest.approx(mean))


def test_csv_is_rfc4180_crlf():
    res = exp_stiffness_curves()
    text = res.to_csv()
    assert "\r\n" in text
    header = text.split("\r\n", 1)[0]
    assert header == "object,stiffness,finger,t,bend,force"
