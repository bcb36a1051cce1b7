"""Campaign runner: accounting, determinism, tolerances, and reporting."""

import json

import numpy as np
import pytest

from gml.campaigns import (
    CAMPAIGNS,
    CampaignConfig,
    VerificationReport,
    describe_model,
    resolve_tolerances,
    run_campaign,
    run_campaign_model,
)
from gml.errors import ReportIoError, UnknownCampaign


TOLS = resolve_tolerances({})


def test_accounting_single_trial(square_model):
    for campaign in CAMPAIGNS:
        rep = run_campaign_model(square_model, campaign, trials=1, seed=0,
                                 tolerances=TOLS)
        assert rep.trials == 1
        assert rep.passes + len(rep.failures) == 1


def test_report_invariant_enforced():
    with pytest.raises(ValueError):
        VerificationReport(campaign="theorem1", model_name="m", trials=3,
                           passes=1, failures=[])


def test_theorem2_thousand_trials_all_pass(square_model):
    rep = run_campaign_model(square_model, "theorem2", trials=1000, seed=42,
                             tolerances=TOLS)
    assert rep.passes == 1000
    assert rep.failures == []
    assert rep.thresholds_used["chain_threshold"] == 1.0


def test_theorem2_tightness_probe_records_failure(square_model):
    rep = run_campaign_model(square_model, "theorem2", trials=20, seed=3,
                             tolerances=TOLS, probe_tightness=True)
    assert rep.trials == 21  # probe appended as an extra trial
    assert len(rep.failures) == 1
    failure = rep.failures[0]
    assert failure["inputs"]["probe"] is True
    point = np.array(failure["inputs"]["point"], dtype=float)
    s2 = 1 / np.sqrt(2)
    assert np.allclose(np.sort(np.abs(point)), [0, 0, s2, s2], atol=1e-12)
    assert failure["inputs"]["eps"] == [1.0]


def test_theorem1_campaign_passes(square_model, segment_model):
    for model in (square_model, segment_model):
        rep = run_campaign_model(model, "theorem1", trials=300, seed=5,
                                 tolerances=TOLS)
        assert rep.passes == 300


def test_lemma_campaign_passes(square_model):
    rep = run_campaign_model(square_model, "lemma-linearization", trials=30,
                             seed=5, tolerances=TOLS)
    assert rep.passes == 30


def test_convexity_campaign_passes(square_model, segment_model):
    for model in (square_model, segment_model):
        rep = run_campaign_model(model, "convexity", trials=8, seed=5,
                                 tolerances=TOLS)
        assert rep.passes == 8


def test_numerics_campaign_passes(square_model):
    rep = run_campaign_model(square_model, "numerics", trials=4, seed=5,
                             tolerances=TOLS)
    assert rep.passes == 4


def test_unknown_campaign_rejected(square_model):
    with pytest.raises(UnknownCampaign):
        run_campaign_model(square_model, "nonsense", trials=1, seed=0,
                           tolerances=TOLS)


def test_config_validation(square_file):
    with pytest.raises(ValueError):
        CampaignConfig(model_path=str(square_file), campaign="theorem1", trials=0)
    with pytest.raises(ValueError):
        CampaignConfig(model_path=str(square_file), campaign="theorem1", seed=-1)


def test_run_campaign_writes_report(square_file, tmp_path):
    out = tmp_path / "report.json"
    config = CampaignConfig(model_path=str(square_file), campaign="theorem2",
                            trials=25, seed=9, output_path=str(out))
    rep = run_campaign(config)
    assert rep.passes == 25
    obj = json.loads(out.read_text())
    assert list(obj) == ["campaign", "model", "trials", "passes", "failures",
                         "thresholds_used", "wall_time"]
    assert obj["model"] == "unit-square"


def test_run_campaign_unwritable_output(square_file, tmp_path):
    config = CampaignConfig(model_path=str(square_file), campaign="theorem2",
                            trials=2, seed=9, output_path=str(tmp_path))
    with pytest.raises(ReportIoError):
        run_campaign(config)


def test_reports_identical_modulo_wall_time(square_file, tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"report-{k}.json"
        config = CampaignConfig(model_path=str(square_file), campaign="theorem2",
                                trials=50, seed=1234, output_path=str(out))
        run_campaign(config)
        obj = json.loads(out.read_text())
        obj.pop("wall_time")
        outs.append(json.dumps(obj, indent=2))
    assert outs[0] == outs[1]


def test_tolerance_resolution_rejects_unknown_keys():
    with pytest.raises(ValueError):
        resolve_tolerances({"no_such_tol": 1.0})


def test_tolerance_env_override(monkeypatch):
    monkeypatch.setenv("GML_DEFAULT_TOL", "1e-10")
    assert resolve_tolerances({})["eq_tol"] == 1e-10
    # explicit overrides beat the environment
    assert resolve_tolerances({"eq_tol": 1e-7})["eq_tol"] == 1e-7
    monkeypatch.delenv("GML_DEFAULT_TOL")
    assert resolve_tolerances({})["eq_tol"] == 1e-12


def test_describe_square_model(square_file):
    desc = describe_model(str(square_file))
    assert desc["name"] == "unit-square"
    assert desc["chain_threshold"] == 1.0
    assert len(desc["joint_fixed_components"]) == 4
    assert desc["moment_polytope_vertices"] == [[0, 0], [0, 1], [1, 0], [1, 1]]


def test_describe_segment_model(segment_file):
    desc = describe_model(str(segment_file))
    comps = [tuple(c["indices"]) for c in desc["joint_fixed_components"]]
    assert comps == [(0, 1), (2,)]
    assert desc["moment_polytope_vertices"] == [[0, 0], [1, 0]]
    assert desc["chain_threshold"] == "inf"
