import json

import pytest

from phonoviseme import repro
from phonoviseme.errors import ConfigError
from phonoviseme.pipeline.metrics import MetricsReport
from phonoviseme.pipeline.training import TrainConfig
from phonoviseme.plots import plot_report
from phonoviseme.repro import (
    ACCEPTANCE,
    SUPPLEMENTARY,
    Expectation,
    ExperimentSpec,
    Sizes,
    micro_model_config,
    run_experiment,
)
from phonoviseme.synthcorpus import GenConfig

TINY = dict(
    gen=GenConfig(seed=2),
    model=micro_model_config(),
    train=TrainConfig(batch=4, epochs=1, probe_batches=2),
    sizes=Sizes(pretrain=12, finetune_real=6, finetune_fake=6, test_real=4, test_fake=4),
)


def test_every_criterion_has_one_spec():
    assert sorted(ACCEPTANCE) == list(range(1, 8))
    names = [s.name for s in ACCEPTANCE.values()]
    assert len(set(names)) == 7
    assert all(spec.criterion == k and spec.expected for k, spec in ACCEPTANCE.items())


def test_random_scores_report_contract(tmp_path):
    report = run_experiment(SUPPLEMENTARY["random_scores"], tmp_path)
    assert report.passed
    data = json.loads((tmp_path / "random_scores.json").read_text())
    assert {"spec", "measured", "expected", "tolerance", "pass", "wall_seconds"} <= set(data)
    assert data["pass"] is True and data["tolerance"]["auc"]["op"] == "close"
    assert data["spec"]["corpus_digest"] == GenConfig(seed=7).digest()


def test_budget_overrun_fails_with_breakdown():
    spec = ExperimentSpec("slow", "loss_oracles", max_seconds=0.0, options=(("instances", 5),))
    report = run_experiment(spec)
    assert not report.passed
    assert "exceeds budget" in report.failures[0] and "losses" in report.failures[0]
    assert set(report.timings) == {"losses", "auc"}


def test_failed_expectation_is_reported():
    spec = ExperimentSpec("hv", "hand_values", expected=(Expectation("cgra_negative_identity_k2", "lt", 8.0),))
    report = run_experiment(spec)
    assert not report.passed and "violates lt 8" in report.failures[0]


def test_missing_or_nan_metric_fails():
    e = Expectation("auc", "ge", 0.5)
    assert not e.holds(None) and not e.holds(float("nan")) and e.holds(0.5)


def test_spec_validation():
    with pytest.raises(ConfigError):
        ExperimentSpec("x", "no_such_runner")
    with pytest.raises(ConfigError):
        Expectation("auc", "approximately", 0.5)


def test_rerun_digest_identical():
    spec = ACCEPTANCE[2]
    assert run_experiment(spec).digest() == run_experiment(spec).digest()


def test_tiny_end_to_end_then_robustness_and_plots(tmp_path):
    context: dict = {}
    e2e = ExperimentSpec("tiny_e2e", "end_to_end", **TINY)
    first = run_experiment(e2e, tmp_path, context)
    assert (tmp_path / "tiny_e2e.params").exists()
    assert set(first.curves) == {"pretrain", "finetune"} and len(first.curves["pretrain"]) == 2
    assert run_experiment(e2e).digest() == first.digest()

    rob = ExperimentSpec(
        "tiny_rob", "robustness", options=(("base", "tiny_e2e"), ("kinds", ("noise", "blur")), ("levels", (1, 5)))
    )
    report = run_experiment(rob, tmp_path, context)
    assert set(report.curves["auc"]) == {"noise", "blur"}
    assert report.measured["max_drop_l1"] == max(report.measured["noise_drop_l1"], report.measured["blur_drop_l1"])
    made = plot_report(tmp_path / "tiny_e2e.json", tmp_path / "fig") + plot_report(tmp_path / "tiny_rob.json", tmp_path / "fig")
    assert [p.name for p in made] == ["tiny_e2e_loss.png", "tiny_rob_robustness.png"]
    assert all(p.stat().st_size > 1000 for p in made)


def test_scale_study_trend_is_only_a_warning(monkeypatch, tmp_path):
    aucs = iter([0.9, 0.7, 0.8])

    def fake_train(spec, clock, pre, ft, test_raw):
        return None, None, MetricsReport(auc=next(aucs), acc=0.5, n_videos=len(test_raw))

    monkeypatch.setattr(repro, "_train_and_eval", fake_train)
    spec = ExperimentSpec("scale", "scale_study", options=(("pretrain_sizes", (2, 4, 8)),), **TINY)
    report = run_experiment(spec, tmp_path)
    assert report.passed
    assert report.measured == {"auc_pretrain_2": 0.9, "auc_pretrain_4": 0.7, "auc_pretrain_8": 0.8}
    assert len(report.warnings) == 1 and "not monotone" in report.warnings[0]
    assert [p.name for p in plot_report(tmp_path / "scale.json", tmp_path)] == ["scale_scale.png"]


def test_scale_sizes_must_fit_pretraining_block():
    spec = ExperimentSpec("scale", "scale_study", options=(("pretrain_sizes", (5, 50)),), **TINY)
    with pytest.raises(ConfigError):
        run_experiment(spec)
