"""Train a small detector end to end, then stress it.

This is the criterion-5/6 pipeline at reduced scale: 300 real clips for
contrastive pretraining, 240 for fine-tuning and 80 held out, with the
default model. It takes about a minute on one CPU core. After training it
measures held-out AUC under two video perturbations. The full-size run is
``phonoviseme.repro.ACCEPTANCE[5]``.

    python demos/03_tiny_detector.py [OUT_DIR]
"""

import sys
from pathlib import Path

from phonoviseme.pipeline.training import TrainConfig
from phonoviseme.plots import plot_report
from phonoviseme.repro import ExperimentSpec, Sizes, run_experiment
from phonoviseme.synthcorpus import GenConfig

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
context: dict = {}

e2e = ExperimentSpec(
    "demo_e2e",
    "end_to_end",
    gen=GenConfig(seed=3),
    train=TrainConfig(epochs=6, probe_batches=4),
    sizes=Sizes(pretrain=300, finetune_real=120, finetune_fake=120, test_real=40, test_fake=40),
)
report = run_experiment(e2e, out, context)
m = report.measured
print(f"held-out AUC {m['auc']:.3f}, accuracy {m['acc']:.3f}, pretrain loss ratio {m['pretrain_loss_ratio']:.3f}")
for stage in ("pretrain", "finetune"):
    probes = [round(h["probe"], 4) for h in report.curves[stage]]
    print(f"  {stage} probe loss by epoch: {probes}")

rob = ExperimentSpec(
    "demo_robustness",
    "robustness",
    options=(("base", "demo_e2e"), ("kinds", ("noise", "blur")), ("levels", (1, 3, 5))),
)
report = run_experiment(rob, out, context)
print(f"clean AUC {report.measured['clean_auc']:.3f}")
for kind, row in report.curves["auc"].items():
    print(f"  {kind}: " + ", ".join(f"L{lv}={auc:.3f}" for lv, auc in row.items()))

figures = plot_report(out / "demo_e2e.json", out) + plot_report(out / "demo_robustness.json", out)
print("figures:", ", ".join(str(p) for p in figures))
