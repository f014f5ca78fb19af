"""Figures from experiment report JSON: loss curves, robustness grid, scale study."""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _load(report) -> dict:
    if isinstance(report, dict):
        return report
    return json.loads(Path(report).read_text())


def plot_loss_curves(report, path) -> Path:
    curves = _load(report)["curves"]
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    for ax, stage in zip(axes, ("pretrain", "finetune")):
        hist = curves.get(stage, [])
        probe = [h["probe"] for h in hist]
        train = [(i, h["train"]) for i, h in enumerate(hist) if h.get("train") is not None]
        ax.plot(range(len(probe)), probe, marker="o", label="probe")
        if train:
            ax.plot(*zip(*train), marker=".", label="train (epoch mean)")
        ax.set_title(stage)
        ax.set_xlabel("epoch")
        ax.set_ylabel("loss")
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def plot_robustness(report, path) -> Path:
    curves = _load(report)["curves"]
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    for kind, row in curves["auc"].items():
        levels = sorted(row, key=int)
        ax.plot([int(lv) for lv in levels], [row[lv] for lv in levels], marker="o", label=kind)
    ax.axhline(curves["clean_auc"], color="k", ls="--", lw=1, label="clean")
    ax.set_xlabel("level")
    ax.set_ylabel("AUC")
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def plot_scale(report, path) -> Path:
    rows = _load(report)["curves"]["scale"]
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.plot([r[0] for r in rows], [r[1] for r in rows], marker="o")
    ax.set_xscale("log")
    ax.set_xlabel("real clips used for pretraining")
    ax.set_ylabel("held-out AUC")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def plot_report(report, out_dir) -> list[Path]:
    """Every figure the report has data for, written as ``<name>_<figure>.png``."""
    data = _load(report)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = data["spec"]["name"]
    curves = data.get("curves", {})
    made = []
    if "pretrain" in curves or "finetune" in curves:
        made.append(plot_loss_curves(data, out_dir / f"{name}_loss.png"))
    if "auc" in curves:
        made.append(plot_robustness(data, out_dir / f"{name}_robustness.png"))
    if "scale" in curves:
        made.append(plot_scale(data, out_dir / f"{name}_scale.png"))
    return made
