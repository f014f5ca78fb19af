"""Pretraining, finetuning, prediction and evaluation."""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np
import torch

from .. import objectives as obj
from ..errors import ValidationError
from ..synthcorpus import ClipTriplet
from .metrics import MetricsReport, accuracy, roc_auc
from .model import Detector, ModelConfig, PreparedClip, collate, pretrain_losses, prepare_clip

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    lr_new: float = 1e-3
    lr_shared: float = 5e-6
    lr_pretrain: float = 1e-3
    weight_decay: float = 1e-2
    batch: int = 16
    epochs: int = 10
    seed: int = 0
    loss_weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    w: float = 1.0
    contrastive_on_fakes: bool = True
    schedule: str = "cosine"
    probe_batches: int = 8

    def __post_init__(self):
        object.__setattr__(self, "loss_weights", tuple(self.loss_weights))
        if min(self.lr_new, self.lr_shared, self.lr_pretrain) < 0:
            raise ValidationError("learning rates must be non-negative")
        if self.batch < 2:
            raise ValidationError("batch must be >= 2 when contrastive losses are active")
        if self.epochs < 0:
            raise ValidationError("epochs must be non-negative")
        if self.schedule not in ("cosine", "constant"):
            raise ValidationError(f"unknown schedule {self.schedule!r}")

    def to_dict(self) -> dict:
        return json.loads(json.dumps(asdict(self)))

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


@dataclass
class TrainResult:
    model: Detector
    history: list[dict] = field(default_factory=list)
    skipped: int = 0

    @property
    def initial_loss(self) -> float:
        return self.history[0]["probe"]

    @property
    def final_loss(self) -> float:
        return self.history[-1]["probe"]


def prepare(clips: Iterable[ClipTriplet | PreparedClip], config: ModelConfig) -> list[PreparedClip]:
    return [c if isinstance(c, PreparedClip) else prepare_clip(c, config) for c in clips]


def _seed_everything(seed: int) -> None:
    torch.manual_seed(seed)
    torch.use_deterministic_algorithms(True)


def _batches(n: int, size: int, gen: torch.Generator | None) -> list[list[int]]:
    order = torch.randperm(n, generator=gen).tolist() if gen is not None else list(range(n))
    return [order[i : i + size] for i in range(0, n, size)]


def _set_lr(opt, base: list[float], step: int, total: int, schedule: str) -> None:
    factor = 1.0 if schedule == "constant" or total <= 1 else 0.5 * (1 + math.cos(math.pi * step / total))
    for group, lr in zip(opt.param_groups, base):
        group["lr"] = lr * factor


def _probe(model: Detector, clips: list[PreparedClip], tc: TrainConfig, supervised: bool) -> float:
    """Mean training loss over a fixed set of batches, without touching any state."""
    buffers = {k: v.clone() for k, v in model.named_buffers()}
    model.train()
    losses = []
    with torch.no_grad():
        for idx in _batches(len(clips), tc.batch, None)[: tc.probe_batches]:
            loss = _batch_loss(model, [clips[i] for i in idx], tc, supervised)
            if loss is not None:
                losses.append(float(loss))
    for k, v in model.named_buffers():
        v.copy_(buffers[k])
    return float(np.mean(losses)) if losses else float("nan")


def _batch_loss(model: Detector, clips: list[PreparedClip], tc: TrainConfig, supervised: bool):
    batch = collate(clips)
    if batch.n_segments < 2:
        return None
    out = model(batch)
    mask = None
    if supervised and not tc.contrastive_on_fakes:
        mask = batch.labels[batch.clip_index] == 0
        if int(mask.sum()) < 2:
            mask = None
            pre = out.clip_logits.new_zeros(())
        else:
            pre = pretrain_losses(out, model.config, tc.loss_weights, mask).pre
    else:
        pre = pretrain_losses(out, model.config, tc.loss_weights).pre
    if not supervised:
        return pre
    ce = obj.ce_from_logits(out.clip_logits, batch.labels)
    return obj.finetune_loss(pre, ce, tc.w)


def _run(model, clips, tc: TrainConfig, groups, supervised: bool) -> list[dict]:
    opt = torch.optim.AdamW(
        [{"params": p, "lr": lr} for p, lr in groups], weight_decay=tc.weight_decay
    )
    base = [lr for _, lr in groups]
    gen = torch.Generator().manual_seed(tc.seed)
    history = [{"epoch": 0, "probe": _probe(model, clips, tc, supervised)}]
    steps_per_epoch = len(_batches(len(clips), tc.batch, None))
    total, step = steps_per_epoch * tc.epochs, 0
    for epoch in range(1, tc.epochs + 1):
        model.train()
        losses = []
        for idx in _batches(len(clips), tc.batch, gen):
            _set_lr(opt, base, step, total, tc.schedule)
            step += 1
            loss = _batch_loss(model, [clips[i] for i in idx], tc, supervised)
            if loss is None:
                continue
            opt.zero_grad(set_to_none=True)
            loss.backward()
            opt.step()
            losses.append(float(loss.detach()))
        entry = {
            "epoch": epoch,
            "train": float(np.mean(losses)) if losses else float("nan"),
            "probe": _probe(model, clips, tc, supervised),
        }
        history.append(entry)
        log.info("epoch %d train %.4f probe %.4f", epoch, entry["train"], entry["probe"])
    return history


def _drop_empty(clips: list[PreparedClip]) -> tuple[list[PreparedClip], int]:
    kept = [c for c in clips if c.n_segments]
    skipped = len(clips) - len(kept)
    if skipped:
        log.warning("skipped %d clip(s) without non-critical segments", skipped)
    return kept, skipped


def pretrain(
    clips: Iterable[ClipTriplet | PreparedClip],
    tc: TrainConfig = TrainConfig(),
    config: ModelConfig = ModelConfig(),
    model: Detector | None = None,
) -> TrainResult:
    """Self-supervised pretraining on real clips; every module trains at ``lr_pretrain``."""
    prepared = prepare(clips, config if model is None else model.config)
    if any(c.label for c in prepared):
        raise ValidationError("pretraining corpus must contain only real clips")
    prepared, skipped = _drop_empty(prepared)
    _seed_everything(tc.seed)
    if model is None:
        model = Detector(config)
    shared = [p for n, p in model.named_parameters() if not n.startswith("classifier.")]
    history = _run(model, prepared, tc, [(shared, tc.lr_pretrain)], supervised=False)
    return TrainResult(model, history, skipped)


def finetune(
    clips: Iterable[ClipTriplet | PreparedClip],
    tc: TrainConfig = TrainConfig(),
    model: Detector | None = None,
    config: ModelConfig = ModelConfig(),
) -> TrainResult:
    """Supervised finetuning with two learning-rate tiers.

    The classifier trains at ``lr_new``; everything shared with pretraining
    trains at ``lr_shared``. Loss is the pretraining loss plus ``w`` times
    the clip-level cross-entropy.
    """
    clips = list(clips)
    for c in clips:
        label = getattr(c, "label", None)
        if label not in ("real", "fake", 0, 1):
            raise ValidationError(f"clip {getattr(c, 'clip_id', '?')!r} has no real/fake label")
    _seed_everything(tc.seed)
    if model is None:
        model = Detector(config)
    prepared, skipped = _drop_empty(prepare(clips, model.config))
    new = set(model.finetune_only())
    groups = [
        ([p for n, p in model.named_parameters() if n in new], tc.lr_new),
        ([p for n, p in model.named_parameters() if n not in new], tc.lr_shared),
    ]
    history = _run(model, prepared, tc, groups, supervised=True)
    return TrainResult(model, history, skipped)


# ---------------------------------------------------------------------------
# inference


@dataclass
class Prediction:
    clip_id: str
    probability: float
    n_segments: int

    @property
    def flagged(self) -> bool:
        """True when the clip had no usable segment and the score is a fallback."""
        return self.n_segments == 0


def predict_many(model: Detector, clips: Sequence[ClipTriplet | PreparedClip], batch: int = 64) -> list[Prediction]:
    prepared = prepare(clips, model.config)
    model.eval()
    out: list[Prediction] = []
    with torch.no_grad():
        for i in range(0, len(prepared), batch):
            chunk = prepared[i : i + batch]
            usable = [c for c in chunk if c.n_segments]
            probs = iter(())
            if usable:
                logits = model(collate(usable)).clip_logits.double()
                probs = iter(logits.softmax(-1)[:, 1].tolist())
            for c in chunk:
                p = next(probs) if c.n_segments else 0.5
                out.append(Prediction(c.clip_id, float(p), c.n_segments))
    return out


def predict(model: Detector, clip: ClipTriplet | PreparedClip) -> float:
    """Probability that the clip is fake; 0.5 when it has no non-critical segment."""
    return predict_many(model, [clip])[0].probability


def evaluate(model: Detector, clips: Sequence[ClipTriplet | PreparedClip], config_digest: str = "") -> MetricsReport:
    clips = list(clips)
    if not clips:
        raise ValidationError("cannot evaluate an empty split")
    preds = predict_many(model, clips)
    labels = np.array([c.label if isinstance(c, PreparedClip) else int(c.is_fake) for c in clips])
    scores = np.array([p.probability for p in preds])
    return MetricsReport(
        auc=roc_auc(scores, labels),
        acc=accuracy(scores, labels),
        n_videos=len(clips),
        scores={p.clip_id: p.probability for p in preds},
        config_digest=config_digest or model.config.digest(),
    )
