"""Loss functions for pretraining and finetuning.

All losses take torch tensors, are differentiable, and accept float64
input for gradient checking. Reductions run in a fixed order, so repeated
calls on the same input give bitwise-identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import torch
from torch.nn import functional as F

from .errors import DomainError, EmptyInputError, ShapeError

DEFAULT_TAU = 0.07
DEFAULT_TAU_INFO = 0.07
DEFAULT_LAMBDA = 5e-3
PROB_EPS = 1e-7


def _t(x) -> torch.Tensor:
    return x if isinstance(x, torch.Tensor) else torch.as_tensor(x, dtype=torch.float64)


def _check_rows(x: torch.Tensor, name: str) -> None:
    norms = x.norm(dim=-1)
    if bool((norms == 0).any()):
        bad = int(torch.nonzero(norms == 0)[0, 0]) if norms.ndim else 0
        raise DomainError(f"{name} row {bad} has zero norm")


def cosine_matrix(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """(N, d) x (M, d) -> (N, M) cosine similarities."""
    return F.normalize(a, dim=-1) @ F.normalize(b, dim=-1).T


def pair_similarity(x, y, tau: float = DEFAULT_TAU) -> torch.Tensor:
    """exp(cos(x, y) / tau)."""
    x, y = _t(x), _t(y)
    if tau <= 0:
        raise DomainError(f"temperature must be positive, got {tau}")
    _check_rows(x, "x")
    _check_rows(y, "y")
    cos = (x * y).sum(-1) / (x.norm(dim=-1) * y.norm(dim=-1))
    return torch.exp(cos / tau)


@dataclass
class ContrastBatch:
    phon: torch.Tensor
    vis: torch.Tensor
    tau: float = DEFAULT_TAU

    def __post_init__(self):
        self.phon, self.vis = _t(self.phon), _t(self.vis)
        if self.phon.ndim != 2 or self.phon.shape != self.vis.shape:
            raise ShapeError(
                f"phon and vis must be matching (N, d) matrices, got "
                f"{tuple(self.phon.shape)} and {tuple(self.vis.shape)}"
            )
        if self.phon.shape[0] == 0:
            raise EmptyInputError("contrast batch has no segments")
        if self.tau <= 0:
            raise DomainError(f"temperature must be positive, got {self.tau}")
        _check_rows(self.phon, "phon")
        _check_rows(self.vis, "vis")


def _ec_direction(logits: torch.Tensor, denominator: str) -> torch.Tensor:
    """Per-anchor -log(positive / denominator) given (N, N) logits (positives on the diagonal)."""
    n = logits.shape[0]
    pos = logits.diagonal()
    if denominator == "literal":
        # Sum over I plus sum over I\{i}: the negatives enter twice.
        off = ~torch.eye(n, dtype=torch.bool, device=logits.device)
        neg = logits.masked_fill(~off, -math.inf)
        both = torch.cat([logits, neg], dim=1)
        return torch.logsumexp(both, dim=1) - pos
    if denominator == "dedup":
        return torch.logsumexp(logits, dim=1) - pos
    raise ValueError(f"unknown denominator {denominator!r}")


def ec_loss(
    phon,
    vis,
    tau: float = DEFAULT_TAU,
    denominator: Literal["literal", "dedup"] = "literal",
    reduction: Literal["sum", "mean"] = "sum",
) -> torch.Tensor:
    """Segment-wise symmetric contrastive loss between phoneme and viseme rows.

    Row ``i`` of ``phon`` and ``vis`` describe the same segment. Each segment
    contributes a phoneme-anchored and a viseme-anchored term; the total is
    summed over segments (``reduction="mean"`` divides by N).
    """
    batch = ContrastBatch(phon, vis, tau)
    logits = cosine_matrix(batch.phon, batch.vis) / tau
    per_seg = _ec_direction(logits, denominator) + _ec_direction(logits.T, denominator)
    total = per_seg.sum()
    return total / per_seg.shape[0] if reduction == "mean" else total


def infonce_loss(anchors, counterparts, tau: float = DEFAULT_TAU_INFO) -> torch.Tensor:
    """Symmetric InfoNCE with cosine similarity and in-batch negatives.

    Both directions are averaged over N and then added.
    """
    batch = ContrastBatch(anchors, counterparts, tau)
    logits = cosine_matrix(batch.phon, batch.vis) / tau
    fwd = torch.logsumexp(logits, dim=1) - logits.diagonal()
    bwd = torch.logsumexp(logits, dim=0) - logits.diagonal()
    return fwd.mean() + bwd.mean()


def correlation_matrix(A, B) -> torch.Tensor:
    """Batch cross-correlation without centering: C_ij = <A_i, B_j> / (|A_i| |B_j|).

    ``A`` and ``B`` are (b, k); columns are features, rows batch samples.
    """
    A, B = _t(A), _t(B)
    if A.ndim != 2 or A.shape != B.shape:
        raise ShapeError(f"expected matching (b, k) matrices, got {tuple(A.shape)} and {tuple(B.shape)}")
    if A.shape[0] < 2:
        raise DomainError(f"correlation needs a batch of at least 2, got {A.shape[0]}")
    for name, M in (("A", A), ("B", B)):
        zero = (M == 0).all(dim=0)
        if bool(zero.any()):
            raise DomainError(f"{name} column {int(torch.nonzero(zero)[0, 0])} is all zero")
    An = A / A.norm(dim=0, keepdim=True)
    Bn = B / B.norm(dim=0, keepdim=True)
    return An.T @ Bn


def cgra_loss(A, B, lam: float = DEFAULT_LAMBDA) -> torch.Tensor:
    """sum_i (1 - C_ii)^2 + lam * sum_{i != j} C_ij^2."""
    if lam <= 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    C = correlation_matrix(A, B)
    diag = C.diagonal()
    on = (1 - diag).pow(2).sum()
    off = C.pow(2).sum() - diag.pow(2).sum()
    return on + lam * off


def ce_loss(probs, labels, eps: float = PROB_EPS) -> torch.Tensor:
    """Binary cross-entropy of fake-probabilities against 0/1 labels, averaged over N."""
    p, y = _t(probs), _t(labels).to(_t(probs).dtype)
    if p.shape != y.shape:
        raise ShapeError(f"probs {tuple(p.shape)} and labels {tuple(y.shape)} differ")
    if p.numel() == 0:
        raise EmptyInputError("no predictions")
    p = p.clamp(eps, 1 - eps)
    return -(y * torch.log(p) + (1 - y) * torch.log1p(-p)).mean()


def ce_from_logits(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Two-class logits -> ``ce_loss`` on the softmax probability of class 1 (fake)."""
    probs = logits.softmax(dim=-1)[..., 1]
    return ce_loss(probs, labels)


def pretrain_loss(ec, info, cor, weights: tuple[float, float, float] = (1.0, 1.0, 1.0)):
    return weights[0] * ec + weights[1] * info + weights[2] * cor


def finetune_loss(pre, ce, w: float = 1.0):
    return pre + w * ce
