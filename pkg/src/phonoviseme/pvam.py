"""Cross-attention fusion of phoneme and viseme features.

Shapes follow a features-on-rows, sequence-on-columns convention:

    X_p: (d_p, S)   X_v: (d_v, S)   J = [X_p; X_v]: (d_p + d_v, S)
    M_p = tanh(X_p^T W_jp J / sqrt(d_p + d_v))        (S, S)
    H_p = ReLU(W_p X_p + W_mp M_p^T)                  (k, S)
    Att_p = W_hp H_p + X_p                            (d_p, S)

with W_jp: (d_p, d_p + d_v), W_p: (k, d_p), W_mp: (k, S), W_hp: (d_p, k);
the viseme side mirrors it. The fused representation stacks Att_p over
Att_v. A leading batch axis is accepted everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
from torch import nn

from .errors import DomainError, ShapeError
from .objectives import correlation_matrix


class CafmParams(nn.Module):
    """Fusion weights.

    ``cross_gain`` > 0 (needs d_p == d_v) seeds the cross-modal block of
    W_jp and W_jv with ``cross_gain * I`` instead of random values, so that
    M_p starts as a scaled phoneme-viseme dot product.
    """

    def __init__(self, d_p: int, d_v: int, seq_len: int, k: int | None = None, cross_gain: float = 0.0):
        super().__init__()
        k = d_p if k is None else k
        self.d_p, self.d_v, self.seq_len, self.k = d_p, d_v, seq_len, k
        dj = d_p + d_v

        def init(*shape, fan_in):
            return nn.Parameter(torch.randn(*shape) / math.sqrt(fan_in))

        self.W_jp = init(d_p, dj, fan_in=dj)
        self.W_jv = init(d_v, dj, fan_in=dj)
        self.W_p = init(k, d_p, fan_in=d_p)
        self.W_v = init(k, d_v, fan_in=d_v)
        self.W_mp = init(k, seq_len, fan_in=seq_len)
        self.W_mv = init(k, seq_len, fan_in=seq_len)
        self.W_hp = init(d_p, k, fan_in=k)
        self.W_hv = init(d_v, k, fan_in=k)
        if cross_gain:
            if d_p != d_v:
                raise ShapeError(f"identity cross block needs d_p == d_v, got {d_p} and {d_v}")
            with torch.no_grad():
                self.W_jp[:, d_p:] = cross_gain * torch.eye(d_p)
                self.W_jv[:, :d_p] = cross_gain * torch.eye(d_p)

    def forward(self, X_p: torch.Tensor, X_v: torch.Tensor) -> "FusedRepresentation":
        return cafm(X_p, X_v, self)


@dataclass
class FusedRepresentation:
    att_p: torch.Tensor
    att_v: torch.Tensor
    x_att: torch.Tensor
    pooled_p: torch.Tensor
    pooled_v: torch.Tensor
    M_p: torch.Tensor
    M_v: torch.Tensor


def cafm(X_p: torch.Tensor, X_v: torch.Tensor, params: CafmParams) -> FusedRepresentation:
    if X_p.shape[-1] != X_v.shape[-1]:
        raise ShapeError(f"sequence lengths differ: {X_p.shape[-1]} vs {X_v.shape[-1]}")
    if X_p.shape[-1] != params.seq_len:
        raise ShapeError(f"sequence length {X_p.shape[-1]} != configured {params.seq_len}")
    if X_p.shape[-2] != params.d_p or X_v.shape[-2] != params.d_v:
        raise ShapeError(
            f"feature widths ({X_p.shape[-2]}, {X_v.shape[-2]}) != ({params.d_p}, {params.d_v})"
        )
    scale = math.sqrt(params.d_p + params.d_v)
    J = torch.cat([X_p, X_v], dim=-2)
    M_p = torch.tanh(X_p.transpose(-2, -1) @ params.W_jp @ J / scale)
    M_v = torch.tanh(X_v.transpose(-2, -1) @ params.W_jv @ J / scale)
    H_p = torch.relu(params.W_p @ X_p + params.W_mp @ M_p.transpose(-2, -1))
    H_v = torch.relu(params.W_v @ X_v + params.W_mv @ M_v.transpose(-2, -1))
    att_p = params.W_hp @ H_p + X_p
    att_v = params.W_hv @ H_v + X_v
    x_att = torch.cat([att_p, att_v], dim=-2)
    return FusedRepresentation(att_p, att_v, x_att, att_p.mean(-1), att_v.mean(-1), M_p, M_v)


class PVAM(nn.Module):
    """CAFM plus the adapter that brings pooled features to a common width."""

    def __init__(self, d_p: int, d_v: int, seq_len: int, k: int | None = None, cross_gain: float = 0.0):
        super().__init__()
        self.cafm = CafmParams(d_p, d_v, seq_len, k, cross_gain)
        width = min(d_p, d_v)
        self.adapt_p = nn.Linear(d_p, width, bias=False) if d_p != width else None
        self.adapt_v = nn.Linear(d_v, width, bias=False) if d_v != width else None

    def forward(self, X_p, X_v):
        return pvam_forward(X_p, X_v, self)


def pvam_forward(
    X_p: torch.Tensor, X_v: torch.Tensor, params: PVAM, need_alignment: bool = False
) -> tuple[FusedRepresentation, tuple[torch.Tensor, torch.Tensor]]:
    """Fuse a batch of (B, d, S) features; also return the (B, width) alignment pair."""
    if X_p.ndim == 2:
        X_p, X_v = X_p[None], X_v[None]
    if need_alignment and X_p.shape[0] < 2:
        raise DomainError("the alignment loss needs a batch of at least 2 samples")
    fused = cafm(X_p, X_v, params.cafm)
    P, V = fused.pooled_p, fused.pooled_v
    if params.adapt_p is not None:
        P = params.adapt_p(P)
    if params.adapt_v is not None:
        V = params.adapt_v(V)
    return fused, (P, V)


@dataclass
class AlignmentDiagnostics:
    batch_rank: int
    degenerate: bool
    correlation: torch.Tensor


def alignment_diagnostics(P: torch.Tensor, V: torch.Tensor) -> AlignmentDiagnostics:
    """Correlation matrix plus the rank of the stacked batch features."""
    with torch.no_grad():
        C = correlation_matrix(P, V)
        rank = int(torch.linalg.matrix_rank(torch.cat([P, V], dim=1).double()))
    return AlignmentDiagnostics(rank, rank <= 1, C)
