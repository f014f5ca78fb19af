"""Hierarchical projection into the phoneme-viseme and phoneme-face spaces.

The phoneme embedding is first projected into the phoneme-viseme space;
its phoneme-face vector is then computed from that projection, never from
the raw encoder output.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import torch
from torch import nn

from .errors import ShapeError

Space = Literal["pv", "pf"]


@dataclass
class CommonSpacePair:
    anchor: torch.Tensor
    counterpart: torch.Tensor
    space: Space


def two_layer_head(d_in: int, d_out: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Linear(d_in, d_out),
        nn.BatchNorm1d(d_out),
        nn.ReLU(),
        nn.Linear(d_out, d_out),
        nn.BatchNorm1d(d_out),
    )


class ProjectionHeads(nn.Module):
    """``pf_source`` picks which pv-space vector feeds the pf-space anchor.

    "phoneme" (default) routes the phoneme's pv vector; "viseme" routes the
    viseme's pv vector instead.
    """

    def __init__(self, d: int = 64, d_c: int = 128, pf_source: Literal["phoneme", "viseme"] = "phoneme"):
        super().__init__()
        if pf_source not in ("phoneme", "viseme"):
            raise ValueError(f"unknown pf_source {pf_source!r}")
        self.d, self.d_c, self.pf_source = d, d_c, pf_source
        self.g_p_pv = nn.Linear(d, d_c)
        self.g_v_pv = two_layer_head(d, d_c)
        self.g_p_pf = nn.Linear(d_c, d_c)
        self.g_f_pf = two_layer_head(d, d_c)

    def forward(self, phoneme_emb, viseme_emb, face_emb) -> tuple[CommonSpacePair, CommonSpacePair]:
        pv = to_pv(phoneme_emb, viseme_emb, self)
        src = pv.anchor if self.pf_source == "phoneme" else pv.counterpart
        return pv, to_pf(src, face_emb, self)


def _batched(head: nn.Module, x: torch.Tensor) -> torch.Tensor:
    if x.ndim == 1:
        return head(x[None])[0]
    return head(x)


def _check(x: torch.Tensor, width: int, name: str) -> None:
    if x.shape[-1] != width:
        raise ShapeError(f"{name} has width {x.shape[-1]}, expected {width}")


def to_pv(phoneme_emb: torch.Tensor, viseme_emb: torch.Tensor, heads: ProjectionHeads) -> CommonSpacePair:
    _check(phoneme_emb, heads.d, "phoneme embedding")
    _check(viseme_emb, heads.d, "viseme embedding")
    return CommonSpacePair(
        _batched(heads.g_p_pv, phoneme_emb), _batched(heads.g_v_pv, viseme_emb), "pv"
    )


def to_pf(phoneme_pv: torch.Tensor, face_emb: torch.Tensor, heads: ProjectionHeads) -> CommonSpacePair:
    _check(phoneme_pv, heads.d_c, "pv-space phoneme vector")
    _check(face_emb, heads.d, "face embedding")
    return CommonSpacePair(
        _batched(heads.g_p_pf, phoneme_pv), _batched(heads.g_f_pf, face_emb), "pf"
    )
