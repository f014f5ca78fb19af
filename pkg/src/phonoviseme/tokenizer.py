"""Patch tokenizers turning raw waveforms and frame stacks into token sequences."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
import torch
from torch import nn

from .errors import CapacityError, EmptyInputError, ShapeError

Modality = Literal["phoneme", "viseme", "face"]


@dataclass(frozen=True)
class PatchSpec:
    audio_patch: int = 400
    tubelet: tuple[int, int, int] = (2, 8, 8)
    d: int = 64

    def __post_init__(self):
        if self.audio_patch < 1 or self.d < 1 or min(self.tubelet) < 1:
            raise ValueError(f"patch dimensions must all be >= 1: {self}")

    @property
    def voxels(self) -> int:
        t, h, w = self.tubelet
        return t * h * w * 3

    def audio_tokens(self, n_samples: int) -> int:
        return math.ceil(n_samples / self.audio_patch)

    def video_grid(self, frames: int, height: int, width: int) -> tuple[int, int, int]:
        t, h, w = self.tubelet
        return math.ceil(frames / t), math.ceil(height / h), math.ceil(width / w)


@dataclass
class TokenSequence:
    """``tokens`` is (S, d), or (B, S, d) for a batch of equally-shaped inputs.

    ``grid`` records the spatial layout of the tokens: ``(S,)`` for audio
    and ``(nT, nH, nW)`` for video, in row-major token order.
    """

    tokens: torch.Tensor
    modality: Modality
    grid: tuple[int, ...]

    @property
    def positions(self) -> torch.Tensor:
        return torch.arange(self.tokens.shape[-2])

    def __len__(self) -> int:
        return self.tokens.shape[-2]


def _as_tensor(x, dtype) -> torch.Tensor:
    if isinstance(x, torch.Tensor):
        return x.to(dtype)
    return torch.as_tensor(np.asarray(x), dtype=dtype)


def patchify_audio(samples: torch.Tensor, patch: int) -> torch.Tensor:
    """(..., T') -> (..., ceil(T'/patch), patch), zero-padding the last patch."""
    n = samples.shape[-1]
    if n == 0:
        raise EmptyInputError("audio segment has no samples")
    pad = -n % patch
    if pad:
        samples = nn.functional.pad(samples, (0, pad))
    return samples.reshape(*samples.shape[:-1], -1, patch)


def patchify_video(frames: torch.Tensor, tubelet: tuple[int, int, int]) -> torch.Tensor:
    """(..., T, H, W, 3) -> (..., nT*nH*nW, t*h*w*3), zero-padding partial tubelets.

    Tokens are ordered (nT, nH, nW) row-major; voxels inside a token are
    flattened in (t, h, w, channel) order.
    """
    if frames.shape[-1] != 3:
        raise ShapeError(f"expected RGB frames (..., T, H, W, 3), got {tuple(frames.shape)}")
    T, H, W = frames.shape[-4:-1]
    if min(T, H, W) == 0:
        raise EmptyInputError("video segment has an empty axis")
    t, h, w = tubelet
    lead = frames.shape[:-4]
    pads = (0, 0, 0, -W % w, 0, -H % h, 0, -T % t)
    if any(pads):
        frames = nn.functional.pad(frames, pads)
    nT, nH, nW = frames.shape[-4] // t, frames.shape[-3] // h, frames.shape[-2] // w
    x = frames.reshape(*lead, nT, t, nH, h, nW, w, 3)
    k = len(lead)
    perm = list(range(k)) + [k + i for i in (0, 2, 4, 1, 3, 5, 6)]
    x = x.permute(perm)
    return x.reshape(*lead, nT * nH * nW, t * h * w * 3)


class AudioTokenizer(nn.Module):
    """Linear projection of ``audio_patch``-sample patches plus learned positions."""

    def __init__(self, spec: PatchSpec, max_tokens: int):
        super().__init__()
        self.spec = spec
        self.max_tokens = max_tokens
        self.proj = nn.Parameter(torch.randn(spec.audio_patch, spec.d) / math.sqrt(spec.audio_patch))
        self.pos = nn.Parameter(0.02 * torch.randn(max_tokens, spec.d))

    def forward(self, samples) -> TokenSequence:
        samples = _as_tensor(samples, self.proj.dtype)
        patches = patchify_audio(samples, self.spec.audio_patch)
        S = patches.shape[-2]
        if S > self.max_tokens:
            raise CapacityError(f"{S} audio tokens exceed the configured maximum {self.max_tokens}")
        tokens = patches @ self.proj + self.pos[:S]
        return TokenSequence(tokens, "phoneme", (S,))


class VideoTokenizer(nn.Module):
    """Linear projection of t*h*w*3 tubelet voxels plus learned positions.

    The viseme and face streams each own a separate instance.
    """

    def __init__(self, spec: PatchSpec, max_tokens: int, modality: Modality = "viseme"):
        super().__init__()
        self.spec = spec
        self.max_tokens = max_tokens
        self.modality = modality
        self.proj = nn.Parameter(torch.randn(spec.voxels, spec.d) / math.sqrt(spec.voxels))
        self.pos = nn.Parameter(0.02 * torch.randn(max_tokens, spec.d))

    def forward(self, frames) -> TokenSequence:
        frames = _as_tensor(frames, self.proj.dtype)
        if frames.ndim < 4:
            raise ShapeError(f"expected (..., T, H, W, 3) frames, got {tuple(frames.shape)}")
        grid = self.spec.video_grid(*frames.shape[-4:-1])
        patches = patchify_video(frames, self.spec.tubelet)
        S = patches.shape[-2]
        if S > self.max_tokens:
            raise CapacityError(f"{S} video tokens exceed the configured maximum {self.max_tokens}")
        tokens = patches @ self.proj + self.pos[:S]
        return TokenSequence(tokens, self.modality, grid)


def tokenize_audio(samples, spec: PatchSpec, params: AudioTokenizer) -> TokenSequence:
    if params.spec != spec:
        raise ShapeError(f"tokenizer was built for {params.spec}, not {spec}")
    return params(samples)


def tokenize_video(frames, spec: PatchSpec, params: VideoTokenizer) -> TokenSequence:
    if params.spec != spec:
        raise ShapeError(f"tokenizer was built for {params.spec}, not {spec}")
    return params(frames)
