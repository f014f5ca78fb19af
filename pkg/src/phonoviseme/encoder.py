"""Windowed self-attention encoder with local feature aggregation (LFA-ST).

Each block runs window attention (every other block on cyclically shifted
windows), then an LFA block, then a feed-forward block; all three carry
residual connections. LFA is BatchNorm -> depthwise conv -> pointwise conv
-> BatchNorm -> pointwise conv over the token grid: a 2-D grid per
temporal slice for video tokens, a 1-D line for audio tokens.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import torch
from torch import nn
from torch.nn import functional as F

from .errors import CapacityError, ConfigError, ShapeError
from .tokenizer import TokenSequence

_MASK_FILL = -1e9


@dataclass(frozen=True)
class EncoderConfig:
    n_blocks: int = 2
    n_heads: int = 4
    d: int = 64
    window: int = 8
    shift: int = 4
    lfa_kernel: int = 3
    mlp_ratio: int = 2
    max_tokens: int = 256
    lfa_position: Literal["post_attn", "pre_attn"] = "post_attn"
    use_lfa: bool = True

    def __post_init__(self):
        if self.d % self.n_heads:
            raise ConfigError(f"d={self.d} is not divisible by n_heads={self.n_heads}")
        if self.window < 2:
            raise ConfigError(f"window must be >= 2, got {self.window}")
        if not 0 <= self.shift < self.window:
            raise ConfigError(f"shift must lie in [0, window), got {self.shift}")
        if self.lfa_kernel < 1 or self.lfa_kernel % 2 == 0:
            raise ConfigError(f"lfa_kernel must be a positive odd integer, got {self.lfa_kernel}")
        if self.lfa_position not in ("post_attn", "pre_attn"):
            raise ConfigError(f"unknown lfa_position {self.lfa_position!r}")
        if self.n_blocks < 1:
            raise ConfigError("n_blocks must be >= 1")


# Production-size face stream: 12 blocks of 8-head attention.
FULL_FACE_CONFIG = EncoderConfig(n_blocks=12, n_heads=8, d=768, window=49, shift=24)


@dataclass
class StreamEmbedding:
    sequence: torch.Tensor
    pooled: torch.Tensor


class LocalFeatureAggregation(nn.Module):
    def __init__(self, channels: int, kernel: int = 3, layout: Literal["1d", "2d"] = "2d"):
        super().__init__()
        if layout not in ("1d", "2d"):
            raise ConfigError(f"unknown LFA layout {layout!r}")
        self.channels = channels
        self.layout = layout
        conv = nn.Conv1d if layout == "1d" else nn.Conv2d
        bn = nn.BatchNorm1d if layout == "1d" else nn.BatchNorm2d
        self.bn1 = bn(channels)
        self.dw = conv(channels, channels, kernel, padding=kernel // 2, groups=channels)
        self.pw1 = conv(channels, channels, 1)
        self.bn2 = bn(channels)
        self.pw2 = conv(channels, channels, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """Channel-first map (N, C, L) or (N, C, H, W) -> same shape, residual included."""
        return lfa_apply(x, self)

    def forward_tokens(self, tokens: torch.Tensor, grid: tuple[int, ...]) -> torch.Tensor:
        """(B, S, C) tokens laid out on ``grid`` -> (B, S, C)."""
        B, S, C = tokens.shape
        if self.layout == "1d":
            out = self(tokens.transpose(1, 2))
            return out.transpose(1, 2)
        nT, nH, nW = grid
        if nT * nH * nW != S:
            raise ShapeError(f"grid {grid} does not hold {S} tokens")
        x = tokens.reshape(B * nT, nH, nW, C).permute(0, 3, 1, 2)
        out = self(x)
        return out.permute(0, 2, 3, 1).reshape(B, S, C)


def lfa_apply(x: torch.Tensor, params: LocalFeatureAggregation) -> torch.Tensor:
    """Return ``x + PW(BN(PW(DW(BN(x)))))`` for a channel-first feature map."""
    expected = 3 if params.layout == "1d" else 4
    if x.ndim != expected:
        raise ShapeError(f"{params.layout} LFA expects a {expected}-D map, got {tuple(x.shape)}")
    if x.shape[1] != params.channels:
        raise ShapeError(f"input has {x.shape[1]} channels, LFA was built for {params.channels}")
    y = params.bn1(x)
    y = params.dw(y)
    y = params.pw1(y)
    y = params.bn2(y)
    y = params.pw2(y)
    return x + y


class WindowAttention(nn.Module):
    """Pre-norm multi-head self-attention inside fixed-size token windows."""

    def __init__(self, d: int, n_heads: int, window: int, shift: int = 0):
        super().__init__()
        self.d, self.n_heads, self.window, self.shift = d, n_heads, window, shift
        self.norm = nn.LayerNorm(d)
        self.qkv = nn.Linear(d, 3 * d)
        self.proj = nn.Linear(d, d)

    def forward(self, x: torch.Tensor, shifted: bool = False) -> torch.Tensor:
        B, S, d = x.shape
        if d != self.d:
            raise ShapeError(f"tokens have width {d}, attention was built for {self.d}")
        w = self.window
        shift = self.shift if (shifted and w < S) else 0
        Sp = math.ceil(S / w) * w
        h = self.norm(x)
        if Sp != S:
            h = F.pad(h, (0, 0, 0, Sp - S))
        valid = torch.arange(Sp, device=x.device) < S
        if shift:
            h = torch.roll(h, -shift, dims=1)
            valid = torch.roll(valid, -shift)
            # Tokens that wrapped around from the start must not mix with the tail.
            region = (torch.arange(Sp, device=x.device) >= Sp - shift).long()
        else:
            region = torch.zeros(Sp, dtype=torch.long, device=x.device)

        nw, hd = Sp // w, d // self.n_heads
        qkv = self.qkv(h).reshape(B, nw, w, 3, self.n_heads, hd).permute(3, 0, 1, 4, 2, 5)
        q, k, v = qkv[0], qkv[1], qkv[2]
        scores = q @ k.transpose(-2, -1) / math.sqrt(hd)

        region_w = region.reshape(nw, w)
        valid_w = valid.reshape(nw, w)
        allowed = (region_w[:, :, None] == region_w[:, None, :]) & valid_w[:, None, :]
        if not bool(allowed.all()):
            scores = scores.masked_fill(~allowed[None, :, None], _MASK_FILL)
        attn = scores.softmax(dim=-1)
        out = (attn @ v).permute(0, 1, 3, 2, 4).reshape(B, Sp, d)
        out = self.proj(out)
        if shift:
            out = torch.roll(out, shift, dims=1)
        return x + out[:, :S]


def window_attention(
    tokens: torch.Tensor, config: EncoderConfig, params: WindowAttention, shifted: bool = False
) -> torch.Tensor:
    if params.window != config.window or params.d != config.d:
        raise ShapeError("attention parameters do not match the encoder config")
    squeeze = tokens.ndim == 2
    out = params(tokens[None] if squeeze else tokens, shifted=shifted)
    return out[0] if squeeze else out


class FeedForward(nn.Module):
    def __init__(self, d: int, ratio: int = 2):
        super().__init__()
        self.norm = nn.LayerNorm(d)
        self.fc1 = nn.Linear(d, ratio * d)
        self.fc2 = nn.Linear(ratio * d, d)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.fc2(F.gelu(self.fc1(self.norm(x))))


class EncoderBlock(nn.Module):
    def __init__(self, config: EncoderConfig, layout: Literal["1d", "2d"], shifted: bool):
        super().__init__()
        self.config = config
        self.shifted = shifted
        self.attn = WindowAttention(config.d, config.n_heads, config.window, config.shift)
        self.lfa = LocalFeatureAggregation(config.d, config.lfa_kernel, layout) if config.use_lfa else None
        self.ffn = FeedForward(config.d, config.mlp_ratio)

    def forward(self, x: torch.Tensor, grid: tuple[int, ...]) -> torch.Tensor:
        if self.lfa is not None and self.config.lfa_position == "pre_attn":
            x = self.lfa.forward_tokens(x, grid)
        x = self.attn(x, shifted=self.shifted)
        if self.lfa is not None and self.config.lfa_position == "post_attn":
            x = self.lfa.forward_tokens(x, grid)
        return self.ffn(x)


class LFAEncoder(nn.Module):
    """One stream's encoder. ``layout`` is "1d" for audio and "2d" for video tokens."""

    def __init__(self, config: EncoderConfig, layout: Literal["1d", "2d"] = "2d"):
        super().__init__()
        self.config = config
        self.layout = layout
        self.blocks = nn.ModuleList(
            EncoderBlock(config, layout, shifted=bool(i % 2)) for i in range(config.n_blocks)
        )

    def forward(self, tokens: torch.Tensor, grid: tuple[int, ...]) -> StreamEmbedding:
        S = tokens.shape[-2]
        if S > self.config.max_tokens:
            raise CapacityError(f"{S} tokens exceed the encoder maximum {self.config.max_tokens}")
        squeeze = tokens.ndim == 2
        x = tokens[None] if squeeze else tokens
        for block in self.blocks:
            x = block(x, grid)
        if squeeze:
            x = x[0]
        return StreamEmbedding(x, x.mean(dim=-2))


def encode_stream(tokens: TokenSequence, config: EncoderConfig, params: LFAEncoder) -> StreamEmbedding:
    if params.config != config:
        raise ShapeError("encoder parameters were built for a different config")
    return params(tokens.tokens, tokens.grid)


def zero_residual_branches(encoder: LFAEncoder, ffn: bool = False) -> None:
    """Zero every attention output projection and final LFA pointwise conv.

    With ``ffn=True`` the feed-forward output layers are zeroed too, which
    turns the whole encoder into the identity map.
    """
    with torch.no_grad():
        for block in encoder.blocks:
            block.attn.proj.weight.zero_()
            block.attn.proj.bias.zero_()
            if block.lfa is not None:
                block.lfa.pw2.weight.zero_()
                block.lfa.pw2.bias.zero_()
            if ffn:
                block.ffn.fc2.weight.zero_()
                block.ffn.fc2.bias.zero_()
