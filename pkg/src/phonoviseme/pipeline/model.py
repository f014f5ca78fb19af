"""The full detector: tokenizers, three encoder streams, heads, fusion, classifier."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from .. import objectives as obj
from ..common_space import CommonSpacePair, ProjectionHeads
from ..encoder import EncoderConfig, LFAEncoder
from ..errors import ConfigError
from ..pvam import PVAM, FusedRepresentation, pvam_forward
from ..screening import filter_noncritical, slice_clip
from ..synthcorpus import ClipTriplet
from ..tokenizer import AudioTokenizer, PatchSpec, VideoTokenizer


@dataclass(frozen=True)
class ModelConfig:
    d: int = 64
    d_c: int = 128
    audio_patch: int = 400
    tubelet: tuple[int, int, int] = (2, 8, 8)
    sample_rate: int = 16000
    fps: int = 25
    frame_size: int = 32
    segment_frames: int = 4
    max_segments: int = 4
    audio_encoder: EncoderConfig = field(default_factory=lambda: EncoderConfig(window=8, shift=4))
    video_encoder: EncoderConfig = field(default_factory=lambda: EncoderConfig(window=8, shift=4))
    face_encoder: EncoderConfig = field(default_factory=lambda: EncoderConfig(window=8, shift=4))
    fusion_len: int = 4
    # "common": fuse token sequences after projection into the pv space;
    # "encoder": fuse raw encoder tokens
    fusion_source: str = "common"
    cafm_k: int | None = None
    cafm_cross_gain: float = 0.5
    pf_source: str = "phoneme"
    tau: float = obj.DEFAULT_TAU
    tau_info: float = obj.DEFAULT_TAU_INFO
    lam: float = obj.DEFAULT_LAMBDA
    ec_denominator: str = "literal"
    ec_reduction: str = "sum"

    def __post_init__(self):
        object.__setattr__(self, "tubelet", tuple(self.tubelet))
        for name in ("audio_encoder", "video_encoder", "face_encoder"):
            enc = getattr(self, name)
            if isinstance(enc, dict):
                enc = EncoderConfig(**enc)
                object.__setattr__(self, name, enc)
            if enc.d != self.d:
                raise ConfigError(f"{name}.d={enc.d} differs from model width d={self.d}")
        if self.sample_rate * self.segment_frames % self.fps:
            raise ConfigError("segment window must cover a whole number of audio samples")
        if self.fusion_source not in ("common", "encoder"):
            raise ConfigError(f"unknown fusion_source {self.fusion_source!r}")
        if self.segment_frames < 1 or self.max_segments < 1 or self.fusion_len < 1:
            raise ConfigError("segment_frames, max_segments and fusion_len must be >= 1")

    @property
    def fusion_width(self) -> int:
        return self.d_c if self.fusion_source == "common" else self.d

    @property
    def patch(self) -> PatchSpec:
        return PatchSpec(self.audio_patch, self.tubelet, self.d)

    @property
    def segment_samples(self) -> int:
        return self.sample_rate * self.segment_frames // self.fps

    @property
    def audio_tokens(self) -> int:
        return self.patch.audio_tokens(self.segment_samples)

    @property
    def video_grid(self) -> tuple[int, int, int]:
        return self.patch.video_grid(self.segment_frames, self.frame_size, self.frame_size)

    def to_dict(self) -> dict:
        return json.loads(json.dumps(asdict(self)))

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


# ---------------------------------------------------------------------------
# segment preparation


@dataclass
class PreparedClip:
    """Fixed-size windows of a clip's non-critical segments.

    Each window starts at the segment's first sample/frame and is cropped or
    zero-padded to ``segment_frames`` frames; content outside the segment is
    never included.
    """

    clip_id: str
    label: int
    audio: np.ndarray
    viseme: np.ndarray
    face: np.ndarray
    labels: tuple[str, ...] = ()

    @property
    def n_segments(self) -> int:
        return len(self.audio)


def _window(x: np.ndarray, start: int, stop: int, length: int) -> np.ndarray:
    out = np.zeros((length,) + x.shape[1:], dtype=x.dtype)
    chunk = x[start : min(stop, start + length)]
    out[: len(chunk)] = chunk
    return out


def prepare_clip(clip: ClipTriplet, config: ModelConfig) -> PreparedClip:
    if clip.sample_rate != config.sample_rate or clip.fps != config.fps:
        raise ConfigError(
            f"clip {clip.clip_id!r} is {clip.sample_rate} Hz / {clip.fps} fps, model expects "
            f"{config.sample_rate} Hz / {config.fps} fps"
        )
    if clip.viseme_video.shape[1:3] != (config.frame_size,) * 2:
        raise ConfigError(f"clip frames are {clip.viseme_video.shape[1:3]}, model expects {config.frame_size}")
    slices = slice_clip(clip, filter_noncritical(clip.timeline))[: config.max_segments]
    L, Fr = config.segment_samples, config.segment_frames
    audio = [_window(clip.waveform, *s.audio_span, L) for s in slices]
    vis = [_window(clip.viseme_video, *s.frame_span, Fr) for s in slices]
    face = [_window(clip.face_video, *s.frame_span, Fr) for s in slices]
    shape_v = (0, Fr, config.frame_size, config.frame_size, 3)
    return PreparedClip(
        clip.clip_id,
        int(clip.is_fake),
        np.stack(audio).astype(np.float32) if audio else np.zeros((0, L), np.float32),
        np.stack(vis) if vis else np.zeros(shape_v, np.uint8),
        np.stack(face) if face else np.zeros(shape_v, np.uint8),
        tuple(s.segment.label for s in slices),
    )


@dataclass
class SegmentBatch:
    audio: torch.Tensor
    viseme: torch.Tensor
    face: torch.Tensor
    clip_index: torch.Tensor
    labels: torch.Tensor
    n_clips: int

    @property
    def n_segments(self) -> int:
        return self.audio.shape[0]


def _video_float(x: np.ndarray, dtype) -> torch.Tensor:
    return torch.from_numpy(x).to(dtype) / 255.0 - 0.5


def collate(clips: Sequence[PreparedClip], dtype=torch.float32) -> SegmentBatch:
    """Stack the segments of several clips; clips without segments are dropped."""
    clips = [c for c in clips if c.n_segments]
    index = np.concatenate([np.full(c.n_segments, i) for i, c in enumerate(clips)]) if clips else np.zeros(0)
    return SegmentBatch(
        audio=torch.from_numpy(np.concatenate([c.audio for c in clips])).to(dtype),
        viseme=_video_float(np.concatenate([c.viseme for c in clips]), dtype),
        face=_video_float(np.concatenate([c.face for c in clips]), dtype),
        clip_index=torch.from_numpy(index.astype(np.int64)),
        labels=torch.tensor([c.label for c in clips], dtype=dtype),
        n_clips=len(clips),
    )


# ---------------------------------------------------------------------------
# model


@dataclass
class ForwardOutput:
    phoneme: torch.Tensor
    viseme: torch.Tensor
    face: torch.Tensor
    pv: CommonSpacePair
    pf: CommonSpacePair
    fused: FusedRepresentation
    align: tuple[torch.Tensor, torch.Tensor]
    segment_logits: torch.Tensor
    clip_logits: torch.Tensor


def clip_mean(values: torch.Tensor, index: torch.Tensor, n: int) -> torch.Tensor:
    """Average the rows of ``values`` grouped by ``index``."""
    total = values.new_zeros((n,) + values.shape[1:]).index_add(0, index, values)
    counts = torch.bincount(index, minlength=n).to(values.dtype)
    return total / counts.reshape(-1, *([1] * (values.ndim - 1)))


def _tokenwise(head: nn.Module, seq: torch.Tensor) -> torch.Tensor:
    """Apply a projection head to every token.

    Batch norms use their running statistics here, so token rows neither mix
    with each other nor leak into the buffers the pooled path maintains.
    """
    N, S, d = seq.shape
    x = seq.reshape(N * S, d)
    for layer in head if isinstance(head, nn.Sequential) else (head,):
        if isinstance(layer, nn.BatchNorm1d):
            # clones: the pooled pass later updates the buffers in place
            mean, var = layer.running_mean.clone(), layer.running_var.clone()
            x = F.batch_norm(x, mean, var, layer.weight, layer.bias, False, 0.0, layer.eps)
        else:
            x = layer(x)
    return x.reshape(N, S, -1)


class Detector(nn.Module):
    def __init__(self, config: ModelConfig = ModelConfig()):
        super().__init__()
        self.config = config
        patch = config.patch
        n_video = int(np.prod(config.video_grid))
        self.tok_phoneme = AudioTokenizer(patch, config.audio_tokens)
        self.tok_viseme = VideoTokenizer(patch, n_video, "viseme")
        self.tok_face = VideoTokenizer(patch, n_video, "face")
        self.enc_phoneme = LFAEncoder(config.audio_encoder, "1d")
        self.enc_viseme = LFAEncoder(config.video_encoder, "2d")
        self.enc_face = LFAEncoder(config.face_encoder, "2d")
        self.heads = ProjectionHeads(config.d, config.d_c, config.pf_source)
        w = config.fusion_width
        self.pvam = PVAM(w, w, config.fusion_len, config.cafm_k, config.cafm_cross_gain)
        self.classifier = nn.Linear(config.d + 2 * w, 2)

    def finetune_only(self) -> list[str]:
        """Names of the parameters that exist only for finetuning."""
        return [n for n, _ in self.named_parameters() if n.startswith("classifier.")]

    def _fusion_input(self, seq: torch.Tensor, temporal: int) -> torch.Tensor:
        """(N, S, d) tokens -> (N, d, fusion_len), pooling space then resampling time."""
        N, S, d = seq.shape
        x = seq.reshape(N, temporal, S // temporal, d).mean(2).transpose(1, 2)
        return F.adaptive_avg_pool1d(x, self.config.fusion_len)

    def forward(self, batch: SegmentBatch) -> ForwardOutput:
        ph = self.tok_phoneme(batch.audio)
        vi = self.tok_viseme(batch.viseme)
        fa = self.tok_face(batch.face)
        e_p = self.enc_phoneme(ph.tokens, ph.grid)
        e_v = self.enc_viseme(vi.tokens, vi.grid)
        e_f = self.enc_face(fa.tokens, fa.grid)
        s_p, s_v = e_p.sequence, e_v.sequence
        if self.config.fusion_source == "common":
            # read the running statistics before this step's pooled pass moves them
            s_p = _tokenwise(self.heads.g_p_pv, s_p)
            s_v = _tokenwise(self.heads.g_v_pv, s_v)
        pv, pf = self.heads(e_p.pooled, e_v.pooled, e_f.pooled)
        X_p = self._fusion_input(s_p, s_p.shape[1])
        X_v = self._fusion_input(s_v, vi.grid[0])
        fused, align = pvam_forward(X_p, X_v, self.pvam)
        feats = torch.cat([e_f.pooled, fused.x_att.mean(-1)], dim=-1)
        seg_logits = self.classifier(feats)
        clip_logits = clip_mean(seg_logits, batch.clip_index, batch.n_clips)
        return ForwardOutput(e_p.pooled, e_v.pooled, e_f.pooled, pv, pf, fused, align, seg_logits, clip_logits)


@dataclass
class LossParts:
    ec: torch.Tensor
    info: torch.Tensor
    cor: torch.Tensor
    pre: torch.Tensor


def pretrain_losses(
    out: ForwardOutput,
    config: ModelConfig,
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0),
    mask: torch.Tensor | None = None,
) -> LossParts:
    """Contrastive, InfoNCE and alignment losses over the batch's segments.

    ``mask`` restricts the losses to a subset of segments.
    """
    pv_a, pv_b = out.pv.anchor, out.pv.counterpart
    pf_a, pf_b = out.pf.anchor, out.pf.counterpart
    P, V = out.align
    if mask is not None:
        pv_a, pv_b, pf_a, pf_b, P, V = (t[mask] for t in (pv_a, pv_b, pf_a, pf_b, P, V))
    ec = obj.ec_loss(pv_a, pv_b, config.tau, config.ec_denominator, config.ec_reduction)
    info = obj.infonce_loss(pf_a, pf_b, config.tau_info)
    cor = obj.cgra_loss(P, V, config.lam)
    return LossParts(ec, info, cor, obj.pretrain_loss(ec, info, cor, weights))


def with_encoders(config: ModelConfig, **changes) -> ModelConfig:
    """Apply the same encoder-config changes to all three streams."""
    return replace(
        config,
        audio_encoder=replace(config.audio_encoder, **changes),
        video_encoder=replace(config.video_encoder, **changes),
        face_encoder=replace(config.face_encoder, **changes),
    )
