"""Video degradations at five intensity levels for robustness testing.

Only the two video streams are touched; audio, timeline and label are kept.
``compress`` stands in for a video codec: 8x8 block DCT quantisation of the
luma plane with chroma left untouched.
"""

from __future__ import annotations

import zlib
from dataclasses import replace

import numpy as np
from scipy import fft, ndimage

from ..errors import UsageError
from ..synthcorpus import ClipTriplet

KINDS = ("saturation", "contrast", "block", "noise", "blur", "pixelate", "compress")
LEVELS = (1, 2, 3, 4, 5)

# One parameter per level; each row is monotone in severity.
SATURATION = (0.8, 0.6, 0.4, 0.2, 0.0)
CONTRAST = (0.85, 0.7, 0.55, 0.4, 0.25)
BLOCK_COUNT = (1, 2, 3, 4, 5)
NOISE_SIGMA = (2.0, 4.0, 8.0, 12.0, 16.0)
BLUR_SIGMA = (0.3, 0.6, 0.9, 1.2, 1.6)
PIXELATE = (1.5, 2, 3, 4, 6)
COMPRESS_STEP = (4.0, 8.0, 16.0, 32.0, 64.0)


def noise_sigma(level: int) -> float:
    return NOISE_SIGMA[_check(level) - 1]


def _check(level: int) -> int:
    if level not in LEVELS:
        raise UsageError(f"level must be one of {LEVELS}, got {level!r}")
    return level


def _rgb_to_ycc(x):
    y = 0.299 * x[..., 0] + 0.587 * x[..., 1] + 0.114 * x[..., 2]
    cb = (x[..., 2] - y) * 0.564
    cr = (x[..., 0] - y) * 0.713
    return y, cb, cr


def _ycc_to_rgb(y, cb, cr):
    r = y + 1.403 * cr
    b = y + 1.773 * cb
    g = (y - 0.299 * r - 0.114 * b) / 0.587
    return np.stack([r, g, b], axis=-1)


def _saturation(v, level, rng):
    gray = _rgb_to_ycc(v)[0][..., None]
    s = SATURATION[level - 1]
    return gray + s * (v - gray)


def _contrast(v, level, rng):
    mean = v.mean(axis=(1, 2, 3), keepdims=True)
    return mean + CONTRAST[level - 1] * (v - mean)


def _block(v, level, rng):
    T, H, W, _ = v.shape
    out = v.copy()
    size = max(1, H // 8)
    for _ in range(BLOCK_COUNT[level - 1]):
        y = int(rng.integers(0, H - size + 1))
        x = int(rng.integers(0, W - size + 1))
        out[:, y : y + size, x : x + size] = 0.0
    return out


def _noise(v, level, rng):
    return v + rng.normal(0.0, NOISE_SIGMA[level - 1], size=v.shape)


def _blur(v, level, rng):
    s = BLUR_SIGMA[level - 1]
    return ndimage.gaussian_filter(v, sigma=(0, s, s, 0), mode="nearest")


def _pixelate(v, level, rng):
    T, H, W, _ = v.shape
    f = PIXELATE[level - 1]
    h, w = max(1, round(H / f)), max(1, round(W / f))
    small = ndimage.zoom(v, (1, h / H, w / W, 1), order=1, mode="nearest")
    return ndimage.zoom(small, (1, H / small.shape[1], W / small.shape[2], 1), order=0, mode="nearest")


def _compress(v, level, rng):
    y, cb, cr = _rgb_to_ycc(v)
    T, H, W = y.shape
    q = COMPRESS_STEP[level - 1]
    ph, pw = -H % 8, -W % 8
    yp = np.pad(y, ((0, 0), (0, ph), (0, pw)), mode="edge")
    blocks = yp.reshape(T, yp.shape[1] // 8, 8, yp.shape[2] // 8, 8)
    coef = fft.dctn(blocks, axes=(2, 4), norm="ortho")
    coef = np.round(coef / q) * q
    yq = fft.idctn(coef, axes=(2, 4), norm="ortho").reshape(yp.shape)[:, :H, :W]
    return _ycc_to_rgb(yq, cb, cr)


_OPS = {
    "saturation": _saturation,
    "contrast": _contrast,
    "block": _block,
    "noise": _noise,
    "blur": _blur,
    "pixelate": _pixelate,
    "compress": _compress,
}


def perturb_video(video: np.ndarray, kind: str, level: int, rng: np.random.Generator) -> np.ndarray:
    if kind not in _OPS:
        raise UsageError(f"unknown perturbation {kind!r}; choose from {', '.join(KINDS)}")
    _check(level)
    out = _OPS[kind](video.astype(np.float64), level, rng)
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def perturb(clip: ClipTriplet, kind: str, level: int) -> ClipTriplet:
    """Deterministic degradation of both video streams, seeded by (clip.seed, kind, level)."""
    if kind not in _OPS:
        raise UsageError(f"unknown perturbation {kind!r}; choose from {', '.join(KINDS)}")
    _check(level)
    seed = [clip.seed, zlib.crc32(kind.encode()), level]
    vis = perturb_video(clip.viseme_video, kind, level, np.random.default_rng(seed + [0]))
    face = perturb_video(clip.face_video, kind, level, np.random.default_rng(seed + [1]))
    return replace(clip, viseme_video=vis, face_video=face)
