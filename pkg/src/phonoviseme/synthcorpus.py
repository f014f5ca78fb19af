"""Synthetic talking clips with controllable lip-sync forgeries.

Every phoneme owns an audio signature (a pair of tones) and a viseme
signature (a mouth-aperture curve plus a mouth width). A real clip draws one
phoneme sequence and renders both audio and lips from it; one latent
intensity per segment scales both the loudness and the mouth opening, so the
two streams also agree below the phoneme level.

Forgeries keep the critical phonemes calibrated and break the rest:

* ``av_desync``: audio comes from an independent sequence; the lips are
  rendered from the original sequence except inside the audio's critical
  segments, which are re-rendered to match the audio.
* ``lip_only``: audio is kept; the lips of every non-critical segment are
  re-rendered from a different non-critical phoneme.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import partial
from pathlib import Path
from typing import Iterable, Literal

import numpy as np

from .errors import ConfigError, DecodeError, ValidationError
from .screening import CRITICAL_PHONEMES, PhonemeSegment, SegmentTimeline, classify_phoneme, parse_alignment

Label = Literal["real", "fake"]
FakeMode = Literal["none", "av_desync", "lip_only"]

DEFAULT_CRITICAL = ("m", "b", "p", "f", "v", "er", "sh", "ay", "eh")
DEFAULT_NONCRITICAL = (
    "aa", "iy", "uw", "ow", "r", "l", "n", "s",
    "t", "k", "ae", "ih", "d", "g", "w", "y",
)
MANIFEST_VERSION = 1


@dataclass(frozen=True)
class GenConfig:
    n_real: int = 8
    n_fake: int = 8
    duration_ms: int = 1000
    sample_rate: int = 16000
    fps: int = 25
    viseme_size: int = 32
    face_size: int = 32
    critical: tuple[str, ...] = DEFAULT_CRITICAL
    noncritical: tuple[str, ...] = DEFAULT_NONCRITICAL
    phoneme_ms: tuple[int, int] = (80, 200)
    critical_rate: float = 0.4
    audio_snr_db: float = 20.0
    video_noise: float = 4.0
    intensity_range: tuple[float, float] = (0.7, 1.3)
    fake_modes: tuple[str, ...] = ("av_desync", "lip_only")
    signature_seed: int = 1234
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "critical", tuple(self.critical))
        object.__setattr__(self, "noncritical", tuple(self.noncritical))
        object.__setattr__(self, "phoneme_ms", tuple(self.phoneme_ms))
        object.__setattr__(self, "intensity_range", tuple(self.intensity_range))
        object.__setattr__(self, "fake_modes", tuple(self.fake_modes))
        if len(self.critical) < 3 or len(self.noncritical) < 3:
            raise ConfigError("inventory needs at least 3 critical and 3 non-critical phonemes")
        bad = [p for p in self.critical if not classify_phoneme(p).critical]
        if bad:
            raise ConfigError(f"labels {bad} are not critical phonemes")
        bad = [p for p in self.noncritical if classify_phoneme(p).critical]
        if bad:
            raise ConfigError(f"labels {bad} are critical phonemes")
        lo, hi = self.phoneme_ms
        if not 0 < lo <= hi:
            raise ConfigError(f"invalid phoneme duration range {self.phoneme_ms}")
        if self.duration_ms < lo:
            raise ConfigError(
                f"duration {self.duration_ms} ms cannot fit one phoneme of at least {lo} ms"
            )
        if self.duration_ms * self.fps % 1000:
            raise ConfigError("duration_ms must cover a whole number of frames")
        if self.n_real < 0 or self.n_fake < 0:
            raise ConfigError("clip counts must be non-negative")
        for mode in self.fake_modes:
            if mode not in ("av_desync", "lip_only"):
                raise ConfigError(f"unknown fake mode {mode!r}")
        if self.n_fake and not self.fake_modes:
            raise ConfigError("fake clips requested but no fake_modes configured")

    @property
    def n_frames(self) -> int:
        return self.duration_ms * self.fps // 1000

    @property
    def n_samples(self) -> int:
        return self.duration_ms * self.sample_rate // 1000

    def to_dict(self) -> dict:
        return json.loads(json.dumps(asdict(self)))

    @classmethod
    def from_dict(cls, d: dict) -> "GenConfig":
        return cls(**d)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


@dataclass(frozen=True)
class Signature:
    tones: tuple[float, float]
    aperture: float
    width: float

    def curve(self, u: np.ndarray) -> np.ndarray:
        """Mouth aperture at relative position ``u`` in [0, 1) of the phoneme."""
        return self.aperture * (0.6 + 0.4 * np.sin(np.pi * u))


def signatures(config: GenConfig) -> dict[str, Signature]:
    """Per-phoneme audio and viseme signatures, fixed by ``signature_seed``."""
    labels = sorted(set(config.critical) | set(config.noncritical))
    rng = np.random.default_rng(config.signature_seed)
    n = len(labels)
    low = rng.permutation(np.linspace(220.0, 900.0, n))
    high = rng.permutation(np.linspace(1100.0, 3400.0, n))
    apertures = rng.permutation(np.linspace(0.25, 1.0, n))
    widths = rng.permutation(np.linspace(0.2, 1.0, n))
    out = {}
    for i, label in enumerate(labels):
        ap = apertures[i]
        if CRITICAL_PHONEMES.get(label) == 6:
            # bilabials: lips fully closed
            ap = 0.04
        out[label] = Signature((float(low[i]), float(high[i])), float(ap), float(widths[i]))
    return out


@dataclass
class ClipTriplet:
    clip_id: str
    waveform: np.ndarray
    viseme_video: np.ndarray
    face_video: np.ndarray
    timeline: SegmentTimeline
    label: Label = "real"
    fake_mode: FakeMode = "none"
    seed: int = 0
    sample_rate: int = 16000
    fps: int = 25
    # Ground truth for audits: the phoneme and aperture each frame shows.
    frame_phonemes: tuple[str, ...] = field(default=(), repr=False)
    frame_apertures: np.ndarray | None = field(default=None, repr=False)
    frame_widths: np.ndarray | None = field(default=None, repr=False)
    segment_intensity: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        if self.label == "real" and self.fake_mode != "none":
            raise ValidationError("a real clip cannot carry a fake mode")
        if self.label == "fake" and self.fake_mode == "none":
            raise ValidationError("a fake clip needs a fake mode")
        audio_ms = 1000.0 * len(self.waveform) / self.sample_rate
        video_ms = 1000.0 * len(self.viseme_video) / self.fps
        frame_ms = 1000.0 / self.fps
        if len(self.face_video) != len(self.viseme_video):
            raise ValidationError("viseme and face videos have different frame counts")
        if max(abs(audio_ms - video_ms), abs(self.timeline.total_ms - video_ms)) > frame_ms + 1e-9:
            raise ValidationError(
                f"clip {self.clip_id!r}: audio {audio_ms:g} ms, video {video_ms:g} ms and "
                f"timeline {self.timeline.total_ms} ms disagree by more than one frame"
            )

    @property
    def duration_ms(self) -> int:
        return self.timeline.total_ms

    @property
    def is_fake(self) -> bool:
        return self.label == "fake"


# ---------------------------------------------------------------------------
# generation


@dataclass
class _Track:
    labels: list[str]
    bounds: list[tuple[int, int]]
    intensity: list[float]


def _draw_track(config: GenConfig, rng: np.random.Generator) -> _Track:
    lo, hi = config.phoneme_ms
    labels, bounds, intensity = [], [], []
    t = 0
    while t < config.duration_ms:
        dur = int(rng.integers(lo, hi + 1))
        pool = config.critical if rng.random() < config.critical_rate else config.noncritical
        label = pool[int(rng.integers(len(pool)))]
        if labels and label == labels[-1]:
            label = pool[(pool.index(label) + 1) % len(pool)]
        end = min(t + dur, config.duration_ms)
        if end - t < lo // 2 and bounds:
            # too short a tail: stretch the previous phoneme instead
            bounds[-1] = (bounds[-1][0], end)
            break
        labels.append(label)
        bounds.append((t, end))
        intensity.append(float(rng.uniform(*config.intensity_range)))
        t = end
    return _Track(labels, bounds, intensity)


def _frame_lookup(track: _Track, config: GenConfig) -> tuple[np.ndarray, np.ndarray]:
    """Index of the active segment and relative position for each frame centre."""
    centres = (np.arange(config.n_frames) + 0.5) * 1000.0 / config.fps
    starts = np.array([b[0] for b in track.bounds], dtype=float)
    ends = np.array([b[1] for b in track.bounds], dtype=float)
    idx = np.searchsorted(starts, centres, side="right") - 1
    u = (centres - starts[idx]) / (ends[idx] - starts[idx])
    return idx, u


def _frame_geometry(track: _Track, sigs: dict[str, Signature], config: GenConfig):
    idx, u = _frame_lookup(track, config)
    labels = [track.labels[i] for i in idx]
    ap = np.array([sigs[l].curve(np.array(uu)) * track.intensity[i] for l, uu, i in zip(labels, u, idx)])
    width = np.array([sigs[l].width for l in labels])
    return labels, ap, width


def _render_audio(track: _Track, sigs: dict[str, Signature], config: GenConfig, rng) -> np.ndarray:
    sr = config.sample_rate
    wave = np.zeros(config.n_samples)
    for label, (s, e), amp in zip(track.labels, track.bounds, track.intensity):
        a, b = s * sr // 1000, e * sr // 1000
        # phase restarts at each phoneme onset
        t = np.arange(b - a) / sr
        f1, f2 = sigs[label].tones
        wave[a:b] = amp * (np.sin(2 * np.pi * f1 * t) + 0.5 * np.sin(2 * np.pi * f2 * t))
    signal_power = np.mean(wave**2) if wave.any() else 1.0
    noise_sd = np.sqrt(signal_power / 10 ** (config.audio_snr_db / 10))
    wave = wave + rng.normal(0.0, noise_sd, size=wave.shape)
    return wave.astype(np.float32)


_SKIN = np.array([205.0, 160.0, 140.0])
_LIP = np.array([150.0, 60.0, 70.0])
_MOUTH = np.array([40.0, 15.0, 20.0])


def render_lips(apertures: np.ndarray, widths: np.ndarray, size: int) -> np.ndarray:
    """(T,) apertures and widths in [0, ~1.3] -> (T, size, size, 3) float RGB."""
    c = (size - 1) / 2.0
    yy, xx = np.mgrid[0:size, 0:size].astype(float)
    half_w = (0.18 + 0.22 * widths)[:, None, None] * size
    half_h = (0.03 + 0.16 * apertures)[:, None, None] * size
    r_inner = ((xx - c) / half_w) ** 2 + ((yy - c) / half_h) ** 2
    r_outer = ((xx - c) / (half_w + 0.08 * size)) ** 2 + ((yy - c) / (half_h + 0.08 * size)) ** 2
    img = np.broadcast_to(_SKIN, (len(apertures), size, size, 3)).copy()
    img[r_outer <= 1.0] = _LIP
    img[r_inner <= 1.0] = _MOUTH
    return img


def _background(size: int, rng) -> np.ndarray:
    coarse = rng.uniform(40, 220, size=(4, 4, 3))
    rep = -(-size // 4)
    tex = np.kron(coarse, np.ones((rep, rep, 1)))[:size, :size]
    return tex


def render_face(lips: np.ndarray, size: int, background: np.ndarray) -> np.ndarray:
    """Embed a lip crop in a static face-on-background frame."""
    T = len(lips)
    yy, xx = np.mgrid[0:size, 0:size].astype(float)
    c = (size - 1) / 2.0
    oval = ((xx - c) / (0.38 * size)) ** 2 + ((yy - c) / (0.47 * size)) ** 2 <= 1.0
    img = np.broadcast_to(background, (T, size, size, 3)).copy()
    img[:, oval] = _SKIN
    # downsample the lip crop 2x and paste it on the lower half of the face
    small = lips.reshape(T, lips.shape[1] // 2, 2, lips.shape[2] // 2, 2, 3).mean(axis=(2, 4))
    ph, pw = small.shape[1:3]
    top = min(size - ph, int(0.55 * size) - ph // 2)
    left = (size - pw) // 2
    img[:, top : top + ph, left : left + pw] = small
    return img


def _to_u8(img: np.ndarray, noise: float, rng) -> np.ndarray:
    if noise > 0:
        img = img + rng.normal(0.0, noise, size=img.shape)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def clip_seed(base_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([base_seed, index]).generate_state(1, np.uint32)[0])


def _timeline(track: _Track, clip_id: str, total_ms: int) -> SegmentTimeline:
    segs = tuple(PhonemeSegment.make(l, s, e) for l, (s, e) in zip(track.labels, track.bounds))
    return SegmentTimeline(clip_id, total_ms, segs)


def generate_clip(
    config: GenConfig,
    seed: int,
    label: Label = "real",
    fake_mode: FakeMode = "none",
    clip_id: str | None = None,
) -> ClipTriplet:
    if label == "real" and fake_mode != "none":
        raise ConfigError("real clips take fake_mode='none'")
    if label == "fake" and fake_mode not in ("av_desync", "lip_only"):
        raise ConfigError(f"fake clips need a fake mode, got {fake_mode!r}")
    sigs = signatures(config)
    clip_id = clip_id or f"clip-{seed:010d}"
    for attempt in range(64):
        rng = np.random.default_rng([seed, attempt])
        clip = _generate_once(config, sigs, rng, seed, label, fake_mode, clip_id)
        if audit_clip(clip, config).ok:
            return clip
    raise ValidationError(f"could not generate an auditable {label}/{fake_mode} clip for seed {seed}")


def _generate_once(config, sigs, rng, seed, label, fake_mode, clip_id) -> ClipTriplet:
    video_track = _draw_track(config, rng)
    audio_track = video_track
    frame_labels, ap, width = _frame_geometry(video_track, sigs, config)
    if fake_mode == "av_desync":
        audio_track = _draw_track(config, rng)
        a_labels, a_ap, a_width = _frame_geometry(audio_track, sigs, config)
        calibrated = np.array([classify_phoneme(l).critical for l in a_labels])
        ap = np.where(calibrated, a_ap, ap)
        width = np.where(calibrated, a_width, width)
        frame_labels = [a if c else v for a, v, c in zip(a_labels, frame_labels, calibrated)]
    elif fake_mode == "lip_only":
        idx, u = _frame_lookup(video_track, config)
        wrong = {}
        for i, l in enumerate(video_track.labels):
            if not classify_phoneme(l).critical:
                choices = [p for p in config.noncritical if p != l]
                wrong[i] = choices[int(rng.integers(len(choices)))]
        frame_labels = list(frame_labels)
        for f, (i, uu) in enumerate(zip(idx, u)):
            if i in wrong:
                sig = sigs[wrong[i]]
                ap[f] = sig.curve(np.array(uu)) * video_track.intensity[i]
                width[f] = sig.width
                frame_labels[f] = wrong[i]

    waveform = _render_audio(audio_track, sigs, config, rng)
    lips = render_lips(ap, width, config.viseme_size)
    face = render_face(render_lips(ap, width, config.face_size), config.face_size, _background(config.face_size, rng))
    viseme_u8 = _to_u8(lips, config.video_noise, rng)
    face_u8 = _to_u8(face, config.video_noise, rng)
    return ClipTriplet(
        clip_id=clip_id,
        waveform=waveform,
        viseme_video=viseme_u8,
        face_video=face_u8,
        timeline=_timeline(audio_track, clip_id, config.duration_ms),
        label=label,
        fake_mode=fake_mode,
        seed=seed,
        sample_rate=config.sample_rate,
        fps=config.fps,
        frame_phonemes=tuple(frame_labels),
        frame_apertures=ap,
        frame_widths=width,
        segment_intensity=tuple(audio_track.intensity),
    )


@dataclass
class AuditReport:
    critical_match: bool
    noncritical_match: list[bool]
    ok: bool
    max_noncritical_mismatch: float


def audit_clip(clip: ClipTriplet, config: GenConfig, atol: float = 1e-9) -> AuditReport:
    """Compare rendered lips with the audio phoneme's viseme signature, segment by segment.

    A frame belongs to the segment containing its centre time. The expected
    aperture is the signature curve scaled by the segment's intensity. Real
    clips must match everywhere; fakes must match on every critical segment
    and differ on at least one non-critical one.
    """
    if clip.frame_apertures is None or clip.frame_widths is None:
        raise ValidationError("clip carries no ground-truth geometry to audit")
    sigs = signatures(config)
    centres = (np.arange(len(clip.frame_apertures)) + 0.5) * 1000.0 / clip.fps
    critical_ok = True
    non_matches, worst = [], 0.0
    for seg, intensity in zip(clip.timeline.segments, clip.segment_intensity):
        frames = np.flatnonzero((centres >= seg.start_ms) & (centres < seg.end_ms))
        if not len(frames):
            continue
        sig = sigs[seg.label]
        u = (centres[frames] - seg.start_ms) / seg.duration_ms
        gap = max(
            float(np.max(np.abs(clip.frame_apertures[frames] - sig.curve(u) * intensity))),
            float(np.max(np.abs(clip.frame_widths[frames] - sig.width))),
        )
        match = gap <= atol
        if seg.critical:
            critical_ok &= match
        else:
            non_matches.append(match)
            worst = max(worst, gap)
    if clip.label == "real":
        ok = critical_ok and all(non_matches)
    else:
        ok = critical_ok and bool(non_matches) and not all(non_matches)
    return AuditReport(critical_ok, non_matches, ok, worst)


def clip_plan(config: GenConfig, n_real: int | None = None, n_fake: int | None = None, offset: int = 0):
    """(index, label, fake_mode) for every clip, reals first, fake modes alternating."""
    n_real = config.n_real if n_real is None else n_real
    n_fake = config.n_fake if n_fake is None else n_fake
    plan = [(offset + i, "real", "none") for i in range(n_real)]
    for j in range(n_fake):
        plan.append((offset + n_real + j, "fake", config.fake_modes[j % len(config.fake_modes)]))
    return plan


def _plan_clip(config: GenConfig, item) -> ClipTriplet:
    index, label, mode = item
    return generate_clip(config, clip_seed(config.seed, index), label, mode, clip_id=f"{label}-{index:06d}")


def generate_clips(
    config: GenConfig,
    n_real: int | None = None,
    n_fake: int | None = None,
    offset: int = 0,
    workers: int = 1,
) -> Iterable[ClipTriplet]:
    """Generate clips in plan order; each clip's seed depends only on (config.seed, index).

    With ``workers > 1`` clips are rendered in a process pool; the output is
    identical to the serial run.
    """
    plan = clip_plan(config, n_real, n_fake, offset)
    if workers <= 1:
        for item in plan:
            yield _plan_clip(config, item)
        return
    with ProcessPoolExecutor(workers) as pool:
        yield from pool.map(partial(_plan_clip, config), plan, chunksize=16)


def assign_splits(n: int) -> list[str]:
    """8:1:1 train/val/test; val and test each get floor(n/10) (at least 1 once n >= 3)."""
    k = n // 10
    if n >= 3:
        k = max(k, 1)
    return ["val"] * k + ["test"] * k + ["train"] * (n - 2 * k)


# ---------------------------------------------------------------------------
# on-disk corpus


_DTYPES = {"f32": np.dtype("<f4"), "u8": np.dtype("u1")}


def write_array(path: Path, arr: np.ndarray, kind: str) -> None:
    header = f"{kind} " + " ".join(str(s) for s in arr.shape) + "\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(np.ascontiguousarray(arr, dtype=_DTYPES[kind]).tobytes())


def read_array(path: Path) -> np.ndarray:
    try:
        with open(path, "rb") as fh:
            header = fh.readline().decode("ascii").split()
            body = fh.read()
    except OSError as exc:
        raise DecodeError(f"{path}: {exc.strerror}") from exc
    except UnicodeDecodeError:
        raise DecodeError(f"{path}: header is not ASCII") from None
    if not header or header[0] not in _DTYPES:
        raise DecodeError(f"{path}: unknown array header {header!r}")
    try:
        shape = tuple(int(s) for s in header[1:])
    except ValueError:
        raise DecodeError(f"{path}: malformed shape in header {header!r}") from None
    dtype = _DTYPES[header[0]]
    expected = int(np.prod(shape)) * dtype.itemsize
    if len(body) != expected:
        raise DecodeError(f"{path}: expected {expected} payload bytes, found {len(body)}")
    return np.frombuffer(body, dtype=dtype).reshape(shape).copy()


def write_clip(root: Path, clip: ClipTriplet) -> str:
    d = Path(root) / clip.clip_id
    try:
        d.mkdir(parents=True, exist_ok=True)
        write_array(d / "audio.f32", clip.waveform, "f32")
        write_array(d / "viseme.u8", clip.viseme_video, "u8")
        write_array(d / "face.u8", clip.face_video, "u8")
        (d / "align.jsonl").write_text(clip.timeline.to_jsonl(), encoding="utf-8")
    except OSError as exc:
        raise OSError(exc.errno, f"writing clip {clip.clip_id}: {exc.strerror}", str(d)) from exc
    h = hashlib.sha256()
    for name in ("audio.f32", "viseme.u8", "face.u8", "align.jsonl"):
        h.update((d / name).read_bytes())
    return h.hexdigest()


def generate_corpus(config: GenConfig, root, workers: int = 1) -> dict:
    """Write every clip plus ``manifest.json`` under ``root`` and return the manifest."""
    root = Path(root)
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(exc.errno, f"creating corpus root: {exc.strerror}", str(root)) from exc
    entries = []
    plan = clip_plan(config)
    by_label: dict[str, list[int]] = {"real": [], "fake": []}
    for pos, (_, label, _) in enumerate(plan):
        by_label[label].append(pos)
    split_of = {}
    for positions in by_label.values():
        for pos, split in zip(positions, assign_splits(len(positions))):
            split_of[pos] = split
    for pos, clip in enumerate(generate_clips(config, workers=workers)):
        digest = write_clip(root, clip)
        entries.append(
            {
                "id": clip.clip_id,
                "label": clip.label,
                "fake_mode": clip.fake_mode,
                "split": split_of[pos],
                "seed": clip.seed,
                "duration_ms": clip.duration_ms,
                "sha256": digest,
            }
        )
    manifest = {"version": MANIFEST_VERSION, "config": config.to_dict(), "clips": entries}
    (root / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True), encoding="utf-8")
    return manifest


def manifest_digest(manifest: dict) -> str:
    return hashlib.sha256(json.dumps(manifest, sort_keys=True).encode()).hexdigest()


def load_manifest(root) -> dict:
    path = Path(root) / "manifest.json"
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DecodeError(f"{path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise DecodeError(f"{path}: {exc}") from None
    if manifest.get("version") != MANIFEST_VERSION:
        raise DecodeError(f"{path}: unsupported manifest version {manifest.get('version')!r}")
    return manifest


def read_clip(root, entry: dict, config: GenConfig | None = None) -> ClipTriplet:
    d = Path(root) / entry["id"]
    align = d / "align.jsonl"
    try:
        text = align.read_text(encoding="utf-8")
    except OSError as exc:
        raise DecodeError(f"{align}: {exc.strerror}") from exc
    timeline = parse_alignment(text, clip_id=entry["id"], total_ms=entry["duration_ms"])
    sr = config.sample_rate if config else 16000
    fps = config.fps if config else 25
    try:
        return ClipTriplet(
            clip_id=entry["id"],
            waveform=read_array(d / "audio.f32"),
            viseme_video=read_array(d / "viseme.u8"),
            face_video=read_array(d / "face.u8"),
            timeline=timeline,
            label=entry["label"],
            fake_mode=entry["fake_mode"],
            seed=entry["seed"],
            sample_rate=sr,
            fps=fps,
        )
    except ValidationError as exc:
        raise DecodeError(f"{d}: {exc}") from None


def iter_corpus(root, split: str | None = None) -> Iterable[ClipTriplet]:
    manifest = load_manifest(root)
    config = GenConfig.from_dict(manifest["config"])
    for entry in manifest["clips"]:
        if split is None or entry["split"] == split:
            yield read_clip(root, entry, config)


def with_counts(config: GenConfig, n_real: int, n_fake: int, seed: int | None = None) -> GenConfig:
    return replace(config, n_real=n_real, n_fake=n_fake, seed=config.seed if seed is None else seed)
