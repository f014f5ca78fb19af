"""Phoneme timelines: alignment parsing, criticality, and clip slicing.

Alignment files are UTF-8 JSON lines, one record per phoneme::

    {"phoneme": "m", "start_ms": 120, "end_ms": 180}

Fifteen phoneme labels are "critical": their lip shape is tightly
constrained, so lip-sync forgers calibrate them. They fall into six
viseme classes. Every other label is non-critical.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable

from .errors import ParseError, ValidationError

if TYPE_CHECKING:
    from .synthcorpus import ClipTriplet

VISEME_CLASSES: dict[int, tuple[str, ...]] = {
    1: ("ay", "ah"),
    2: ("ey", "eh"),
    3: ("er",),
    4: ("ch", "sh", "jh", "zh"),
    5: ("f", "v"),
    6: ("m", "b", "p", "em"),
}

CRITICAL_PHONEMES: dict[str, int] = {
    label: cls for cls, labels in VISEME_CLASSES.items() for label in labels
}


@dataclass(frozen=True)
class Criticality:
    """``viseme_class`` is 1..6 for critical phonemes and None otherwise."""

    viseme_class: int | None = None

    @property
    def critical(self) -> bool:
        return self.viseme_class is not None


NON_CRITICAL = Criticality(None)


def classify_phoneme(label: str) -> Criticality:
    """Map a phoneme label to its criticality. Unknown labels are non-critical."""
    if not label:
        raise ValueError("phoneme label must be non-empty")
    cls = CRITICAL_PHONEMES.get(label.strip().lower())
    return Criticality(cls) if cls is not None else NON_CRITICAL


@dataclass(frozen=True)
class PhonemeSegment:
    label: str
    start_ms: int
    end_ms: int
    criticality: Criticality = field(default=NON_CRITICAL)

    def __post_init__(self):
        if self.start_ms < 0:
            raise ValidationError(f"start_ms must be >= 0, got {self.start_ms}")
        if self.end_ms <= self.start_ms:
            raise ValidationError(
                f"segment {self.label!r} has end_ms {self.end_ms} <= start_ms {self.start_ms}"
            )

    @classmethod
    def make(cls, label: str, start_ms: int, end_ms: int) -> "PhonemeSegment":
        label = label.strip().lower()
        return cls(label, int(start_ms), int(end_ms), classify_phoneme(label))

    @property
    def critical(self) -> bool:
        return self.criticality.critical

    @property
    def duration_ms(self) -> int:
        return self.end_ms - self.start_ms


@dataclass(frozen=True)
class SegmentTimeline:
    clip_id: str
    total_ms: int
    segments: tuple[PhonemeSegment, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        _check_order(self.segments)
        for seg in self.segments:
            if seg.end_ms > self.total_ms:
                raise ValidationError(
                    f"segment {seg.label!r} ends at {seg.end_ms} ms past total {self.total_ms} ms"
                )

    def __len__(self) -> int:
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps({"phoneme": s.label, "start_ms": s.start_ms, "end_ms": s.end_ms}) + "\n"
            for s in self.segments
        )


def _check_order(segments: Iterable[PhonemeSegment]) -> None:
    prev = None
    for seg in segments:
        if prev is not None:
            if seg.start_ms < prev.start_ms:
                raise ValidationError(
                    f"segment {seg.label!r}@{seg.start_ms} is out of order after "
                    f"{prev.label!r}@{prev.start_ms}"
                )
            if seg.start_ms < prev.end_ms:
                raise ValidationError(
                    f"segment {seg.label!r} [{seg.start_ms}, {seg.end_ms}) overlaps "
                    f"{prev.label!r} [{prev.start_ms}, {prev.end_ms})"
                )
        prev = seg


def parse_alignment(
    stream: Iterable[str] | str, clip_id: str = "", total_ms: int | None = None
) -> SegmentTimeline:
    """Parse line-delimited alignment records into a timeline.

    ``stream`` is any iterable of lines (an open file works) or a whole
    string. Blank lines are skipped. When ``total_ms`` is omitted the
    timeline ends at the last segment's end.
    """
    if isinstance(stream, str):
        stream = stream.splitlines()
    segments = []
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON ({exc.msg})", lineno) from None
        if not isinstance(rec, dict):
            raise ParseError("record must be a JSON object", lineno)
        missing = [k for k in ("phoneme", "start_ms", "end_ms") if k not in rec]
        if missing:
            raise ParseError(f"missing key(s) {', '.join(missing)}", lineno)
        label, start, end = rec["phoneme"], rec["start_ms"], rec["end_ms"]
        if not isinstance(label, str) or not label.strip():
            raise ParseError("phoneme must be a non-empty string", lineno)
        for name, value in (("start_ms", start), ("end_ms", end)):
            if isinstance(value, bool) or not isinstance(value, int):
                raise ParseError(f"{name} must be an integer, got {value!r}", lineno)
        try:
            segments.append(PhonemeSegment.make(label, start, end))
        except ValidationError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from None
    if total_ms is None:
        total_ms = segments[-1].end_ms if segments else 0
    return SegmentTimeline(clip_id, total_ms, tuple(segments))


def filter_noncritical(timeline: SegmentTimeline) -> SegmentTimeline:
    return SegmentTimeline(
        timeline.clip_id,
        timeline.total_ms,
        tuple(s for s in timeline.segments if not s.critical),
    )


@dataclass(frozen=True)
class SegmentSlice:
    segment: PhonemeSegment
    audio_span: tuple[int, int]
    frame_span: tuple[int, int]


def ms_to_span(start_ms: int, end_ms: int, rate: float, limit: int) -> tuple[int, int]:
    """Half-open index span covering [start_ms, end_ms) at ``rate`` per second.

    Start is floored and end ceiled so no interior sample is lost; both
    ends are clamped to ``[0, limit]``. Integer arithmetic when possible.
    """
    if float(rate).is_integer():
        r = int(rate)
        lo = (start_ms * r) // 1000
        hi = -((-end_ms * r) // 1000)
    else:
        lo = math.floor(start_ms * rate / 1000)
        hi = math.ceil(end_ms * rate / 1000)
    return max(0, min(lo, limit)), max(0, min(hi, limit))


def slice_clip(clip: "ClipTriplet", timeline: SegmentTimeline) -> list[SegmentSlice]:
    n_samples = len(clip.waveform)
    n_frames = len(clip.viseme_video)
    clip_ms = 1000.0 * n_frames / clip.fps
    frame_ms = 1000.0 / clip.fps
    if abs(timeline.total_ms - clip_ms) > frame_ms + 1e-9:
        raise ValidationError(
            f"timeline spans {timeline.total_ms} ms but clip {clip.clip_id!r} "
            f"lasts {clip_ms:g} ms (tolerance one frame, {frame_ms:g} ms)"
        )
    slices = []
    for seg in timeline.segments:
        a = ms_to_span(seg.start_ms, seg.end_ms, clip.sample_rate, n_samples)
        f = ms_to_span(seg.start_ms, seg.end_ms, clip.fps, n_frames)
        if a[1] <= a[0] or f[1] <= f[0]:
            continue
        slices.append(SegmentSlice(seg, a, f))
    return slices
