import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phonoviseme.errors import ParseError, ValidationError
from phonoviseme.screening import (
    CRITICAL_PHONEMES,
    PhonemeSegment,
    SegmentTimeline,
    classify_phoneme,
    filter_noncritical,
    ms_to_span,
    parse_alignment,
    slice_clip,
)
from phonoviseme.synthcorpus import ClipTriplet


def _clip(total_ms=1000, sr=16000, fps=25):
    n_frames = total_ms * fps // 1000
    return ClipTriplet(
        clip_id="c",
        waveform=np.zeros(total_ms * sr // 1000, np.float32),
        viseme_video=np.zeros((n_frames, 4, 4, 3), np.uint8),
        face_video=np.zeros((n_frames, 4, 4, 3), np.uint8),
        timeline=SegmentTimeline("c", total_ms),
        sample_rate=sr,
        fps=fps,
    )


def test_parse_single_critical_record():
    tl = parse_alignment('{"phoneme":"m","start_ms":120,"end_ms":180}\n')
    (seg,) = tl.segments
    assert (seg.label, seg.start_ms, seg.end_ms) == ("m", 120, 180)
    assert seg.critical and seg.criticality.viseme_class == 6


def test_parse_empty_stream():
    assert len(parse_alignment(io.StringIO(""))) == 0
    assert len(parse_alignment([])) == 0


def test_parse_overlap_is_validation_error():
    lines = [
        '{"phoneme":"aa","start_ms":0,"end_ms":100}',
        '{"phoneme":"b","start_ms":90,"end_ms":150}',
    ]
    with pytest.raises(ValidationError, match="overlaps"):
        parse_alignment(lines)


def test_parse_out_of_order_is_validation_error():
    lines = [
        '{"phoneme":"aa","start_ms":100,"end_ms":150}',
        '{"phoneme":"b","start_ms":0,"end_ms":50}',
    ]
    with pytest.raises(ValidationError, match="out of order"):
        parse_alignment(lines)


@pytest.mark.parametrize(
    "line",
    [
        "not json",
        '["m", 1, 2]',
        '{"phoneme":"m","start_ms":1}',
        '{"phoneme":"m","start_ms":"1","end_ms":2}',
        '{"phoneme":"","start_ms":1,"end_ms":2}',
        '{"phoneme":"m","start_ms":1.5,"end_ms":2}',
    ],
)
def test_malformed_line_reports_line_number(line):
    text = '{"phoneme":"aa","start_ms":0,"end_ms":10}\n\n' + line + "\n"
    with pytest.raises(ParseError) as info:
        parse_alignment(text)
    assert info.value.line == 3
    assert "line 3" in str(info.value)


def test_parse_end_before_start():
    with pytest.raises(ValidationError):
        parse_alignment('{"phoneme":"aa","start_ms":10,"end_ms":10}')


def test_timeline_rejects_segment_past_total():
    with pytest.raises(ValidationError):
        SegmentTimeline("x", 100, (PhonemeSegment.make("aa", 50, 120),))


@pytest.mark.parametrize(
    "label, cls",
    [("ay", 1), ("ah", 1), ("ey", 2), ("eh", 2), ("er", 3), ("ch", 4), ("sh", 4), ("jh", 4),
     ("zh", 4), ("f", 5), ("v", 5), ("m", 6), ("b", 6), ("p", 6), ("em", 6)],
)
def test_critical_table(label, cls):
    assert classify_phoneme(label).viseme_class == cls


@pytest.mark.parametrize("label", ["re", "ar", "e", "aa", "iy", "t", "mb", "xyz"])
def test_non_critical(label):
    assert not classify_phoneme(label).critical


def test_exactly_fifteen_critical_labels():
    assert len(CRITICAL_PHONEMES) == 15
    assert sorted(CRITICAL_PHONEMES.values()) == [1, 1, 2, 2, 3, 4, 4, 4, 4, 5, 5, 6, 6, 6, 6]


def test_classify_is_case_insensitive():
    assert classify_phoneme("M").viseme_class == 6


def test_classify_rejects_empty():
    with pytest.raises(ValueError):
        classify_phoneme("")


def _timeline(labels, dur=50):
    segs = tuple(PhonemeSegment.make(l, i * dur, (i + 1) * dur) for i, l in enumerate(labels))
    return SegmentTimeline("t", dur * len(labels), segs)


def test_filter_only_critical_gives_empty():
    assert len(filter_noncritical(_timeline(["m", "b", "p", "f"]))) == 0


def test_filter_keeps_noncritical_in_order():
    out = filter_noncritical(_timeline(["p", "re", "ar"]))
    assert [s.label for s in out] == ["re", "ar"]


labels = st.sampled_from(sorted(CRITICAL_PHONEMES) + ["aa", "iy", "re", "ar", "e", "t", "k"])


@given(st.lists(labels, max_size=30))
def test_filter_properties(seq):
    tl = _timeline(seq)
    out = filter_noncritical(tl)
    assert filter_noncritical(out) == out
    assert not any(s.critical for s in out)
    assert len(out) + sum(s.critical for s in tl) == len(tl)


def test_ms_to_span_floor_ceil():
    assert ms_to_span(0, 1000, 16000, 16000) == (0, 16000)
    # 120 ms * 25 fps = 3.0 frames, 180 ms -> 4.5 frames
    assert ms_to_span(120, 180, 25, 100) == (3, 5)
    assert ms_to_span(10, 30, 44.1, 10**6) == (0, 2)


def test_slice_clip_spans():
    clip = _clip()
    tl = SegmentTimeline("c", 1000, (PhonemeSegment.make("aa", 0, 1000),))
    (sl,) = slice_clip(clip, tl)
    assert sl.audio_span == (0, 16000)
    assert sl.frame_span == (0, 25)
    tl = SegmentTimeline("c", 1000, (PhonemeSegment.make("m", 120, 180),))
    assert slice_clip(clip, tl)[0].frame_span == (3, 5)


def test_slice_drops_segment_past_clip_end():
    clip = _clip(total_ms=1000)
    tl = SegmentTimeline(
        "c", 1040, (PhonemeSegment.make("aa", 0, 500), PhonemeSegment.make("iy", 1005, 1040))
    )
    out = slice_clip(clip, tl)
    assert [s.segment.label for s in out] == ["aa"]


def test_slice_duration_mismatch():
    clip = _clip(total_ms=1000)
    tl = SegmentTimeline("c", 1100, (PhonemeSegment.make("aa", 0, 500),))
    with pytest.raises(ValidationError):
        slice_clip(clip, tl)


@settings(max_examples=60)
@given(
    st.lists(st.integers(1, 120), min_size=1, max_size=15),
    st.sampled_from([8000, 16000, 48000]),
    st.sampled_from([24, 25, 30]),
)
def test_slices_of_disjoint_segments(durs, sr, fps):
    bounds = np.concatenate([[0], np.cumsum(durs)])
    total = int(bounds[-1])
    segs = tuple(PhonemeSegment.make("aa", int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]))
    tl = SegmentTimeline("c", total, segs)
    n_frames = total * fps // 1000
    clip = ClipTriplet(
        "c",
        np.zeros(total * sr // 1000, np.float32),
        np.zeros((n_frames, 2, 2, 3), np.uint8),
        np.zeros((n_frames, 2, 2, 3), np.uint8),
        SegmentTimeline("c", total),
        sample_rate=sr,
        fps=fps,
    )
    out = slice_clip(clip, tl)
    for a, b in zip(out, out[1:]):
        # whole samples per millisecond: audio spans never overlap
        assert a.audio_span[1] <= b.audio_span[0]
        # a frame straddling a boundary is kept by both neighbours
        assert a.frame_span[1] - b.frame_span[0] <= 1
    for s in out:
        assert 0 <= s.audio_span[0] < s.audio_span[1] <= len(clip.waveform)
        assert 0 <= s.frame_span[0] < s.frame_span[1] <= n_frames


def test_jsonl_roundtrip():
    tl = _timeline(["aa", "m", "iy"])
    back = parse_alignment(tl.to_jsonl(), clip_id="t", total_ms=tl.total_ms)
    assert back == tl
    assert json.loads(tl.to_jsonl().splitlines()[1])["phoneme"] == "m"
