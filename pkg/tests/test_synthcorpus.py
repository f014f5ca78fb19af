import json
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phonoviseme.errors import ConfigError, DecodeError, ValidationError
from phonoviseme.screening import classify_phoneme
from phonoviseme.synthcorpus import (
    GenConfig,
    assign_splits,
    audit_clip,
    clip_plan,
    generate_clip,
    generate_clips,
    generate_corpus,
    iter_corpus,
    load_manifest,
    manifest_digest,
    read_array,
    signatures,
    write_array,
)

CFG = GenConfig()


def _same(a, b):
    return (
        np.array_equal(a.waveform, b.waveform)
        and np.array_equal(a.viseme_video, b.viseme_video)
        and np.array_equal(a.face_video, b.face_video)
        and a.timeline == b.timeline
    )


@pytest.mark.parametrize("label, mode", [("real", "none"), ("fake", "av_desync"), ("fake", "lip_only")])
def test_generation_is_deterministic(label, mode):
    assert _same(generate_clip(CFG, 11, label, mode), generate_clip(CFG, 11, label, mode))


def test_different_seeds_differ():
    assert not _same(generate_clip(CFG, 1), generate_clip(CFG, 2))


def test_shapes_and_durations():
    clip = generate_clip(CFG, 3)
    assert clip.waveform.shape == (16000,)
    assert clip.viseme_video.shape == (25, 32, 32, 3) and clip.viseme_video.dtype == np.uint8
    assert clip.face_video.shape == (25, 32, 32, 3)
    assert clip.timeline.total_ms == 1000
    assert clip.timeline.segments[-1].end_ms == 1000


def _frame_audio_labels(clip):
    centres = (np.arange(len(clip.frame_phonemes)) + 0.5) * 1000 / clip.fps
    out = []
    for c in centres:
        (seg,) = [s for s in clip.timeline.segments if s.start_ms <= c < s.end_ms]
        out.append(seg.label)
    return out


@pytest.mark.parametrize("seed", range(5))
def test_real_clip_consistent_everywhere(seed):
    clip = generate_clip(CFG, seed)
    assert list(clip.frame_phonemes) == _frame_audio_labels(clip)
    report = audit_clip(clip, CFG)
    assert report.ok and report.critical_match and all(report.noncritical_match)


@pytest.mark.parametrize("mode", ["av_desync", "lip_only"])
@pytest.mark.parametrize("seed", range(5))
def test_fake_calibrated_on_critical_only(mode, seed):
    clip = generate_clip(CFG, seed, "fake", mode)
    audio = _frame_audio_labels(clip)
    for shown, heard in zip(clip.frame_phonemes, audio):
        if classify_phoneme(heard).critical:
            assert shown == heard
    assert any(s != h for s, h in zip(clip.frame_phonemes, audio) if not classify_phoneme(h).critical)
    report = audit_clip(clip, CFG)
    assert report.ok and report.critical_match and not all(report.noncritical_match)


def test_lip_only_keeps_audio():
    real = generate_clip(CFG, 21)
    fake = generate_clip(CFG, 21, "fake", "lip_only")
    assert [s.label for s in real.timeline.segments] == [s.label for s in fake.timeline.segments]


def test_bilabials_close_the_lips():
    sigs = signatures(CFG)
    for p in ("m", "b", "p"):
        assert sigs[p].aperture < 0.05
    assert min(s.aperture for l, s in sigs.items() if l not in ("m", "b", "p")) >= 0.25
    tones = [s.tones for s in sigs.values()]
    assert len(set(tones)) == len(tones)


def test_ground_truth_mismatch_probe_is_perfect():
    """A threshold on the worst non-critical aperture gap separates the labels."""
    clips = list(generate_clips(CFG, 30, 30, offset=100))
    gaps = np.array([audit_clip(c, CFG).max_noncritical_mismatch for c in clips])
    labels = np.array([c.is_fake for c in clips])
    assert gaps[~labels].max() < gaps[labels].min()


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(critical=("m", "b")),
        dict(noncritical=("aa", "iy")),
        dict(critical=("m", "b", "aa")),
        dict(noncritical=("aa", "iy", "m")),
        dict(duration_ms=40),
        dict(duration_ms=1010),
        dict(phoneme_ms=(0, 10)),
        dict(fake_modes=("swap",)),
        dict(n_real=-1),
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        GenConfig(**kwargs)


def test_generate_clip_argument_errors():
    with pytest.raises(ConfigError):
        generate_clip(CFG, 0, "real", "lip_only")
    with pytest.raises(ConfigError):
        generate_clip(CFG, 0, "fake", "none")


def test_config_roundtrip():
    cfg = GenConfig(n_real=3, critical=("m", "b", "p", "f"))
    assert GenConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg
    assert cfg.digest() == GenConfig.from_dict(cfg.to_dict()).digest()
    assert cfg.digest() != CFG.digest()


def test_plan_order():
    plan = clip_plan(GenConfig(n_real=2, n_fake=3))
    assert plan == [
        (0, "real", "none"),
        (1, "real", "none"),
        (2, "fake", "av_desync"),
        (3, "fake", "lip_only"),
        (4, "fake", "av_desync"),
    ]


def test_parallel_generation_matches_serial():
    cfg = GenConfig(n_real=6, n_fake=6)
    serial = list(generate_clips(cfg))
    parallel = list(generate_clips(cfg, workers=2))
    assert all(_same(a, b) for a, b in zip(serial, parallel)) and len(parallel) == 12


def test_splits_8_real():
    assert sorted(assign_splits(8)) == ["test"] + ["train"] * 6 + ["val"]


@given(st.integers(0, 5000))
def test_split_arithmetic(n):
    s = assign_splits(n)
    assert len(s) == n
    k = s.count("val")
    assert k == s.count("test")
    assert k == (max(1, n // 10) if n >= 3 else 0)


def test_corpus_roundtrip(tmp_path):
    cfg = GenConfig(n_real=8, n_fake=4, seed=5)
    manifest = generate_corpus(cfg, tmp_path / "c")
    assert len(manifest["clips"]) == 12
    labels = [e["label"] for e in manifest["clips"]]
    assert labels.count("real") == 8 and labels.count("fake") == 4
    real_splits = sorted(e["split"] for e in manifest["clips"] if e["label"] == "real")
    assert real_splits == ["test"] + ["train"] * 6 + ["val"]
    for entry in manifest["clips"]:
        for name in ("audio.f32", "viseme.u8", "face.u8", "align.jsonl"):
            assert (tmp_path / "c" / entry["id"] / name).exists()
    assert load_manifest(tmp_path / "c") == manifest
    reread = list(iter_corpus(tmp_path / "c"))
    fresh = list(generate_clips(cfg))
    assert all(_same(a, b) for a, b in zip(reread, fresh))
    assert [c.clip_id for c in iter_corpus(tmp_path / "c", "test")] == [
        e["id"] for e in manifest["clips"] if e["split"] == "test"
    ]
    again = generate_corpus(cfg, tmp_path / "d")
    assert manifest_digest(again) == manifest_digest(manifest)


def test_array_header_roundtrip(tmp_path):
    a = np.random.default_rng(0).normal(size=(3, 4)).astype(np.float32)
    write_array(tmp_path / "a.f32", a, "f32")
    first = (tmp_path / "a.f32").read_bytes().split(b"\n", 1)[0]
    assert first == b"f32 3 4"
    np.testing.assert_array_equal(read_array(tmp_path / "a.f32"), a)


@pytest.mark.parametrize("content", [b"f64 2\n" + b"\0" * 16, b"f32 2 x\n", b"f32 4\n" + b"\0" * 8, b"\xff\xfe\n"])
def test_array_decode_errors(tmp_path, content):
    (tmp_path / "x").write_bytes(content)
    with pytest.raises(DecodeError):
        read_array(tmp_path / "x")


def test_manifest_errors(tmp_path):
    with pytest.raises(DecodeError):
        load_manifest(tmp_path)
    (tmp_path / "manifest.json").write_text('{"version": 9, "clips": []}')
    with pytest.raises(DecodeError):
        load_manifest(tmp_path)


def test_clip_duration_validation():
    clip = generate_clip(CFG, 0)
    with pytest.raises(ValidationError):
        replace(clip, waveform=clip.waveform[:8000])
    with pytest.raises(ValidationError):
        replace(clip, fake_mode="lip_only")
