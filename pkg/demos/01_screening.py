"""From an alignment file to the segments the detector actually looks at.

Critical phonemes (bilabials, labiodentals and a few vowels) are the ones a
lip-sync forger gets right, so they carry little evidence and are dropped.
What remains is cut out of the audio and both video streams.

    python demos/01_screening.py
"""

from phonoviseme.screening import filter_noncritical, parse_alignment, slice_clip
from phonoviseme.synthcorpus import GenConfig, generate_clip

ALIGNMENT = """\
{"phoneme": "m", "start_ms": 0, "end_ms": 80}
{"phoneme": "aa", "start_ms": 80, "end_ms": 200}
{"phoneme": "p", "start_ms": 200, "end_ms": 260}
{"phoneme": "iy", "start_ms": 260, "end_ms": 400}
"""

timeline = parse_alignment(ALIGNMENT, clip_id="hand-written")
for seg in timeline.segments:
    tag = f"critical (viseme class {seg.criticality.viseme_class})" if seg.critical else "kept"
    print(f"{seg.label:>3} {seg.start_ms:4d}-{seg.end_ms:<4d} ms  {tag}")

# A synthetic clip comes with its own timeline; slice it after screening.
config = GenConfig(seed=0)
clip = generate_clip(config, seed=5, label="fake", fake_mode="lip_only")
kept = filter_noncritical(clip.timeline)
print(f"\n{clip.clip_id}: {len(clip.timeline.segments)} segments, {len(kept.segments)} non-critical")
print(f"waveform {clip.waveform.shape} @ {clip.sample_rate} Hz, viseme video {clip.viseme_video.shape} @ {clip.fps} fps")
for sl in slice_clip(clip, kept)[:5]:
    print(f"  {sl.segment.label:>3}: samples {sl.audio_span}, frames {sl.frame_span}")
