import math

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from phonoviseme.errors import CapacityError, EmptyInputError, ShapeError
from phonoviseme.tokenizer import (
    AudioTokenizer,
    PatchSpec,
    VideoTokenizer,
    patchify_audio,
    patchify_video,
    tokenize_audio,
    tokenize_video,
)


def zero_pos(tok):
    with torch.no_grad():
        tok.pos.zero_()
    return tok


def test_audio_token_count():
    spec = PatchSpec(audio_patch=400, d=8)
    tok = AudioTokenizer(spec, max_tokens=64)
    seq = tokenize_audio(np.random.default_rng(0).normal(size=16000), spec, tok)
    assert seq.tokens.shape == (40, 8)
    assert seq.modality == "phoneme"
    assert seq.positions.tolist() == list(range(40))


def test_audio_zero_input_gives_zero_tokens():
    spec = PatchSpec(audio_patch=400, d=8)
    tok = zero_pos(AudioTokenizer(spec, max_tokens=64))
    assert torch.count_nonzero(tokenize_audio(np.zeros(1000), spec, tok).tokens) == 0


def test_audio_partial_patch_padding():
    x = torch.arange(1, 402, dtype=torch.float64)
    patches = patchify_audio(x, 400)
    assert patches.shape == (2, 400)
    assert patches[1, 0] == 401
    # 399 zero-padded amplitudes in the second patch
    assert int((patches[1] == 0).sum()) == 399


def test_audio_empty_input():
    spec = PatchSpec(d=8)
    with pytest.raises(EmptyInputError):
        tokenize_audio(np.zeros(0), spec, AudioTokenizer(spec, 8))


def test_audio_capacity():
    spec = PatchSpec(audio_patch=10, d=4)
    with pytest.raises(CapacityError):
        AudioTokenizer(spec, max_tokens=3)(np.zeros(31))


def test_video_token_count():
    spec = PatchSpec(tubelet=(2, 8, 8), d=16)
    tok = VideoTokenizer(spec, max_tokens=64)
    seq = tokenize_video(np.random.default_rng(0).random((8, 32, 32, 3)), spec, tok)
    assert seq.tokens.shape == (64, 16)
    assert seq.grid == (4, 4, 4)


def test_video_identical_frames_tokens_repeat_over_time():
    spec = PatchSpec(tubelet=(2, 8, 8), d=16)
    tok = zero_pos(VideoTokenizer(spec, max_tokens=64))
    frame = np.random.default_rng(1).random((1, 32, 32, 3))
    seq = tok(np.repeat(frame, 8, axis=0))
    grid = seq.tokens.reshape(4, 16, 16)
    for t in range(1, 4):
        torch.testing.assert_close(grid[t], grid[0], rtol=0, atol=0)


def test_video_identity_projection_gives_voxel_prefix():
    spec = PatchSpec(tubelet=(1, 2, 2), d=10)
    tok = zero_pos(VideoTokenizer(spec, max_tokens=64))
    with torch.no_grad():
        tok.proj.copy_(torch.eye(spec.voxels, spec.d))
    frames = np.random.default_rng(2).random((2, 4, 6, 3))
    seq = tok(frames)
    # direct flatten oracle: token (t, i, j) holds the voxels of frames[t, 2i:2i+2, 2j:2j+2] in (h, w, c) order
    expected = []
    for t in range(2):
        for i in range(2):
            for j in range(3):
                expected.append(frames[t, 2 * i : 2 * i + 2, 2 * j : 2 * j + 2].reshape(-1)[:10])
    np.testing.assert_allclose(seq.tokens.detach().numpy(), np.array(expected), rtol=0, atol=1e-6)


def test_video_partial_tubelets_zero_padded():
    x = torch.ones(3, 5, 5, 3)
    p = patchify_video(x, (2, 4, 4))
    assert p.shape == (2 * 2 * 2, 2 * 4 * 4 * 3)
    assert float(p.sum()) == 3 * 5 * 5 * 3


def test_video_errors():
    spec = PatchSpec(d=4)
    tok = VideoTokenizer(spec, max_tokens=8)
    with pytest.raises(EmptyInputError):
        tok(np.zeros((0, 8, 8, 3)))
    with pytest.raises(ShapeError):
        tok(np.zeros((2, 8, 8)))
    with pytest.raises(CapacityError):
        tok(np.zeros((4, 32, 32, 3)))


def test_streams_use_separate_weights():
    spec = PatchSpec(d=8)
    a, b = VideoTokenizer(spec, 16, "viseme"), VideoTokenizer(spec, 16, "face")
    assert a.proj.data_ptr() != b.proj.data_ptr()
    assert not torch.equal(a.proj, b.proj)


@settings(max_examples=40, deadline=None)
@given(
    st.integers(1, 9), st.integers(1, 20), st.integers(1, 20),
    st.integers(1, 3), st.integers(1, 6), st.integers(1, 6),
)
def test_video_count_formula(T, H, W, t, h, w):
    spec = PatchSpec(tubelet=(t, h, w), d=3)
    expected = math.ceil(T / t) * math.ceil(H / h) * math.ceil(W / w)
    tok = VideoTokenizer(spec, max_tokens=expected)
    assert len(tok(np.zeros((T, H, W, 3)))) == expected


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3000), st.integers(1, 500))
def test_audio_count_formula(n, patch):
    spec = PatchSpec(audio_patch=patch, d=2)
    expected = math.ceil(n / patch)
    assert len(AudioTokenizer(spec, expected)(np.zeros(n))) == expected


@settings(max_examples=25, deadline=None)
@given(st.floats(-5, 5), st.integers(0, 2**16))
def test_tokenization_is_linear(a, seed):
    rng = np.random.default_rng(seed)
    spec = PatchSpec(audio_patch=7, tubelet=(2, 3, 3), d=5)
    torch.manual_seed(seed)
    at, vt = AudioTokenizer(spec, 8).double(), VideoTokenizer(spec, 32).double()
    x = rng.normal(size=40)
    v = rng.normal(size=(3, 6, 5, 3))
    for tok, inp in ((at, x), (vt, v)):
        base = tok(inp).tokens - tok.pos[: len(tok(inp))]
        scaled = tok(a * inp).tokens - tok.pos[: len(tok(inp))]
        torch.testing.assert_close(scaled, a * base, rtol=1e-10, atol=1e-10)


def test_batched_audio():
    spec = PatchSpec(audio_patch=4, d=3)
    tok = AudioTokenizer(spec, 4)
    x = np.random.default_rng(0).normal(size=(5, 13))
    seq = tok(x)
    assert seq.tokens.shape == (5, 4, 3)
    torch.testing.assert_close(seq.tokens[2], tok(x[2]).tokens)
