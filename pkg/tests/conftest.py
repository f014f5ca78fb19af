import pytest

from phonoviseme.encoder import EncoderConfig
from phonoviseme.pipeline.model import ModelConfig
from phonoviseme.synthcorpus import GenConfig, generate_clips


def tiny_model_config(**changes) -> ModelConfig:
    d = changes.get("d", 16)
    enc = EncoderConfig(n_blocks=2, n_heads=2, d=d, window=8, shift=4)
    base = dict(d=d, d_c=16, max_segments=2, audio_encoder=enc, video_encoder=enc, face_encoder=enc)
    base.update(changes)
    return ModelConfig(**base)


@pytest.fixture(scope="session")
def tiny_config() -> ModelConfig:
    return tiny_model_config()


@pytest.fixture(scope="session")
def small_clips():
    """Six real and six fake one-second clips."""
    return list(generate_clips(GenConfig(seed=3), 6, 6))


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
