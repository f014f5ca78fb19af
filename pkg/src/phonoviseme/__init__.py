"""Lip-sync forgery screening from phoneme-viseme alignment.

Submodules: ``screening`` (alignment parsing and critical-phoneme filtering),
``tokenizer``, ``encoder``, ``common_space``, ``objectives``, ``pvam``,
``synthcorpus`` (synthetic talking-mouth corpus), ``pipeline`` (training and
evaluation) and ``repro`` (named experiments behind the acceptance suite).
"""

from .errors import (
    ConfigError,
    DecodeError,
    DomainError,
    EmptyInputError,
    ParseError,
    PhonovisemeError,
    ShapeError,
    ValidationError,
)
from .screening import PhonemeSegment, SegmentTimeline, filter_noncritical, parse_alignment
from .synthcorpus import GenConfig, generate_corpus, iter_corpus

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DecodeError", "DomainError", "EmptyInputError", "GenConfig", "ParseError",
    "PhonemeSegment", "PhonovisemeError", "SegmentTimeline", "ShapeError", "ValidationError",
    "filter_noncritical", "generate_corpus", "iter_corpus", "parse_alignment",
]
