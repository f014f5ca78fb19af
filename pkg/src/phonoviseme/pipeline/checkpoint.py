"""Versioned parameter archives.

An archive is an uncompressed ``.npz`` holding one array per named tensor
(``encoder.blocks.0.attn.qkv.weight`` style names), plus a JSON header
array with the format version and the model config. Pickle is never used.
"""

from __future__ import annotations

import json
import zipfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from ..errors import DecodeError, ValidationError
from .model import Detector, ModelConfig

FORMAT_VERSION = "phonoviseme-params/1"
_HEADER = "__header__"


@dataclass
class ModelParams:
    tensors: dict[str, np.ndarray]
    config: dict
    version: str = FORMAT_VERSION

    def __post_init__(self):
        for name, arr in self.tensors.items():
            if arr.dtype.kind == "f" and not np.isfinite(arr).all():
                raise ValidationError(f"tensor {name!r} has non-finite entries")

    @classmethod
    def from_model(cls, model: Detector) -> "ModelParams":
        tensors = {k: v.detach().cpu().numpy().copy() for k, v in model.state_dict().items()}
        return cls(tensors, model.config.to_dict())

    def to_model(self) -> Detector:
        model = Detector(ModelConfig.from_dict(self.config))
        expected = set(model.state_dict())
        missing = sorted(expected - set(self.tensors))
        extra = sorted(set(self.tensors) - expected)
        if missing or extra:
            raise DecodeError(f"archive tensors do not match the model: missing {missing}, unexpected {extra}")
        state = {k: torch.from_numpy(np.array(v)) for k, v in self.tensors.items()}
        model.load_state_dict(state)
        return model

    def equals(self, other: "ModelParams") -> bool:
        """Bitwise equality of every tensor, plus identical names, config and version."""
        if self.version != other.version or self.config != other.config:
            return False
        if self.tensors.keys() != other.tensors.keys():
            return False
        return all(
            a.dtype == b.dtype and a.shape == b.shape and a.tobytes() == b.tobytes()
            for a, b in ((self.tensors[k], other.tensors[k]) for k in self.tensors)
        )


def save_params(params: ModelParams | Detector, path) -> Path:
    if isinstance(params, Detector):
        params = ModelParams.from_model(params)
    path = Path(path)
    header = json.dumps({"version": params.version, "config": params.config}, sort_keys=True)
    arrays = dict(params.tensors)
    if _HEADER in arrays:
        raise ValidationError(f"tensor name {_HEADER!r} is reserved")
    arrays[_HEADER] = np.frombuffer(header.encode("utf-8"), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    return path


def load_params(path, expected_version: str = FORMAT_VERSION) -> ModelParams:
    path = Path(path)
    try:
        with np.load(path, allow_pickle=False) as archive:
            arrays = {k: archive[k] for k in archive.files}
    except FileNotFoundError:
        raise
    except (zipfile.BadZipFile, ValueError, EOFError, OSError, KeyError) as exc:
        raise DecodeError(f"{path}: not a readable parameter archive ({exc})") from None
    if _HEADER not in arrays:
        raise DecodeError(f"{path}: archive has no header")
    try:
        header = json.loads(arrays.pop(_HEADER).tobytes().decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DecodeError(f"{path}: corrupt header ({exc})") from None
    version = header.get("version")
    if version != expected_version:
        raise DecodeError(f"{path}: archive version {version!r}, expected {expected_version!r}")
    return ModelParams(arrays, header["config"], version)


def load_model(path) -> Detector:
    return load_params(path).to_model()
