"""Binary on-disk format for classifiers and latent decoders.

Layout (all little-endian):

    magic     8 bytes   b"EXLABMD1"
    version   uint32    currently 1
    kind      uint8     1 = classifier, 2 = latent decoder
    act       uint8     0 = tanh, 1 = relu
    n_layers  uint32
    dims      (n_layers + 1) * uint32
    payload   float64[] per layer: weight matrix row-major, then bias
    box       decoders only: latent lows then highs, float64[latent_dim] each
              (part of the checksummed payload)
    checksum  uint32    CRC-32 of every payload byte after the dims block

Files are written atomically (temp file + rename).
"""

from __future__ import annotations

import os
import struct
import zlib

import numpy as np

from .exceptions import ChecksumError, ModelFormatError
from .generator import LatentDecoder
from .models import NeuralClassifier

MAGIC = b"EXLABMD1"
FORMAT_VERSION = 1
_KIND_CLASSIFIER = 1
_KIND_DECODER = 2
_ACT_CODES = {"tanh": 0, "relu": 1}
_ACT_NAMES = {code: name for name, code in _ACT_CODES.items()}


def _atomic_write(path, data: bytes):
    path = os.fspath(path)
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def _pack(kind, activation, weights, biases, extra_payload=b""):
    dims = [weights[0].shape[1]] + [W.shape[0] for W in weights]
    header = MAGIC + struct.pack(
        "<IBBI", FORMAT_VERSION, kind, _ACT_CODES[activation], len(weights)
    )
    header += struct.pack(f"<{len(dims)}I", *dims)
    payload = b"".join(
        np.ascontiguousarray(arr, dtype="<f8").tobytes()
        for W, b in zip(weights, biases)
        for arr in (W, b)
    )
    payload += extra_payload
    return header + payload + struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ModelFormatError("file is truncated")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def floats(self, n: int) -> np.ndarray:
        return np.frombuffer(self.take(8 * n), dtype="<f8").astype(np.float64)


def _unpack(data: bytes, expect_kind: int):
    reader = _Reader(data)
    if reader.take(len(MAGIC)) != MAGIC:
        raise ModelFormatError("bad magic string; not a model file")
    version, kind, act_code, n_layers = struct.unpack("<IBBI", reader.take(10))
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported format version {version}, expected {FORMAT_VERSION}"
        )
    if kind != expect_kind:
        raise ModelFormatError(
            f"file holds kind {kind}, expected {expect_kind} "
            "(classifier and decoder files are not interchangeable)"
        )
    if act_code not in _ACT_NAMES:
        raise ModelFormatError(f"unknown activation code {act_code}")
    if n_layers < 1 or n_layers > 64:
        raise ModelFormatError(f"implausible layer count {n_layers}")
    dims = struct.unpack(f"<{n_layers + 1}I", reader.take(4 * (n_layers + 1)))
    if any(d < 1 for d in dims):
        raise ModelFormatError("layer dimensions must be positive")
    payload_start = reader.pos
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        weights.append(reader.floats(fan_out * fan_in).reshape(fan_out, fan_in))
        biases.append(reader.floats(fan_out))
    extra = None
    if expect_kind == _KIND_DECODER:
        latent_dim = dims[0]
        extra = (reader.floats(latent_dim), reader.floats(latent_dim))
    payload_end = reader.pos
    (stored_crc,) = struct.unpack("<I", reader.take(4))
    if reader.pos != len(data):
        raise ModelFormatError("trailing bytes after checksum")
    actual_crc = zlib.crc32(data[payload_start:payload_end]) & 0xFFFFFFFF
    if actual_crc != stored_crc:
        raise ChecksumError(
            f"payload checksum mismatch (stored {stored_crc:#010x}, "
            f"computed {actual_crc:#010x})"
        )
    return _ACT_NAMES[act_code], weights, biases, extra


def save_classifier(model: NeuralClassifier, path) -> None:
    """Serialize a fitted classifier to ``path``."""
    model._check_fitted()
    _atomic_write(path, _pack(_KIND_CLASSIFIER, model.activation,
                              model.weights_, model.biases_))


def load_classifier(path, **params) -> NeuralClassifier:
    """Load a classifier; extra keyword params go to the estimator."""
    with open(path, "rb") as fh:
        data = fh.read()
    activation, weights, biases, _ = _unpack(data, _KIND_CLASSIFIER)
    return NeuralClassifier.from_layers(weights, biases, activation=activation, **params)


def save_decoder(decoder: LatentDecoder, path) -> None:
    """Serialize a latent decoder, including its latent box."""
    box = (
        np.ascontiguousarray(decoder.box_low, dtype="<f8").tobytes()
        + np.ascontiguousarray(decoder.box_high, dtype="<f8").tobytes()
    )
    _atomic_write(
        path,
        _pack(_KIND_DECODER, "tanh",
              [decoder.w1, decoder.w2], [decoder.b1, decoder.b2], box),
    )


def load_decoder(path, provenance="seeded") -> LatentDecoder:
    with open(path, "rb") as fh:
        data = fh.read()
    _, weights, biases, box = _unpack(data, _KIND_DECODER)
    if len(weights) != 2:
        raise ModelFormatError("decoder files must hold exactly two layers")
    return LatentDecoder(
        weights[0], biases[0], weights[1], biases[1], box[0], box[1],
        provenance=provenance,
    )
