"""
Binary checkpoint files for policy parameters.

Layout (little-endian): magic b"GFPC", u32 format version, u32 config length,
UTF-8 JSON config echo, u64 training-step counter, u64 weight count,
f64 weights, u32 CRC32 of everything before it.
"""

import json
import logging
import os
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np

from .network import PolicyParams

logger = logging.getLogger(__name__)

MAGIC = b"GFPC"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sII")
_COUNTS = struct.Struct("<QQ")
_CRC = struct.Struct("<I")


class CheckpointError(RuntimeError):
    """Checkpoint file cannot be used."""


class ChecksumError(CheckpointError):
    """CRC32 trailer does not match the content."""


class UnsupportedVersionError(CheckpointError):
    """Format version other than the one this build reads."""


class TruncatedCheckpointError(CheckpointError):
    """File ends before the declared content."""


@dataclass
class Checkpoint:
    params: PolicyParams
    config: Dict[str, Any]
    step: int


def encode_checkpoint(params: PolicyParams, config: Dict[str, Any], step: int = 0) -> bytes:
    """Serialize parameters, config echo and step counter."""
    echo = dict(config)
    echo["network"] = {"obs_dim": params.obs_dim, "n_actions": params.n_actions,
                       "hidden_width": params.hidden_width}
    config_bytes = json.dumps(echo, sort_keys=True).encode("utf-8")
    weights = params.flatten().astype("<f8")
    body = b"".join([
        _HEADER.pack(MAGIC, FORMAT_VERSION, len(config_bytes)),
        config_bytes,
        _COUNTS.pack(step, weights.size),
        weights.tobytes(),
    ])
    return body + _CRC.pack(zlib.crc32(body) & 0xFFFFFFFF)


def decode_checkpoint(data: bytes) -> Checkpoint:
    """
    Parse checkpoint bytes.

    Raises:
        TruncatedCheckpointError: If the data ends early
        UnsupportedVersionError: On an unknown format version
        ChecksumError: If the CRC32 trailer does not match
        CheckpointError: On a wrong magic or an inconsistent config echo
    """
    if len(data) < _HEADER.size:
        raise TruncatedCheckpointError(f"Checkpoint has only {len(data)} bytes")
    magic, version, config_len = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise CheckpointError(f"Not a checkpoint file (magic {magic!r})")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"Checkpoint format version {version} is not supported (expected {FORMAT_VERSION})"
        )
    offset = _HEADER.size + config_len
    if len(data) < offset + _COUNTS.size:
        raise TruncatedCheckpointError("Checkpoint ends inside the header")
    step, count = _COUNTS.unpack_from(data, offset)
    offset += _COUNTS.size
    end = offset + 8 * count
    if len(data) < end + _CRC.size:
        raise TruncatedCheckpointError(
            f"Checkpoint declares {count} weights but ends after {len(data)} bytes"
        )
    (stored_crc,) = _CRC.unpack_from(data, end)
    if zlib.crc32(data[:end]) & 0xFFFFFFFF != stored_crc:
        raise ChecksumError("Checkpoint checksum mismatch")

    try:
        config = json.loads(data[_HEADER.size:_HEADER.size + config_len].decode("utf-8"))
        network = config["network"]
        weights = np.frombuffer(data, dtype="<f8", count=count, offset=offset).astype(np.float64)
        params = PolicyParams.from_flat(weights, int(network["obs_dim"]),
                                        int(network["n_actions"]),
                                        int(network["hidden_width"]))
    except (ValueError, KeyError, UnicodeDecodeError) as e:
        raise CheckpointError(f"Inconsistent checkpoint content: {e}")
    return Checkpoint(params=params, config=config, step=int(step))


def save_checkpoint(params: PolicyParams, config: Dict[str, Any],
                    path: Union[str, Path], step: int = 0) -> Path:
    """
    Write a checkpoint atomically.

    Args:
        params: Parameters to store
        config: Configuration dictionary echoed into the file
        path: Destination
        step: Training-step counter

    Returns:
        Path of the written file
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as f:
        f.write(encode_checkpoint(params, config, step))
    os.replace(tmp, path)
    logger.info(f"Checkpoint written to {path} at step {step}")
    return path


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    """Read a checkpoint; see ``decode_checkpoint`` for the errors raised."""
    with open(path, "rb") as f:
        data = f.read()
    checkpoint = decode_checkpoint(data)
    logger.debug(f"Loaded checkpoint {path} (step {checkpoint.step})")
    return checkpoint
