"""
Tests for checkpoint files.
"""

import struct
import tempfile
from pathlib import Path

import numpy as np
import pytest

from glassflow.agent import (
    CheckpointError, ChecksumError, TruncatedCheckpointError, UnsupportedVersionError,
    decode_checkpoint, encode_checkpoint, init_params, load_checkpoint, save_checkpoint,
)
from glassflow.agent.checkpoint import FORMAT_VERSION


def sample_params():
    return init_params(7, 5, 6, np.random.default_rng(0))


class TestCheckpointFiles:
    """Tests for save_checkpoint() and load_checkpoint()."""

    def test_round_trip_is_bit_exact(self):
        """Test that weights, config echo and step survive a save and load."""
        params = sample_params()
        with tempfile.TemporaryDirectory() as temp_dir:
            path = save_checkpoint(params, {"ppo": {"gamma": 0.99}},
                                   Path(temp_dir) / "run" / "policy.gfpc", step=1234)
            checkpoint = load_checkpoint(path)
        np.testing.assert_array_equal(checkpoint.params.flatten(), params.flatten())
        assert checkpoint.step == 1234
        assert checkpoint.config["ppo"] == {"gamma": 0.99}
        assert checkpoint.config["network"] == {"obs_dim": 7, "n_actions": 5, "hidden_width": 6}
        assert (checkpoint.params.obs_dim, checkpoint.params.n_actions) == (7, 5)

    def test_no_temporary_file_left(self):
        """Test that the atomic write cleans up after itself."""
        with tempfile.TemporaryDirectory() as temp_dir:
            save_checkpoint(sample_params(), {}, Path(temp_dir) / "policy.gfpc")
            assert sorted(p.name for p in Path(temp_dir).iterdir()) == ["policy.gfpc"]

    def test_corrupted_byte(self):
        """Test that a flipped weight byte fails the checksum."""
        data = bytearray(encode_checkpoint(sample_params(), {}))
        data[-20] ^= 0xFF
        with pytest.raises(ChecksumError):
            decode_checkpoint(bytes(data))

    def test_older_version(self):
        """Test that other format versions are refused explicitly."""
        data = bytearray(encode_checkpoint(sample_params(), {}))
        struct.pack_into("<I", data, 4, FORMAT_VERSION + 1)
        with pytest.raises(UnsupportedVersionError, match="not supported"):
            decode_checkpoint(bytes(data))

    def test_truncated(self):
        """Test that short files raise TruncatedCheckpointError."""
        data = encode_checkpoint(sample_params(), {})
        with pytest.raises(TruncatedCheckpointError):
            decode_checkpoint(data[:-9])
        with pytest.raises(TruncatedCheckpointError):
            decode_checkpoint(data[:6])

    def test_wrong_magic(self):
        """Test that foreign files are rejected."""
        data = b"ONNX" + encode_checkpoint(sample_params(), {})[4:]
        with pytest.raises(CheckpointError, match="Not a checkpoint"):
            decode_checkpoint(data)

    def test_errors_share_base_class(self):
        """Test the exception hierarchy used by callers."""
        for error in (ChecksumError, UnsupportedVersionError, TruncatedCheckpointError):
            assert issubclass(error, CheckpointError)
