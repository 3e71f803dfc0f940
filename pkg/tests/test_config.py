"""
Tests for configuration management.
"""

import json
import math
import os
import tempfile
from pathlib import Path
from unittest.mock import patch

import pytest

from glassflow.config import (
    CALIBRATION_SPEED, ConfigManager, ConfigurationError, config_from_template,
    create_config_from_template, get_template, load_config, merge_configs,
    ticks_from_seconds, validate_config_file,
)
from glassflow.config.loader import get_config_from_env


class TestDefaults:
    """Tests for default configuration values."""

    def test_default_config_is_valid(self):
        """Test that the defaults pass validation."""
        config = ConfigManager(apply_env=False)
        assert config.validate_config() == []

    def test_default_process_parameters(self):
        """Test default unit-process values."""
        config = ConfigManager(apply_env=False)
        assert config.process.glass_input_interval_s == 20.0
        assert config.process.process_time_s == 30.0
        assert config.process.num_arms == 2
        assert config.process.num_process_chambers == 3
        assert config.physical.transfer_speed == CALIBRATION_SPEED

    def test_derived_tick_values(self):
        """Test seconds-to-ticks conversions at 0.1 s per tick."""
        config = ConfigManager(apply_env=False)
        assert config.process_time_ticks == 300
        assert config.input_interval_ticks == 200
        assert config.geometry.handling_ticks == 10
        assert config.num_chambers == 5

    def test_process_time_tick_override(self):
        """Test that physical.process_time_ticks overrides the seconds value."""
        config = ConfigManager(apply_env=False)
        config.update_config("physical", {"process_time_ticks": 120})
        assert config.process_time_ticks == 120

    def test_max_glasses_tracked_default(self):
        """Test slot count derived from chambers and arms."""
        config = ConfigManager(apply_env=False)
        assert config.max_glasses_tracked == 5 + 2

    def test_default_rotation_gain_maps_calibration_onto_limit(self):
        """Test that the calibration speed rotates exactly at the slip limit."""
        config = ConfigManager(apply_env=False)
        omega_max = math.sqrt(0.6 * 9.81 / 1.0)
        assert config.geometry.effective_rotation_gain * CALIBRATION_SPEED == \
            pytest.approx(omega_max)


class TestTicksFromSeconds:
    """Tests for ticks_from_seconds()."""

    def test_exact_multiple(self):
        """Test whole multiples of the tick."""
        assert ticks_from_seconds(30.0, 0.1) == 300

    def test_rounds_half_up(self):
        """Test that half ticks round up."""
        assert ticks_from_seconds(0.25, 0.1) == 3
        assert ticks_from_seconds(0.24, 0.1) == 2


class TestConfigManager:
    """Tests for ConfigManager class."""

    def test_update_config_coerces_strings(self):
        """Test that string values are coerced to the field type."""
        config = ConfigManager(apply_env=False)
        config.update_config("ppo", {"gamma": "0.5", "batch_size": "64"})
        assert config.ppo.gamma == 0.5
        assert config.ppo.batch_size == 64

    def test_update_config_rejects_unknown_key(self):
        """Test that unknown keys raise ConfigurationError naming the field."""
        config = ConfigManager(apply_env=False)
        with pytest.raises(ConfigurationError, match="Unknown key ppo.nonsense") as exc:
            config.update_config("ppo", {"nonsense": 1})
        assert exc.value.field == "ppo.nonsense"

    def test_update_config_rejects_unknown_section(self):
        """Test that unknown sections are rejected."""
        config = ConfigManager(apply_env=False)
        with pytest.raises(ConfigurationError, match="Invalid configuration section"):
            config.update_config("conveyor", {"x": 1})

    def test_update_config_rejects_bad_type(self):
        """Test that uncoercible values raise ConfigurationError."""
        config = ConfigManager(apply_env=False)
        with pytest.raises(ConfigurationError, match="Invalid type for ppo.batch_size"):
            config.update_config("ppo", {"batch_size": "many"})

    def test_set_value_with_dotted_key(self):
        """Test section.key overrides."""
        config = ConfigManager(apply_env=False)
        config.set_value("physical.transfer_speed", "0.02")
        assert config.physical.transfer_speed == 0.02

    def test_set_value_requires_section(self):
        """Test that an undotted key is rejected."""
        config = ConfigManager(apply_env=False)
        with pytest.raises(ConfigurationError, match="section.key"):
            config.set_value("gamma", 0.5)

    def test_apply_dict_rejects_unknown_section(self):
        """Test that files with unknown sections fail."""
        config = ConfigManager(apply_env=False)
        with pytest.raises(ConfigurationError, match="Unknown configuration section: extra"):
            config.apply_dict({"extra": {}})

    def test_optional_int_field_accepts_string(self):
        """Test coercion of Optional[int] fields."""
        config = ConfigManager(apply_env=False)
        config.update_config("ppo", {"memory_size": "256"})
        assert config.ppo.memory_size == 256

    def test_copy_is_independent(self):
        """Test that copies do not share section objects."""
        config = ConfigManager(apply_env=False)
        clone = config.copy()
        clone.ppo.gamma = 0.5
        assert config.ppo.gamma == 0.99

    def test_save_and_load_round_trip(self):
        """Test that saved files load back to the same values."""
        with tempfile.TemporaryDirectory() as temp_dir:
            path = os.path.join(temp_dir, "config.json")
            config = ConfigManager(apply_env=False)
            config.update_config("ppo", {"gamma": 0.9})
            config.save_config(path)

            loaded = ConfigManager(path, apply_env=False)
            assert loaded.get_config_dict() == config.get_config_dict()

    def test_invalid_json_raises_configuration_error(self):
        """Test that malformed files are reported."""
        with tempfile.TemporaryDirectory() as temp_dir:
            path = Path(temp_dir) / "bad.json"
            path.write_text("{not json")
            with pytest.raises(ConfigurationError, match="Invalid JSON"):
                ConfigManager(str(path), apply_env=False)

    def test_missing_file_raises_configuration_error(self):
        """Test that unreadable files are reported."""
        with pytest.raises(ConfigurationError, match="Cannot read configuration file"):
            ConfigManager("/nonexistent/glassflow.json", apply_env=False)

    def test_reset_to_defaults(self):
        """Test that reset restores default values."""
        config = ConfigManager(apply_env=False)
        config.update_config("ppo", {"gamma": 0.1})
        config.reset_to_defaults()
        assert config.ppo.gamma == 0.99


class TestValidation:
    """Tests for validate_config() and ensure_valid()."""

    def test_buffer_must_equal_actors_times_horizon(self):
        """Test the rollout buffer sizing rule."""
        config = ConfigManager(apply_env=False)
        config.update_config("ppo", {"num_actors": 2})
        errors = config.validate_config()
        assert "ppo.buffer_size must equal ppo.num_actors * env.rollout_horizon" in errors

    def test_batch_larger_than_buffer(self):
        """Test that a batch larger than the buffer is rejected."""
        config = ConfigManager(apply_env=False)
        config.update_config("ppo", {"batch_size": 10000})
        assert "ppo.batch_size must not exceed ppo.buffer_size" in config.validate_config()

    def test_gamma_range(self):
        """Test that gamma outside (0, 1] is rejected."""
        config = ConfigManager(apply_env=False)
        config.update_config("ppo", {"gamma": 0.0})
        assert "ppo.gamma must be in (0, 1]" in config.validate_config()

    def test_num_arms_limited(self):
        """Test that only one or two arms are accepted."""
        config = ConfigManager(apply_env=False)
        config.update_config("process", {"num_arms": 3})
        assert "process.num_arms must be 1 or 2" in config.validate_config()

    def test_ensure_valid_names_first_field(self):
        """Test that ensure_valid raises with the offending field."""
        config = ConfigManager(apply_env=False)
        config.update_config("physical", {"transfer_speed": -1.0})
        with pytest.raises(ConfigurationError) as exc:
            config.ensure_valid()
        assert exc.value.field == "physical.transfer_speed"

    def test_positive_penalty_rejected(self):
        """Test that penalties must not be positive."""
        config = ConfigManager(apply_env=False)
        config.update_config("reward", {"glass_broken": 1.0})
        assert "reward.glass_broken must not be positive" in config.validate_config()


class TestEnvironmentOverrides:
    """Tests for GLASSFLOW_* environment variables."""

    def test_environment_overrides_applied(self):
        """Test that environment variables override defaults."""
        with patch.dict(os.environ, {"GLASSFLOW_SEED": "7", "GLASSFLOW_GAMMA": "0.5"}):
            config = ConfigManager()
        assert config.ppo.seed == 7
        assert config.ppo.gamma == 0.5

    def test_bad_environment_value_is_ignored(self):
        """Test that unparsable overrides leave the default in place."""
        with patch.dict(os.environ, {"GLASSFLOW_SEED": "seven"}):
            config = ConfigManager()
        assert config.ppo.seed == 0

    def test_get_config_from_env(self):
        """Test raw extraction of environment overrides."""
        with patch.dict(os.environ, {"GLASSFLOW_TRANSFER_SPEED": "0.02"}, clear=True):
            assert get_config_from_env() == {"physical": {"transfer_speed": "0.02"}}


class TestLoader:
    """Tests for loader helpers and templates."""

    def test_merge_configs_section_wise(self):
        """Test that merging keeps untouched keys of a section."""
        merged = merge_configs({"ppo": {"gamma": 0.9, "seed": 1}}, {"ppo": {"gamma": 0.5}})
        assert merged == {"ppo": {"gamma": 0.5, "seed": 1}}

    def test_unknown_template(self):
        """Test that unknown templates raise ValueError."""
        with pytest.raises(ValueError, match="Unknown template"):
            get_template("nope")

    @pytest.mark.parametrize("name", ["default", "basic", "extension", "process_study"])
    def test_templates_are_valid(self, name):
        """Test that every template validates."""
        config = config_from_template(name)
        assert config.validate_config() == []

    def test_basic_template_layout(self):
        """Test that the basic template is a one-arm loader/unloader cell."""
        config = config_from_template("basic")
        assert config.num_chambers == 2
        assert config.process.num_arms == 1

    def test_extension_template_layout(self):
        """Test the two-arm extension layout."""
        config = config_from_template("extension")
        assert config.num_chambers == 5
        assert config.process.num_arms == 2
        assert config.env.observation_mode == "reduced"
        assert config.ppo.buffer_size == 63

    def test_create_and_validate_template_file(self):
        """Test writing a template and validating it from disk."""
        with tempfile.TemporaryDirectory() as temp_dir:
            path = os.path.join(temp_dir, "sub", "extension.json")
            create_config_from_template("extension", path)
            valid, errors = validate_config_file(path)
            assert valid, errors
            with open(path) as f:
                assert json.load(f)["process"]["num_arms"] == 2
            assert load_config(path, apply_env=False).ppo.gamma == 0.01

    def test_validate_missing_file(self):
        """Test validation of a missing file."""
        valid, errors = validate_config_file("/nonexistent.json")
        assert not valid
        assert "does not exist" in errors[0]

    def test_shipped_config_files_validate(self):
        """Test that the JSON files in configs/ are valid."""
        root = Path(__file__).resolve().parent.parent / "configs"
        for name in ("basic.json", "extension.json", "process_study.json"):
            valid, errors = validate_config_file(str(root / name))
            assert valid, (name, errors)
