"""
Configuration management for simulator, environment and training settings.
"""

import json
import math
import os
import threading
import logging
from dataclasses import dataclass, asdict, fields
from typing import Dict, Any, Optional, List, Tuple

logger = logging.getLogger(__name__)

# Transfer speed known to run loss-free; mapped onto omega_max.
CALIBRATION_SPEED = 0.01


class ConfigurationError(ValueError):
    """Invalid configuration value; ``field`` names the offending key."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field


@dataclass
class PhysicalParams:
    """Physical parameter setting of the simulated cell."""
    glass_scale_x: float = 1.0
    glass_scale_y: float = 0.01
    glass_scale_z: float = 1.0
    glass_mass: float = 500.0
    drag: float = 0.0
    angular_drag: float = 0.05
    gravity_enabled: bool = True
    dynamic_friction: float = 0.6
    static_friction: float = 0.6
    transfer_speed: float = CALIBRATION_SPEED
    process_time_ticks: Optional[int] = None
    arm_radius: float = 1.0
    gravity_accel: float = 9.81


@dataclass
class ProcessParams:
    """Process parameters of the unit process."""
    glass_input_interval_s: float = 20.0
    glass_width_mm: float = 1000.0
    glass_height_mm: float = 1000.0
    glass_weight: float = 500.0
    num_process_chambers: int = 3
    chamber_placement: str = "cluster"
    num_arms: int = 2
    process_time_s: float = 30.0
    tick_duration_s: float = 0.1


def default_rotation_gain() -> float:
    """Rad/s per transfer-speed unit that maps CALIBRATION_SPEED onto omega_max."""
    reference = PhysicalParams()
    omega_max = math.sqrt(
        reference.static_friction * reference.gravity_accel / reference.arm_radius
    )
    return omega_max / CALIBRATION_SPEED


@dataclass
class GeometryParams:
    """Invented cell geometry; the source gives no coordinates."""
    layout_radius: float = 1.0
    arm_reach: float = 1.0
    lift_height: float = 0.1
    extend_ticks: int = 4
    lift_ticks: int = 2
    rotation_gain: Optional[float] = None

    @property
    def effective_rotation_gain(self) -> float:
        if self.rotation_gain is None:
            return default_rotation_gain()
        return self.rotation_gain

    @property
    def handling_ticks(self) -> int:
        """Duration of one get or put: extend, lift/lower, retract."""
        return 2 * self.extend_ticks + self.lift_ticks


@dataclass
class RewardTable:
    """Reward and penalty values per event."""
    processed_arrival: float = 4.0
    time_penalty: float = -0.01
    glass_dropped: float = -1.0
    glass_broken: float = -1.0
    incomplete_arrival: float = -1.0


@dataclass
class EnvParams:
    """Decision-environment settings."""
    observation_mode: str = "basic"
    max_glasses_tracked: Optional[int] = None
    rollout_horizon: int = 8192


@dataclass
class PpoConfig:
    """PPO hyperparameters."""
    batch_size: int = 512
    buffer_size: int = 8192
    clip_epsilon: float = 0.2
    gamma: float = 0.99
    gae_lambda: float = 0.95
    learning_rate: float = 3.0e-4
    max_steps: int = 150000
    beta: float = 500.0
    beta_effective: float = 5.0e-3
    epochs_per_update: int = 4
    value_loss_coef: float = 0.5
    max_grad_norm: float = 0.5
    num_actors: int = 1
    hidden_width: int = 64
    memory_size: Optional[int] = None
    optimizer: str = "sgd"
    seed: int = 0
    checkpoint_interval: int = 0


@dataclass
class RunConfig:
    """Harness settings."""
    output_dir: str = "runs"
    log_level: str = "INFO"
    eval_episodes: int = 3
    eval_horizon: int = 2000
    success_window: int = 500
    jobs: int = 1


SECTIONS: Tuple[str, ...] = (
    "physical", "process", "geometry", "env", "reward", "ppo", "run"
)

_SECTION_TYPES = {
    "physical": PhysicalParams,
    "process": ProcessParams,
    "geometry": GeometryParams,
    "env": EnvParams,
    "reward": RewardTable,
    "ppo": PpoConfig,
    "run": RunConfig,
}


def ticks_from_seconds(seconds: float, tick_duration_s: float) -> int:
    """Convert seconds to whole ticks, rounding half up."""
    return int(math.floor(round(seconds / tick_duration_s, 9) + 0.5))


def _coerce(section: str, name: str, current: Any, value: Any, annotation: Any) -> Any:
    """Coerce a raw value to the type of a dataclass field."""
    if value is None:
        return None
    target = current
    if target is None:
        # Optional fields: infer from annotation text
        text = str(annotation)
        if "int" in text:
            target = 0
        elif "float" in text:
            target = 0.0
        else:
            return value
    if isinstance(target, bool):
        if isinstance(value, bool):
            return value
        if isinstance(value, str):
            return value.strip().lower() in ("true", "1", "yes", "on")
        if isinstance(value, (int, float)):
            return bool(value)
    elif isinstance(target, int):
        if isinstance(value, bool):
            raise ConfigurationError(
                f"Invalid type for {section}.{name}: expected int, got bool",
                f"{section}.{name}",
            )
        if isinstance(value, float) and value.is_integer():
            return int(value)
        if isinstance(value, str):
            try:
                return int(value)
            except ValueError:
                pass
        if isinstance(value, int):
            return value
    elif isinstance(target, float):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        if isinstance(value, str):
            try:
                return float(value)
            except ValueError:
                pass
    elif isinstance(target, str):
        return str(value)
    raise ConfigurationError(
        f"Invalid type for {section}.{name}: expected {type(target).__name__}, "
        f"got {type(value).__name__}",
        f"{section}.{name}",
    )


class ConfigManager:
    """
    Thread-safe configuration manager for glassflow runs.

    Manages configuration loading, validation, and runtime updates.
    Unknown sections and keys are rejected.
    """

    def __init__(self, config_file: Optional[str] = None, apply_env: bool = True):
        """
        Initialize configuration manager.

        Args:
            config_file: Path to a JSON configuration file. If None, defaults are used.
            apply_env: Whether GLASSFLOW_* environment overrides are applied.
        """
        self.config_file = config_file
        self._lock = threading.RLock()

        self.physical = PhysicalParams()
        self.process = ProcessParams()
        self.geometry = GeometryParams()
        self.env = EnvParams()
        self.reward = RewardTable()
        self.ppo = PpoConfig()
        self.run = RunConfig()

        if config_file is not None:
            self.load_config(config_file)
        if apply_env:
            self._apply_env_overrides()

    def load_config(self, config_file: Optional[str] = None) -> None:
        """
        Load configuration from file.

        Args:
            config_file: Path to configuration file. If None, uses instance default.

        Raises:
            ConfigurationError: If the file is unreadable or contains unknown keys
        """
        file_path = config_file or self.config_file
        if file_path is None:
            return

        with self._lock:
            try:
                with open(file_path, 'r', encoding='utf-8') as f:
                    config_data = json.load(f)
            except OSError as e:
                raise ConfigurationError(f"Cannot read configuration file {file_path}: {e}")
            except json.JSONDecodeError as e:
                raise ConfigurationError(f"Invalid JSON in configuration file {file_path}: {e}")

            self.apply_dict(config_data)
            logger.info(f"Loaded configuration from {file_path}")

    def apply_dict(self, config_data: Dict[str, Any]) -> None:
        """Apply a nested ``{section: {key: value}}`` mapping."""
        if not isinstance(config_data, dict):
            raise ConfigurationError("Configuration root must be an object")
        with self._lock:
            for section, values in config_data.items():
                if section.startswith("_"):
                    continue
                if section not in _SECTION_TYPES:
                    raise ConfigurationError(
                        f"Unknown configuration section: {section}", section
                    )
                if not isinstance(values, dict):
                    raise ConfigurationError(
                        f"Section {section} must be an object", section
                    )
                self.update_config(section, values)

    def save_config(self, config_file: Optional[str] = None) -> None:
        """
        Save current configuration to file.

        Args:
            config_file: Path to save configuration. If None, uses instance default.
        """
        file_path = config_file or self.config_file
        if file_path is None:
            raise ConfigurationError("No configuration file path given")

        with self._lock:
            directory = os.path.dirname(file_path)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(file_path, 'w', encoding='utf-8') as f:
                json.dump(self.get_config_dict(), f, indent=2, sort_keys=True)
            logger.info(f"Saved configuration to {file_path}")

    def section(self, name: str) -> Any:
        """Return the dataclass instance for a section name."""
        if name not in _SECTION_TYPES:
            raise ConfigurationError(f"Invalid configuration section: {name}", name)
        return getattr(self, name)

    def update_config(self, section: str, updates: Dict[str, Any]) -> None:
        """
        Update configuration section with new values.

        Args:
            section: Configuration section name
            updates: Dictionary of field names and new values

        Raises:
            ConfigurationError: If section is invalid or updates contain invalid fields
        """
        with self._lock:
            target = self.section(section)
            annotations = {f.name: f.type for f in fields(target)}

            invalid_fields = sorted(set(updates.keys()) - set(annotations))
            if invalid_fields:
                raise ConfigurationError(
                    f"Unknown key {section}.{invalid_fields[0]}",
                    f"{section}.{invalid_fields[0]}",
                )

            for name, value in updates.items():
                current_value = getattr(target, name)
                value = _coerce(section, name, current_value, value, annotations[name])
                setattr(target, name, value)
                logger.debug(f"Updated {section}.{name} = {value}")

    def set_value(self, dotted_key: str, value: Any) -> None:
        """Set one value addressed as ``section.key``."""
        section, _, name = dotted_key.partition(".")
        if not name:
            raise ConfigurationError(
                f"Override must be written section.key, got {dotted_key}", dotted_key
            )
        self.update_config(section, {name: value})

    def get_config_dict(self) -> Dict[str, Any]:
        """
        Get complete configuration as dictionary.

        Returns:
            Dictionary with all configuration sections
        """
        with self._lock:
            return {name: asdict(getattr(self, name)) for name in SECTIONS}

    def copy(self) -> "ConfigManager":
        """Independent copy with the same values (no environment re-read)."""
        clone = ConfigManager(apply_env=False)
        clone.apply_dict(self.get_config_dict())
        return clone

    def reset_to_defaults(self) -> None:
        """Reset all configuration to default values."""
        with self._lock:
            for name, section_type in _SECTION_TYPES.items():
                setattr(self, name, section_type())
            logger.info("Reset configuration to defaults")

    @property
    def process_time_ticks(self) -> int:
        """Effective process time in ticks (tick override or process seconds)."""
        if self.physical.process_time_ticks is not None:
            return self.physical.process_time_ticks
        return ticks_from_seconds(self.process.process_time_s, self.process.tick_duration_s)

    @property
    def input_interval_ticks(self) -> int:
        return ticks_from_seconds(
            self.process.glass_input_interval_s, self.process.tick_duration_s
        )

    @property
    def num_chambers(self) -> int:
        return self.process.num_process_chambers + 2

    @property
    def max_glasses_tracked(self) -> int:
        if self.env.max_glasses_tracked is not None:
            return self.env.max_glasses_tracked
        return self.num_chambers + self.process.num_arms

    def validate_config(self) -> List[str]:
        """
        Validate current configuration.

        Returns:
            List of validation errors (empty if valid)
        """
        errors = []

        with self._lock:
            p = self.physical
            for name in ("glass_scale_x", "glass_scale_y", "glass_scale_z", "glass_mass",
                         "drag", "angular_drag", "dynamic_friction", "static_friction",
                         "gravity_accel"):
                if getattr(p, name) < 0:
                    errors.append(f"physical.{name} must be non-negative")
            if p.static_friction < p.dynamic_friction:
                errors.append("physical.static_friction must be >= physical.dynamic_friction")
            if p.transfer_speed <= 0:
                errors.append("physical.transfer_speed must be positive")
            if p.arm_radius <= 0:
                errors.append("physical.arm_radius must be positive")
            if p.process_time_ticks is not None and p.process_time_ticks < 1:
                errors.append("physical.process_time_ticks must be at least 1")

            pr = self.process
            if pr.num_process_chambers < 0:
                errors.append("process.num_process_chambers must be non-negative")
            if pr.num_arms not in (1, 2):
                errors.append("process.num_arms must be 1 or 2")
            if pr.chamber_placement.lower() != "cluster":
                errors.append("process.chamber_placement must be 'cluster'")
            for name in ("glass_input_interval_s", "process_time_s", "tick_duration_s",
                         "glass_width_mm", "glass_height_mm", "glass_weight"):
                if getattr(pr, name) <= 0:
                    errors.append(f"process.{name} must be positive")
            if pr.tick_duration_s > 0 and pr.process_time_s > 0 and self.process_time_ticks < 1:
                errors.append("process.process_time_s must span at least one tick")
            if pr.tick_duration_s > 0 and pr.glass_input_interval_s > 0 \
                    and self.input_interval_ticks < 1:
                errors.append("process.glass_input_interval_s must span at least one tick")

            g = self.geometry
            for name in ("layout_radius", "arm_reach", "lift_height"):
                if getattr(g, name) <= 0:
                    errors.append(f"geometry.{name} must be positive")
            if g.extend_ticks < 1:
                errors.append("geometry.extend_ticks must be at least 1")
            if g.lift_ticks < 1:
                errors.append("geometry.lift_ticks must be at least 1")
            if g.rotation_gain is not None and g.rotation_gain <= 0:
                errors.append("geometry.rotation_gain must be positive")

            e = self.env
            if e.observation_mode not in ("basic", "reduced"):
                errors.append("env.observation_mode must be 'basic' or 'reduced'")
            if e.rollout_horizon < 1:
                errors.append("env.rollout_horizon must be at least 1")
            minimum_slots = pr.num_process_chambers + pr.num_arms + 2
            if e.max_glasses_tracked is not None and e.max_glasses_tracked < minimum_slots:
                errors.append(f"env.max_glasses_tracked must be at least {minimum_slots}")

            r = self.reward
            if r.processed_arrival <= 0:
                errors.append("reward.processed_arrival must be positive")
            for name in ("time_penalty", "glass_dropped", "glass_broken", "incomplete_arrival"):
                if getattr(r, name) > 0:
                    errors.append(f"reward.{name} must not be positive")

            k = self.ppo
            if not 0.0 < k.gamma <= 1.0:
                errors.append("ppo.gamma must be in (0, 1]")
            if not 0.0 <= k.gae_lambda <= 1.0:
                errors.append("ppo.gae_lambda must be in [0, 1]")
            if k.clip_epsilon <= 0:
                errors.append("ppo.clip_epsilon must be positive")
            if k.batch_size < 1:
                errors.append("ppo.batch_size must be at least 1")
            if k.buffer_size < 1:
                errors.append("ppo.buffer_size must be at least 1")
            if k.batch_size > k.buffer_size:
                errors.append("ppo.batch_size must not exceed ppo.buffer_size")
            if k.num_actors < 1:
                errors.append("ppo.num_actors must be at least 1")
            if k.buffer_size != k.num_actors * e.rollout_horizon:
                errors.append(
                    "ppo.buffer_size must equal ppo.num_actors * env.rollout_horizon"
                )
            if k.learning_rate < 0:
                errors.append("ppo.learning_rate must be non-negative")
            if k.epochs_per_update < 1:
                errors.append("ppo.epochs_per_update must be at least 1")
            if k.hidden_width < 1:
                errors.append("ppo.hidden_width must be at least 1")
            if k.max_grad_norm <= 0:
                errors.append("ppo.max_grad_norm must be positive")
            if k.optimizer not in ("sgd", "adam"):
                errors.append("ppo.optimizer must be 'sgd' or 'adam'")
            if k.max_steps < 1:
                errors.append("ppo.max_steps must be at least 1")
            if k.checkpoint_interval < 0:
                errors.append("ppo.checkpoint_interval must be non-negative")

            u = self.run
            if u.eval_episodes < 1:
                errors.append("run.eval_episodes must be at least 1")
            if u.eval_horizon < 1:
                errors.append("run.eval_horizon must be at least 1")
            if u.success_window < 1:
                errors.append("run.success_window must be at least 1")
            if u.jobs < 1:
                errors.append("run.jobs must be at least 1")
            if u.log_level.upper() not in ("DEBUG", "INFO", "WARNING", "ERROR"):
                errors.append("run.log_level must be DEBUG, INFO, WARNING or ERROR")

        return errors

    def ensure_valid(self) -> None:
        """Raise ConfigurationError naming the first invalid field."""
        errors = self.validate_config()
        if errors:
            first = errors[0]
            raise ConfigurationError(first, first.split(" ", 1)[0])

    def _apply_env_overrides(self) -> None:
        """Apply configuration overrides from environment variables."""
        env_mappings = {
            'GLASSFLOW_SEED': ('ppo', 'seed'),
            'GLASSFLOW_TRANSFER_SPEED': ('physical', 'transfer_speed'),
            'GLASSFLOW_GAMMA': ('ppo', 'gamma'),
            'GLASSFLOW_LEARNING_RATE': ('ppo', 'learning_rate'),
            'GLASSFLOW_OBSERVATION_MODE': ('env', 'observation_mode'),
            'GLASSFLOW_OUTPUT_DIR': ('run', 'output_dir'),
            'GLASSFLOW_LOG_LEVEL': ('run', 'log_level'),
        }

        for env_var, (section, name) in env_mappings.items():
            value = os.getenv(env_var)
            if value is not None:
                try:
                    self.update_config(section, {name: value})
                    logger.info(f"Applied environment override: {env_var} -> {section}.{name}")
                except ConfigurationError as e:
                    logger.warning(f"Failed to apply environment override {env_var}: {e}")
