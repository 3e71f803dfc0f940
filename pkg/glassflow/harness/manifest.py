"""
Run manifests: configuration snapshot, seeds and digests of every artifact.
"""

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from ..agent.network import effective_hidden_width
from ..config.manager import ConfigManager
from ..version import __version__
from ..world.fab_world import max_safe_rotation_speed, safe_transfer_speed

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def file_digest(path: Union[str, Path]) -> str:
    sha = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            sha.update(chunk)
    return sha.hexdigest()


def effective_values(config: ConfigManager) -> Dict[str, Any]:
    """Values the run actually uses where they differ from the stored settings."""
    return {
        "entropy_coef": config.ppo.beta_effective,
        "hidden_width": effective_hidden_width(config.ppo),
        "process_time_ticks": config.process_time_ticks,
        "input_interval_ticks": config.input_interval_ticks,
        "handling_ticks": config.geometry.handling_ticks,
        "omega_max_rad_s": max_safe_rotation_speed(config.physical),
        "safe_transfer_speed": safe_transfer_speed(config.physical, config.geometry),
        "max_glasses_tracked": config.max_glasses_tracked,
    }


@dataclass
class RunManifest:
    """Reproducibility record written into every run directory."""
    command: str
    seeds: List[int]
    config: Dict[str, Any]
    effective: Dict[str, Any]
    code_version: str = __version__
    started_at: str = ""
    finished_at: str = ""
    artifacts: Dict[str, str] = field(default_factory=dict)

    @classmethod
    def start(cls, command: str, config: ConfigManager, seeds: List[int]) -> "RunManifest":
        return cls(command=command, seeds=list(seeds), config=config.get_config_dict(),
                   effective=effective_values(config), started_at=_now())

    def add_artifact(self, run_dir: Union[str, Path], path: Union[str, Path]) -> None:
        rel = Path(path).resolve().relative_to(Path(run_dir).resolve())
        self.artifacts[rel.as_posix()] = file_digest(path)

    def finish(self, run_dir: Union[str, Path],
               artifacts: Optional[List[Union[str, Path]]] = None) -> Path:
        """
        Digest artifacts and write the manifest.

        Args:
            run_dir: Run directory
            artifacts: Files to list; every regular file of run_dir when omitted

        Returns:
            Path of the manifest
        """
        run_dir = Path(run_dir)
        if artifacts is None:
            artifacts = sorted(p for p in run_dir.rglob("*")
                               if p.is_file() and p.name != MANIFEST_NAME)
        for path in artifacts:
            self.add_artifact(run_dir, path)
        self.finished_at = _now()
        path = run_dir / MANIFEST_NAME
        with open(path, "w", encoding="utf-8") as f:
            json.dump(asdict(self), f, indent=2, sort_keys=True)
        logger.info(f"Manifest written to {path} ({len(self.artifacts)} artifacts)")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RunManifest":
        with open(path, "r", encoding="utf-8") as f:
            return cls(**json.load(f))


def verify_manifest(run_dir: Union[str, Path]) -> List[str]:
    """
    Compare recorded digests with the files on disk.

    Returns:
        Problems found; empty when every artifact matches
    """
    run_dir = Path(run_dir)
    manifest = RunManifest.load(run_dir / MANIFEST_NAME)
    problems = []
    for name, digest in sorted(manifest.artifacts.items()):
        path = run_dir / name
        if not path.exists():
            problems.append(f"{name}: missing")
        elif file_digest(path) != digest:
            problems.append(f"{name}: digest mismatch")
    return problems


def run_dir_name(seed: int, now: Optional[datetime] = None) -> str:
    now = now or datetime.now(timezone.utc)
    return f"{now.strftime('%Y%m%dT%H%M%SZ')}-seed{seed}"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")
