"""Server configuration: defaults, JSON config file, environment."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .. import core

CONFIG_FILE_KEYS = (
    "rooms",
    "allow_dynamic_rooms",
    "max_tracks",
    "default_bpm",
    "default_steps",
)


@dataclass
class ServerConfig:
    port: int = 8080
    rooms: list[str] = field(default_factory=lambda: ["lobby"])
    allow_dynamic_rooms: bool = False
    max_tracks: int = core.DEFAULT_MAX_TRACKS
    default_bpm: float = core.DEFAULT_BPM
    default_steps: int = core.DEFAULT_STEPS
    freesound_api_key: Optional[str] = None
    snapshot_dump_path: Optional[str] = None
    snapshot_dump_interval_s: float = 30.0
    log_level: str = "info"
    static_dir: Optional[str] = None
    rate_limit_ops_per_s: Optional[float] = 30.0
    chat_log_limit: int = 500
    action_log_limit: int = 500
    snapshot_chat_tail: int = 50
    max_chat_len: int = 2000

    def validate(self) -> None:
        if not self.rooms and not self.allow_dynamic_rooms:
            raise ValueError("at least one room is required when dynamic rooms are off")
        if self.default_steps not in core.ALLOWED_STEP_COUNTS:
            raise ValueError(f"default_steps must be one of {core.ALLOWED_STEP_COUNTS}")
        if not core.BPM_MIN <= self.default_bpm <= core.BPM_MAX:
            raise ValueError(f"default_bpm must be in [{core.BPM_MIN}, {core.BPM_MAX}]")
        if self.max_tracks < 0:
            raise ValueError("max_tracks must be >= 0")


def load_config(path: str | Path) -> dict:
    """Read the JSON config file, returning only recognized keys."""
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ValueError("config file must hold a JSON object")
    return {k: raw[k] for k in CONFIG_FILE_KEYS if k in raw}


def config_from_sources(
    *,
    config_path: Optional[str] = None,
    port: Optional[int] = None,
    snapshot_dump_path: Optional[str] = None,
    log_level: Optional[str] = None,
    freesound_key: Optional[str] = None,
    static_dir: Optional[str] = None,
    env: Optional[dict] = None,
) -> ServerConfig:
    """Merge defaults <- config file <- environment <- CLI flags."""
    env = os.environ if env is None else env
    cfg = ServerConfig()
    if config_path:
        for key, value in load_config(config_path).items():
            setattr(cfg, key, value)
    cfg.freesound_api_key = env.get("FREESOUND_API_KEY") or None
    if port is not None:
        cfg.port = port
    if snapshot_dump_path is not None:
        cfg.snapshot_dump_path = snapshot_dump_path
    if log_level is not None:
        cfg.log_level = log_level
    if freesound_key is not None:
        cfg.freesound_api_key = freesound_key
    if static_dir is not None:
        cfg.static_dir = static_dir
    cfg.validate()
    return cfg
