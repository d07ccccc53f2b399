"""Process configuration loaded from ROM_* environment variables."""

from __future__ import annotations

from pathlib import Path

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """All settings can be overridden via env vars (case-insensitive)."""

    # Logging
    log_dir: Path = Path("logs")
    log_filename: str | None = "rom.log"
    log_level: str = "INFO"
    logfire_token: str = ""  # for optional logging to Logfire
    environment: str = "local"

    # Run defaults (CLI flags and run configs take precedence)
    runs_dir: Path = Path("runs")
    default_seed: int = 0
    default_threads: int = 1

    model_config = {"env_prefix": "ROM_", "env_file": ".env", "env_file_encoding": "utf-8"}


settings = Settings()
