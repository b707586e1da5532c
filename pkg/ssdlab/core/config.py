"""Configuration settings for ssdlab."""

import logging
from pathlib import Path
from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-level settings."""

    model_config = SettingsConfigDict(
        env_prefix="SSDLAB_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    # Application
    app_name: str = "ssdlab"
    app_version: str = "0.1.0"

    # Output
    output_root: str = Field(default="runs")

    # Logging
    log_level: str = Field(default="INFO")

    # Execution
    workers: int = Field(default=1, ge=1)

    # Checkpoints
    checkpoint_compression: Literal["none", "gzip", "zstd"] = "gzip"


# Global settings instance
settings = Settings()


def get_output_root() -> Path:
    """Get the output root directory, creating it if needed."""
    root = Path(settings.output_root)
    root.mkdir(parents=True, exist_ok=True)
    return root


def configure_logging(level: str = "") -> None:
    """Configure root logging once for CLI use."""
    logging.basicConfig(
        level=(level or settings.log_level).upper(),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
