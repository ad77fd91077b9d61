"""
Application settings module.

This module contains the configuration settings for the engine,
loaded from environment variables with default values.
"""

import os
from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Engine settings.

    These settings are loaded from environment variables and .env files,
    with default values when neither are set.
    """

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        # Ignore unrelated variables and a missing .env file
        extra="ignore",
    )

    PROJECT_NAME: str = "Sequential Network Design"

    # Logging settings
    LOG_LEVEL: str = "INFO"
    LOG_DIR: str = "logs"

    # Parallelism: 0 means one worker per CPU
    SEQNET_THREADS: int = 0

    # Search limits
    DP_MAX_STATES: int = 200_000
    GRID_MAX_PATHS: int = 250_000

    # Numerical defaults
    DEFAULT_PHI: float = 0.01
    MYOPIC_EPSILON: float = 1e-4
    MYOPIC_MAX_HALVINGS: int = 30
    WALK_TOLERANCE: float = 1e-12

    # Reproduction gate for the NSG comparison table
    NSG_TABLE_TOLERANCE: float = 1e-3

    # Output settings
    OUTPUT_DIR: str = "out"
    SEED: Optional[int] = None


# Create a settings instance
settings = Settings()


class ConfigHelper:
    """Wrapper with derived accessors over the raw settings."""

    def __init__(self, settings: Settings):
        self._settings = settings

    @property
    def DP_MAX_STATES(self) -> int:
        return self._settings.DP_MAX_STATES

    def get_thread_count(self) -> int:
        """Worker cap for parallel layer expansion (at least one)."""
        threads = self._settings.SEQNET_THREADS
        if threads <= 0:
            threads = os.cpu_count() or 1
        return max(1, threads)

    def get_log_path(self, filename: str = "seqnet.log") -> str:
        """Absolute path of the warning log file."""
        return os.path.join(os.getcwd(), self._settings.LOG_DIR, filename)


# Create helper instance
settings_helper = ConfigHelper(settings)
