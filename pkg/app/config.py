"""
Application configuration.

Centralizes all configuration values with sensible defaults.
Override via environment variables when needed.
"""

import os
from pathlib import Path


class Config:
    """Application configuration."""

    # Logging
    LOG_LEVEL: str = os.getenv("RELDYN_LOG_LEVEL", "INFO").upper()

    # Execution
    THREADS: int = int(os.getenv("RELDYN_THREADS", "1"))
    SEED: int = int(os.getenv("RELDYN_SEED", "0"))

    # Paths
    DATA_DIR: Path = Path(os.getenv("RELDYN_DATA_DIR", "data"))

    # Training defaults
    EPOCHS: int = int(os.getenv("RELDYN_EPOCHS", "40"))
    LEARNING_RATE: float = float(os.getenv("RELDYN_LEARNING_RATE", "1e-4"))


# Global config instance
config = Config()
