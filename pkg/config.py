"""
Configuration Management for the BRL Market Engine
Loads environment variables and provides solver and logging settings
"""

from pydantic_settings import BaseSettings, SettingsConfigDict
from typing import Literal, Optional


class Settings(BaseSettings):
    """
    Engine Settings loaded from environment variables (prefix BRL_)

    Experiment parameters (markets, schedules, beliefs) are not settings;
    they come from the per-run experiment config file.
    """

    # Logging Configuration
    LOG_LEVEL: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"
    LOG_DIR: str = "logs"
    LOG_TO_FILE: bool = False

    # Best-response bisection
    BISECTION_XTOL: float = 1e-12  # relative to p_max
    BISECTION_GTOL: float = 1e-12  # relative to total budget
    BISECTION_MAX_ITER: int = 200

    # Equilibrium oracles
    EQUILIBRIUM_TOL: float = 1e-10
    EQUILIBRIUM_MAX_ITER: int = 100_000
    TATONNEMENT_STEP: float = 0.1
    TATONNEMENT_TOL: float = 1e-10
    TATONNEMENT_MAX_ITER: int = 200_000

    # Analysis
    NOISE_FLOOR: float = 1e-9
    INVARIANT_RTOL: float = 1e-10

    # Beliefs & dynamics
    MAX_BELIEF_DEPTH: int = 8
    DEFAULT_FAIRNESS_WINDOW: Optional[int] = None
    MAX_EPOCH_STEPS: int = 100_000

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="BRL_",
        case_sensitive=True
    )


# Global settings instance
settings = Settings()
