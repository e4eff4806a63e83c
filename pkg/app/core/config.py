"""
Rescircuit - Configuration Management
Version: 1.0.0
"""

from functools import lru_cache

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings with validation and type hints"""

    # ========== Application ==========
    APP_NAME: str = "rescircuit"
    APP_VERSION: str = "1.0.0"
    APP_DESCRIPTION: str = "Random resistor networks on complete graphs and Galton-Watson trees"
    LOG_LEVEL: str = Field(default="INFO", pattern="^(DEBUG|INFO|WARNING|ERROR|CRITICAL)$")

    # ========== Linear Solver ==========
    DIRECT_SOLVE_MAX_CLASSES: int = 3000
    ITERATIVE_RTOL: float = 1e-12
    ITERATIVE_MAX_ITER: int = 20000
    RESIDUAL_TOL: float = 1e-10  # relative Kirchhoff residual
    ROW_SUM_TOL: float = 1e-12

    # ========== Random Walks ==========
    WALK_STEP_CAP: int = 100000

    # ========== Family Trees ==========
    NODE_CAP: int = 200000
    DEPTH_CAP: int = 24
    STABILIZATION_EPS: float = 1e-4
    LIMIT_TAIL_TOL: float = 1e-3  # capped estimates with a larger extrapolated tail are censored
    EXTINCTION_TOL: float = 1e-14
    EXTINCTION_MAX_ITER: int = 1000000

    # ========== Experiments ==========
    DEFAULT_SEED: int = 20240101
    WORKERS: int = Field(default=1, ge=1)
    CENSOR_ABSTAIN_FRACTION: float = 0.02

    @field_validator("LOG_LEVEL", mode="before")
    @classmethod
    def upper_log_level(cls, v):
        if isinstance(v, str):
            return v.upper()
        return v

    model_config = SettingsConfigDict(
        env_prefix="RESCIRCUIT_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance"""
    return Settings()


# Global settings instance
settings = get_settings()
