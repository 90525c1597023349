"""
Submax Configuration

Defaults for every tunable that is not part of an experiment config:
1. Logging / environment
2. Numerical tolerances and enumeration cutoffs
3. Benchmark oracle hierarchy limits
"""
from functools import lru_cache
from typing import Optional
from pydantic_settings import BaseSettings
from pydantic import Field, field_validator


class Settings(BaseSettings):
    """Centralized configuration."""

    # --- APPLICATION ---
    APP_ENV: str = Field(default="development")
    LOG_LEVEL: str = Field(default="INFO")

    # --- OUTPUT ---
    SUBMAX_OUT: str = Field(default="./out")

    # --- NUMERICS ---
    MEMBERSHIP_TOL: float = Field(default=1e-9, ge=0.0)
    EXACT_ENUM_MAX_DIM: int = Field(default=20, ge=1)
    MC_SAMPLES: int = Field(default=4096, ge=1)
    DEFAULT_SIGMA0: float = Field(default=0.5, ge=0.0)

    # --- BENCHMARK ---
    BENCHMARK_EXHAUSTIVE_MAX_DIM: int = Field(default=16, ge=1)
    BENCHMARK_GRID_MAX_DIM: int = Field(default=3, ge=1)
    BENCHMARK_GRID_POINTS: int = Field(default=1_000_000, ge=1)
    BENCHMARK_FW_ITERS: int = Field(default=10_000, ge=1)

    # --- ADVERSARY / REPORTING ---
    ENV_CHUNK_ROUNDS: int = Field(default=1024, ge=1)
    ORACLE_REGRET_CONSTANT: float = Field(default=1.0, ge=0.0)

    @property
    def is_production(self) -> bool:
        return self.APP_ENV == "production"

    @field_validator("LOG_LEVEL", mode="before")
    @classmethod
    def upper_level(cls, v: Optional[str]) -> str:
        return v.upper() if v else "INFO"

    class Config:
        env_file = ".env"
        env_file_encoding = "utf-8"
        case_sensitive = True
        extra = "ignore"


@lru_cache()
def get_settings() -> Settings:
    return Settings()
