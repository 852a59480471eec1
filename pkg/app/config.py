from functools import lru_cache
from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file=".env", env_file_encoding="utf-8", extra="ignore")

    LOG_LEVEL: str = "INFO"
    OUT_DIR: Path = Path("./results")

    SEED: int = 20251016
    WORKERS: int = 0  # 0 = all available cores
    MC_TRIALS: int = 5000

    DINKELBACH_TOL: float = 1e-12
    DINKELBACH_MAX_ITER: int = 100

    ROC_GRID_SIZE: int = 200


@lru_cache
def get_settings() -> Settings:
    return Settings()
