import os
from typing import Optional

from pydantic_settings import BaseSettings
from functools import lru_cache

class Settings(BaseSettings):
    # Parallelism (0 = one worker per CPU)
    NLS_THREADS: int = 0
    
    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_DIR: str = "logs"
    LOG_TO_FILE: bool = True
    
    # HTTP service
    HOST: str = "0.0.0.0"
    PORT: int = 8000
    
    # Pipeline defaults
    DEFAULT_SEED: int = 0
    RANK_KAPPA: float = 0.1
    KMEANS_RESTARTS: int = 10
    KMEANS_MAX_ITER: int = 100
    
    class Config:
        env_file = ".env"
        case_sensitive = True

@lru_cache()
def get_settings():
    return Settings()

def resolve_workers(requested: Optional[int] = None) -> int:
    """Number of worker threads for a parallel stage"""
    from core.exceptions import ParameterError
    
    if requested is None:
        requested = get_settings().NLS_THREADS
    if requested < 0:
        raise ParameterError(f"thread count must be >= 0, got {requested}")
    if requested == 0:
        return max(1, os.cpu_count() or 1)
    return requested
