"""Application configuration"""
from functools import lru_cache

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Numerical tolerances and run defaults, overridable via LOCC_* environment variables"""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="LOCC_",
        case_sensitive=False,
        extra="ignore",
    )

    # Operator predicates
    hermitian_tol: float = 1e-12
    psd_tol: float = 1e-10
    trace_tol: float = 1e-12
    purity_tol: float = 1e-10
    max_dimension: int = 256

    # Equalities between probabilities / constraints
    equality_tol: float = 1e-12
    unambiguity_tol: float = 1e-10
    probability_slack: float = 1e-12
    gram_singular_tol: float = 1e-12
    boundary_tol: float = 1e-14

    # Optimizer oracle
    grid_points: int = 201
    refinement_rounds: int = 10
    random_samples: int = 100_000

    # Quartic / critical value solvers
    root_scan_points: int = 512
    root_max_iter: int = 200
    critical_tol: float = 1e-10

    # Monte Carlo
    mc_shards: int = 8
    mc_workers: int = 4
    default_seed: int = 42

    # Figure grids
    curve_points: int = 400
    region_points: int = 200

    # Logging
    log_level: str = "INFO"
    log_format: str = "%(asctime)s - %(levelname)s - %(message)s"


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance"""
    return Settings()
