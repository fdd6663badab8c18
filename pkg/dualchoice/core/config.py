"""
Application configuration settings
"""
from pydantic_settings import BaseSettings
from dotenv import load_dotenv

load_dotenv()

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


class Settings(BaseSettings):
    """Application settings"""

    # API Details
    API_V1_STR: str = "/api/v1"
    PROJECT_NAME: str = "Dual Choice Evaluator"

    # Reproducibility
    DEFAULT_SEED: int = 0x5EED

    # Tolerances
    EXACT_TOL: float = 1e-9
    ENTROPIC_TOL: float = 1e-6
    WEIGHT_TOL: float = 1e-12
    COMONOTONE_TOL: float = 1e-6
    QUANTILE_TOL: float = 1e-6

    # Solvers
    SINKHORN_EPSILON: float = 1e-2
    SINKHORN_MAX_ITER: int = 10000
    BATTERY_SIZE: int = 200
    MAX_EXPANSION: int = 10000  # largest equal-weight sample built from a measure

    # Batch evaluation
    MAX_WORKERS: int = 4

    LOG_LEVEL: str = "INFO"

    model_config = {
        "env_file": ".env",
        "env_prefix": "DUALCHOICE_",
        "case_sensitive": True,
        "extra": "ignore"
    }


# Create settings instance
settings = Settings()
