"""Configuration management for the DID/LDV bracketing toolkit."""
import os
from pathlib import Path
from dotenv import load_dotenv
from typing import Optional

# Load environment variables from .env file in project root
env_path = Path(__file__).parent.parent / ".env"
load_dotenv(dotenv_path=env_path)


class Config:
    """Application configuration."""

    # Logging
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")

    # Resampling defaults (bootstrap / bracket / simulate)
    DEFAULT_SEED: int = int(os.getenv("DID_LDV_SEED", "20190101"))
    BOOTSTRAP_REPLICATES: int = int(os.getenv("DID_LDV_REPLICATES", "2000"))
    BOOTSTRAP_LEVEL: float = float(os.getenv("DID_LDV_LEVEL", "0.95"))
    MAX_DROPPED_FRACTION: float = float(os.getenv("DID_LDV_MAX_DROPPED_FRACTION", "0.5"))
    # joblib workers; 1 keeps everything in-process
    N_JOBS: int = int(os.getenv("DID_LDV_N_JOBS", "1"))

    # Diagnostics
    DOMINANCE_TOLERANCE: float = float(os.getenv("DID_LDV_DOMINANCE_TOLERANCE", "0.0"))

    # Numerics
    PIVOT_TOLERANCE: float = float(os.getenv("DID_LDV_PIVOT_TOLERANCE", "1e-12"))
    LOGISTIC_MAX_ITER: int = int(os.getenv("DID_LDV_LOGISTIC_MAX_ITER", "100"))
    LOGISTIC_TOLERANCE: float = float(os.getenv("DID_LDV_LOGISTIC_TOLERANCE", "1e-10"))

    # Reporting
    SMALL_SAMPLE_THRESHOLD: int = int(os.getenv("DID_LDV_SMALL_SAMPLE", "30"))
    DISPLAY_DECIMALS: int = int(os.getenv("DID_LDV_DISPLAY_DECIMALS", "3"))
    # Reproducible-build convention; fixes the report timestamp when set
    SOURCE_DATE_EPOCH: Optional[str] = os.getenv("SOURCE_DATE_EPOCH")


config = Config()
