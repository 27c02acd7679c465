from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


class Settings(BaseSettings):
    PROJECT_NAME: str = "Functional-Portfolio-Engine"

    # simplex construction
    SIMPLEX_TOL: float = 1e-12
    RENORMALIZE_TOL: float = 1e-9

    # numerical guards
    NONNEG_TOL: float = 1e-12
    WEIGHT_SUM_TOL: float = 1e-8
    MAP_NEGATIVE_TOL: float = 1e-10
    LOG_ARG_FLOOR: float = 1e-14
    SELF_FINANCING_TOL: float = 1e-10
    DECOMPOSITION_TOL: float = 1e-9
    MONOTONICITY_SLACK: float = 1e-12
    PYTHAGOREAN_TOL: float = 1e-10

    # finite differences
    FD_GRADIENT_STEP: float = 1e-6
    FD_HESSIAN_STEP: float = 1e-5

    MAX_ASSIGNMENT_SIZE: int = 8

    # verification suite sizes
    VERIFY_PATHS: int = 50
    VERIFY_STEPS: int = 1000
    VERIFY_PAIRS: int = 10000
    VERIFY_ORDER_SAMPLES: int = 100
    VERIFY_TRANSPORT_TRIALS: int = 100
    VERIFY_TRIPLETS: int = 1000
    VERIFY_CONCAVITY_SAMPLES: int = 200

    DEFAULT_V0: float = 1.0
    DEFAULT_SEED: int = 42
    REPORT_SIGNIFICANT_DIGITS: int = 12
    SWEEP_WORKERS: int = 4

    LOG_LEVEL: str = "INFO"
    LOG_JSON: bool = False
    LOG_TO_FILE: bool = False
    LOG_DIR: str = "logs"

    SAMPLE_DATA_PATH: str = str(DATA_DIR / "sample_prices.csv")

    model_config = SettingsConfigDict(env_prefix="FGP_", env_file=".env", extra="ignore")


settings = Settings()
