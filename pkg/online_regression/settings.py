import logging

from pydantic import BaseSettings, Field


class Settings(BaseSettings):
    """
    Process-wide defaults for learners, evaluation and data generation.

    Every field can be overridden from the environment, e.g. ``ONLINE_REGRESSION_DRIFT_K=4``.
    """

    log_level: str = "INFO"

    confidence: float = Field(0.95, gt=0.0, lt=1.0)
    high_confidence: float = Field(0.999, gt=0.0, lt=1.0)
    sentinel_bound: float = 1e18  # ColdStart bounds are [-sentinel, +sentinel]

    # Drift trigger: m consecutive |err| > k * stable RMSE, armed after min_samples errors
    drift_k: float = 3.0
    drift_m: int = 5
    drift_min_samples: int = 10
    drift_abs_floor: float = 1e-6

    ensemble_burn_in: int = 30
    forgetting_init_k: float = 10000.0

    map_sigma_min: float = 0.1
    map_sigma_max: float = 5.0
    map_sigma_step: float = 0.1

    gp_max_iterations: int = 50
    gp_max_decays: int = 10
    gp_max_step: float = 1.0
    gp_decayer: float = 0.5
    gp_zero_gradient: float = 1e-4
    gp_restart_range: float = 3.0
    gp_proxy_range: float = Field(8.0, gt=0.0)
    gp_max_jitter_attempts: int = Field(10, ge=1)
    gp_seed: int = 0

    kreg_alpha_min: float = 0.05
    kreg_alpha_max: float = 2.00
    kreg_alpha_step: float = 0.01

    eval_window: int = 96
    eval_fading: float = Field(0.99, gt=0.0, le=1.0)
    chernoff_delta: float = Field(0.05, gt=0.0, lt=1.0)

    class Config:
        env_prefix = "ONLINE_REGRESSION_"


SETTINGS = Settings()

logging.basicConfig(level=SETTINGS.log_level)
