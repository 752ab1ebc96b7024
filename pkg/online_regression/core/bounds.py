import logging
from typing import Mapping

from scipy.stats import norm


logger = logging.getLogger(__name__)

# Conventional two-sided quantiles; exact so that widths compare exactly across levels
Z_TABLE: Mapping[float, float] = {0.90: 1.645, 0.95: 1.96, 0.99: 2.576, 0.999: 3.2905}


def z_value(confidence: float) -> float:
    """Two-sided standard normal quantile z_{1−α/2} for the given confidence level."""
    if confidence in Z_TABLE:
        return Z_TABLE[confidence]
    return float(norm.ppf(1.0 - (1.0 - confidence) / 2.0))
