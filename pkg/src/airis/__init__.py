"""SINR distributions, blockage-aware outage and Monte Carlo cross-checks for UAV-RIS links."""

__version__ = "0.1.0"

from .analytic import (  # noqa: E402
    BlockageModel,
    LinkBudget,
    blockage_probability,
    blockage_threshold,
    cdf_a2g,
    cdf_a2g_asymptotic,
    cdf_g2a,
    cdf_g2a_asymptotic,
    markov_steady_state,
    outage_e2e,
)
from .config import ScenarioConfig, build_blockage, build_link_budget, load_scenario  # noqa: E402
from .sisr import FitInfeasibleError, SisrParams, fit_sisr  # noqa: E402

__all__ = [
    "BlockageModel", "LinkBudget", "ScenarioConfig", "SisrParams", "FitInfeasibleError",
    "blockage_probability", "blockage_threshold", "build_blockage", "build_link_budget",
    "cdf_a2g", "cdf_a2g_asymptotic", "cdf_g2a", "cdf_g2a_asymptotic", "fit_sisr",
    "load_scenario", "markov_steady_state", "outage_e2e",
]
