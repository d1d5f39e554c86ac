"""Decoupled downlink/uplink association in two-tier cellular networks.

Closed-form association probabilities, serving-distance laws and uplink
SINR/SE/EE, a Monte Carlo engine that checks them, parameter sweeps and a CLI.
"""

from .analytic import (
    CaseMetrics,
    CaseProbabilities,
    DistancePdfVariant,
    association_probabilities,
    case_metrics,
    serving_distance_cdf,
    serving_distance_pdf,
    spectral_efficiency_case,
    ul_sinr_ccdf,
)
from .experiments import SweepResult, SweepSpec, reproduce_figures, run_sweep, validate
from .model import (
    AssociationCase,
    SimulationParams,
    SystemParams,
    TierId,
    ValidatedParams,
    default_params,
    load_config,
)
from .montecarlo import MonteCarloResult, run_monte_carlo

__version__ = "0.1.0"

__all__ = [
    "AssociationCase",
    "CaseMetrics",
    "CaseProbabilities",
    "DistancePdfVariant",
    "MonteCarloResult",
    "SimulationParams",
    "SweepResult",
    "SweepSpec",
    "SystemParams",
    "TierId",
    "ValidatedParams",
    "association_probabilities",
    "case_metrics",
    "default_params",
    "load_config",
    "reproduce_figures",
    "run_monte_carlo",
    "run_sweep",
    "serving_distance_cdf",
    "serving_distance_pdf",
    "spectral_efficiency_case",
    "ul_sinr_ccdf",
    "validate",
]
