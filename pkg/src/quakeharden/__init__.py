"""Seismic resilience assessment and targeted hardening of distribution feeders."""

__version__ = "0.1.0"

from .costs import CostParams
from .economics import select_optimal
from .fragility import line_probabilities
from .indices import ResilienceIndices, TargetCriteria, compute_indices, meets_targets
from .network import Network, builtin_ieee33, load_network
from .simulation import EventConfig, ResilienceCurve, run_evaluation

__all__ = [
    "CostParams", "EventConfig", "Network", "ResilienceCurve", "ResilienceIndices", "TargetCriteria",
    "builtin_ieee33", "compute_indices", "line_probabilities", "load_network", "meets_targets",
    "run_evaluation", "select_optimal",
]
