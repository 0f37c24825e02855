"""Adversarial hypothesis testing with training data."""

from .core import EmpiricalType, concat_type, h_alternative_form, h_statistic, kl_divergence
from .estimators import KnownSourceDetector, OptimalAttacker, TrainingDataDetector
from .exceptions import ConvergenceError, EnumerationTooLargeError
from .exponents import ExponentResult, VersionABounds, epsilon_ks, epsilon_tr, epsilon_tr_a_bounds
from .montecarlo import SimulationReport, SimulationSpec, empirical_exponent, exact_pfn, simulate_game
from .regions import RegionQuery, in_gamma_infinity, in_gamma_n, region_grid
from .strategies import (
    GameConfig,
    attack_version_a,
    brute_force_attack,
    defender_decide_ks,
    defender_decide_tr,
    optimal_attack_ks,
    optimal_attack_tr,
    threshold,
)
from .transport import DistortionSpec, TransportPlan, min_transport_cost

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "DistortionSpec",
    "EmpiricalType",
    "EnumerationTooLargeError",
    "ExponentResult",
    "GameConfig",
    "KnownSourceDetector",
    "OptimalAttacker",
    "RegionQuery",
    "SimulationReport",
    "SimulationSpec",
    "TrainingDataDetector",
    "TransportPlan",
    "VersionABounds",
    "attack_version_a",
    "brute_force_attack",
    "concat_type",
    "defender_decide_ks",
    "defender_decide_tr",
    "empirical_exponent",
    "epsilon_ks",
    "epsilon_tr",
    "epsilon_tr_a_bounds",
    "exact_pfn",
    "h_alternative_form",
    "h_statistic",
    "in_gamma_infinity",
    "in_gamma_n",
    "kl_divergence",
    "min_transport_cost",
    "optimal_attack_ks",
    "optimal_attack_tr",
    "region_grid",
    "simulate_game",
    "threshold",
]
