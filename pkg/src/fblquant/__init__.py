"""Rate adaptation and feedback quantizer design for short packets over
quasi-static fading channels, using the normal approximation of the
finite-blocklength error probability.

Rates are in nats per channel use internally; reports convert to bits per
channel use (bpcu).
"""

from .asymptotic import (
    AsymptoticScheme,
    asymptotic_quantizer,
    benchmark_scheme,
    ergodic_capacity,
    epsilon_capacity,
    fixed_rate_optimum,
)
from .channel import Custom, DegenerateRegionError, Rayleigh, Rician, load_table
from .constrained import ConstrainedConfig, allocate_cep, constrained_rate, run_algorithm2
from .fbl import LOG2E, GoodputReport, LinkParams, QuantizationScheme, achievable_rate, omega, scheme_totals
from .numerics import QuadratureSpec
from .oracle import GridSpec, McSpec, grid_search, monte_carlo_goodput
from .unconstrained import SolverConfig, optimal_boundary, optimal_rate, run_algorithm1

__version__ = "0.1.0"

__all__ = [
    "AsymptoticScheme", "asymptotic_quantizer", "benchmark_scheme", "ergodic_capacity", "epsilon_capacity",
    "fixed_rate_optimum", "Custom", "DegenerateRegionError", "Rayleigh", "Rician", "load_table",
    "ConstrainedConfig", "allocate_cep", "constrained_rate", "run_algorithm2", "LOG2E", "GoodputReport",
    "LinkParams", "QuantizationScheme", "achievable_rate", "omega", "scheme_totals", "QuadratureSpec",
    "GridSpec", "McSpec", "grid_search", "monte_carlo_goodput", "SolverConfig", "optimal_boundary",
    "optimal_rate", "run_algorithm1",
]
