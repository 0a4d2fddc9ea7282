"""Feldman-Katok metric mean dimension at desk scale.

Orbit-segment distances (Bowen, averaged, Feldman-Katok), FK covers and
packings with their growth rates, weighted covers on finite instances,
FK local entropies of empirical measures, and an experiment harness.
"""
__version__ = "0.1.0"

from .errors import ConfigError, FkError, Infeasible, InstanceTooLarge, TruncationError
from .systems import OrbitSegment, SystemSpec, make_system, orbit, orbits
from .metrics import (FkDistance, MatchCertificate, average_distance, bowen_distance, f_bar,
                      fk_ball_contains, fk_ball_membership, fk_distance, max_match_size)
from .covering import (caratheodory_value_small, exact_min_cover, five_r_cover,
                       greedy_fk_cover, max_separated_set, mdim_bowen_estimate,
                       span_growth_rate)
from .packing import (decomposition_infimum_small, greedy_fk_packing, mdim_packing_estimate,
                      packing_growth_rate, packing_sum_in_interval, packing_value)
from .entropy import (EmpiricalMeasure, ball_mass, empirical_from_orbit, empirical_from_sampler,
                      integrated_local_entropy, local_entropy)
from .weighted import (cover_sandwich_check, frostman_measure_small, weighted_cover,
                       weighted_cover_value_small)

__all__ = [
    "ConfigError", "FkError", "Infeasible", "InstanceTooLarge", "TruncationError",
    "OrbitSegment", "SystemSpec", "make_system", "orbit", "orbits",
    "FkDistance", "MatchCertificate", "average_distance", "bowen_distance", "f_bar",
    "fk_ball_contains", "fk_ball_membership", "fk_distance", "max_match_size",
    "caratheodory_value_small", "exact_min_cover", "five_r_cover", "greedy_fk_cover",
    "max_separated_set", "mdim_bowen_estimate", "span_growth_rate",
    "decomposition_infimum_small", "greedy_fk_packing", "mdim_packing_estimate",
    "packing_growth_rate", "packing_sum_in_interval", "packing_value",
    "EmpiricalMeasure", "ball_mass", "empirical_from_orbit", "empirical_from_sampler",
    "integrated_local_entropy", "local_entropy",
    "cover_sandwich_check", "frostman_measure_small", "weighted_cover",
    "weighted_cover_value_small",
]
