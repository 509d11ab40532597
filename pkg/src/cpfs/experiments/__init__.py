from .estimators import (
    coupled_sweep, count_good_vertices, estimate_depth_tail, estimate_root_reinfection,
    estimate_survival, expected_good_vertices, lambda1_proxy, lambda2_proxy,
    paired_fitness_survival, path_transmission_experiment, star_hitting_experiment,
    star_path_relay_experiment, star_persistence_experiment,
)
from .stats import MCEstimate, wilson_interval

__all__ = [
    "MCEstimate", "wilson_interval", "coupled_sweep", "count_good_vertices",
    "estimate_depth_tail", "estimate_root_reinfection", "estimate_survival",
    "expected_good_vertices", "lambda1_proxy", "lambda2_proxy", "paired_fitness_survival",
    "path_transmission_experiment", "star_hitting_experiment", "star_path_relay_experiment",
    "star_persistence_experiment",
]
