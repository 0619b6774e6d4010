"""Information rates and variable-length coding for finite-state channels
with causal state feedback: capacity over stationary policies, the
divergence coefficient governing the error exponent, occupation-measure
linear programming with concentration checks, and a Monte-Carlo simulator
of the two-phase confirm/deny transmission scheme.
"""
from .channel import (ChannelError, ChannelSpec, InputDist, StationaryPolicy,
                      achievable_pairs, build_equivalent_dmc, channel_from_arrays,
                      induced_matrix, is_no_isi, lambda_values, load_channel,
                      q_kernel, s_marginal, save_channel)
from .costs import ExtReal, binary_entropy, binary_kl, d_max, div_cost, entropy, \
    kl_divergence, mi_cost
from .ergodic import check_assumption1, is_irreducible, stationary_measure
from .gallery import (ExampleParams, closed_form_costs, closed_form_mu,
                      gamma_params, interleaving_gap, make_example,
                      symmetric_params, sweep_gamma)
from .occupation import (ControlGrid, EmpiricalMeasure, OccupationMeasure,
                         azuma_tail_check, decode_policy, f_functional,
                         lp_average_cost, simulate_trajectory)
from .planner import (BurnashevResult, CapacityResult, burnashev_coefficient,
                      capacity, capacity_grid_oracle, reliability,
                      reliability_curve)
from .yamamoto_itoh import (EpochTrace, Scheme, SchemeConfig, SimReport,
                            build_scheme, run_phase1, run_phase2, run_trial,
                            simulate)

__all__ = [
    "ChannelError", "ChannelSpec", "InputDist", "StationaryPolicy",
    "achievable_pairs", "build_equivalent_dmc", "channel_from_arrays",
    "induced_matrix", "is_no_isi", "lambda_values", "load_channel",
    "q_kernel", "s_marginal", "save_channel",
    "ExtReal", "binary_entropy", "binary_kl", "d_max", "div_cost", "entropy",
    "kl_divergence", "mi_cost",
    "check_assumption1", "is_irreducible", "stationary_measure",
    "ExampleParams", "closed_form_costs", "closed_form_mu", "gamma_params",
    "interleaving_gap", "make_example", "symmetric_params", "sweep_gamma",
    "ControlGrid", "EmpiricalMeasure", "OccupationMeasure", "azuma_tail_check",
    "decode_policy", "f_functional", "lp_average_cost", "simulate_trajectory",
    "BurnashevResult", "CapacityResult", "burnashev_coefficient", "capacity",
    "capacity_grid_oracle", "reliability", "reliability_curve",
    "EpochTrace", "Scheme", "SchemeConfig", "SimReport", "build_scheme",
    "run_phase1", "run_phase2", "run_trial", "simulate",
]
