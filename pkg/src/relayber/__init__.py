"""BER analysis and simulation of a two-hop decode-and-forward link with
threshold-based best-relay selection under error propagation."""

from .analytic import (
    ModelInconsistencyError,
    QuadratureError,
    mgf_best_relay,
    mgf_rayleigh,
    p_coop,
    p_dec,
    p_div,
    p_e2e,
    p_non_coop,
    p_num_relays,
    p_prop_closed,
    p_prop_gaussian_oracle,
    p_prop_oracle,
    p_sr,
    q_function,
)
from .config import BerEstimate, LinkBudget, SystemConfig, db_to_linear, linear_to_db
from .montecarlo import (
    MODE_ERROR_PROPAGATION,
    MODE_PERFECT_DECODING,
    ChannelDraw,
    SimRun,
    TrialOutcome,
    measure_conditional_psr,
    run_sim,
    run_trial,
    simulate_outcomes,
)
from .optimizer import ThresholdCurve, ThresholdPoint, find_gamma_opt, sweep

__version__ = "0.1.0"

__all__ = [
    "BerEstimate",
    "ChannelDraw",
    "LinkBudget",
    "MODE_ERROR_PROPAGATION",
    "MODE_PERFECT_DECODING",
    "ModelInconsistencyError",
    "QuadratureError",
    "SimRun",
    "SystemConfig",
    "ThresholdCurve",
    "ThresholdPoint",
    "TrialOutcome",
    "db_to_linear",
    "find_gamma_opt",
    "linear_to_db",
    "measure_conditional_psr",
    "mgf_best_relay",
    "mgf_rayleigh",
    "p_coop",
    "p_dec",
    "p_div",
    "p_e2e",
    "p_non_coop",
    "p_num_relays",
    "p_prop_closed",
    "p_prop_gaussian_oracle",
    "p_prop_oracle",
    "p_sr",
    "q_function",
    "run_sim",
    "run_trial",
    "simulate_outcomes",
    "sweep",
]
