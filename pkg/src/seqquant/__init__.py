"""Quantizer design for Bayesian sequential detection."""

from .asymptotics import (
    CostCoefficient,
    MultiSensorReport,
    PeriodicPlan,
    PriorInterval,
    asymmetry_interval,
    blockwise_coefficient,
    cost_coefficient,
    crossover_ratio,
    multisensor_coefficients,
    optimal_errors,
    rationalize_mixture,
    wald_cost,
)
from .dp import DPConfig, ValueFunction, posterior_update, prefix_cost, solve_periodic, solve_stationary, value_at
from .models import (
    DeterministicQuantizer,
    HypothesisPair,
    InducedChannel,
    RandomizedQuantizer,
    binary_kl,
    enumerate_quantizers,
    induce,
    is_llr_threshold,
    kl,
    make_llr_quantizer,
)
from .sprt import QuantizerSchedule, SimulationResult, SprtSpec, compare_with_wald, run_sprt, thresholds_from_errors

__version__ = "0.1.0"
