"""Particle horizons of FLRW models and branch probabilities of replicated observers."""

from ._kernels import BACKEND
from .branches import (
    BranchAssignment,
    BranchWeight,
    CompressedEnsemble,
    ProductAnalysis,
    Verdict,
    WeightSequence,
    branch_log_probability,
    branch_probability_sum,
    collapse_decay_curve,
    compress_branches,
    constant_sequence,
    enumerate_branches,
    harmonic_sequence,
    infinite_product_classify,
    inverse_square_sequence,
    max_branch_probability,
    reciprocal_sequence,
    simulate_finite_collapse,
    uniform_symmetric_sequence,
)
from .cosmology import (
    CosmologyModel,
    GridControl,
    HorizonResult,
    ScaleFactorCurve,
    build_model,
    comoving_volume,
    holographic_ratio,
    hubble_rate,
    particle_horizon,
    particle_horizons,
    solve_scale_factor,
)
from .frequency import (
    FrequencySpectrum,
    born_convergence_table,
    frequency_expectation,
    frequency_spectrum,
    frequency_variance,
)
from .quantum import (
    ObserverState,
    OutcomeDistribution,
    born_probabilities,
    collapse,
    indistinguishable,
    make_state,
    sample_outcome,
    sample_outcomes,
)
from .rng import make_stream
from .scenario import Scenario, load_scenario, run_scenario, validate_config

__version__ = "0.1.0"
