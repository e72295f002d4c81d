"""Simulation and closed-form analysis of single-photon polarization cloning
by heterodyne measurement and coherent displacement feedback."""

from .fock import (
    DensityOperator,
    FockBasis,
    PolarizationQubit,
    TwoModeState,
    apply_creation_superposition,
    creation_op,
    fidelity_overlap,
    make_basis,
    project_total_N,
    trace_distance,
)
from .heterodyne import (
    FeedbackGain,
    HeterodyneOutcome,
    conditional_state,
    displaced_conditional_state,
    outcome_density,
    sample_outcome,
)
from .optics import (
    BeamSplitterSpec,
    Displacement,
    beam_splitter_oracle,
    coherent_state,
    displacement_matrix,
    displacement_reorder_check,
    thermal_state,
)
from .theory import (
    C_N_operator,
    CloneReport,
    analytic_output,
    optimal_feedback,
    optimal_fidelity,
    prob_N,
    prob_n_given_N,
    rho_N,
    white_noise_mix,
)
from .engine import (
    ExperimentConfig,
    SweepResult,
    accumulate_output,
    coherent_amplification_check,
    gain_sweep,
    measure_fidelity,
    reproduce_tables,
)

__version__ = "0.1.0"
