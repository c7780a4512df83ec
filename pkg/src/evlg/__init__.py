"""Seeded Monte Carlo simulator and statistics suite for interaction-free
bomb testing recast as a temporal-correlation (Leggett-Garg) test on a
two-level system."""

__version__ = "1.0.0"

from .bombtest import (
    TestFigures,
    alpha_from_witness,
    repeated_trial_power,
    single_trial_figures,
    zeno_cycles_for_power,
)
from .estimators import (
    CorrelationSet,
    EstimateWithError,
    Method,
    bootstrap_sigma,
    clopper_pearson,
    dichotomic_correlations,
    estimate_contrast,
    estimate_K_dichotomic,
    estimate_K_simplified,
    mean_q3,
    monte_carlo_sigma,
    quantum_witness,
    violation_significance,
)
from .experiment import (
    Arm,
    CampaignConfig,
    ImperfectionModel,
    ShotRecord,
    ShotTable,
    derive_arm_seed,
    sample_campaign,
    sample_dichotomic_campaign,
    theory_band,
)
from .kernels import backend
from .protocols import (
    BombOutcome,
    BombTestConfig,
    CorrelationPair,
    RamseyConfig,
    RepeatedOutcome,
    ShotOutcome,
    calibrate_phase,
    ramsey_outcome_distribution,
    run_dichotomic,
    run_mz_bomb_test,
    run_ramsey,
    run_repeated_bomb_test,
    zeno_success_probability,
)
from .qubit import (
    Branch,
    CoherenceModel,
    DecayShape,
    Pulse,
    QubitState,
    apply_dephasing,
    apply_rotation,
    apply_spin_flip,
    measure_projective,
    negative_measurement,
    populations,
    pure_state,
)
from .rng import Stream, derive_key
