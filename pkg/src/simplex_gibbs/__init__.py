"""Pairwise-mixing Gibbs dynamics on the simplex, couplings, and a perfect sampler."""

from simplex_gibbs.cftp import (
    BudgetExhaustedError,
    CftpResult,
    EpochRecord,
    TransitionMatrix,
    cftp_sample,
    evolve_matrix,
    l1_diameter_bound,
    propagate_through_epoch,
    run_epoch,
)
from simplex_gibbs.chain import (
    Composition,
    LambdaLaw,
    SimplexPoint,
    StepDraw,
    contraction_factor,
    discrete_step,
    evolve,
    exact_split,
    sample_step_draw,
    sample_uniform_simplex,
    sq_distance,
    step,
    weight,
)
from simplex_gibbs.couplings import (
    PairCoupling,
    couple_lambdas,
    proportional_step_pair,
    subset_couple_step,
    success_probability,
)
from simplex_gibbs.experiments import SummaryReport, wilson_lower
from simplex_gibbs.partitions import (
    EdgeSchedule,
    PartitionAnalysis,
    SplitRecord,
    analyze_schedule,
)
from simplex_gibbs.two_stage import (
    ExperimentConfig,
    FullRunResult,
    burn_steps,
    coupling_time,
    full_coupling_run,
    stage_steps,
    two_stage_pass,
)

__all__ = [
    "BudgetExhaustedError",
    "CftpResult",
    "Composition",
    "EdgeSchedule",
    "EpochRecord",
    "ExperimentConfig",
    "FullRunResult",
    "LambdaLaw",
    "PairCoupling",
    "PartitionAnalysis",
    "SimplexPoint",
    "SplitRecord",
    "StepDraw",
    "SummaryReport",
    "TransitionMatrix",
    "analyze_schedule",
    "burn_steps",
    "cftp_sample",
    "contraction_factor",
    "couple_lambdas",
    "coupling_time",
    "discrete_step",
    "evolve",
    "evolve_matrix",
    "exact_split",
    "full_coupling_run",
    "l1_diameter_bound",
    "propagate_through_epoch",
    "proportional_step_pair",
    "run_epoch",
    "sample_step_draw",
    "sample_uniform_simplex",
    "sq_distance",
    "step",
    "stage_steps",
    "subset_couple_step",
    "success_probability",
    "two_stage_pass",
    "weight",
    "wilson_lower",
]

__version__ = "0.1.0"
