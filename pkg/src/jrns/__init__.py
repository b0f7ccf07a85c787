"""Joint and stepwise Bayesian samplers for sparse multivariate regression
with precision-matrix selection, plus data generation, summaries, metrics
and a replication CLI."""

__version__ = "0.1.0"

from .datagen import GroundTruth, SimConfig, gen_dataset, gen_design, gen_truth, preset_setting, simulate
from .joint import (
    ChainOutput,
    MixtureUpdate,
    b_entry_conditional,
    omega_diag_mh_step,
    omega_diag_mode,
    omega_offdiag_conditional,
    run_jrns,
    sweep_b,
    sweep_omega,
    update_hyperparams,
)
from .linalg import cholesky_lower, mat_mul, min_eigenvalue_sym, quantile
from .metrics import confusion_counts, coverage, mcc, relative_error, sensitivity, specificity
from .model import (
    Dataset,
    Hyperparams,
    ModelState,
    default_hyperparams,
    log_gen_likelihood_joint,
    residual_matrix,
    scatter_matrix,
)
from .rng import SeededRng, derive_seed
from .stepwise import (
    Step1State,
    StepwiseResult,
    posterior_mean_b,
    pseudo_errors,
    run_step1,
    run_step2,
    run_stepwise,
    step1_b_conditional,
    step1_sigma_update,
)
from .summary import (
    SelectionSummary,
    credible_intervals,
    export_edge_lists,
    export_traces,
    inclusion_probabilities,
    magnitude_estimates,
    majority_vote_select,
    pd_projection,
    summarize_chain,
)
