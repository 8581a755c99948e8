"""Recovery of structured sources from superimposed non-linear measurements.

Simulation of distributed, non-linearly distorted measurement ensembles,
three Lasso-type recovery estimators (direct, lifting, hybrid) with a
scikit-learn compatible surface, and an analysis toolkit for the model
parameters and Gaussian mean widths that govern their sample complexity.
"""

__version__ = "0.1.0"

from .model import (
    CenteringReport,
    Clip,
    Compose,
    Custom,
    DistributionSpec,
    Identity,
    MeasurementEnsemble,
    ModelViolationError,
    Nonlinearity,
    ObservationSpec,
    RandomSignFlip,
    Scale,
    Sign,
    SourceVector,
    check_centering,
    eval_nonlinearity,
    generate_ensemble,
    generate_sparse_source,
)
from .projections import (
    ConstraintSet,
    DictionaryL1Ball,
    L1Ball,
    L12Ball,
    Unconstrained,
    UnboundedSetError,
    l1_norm,
    l12_norm,
    project_dictionary_ball,
    project_l1_ball,
    project_l12_ball,
)
from .solver import SolveReport, SolverConfig, estimate_lipschitz, solve_k_lasso
from .estimators import (
    DirectRecovery,
    HybridRecovery,
    LiftingRecovery,
    RecoveryResult,
    direct_method,
    hybrid_method,
    is_semi_orthogonal,
    lifting_method,
    rank_one_factor,
    semi_orthogonalize,
)
from .analysis import (
    MismatchEstimate,
    MismatchProfile,
    ScalingProfile,
    UnsupportedNonlinearityError,
    WidthEstimate,
    compute_mismatch_profile,
    conic_mean_width_l1,
    conic_mean_width_l12,
    empirical_mismatch_covariance,
    empirical_mismatch_deviation,
    gaussian_expectation,
    global_mean_width,
    isotropy_mismatch_vectors,
    mismatch_covariance_mc,
    model_deviation,
    nonlinearity_second_moment,
    rho_hybrid,
    sample_complexity,
    scaling_parameter,
    scaling_parameter_monte_carlo,
    scaling_profile,
    subgaussian_norm_proxy,
)
from .experiments import (
    ConfigError,
    ExperimentConfig,
    ResultRow,
    config_hash,
    parse_config,
    render_csv,
    run_experiment,
    run_to_file,
    serialize_config,
    write_csv,
)
