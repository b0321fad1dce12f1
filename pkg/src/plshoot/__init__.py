"""Shooting-method solver and verification suite for radial quasilinear
equations -div(|grad u|^{p-2} grad u) = K(|x|) f(u)."""

from .errors import ConfigError, DomainError, InternalError, PlshootError, StepFailure
from .model import (
    HypothesisReport,
    NonlinearitySpec,
    Parameters,
    ProblemModel,
    WeightSpec,
    check_K1,
    check_example_conditions,
    check_f_hypotheses,
    closure_nonlinearity,
    closure_weight,
    eval_model,
    load_model,
    log_grid,
    log_gaussian_weight,
    matukuma_weight,
    model_from_config,
    model_to_config,
    power_diff_nonlinearity,
    power_general_weight,
    power_log_weight,
    stellar_weight,
    tabulated_weight,
)
from .shoot import (
    IntegratorControls,
    InverseProfile,
    Trajectory,
    capital_I,
    energy,
    fbar,
    flux_residual,
    integrate_ivp,
    invert_profile,
    origin_startup,
    radius_for_arclength,
    transformed_arclength,
)
from .classify import (
    CROSSING,
    GROUND_CANDIDATE,
    INCONCLUSIVE,
    POSITIVE,
    ShotOutcome,
    classify,
    sweep,
    transition_bracket,
)
from .variational import (
    AlphaDerivatives,
    VariationalState,
    alpha_derivatives,
    eval_G,
    kwong_ratio,
    solve_variational,
)
from .uniqueness import (
    BracketResult,
    DirichletSolution,
    SuiteReport,
    find_ground_state,
    solve_dirichlet,
    verify_suite,
)
from .transform import (
    CompactSupportResult,
    GeneralWeightPair,
    QtChange,
    TransformedModel,
    compact_support_test,
    laplace_pair,
    matukuma_pair,
    power_pair,
    qt_change,
    transform_ab_to_K,
)

__version__ = "0.1.0"
