"""voikit: finite-alphabet information leakage, decision gains, and
value-of-information analysis."""

from .core import (
    Alphabet,
    Channel,
    FiniteDistribution,
    JointModel,
    compose_channels,
    enumerate_simplex_grid,
    erasure_channel,
    load_model,
    model_from_dict,
    model_to_dict,
    output_marginal,
    posteriors,
    validate_model,
)
from .decisions import (
    DecisionRule,
    LossSpec,
    alpha_loss,
    average_gain,
    bayes_rule,
    classical_loss,
    logarithmic_gain,
    loss_from_dict,
    maximal_gain,
    min_bayes_risk,
    min_posterior_risk,
    prior_bayes_risk,
    squared_loss,
    zero_one_loss,
)
from .errors import (
    CommonSupportError,
    GridCapError,
    SolverError,
    ValidationError,
    VerificationFailure,
    VoikitError,
)
from .measures import (
    LeakageMeasure,
    LeakageResult,
    arimoto_conditional_entropy,
    arimoto_mi,
    csiszar_mi,
    evaluate_leakage,
    f_information,
    f_leakage,
    inner_min_reference,
    maximal_alpha_leakage,
    maximal_correlation,
    maximal_cost_leakage,
    maximal_leakage,
    mmse_leakage,
    ms_leakage,
    renyi_entropy,
    shannon_mi,
    sibson_mi,
    variance_leakage,
)
from .solvers import (
    SolveReport,
    grid_oracle,
    lagrangian_sweep,
    projected_descent,
    solve_shannon_budget,
)

__version__ = "0.1.0"
