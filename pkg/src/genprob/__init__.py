"""Generalized inference rules for finite discrete distributions."""

__version__ = "0.1.0"

from .dist import (
    DEFAULT_TOL,
    JointDist,
    ProbVector,
    QuasiStochasticMatrix,
    QuasiVector,
    StochasticMatrix,
    Tolerances,
    conditional_from_joint,
    invert,
    is_product,
    joint_from_model,
    marginals,
    reverse_joint,
)
from .inference import (
    column_sum_diagnostic,
    convergence_experiment,
    estimate_from_counts,
    infer,
    infer_hidden_marginal,
    posterior_with_inferred_prior,
)
from .rules import (
    BAYES,
    INVERSION,
    THIRD_ORDER,
    ZEROTH,
    RMatrix,
    RuleContext,
    compose,
    parse_rule,
    posterior_from_r,
    r_bayes,
    r_inversion,
    r_mix,
    r_zeroth,
    rule_posterior,
    validate_r,
)
