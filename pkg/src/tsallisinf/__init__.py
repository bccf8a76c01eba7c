"""Bandit simulation and regret-bound verification for Tsallis-INF.

The learner plays the entropy-regularized FTRL strategy with a
reduced-variance loss estimator; environments cover stochastic,
stochastically constrained, scripted adversarial, and budget-corrupted
losses; the bounds module evaluates three closed-form regret-bound
families and the Lambert-W machinery behind the corrupted refinement;
the harness runs seeded experiments and cross-checks the bounds against
simulation.
"""

from .backend import active_backend, available_backends, run_episode
from .bounds import (
    BoundInputs,
    BoundValue,
    RegimeBounds,
    SelfBoundingDiagnostics,
    alpha_objective,
    amplified_alpha_objective,
    baseline_bounds,
    beta_root_equation,
    constrained_quadratic_max,
    corrupted_validity_range,
    default_offset,
    lambert_w_minus1,
    lambert_wm1_envelope,
    log_plus,
    optimal_alpha,
    sqrt_condition_bounds,
    tail_sum_check,
    tsallis_bounds,
)
from .environments import (
    AlternatingLeaderAdversary,
    BernoulliStochastic,
    ConstrainedDrift,
    CorruptedStochastic,
    CorruptionLedger,
    GapProfile,
    LossStream,
    ScriptedAdversary,
    alternating_leader_matrix,
    corruption_attack,
    environment_from_config,
    pseudo_regret,
)
from .errors import ConfigError, SolverError, UnsupportedRegimeError
from .harness import (
    AggregateResult,
    ExperimentConfig,
    RegretTrace,
    SqrtConditionReport,
    bound_overlay,
    default_checkpoints,
    regime_table,
    run_experiment,
    run_single_episode,
    verify_sqrt_condition,
    write_regret_csv,
    write_weights_csv,
)
from .learner import (
    LearnerState,
    LossEstimate,
    TsallisInf,
    importance_weighted_estimate,
    learning_rate,
    reduced_variance_estimate,
    sample_arm,
    tsallis_weights,
)

__version__ = "0.1.0"
