"""Tsallis-INF learner core.

Per-round building blocks for the bandit algorithm: the decaying learning
rate, the entropy-regularized weight solve, inverse-CDF arm sampling, and
the two loss estimators (importance-weighted and its reduced-variance
refinement with a 1/2 baseline on well-sampled arms).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SolverError

__all__ = [
    "CONVERGENCE_TOL",
    "MAX_SOLVER_STEPS",
    "GAP_FLOOR",
    "LearnerState",
    "LossEstimate",
    "StepResult",
    "TsallisInf",
    "importance_weighted_estimate",
    "learning_rate",
    "reduced_variance_estimate",
    "root_bracket",
    "sample_arm",
    "tsallis_weight_root",
    "tsallis_weights",
    "validate_distribution",
]

# Convergence is measured on |sum(w) - 1|, which is exactly the residual of
# the scalar stationarity equation the solver works on.
CONVERGENCE_TOL = 1e-12
MAX_SOLVER_STEPS = 100
# Floor on (estimate - root) to keep the squared reciprocal finite.
GAP_FLOOR = 1e-14


def learning_rate(t: int) -> float:
    """Learning rate 4 / sqrt(t) for 1-based round index t."""
    if t < 1:
        raise ValueError(f"round index must be >= 1, got {t}")
    return 4.0 / math.sqrt(t)


def root_bracket(n_arms: int, eta: float) -> tuple[float, float]:
    """Bracket containing the weight-solve root in min-shifted coordinates.

    With shifted estimates Ls_i >= 0 and min Ls = 0, the root z of
    sum_i 4 / (eta (Ls_i - z))^2 = 1 satisfies
    -2 sqrt(K) / eta <= z <= -2 / eta: at the left end every term is at
    most 1/K, at the right end the minimizing term alone is at least 1.
    """
    return -2.0 * math.sqrt(n_arms) / eta, -2.0 / eta


def tsallis_weight_root(
    cumulative_estimates: np.ndarray,
    eta: float,
    warm_root: float = math.nan,
    max_steps: int = MAX_SOLVER_STEPS,
) -> tuple[np.ndarray, float]:
    """Solve the Tsallis-entropy weight system, returning weights and root.

    Finds the scalar x below min(Lhat) with sum_i 4/(eta (Lhat_i - x))^2 = 1
    and returns w_i = 4/(eta (Lhat_i - x))^2 together with the root in
    min-shifted coordinates (z = x - min Lhat), suitable as the next
    round's warm start. Safeguarded Newton: the bracket above always
    contains the root, any Newton step leaving the current bracket is
    replaced by its midpoint, and each iterate shrinks the bracket.

    Raises SolverError if |sum(w) - 1| has not reached CONVERGENCE_TOL
    after max_steps iterations.
    """
    lhat = np.asarray(cumulative_estimates, dtype=np.float64)
    if lhat.ndim != 1 or lhat.shape[0] < 1:
        raise ValueError("cumulative estimates must be a non-empty 1-D array")
    if not np.all(np.isfinite(lhat)):
        raise ValueError("cumulative estimates must be finite")
    if not (eta > 0.0):
        raise ValueError(f"learning rate must be positive, got {eta}")

    shifted = lhat - lhat.min()
    lo, hi = root_bracket(shifted.shape[0], eta)
    z = warm_root if lo < warm_root < hi else 0.5 * (lo + hi)

    phi = math.inf
    for _ in range(max_steps):
        gap = shifted - z
        np.maximum(gap, GAP_FLOOR, out=gap)
        ratio = 2.0 / (eta * gap)
        weights = ratio * ratio
        phi = float(weights.sum()) - 1.0
        if abs(phi) <= CONVERGENCE_TOL:
            return weights, z
        if phi > 0.0:
            hi = z
        else:
            lo = z
        dphi = float(np.sum(weights * (2.0 / gap)))
        z_new = z - phi / dphi
        if not lo < z_new < hi:
            z_new = 0.5 * (lo + hi)
        z = z_new

    raise SolverError(
        f"weight solve did not converge in {max_steps} steps "
        f"(|sum w - 1| = {abs(phi):.3e})",
        residual=phi,
    )


def tsallis_weights(
    cumulative_estimates: np.ndarray,
    eta: float,
    warm_root: float = math.nan,
    max_steps: int = MAX_SOLVER_STEPS,
) -> np.ndarray:
    """Playing distribution for the given cumulative loss estimates."""
    weights, _ = tsallis_weight_root(cumulative_estimates, eta, warm_root, max_steps)
    return weights


def validate_distribution(weights: np.ndarray, atol: float = 1e-9) -> None:
    """Raise ValueError unless weights are strictly positive and sum to 1."""
    w = np.asarray(weights)
    if w.ndim != 1 or w.shape[0] < 1:
        raise ValueError("distribution must be a non-empty 1-D array")
    if not np.all(w > 0.0):
        raise ValueError("distribution entries must be strictly positive")
    total = float(w.sum())
    if abs(total - 1.0) > atol:
        raise ValueError(f"distribution sums to {total!r}, outside 1 +/- {atol}")


def sample_arm(weights: np.ndarray, u: float) -> int:
    """Inverse-CDF sample: smallest index whose cumulative weight reaches u.

    Ties at a cumulative boundary resolve to the lower index, and any
    floating-point shortfall of the final cumulative sum falls through to
    the last arm.
    """
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"uniform draw must lie in [0, 1], got {u}")
    cumulative = np.cumsum(weights)
    index = int(np.searchsorted(cumulative, u, side="left"))
    return min(index, weights.shape[0] - 1)


@dataclass
class LossEstimate:
    """One round's loss-estimate vector with its baseline bookkeeping."""

    values: np.ndarray
    played_arm: int
    baseline: np.ndarray


def reduced_variance_estimate(
    weights: np.ndarray, played_arm: int, observed_loss: float, eta: float
) -> LossEstimate:
    """Reduced-variance loss estimate with a 1/2 baseline on heavy arms.

    Arms whose weight is at least eta^2 get baseline 1/2, others 0. Every
    arm is charged its baseline, and the played arm additionally receives
    the importance-weighted residual (loss - baseline) / weight. The
    estimate stays unbiased for the full loss vector and its value on the
    played arm is never below -baseline * (1/weight - 1).
    """
    baseline = np.where(weights >= eta * eta, 0.5, 0.0)
    values = baseline.copy()
    b = baseline[played_arm]
    values[played_arm] = (observed_loss - b) / weights[played_arm] + b
    return LossEstimate(values=values, played_arm=played_arm, baseline=baseline)


def importance_weighted_estimate(
    weights: np.ndarray, played_arm: int, observed_loss: float
) -> LossEstimate:
    """Classic importance-weighted estimate: loss / weight on the played arm."""
    values = np.zeros_like(weights)
    values[played_arm] = observed_loss / weights[played_arm]
    return LossEstimate(
        values=values, played_arm=played_arm, baseline=np.zeros_like(weights)
    )


@dataclass
class LearnerState:
    """Mutable learner state: estimates, 1-based round, solver warm start."""

    cumulative_estimates: np.ndarray
    round: int = 1
    last_root: float = math.nan


@dataclass
class StepResult:
    action: int
    loss: float
    weights: np.ndarray


ESTIMATORS = ("reduced-variance", "importance-weighted")


class TsallisInf:
    """Tsallis-INF bandit learner over a fixed set of arms.

    The estimator is fixed at construction: "reduced-variance" (default)
    or "importance-weighted". State lives in `self.state` and is advanced
    in place by `step`.
    """

    def __init__(self, n_arms: int, estimator: str = "reduced-variance"):
        if n_arms < 2:
            raise ValueError(f"need at least 2 arms, got {n_arms}")
        if estimator not in ESTIMATORS:
            raise ValueError(
                f"unknown estimator {estimator!r}, expected one of {ESTIMATORS}"
            )
        self.n_arms = int(n_arms)
        self.estimator = estimator
        self.state = LearnerState(np.zeros(self.n_arms))

    def reset(self) -> None:
        self.state = LearnerState(np.zeros(self.n_arms))

    def weights(self) -> np.ndarray:
        """Distribution the next `step` call will sample from."""
        eta = learning_rate(self.state.round)
        return tsallis_weights(
            self.state.cumulative_estimates, eta, self.state.last_root
        )

    def step(self, loss_vector: np.ndarray, rng: np.random.Generator) -> StepResult:
        """Play one round against the given loss vector.

        Only the played arm's entry of `loss_vector` is ever read, and it
        must lie in [0, 1].
        """
        st = self.state
        eta = learning_rate(st.round)
        weights, root = tsallis_weight_root(
            st.cumulative_estimates, eta, st.last_root
        )
        arm = sample_arm(weights, rng.random())
        incurred = float(loss_vector[arm])
        if not 0.0 <= incurred <= 1.0:
            raise ValueError(
                f"observed loss must lie in [0, 1], got {incurred} at arm {arm}"
            )
        if self.estimator == "reduced-variance":
            estimate = reduced_variance_estimate(weights, arm, incurred, eta)
        else:
            estimate = importance_weighted_estimate(weights, arm, incurred)
        st.cumulative_estimates += estimate.values
        st.round += 1
        st.last_root = root
        return StepResult(action=arm, loss=incurred, weights=weights)
