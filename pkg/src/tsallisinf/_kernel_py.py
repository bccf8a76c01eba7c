"""Pure-numpy episode loop, the fallback when the compiled kernel is absent.

Runs a full bandit episode against a pre-materialized loss matrix using
pre-drawn uniforms, one solver call per round. Operation order matches the
compiled kernel so both backends produce the same action sequences.
"""

from __future__ import annotations

import math

import numpy as np

from .learner import (
    importance_weighted_estimate,
    learning_rate,
    reduced_variance_estimate,
    sample_arm,
    tsallis_weight_root,
)


def run_episode(
    losses: np.ndarray, uniforms: np.ndarray, estimator_code: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Play one episode; returns (actions, incurred losses, weight rows)."""
    losses = np.asarray(losses, dtype=np.float64)
    uniforms = np.asarray(uniforms, dtype=np.float64)
    if losses.ndim != 2:
        raise ValueError("loss matrix must be 2-D (rounds x arms)")
    n_rounds, n_arms = losses.shape
    if uniforms.shape != (n_rounds,):
        raise ValueError("uniforms length must match the number of rounds")
    if estimator_code not in (0, 1):
        raise ValueError(f"unknown estimator code {estimator_code}")

    actions = np.empty(n_rounds, dtype=np.int64)
    incurred = np.empty(n_rounds, dtype=np.float64)
    weights = np.empty((n_rounds, n_arms), dtype=np.float64)

    estimates = np.zeros(n_arms, dtype=np.float64)
    warm = math.nan
    for r in range(n_rounds):
        eta = learning_rate(r + 1)
        w, warm = tsallis_weight_root(estimates, eta, warm)
        weights[r] = w
        arm = sample_arm(w, uniforms[r])
        loss = float(losses[r, arm])
        actions[r] = arm
        incurred[r] = loss
        if estimator_code == 0:
            estimate = reduced_variance_estimate(w, arm, loss, eta)
        else:
            estimate = importance_weighted_estimate(w, arm, loss)
        estimates += estimate.values

    return actions, incurred, weights
