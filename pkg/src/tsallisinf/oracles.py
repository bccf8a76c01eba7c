"""Independent verification oracles.

Every closed form in the package has a second, slower computational route
here: plain bisection for the weight solve and the Lambert branch,
accelerated projected gradient and grid search for the constrained
quadratic maximum, dense grids for the trade-off objective, and
Monte-Carlo resampling for estimator unbiasedness. The verify suites at
the bottom bundle these into the checks the CLI's verify-lemmas command
runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bounds import (
    alpha_objective,
    amplified_alpha_objective,
    constrained_quadratic_max,
    corrupted_validity_range,
    lambert_w_minus1,
    lambert_wm1_envelope,
    optimal_alpha,
    tail_sum_check,
)
from .learner import (
    importance_weighted_estimate,
    reduced_variance_estimate,
    root_bracket,
)

__all__ = [
    "CheckResult",
    "alpha_grid_minimum",
    "estimator_mc_mean",
    "lambert_w_bisect",
    "quadratic_max_grid",
    "quadratic_max_pg",
    "run_all_suites",
    "stationarity_residual",
    "tsallis_weights_bisect",
    "verify_alpha_suite",
    "verify_lambert_suite",
    "verify_lemma_suite",
    "verify_tail_sum_suite",
]


def tsallis_weights_bisect(
    cumulative_estimates: np.ndarray, eta: float, iters: int = 200
) -> np.ndarray:
    """Weight solve by pure bisection; slow, warm-start-free reference."""
    lhat = np.asarray(cumulative_estimates, dtype=np.float64)
    shifted = lhat - lhat.min()
    lo, hi = root_bracket(shifted.shape[0], eta)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        ratio = 2.0 / (eta * (shifted - mid))
        if float(np.sum(ratio * ratio)) - 1.0 > 0.0:
            hi = mid
        else:
            lo = mid
    z = 0.5 * (lo + hi)
    ratio = 2.0 / (eta * (shifted - z))
    return ratio * ratio


def lambert_w_bisect(y: float, iters: int = 200) -> float:
    """Negative Lambert branch by doubling bracket plus plain bisection."""
    if not -math.exp(-1.0) <= y < 0.0:
        raise ValueError(f"need -1/e <= y < 0, got {y}")
    hi = -1.0
    lo = -2.0
    while lo * math.exp(lo) < y:
        lo *= 2.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid * math.exp(mid) > y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _project_budget(x: np.ndarray, m: float) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum x <= m}."""
    clipped = np.maximum(x, 0.0)
    if clipped.sum() <= m:
        return clipped
    u = np.sort(x)[::-1]
    cumulative = np.cumsum(u)
    j = np.arange(1, x.shape[0] + 1)
    rho = int(np.flatnonzero(u * j > cumulative - m)[-1])
    theta = (cumulative[rho] - m) / (rho + 1)
    return np.maximum(x - theta, 0.0)


def quadratic_max_pg(
    b: float, c: np.ndarray, m: float, iters: int | None = None
) -> float:
    """Accelerated projected gradient for max sum(b x - c x^2), sum x <= m.

    The objective is 2 min(c)-strongly concave with 2 max(c)-Lipschitz
    gradient, so constant-momentum acceleration converges linearly; the
    iteration count scales with the square root of the condition number.
    """
    c = np.asarray(c, dtype=np.float64)
    lipschitz = 2.0 * float(np.max(c))
    strong = 2.0 * float(np.min(c))
    kappa = lipschitz / strong
    if iters is None:
        iters = 2000 + int(40.0 * math.sqrt(kappa))
    beta = (math.sqrt(kappa) - 1.0) / (math.sqrt(kappa) + 1.0)

    def value(x: np.ndarray) -> float:
        return float(np.sum(b * x - c * x * x))

    x = _project_budget(np.full_like(c, min(m, b / (2.0 * lipschitz))), m)
    y = x.copy()
    x_prev = x.copy()
    best = value(x)
    for _ in range(iters):
        grad = b - 2.0 * c * y
        x = _project_budget(y + grad / lipschitz, m)
        y = x + beta * (x - x_prev)
        x_prev = x
        best = max(best, value(x))
    return best


def quadratic_max_grid(
    b: float, c: float, m: float, lo: float = -3.0, hi: float = 3.0,
    step: float = 1e-4,
) -> float:
    """Dense 1-D grid for max(b x - c x^2) over [lo, min(hi, m)].

    The right endpoint joins the lattice explicitly: when the budget
    binds the maximizer sits exactly there, off the step grid.
    """
    end = min(hi, m)
    x = np.arange(lo, end + step, step)
    x = np.append(x[x <= end], end)
    return float(np.max(b * x - c * x * x))


def stationarity_residual(
    alpha: float, s: float, c: float, n_arms: int, horizon: int
) -> float:
    """Residual of the optimizer identity ln(T(K-1) a^2/S^2) = (C/S) a^2 - 1."""
    kt = (n_arms - 1) * horizon
    return math.log(kt * alpha * alpha / (s * s)) - (c / s * alpha * alpha - 1.0)


def alpha_grid_minimum(
    s: float, c: float, n_arms: int, horizon: int, scale: float = 1.0,
    n_points: int = 10_000,
) -> float:
    """Minimum of the trade-off objective over a dense grid of its domain."""
    lo = s / math.sqrt((n_arms - 1) * horizon)
    hi = 1.0 / scale
    grid = np.linspace(lo, hi, n_points)
    kt = (n_arms - 1) * horizon
    values = (
        s / grid * (3.0 + math.log(kt / (s * s)))
        + 2.0 * s / grid * np.log(grid)
        + grid * c
    )
    return float(np.min(values))


def estimator_mc_mean(
    weights: np.ndarray,
    loss_vector: np.ndarray,
    estimator: str,
    eta: float,
    n_draws: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Monte-Carlo mean and standard error of a one-round loss estimate.

    Draws the played arm n_draws times from `weights` (as multinomial
    counts) and averages the estimate vector; an unbiased estimator's
    mean converges on the full loss vector.
    """
    weights = np.asarray(weights, dtype=np.float64)
    loss_vector = np.asarray(loss_vector, dtype=np.float64)
    n_arms = weights.shape[0]
    per_arm = np.empty((n_arms, n_arms))
    for arm in range(n_arms):
        if estimator == "reduced-variance":
            per_arm[arm] = reduced_variance_estimate(
                weights, arm, float(loss_vector[arm]), eta
            ).values
        elif estimator == "importance-weighted":
            per_arm[arm] = importance_weighted_estimate(
                weights, arm, float(loss_vector[arm])
            ).values
        else:
            raise ValueError(f"unknown estimator {estimator!r}")
    counts = rng.multinomial(n_draws, weights / weights.sum())
    frequencies = counts / n_draws
    mean = frequencies @ per_arm
    second_moment = frequencies @ (per_arm * per_arm)
    variance = np.maximum(second_moment - mean * mean, 0.0)
    stderr = np.sqrt(variance / n_draws)
    return mean, stderr


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    n_instances: int
    worst_error: float
    detail: str = ""


def verify_lemma_suite(trials: int = 500, seed: int = 0) -> CheckResult:
    """Closed-form constrained quadratic maximum vs PG/grid oracles."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for trial in range(trials):
        n = int(rng.integers(1, 9))
        b = 10.0 * (1.0 - rng.random())
        c = 10.0 * (1.0 - rng.random(n))
        m = 10.0 * (1.0 - rng.random())
        closed = constrained_quadratic_max(b, c, m)
        oracle = quadratic_max_pg(b, c, m)
        scale = max(1.0, abs(closed.value))
        worst = max(worst, abs(closed.value - oracle) / scale)
        if n == 1 and min(m, b / (2.0 * float(c[0]))) <= 3.0:
            # the default grid window [-3, 3] contains the maximizer here
            grid = quadratic_max_grid(b, float(c[0]), m)
            worst = max(worst, abs(closed.value - grid) / scale)
        cap = b * b / 4.0 * float(np.sum(1.0 / c))
        if closed.value > cap * (1.0 + 1e-12) + 1e-12:
            return CheckResult(
                "quadratic-max", False, trial + 1, closed.value - cap,
                "closed form exceeded its unconstrained cap",
            )
    passed = worst <= 1e-6
    return CheckResult(
        "quadratic-max", passed, trials, worst,
        f"worst relative gap to oracle {worst:.3e}",
    )


def verify_tail_sum_suite(trials: int = 100, seed: int = 1) -> CheckResult:
    """Direct tail sums stay under 2/c whenever the premise holds."""
    rng = np.random.default_rng(seed)
    worst = -math.inf
    for _ in range(trials):
        b = 10.0 * (1.0 - rng.random())
        c = 10.0 * (1.0 - rng.random())
        t_start = max(1, math.ceil((2.0 * c / b) ** 2)) + int(rng.integers(0, 10))
        horizon = t_start + int(rng.integers(10, 5000))
        check = tail_sum_check(b, c, t_start, horizon)
        worst = max(worst, check.value - check.bound)
        if not check.holds:
            return CheckResult(
                "tail-sum", False, trials, worst,
                f"sum exceeded 2/c by {check.value - check.bound:.3e}",
            )
    return CheckResult(
        "tail-sum", True, trials, worst,
        f"worst margin to 2/c: {worst:.3e}",
    )


def verify_lambert_suite(trials: int = 100, seed: int = 2) -> CheckResult:
    """Envelope containment, branch point, residuals, bisection agreement."""
    rng = np.random.default_rng(seed)
    branch = lambert_w_minus1(-math.exp(-1.0))
    if abs(branch + 1.0) > 1e-10:
        return CheckResult(
            "lambert", False, 1, abs(branch + 1.0), "branch point mismatch"
        )
    worst = abs(branch + 1.0)
    for _ in range(trials):
        x = math.exp(rng.uniform(math.log(1e-12), 0.0))
        y = -x / math.e
        w = lambert_w_minus1(y)
        residual = abs(w * math.exp(w) - y)
        lower, upper = lambert_wm1_envelope(x)
        oracle = lambert_w_bisect(y)
        errs = (
            residual,
            max(0.0, lower - (-w) - 1e-9),
            max(0.0, (-w) - upper - 1e-9),
            abs(w - oracle) - 1e-9,
        )
        worst = max(worst, residual, abs(w - oracle))
        if residual > 1e-12 or errs[1] > 0.0 or errs[2] > 0.0 or errs[3] > 0.0:
            return CheckResult(
                "lambert", False, trials, worst,
                f"failed at x={x!r}: residual {residual:.3e}, "
                f"bisection gap {abs(w - oracle):.3e}",
            )
    return CheckResult(
        "lambert", True, trials, worst,
        f"worst residual/oracle gap {worst:.3e}",
    )


def verify_alpha_suite(trials: int = 50, seed: int = 3) -> CheckResult:
    """Optimal trade-off parameter: stationarity, grid minimality, range."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    done = 0
    while done < trials:
        n_arms = int(rng.integers(2, 65))
        horizon = int(rng.integers(1000, 1_000_001))
        s = math.exp(rng.uniform(math.log(0.5), math.log(50.0)))
        scale = rng.uniform(1.0, 2.0)
        lo, hi = corrupted_validity_range(s, n_arms, horizon, scale)
        if not 0.0 < lo < hi:
            continue
        c = math.exp(rng.uniform(math.log(lo), math.log(hi)))
        alpha, diag = optimal_alpha(s, c, n_arms, horizon, scale)
        done += 1

        residual = abs(stationarity_residual(alpha, s, c, n_arms, horizon))
        worst = max(worst, residual)
        if residual > 1e-8:
            return CheckResult(
                "optimal-alpha", False, done, worst,
                f"stationarity residual {residual:.3e}",
            )

        grid_min = alpha_grid_minimum(s, c, n_arms, horizon, scale)
        f_star = alpha_objective(alpha, s, c, n_arms, horizon)
        if f_star > grid_min + 1e-9:
            return CheckResult(
                "optimal-alpha", False, done, f_star - grid_min,
                f"f(alpha*) above grid minimum by {f_star - grid_min:.3e}",
            )

        left = s / math.sqrt((n_arms - 1) * horizon)
        in_range = left * (1.0 - 1e-9) <= alpha <= (1.0 / scale) * (1.0 + 1e-9)
        if not (in_range and diag.neg_branch_value >= 1.0 - 1e-12):
            return CheckResult(
                "optimal-alpha", False, done, alpha,
                f"alpha*={alpha!r} outside [{left!r}, {1.0 / scale!r}]",
            )

        kt = (n_arms - 1) * horizon
        ell = math.log(kt / (c * s))
        chain = (
            scale * math.sqrt(c * s) * (math.sqrt(ell) + 2.0)
            + scale * scale * s * (ell + math.sqrt(2.0 * ell) + 2.0)
        )
        h_star = amplified_alpha_objective(scale, alpha, s, c, n_arms, horizon)
        if h_star > chain * (1.0 + 1e-12) + 1e-9:
            return CheckResult(
                "optimal-alpha", False, done, h_star - chain,
                f"amplified objective above its closed-form cap by "
                f"{h_star - chain:.3e}",
            )
    return CheckResult(
        "optimal-alpha", True, trials, worst,
        f"worst stationarity residual {worst:.3e}",
    )


def run_all_suites(trials: int = 500, seed: int = 0) -> list[CheckResult]:
    """Run every verification suite, scaling instance counts off `trials`."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    return [
        verify_lemma_suite(trials, seed=seed),
        verify_tail_sum_suite(max(1, trials // 5), seed=seed + 1),
        verify_lambert_suite(max(1, trials // 5), seed=seed + 2),
        verify_alpha_suite(max(1, trials // 10), seed=seed + 3),
    ]
