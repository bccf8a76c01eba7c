"""Closed-form regret bounds for Tsallis-INF style learners.

Three bound families are evaluated, matching the three tiers reported in
the results CSV (columns bound_t1_*, bound_t2_*, bound_t3_*):

  * baseline_bounds: the classic guarantees for the algorithm, kept as
    the comparison point.
  * tsallis_bounds: the tightened guarantees for the reduced-variance
    learner.
  * sqrt_condition_bounds: guarantees for any learner whose expected
    regret is at most scale * sum_t sum_{i != i*} sqrt(E[w_ti] / t)
    plus an additive offset.

Each family yields three variants: an adversarial bound, a self-bounding
(gap-dependent) bound, and a corruption-robust refinement that is only
valid on an explicit corruption range. The corruption refinement comes
from optimizing a trade-off parameter alpha; the optimizer has a closed
form through the negative branch of the Lambert W function, implemented
here with a bracketed Newton solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SolverError

__all__ = [
    "BoundInputs",
    "BoundValue",
    "QuadraticMaxResult",
    "RegimeBounds",
    "SelfBoundingDiagnostics",
    "TailSumCheck",
    "alpha_objective",
    "alpha_objective_derivative",
    "amplified_alpha_objective",
    "baseline_bounds",
    "beta_root_equation",
    "constrained_quadratic_max",
    "corrupted_validity_range",
    "default_offset",
    "lambert_w_minus1",
    "lambert_wm1_envelope",
    "log_plus",
    "optimal_alpha",
    "sqrt_condition_bounds",
    "tail_sum_check",
    "tsallis_bounds",
]

_BRANCH_POINT = -math.exp(-1.0)


def log_plus(x: float) -> float:
    """max(1, ln x) for x > 0."""
    if x <= 0.0:
        raise ValueError(f"log_plus needs a positive argument, got {x}")
    return max(1.0, math.log(x))


def lambert_wm1_envelope(x: float) -> tuple[float, float]:
    """Proven lower/upper envelope for -W_{-1}(-x/e) on x in (0, 1].

    With L = ln(1/x), the negative Lambert branch satisfies
    1 + sqrt(2L) + (2/3)L <= -W_{-1}(-x/e) <= 1 + sqrt(2L) + L.
    The pair (lower, upper) collapses to (1, 1) at x = 1.
    """
    if not 0.0 < x <= 1.0:
        raise ValueError(f"envelope is defined for x in (0, 1], got {x}")
    big_l = -math.log(x)
    root = math.sqrt(2.0 * big_l)
    return 1.0 + root + 2.0 * big_l / 3.0, 1.0 + root + big_l


def lambert_w_minus1(y: float, max_steps: int = 200) -> float:
    """Negative branch of Lambert W: the solution w <= -1 of w e^w = y.

    Defined for y in [-1/e, 0); the branch point y = -1/e returns exactly
    -1.0. Solved by Newton iteration bracketed by the proven envelope,
    with bisection whenever a Newton step would leave the bracket.
    Converges to residual |w e^w - y| <= 1e-12 |y|; the relative form
    keeps the root accurate even when y is many orders below 1, where an
    absolute residual criterion would accept wildly wrong roots.
    """
    if y >= 0.0:
        raise ValueError(f"lambert_w_minus1 needs y < 0, got {y}")
    if y <= _BRANCH_POINT:
        # Allow a few ulp of slack below the branch point so that callers
        # sitting exactly on the domain boundary do not fall out of range.
        if y >= _BRANCH_POINT * (1.0 + 1e-12):
            return -1.0
        raise ValueError(f"lambert_w_minus1 needs y >= -1/e, got {y}")

    big_l = -1.0 - math.log(-y)  # ln(1/x) for x = -e*y
    root = math.sqrt(2.0 * big_l)
    lo = -(1.0 + root + big_l)
    hi = -(1.0 + root + 2.0 * big_l / 3.0)

    w = 0.5 * (lo + hi)
    tol = 1e-12 * abs(y)
    residual = math.inf
    for _ in range(max_steps):
        ew = math.exp(w)
        residual = w * ew - y
        if abs(residual) <= tol:
            return w
        if residual > 0.0:
            lo = w
        else:
            hi = w
        slope = (1.0 + w) * ew
        if slope == 0.0:
            w_new = 0.5 * (lo + hi)
        else:
            w_new = w - residual / slope
            if not lo < w_new < hi:
                w_new = 0.5 * (lo + hi)
        w = w_new

    raise SolverError(
        f"lambert_w_minus1 did not converge for y={y!r} "
        f"(residual {residual:.3e})",
        residual=residual,
    )


@dataclass(frozen=True)
class QuadraticMaxResult:
    """Maximum of sum_i (b x_i - c_i x_i^2) over x >= 0, sum x_i <= M."""

    value: float
    argmax: np.ndarray
    constrained: bool


def constrained_quadratic_max(b: float, c: np.ndarray, m: float) -> QuadraticMaxResult:
    """Closed-form maximum of sum_i (b x_i - c_i x_i^2) with sum x_i <= M.

    When the unconstrained vertex b/(2 c_i) fits inside the budget the
    value is (b^2/4) sum 1/c_i; otherwise the budget binds, the maximizer
    splits M proportionally to 1/c_i, and the value is
    b M - M^2 / sum(1/c_i). Either way the value never exceeds
    (b^2/4) sum 1/c_i.
    """
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 1 or c.shape[0] < 1:
        raise ValueError("curvatures must form a non-empty 1-D array")
    if np.any(c <= 0.0):
        raise ValueError("curvatures must be strictly positive")
    if b < 0.0:
        raise ValueError(f"linear coefficient must be nonnegative, got {b}")
    if m < 0.0:
        raise ValueError(f"budget must be nonnegative, got {m}")

    inv_sum = float(np.sum(1.0 / c))
    if b / 2.0 * inv_sum > m:
        argmax = m / (c * inv_sum)
        value = b * m - m * m / inv_sum
        return QuadraticMaxResult(value=value, argmax=argmax, constrained=True)
    argmax = b / (2.0 * c)
    value = b * b / 4.0 * inv_sum
    return QuadraticMaxResult(value=value, argmax=argmax, constrained=False)


@dataclass(frozen=True)
class TailSumCheck:
    value: float
    bound: float
    holds: bool


def tail_sum_check(b: float, c: float, t_start: int, horizon: int) -> TailSumCheck:
    """Check sum_{t=t_start+1}^{horizon} 1/(b t^{3/2} - c t) <= 2/c.

    Requires b, c > 0, integer 0 <= t_start < horizon, and the premise
    b sqrt(t_start) >= 2 c, which also keeps every denominator positive.
    The sum is evaluated directly (in chunks, so very long horizons do
    not allocate a single huge array).
    """
    if b <= 0.0 or c <= 0.0:
        raise ValueError("coefficients b and c must be positive")
    if t_start < 0 or horizon <= t_start:
        raise ValueError(
            f"need 0 <= t_start < horizon, got t_start={t_start}, horizon={horizon}"
        )
    if b * math.sqrt(t_start) < 2.0 * c:
        raise ValueError(
            "premise b*sqrt(t_start) >= 2*c violated: "
            f"{b * math.sqrt(t_start):.6g} < {2.0 * c:.6g}"
        )

    total = 0.0
    start = t_start + 1
    chunk = 1_000_000
    while start <= horizon:
        stop = min(horizon, start + chunk - 1)
        t = np.arange(start, stop + 1, dtype=np.float64)
        total += float(np.sum(1.0 / (b * t**1.5 - c * t)))
        start = stop + 1
    bound = 2.0 / c
    return TailSumCheck(value=total, bound=bound, holds=total <= bound)


def default_offset(n_arms: int, horizon: int) -> float:
    """Additive offset of the learner's sqrt-condition guarantee."""
    return 0.75 * math.sqrt(n_arms) + 14.0 * n_arms * math.log(horizon) + 15.0


@dataclass(frozen=True)
class BoundInputs:
    """Instance parameters shared by every bound family.

    gaps may be omitted for purely adversarial instances; the gap-aware
    variants are then flagged invalid. corruption is the constraint
    constant of the self-bounding model (pass twice the attack budget for
    corrupted runs). scale/offset parameterize the sqrt-condition family;
    offset = None resolves to default_offset(n_arms, horizon).
    """

    n_arms: int
    horizon: int
    gaps: np.ndarray | None = None
    corruption: float = 0.0
    scale: float = 1.25
    offset: float | None = None

    def __post_init__(self):
        if self.n_arms < 2:
            raise ValueError(f"need at least 2 arms, got {self.n_arms}")
        if self.horizon < 2:
            raise ValueError(f"need horizon >= 2, got {self.horizon}")
        if self.corruption < 0.0:
            raise ValueError(f"corruption must be nonnegative, got {self.corruption}")
        if self.scale <= 0.0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        if self.offset is not None and self.offset < 0.0:
            raise ValueError(f"offset must be nonnegative, got {self.offset}")
        if self.gaps is not None:
            gaps = np.asarray(self.gaps, dtype=np.float64)
            if gaps.shape != (self.n_arms,):
                raise ValueError("gaps must have one entry per arm")
            if np.any(gaps < 0.0) or np.any(gaps > 1.0):
                raise ValueError("gaps must lie in [0, 1]")
            if not np.any(gaps == 0.0):
                raise ValueError("the best arm's gap must be exactly zero")
            object.__setattr__(self, "gaps", gaps)

    @property
    def unique_best(self) -> bool:
        if self.gaps is None:
            return False
        return int(np.sum(self.gaps == 0.0)) == 1

    @property
    def inv_gap_sum(self) -> float:
        """S = sum over suboptimal arms of 1/gap; inf without a unique best."""
        if self.gaps is None or not self.unique_best:
            return math.inf
        return float(np.sum(1.0 / self.gaps[self.gaps > 0.0]))

    @property
    def delta_min(self) -> float:
        if self.gaps is None or not self.unique_best:
            return 0.0
        return float(np.min(self.gaps[self.gaps > 0.0]))

    @property
    def effective_offset(self) -> float:
        if self.offset is not None:
            return self.offset
        return default_offset(self.n_arms, self.horizon)


@dataclass(frozen=True)
class BoundValue:
    """A bound's numeric value with its applicability flag.

    The value is evaluated whenever the formula makes numeric sense, even
    when valid is False, so diagnostics can still plot it; NaN marks a
    formula that cannot be evaluated at all.
    """

    value: float
    valid: bool
    reason: str = ""


@dataclass(frozen=True)
class RegimeBounds:
    adversarial: BoundValue
    self_bounding: BoundValue
    corrupted: BoundValue


def corrupted_validity_range(
    s: float, n_arms: int, horizon: int, scale: float = 1.0
) -> tuple[float, float]:
    """Corruption range on which the corrupted refinement is proved.

    Lower end scale^2 * S * (ln((K-1) T / (scale S)^2) + 1), upper end
    (K-1) T / S.
    """
    if s <= 0.0 or not math.isfinite(s):
        raise ValueError(f"need a finite positive gap sum, got {s}")
    kt = (n_arms - 1) * horizon
    lo = scale * scale * s * (math.log(kt / (scale * scale * s * s)) + 1.0)
    return lo, kt / s


def _gap_guard(inputs: BoundInputs) -> str:
    if inputs.gaps is None:
        return "no gap profile"
    if not inputs.unique_best:
        return "multiple best arms"
    return ""


def baseline_bounds(inputs: BoundInputs) -> RegimeBounds:
    """Classic guarantees: adversarial, self-bounding, and large-corruption."""
    k, t, c = inputs.n_arms, inputs.horizon, inputs.corruption
    ln_t = math.log(t)
    adversarial = BoundValue(
        2.0 * math.sqrt(k * t) + 10.0 * k * ln_t + 16.0, valid=True
    )

    guard = _gap_guard(inputs)
    if guard:
        dead = BoundValue(math.nan, valid=False, reason=guard)
        return RegimeBounds(adversarial, dead, dead)

    s = inputs.inv_gap_sum
    gapped_sum = (ln_t + 3.0) * s
    tail = 28.0 * k * ln_t + 1.5 * math.sqrt(k) + 32.0
    self_bounding = BoundValue(
        gapped_sum + 1.0 / inputs.delta_min + tail + c, valid=True
    )

    threshold = gapped_sum + 1.0 / inputs.delta_min
    corrupted = BoundValue(
        2.0 * math.sqrt(threshold * c) + tail,
        valid=c >= threshold,
        reason="" if c >= threshold else f"requires corruption >= {threshold:.6g}",
    )
    return RegimeBounds(adversarial, self_bounding, corrupted)


def tsallis_bounds(inputs: BoundInputs) -> RegimeBounds:
    """Tightened guarantees for the reduced-variance Tsallis-INF learner."""
    k, t, c = inputs.n_arms, inputs.horizon, inputs.corruption
    ln_t = math.log(t)
    adversarial = BoundValue(
        2.0 * math.sqrt((k - 1) * t)
        + 0.5 * math.sqrt(t)
        + 14.0 * k * ln_t
        + 0.75 * math.sqrt(k)
        + 15.0,
        valid=True,
    )

    guard = _gap_guard(inputs)
    if guard:
        dead = BoundValue(math.nan, valid=False, reason=guard)
        return RegimeBounds(adversarial, dead, dead)

    s = inputs.inv_gap_sum
    kt = (k - 1) * t
    tail = 28.0 * k * ln_t + 1.5 * math.sqrt(k) + 30.0
    self_bounding = BoundValue(
        s * (math.log(kt / (s * s)) + 6.0) + tail + c, valid=True
    )

    corrupted = _corrupted_refinement(s, c, k, t, scale=1.0, sqrt_extra=5.0, tail=tail)
    return RegimeBounds(adversarial, self_bounding, corrupted)


def sqrt_condition_bounds(inputs: BoundInputs) -> RegimeBounds:
    """Guarantees for any learner satisfying the sqrt-condition.

    The condition: expected regret at most
    scale * sum_t sum_{i != i*} sqrt(E[w_ti]/t) + offset for every loss
    sequence. The reduced-variance Tsallis-INF learner satisfies it with
    scale 5/4 and offset default_offset(K, T).
    """
    k, t, c = inputs.n_arms, inputs.horizon, inputs.corruption
    scale, offset = inputs.scale, inputs.effective_offset
    adversarial = BoundValue(
        2.0 * scale * math.sqrt((k - 1) * t) + offset, valid=True
    )

    guard = _gap_guard(inputs)
    if guard:
        dead = BoundValue(math.nan, valid=False, reason=guard)
        return RegimeBounds(adversarial, dead, dead)

    s = inputs.inv_gap_sum
    kt = (k - 1) * t
    self_bounding = BoundValue(
        scale * scale * s * (math.log(kt / (s * s)) + 3.0 - 2.0 * math.log(scale))
        + c
        + 2.0 * offset,
        valid=True,
    )

    corrupted = _corrupted_refinement(
        s, c, k, t, scale=scale, sqrt_extra=2.0, tail=2.0 * offset
    )
    return RegimeBounds(adversarial, self_bounding, corrupted)


def _corrupted_refinement(
    s: float, c: float, k: int, t: int, scale: float, sqrt_extra: float, tail: float
) -> BoundValue:
    """Shared shape of the corrupted bound across the two tight families.

    scale * sqrt(C S) * (sqrt(ell) + sqrt_extra) + scale^2 * S * (ell +
    sqrt(2 ell) + 2) + tail with ell = ln((K-1) T / (C S)); the baseline
    family does not use this shape.
    """
    lo, hi = corrupted_validity_range(s, k, t, scale)
    if c <= 0.0:
        return BoundValue(math.nan, valid=False, reason="requires corruption > 0")
    kt = (k - 1) * t
    ell = math.log(kt / (c * s))
    if ell < 0.0:
        value = math.nan
    else:
        value = (
            scale * math.sqrt(c * s) * (math.sqrt(ell) + sqrt_extra)
            + scale * scale * s * (ell + math.sqrt(2.0 * ell) + 2.0)
            + tail
        )
    if lo <= c <= hi:
        return BoundValue(value, valid=True)
    return BoundValue(
        value,
        valid=False,
        reason=f"corruption outside validity range [{lo:.6g}, {hi:.6g}]",
    )


@dataclass(frozen=True)
class SelfBoundingDiagnostics:
    """Internals of the corrupted-bound optimization, for inspection.

    lam is the self-bounding mixing weight, alpha the trade-off parameter
    2 lam / (scale (lam + 1)), alpha_star the optimizer recovered through
    Lambert W (the two agree up to roundoff), and neg_branch_value is
    -W_{-1}(-C S / (e (K-1) T)) >= 1. budget_switch_time is the round
    S^2 / ((K-1) alpha^2) up to which the per-round budget constraint
    binds in the worst case (budget_switch_time_lam is the same quantity
    written through lam). positive_coeff_time, present when the minimal
    gap is known, is (1/(alpha delta_min))^2, the round from which every
    per-arm quadratic coefficient is positive.
    """

    inv_gap_sum: float
    lam: float
    alpha: float
    alpha_star: float
    neg_branch_value: float
    budget_switch_time: float
    budget_switch_time_lam: float
    positive_coeff_time: float | None


def optimal_alpha(
    s: float,
    c: float,
    n_arms: int,
    horizon: int,
    scale: float = 1.0,
    delta_min: float | None = None,
) -> tuple[float, SelfBoundingDiagnostics]:
    """Optimal trade-off parameter for the corrupted refinement.

    alpha* = sqrt(-(S/C) W_{-1}(-C S / (e (K-1) T))), which lies in
    [S / sqrt((K-1) T), 1/scale] whenever the corruption C sits inside
    corrupted_validity_range(S, K, T, scale); outside that range a
    ValueError names the violated inequality.
    """
    if n_arms < 2 or horizon < 2:
        raise ValueError("need at least 2 arms and horizon >= 2")
    if s <= 0.0 or not math.isfinite(s):
        raise ValueError(f"need a finite positive gap sum, got {s}")
    if scale <= 0.0:
        raise ValueError(f"scale must be positive, got {scale}")
    lo, hi = corrupted_validity_range(s, n_arms, horizon, scale)
    if c < lo:
        raise ValueError(
            "corruption below the validity range: need "
            f"scale^2 * S * (ln((K-1) T / (scale S)^2) + 1) = {lo:.6g} <= C, "
            f"got C = {c}"
        )
    if c > hi:
        raise ValueError(
            f"corruption above the validity range: need C <= (K-1) T / S = "
            f"{hi:.6g}, got C = {c}"
        )

    kt = (n_arms - 1) * horizon
    branch_arg = -c * s / (math.e * kt)
    neg_branch = -lambert_w_minus1(branch_arg)
    alpha_star = math.sqrt(s * neg_branch / c)
    lam = scale * alpha_star / (2.0 - scale * alpha_star)
    alpha = 2.0 * lam / (scale * (lam + 1.0))

    switch = s * s / ((n_arms - 1) * alpha_star * alpha_star)
    switch_lam = (
        scale * scale * (lam + 1.0) ** 2 * s * s / (4.0 * lam * lam * (n_arms - 1))
    )
    positive_coeff = None
    if delta_min is not None:
        if delta_min <= 0.0:
            raise ValueError(f"delta_min must be positive, got {delta_min}")
        positive_coeff = (1.0 / (alpha_star * delta_min)) ** 2

    diagnostics = SelfBoundingDiagnostics(
        inv_gap_sum=s,
        lam=lam,
        alpha=alpha,
        alpha_star=alpha_star,
        neg_branch_value=neg_branch,
        budget_switch_time=switch,
        budget_switch_time_lam=switch_lam,
        positive_coeff_time=positive_coeff,
    )
    return alpha_star, diagnostics


def alpha_objective(alpha: float, s: float, c: float, n_arms: int, horizon: int) -> float:
    """Trade-off objective minimized by optimal_alpha.

    f(alpha) = (S/alpha)(3 + ln((K-1) T / S^2)) + (2 S / alpha) ln(alpha)
    + alpha C. Convex on alpha >= S / sqrt((K-1) T).
    """
    if alpha <= 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    kt = (n_arms - 1) * horizon
    return (
        s / alpha * (3.0 + math.log(kt / (s * s)))
        + 2.0 * s / alpha * math.log(alpha)
        + alpha * c
    )


def alpha_objective_derivative(
    alpha: float, s: float, c: float, n_arms: int, horizon: int
) -> float:
    """First derivative of alpha_objective in alpha."""
    if alpha <= 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    kt = (n_arms - 1) * horizon
    return (
        -1.0
        / (alpha * alpha)
        * (
            2.0 * s * math.log(alpha)
            - c * alpha * alpha
            + s * math.log(kt / (s * s))
            + s
        )
    )


def beta_root_equation(beta: float, s: float, c: float, n_arms: int, horizon: int) -> float:
    """Stationarity equation g(beta) = C S beta / ((K-1) T) - ln(beta) - 1.

    Its root beta* gives alpha* = sqrt(S beta* / C) ... the same optimizer
    optimal_alpha recovers through Lambert W.
    """
    if beta <= 0.0:
        raise ValueError(f"beta must be positive, got {beta}")
    return c * s * beta / ((n_arms - 1) * horizon) - math.log(beta) - 1.0


def amplified_alpha_objective(
    scale: float, alpha: float, s: float, c: float, n_arms: int, horizon: int
) -> float:
    """h(scale, alpha) = scale / (2 - scale * alpha) * f(alpha).

    Defined for 0 < alpha < 2 / scale; this is the quantity the corrupted
    refinement actually bounds after the self-bounding mixing step.
    """
    if scale <= 0.0:
        raise ValueError(f"scale must be positive, got {scale}")
    if not 0.0 < alpha < 2.0 / scale:
        raise ValueError(
            f"alpha must lie in (0, 2/scale) = (0, {2.0 / scale:.6g}), got {alpha}"
        )
    return scale / (2.0 - scale * alpha) * alpha_objective(alpha, s, c, n_arms, horizon)
