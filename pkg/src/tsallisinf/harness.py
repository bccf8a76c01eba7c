"""Experiment harness.

Loads JSON experiment configs, runs multi-seed episodes through the
selected kernel, aggregates regret and mean weights deterministically
(fixed seed-order reduction, so thread count never changes results), and
writes the two output CSVs. Also home to the sqrt-condition verifier,
the per-checkpoint bound overlay, and the old-vs-new regime table.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import backend
from .bounds import (
    BoundInputs,
    BoundValue,
    RegimeBounds,
    baseline_bounds,
    default_offset,
    sqrt_condition_bounds,
    tsallis_bounds,
)
from .environments import Environment, environment_from_config, pseudo_regret
from .errors import ConfigError, UnsupportedRegimeError
from .learner import ESTIMATORS

__all__ = [
    "AggregateResult",
    "ExperimentConfig",
    "REGRET_CSV_COLUMNS",
    "RegimeRow",
    "RegretTrace",
    "SqrtConditionReport",
    "bound_overlay",
    "default_checkpoints",
    "regime_table",
    "run_experiment",
    "run_single_episode",
    "verify_sqrt_condition",
    "write_regime_csv",
    "write_regret_csv",
    "write_weights_csv",
]

REGRET_CSV_COLUMNS = (
    "checkpoint,mean_regret,stderr,"
    "bound_t1_adv,bound_t1_sto,bound_t1_stoC,"
    "bound_t2_adv,bound_t2_sto,bound_t2_stoC,"
    "bound_t3_adv,bound_t3_sto,bound_t3_stoC"
)


def default_checkpoints(horizon: int) -> tuple[int, ...]:
    """Geometric checkpoint grid horizon/2^10, ..., horizon/2, horizon."""
    points = {max(1, round(horizon / 2**k)) for k in range(11)}
    return tuple(sorted(points))


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully validated experiment description.

    seed_entropies feed numpy SeedSequence directly: each seed s spawns
    two child sequences, the first for the environment's generator and
    the second for the learner's sampling uniforms. A master/count config
    expands to entropies (master, 0), ..., (master, count-1).
    """

    environment: Environment
    horizon: int
    seed_entropies: tuple
    estimator: str = "reduced-variance"
    checkpoints: tuple[int, ...] = ()
    out_dir: Path | None = None
    weights_stride: int = 1

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Path | None = None) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("experiment config must be a JSON object")
        raw = dict(raw)

        env_block = raw.pop("environment", None)
        if env_block is None:
            raise ConfigError("config needs an 'environment' block")
        if base_dir is not None and isinstance(env_block, dict) and "path" in env_block:
            env_block = dict(env_block)
            env_block["path"] = str(Path(base_dir) / env_block["path"])
        environment = environment_from_config(env_block)

        horizon = raw.pop("horizon", None)
        if not isinstance(horizon, int) or horizon < 1:
            raise ConfigError(f"horizon must be a positive integer, got {horizon!r}")

        seeds = raw.pop("seeds", None)
        entropies = _expand_seeds(seeds)

        checkpoints = raw.pop("checkpoints", None)
        if checkpoints is None:
            checkpoints = default_checkpoints(horizon)
        else:
            if (
                not isinstance(checkpoints, list)
                or not checkpoints
                or any(not isinstance(c, int) for c in checkpoints)
            ):
                raise ConfigError("checkpoints must be a non-empty list of integers")
            if any(c < 1 or c > horizon for c in checkpoints):
                raise ConfigError("checkpoints must lie in [1, horizon]")
            if sorted(set(checkpoints)) != checkpoints:
                raise ConfigError("checkpoints must be strictly increasing")
            checkpoints = tuple(checkpoints)

        learner_block = raw.pop("learner", {})
        if not isinstance(learner_block, dict):
            raise ConfigError("'learner' must be an object")
        learner_block = dict(learner_block)
        estimator = learner_block.pop("estimator", "reduced-variance")
        if estimator not in ESTIMATORS:
            raise ConfigError(
                f"unknown estimator {estimator!r}, expected one of {ESTIMATORS}"
            )
        if learner_block:
            raise ConfigError(f"unexpected learner keys: {sorted(learner_block)}")

        output_block = raw.pop("output", {})
        if not isinstance(output_block, dict):
            raise ConfigError("'output' must be an object")
        output_block = dict(output_block)
        out_dir = output_block.pop("dir", None)
        stride = output_block.pop("weights_stride", 1)
        if not isinstance(stride, int) or stride < 1:
            raise ConfigError(f"weights_stride must be a positive integer, got {stride!r}")
        if output_block:
            raise ConfigError(f"unexpected output keys: {sorted(output_block)}")

        if raw:
            raise ConfigError(f"unexpected config keys: {sorted(raw)}")

        return cls(
            environment=environment,
            horizon=horizon,
            seed_entropies=entropies,
            estimator=estimator,
            checkpoints=checkpoints,
            out_dir=Path(out_dir) if out_dir is not None else None,
            weights_stride=stride,
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON in {path}: {exc}") from None
        return cls.from_dict(raw, base_dir=path.parent)

    def bound_inputs(self, horizon: int | None = None) -> BoundInputs:
        """Bound parameters for this run; corruption enters as twice the
        attack budget, the constraint constant the corrupted regime
        provably satisfies."""
        gp = self.environment.gap_profile
        return BoundInputs(
            n_arms=self.environment.n_arms,
            horizon=self.horizon if horizon is None else horizon,
            gaps=None if gp is None else gp.gaps,
            corruption=2.0 * self.environment.corruption_budget,
        )


def _expand_seeds(seeds) -> tuple:
    if isinstance(seeds, list):
        if not seeds or any(not isinstance(s, int) or s < 0 for s in seeds):
            raise ConfigError("seeds list must hold nonnegative integers")
        return tuple(seeds)
    if isinstance(seeds, dict):
        seeds = dict(seeds)
        master = seeds.pop("master", None)
        count = seeds.pop("count", None)
        if seeds:
            raise ConfigError(f"unexpected seed keys: {sorted(seeds)}")
        if not isinstance(master, int) or master < 0:
            raise ConfigError("seeds.master must be a nonnegative integer")
        if not isinstance(count, int) or count < 1:
            raise ConfigError("seeds.count must be a positive integer")
        return tuple((master, i) for i in range(count))
    raise ConfigError("seeds must be a list of integers or {master, count}")


@dataclass
class RegretTrace:
    """Everything one episode produced."""

    horizon: int
    actions: np.ndarray
    incurred_losses: np.ndarray
    cumulative_pseudo_regret: np.ndarray
    weights: np.ndarray
    corruption_spent: float = 0.0


def run_single_episode(
    environment: Environment,
    horizon: int,
    estimator: str = "reduced-variance",
    seed=0,
    kernel_backend: str | None = None,
) -> RegretTrace:
    """Run one seeded episode and keep its full trace."""
    ss = np.random.SeedSequence(seed)
    env_ss, learner_ss = ss.spawn(2)
    stream = environment.loss_matrix(horizon, np.random.default_rng(env_ss))
    uniforms = np.random.default_rng(learner_ss).random(horizon)
    actions, incurred, weights = backend.run_episode(
        stream.observed, uniforms, estimator, backend=kernel_backend
    )
    curve = pseudo_regret(actions, environment, stream)
    return RegretTrace(
        horizon=horizon,
        actions=actions,
        incurred_losses=incurred,
        cumulative_pseudo_regret=curve,
        weights=weights,
        corruption_spent=stream.corruption_spent,
    )


@dataclass
class _EpisodeOutcome:
    regret_at_checkpoints: np.ndarray
    final_regret: float
    weights: np.ndarray
    corruption_spent: float


def _episode_outcome(config: ExperimentConfig, entropy) -> _EpisodeOutcome:
    trace = run_single_episode(
        config.environment, config.horizon, config.estimator, seed=entropy
    )
    idx = np.asarray(config.checkpoints, dtype=np.int64) - 1
    return _EpisodeOutcome(
        regret_at_checkpoints=trace.cumulative_pseudo_regret[idx],
        final_regret=float(trace.cumulative_pseudo_regret[-1]),
        weights=trace.weights,
        corruption_spent=trace.corruption_spent,
    )


@dataclass
class AggregateResult:
    """Seed-averaged outcome of an experiment."""

    config: ExperimentConfig
    checkpoints: np.ndarray
    per_seed_regret: np.ndarray
    final_regret_per_seed: np.ndarray
    mean_weights: np.ndarray
    per_seed_sqrt_stat: np.ndarray | None
    corruption_spent: np.ndarray

    @property
    def n_seeds(self) -> int:
        return self.per_seed_regret.shape[0]

    @property
    def mean_regret(self) -> np.ndarray:
        return self.per_seed_regret.mean(axis=0)

    @property
    def stderr(self) -> np.ndarray:
        return _stderr(self.per_seed_regret)

    @property
    def final_mean_regret(self) -> float:
        return float(self.final_regret_per_seed.mean())

    @property
    def final_stderr(self) -> float:
        return float(_stderr(self.final_regret_per_seed[:, None])[0])


def _stderr(per_seed: np.ndarray) -> np.ndarray:
    n = per_seed.shape[0]
    if n < 2:
        return np.zeros(per_seed.shape[1])
    return per_seed.std(axis=0, ddof=1) / math.sqrt(n)


def _sqrt_stat(weights: np.ndarray, best_arm: int) -> float:
    """sum_t sum_{i != best} sqrt(w_ti / t) for one episode's weights."""
    horizon = weights.shape[0]
    inv_sqrt_t = 1.0 / np.sqrt(np.arange(1, horizon + 1, dtype=np.float64))
    others = np.delete(weights, best_arm, axis=1)
    return float(np.sum(np.sqrt(others) * inv_sqrt_t[:, None]))


def run_experiment(config: ExperimentConfig, threads: int = 1) -> AggregateResult:
    """Run every seed and reduce in seed order.

    threads > 1 distributes seeds over a process pool in fixed-size
    waves; the reduction always happens in seed order, so results are
    identical for any thread count.
    """
    if threads < 1:
        raise ConfigError(f"threads must be >= 1, got {threads}")
    entropies = config.seed_entropies
    n_seeds = len(entropies)
    n_checkpoints = len(config.checkpoints)

    gp = config.environment.gap_profile
    track_sqrt = gp is not None and gp.unique_best
    best_arm = gp.best_arm if track_sqrt else -1

    per_seed_regret = np.empty((n_seeds, n_checkpoints))
    final_regret = np.empty(n_seeds)
    spent = np.empty(n_seeds)
    sqrt_stats = np.empty(n_seeds) if track_sqrt else None
    weight_sum = np.zeros((config.horizon, config.environment.n_arms))

    def consume(i: int, outcome: _EpisodeOutcome) -> None:
        per_seed_regret[i] = outcome.regret_at_checkpoints
        final_regret[i] = outcome.final_regret
        spent[i] = outcome.corruption_spent
        np.add(weight_sum, outcome.weights, out=weight_sum)
        if sqrt_stats is not None:
            sqrt_stats[i] = _sqrt_stat(outcome.weights, best_arm)

    if threads == 1:
        for i, entropy in enumerate(entropies):
            consume(i, _episode_outcome(config, entropy))
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            done = 0
            while done < n_seeds:
                wave = entropies[done : done + threads]
                outcomes = pool.map(
                    _episode_outcome, [config] * len(wave), wave
                )
                for j, outcome in enumerate(outcomes):
                    consume(done + j, outcome)
                done += len(wave)

    return AggregateResult(
        config=config,
        checkpoints=np.asarray(config.checkpoints, dtype=np.int64),
        per_seed_regret=per_seed_regret,
        final_regret_per_seed=final_regret,
        mean_weights=weight_sum / n_seeds,
        per_seed_sqrt_stat=sqrt_stats,
        corruption_spent=spent,
    )


def bound_overlay(
    inputs: BoundInputs, checkpoints
) -> list[dict[str, BoundValue]]:
    """Evaluate all three bound families at each checkpoint horizon.

    Checkpoints too small for the formulas (horizon < 2) yield rows whose
    entries are all flagged invalid.
    """
    rows = []
    for cp in checkpoints:
        try:
            at_cp = dataclasses.replace(inputs, horizon=int(cp))
        except ValueError as exc:
            dead = BoundValue(math.nan, valid=False, reason=str(exc))
            rows.append({name: dead for name in _BOUND_COLUMNS})
            continue
        families = {
            "t1": baseline_bounds(at_cp),
            "t2": tsallis_bounds(at_cp),
            "t3": sqrt_condition_bounds(at_cp),
        }
        row: dict[str, BoundValue] = {}
        for tier, bounds_ in families.items():
            row[f"bound_{tier}_adv"] = bounds_.adversarial
            row[f"bound_{tier}_sto"] = bounds_.self_bounding
            row[f"bound_{tier}_stoC"] = bounds_.corrupted
        rows.append(row)
    return rows


_BOUND_COLUMNS = tuple(REGRET_CSV_COLUMNS.split(",")[3:])


def _format_value(value: float) -> str:
    return repr(float(value))


def _format_bound(bv: BoundValue) -> str:
    if not bv.valid or math.isnan(bv.value):
        return "NA"
    return _format_value(bv.value)


def write_regret_csv(result: AggregateResult, path: str | Path) -> Path:
    """Write the checkpointed regret table with the bound overlay."""
    inputs = result.config.bound_inputs()
    overlay = bound_overlay(inputs, result.checkpoints)
    mean = result.mean_regret
    err = result.stderr
    buffer = io.StringIO()
    buffer.write(REGRET_CSV_COLUMNS + "\n")
    for i, cp in enumerate(result.checkpoints):
        cells = [str(int(cp)), _format_value(mean[i]), _format_value(err[i])]
        cells.extend(_format_bound(overlay[i][name]) for name in _BOUND_COLUMNS)
        buffer.write(",".join(cells) + "\n")
    path = Path(path)
    path.write_text(buffer.getvalue())
    return path


def write_weights_csv(result: AggregateResult, path: str | Path) -> Path:
    """Write seed-averaged weights at the configured round stride."""
    stride = result.config.weights_stride
    n_arms = result.mean_weights.shape[1]
    header = "round," + ",".join(f"mean_w_{i + 1}" for i in range(n_arms))
    buffer = io.StringIO()
    buffer.write(header + "\n")
    for r in range(0, result.mean_weights.shape[0], stride):
        row = result.mean_weights[r]
        buffer.write(
            str(r + 1) + "," + ",".join(_format_value(v) for v in row) + "\n"
        )
    path = Path(path)
    path.write_text(buffer.getvalue())
    return path


@dataclass(frozen=True)
class SqrtConditionReport:
    """Empirical check of the sqrt-condition at the final horizon.

    lhs is the seed-mean final regret. rhs uses the seed-mean weights in
    scale * sum_t sum_{i != i*} sqrt(E[w_ti]/t) + offset; rhs_refined is
    the tighter form sum sqrt(E[w]/t) + sum E[w]/(4 sqrt(t)) + offset.
    rhs_stderr is a Monte-Carlo error proxy from the per-seed spread of
    the sqrt statistic. satisfied flags lhs <= rhs within twice the
    pooled standard error (same for the refined form).
    """

    lhs: float
    lhs_stderr: float
    rhs: float
    rhs_refined: float
    rhs_stderr: float
    satisfied: bool
    satisfied_refined: bool


def verify_sqrt_condition(
    result: AggregateResult, scale: float = 1.25, offset: float | None = None
) -> SqrtConditionReport:
    """Check the learner's sqrt-condition on an aggregated run."""
    gp = result.config.environment.gap_profile
    if gp is None or not gp.unique_best:
        raise UnsupportedRegimeError(
            "sqrt-condition check needs a unique best arm"
        )
    if result.per_seed_sqrt_stat is None:
        raise UnsupportedRegimeError("run was aggregated without sqrt statistics")
    horizon = result.config.horizon
    if offset is None:
        offset = default_offset(result.config.environment.n_arms, horizon)

    inv_sqrt_t = 1.0 / np.sqrt(np.arange(1, horizon + 1, dtype=np.float64))
    others = np.delete(result.mean_weights, gp.best_arm, axis=1)
    sqrt_term = float(np.sum(np.sqrt(others) * inv_sqrt_t[:, None]))
    linear_term = float(np.sum(others * inv_sqrt_t[:, None]))

    rhs = scale * sqrt_term + offset
    rhs_refined = sqrt_term + 0.25 * linear_term + offset

    lhs = result.final_mean_regret
    lhs_stderr = result.final_stderr
    n = result.n_seeds
    if n > 1:
        rhs_stderr = scale * float(
            result.per_seed_sqrt_stat.std(ddof=1) / math.sqrt(n)
        )
    else:
        rhs_stderr = 0.0
    pooled = math.sqrt(lhs_stderr**2 + rhs_stderr**2)
    return SqrtConditionReport(
        lhs=lhs,
        lhs_stderr=lhs_stderr,
        rhs=rhs,
        rhs_refined=rhs_refined,
        rhs_stderr=rhs_stderr,
        satisfied=lhs <= rhs + 2.0 * pooled,
        satisfied_refined=lhs <= rhs_refined + 2.0 * pooled,
    )


@dataclass(frozen=True)
class RegimeRow:
    """One old-vs-new comparison row of the regime table."""

    n_arms: int
    horizon: int
    corruption: float
    inv_gap_sum: float
    old_self_bounding: BoundValue
    new_self_bounding: BoundValue
    old_corrupted: BoundValue
    new_corrupted: BoundValue
    reference_ratio: float

    def ratio(self, old: BoundValue, new: BoundValue) -> float:
        if not (old.valid and new.valid) or new.value <= 0.0:
            return math.nan
        return old.value / new.value


def regime_table(instances: list[dict]) -> list[RegimeRow]:
    """Old-vs-new bound comparison over a parameter grid.

    Each instance dict carries gaps, horizon, and corruption; corruption
    may be the string "theta" for C = horizon * n_arms /
    (ln(horizon) * S). The reference_ratio column reports
    sqrt(ln T / ln ln T), the improvement scale the theta rows are
    compared against; it is informational and never asserted.
    """
    rows = []
    for spec_ in instances:
        if not isinstance(spec_, dict):
            raise ConfigError("each table instance must be an object")
        spec_ = dict(spec_)
        gaps = spec_.pop("gaps", None)
        horizon = spec_.pop("horizon", None)
        corruption = spec_.pop("corruption", 0.0)
        if spec_:
            raise ConfigError(f"unexpected table keys: {sorted(spec_)}")
        if gaps is None or horizon is None:
            raise ConfigError("table instances need 'gaps' and 'horizon'")
        if not isinstance(horizon, int) or horizon < 2:
            raise ConfigError(f"table horizon must be an integer >= 2, got {horizon!r}")

        gaps = np.asarray(gaps, dtype=np.float64)
        n_arms = gaps.shape[0]
        try:
            probe = BoundInputs(n_arms=n_arms, horizon=horizon, gaps=gaps)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad table instance: {exc}") from None
        s = probe.inv_gap_sum
        if corruption == "theta":
            if not math.isfinite(s):
                raise ConfigError("theta corruption needs a unique best arm")
            corruption = horizon * n_arms / (math.log(horizon) * s)
        elif not isinstance(corruption, (int, float)) or corruption < 0:
            raise ConfigError(
                f"corruption must be nonnegative or 'theta', got {corruption!r}"
            )

        inputs = BoundInputs(
            n_arms=n_arms, horizon=horizon, gaps=gaps, corruption=float(corruption)
        )
        old = baseline_bounds(inputs)
        new = tsallis_bounds(inputs)
        ln_t = math.log(horizon)
        rows.append(
            RegimeRow(
                n_arms=n_arms,
                horizon=horizon,
                corruption=float(corruption),
                inv_gap_sum=s,
                old_self_bounding=old.self_bounding,
                new_self_bounding=new.self_bounding,
                old_corrupted=old.corrupted,
                new_corrupted=new.corrupted,
                reference_ratio=math.sqrt(ln_t / math.log(ln_t)),
            )
        )
    return rows


REGIME_CSV_COLUMNS = (
    "n_arms,horizon,corruption,inv_gap_sum,"
    "old_self_bounding,new_self_bounding,self_bounding_ratio,"
    "old_corrupted,new_corrupted,corrupted_ratio,reference_ratio"
)


def write_regime_csv(rows: list[RegimeRow], path: str | Path) -> Path:
    buffer = io.StringIO()
    buffer.write(REGIME_CSV_COLUMNS + "\n")
    for row in rows:
        sto_ratio = row.ratio(row.old_self_bounding, row.new_self_bounding)
        cor_ratio = row.ratio(row.old_corrupted, row.new_corrupted)
        cells = [
            str(row.n_arms),
            str(row.horizon),
            _format_value(row.corruption),
            _format_value(row.inv_gap_sum),
            _format_bound(row.old_self_bounding),
            _format_bound(row.new_self_bounding),
            "NA" if math.isnan(sto_ratio) else _format_value(sto_ratio),
            _format_bound(row.old_corrupted),
            _format_bound(row.new_corrupted),
            "NA" if math.isnan(cor_ratio) else _format_value(cor_ratio),
            _format_value(row.reference_ratio),
        ]
        buffer.write(",".join(cells) + "\n")
    path = Path(path)
    path.write_text(buffer.getvalue())
    return path
