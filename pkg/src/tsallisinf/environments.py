"""Loss-generating environments.

Four regimes are supported: i.i.d. Bernoulli losses, stochastically
constrained drift (a shared baseline plus fixed per-arm gaps), scripted
adversarial sequences (from a file or the built-in alternating-leader
construction), and Bernoulli losses corrupted by a budgeted attacker.
Every environment can materialize its full (rounds x arms) loss matrix up
front, which is what the episode kernels consume; a per-round sampling
path exists as well and draws from the generator in the same order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, UnsupportedRegimeError

__all__ = [
    "AlternatingLeaderAdversary",
    "BernoulliStochastic",
    "ConstrainedDrift",
    "CorruptedStochastic",
    "CorruptionLedger",
    "Environment",
    "FrontloadAttack",
    "GapProfile",
    "LossStream",
    "RoundSample",
    "ScriptedAdversary",
    "TargetedSwapAttack",
    "alternating_leader_matrix",
    "corruption_attack",
    "environment_from_config",
    "load_script",
    "pseudo_regret",
]


@dataclass(frozen=True)
class GapProfile:
    """Suboptimality gaps with the best arm pinned at exactly zero."""

    gaps: np.ndarray

    def __post_init__(self):
        gaps = np.asarray(self.gaps, dtype=np.float64)
        if gaps.ndim != 1 or gaps.shape[0] < 2:
            raise ValueError("need a 1-D gap vector with at least 2 arms")
        if np.any(gaps < 0.0) or np.any(gaps > 1.0):
            raise ValueError("gaps must lie in [0, 1]")
        if not np.any(gaps == 0.0):
            raise ValueError("the best arm's gap must be exactly zero")
        gaps.setflags(write=False)
        object.__setattr__(self, "gaps", gaps)

    @classmethod
    def from_means(cls, means: np.ndarray) -> "GapProfile":
        means = np.asarray(means, dtype=np.float64)
        return cls(means - means.min())

    @property
    def n_arms(self) -> int:
        return self.gaps.shape[0]

    @property
    def best_arm(self) -> int:
        return int(np.flatnonzero(self.gaps == 0.0)[0])

    @property
    def unique_best(self) -> bool:
        return int(np.sum(self.gaps == 0.0)) == 1

    @property
    def inv_gap_sum(self) -> float:
        """S = sum over suboptimal arms of 1/gap; inf without a unique best."""
        if not self.unique_best:
            return math.inf
        return float(np.sum(1.0 / self.gaps[self.gaps > 0.0]))

    @property
    def delta_min(self) -> float:
        if not self.unique_best:
            return 0.0
        return float(np.min(self.gaps[self.gaps > 0.0]))


@dataclass
class CorruptionLedger:
    """Tracks attack spending against a fixed budget."""

    budget: float
    spent: float = 0.0

    def __post_init__(self):
        if self.budget < 0.0:
            raise ValueError(f"budget must be nonnegative, got {self.budget}")

    def try_spend(self, amount: float) -> bool:
        """Spend `amount` if it fits in the remaining budget."""
        if amount < 0.0:
            raise ValueError(f"cannot spend a negative amount, got {amount}")
        if self.spent + amount > self.budget:
            return False
        self.spent += amount
        return True


@dataclass(frozen=True)
class LossStream:
    """A materialized run of losses.

    observed is what the learner plays against. clean carries the
    pre-corruption realizations for the corrupted regime and is None
    elsewhere. corruption_spent is the attack's total ledger spend.
    """

    observed: np.ndarray
    clean: np.ndarray | None = None
    corruption_spent: float = 0.0


@dataclass(frozen=True)
class RoundSample:
    """One round of losses; clean is filled by the corrupted regime only."""

    observed: np.ndarray
    clean: np.ndarray | None = None


class Environment:
    """Common interface: materialize a loss matrix or sample round by round."""

    regime: str = ""
    n_arms: int = 0
    gap_profile: GapProfile | None = None
    corruption_budget: float = 0.0
    deterministic: bool = False

    def loss_matrix(self, horizon: int, rng: np.random.Generator | None) -> LossStream:
        raise NotImplementedError

    def sample_losses(
        self,
        round_index: int,
        rng: np.random.Generator | None,
        ledger: CorruptionLedger | None = None,
    ) -> RoundSample:
        raise NotImplementedError


def _check_horizon(horizon: int) -> None:
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")


class BernoulliStochastic(Environment):
    """I.i.d. Bernoulli losses with fixed per-arm means."""

    regime = "stochastic"

    def __init__(self, means):
        means = np.asarray(means, dtype=np.float64)
        if means.ndim != 1 or means.shape[0] < 2:
            raise ConfigError("need a 1-D mean vector with at least 2 arms")
        if np.any(means < 0.0) or np.any(means > 1.0):
            raise ConfigError("Bernoulli means must lie in [0, 1]")
        self.means = means
        self.n_arms = means.shape[0]
        self.gap_profile = GapProfile.from_means(means)

    def loss_matrix(self, horizon, rng):
        _check_horizon(horizon)
        draws = rng.random((horizon, self.n_arms))
        return LossStream(observed=(draws < self.means).astype(np.float64))

    def sample_losses(self, round_index, rng, ledger=None):
        draws = rng.random(self.n_arms)
        return RoundSample(observed=(draws < self.means).astype(np.float64))


class ConstrainedDrift(Environment):
    """A shared baseline loss plus fixed per-arm gaps, all in [0, 1].

    The baseline is either uniform on [0, 1 - max gap] or the
    deterministic sinusoid (1 - max gap) (1 + sin(2 pi t / period)) / 2.
    """

    regime = "stochastically-constrained"

    def __init__(self, gaps, baseline: str = "uniform", period: float | None = None):
        try:
            self.gap_profile = GapProfile(np.asarray(gaps, dtype=np.float64))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        self.n_arms = self.gap_profile.n_arms
        if baseline not in ("uniform", "sinusoidal"):
            raise ConfigError(
                f"unknown baseline {baseline!r}, expected 'uniform' or 'sinusoidal'"
            )
        if baseline == "sinusoidal":
            if period is None or period <= 0:
                raise ConfigError("sinusoidal baseline needs a positive period")
        self.baseline = baseline
        self.period = period
        self._headroom = 1.0 - float(np.max(self.gap_profile.gaps))

    def _baseline_at(self, rounds: np.ndarray) -> np.ndarray:
        return self._headroom * (1.0 + np.sin(2.0 * np.pi * rounds / self.period)) / 2.0

    def loss_matrix(self, horizon, rng):
        _check_horizon(horizon)
        if self.baseline == "uniform":
            base = rng.random(horizon) * self._headroom
        else:
            base = self._baseline_at(np.arange(1, horizon + 1, dtype=np.float64))
        return LossStream(observed=base[:, None] + self.gap_profile.gaps[None, :])

    def sample_losses(self, round_index, rng, ledger=None):
        if self.baseline == "uniform":
            base = rng.random() * self._headroom
        else:
            base = float(self._baseline_at(np.asarray(float(round_index))))
        return RoundSample(observed=base + self.gap_profile.gaps)


def load_script(path: str | Path) -> np.ndarray:
    """Load a whitespace-separated loss script, one row per round."""
    try:
        matrix = np.loadtxt(path, ndmin=2, dtype=np.float64)
    except OSError as exc:
        raise ConfigError(f"cannot read script {path}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"malformed script {path}: {exc}") from None
    return matrix


def alternating_leader_matrix(
    horizon: int, n_arms: int, low: float = 0.0, high: float = 1.0
) -> np.ndarray:
    """Adversarial script whose best arm rotates every ceil(sqrt(T)) rounds.

    Within each block one leader arm incurs `low` while every other arm
    incurs `high`; leadership cycles through the arms block by block.
    """
    _check_horizon(horizon)
    if n_arms < 2:
        raise ValueError(f"need at least 2 arms, got {n_arms}")
    if not 0.0 <= low <= high <= 1.0:
        raise ValueError(f"need 0 <= low <= high <= 1, got low={low}, high={high}")
    block = math.isqrt(horizon)
    if block * block < horizon:
        block += 1
    rounds = np.arange(horizon)
    leaders = (rounds // block) % n_arms
    matrix = np.full((horizon, n_arms), high, dtype=np.float64)
    matrix[rounds, leaders] = low
    return matrix


class ScriptedAdversary(Environment):
    """Deterministic losses read from a pre-written script matrix."""

    regime = "adversarial-script"
    deterministic = True

    def __init__(self, script: np.ndarray):
        script = np.asarray(script, dtype=np.float64)
        if script.ndim != 2 or script.shape[1] < 2:
            raise ConfigError("script must be 2-D with at least 2 arms")
        if np.any(script < 0.0) or np.any(script > 1.0):
            raise ConfigError("script losses must lie in [0, 1]")
        self.script = script
        self.n_arms = script.shape[1]

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedAdversary":
        return cls(load_script(path))

    def loss_matrix(self, horizon, rng=None):
        _check_horizon(horizon)
        if self.script.shape[0] < horizon:
            raise ConfigError(
                f"script provides {self.script.shape[0]} rounds, run needs {horizon}"
            )
        return LossStream(observed=self.script[:horizon].copy())

    def sample_losses(self, round_index, rng=None, ledger=None):
        if not 1 <= round_index <= self.script.shape[0]:
            raise ConfigError(
                f"script exhausted: round {round_index} of {self.script.shape[0]}"
            )
        return RoundSample(observed=self.script[round_index - 1].copy())


class AlternatingLeaderAdversary(ScriptedAdversary):
    """Alternating-leader script generated on demand for any horizon."""

    def __init__(self, n_arms: int, low: float = 0.0, high: float = 1.0):
        if n_arms < 2:
            raise ConfigError(f"need at least 2 arms, got {n_arms}")
        if not 0.0 <= low <= high <= 1.0:
            raise ConfigError(f"need 0 <= low <= high <= 1, got low={low}, high={high}")
        self.n_arms = n_arms
        self.low = low
        self.high = high
        self.script = np.empty((0, n_arms))

    def _ensure(self, horizon: int) -> None:
        if self.script.shape[0] < horizon:
            self.script = alternating_leader_matrix(
                horizon, self.n_arms, self.low, self.high
            )

    def loss_matrix(self, horizon, rng=None):
        _check_horizon(horizon)
        self._ensure(horizon)
        return LossStream(observed=self.script[:horizon].copy())

    def sample_losses(self, round_index, rng=None, ledger=None):
        self._ensure(round_index)
        return RoundSample(observed=self.script[round_index - 1].copy())


@dataclass(frozen=True)
class FrontloadAttack:
    """Pushes the best arm's loss to 1 until the budget runs out."""

    best_arm: int
    name: str = field(default="frontload", init=False)

    def propose(self, clean: np.ndarray, round_index: int, rng) -> np.ndarray:
        corrupted = clean.copy()
        corrupted[self.best_arm] = 1.0
        return corrupted


@dataclass(frozen=True)
class TargetedSwapAttack:
    """Makes the best arm look worst and a chosen target arm look free."""

    best_arm: int
    target_arm: int
    name: str = field(default="targeted-swap", init=False)

    def propose(self, clean: np.ndarray, round_index: int, rng) -> np.ndarray:
        corrupted = clean.copy()
        corrupted[self.best_arm] = 1.0
        corrupted[self.target_arm] = 0.0
        return corrupted


def corruption_attack(
    policy,
    clean_losses: np.ndarray,
    ledger: CorruptionLedger,
    round_index: int = 0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Apply one round of a budgeted attack.

    The policy proposes a corrupted vector; its sup-norm distance from the
    clean vector is charged to the ledger. A proposal that would exceed
    the remaining budget is dropped and the clean losses pass through.
    """
    proposed = policy.propose(clean_losses, round_index, rng)
    increment = float(np.max(np.abs(proposed - clean_losses)))
    if ledger.try_spend(increment):
        return proposed
    return clean_losses.copy()


class CorruptedStochastic(Environment):
    """Bernoulli losses filtered through a budgeted corruption attack."""

    regime = "corrupted-stochastic"

    def __init__(self, means, budget: float, attack: str = "frontload",
                 target: int | None = None):
        base = BernoulliStochastic(means)
        self.means = base.means
        self.n_arms = base.n_arms
        self.gap_profile = base.gap_profile
        if budget < 0.0:
            raise ConfigError(f"budget must be nonnegative, got {budget}")
        self.corruption_budget = float(budget)
        best = self.gap_profile.best_arm
        if attack == "frontload":
            self.attack = FrontloadAttack(best_arm=best)
        elif attack == "targeted-swap":
            if target is None:
                raise ConfigError("targeted-swap needs a target arm")
            if not 0 <= target < self.n_arms or target == best:
                raise ConfigError(
                    f"target arm must differ from the best arm {best} "
                    f"and lie in [0, {self.n_arms}), got {target}"
                )
            self.attack = TargetedSwapAttack(best_arm=best, target_arm=target)
        else:
            raise ConfigError(
                f"unknown attack {attack!r}, expected 'frontload' or 'targeted-swap'"
            )

    def loss_matrix(self, horizon, rng):
        _check_horizon(horizon)
        clean = (rng.random((horizon, self.n_arms)) < self.means).astype(np.float64)
        observed, spent = self._apply_attack(clean)
        return LossStream(observed=observed, clean=clean, corruption_spent=spent)

    def _apply_attack(self, clean: np.ndarray) -> tuple[np.ndarray, float]:
        # Bernoulli realizations are binary, so every round's sup-norm cost
        # is exactly 0 or 1 and the ledger admits the first floor(budget)
        # costly rounds; this vectorized path matches the per-round loop.
        best = self.attack.best_arm
        cost = 1.0 - clean[:, best]
        if isinstance(self.attack, TargetedSwapAttack):
            cost = np.maximum(cost, clean[:, self.attack.target_arm])
        costly = np.flatnonzero(cost > 0.0)
        allowed = costly[: math.floor(self.corruption_budget)]
        observed = clean.copy()
        observed[allowed, best] = 1.0
        if isinstance(self.attack, TargetedSwapAttack):
            observed[allowed, self.attack.target_arm] = 0.0
        return observed, float(len(allowed))

    def sample_losses(self, round_index, rng, ledger=None):
        if ledger is None:
            raise ConfigError("the corrupted regime needs a CorruptionLedger")
        clean = (rng.random(self.n_arms) < self.means).astype(np.float64)
        observed = corruption_attack(self.attack, clean, ledger, round_index, rng)
        return RoundSample(observed=observed, clean=clean)


def pseudo_regret(
    actions: np.ndarray, environment: Environment, stream: LossStream | None = None
) -> np.ndarray:
    """Cumulative pseudo-regret after each round.

    For regimes with known gaps this is the running sum of the played
    arms' gaps (pre-corruption gaps in the corrupted regime). For
    deterministic scripts it is the prefix best-in-hindsight regret on
    the script itself. Other regimes have no well-defined pseudo-regret
    and raise UnsupportedRegimeError.
    """
    actions = np.asarray(actions, dtype=np.int64)
    if environment.gap_profile is not None:
        return np.cumsum(environment.gap_profile.gaps[actions])
    if environment.deterministic:
        horizon = actions.shape[0]
        matrix = (
            stream.observed
            if stream is not None
            else environment.loss_matrix(horizon, rng=None).observed
        )
        incurred = np.cumsum(matrix[np.arange(horizon), actions])
        best_fixed = np.min(np.cumsum(matrix, axis=0), axis=1)
        return incurred - best_fixed
    raise UnsupportedRegimeError(
        "pseudo-regret needs known gaps or a deterministic script"
    )


def environment_from_config(config: dict) -> Environment:
    """Build an environment from its JSON configuration block."""
    if not isinstance(config, dict):
        raise ConfigError("environment config must be an object")
    config = dict(config)
    regime = config.pop("regime", None)
    if regime == "stochastic":
        means = config.pop("means", None)
        _reject_extras(regime, config)
        if means is None:
            raise ConfigError("stochastic regime needs 'means'")
        return BernoulliStochastic(means)
    if regime == "stochastically-constrained":
        gaps = config.pop("gaps", None)
        baseline = config.pop("baseline", "uniform")
        period = config.pop("period", None)
        _reject_extras(regime, config)
        if gaps is None:
            raise ConfigError("stochastically-constrained regime needs 'gaps'")
        return ConstrainedDrift(gaps, baseline=baseline, period=period)
    if regime == "adversarial-script":
        path = config.pop("path", None)
        builtin = config.pop("builtin", None)
        if (path is None) == (builtin is None):
            raise ConfigError(
                "adversarial-script regime needs exactly one of 'path' or 'builtin'"
            )
        if path is not None:
            _reject_extras(regime, config)
            return ScriptedAdversary.from_file(path)
        n_arms = config.pop("n_arms", None)
        low = config.pop("low", 0.0)
        high = config.pop("high", 1.0)
        _reject_extras(regime, config)
        if builtin != "alternating-leader":
            raise ConfigError(f"unknown builtin script {builtin!r}")
        if n_arms is None:
            raise ConfigError("builtin alternating-leader needs 'n_arms'")
        return AlternatingLeaderAdversary(n_arms, low=low, high=high)
    if regime == "corrupted-stochastic":
        means = config.pop("means", None)
        budget = config.pop("budget", None)
        attack = config.pop("attack", "frontload")
        target = config.pop("target", None)
        _reject_extras(regime, config)
        if means is None or budget is None:
            raise ConfigError("corrupted-stochastic regime needs 'means' and 'budget'")
        return CorruptedStochastic(means, budget, attack=attack, target=target)
    raise ConfigError(f"unknown regime {regime!r}")


def _reject_extras(regime: str, leftovers: dict) -> None:
    if leftovers:
        raise ConfigError(
            f"unexpected keys for regime {regime!r}: {sorted(leftovers)}"
        )
