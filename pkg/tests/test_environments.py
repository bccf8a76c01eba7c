"""Loss-generating regimes, corruption accounting, and pseudo-regret."""

import itertools
import math

import numpy as np
import pytest

from tsallisinf.environments import (
    AlternatingLeaderAdversary,
    BernoulliStochastic,
    ConstrainedDrift,
    CorruptedStochastic,
    CorruptionLedger,
    Environment,
    FrontloadAttack,
    GapProfile,
    ScriptedAdversary,
    TargetedSwapAttack,
    alternating_leader_matrix,
    corruption_attack,
    environment_from_config,
    load_script,
    pseudo_regret,
)
from tsallisinf.errors import ConfigError, UnsupportedRegimeError


class TestGapProfile:
    def test_derived_quantities(self):
        gp = GapProfile(np.array([0.0, 0.5, 0.25]))
        assert gp.n_arms == 3
        assert gp.best_arm == 0
        assert gp.unique_best
        assert gp.inv_gap_sum == pytest.approx(6.0, rel=1e-12)
        assert gp.delta_min == 0.25

    def test_from_means(self):
        gp = GapProfile.from_means(np.array([0.4, 0.1, 0.9]))
        assert gp.best_arm == 1
        assert np.allclose(gp.gaps, [0.3, 0.0, 0.8])

    def test_multiple_best_arms(self):
        gp = GapProfile(np.array([0.0, 0.0, 1.0]))
        assert not gp.unique_best
        assert math.isinf(gp.inv_gap_sum)
        assert gp.delta_min == 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            GapProfile(np.array([0.1, 0.2]))
        with pytest.raises(ValueError):
            GapProfile(np.array([0.0, 1.5]))
        with pytest.raises(ValueError):
            GapProfile(np.array([0.0, -0.1]))
        with pytest.raises(ValueError):
            GapProfile(np.array([0.0]))

    def test_gaps_are_write_protected(self):
        gp = GapProfile(np.array([0.0, 0.5]))
        with pytest.raises(ValueError):
            gp.gaps[1] = 0.9


class TestBernoulliStochastic:
    def test_means_recovered_within_monte_carlo_error(self):
        means = np.array([0.5, 0.6])
        env = BernoulliStochastic(means)
        stream = env.loss_matrix(10**5, np.random.default_rng(42))
        empirical = stream.observed.mean(axis=0)
        sigma = np.sqrt(means * (1.0 - means) / 10**5)
        assert np.all(np.abs(empirical - means) <= 4.0 * sigma)
        assert set(np.unique(stream.observed)) <= {0.0, 1.0}

    def test_same_seed_reproduces_the_stream(self):
        env = BernoulliStochastic([0.3, 0.7, 0.5])
        a = env.loss_matrix(1000, np.random.default_rng(7)).observed
        b = env.loss_matrix(1000, np.random.default_rng(7)).observed
        assert np.array_equal(a, b)

    def test_per_round_path_matches_matrix_path(self):
        env = BernoulliStochastic([0.3, 0.7])
        matrix = env.loss_matrix(50, np.random.default_rng(3)).observed
        rng = np.random.default_rng(3)
        rows = [env.sample_losses(t, rng).observed for t in range(1, 51)]
        assert np.array_equal(matrix, np.asarray(rows))

    def test_validation(self):
        with pytest.raises(ConfigError):
            BernoulliStochastic([0.5])
        with pytest.raises(ConfigError):
            BernoulliStochastic([0.5, 1.2])


class TestConstrainedDrift:
    def test_gaps_are_exact_every_round(self):
        gaps = np.array([0.0, 0.2, 0.45])
        env = ConstrainedDrift(gaps)
        stream = env.loss_matrix(2000, np.random.default_rng(0)).observed
        differences = stream - stream[:, [0]]
        assert np.allclose(differences, gaps[None, :], atol=1e-12)
        assert np.all(stream >= 0.0) and np.all(stream <= 1.0)

    def test_sinusoidal_baseline(self):
        gaps = np.array([0.0, 0.4])
        env = ConstrainedDrift(gaps, baseline="sinusoidal", period=16.0)
        stream = env.loss_matrix(64, rng=None).observed
        rounds = np.arange(1, 65)
        expected = 0.6 * (1.0 + np.sin(2.0 * np.pi * rounds / 16.0)) / 2.0
        assert np.allclose(stream[:, 0], expected, atol=1e-12)
        assert np.allclose(stream[:, 1] - stream[:, 0], 0.4, atol=1e-12)

    def test_validation(self):
        with pytest.raises(ConfigError):
            ConstrainedDrift([0.1, 0.2])
        with pytest.raises(ConfigError):
            ConstrainedDrift([0.0, 0.2], baseline="sinusoidal")
        with pytest.raises(ConfigError):
            ConstrainedDrift([0.0, 0.2], baseline="sawtooth")


class TestScriptedAdversary:
    def test_round_trip_through_a_file(self, tmp_path):
        matrix = np.array([[0.0, 1.0], [0.5, 0.25], [1.0, 0.0]])
        path = tmp_path / "script.txt"
        np.savetxt(path, matrix)
        env = ScriptedAdversary.from_file(path)
        assert np.allclose(env.loss_matrix(3).observed, matrix)
        assert np.allclose(env.sample_losses(2).observed, matrix[1])

    def test_script_exhaustion(self, tmp_path):
        path = tmp_path / "short.txt"
        np.savetxt(path, np.zeros((2, 2)))
        env = ScriptedAdversary.from_file(path)
        with pytest.raises(ConfigError):
            env.loss_matrix(3)
        with pytest.raises(ConfigError):
            env.sample_losses(3)

    def test_malformed_and_missing_files(self, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("0.1 0.2\nnot numbers\n")
        with pytest.raises(ConfigError):
            load_script(bad)
        with pytest.raises(ConfigError):
            load_script(tmp_path / "absent.txt")

    def test_script_value_validation(self):
        with pytest.raises(ConfigError):
            ScriptedAdversary(np.array([[0.0, 2.0]]))
        with pytest.raises(ConfigError):
            ScriptedAdversary(np.zeros((3, 1)))


class TestAlternatingLeader:
    def test_block_structure(self):
        matrix = alternating_leader_matrix(10, 2, low=0.0, high=1.0)
        # ceil(sqrt(10)) = 4: arm 1 leads rounds 1-4, arm 2 rounds 5-8,
        # arm 1 again rounds 9-10
        leaders = np.argmin(matrix, axis=1)
        assert leaders.tolist() == [0, 0, 0, 0, 1, 1, 1, 1, 0, 0]
        assert np.all(np.sort(np.unique(matrix)) == [0.0, 1.0])
        assert np.all(matrix.sum(axis=1) == matrix.shape[1] - 1)

    def test_custom_levels(self):
        matrix = alternating_leader_matrix(9, 3, low=0.1, high=0.8)
        assert matrix.shape == (9, 3)
        assert np.all((matrix == 0.1).sum(axis=1) == 1)
        assert np.all((matrix == 0.8).sum(axis=1) == 2)

    def test_environment_wrapper_extends_on_demand(self):
        env = AlternatingLeaderAdversary(2)
        short = env.loss_matrix(10).observed
        longer = env.loss_matrix(100).observed
        assert np.array_equal(
            short, alternating_leader_matrix(10, 2)
        )
        assert longer.shape == (100, 2)

    def test_validation(self):
        with pytest.raises(ValueError):
            alternating_leader_matrix(10, 1)
        with pytest.raises(ValueError):
            alternating_leader_matrix(10, 2, low=0.5, high=0.4)
        with pytest.raises(ConfigError):
            AlternatingLeaderAdversary(2, low=-0.5)


class TestCorruptionLedger:
    def test_spend_accounting(self):
        ledger = CorruptionLedger(budget=1.0)
        assert ledger.try_spend(0.6)
        assert not ledger.try_spend(0.5)
        assert ledger.spent == 0.6
        assert ledger.try_spend(0.4)
        assert ledger.spent == 1.0
        assert not ledger.try_spend(1e-9)

    def test_validation(self):
        with pytest.raises(ValueError):
            CorruptionLedger(budget=-1.0)
        ledger = CorruptionLedger(budget=1.0)
        with pytest.raises(ValueError):
            ledger.try_spend(-0.1)


class TestCorruptionAttack:
    def test_zero_budget_passes_clean_losses_through(self):
        ledger = CorruptionLedger(budget=0.0)
        policy = FrontloadAttack(best_arm=0)
        clean = np.array([0.0, 1.0])
        out = corruption_attack(policy, clean, ledger)
        assert np.array_equal(out, clean)
        assert ledger.spent == 0.0

    def test_frontload_corrupts_the_earliest_rounds(self):
        # best arm's clean loss is always 0, so every round costs 1 and
        # exactly rounds 1..5 are corrupted under budget 5
        env = CorruptedStochastic([0.0, 0.6], budget=5.0)
        stream = env.loss_matrix(50, np.random.default_rng(1))
        best_column = stream.observed[:, 0]
        assert np.array_equal(best_column[:5], np.ones(5))
        assert np.array_equal(best_column[5:], stream.clean[5:, 0])
        assert stream.corruption_spent == 5.0

    def test_zero_budget_equals_the_stochastic_stream(self):
        means = [0.25, 0.5, 0.75]
        corrupted = CorruptedStochastic(means, budget=0.0)
        stochastic = BernoulliStochastic(means)
        a = corrupted.loss_matrix(500, np.random.default_rng(9))
        b = stochastic.loss_matrix(500, np.random.default_rng(9))
        assert np.array_equal(a.observed, b.observed)
        assert a.corruption_spent == 0.0

    def test_spent_never_exceeds_the_budget(self):
        rng = np.random.default_rng(13)
        for _ in range(30):
            k = int(rng.integers(2, 6))
            means = np.round(rng.random(k), 3)
            means[int(rng.integers(0, k))] = 0.0
            budget = float(rng.random() * 20.0)
            attack = "frontload" if rng.random() < 0.5 else "targeted-swap"
            target = None
            if attack == "targeted-swap":
                best = int(np.argmin(means))
                target = (best + 1) % k
            env = CorruptedStochastic(means, budget, attack=attack, target=target)
            stream = env.loss_matrix(int(rng.integers(10, 400)), rng)
            assert stream.corruption_spent <= budget
            assert np.all(stream.observed >= 0.0)
            assert np.all(stream.observed <= 1.0)

    def test_matrix_path_matches_the_per_round_ledger(self):
        means = [0.1, 0.4, 0.7]
        budget = 7.0
        env = CorruptedStochastic(means, budget, attack="targeted-swap", target=2)
        stream = env.loss_matrix(200, np.random.default_rng(21))
        ledger = CorruptionLedger(budget)
        rows = [
            corruption_attack(env.attack, stream.clean[t], ledger, t + 1)
            for t in range(200)
        ]
        assert np.array_equal(stream.observed, np.asarray(rows))
        assert stream.corruption_spent == ledger.spent

    def test_targeted_swap_needs_a_valid_target(self):
        with pytest.raises(ConfigError):
            CorruptedStochastic([0.0, 0.5], budget=1.0, attack="targeted-swap")
        with pytest.raises(ConfigError):
            CorruptedStochastic(
                [0.0, 0.5], budget=1.0, attack="targeted-swap", target=0
            )
        with pytest.raises(ConfigError):
            CorruptedStochastic([0.0, 0.5], budget=1.0, attack="mystery")

    def test_displacement_stays_within_twice_the_spend(self):
        # exhaustively over all K=2 action sequences at T=10: corrupting
        # a stream moves the regret against any fixed comparator by at
        # most twice the ledger spend
        horizon = 10
        rng = np.random.default_rng(17)
        sequences = np.array(list(itertools.product([0, 1], repeat=horizon)))
        attacks = [
            FrontloadAttack(best_arm=0),
            TargetedSwapAttack(best_arm=0, target_arm=1),
        ]
        for attack in attacks:
            for _ in range(5):
                clean = (rng.random((horizon, 2)) < [0.3, 0.7]).astype(float)
                ledger = CorruptionLedger(budget=3.2)
                observed = np.asarray(
                    [
                        corruption_attack(attack, clean[t], ledger, t + 1)
                        for t in range(horizon)
                    ]
                )
                rounds = np.arange(horizon)
                clean_played = clean[rounds, sequences].sum(axis=1)
                observed_played = observed[rounds, sequences].sum(axis=1)
                for comparator in (0, 1):
                    clean_regret = clean_played - clean[:, comparator].sum()
                    observed_regret = observed_played - observed[:, comparator].sum()
                    shift = np.abs(observed_regret - clean_regret)
                    assert np.all(shift <= 2.0 * ledger.spent + 1e-12)


class TestPseudoRegret:
    def test_playing_the_best_arm_gives_zero(self):
        env = BernoulliStochastic([0.2, 0.9])
        curve = pseudo_regret(np.zeros(10, dtype=np.int64), env)
        assert np.array_equal(curve, np.zeros(10))

    def test_gap_accumulation(self):
        env = BernoulliStochastic([0.3, 0.6])
        curve = pseudo_regret(np.ones(10, dtype=np.int64), env)
        assert curve[-1] == pytest.approx(3.0, rel=1e-12)
        assert np.all(np.diff(curve) >= 0.0)

    def test_corrupted_regime_measures_pre_corruption_gaps(self):
        env = CorruptedStochastic([0.0, 0.25], budget=10.0)
        actions = np.array([1, 1, 0, 1], dtype=np.int64)
        curve = pseudo_regret(actions, env)
        assert np.allclose(curve, [0.25, 0.5, 0.5, 0.75])

    def test_scripted_regime_uses_best_fixed_in_hindsight(self):
        script = np.array(
            [[0.0, 1.0], [0.0, 1.0], [1.0, 0.0], [1.0, 0.0], [1.0, 0.0]]
        )
        env = ScriptedAdversary(script)
        actions = np.array([1, 1, 1, 1, 1], dtype=np.int64)
        curve = pseudo_regret(actions, env)
        # incurred [1,2,2,2,2] against prefix best-in-hindsight [0,0,1,2,2]
        assert curve.tolist() == [1.0, 2.0, 1.0, 0.0, 0.0]

    def test_unknown_regime_raises(self):
        class Opaque(Environment):
            regime = "opaque"
            n_arms = 2

        with pytest.raises(UnsupportedRegimeError):
            pseudo_regret(np.zeros(3, dtype=np.int64), Opaque())


class TestEnvironmentFromConfig:
    def test_each_regime_builds(self, tmp_path):
        assert isinstance(
            environment_from_config(
                {"regime": "stochastic", "means": [0.1, 0.5]}
            ),
            BernoulliStochastic,
        )
        assert isinstance(
            environment_from_config(
                {"regime": "stochastically-constrained", "gaps": [0.0, 0.3]}
            ),
            ConstrainedDrift,
        )
        path = tmp_path / "s.txt"
        np.savetxt(path, np.zeros((4, 2)))
        assert isinstance(
            environment_from_config(
                {"regime": "adversarial-script", "path": str(path)}
            ),
            ScriptedAdversary,
        )
        assert isinstance(
            environment_from_config(
                {
                    "regime": "adversarial-script",
                    "builtin": "alternating-leader",
                    "n_arms": 3,
                }
            ),
            AlternatingLeaderAdversary,
        )
        assert isinstance(
            environment_from_config(
                {
                    "regime": "corrupted-stochastic",
                    "means": [0.0, 0.5],
                    "budget": 4.0,
                }
            ),
            CorruptedStochastic,
        )

    def test_rejects_unknown_regimes_and_keys(self):
        with pytest.raises(ConfigError):
            environment_from_config({"regime": "quantum"})
        with pytest.raises(ConfigError):
            environment_from_config(
                {"regime": "stochastic", "means": [0.1, 0.5], "extra": 1}
            )
        with pytest.raises(ConfigError):
            environment_from_config({"regime": "stochastic"})
        with pytest.raises(ConfigError):
            environment_from_config(
                {"regime": "adversarial-script", "builtin": "x", "path": "y"}
            )


def test_all_regimes_emit_losses_in_the_unit_interval(tmp_path):
    path = tmp_path / "script.txt"
    np.savetxt(path, np.random.default_rng(0).random((60, 3)))
    environments = [
        BernoulliStochastic([0.2, 0.5, 0.9]),
        ConstrainedDrift([0.0, 0.3, 0.6]),
        ConstrainedDrift([0.0, 0.4], baseline="sinusoidal", period=7.0),
        ScriptedAdversary.from_file(path),
        AlternatingLeaderAdversary(3),
        CorruptedStochastic([0.0, 0.5], budget=12.5),
    ]
    for env in environments:
        stream = env.loss_matrix(60, np.random.default_rng(5)).observed
        assert stream.shape[0] == 60
        assert np.all(stream >= 0.0)
        assert np.all(stream <= 1.0)
