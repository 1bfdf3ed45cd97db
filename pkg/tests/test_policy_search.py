import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phaseprim.policy_search import (
    LogRow,
    RolloutOutcome,
    RolloutRecord,
    SearchConfig,
    perturb,
    probability_weights,
    run_training,
    update_weights,
)


class Bowl:
    """Quadratic cost |w - target|^2."""

    def __init__(self, target):
        self.target = np.asarray(target, dtype=float)

    def rollout(self, w):
        return RolloutOutcome(cost=float(np.sum((w - self.target) ** 2)))


class FailEveryOther:
    def __init__(self):
        self.calls = 0

    def rollout(self, w):
        self.calls += 1
        if self.calls % 2 == 0:
            return RolloutOutcome(cost=float("nan"))
        return RolloutOutcome(cost=1.0)


class TestPerturb:
    def test_zero_variance_returns_weights(self):
        rng = np.random.default_rng(0)
        w = np.array([1.0, -2.0, 3.0])
        w_r, eps = perturb(w, 0.0, rng)
        assert np.array_equal(w_r, w)
        assert np.array_equal(eps, np.zeros(3))

    def test_statistics_match_requested_variance(self):
        rng = np.random.default_rng(123)
        var = np.array([0.5, 2.0, 0.1])
        draws = np.stack(
            [perturb(np.zeros(3), var, rng)[1] for _ in range(100_000)]
        )
        sample_var = draws.var(axis=0)
        assert np.all(np.abs(sample_var - var) < 0.05 * var)
        assert np.all(np.abs(draws.mean(axis=0)) < 0.02)

    def test_deterministic_under_seed(self):
        a = perturb(np.zeros(4), 1.0, np.random.default_rng(9))[1]
        b = perturb(np.zeros(4), 1.0, np.random.default_rng(9))[1]
        assert np.array_equal(a, b)

    def test_negative_variance_rejected(self):
        with pytest.raises(ValueError):
            perturb(np.zeros(2), -1.0, np.random.default_rng(0))


class TestProbabilityWeights:
    def test_two_cost_oracle(self):
        # Independent direct evaluation of the softened min-max weighting.
        p = probability_weights([0.0, 1.0], lam=10.0)
        z = 1.0 + math.exp(-10.0)
        assert p[0] == pytest.approx(1.0 / z, rel=1e-12)
        assert p[1] == pytest.approx(math.exp(-10.0) / z, rel=1e-12)

    def test_equal_costs_give_uniform(self):
        p = probability_weights([3.0, 3.0, 3.0, 3.0], lam=10.0)
        assert np.allclose(p, 0.25)

    def test_single_rollout_gets_everything(self):
        assert np.array_equal(probability_weights([7.0], lam=10.0), [1.0])

    def test_zero_lam_is_uniform(self):
        p = probability_weights([0.0, 0.5, 1.0], lam=0.0)
        assert np.allclose(p, 1.0 / 3.0)

    def test_nonfinite_costs_rejected(self):
        with pytest.raises(ValueError):
            probability_weights([0.0, float("nan")], lam=10.0)

    @given(
        st.lists(st.floats(-100, 100), min_size=1, max_size=12),
        st.floats(0.0, 40.0),
    )
    @settings(max_examples=80)
    def test_simplex_and_monotone(self, costs, lam):
        p = probability_weights(costs, lam)
        assert p.sum() == pytest.approx(1.0, abs=1e-9)
        assert np.all(p >= 0.0)
        order = np.argsort(costs)
        # Lower cost never receives lower probability.
        assert np.all(np.diff(p[order]) <= 1e-12)


class TestUpdateWeights:
    def test_single_record_moves_by_its_noise(self):
        rec = RolloutRecord(epsilon=np.array([0.5, -0.5]), cost=1.0)
        w = update_weights(np.zeros(2), [rec], lam=10.0)
        assert np.allclose(w, [0.5, -0.5])

    def test_zero_noise_is_a_fixed_point(self):
        recs = [
            RolloutRecord(epsilon=np.zeros(3), cost=float(c)) for c in (1, 2, 3)
        ]
        w0 = np.array([1.0, 2.0, 3.0])
        assert np.array_equal(update_weights(w0, recs, 10.0), w0)

    @given(st.integers(1, 8), st.integers(0, 1000))
    @settings(max_examples=40)
    def test_step_bounded_by_largest_noise(self, n_records, seed):
        rng = np.random.default_rng(seed)
        recs = [
            RolloutRecord(
                epsilon=rng.normal(0, 1, 4), cost=float(rng.uniform(0, 5))
            )
            for _ in range(n_records)
        ]
        w0 = rng.normal(0, 1, 4)
        w1 = update_weights(w0, recs, lam=10.0)
        biggest = max(np.linalg.norm(r.epsilon) for r in recs)
        assert np.linalg.norm(w1 - w0) <= biggest + 1e-12


class TestRunTraining:
    def test_zero_updates_logs_one_clean_rollout(self):
        task = Bowl(np.zeros(4))
        cfg = SearchConfig(updates=0, rollouts_per_update=5, noise_var=0.01)
        res = run_training(task, np.ones(4), cfg)
        assert np.array_equal(res.weights, np.ones(4))
        assert len(res.history) == 1
        row = res.history[0]
        assert row.kind == "clean" and row.cost == pytest.approx(4.0)

    def test_history_shape_per_update(self):
        task = Bowl(np.zeros(3))
        cfg = SearchConfig(updates=4, rollouts_per_update=6, noise_var=0.01, seed=1)
        res = run_training(task, np.ones(3), cfg)
        explores = [r for r in res.history if r.kind == "explore"]
        cleans = [r for r in res.history if r.kind == "clean"]
        assert len(explores) == 24
        assert len(cleans) == 4
        assert len(res.snapshots) == 4
        assert {r.update for r in cleans} == {1, 2, 3, 4}

    def test_staged_schedule_counts_clean_evaluations(self):
        task = Bowl(np.zeros(2))
        cfg = SearchConfig(
            schedule=[(10, 10), (7, 5)], noise_var=0.01, seed=3
        )
        res = run_training(task, np.ones(2), cfg)
        cleans = [r for r in res.history if r.kind == "clean"]
        explores = [r for r in res.history if r.kind == "explore"]
        assert len(cleans) == 17
        assert len(explores) == 10 * 10 + 7 * 5

    def test_failures_get_penalty_cost_and_training_continues(self):
        task = FailEveryOther()
        cfg = SearchConfig(
            updates=2, rollouts_per_update=4, noise_var=0.01, failure_cost=55.0
        )
        res = run_training(task, np.zeros(2), cfg)
        failed_rows = [r for r in res.history if r.failed]
        assert failed_rows
        assert all(r.cost == 55.0 for r in failed_rows)
        assert len([r for r in res.history if r.kind == "clean"]) == 2

    def test_deterministic_under_seed(self):
        task = Bowl(np.linspace(0, 1, 5))
        cfg = SearchConfig(updates=6, rollouts_per_update=5, noise_var=0.02, seed=11)
        r1 = run_training(task, np.zeros(5), cfg)
        r2 = run_training(task, np.zeros(5), cfg)
        assert np.array_equal(r1.weights, r2.weights)
        assert [(r.update, r.rollout, r.cost) for r in r1.history] == [
            (r.update, r.rollout, r.cost) for r in r2.history
        ]

    def test_parallel_matches_serial(self):
        task = Bowl(np.linspace(-1, 1, 6))
        base = dict(updates=5, rollouts_per_update=6, noise_var=0.02, seed=7)
        serial = run_training(task, np.zeros(6), SearchConfig(**base))
        parallel = run_training(
            task, np.zeros(6), SearchConfig(**base, parallel=4)
        )
        assert np.array_equal(serial.weights, parallel.weights)
        assert [r.cost for r in serial.history] == [r.cost for r in parallel.history]

    def test_bowl_cost_reduces_and_trend_is_downhill(self):
        rng = np.random.default_rng(0)
        target = rng.normal(size=20)
        direction = rng.normal(size=20)
        direction /= np.linalg.norm(direction)
        w0 = target + direction
        cfg = SearchConfig(
            updates=30, rollouts_per_update=10, noise_var=0.01, seed=42
        )
        res = run_training(Bowl(target), w0, cfg)
        cleans = np.array([r.cost for r in res.history if r.kind == "clean"])
        assert cleans[-1] < 0.5 * 1.0
        slope = np.polyfit(np.arange(cleans.size), cleans, 1)[0]
        assert slope <= 0.0
