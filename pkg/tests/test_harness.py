import numpy as np
import pytest

import momab.harness as harness
from momab.environment import ExperimentConfig
from momab.harness import (
    ExperimentError,
    RegretTrace,
    aggregate_traces,
    derive_stream,
    record_grid,
    run_experiment,
    run_trial,
    trial_environment,
    unbiasedness_diagnostic,
)


def tiny_config(**overrides):
    fields = dict(
        n_agents=2,
        n_arms=3,
        n_dims=2,
        horizon=60,
        link_prob=0.5,
        het_scale=0.2,
        n_trials=3,
        record_every=20,
        solver_restarts=2,
        solver_max_iters=300,
        solver_tol=1e-7,
    )
    fields.update(overrides)
    return ExperimentConfig(**fields)


class TestDeriveStream:
    def test_deterministic(self):
        a = derive_stream(7, 2, "alg", "reward").random(5)
        b = derive_stream(7, 2, "alg", "reward").random(5)
        np.testing.assert_array_equal(a, b)

    def test_every_coordinate_separates_streams(self):
        base = derive_stream(7, 2, "alg", "reward").random(4)
        for other in (
            derive_stream(8, 2, "alg", "reward"),
            derive_stream(7, 3, "alg", "reward"),
            derive_stream(7, 2, "alg2", "reward"),
            derive_stream(7, 2, "alg", "graph"),
        ):
            assert not np.array_equal(base, other.random(4))

    def test_negative_trial_rejected(self):
        with pytest.raises(ValueError):
            derive_stream(0, -1, "alg", "reward")

    def test_large_master_seed_wraps(self):
        derive_stream(2**70, 0, "alg", "reward").random(1)


class TestTrialEnvironment:
    def test_shared_across_algorithms_and_distinct_across_trials(self):
        config = tiny_config()
        a = trial_environment(config, 0)
        b = trial_environment(config, 0)
        np.testing.assert_array_equal(a.means, b.means)
        np.testing.assert_array_equal(a.prefs, b.prefs)
        c = trial_environment(config, 1)
        assert not np.array_equal(a.means, c.means)


class TestRecordGrid:
    def test_stride_plus_horizon(self):
        assert record_grid(tiny_config(horizon=10, record_every=3)) == (3, 6, 9, 10)

    def test_exact_multiple_has_no_duplicate(self):
        assert record_grid(tiny_config(horizon=12, record_every=3)) == (3, 6, 9, 12)

    def test_stride_larger_than_horizon(self):
        assert record_grid(tiny_config(horizon=5, record_every=50)) == (5,)


class TestRunTrial:
    def test_unknown_algorithm(self):
        with pytest.raises(KeyError):
            run_trial(tiny_config(), "nope", 0)

    @pytest.mark.parametrize("name", ["pareto_ucb_gossip", "nsw_ucb_gossip"])
    def test_trace_shape_and_grid(self, name):
        config = tiny_config()
        trace = run_trial(config, name, 0)
        assert trace.algorithm == name
        assert trace.trial == 0
        assert tuple(t for t, _ in trace.samples) == record_grid(config)

    @pytest.mark.parametrize("name", ["pareto_gossip", "no_sim"])
    def test_replay_is_bit_exact(self, name):
        config = tiny_config()
        a = run_trial(config, name, 1)
        b = run_trial(config, name, 1)
        assert a.samples == b.samples

    @pytest.mark.parametrize("name", sorted(harness.ALGORITHMS))
    def test_cumulative_regret_never_decreases(self, name):
        trace = run_trial(tiny_config(), name, 0)
        values = [v for _, v in trace.samples]
        assert values[0] >= 0.0
        assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))

    def test_trace_accessors(self):
        trace = RegretTrace("x", 0, ((10, 1.5), (20, 2.5)))
        assert trace.final() == 2.5
        assert trace.at(10) == 1.5
        with pytest.raises(KeyError):
            trace.at(15)


class TestUnbiasednessDiagnostic:
    def test_hand_value(self):
        global_avgs = np.array([[1.0, 2.0], [3.0, 4.0]])
        local_means = np.array([[1.0, 1.0], [3.0, 3.0]])
        # column averages differ by (0, 1); the diagnostic is the max
        assert unbiasedness_diagnostic(global_avgs, local_means) == 1.0

    def test_zero_for_matching_averages(self):
        g = np.array([[0.0, 5.0], [10.0, 5.0]])
        l = np.array([[5.0, 0.0], [5.0, 10.0]])
        assert unbiasedness_diagnostic(g, l) == 0.0


class TestAggregate:
    def test_hand_mean_std_band(self):
        traces = [
            RegretTrace("x", 0, ((5, 1.0), (10, 3.0))),
            RegretTrace("x", 1, ((5, 3.0), (10, 7.0))),
        ]
        agg = aggregate_traces("x", traces)
        assert agg.ts == (5, 10)
        np.testing.assert_allclose(agg.mean, [2.0, 5.0])
        # population std (ddof 0): |1 - 3| / 2 = 1 and |3 - 7| / 2 = 2
        np.testing.assert_allclose(agg.std, [1.0, 2.0])
        np.testing.assert_allclose(agg.band, [0.25, 0.5])

    def test_single_trace_has_zero_band(self):
        agg = aggregate_traces("x", [RegretTrace("x", 0, ((5, 1.0),))])
        np.testing.assert_array_equal(agg.std, [0.0])

    def test_mismatched_grids_rejected(self):
        traces = [
            RegretTrace("x", 0, ((5, 1.0),)),
            RegretTrace("x", 1, ((6, 1.0),)),
        ]
        with pytest.raises(ValueError):
            aggregate_traces("x", traces)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate_traces("x", [])

    def test_arrays_are_read_only(self):
        agg = aggregate_traces("x", [RegretTrace("x", 0, ((5, 1.0),))])
        with pytest.raises(ValueError):
            agg.mean[0] = 9.9


class TestRunExperiment:
    def test_unknown_algorithm_rejected_up_front(self):
        with pytest.raises(KeyError):
            run_experiment(tiny_config(), ["pareto_ucb", "nope"])

    def test_full_run_collects_everything(self):
        config = tiny_config(n_trials=2)
        result = run_experiment(config, ["pareto_ucb", "pareto_ucb_gossip"])
        assert result.all_succeeded
        assert len(result.traces) == 4
        assert set(result.aggregates) == {"pareto_ucb", "pareto_ucb_gossip"}
        for agg in result.aggregates.values():
            assert agg.ts == record_grid(config)

    def test_failed_trial_is_recorded_and_excluded(self, monkeypatch):
        real = harness.run_trial

        def flaky(config, algorithm_id, trial):
            if algorithm_id == "pareto_ucb" and trial == 1:
                raise RuntimeError("synthetic failure")
            return real(config, algorithm_id, trial)

        monkeypatch.setattr(harness, "run_trial", flaky)
        config = tiny_config(n_trials=2)
        result = run_experiment(config, ["pareto_ucb"])
        assert not result.all_succeeded
        assert len(result.failures) == 1
        assert result.failures[0].trial == 1
        assert "synthetic failure" in result.failures[0].message
        assert len(result.traces) == 1

    def test_total_failure_aborts(self, monkeypatch):
        def broken(config, algorithm_id, trial):
            raise RuntimeError("boom")

        monkeypatch.setattr(harness, "run_trial", broken)
        with pytest.raises(ExperimentError):
            run_experiment(tiny_config(n_trials=2), ["pareto_ucb"])

    def test_worker_count_does_not_change_results(self):
        config_serial = tiny_config(n_trials=2, horizon=40)
        config_pool = tiny_config(n_trials=2, horizon=40, workers=2)
        a = run_experiment(config_serial, ["pareto_gossip"])
        b = run_experiment(config_pool, ["pareto_gossip"])
        for ta, tb in zip(a.traces, b.traces):
            assert ta.samples == tb.samples
