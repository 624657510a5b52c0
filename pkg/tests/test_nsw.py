import numpy as np
import pytest

from momab.nsw import (
    BenchmarkError,
    NswBenchmark,
    maximize_nsw,
    nsw_regret_step,
    nsw_value,
    optimal_distribution,
    project_to_simplex,
    solve_nsw_batch,
)


def simplex_grid(n_arms, step=0.01):
    """All distributions over n_arms with entries on a `step` lattice."""
    ticks = int(round(1 / step))
    if n_arms == 2:
        i = np.arange(ticks + 1)
        return np.stack([i, ticks - i], axis=1) / ticks
    if n_arms == 3:
        ii, jj = np.meshgrid(np.arange(ticks + 1), np.arange(ticks + 1), indexing="ij")
        keep = ii + jj <= ticks
        return np.stack([ii[keep], jj[keep], ticks - ii[keep] - jj[keep]], axis=1) / ticks
    raise ValueError("grid oracle only built for K <= 3")


class TestNswValue:
    def test_hand_example(self):
        utilities = np.array([[1.0, 0.0], [0.0, 1.0]])
        p = np.array([0.5, 0.5])
        assert nsw_value(p, utilities) == pytest.approx(0.25)

    def test_single_agent_is_expected_utility(self):
        utilities = np.array([[0.2, 0.8]])
        p = np.array([0.25, 0.75])
        assert nsw_value(p, utilities) == pytest.approx(0.25 * 0.2 + 0.75 * 0.8)

    def test_degenerate_agent_zeroes_product(self):
        utilities = np.array([[0.5, 0.5], [0.0, 0.0]])
        assert nsw_value(np.array([0.5, 0.5]), utilities) == 0.0


class TestProjection:
    def test_hand_examples(self):
        np.testing.assert_allclose(project_to_simplex(np.array([2.0, 0.0])), [1.0, 0.0])
        np.testing.assert_allclose(project_to_simplex(np.array([0.3, 0.3])), [0.5, 0.5])
        np.testing.assert_allclose(
            project_to_simplex(np.array([0.5, 0.5, 0.5])), [1 / 3, 1 / 3, 1 / 3]
        )

    def test_already_on_simplex_is_fixed(self):
        p = np.array([0.2, 0.3, 0.5])
        np.testing.assert_allclose(project_to_simplex(p), p, atol=1e-12)

    def test_membership_and_idempotence(self):
        rng = np.random.default_rng(0)
        for _ in range(3000):
            v = rng.normal(scale=4.0, size=rng.integers(1, 9))
            p = project_to_simplex(v)
            assert p.min() >= -1e-12
            assert abs(p.sum() - 1.0) <= 1e-9
            np.testing.assert_allclose(project_to_simplex(p), p, atol=1e-9)

    def test_is_euclidean_projection(self):
        # the projection must beat every grid point in Euclidean distance
        rng = np.random.default_rng(1)
        grid = simplex_grid(3, step=0.02)
        for _ in range(50):
            v = rng.normal(scale=2.0, size=3)
            p = project_to_simplex(v)
            best_grid = grid[np.argmin(((grid - v) ** 2).sum(axis=1))]
            assert ((p - v) ** 2).sum() <= ((best_grid - v) ** 2).sum() + 1e-9


class TestSolver:
    def test_matches_grid_oracle(self):
        rng = np.random.default_rng(2)
        grid = simplex_grid(3)
        worst = 0.0
        for _ in range(25):
            utilities = rng.random((rng.integers(1, 4), 3))
            best_grid = float(np.max(np.prod(grid @ utilities.T, axis=1)))
            p = maximize_nsw(utilities, None, rng)
            worst = max(worst, best_grid - nsw_value(p, utilities))
        assert worst <= 1e-3

    def test_two_arm_closed_form(self):
        # two agents with opposed interests and symmetric utilities: the
        # product (a*p)(a*(1-p)) is maximized at p = 1/2
        utilities = np.array([[1.0, 0.0], [0.0, 1.0]])
        p = maximize_nsw(utilities, None, np.random.default_rng(3))
        np.testing.assert_allclose(p, [0.5, 0.5], atol=1e-4)

    def test_dominant_arm_takes_all_mass(self):
        utilities = np.array([[0.9, 0.1], [0.8, 0.2]])
        p = maximize_nsw(utilities, None, np.random.default_rng(4))
        assert p[0] > 0.999

    def test_bonus_shifts_mass(self):
        utilities = np.array([[0.6, 0.55], [0.6, 0.55]])
        rng = np.random.default_rng(5)
        no_bonus = maximize_nsw(utilities, None, rng)
        bonus = np.array([0.0, 0.5])
        with_bonus = maximize_nsw(utilities, bonus, np.random.default_rng(5))
        assert with_bonus[1] > no_bonus[1]

    def test_deterministic_given_stream(self):
        utilities = np.random.default_rng(6).random((3, 3))
        a = maximize_nsw(utilities, None, np.random.default_rng(7))
        b = maximize_nsw(utilities, None, np.random.default_rng(7))
        np.testing.assert_array_equal(a, b)

    def test_batch_solves_each_problem(self):
        rng = np.random.default_rng(8)
        us = rng.random((4, 2, 3))
        bs = np.zeros((4, 3))
        ps = solve_nsw_batch(us, bs, np.random.default_rng(9), 5, 2000, 1e-8)
        assert ps.shape == (4, 3)
        for b in range(4):
            single = maximize_nsw(us[b], None, np.random.default_rng(100 + b))
            assert nsw_value(ps[b], us[b]) >= nsw_value(single, us[b]) - 1e-6

    def test_validation(self):
        rng = np.random.default_rng(0)
        args = (rng, 5, 2000, 1e-8)
        with pytest.raises(ValueError):
            solve_nsw_batch(np.zeros((2, 2)), np.zeros((2, 2)), *args)  # not 3-dim
        with pytest.raises(ValueError):
            solve_nsw_batch(np.full((1, 2, 2), np.nan), np.zeros((1, 2)), *args)
        with pytest.raises(ValueError):
            solve_nsw_batch(-np.ones((1, 2, 2)), np.zeros((1, 2)), *args)


class TestBenchmark:
    def test_never_below_plain_solver(self):
        rng = np.random.default_rng(10)
        for _ in range(20):
            utilities = 0.05 + 0.9 * rng.random((4, 5))
            bench = optimal_distribution(utilities, np.random.default_rng(11))
            p = maximize_nsw(utilities, None, rng)
            assert bench.nsw_star >= nsw_value(p, utilities) - 1e-12

    def test_matches_grid_oracle_tightly(self):
        rng = np.random.default_rng(12)
        grid = simplex_grid(3)
        for _ in range(10):
            utilities = 0.05 + 0.9 * rng.random((3, 3))
            bench = optimal_distribution(utilities, np.random.default_rng(13))
            best_grid = float(np.max(np.prod(grid @ utilities.T, axis=1)))
            # a 0.01 grid cannot beat the continuous optimum by more than
            # curvature slack; the benchmark must sit above the grid
            assert bench.nsw_star >= best_grid - 1e-9

    def test_deterministic(self):
        utilities = 0.05 + 0.9 * np.random.default_rng(14).random((3, 4))
        a = optimal_distribution(utilities, np.random.default_rng(15))
        b = optimal_distribution(utilities, np.random.default_rng(15))
        assert a.nsw_star == b.nsw_star
        np.testing.assert_array_equal(a.p_star, b.p_star)

    def test_p_star_on_simplex(self):
        utilities = 0.05 + 0.9 * np.random.default_rng(16).random((4, 6))
        bench = optimal_distribution(utilities, np.random.default_rng(17))
        assert bench.p_star.min() >= -1e-12
        assert abs(bench.p_star.sum() - 1.0) <= 1e-9


class TestRegretStep:
    def build(self):
        utilities = np.array([[0.7, 0.3, 0.5], [0.2, 0.8, 0.5]])
        return optimal_distribution(utilities, np.random.default_rng(18))

    def test_zero_at_optimum(self):
        bench = self.build()
        dists = np.stack([bench.p_star, bench.p_star])
        assert nsw_regret_step(bench, dists, 1e-8) == pytest.approx(0.0, abs=1e-9)

    def test_positive_off_optimum(self):
        bench = self.build()
        dists = np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
        expected = 2 * (bench.nsw_star - 0.7 * 0.2)
        assert nsw_regret_step(bench, dists, 1e-8) == pytest.approx(expected)

    def test_sums_over_agents(self):
        bench = self.build()
        dists = np.array([bench.p_star, [1.0, 0.0, 0.0]])
        expected = bench.nsw_star - 0.7 * 0.2
        assert nsw_regret_step(bench, dists, 1e-8) == pytest.approx(expected, abs=1e-9)

    def test_small_negative_terms_clamped(self):
        bench = self.build()
        lowered = NswBenchmark(
            utilities=bench.utilities,
            p_star=bench.p_star,
            nsw_star=bench.nsw_star - 1e-9,
        )
        dists = np.stack([bench.p_star, bench.p_star])
        assert nsw_regret_step(lowered, dists, 1e-8) == 0.0

    def test_broken_benchmark_raises(self):
        bench = self.build()
        lowered = NswBenchmark(
            utilities=bench.utilities,
            p_star=bench.p_star,
            nsw_star=bench.nsw_star - 1e-3,
        )
        dists = np.stack([bench.p_star, bench.p_star])
        with pytest.raises(BenchmarkError, match="beat the benchmark"):
            nsw_regret_step(lowered, dists, 1e-8)
