from hypothesis import assume, given, settings, strategies as st
import numpy as np
from scipy import stats
import unittest

from rwdre.coupling import (
    _merged_table,
    _two_sample_chi_square,
    backward_law_test,
    check_non_crossing,
    choose_endpoint,
    couple,
    gap_steps,
    reversed_direction,
    run_backward,
)
from rwdre.environments import (
    EnvironmentKind,
    EnvironmentSpec,
    OccupancyField,
    evolve_discrete,
    sample_stationary,
)
from rwdre.randomness import RandomSource
from rwdre.walkers import (
    SimConfig,
    TimeMode,
    check_trajectory,
    direction,
    run_discrete,
)

KINDS = (
    EnvironmentKind.FROZEN_BERNOULLI,
    EnvironmentKind.IID_REFRESH,
    EnvironmentKind.SSEP_RANDOM_SCAN,
    EnvironmentKind.EAST_RANDOM_SCAN,
)


class TestEndpoint(unittest.TestCase):
    def test_parity(self):
        assert choose_endpoint(0.6, 0.2, 100) == 50
        assert choose_endpoint(0.6, 0.2, 101) == 51
        assert choose_endpoint(-0.25, 0.5, 8) == -4
        assert choose_endpoint(-0.25, 0.5, 9) == -5

    @given(
        v=st.floats(-1.0, 1.0),
        delta=st.floats(0.0, 0.5),
        N=st.integers(1, 10_000),
    )
    @settings(max_examples=100, deadline=None)
    def test_always_reachable(self, v, delta, N):
        x = choose_endpoint(v, delta, N)
        assert (x - N) % 2 == 0
        assert 0 <= x - np.floor((v - delta / 2) * N) <= 1

    def test_horizon(self):
        with self.assertRaises(ValueError):
            choose_endpoint(0.5, 0.1, 0)


class TestReversedDirection(unittest.TestCase):
    @given(
        occupied=st.sampled_from([0, 1]),
        u=st.floats(0.0, 1.0, exclude_max=True),
        epsilon=st.floats(-0.45, 0.45),
    )
    @settings(max_examples=200, deadline=None)
    def test_mirror_identity(self, occupied, u, epsilon):
        threshold = 0.5 + epsilon if occupied else 0.5 - epsilon
        assume(abs(u - threshold) > 1e-9)
        assert reversed_direction(occupied, u, epsilon) == direction(
            occupied, 1 - u, -epsilon
        )


class TestCoupledPair(unittest.TestCase):
    def test_backward_pinned(self):
        spec = EnvironmentSpec(EnvironmentKind.EAST_RANDOM_SCAN, 8, 0.7)
        src = RandomSource(3).for_trials(np.arange(40))
        pair = couple(spec, src, 0.25, 30, 6)
        assert pair.backward.positions.shape == (40, 31)
        assert np.all(pair.backward.end == 6)
        assert np.array_equal(pair.backward.start, pair.backward.positions[:, 0])
        check_trajectory(pair.backward)
        check_trajectory(pair.forward)

    def test_backward_steps_read_field(self):
        spec = EnvironmentSpec(EnvironmentKind.SSEP_RANDOM_SCAN, 6, 0.5, 2)
        src = RandomSource(8)
        field = evolve_discrete(spec, src, 12, sample_stationary(spec, src))
        walk = run_backward(field, src, 4, 12, 0.3)
        # restarting from X_hat_6 at time 6 retraces the same walk
        again = run_backward(field, src, walk.positions[6], 6, 0.3)
        assert np.array_equal(again.positions, walk.positions[:7])

    def test_backward_by_hand(self):
        # at epsilon = 1/2 occupied sites push right and empty ones left
        spec = EnvironmentSpec(EnvironmentKind.FROZEN_BERNOULLI, 4, 0.5)
        rows = np.array(
            [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 1], [0, 1, 0, 0]], dtype=np.uint8
        )
        field = OccupancyField(spec, rows)
        src = RandomSource(7)
        backward = run_backward(field, src, 1, 3, 0.5)
        forward = run_discrete(field, src, 0, 3, 0.5)
        assert backward.positions.tolist() == [0, 1, 0, 1]
        assert forward.positions.tolist() == [0, 1, 2, 3]
        gaps = forward.positions - backward.positions
        assert gaps[0] * gaps[-1] == 0

    def test_parity_enforced(self):
        spec = EnvironmentSpec(EnvironmentKind.IID_REFRESH, 4, 0.5)
        src = RandomSource(1).for_trials(np.arange(5))
        with self.assertRaises(ValueError):
            couple(spec, src, 0.25, 10, 3)
        field = evolve_discrete(spec, src, 10, sample_stationary(spec, src))
        with self.assertRaises(ValueError):
            run_backward(field, src, np.array([0, 2, 4, 5, 6]), 10, 0.25)

    @given(
        kind=st.sampled_from(KINDS),
        epsilon=st.sampled_from([-0.5, -0.25, 0.0, 0.1, 0.4]),
        N=st.integers(1, 40),
        seed=st.integers(0, 2**63),
    )
    @settings(max_examples=40, deadline=None)
    def test_non_crossing(self, kind, epsilon, N, seed):
        spec = EnvironmentSpec(kind, 5, 0.6, 2)
        trials = np.arange(60)
        # endpoints spread over the reachable range with N's parity
        x = N - 2 * (trials % (N + 1))
        pair = couple(spec, RandomSource(seed).for_trials(trials), epsilon, N, x)
        assert np.all(check_non_crossing(pair) >= 0)
        assert set(np.unique(gap_steps(pair))) <= {-2, 0, 2}

    def test_single_pair(self):
        spec = EnvironmentSpec(EnvironmentKind.EAST_RANDOM_SCAN, 6, 0.5)
        pair = couple(spec, RandomSource(4), 0.2, 10, 0)
        assert isinstance(check_non_crossing(pair), int)
        assert check_non_crossing(pair) >= 0

    def test_independent_fields_cross(self):
        spec = EnvironmentSpec(EnvironmentKind.IID_REFRESH, 8, 0.5)
        src = RandomSource(12).for_trials(np.arange(2000))
        broken = RandomSource(13).for_trials(np.arange(2000))
        pair = couple(spec, src, 0.1, 50, 0, backward_src=broken)
        assert np.any(check_non_crossing(pair) < 0)


class TestLawTest(unittest.TestCase):
    def test_merging(self):
        first = np.array([0] * 3 + [1] * 100 + [2] * 2)
        second = np.array([0] * 2 + [1] * 100 + [2] * 3)
        table = _merged_table(first, second)
        assert table.sum() == 210
        expected = table.sum(axis=0) * table.sum(axis=1).min() / table.sum()
        assert expected.min() >= 5
        assert table.shape == (2, 1)

    def test_identical_samples(self):
        sample = np.repeat(np.arange(-5, 6), 50)
        result = _two_sample_chi_square(sample, sample.copy())
        assert result["statistic"] == 0.0
        assert result["dof"] > 0
        constant = _two_sample_chi_square(np.zeros(10), np.zeros(10))
        assert constant["dof"] == 0 and constant["p_value"] == 1.0

    def test_law_and_control(self):
        spec = EnvironmentSpec(EnvironmentKind.EAST_RANDOM_SCAN, 6, 0.7)
        config = SimConfig(0.25, spec, 8, 2000, 99)
        report = backward_law_test(config, 0)
        assert report.trials == 2000
        assert report.p_value > 1e-4
        control = backward_law_test(config, 0, compare_epsilon=0.25)
        assert not control.passed
        assert control.p_value < 1e-6

    def test_path_law(self):
        spec = EnvironmentSpec(EnvironmentKind.EAST_RANDOM_SCAN, 6, 0.7)
        N, M = 5, 20_000
        weights = 1 << np.arange(N)

        src = RandomSource(31).for_trials(np.arange(M))
        field = evolve_discrete(spec, src, N, sample_stationary(spec, src))
        backward = run_backward(field, src, 1, N, 0.25)
        # the backward walk read from time N down to 0
        steps = np.diff(backward.positions[:, ::-1], axis=1)
        backward_paths = ((steps + 1) // 2) @ weights

        src = RandomSource(32).for_trials(np.arange(M))
        field = evolve_discrete(spec, src, N, sample_stationary(spec, src))
        steps = np.diff(run_discrete(field, src, 0, N, -0.25).positions, axis=1)
        direct_paths = ((steps + 1) // 2) @ weights

        table = np.stack(
            [
                np.bincount(backward_paths, minlength=2**N),
                np.bincount(direct_paths, minlength=2**N),
            ]
        )
        assert table.min() > 0
        _, p_value, _, _ = stats.chi2_contingency(table)
        assert p_value > 1e-4

    def test_continuous_law(self):
        spec = EnvironmentSpec(EnvironmentKind.SSEP_RANDOM_SCAN, 4, 0.5)
        config = SimConfig(0.3, spec, 6, 1000, 7, TimeMode.CONTINUOUS)
        report = backward_law_test(config, 2, M=1000)
        assert report.p_value > 1e-4
        assert set(report.to_dict()) >= {"statistic", "threshold", "passed"}

    def test_symmetric_walks_agree(self):
        ones = EnvironmentSpec(EnvironmentKind.FROZEN_BERNOULLI, 4, 1.0)
        report = backward_law_test(SimConfig(0.0, ones, 10, 1000, 3), 0)
        assert report.p_value > 1e-4

    def test_endpoint_parity(self):
        spec = EnvironmentSpec(EnvironmentKind.IID_REFRESH, 4, 0.5)
        with self.assertRaises(ValueError):
            backward_law_test(SimConfig(0.1, spec, 8, 10, 1), 1)
