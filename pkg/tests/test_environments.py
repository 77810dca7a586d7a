from hypothesis import given, settings, strategies as st
import numpy as np
import unittest

from rwdre.environments import (
    EnvironmentKind,
    EnvironmentSpec,
    OccupancyField,
    admissible_states,
    check_detailed_balance,
    evolve_discrete,
    mirror_asymmetry_stat,
    sample_stationary,
    stationary_measure,
    state_bits,
    step_kernel,
    sub_update,
    transition_matrix,
    two_point_asymmetry,
)
from rwdre.errors import CapacityError, ConfigError
from rwdre.randomness import RandomSource

DYNAMIC = (
    EnvironmentKind.IID_REFRESH,
    EnvironmentKind.SSEP_RANDOM_SCAN,
    EnvironmentKind.EAST_RANDOM_SCAN,
)
CONSTRAINED = (EnvironmentKind.EAST_RANDOM_SCAN, EnvironmentKind.WEST_RANDOM_SCAN)


def relabel(L: int, mapping: np.ndarray) -> np.ndarray:
    """state index after moving the bit at site i to site mapping[i]"""
    moved = np.zeros((2**L, L), dtype=np.int64)
    moved[:, mapping] = state_bits(L)
    return moved @ (1 << np.arange(L))


class TestEnvironmentSpec(unittest.TestCase):
    def test_validate(self):
        spec = EnvironmentSpec(kind="east-random-scan", L=8, p=0.7, substeps_k=3)
        assert spec.validate() is spec
        assert spec.kind is EnvironmentKind.EAST_RANDOM_SCAN

        for bad, field in (
            (dict(L=1), "L"),
            (dict(p=1.5), "p"),
            (dict(p=-0.1), "p"),
            (dict(substeps_k=0), "substeps_k"),
        ):
            args = dict(kind="ssep-random-scan", L=8, p=0.5)
            args.update(bad)
            with self.assertRaises(ConfigError) as caught:
                EnvironmentSpec(**args).validate()
            assert caught.exception.field == field

    def test_unknown_kind(self):
        with self.assertRaises(ConfigError) as caught:
            EnvironmentSpec(kind="glauber", L=4, p=0.5)
        assert caught.exception.field == "kind"

    def test_east_needs_a_vacancy(self):
        with self.assertRaises(ConfigError) as caught:
            EnvironmentSpec(EnvironmentKind.EAST_RANDOM_SCAN, 4, 1.0).validate()
        assert caught.exception.field == "p"
        with self.assertRaises(ConfigError) as caught:
            EnvironmentSpec(EnvironmentKind.WEST_RANDOM_SCAN, 4, 1.0).validate()
        assert caught.exception.field == "p"
        assert EnvironmentSpec(EnvironmentKind.WEST_RANDOM_SCAN, 4, 0.9).is_reversible

    def test_tasep_is_a_control(self):
        spec = EnvironmentSpec(EnvironmentKind.TASEP_RANDOM_SCAN, 4, 0.5)
        assert not spec.is_reversible
        with self.assertRaises(ConfigError):
            spec.validate()
        assert spec.validate(allow_irreversible=True) is spec

    def test_iid_substeps(self):
        assert EnvironmentSpec(EnvironmentKind.IID_REFRESH, 4, 0.5, 5).substeps == 1
        ssep = EnvironmentSpec(EnvironmentKind.SSEP_RANDOM_SCAN, 4, 0.5, 5)
        assert ssep.substeps == 5

    def test_dict(self):
        spec = EnvironmentSpec(EnvironmentKind.SSEP_RANDOM_SCAN, 6, 0.25, 2)
        data = spec.to_dict()
        assert data == {"kind": "ssep-random-scan", "L": 6, "p": 0.25, "substeps_k": 2}
        assert EnvironmentSpec.from_dict(data) == spec
        with self.assertRaises(ConfigError):
            EnvironmentSpec.from_dict({"kind": "ssep-random-scan", "L": 6})


class TestSampling(unittest.TestCase):
    def test_shape_and_density(self):
        spec = EnvironmentSpec(EnvironmentKind.IID_REFRESH, 8, 0.3)
        config = sample_stationary(spec, RandomSource(3).for_trials(np.arange(10_000)))
        assert config.shape == (10_000, 8)
        assert config.dtype == np.uint8
        assert abs(config.mean() - 0.3) < 0.01

    def test_single_trial(self):
        spec = EnvironmentSpec(EnvironmentKind.SSEP_RANDOM_SCAN, 5, 0.5)
        src = RandomSource(3)
        single = sample_stationary(spec, src.for_trial(4))
        batch = sample_stationary(spec, src.for_trials(np.arange(6)))
        assert single.shape == (5,)
        assert np.array_equal(batch[4], single)

    def test_east_never_all_ones(self):
        spec = EnvironmentSpec(EnvironmentKind.EAST_RANDOM_SCAN, 2, 0.9)
        config = sample_stationary(spec, RandomSource(8).for_trials(np.arange(5000)))
        assert not np.any(config.all(axis=-1))

    def test_extreme_densities(self):
        src = RandomSource(1).for_trials(np.arange(50))
        empty = EnvironmentSpec(EnvironmentKind.SSEP_RANDOM_SCAN, 4, 0.0)
        full = EnvironmentSpec(EnvironmentKind.FROZEN_BERNOULLI, 4, 1.0)
        assert not sample_stationary(empty, src).any()
        assert sample_stationary(full, src).all()

    def test_stationary_measure(self):
        spec = EnvironmentSpec(EnvironmentKind.EAST_RANDOM_SCAN, 3, 0.5)
        pi = stationary_measure(spec)
        assert pi[-1] == 0.0
        assert np.allclose(pi[:-1], 1 / 7)

    def test_state_enumeration(self):
        bits = state_bits(3)
        assert bits.shape == (8, 3)
        assert bits[6].tolist() == [0, 1, 1]
        east = EnvironmentSpec(EnvironmentKind.EAST_RANDOM_SCAN, 3, 0.5)
        ssep = EnvironmentSpec(EnvironmentKind.SSEP_RANDOM_SCAN, 3, 0.5)
        assert admissible_states(east).tolist() == list(range(7))
        assert len(admissible_states(ssep)) == 8

    def test_field_reads_modulo_ring(self):
        spec = EnvironmentSpec(EnvironmentKind.FROZEN_BERNOULLI, 3, 0.5)
        rows = np.array([[[1, 0, 0], [0, 0, 1]], [[0, 1, 0], [1, 1, 0]]], np.uint8)
        field = OccupancyField(spec=spec, rows=rows)
        assert field.horizon == 1 and field.batch_shape == (2,)
        assert field.at(1, np.array([-1, 4])).tolist() == [1, 1]
        assert field.at(0, np.array([3, -2])).tolist() == [1, 1]
        single = OccupancyField(spec=spec, rows=rows[0])
        assert single.at(1, -1) == 1


class TestDynamics(unittest.TestCase):
    def setUp(self):
        self.src = RandomSource(77).for_trials(np.arange(200))

    def test_east_constraint(self):
        spec = EnvironmentSpec(EnvironmentKind.EAST_RANDOM_SCAN, 6, 0.5)
        config = sample_stationary(spec, self.src)
        rows = np.arange(200)
        for n in range(20):
            after, site = sub_update(spec, config, self.src, n, 0)
            changed = after != config
            others = changed.copy()
            others[rows, site] = False
            assert not others.any()
            moved = changed[rows, site]
            assert np.all(config[rows, (site + 1) % 6][moved] == 0)
            config = after

    def test_west_constraint(self):
        spec = EnvironmentSpec(EnvironmentKind.WEST_RANDOM_SCAN, 6, 0.5)
        config = sample_stationary(spec, self.src)
        rows = np.arange(200)
        for n in range(20):
            after, site = sub_update(spec, config, self.src, n, 0)
            moved = (after != config)[rows, site]
            assert moved.any()
            assert np.all(config[rows, (site - 1) % 6][moved] == 0)
            config = after

    def test_constrained_occupancy(self):
        p, L, M = 0.7, 4, 4000
        # P(eta(x) = 1 | not all ones)
        expected = (p - p**L) / (1 - p**L)
        src = RandomSource(606).for_trials(np.arange(M))
        for kind in CONSTRAINED:
            spec = EnvironmentSpec(kind, L, p, 2)
            field = evolve_discrete(spec, src, 20, sample_stationary(spec, src))
            per_trial = field.rows.mean(axis=(1, 2))
            se = per_trial.std(ddof=1) / np.sqrt(M)
            assert abs(per_trial.mean() - expected) <= 4 * se

    def test_step_kernel_frequencies(self):
        M = 20_000
        src = RandomSource(515).for_trials(np.arange(M))
        for spec, start in (
            (EnvironmentSpec(EnvironmentKind.IID_REFRESH, 3, 0.3), 5),
            (EnvironmentSpec(EnvironmentKind.SSEP_RANDOM_SCAN, 4, 0.5, 2), 3),
            (EnvironmentSpec(EnvironmentKind.EAST_RANDOM_SCAN, 3, 0.6, 2), 2),
            (EnvironmentSpec(EnvironmentKind.WEST_RANDOM_SCAN, 3, 0.4), 2),
            (EnvironmentSpec(EnvironmentKind.TASEP_RANDOM_SCAN, 4, 0.5, 3), 5),
        ):
            L = spec.L
            init = np.tile(state_bits(L)[start], (M, 1))
            after = step_kernel(spec, init, src, 3)
            counts = np.bincount(after @ (1 << np.arange(L)), minlength=2**L)
            row = transition_matrix(spec)[start]
            assert np.all(counts[row == 0] == 0)
            bound = 4 * np.sqrt(row * (1 - row) / M) + 1e-12
            assert np.all(np.abs(counts / M - row) <= bound)

    def test_ssep_conserves(self):
        spec = EnvironmentSpec(EnvironmentKind.SSEP_RANDOM_SCAN, 7, 0.4, 3)
        init = sample_stationary(spec, self.src)
        field = evolve_discrete(spec, self.src, 30, init)
        counts = field.rows.sum(axis=-1)
        assert np.all(counts == counts[:, :1])

    def test_frozen(self):
        spec = EnvironmentSpec(EnvironmentKind.FROZEN_BERNOULLI, 5, 0.5)
        init = sample_stationary(spec, self.src)
        field = evolve_discrete(spec, self.src, 10, init)
        assert np.all(field.rows == init[:, None, :])

    def test_iid_refresh_forgets(self):
        spec = EnvironmentSpec(EnvironmentKind.IID_REFRESH, 5, 0.5)
        zeros = np.zeros((200, 5), dtype=np.uint8)
        ones = np.ones((200, 5), dtype=np.uint8)
        assert np.array_equal(
            step_kernel(spec, zeros, self.src, 3), step_kernel(spec, ones, self.src, 3)
        )

    def test_evolve_rows(self):
        spec = EnvironmentSpec(EnvironmentKind.EAST_RANDOM_SCAN, 5, 0.6, 2)
        init = sample_stationary(spec, self.src)
        field = evolve_discrete(spec, self.src, 8, init)
        assert field.rows.shape == (200, 9, 5)
        assert field.horizon == 8
        assert np.array_equal(field.rows[:, 0], init)
        assert np.array_equal(
            field.rows[:, 4], step_kernel(spec, field.rows[:, 3], self.src, 3)
        )
        x = np.arange(200) - 100
        assert np.array_equal(field.at(4, x), field.rows[np.arange(200), 4, x % 5])

    @given(kind=st.sampled_from(DYNAMIC), seed=st.integers(0, 2**32))
    @settings(max_examples=20, deadline=None)
    def test_batch_matches_single(self, kind, seed):
        spec = EnvironmentSpec(kind, 4, 0.6, 2)
        src = RandomSource(seed)
        batch = src.for_trials(np.arange(3))
        rows = evolve_discrete(spec, batch, 6, sample_stationary(spec, batch)).rows
        for t in range(3):
            single = src.for_trial(t)
            field = evolve_discrete(spec, single, 6, sample_stationary(spec, single))
            assert np.array_equal(rows[t], field.rows)

    def test_negative_horizon(self):
        spec = EnvironmentSpec(EnvironmentKind.IID_REFRESH, 4, 0.5)
        with self.assertRaises(ValueError):
            evolve_discrete(spec, self.src, -1, np.zeros((200, 4)))


class TestKernels(unittest.TestCase):
    def test_rows_sum_to_one(self):
        for kind in EnvironmentKind:
            spec = EnvironmentSpec(kind, 4, 0.3, 2)
            K = transition_matrix(spec)
            assert K.shape == (16, 16)
            assert np.allclose(K.sum(axis=1), 1.0)
            assert K.min() >= 0.0

    def test_east_by_hand(self):
        K = transition_matrix(EnvironmentSpec(EnvironmentKind.EAST_RANDOM_SCAN, 3, 0.5))
        assert np.isclose(K[0, 0], 1 / 2)
        for b in (1, 2, 4):
            assert np.isclose(K[0, b], 1 / 6)
            assert np.isclose(K[b, b], 2 / 3)
            assert np.isclose(K[b, 0], 1 / 6)
        for b in (3, 5, 6):
            assert np.isclose(K[b, b], 5 / 6)
            assert K[b, 7] == 0.0
        assert np.array_equal(K[7], np.eye(8)[7])
        assert np.isclose(K[1, 3], 1 / 6)

    def test_detailed_balance(self):
        for kind in (
            EnvironmentKind.FROZEN_BERNOULLI,
            EnvironmentKind.IID_REFRESH,
            EnvironmentKind.SSEP_RANDOM_SCAN,
            EnvironmentKind.EAST_RANDOM_SCAN,
        ):
            for L in range(2, 6):
                for p in (0.3, 0.7):
                    spec = EnvironmentSpec(kind, L, p, 2)
                    K = transition_matrix(spec)
                    pi = stationary_measure(spec)
                    assert check_detailed_balance(K, pi) <= 1e-12
                    assert np.allclose(pi @ K, pi, atol=1e-12)

    def test_translation_invariant(self):
        for kind in EnvironmentKind:
            for L in (3, 4):
                spec = EnvironmentSpec(kind, L, 0.6, 2)
                K = transition_matrix(spec)
                rotate = relabel(L, (np.arange(L) + 1) % L)
                assert np.allclose(K[np.ix_(rotate, rotate)], K, atol=1e-14)

    def test_west_mirrors_east(self):
        for L in (2, 3, 5):
            east = EnvironmentSpec(EnvironmentKind.EAST_RANDOM_SCAN, L, 0.7, 2)
            west = EnvironmentSpec(EnvironmentKind.WEST_RANDOM_SCAN, L, 0.7, 2)
            reflect = relabel(L, -np.arange(L) % L)
            K = transition_matrix(west)
            assert np.allclose(K[np.ix_(reflect, reflect)], transition_matrix(east))
            assert np.allclose(stationary_measure(west), stationary_measure(east))

    def test_cycle_violates_balance(self):
        cycle = np.roll(np.eye(3), 1, axis=1)
        assert np.isclose(check_detailed_balance(cycle, np.full(3, 1 / 3)), 1 / 3)

    def test_tasep_violates_balance(self):
        spec = EnvironmentSpec(EnvironmentKind.TASEP_RANDOM_SCAN, 4, 0.5)
        violation = check_detailed_balance(
            transition_matrix(spec), stationary_measure(spec)
        )
        assert violation > 1e-6

    def test_balance_input_errors(self):
        with self.assertRaises(ValueError):
            check_detailed_balance(np.eye(3)[:2], np.full(3, 1 / 3))
        with self.assertRaises(ValueError):
            check_detailed_balance(np.eye(3), np.full(2, 1 / 2))
        with self.assertRaises(ValueError):
            check_detailed_balance(np.eye(3), np.ones(3))

    def test_capacity(self):
        spec = EnvironmentSpec(EnvironmentKind.SSEP_RANDOM_SCAN, 13, 0.5)
        with self.assertRaises(CapacityError):
            transition_matrix(spec)
        with self.assertRaises(CapacityError):
            mirror_asymmetry_stat(
                EnvironmentSpec(EnvironmentKind.SSEP_RANDOM_SCAN, 11, 0.5), 1
            )


class TestMirror(unittest.TestCase):
    def test_east_value(self):
        p, L = 0.7, 5
        spec = EnvironmentSpec(EnvironmentKind.EAST_RANDOM_SCAN, L, p)
        expected = -2 * p**2 * (1 - p) ** 2 / (L * (1 - p**L))
        assert abs(mirror_asymmetry_stat(spec, 1) - expected) < 1e-12
        assert abs(expected + 0.0212037) < 1e-6
        west = EnvironmentSpec(EnvironmentKind.WEST_RANDOM_SCAN, L, p)
        assert abs(mirror_asymmetry_stat(west, 1) + expected) < 1e-12

    def test_symmetric_kinds(self):
        for kind in (EnvironmentKind.SSEP_RANDOM_SCAN, EnvironmentKind.IID_REFRESH):
            spec = EnvironmentSpec(kind, 5, 0.7)
            for lag in (1, 3):
                assert abs(mirror_asymmetry_stat(spec, lag)) < 1e-12

    def test_two_point_vanishes(self):
        for kind in DYNAMIC + CONSTRAINED[1:]:
            spec = EnvironmentSpec(kind, 5, 0.7, 2)
            for lag in (1, 2, 5):
                assert abs(two_point_asymmetry(spec, lag)) < 1e-12

    def test_lag(self):
        spec = EnvironmentSpec(EnvironmentKind.EAST_RANDOM_SCAN, 4, 0.7)
        with self.assertRaises(ValueError):
            mirror_asymmetry_stat(spec, 0)
