import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import expit

from jeek.knowledge import PrecisionDecomposition
from jeek.simulate import (DELTA_MARGIN, EDGE_VALUE, GroundTruth, brain_edge_probability,
                           gaussian_draws, gen_brain, gen_cohub, gen_perturbed, gen_random_graphs,
                           generate, make_rng, n_hubs, sample_gaussian)


def _check_truth(t: GroundTruth):
    for om in t.precisions:
        np.testing.assert_array_equal(om, om.T)
        assert np.linalg.eigvalsh(om)[0] > 1e-8
    s_i, s_s = t.supports
    assert all((j, k) not in s_s for _, j, k in s_i)
    for o in (*t.decomp.omega_individual, t.decomp.omega_shared):
        assert set(np.unique(o)) <= {0.0, EDGE_VALUE}
        assert np.all(np.diag(o) == 0)


def _distance(p, seed):
    pts = np.random.default_rng(seed).uniform(0, 60, size=(p, 3))
    return np.linalg.norm(pts[:, None] - pts[None], axis=-1)


class TestRandomGraphs:
    @settings(max_examples=25, deadline=None)
    @given(st.integers(2, 25), st.integers(1, 4), st.integers(0, 2**63 - 1))
    def test_invariants(self, p, K, seed):
        t = gen_random_graphs(p, K, seed)
        _check_truth(t)
        worst = min(np.linalg.eigvalsh(o)[0] for o in t.decomp.omega_total)
        assert t.delta == pytest.approx(max(0.0, -worst) + DELTA_MARGIN)

    def test_deterministic(self):
        a, b = gen_random_graphs(12, 3, 99), gen_random_graphs(12, 3, 99)
        for x, y in zip(a.precisions, b.precisions):
            np.testing.assert_array_equal(x, y)
        assert a.metadata == b.metadata

    def test_k_limit(self):
        with pytest.raises(ValueError):
            gen_random_graphs(5, 10, 0)

    def test_task_density_grows_with_index(self):
        p, seeds = 40, range(20)
        dens = np.zeros(3)
        iu = np.triu_indices(p, 1)
        for s in seeds:
            t = gen_random_graphs(p, 3, s)
            for i, o in enumerate(t.decomp.omega_individual):
                raw = np.count_nonzero(o[iu]) + t.metadata["collisions"][i]
                dens[i] += raw / iu[0].size / len(seeds)
        np.testing.assert_allclose(dens, [0.1, 0.2, 0.3], atol=0.01)


class TestCohub:
    def test_single_hub_at_p20(self):
        assert n_hubs(20, 0.05) == 1
        assert len(gen_cohub(20, 2, 0).hubs) == 1

    def test_hub_rows(self):
        p = 60
        t = gen_cohub(p, 3, 4)
        _check_truth(t)
        assert len(t.hubs) == 3
        for j in t.hubs:
            row = t.decomp.omega_shared[j]
            assert np.count_nonzero(row) == round(0.9 * (p - 1))
            for o in t.decomp.omega_individual:
                assert np.count_nonzero(o[j]) == 0
        totals = t.decomp.omega_total
        for o in totals[1:]:
            np.testing.assert_array_equal(o[t.hubs], totals[0][t.hubs])
        assert t.metadata["hub_part"] == "shared"

    def test_too_small(self):
        with pytest.raises(ValueError):
            gen_cohub(10, 2, 0)


class TestPerturbed:
    def test_density_ratio(self):
        # a single hub, so no other hub writes into its row
        p, dense, sparse = 21, 0, 0
        for s in range(5):
            t = gen_perturbed(p, 2, s, hub_fraction=1 / p)
            _check_truth(t)
            for j in t.hubs:
                dense += np.count_nonzero(t.decomp.omega_individual[0][j])
                sparse += np.count_nonzero(t.decomp.omega_individual[1][j])
                assert np.count_nonzero(t.decomp.omega_shared[j]) == 0
        assert dense / sparse == 9.0

    def test_hub_supports_differ(self):
        differ = 0
        for s in range(50):
            t = gen_perturbed(20, 2, s)
            j = t.hubs[0]
            a = set(np.flatnonzero(t.decomp.omega_individual[0][j]))
            b = set(np.flatnonzero(t.decomp.omega_individual[1][j]))
            differ += bool(a ^ b)
        assert differ >= 49

    def test_classes_recorded(self):
        assert gen_perturbed(20, 4, 1).metadata["present"] == [True, False, True, False]

    def test_needs_two_tasks(self):
        with pytest.raises(ValueError):
            gen_perturbed(20, 1, 0)


class TestBrain:
    def test_probability_values(self):
        W = np.array([[0.0, 30.0], [30.0, 0.0]])
        assert brain_edge_probability(W)[0, 1] == 0.5
        assert brain_edge_probability(np.zeros((2, 2)))[0, 1] == pytest.approx(1 / (1 + np.exp(-10)))
        assert brain_edge_probability(np.zeros((2, 2)))[0, 1] == pytest.approx(0.99995, abs=1e-5)

    def test_generates_valid_truth(self):
        t = gen_brain(_distance(15, 0), 2, 3)
        _check_truth(t)
        assert t.metadata["protocol"] == "brain"

    @pytest.mark.parametrize("W", [np.array([[0, 1.0], [2.0, 0]]), np.array([[0, -1.0], [-1.0, 0]]),
                                   np.array([[1.0, 1.0], [1.0, 1.0]])])
    def test_rejects_bad_distance(self, W):
        with pytest.raises(ValueError):
            gen_brain(W, 2, 0)

    def test_dense_pairs_for_close_nodes(self):
        W = _distance(12, 1)
        probs = expit(10 - W / 3)
        np.testing.assert_allclose(brain_edge_probability(W), probs)


class TestSampling:
    def test_deterministic(self):
        t = gen_random_graphs(8, 2, 0)
        a, b = sample_gaussian(t, 20, 5), sample_gaussian(t, 20, 5)
        for x, y in zip(a.tasks, b.tasks):
            np.testing.assert_array_equal(x, y)

    def test_per_task_sizes(self):
        d = sample_gaussian(gen_random_graphs(5, 2, 0), [10, 30], 1)
        assert d.sizes == (10, 30)
        with pytest.raises(ValueError):
            sample_gaussian(gen_random_graphs(5, 2, 0), [10], 1)

    def test_scalar_variance(self):
        x = gaussian_draws(np.array([[4.0]]), 20000, make_rng(0))
        assert x.var(ddof=1) == pytest.approx(0.25, rel=0.05)


class TestDispatch:
    def test_names(self):
        for name in ("random", "cohub", "perturbed"):
            assert generate(name, 20, 2, 0).metadata["protocol"] == name
        assert generate("brain", K=2, seed=0, distance=_distance(6, 2)).p == 6

    def test_unknown(self):
        with pytest.raises(ValueError):
            generate("lattice", 10, 2, 0)

    def test_brain_needs_distance(self):
        with pytest.raises(ValueError, match="distance"):
            generate("brain", K=2, seed=0)

    def test_truth_rejects_overlap(self):
        part = np.array([[0, 0.5], [0.5, 0]])
        with pytest.raises(ValueError):
            GroundTruth(PrecisionDecomposition((part,), part), 2.0)

    def test_truth_rejects_indefinite(self):
        part = np.array([[0, 0.5], [0.5, 0]])
        with pytest.raises(ValueError):
            GroundTruth(PrecisionDecomposition((part,), np.zeros((2, 2))), 0.1)
