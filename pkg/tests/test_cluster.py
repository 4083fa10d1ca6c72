import numpy as np
import pytest
from oracles import exhaustive_two_cluster_energy

from nnc.cluster import (ClusterModel, best_of_restarts, choose_k,
                         kmeans_pp_init, lloyd, prune_small_clusters)


class TestChooseK:
    def test_avenue_scale(self):
        assert choose_k(280_000) == 280

    def test_floor_guard(self):
        assert choose_k(500) == 1
        assert choose_k(1) == 1

    def test_half_rounds_up(self):
        assert choose_k(1500) == 2
        assert choose_k(2499) == 2
        assert choose_k(2500) == 3


class TestKmeansPlusPlus:
    def test_k_equals_n_is_permutation(self, rng):
        data = rng.random((8, 3))
        cents = kmeans_pp_init(data, 8, rng)
        got = {tuple(row) for row in cents}
        want = {tuple(row) for row in data}
        assert got == want

    def test_two_blobs_one_seed_each(self):
        hits = 0
        for seed in range(100):
            r = np.random.default_rng(seed)
            blob_a = r.normal(0.0, 0.05, size=(50, 2))
            blob_b = r.normal(10.0, 0.05, size=(50, 2))
            data = np.vstack([blob_a, blob_b])
            cents = kmeans_pp_init(data, 2, r)
            sides = {int(c[0] > 5.0) for c in cents}
            hits += len(sides) == 2
        assert hits >= 99

    def test_duplicate_only_dataset(self, rng):
        data = np.tile([2.0, 3.0], (6, 1))
        cents = kmeans_pp_init(data, 1, rng)
        np.testing.assert_array_equal(cents, [[2.0, 3.0]])

    def test_k_exceeding_n_rejected(self, rng):
        with pytest.raises(ValueError):
            kmeans_pp_init(rng.random((3, 2)), 4, rng)


class TestLloyd:
    def test_data_at_centroids_energy_zero(self):
        data = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 0.0]])
        model = lloyd(data, np.array([[0.0, 0.0], [1.0, 1.0]]))
        assert model.energy == 0.0
        assert len(model.energy_history) <= 2

    def test_known_one_dimensional_optimum(self):
        data = np.array([[0.0], [1.0], [9.0], [10.0]])
        model = lloyd(data, np.array([[0.5], [9.0]]))
        np.testing.assert_allclose(sorted(model.centroids.ravel()), [0.5, 9.5])
        assert model.energy == pytest.approx(1.0)
        assert model.energy == pytest.approx(exhaustive_two_cluster_energy(data))

    def test_energy_non_increasing_over_seeds(self):
        for seed in range(100):
            r = np.random.default_rng(seed)
            data = r.normal(size=(60, 4))
            init = kmeans_pp_init(data, 5, r)
            model = lloyd(data, init)
            diffs = np.diff(model.energy_history)
            assert (diffs <= 1e-9).all(), f"seed {seed}: {model.energy_history}"

    def test_final_assignments_are_nearest_centroid(self, rng):
        data = rng.normal(size=(80, 3))
        model = lloyd(data, kmeans_pp_init(data, 4, rng))
        d2 = ((data[:, None, :] - model.centroids[None]) ** 2).sum(-1)
        np.testing.assert_array_equal(model.assignments, d2.argmin(axis=1))

    def test_energy_matches_definition(self, rng):
        data = rng.normal(size=(50, 2))
        model = lloyd(data, kmeans_pp_init(data, 3, rng))
        direct = ((data - model.centroids[model.assignments]) ** 2).sum()
        assert model.energy == pytest.approx(direct, rel=1e-9)

    def test_empty_cluster_reseeded(self):
        data = np.array([[0.0], [0.1], [10.0], [10.1]])
        # Third centroid far away never wins an assignment initially.
        init = np.array([[0.0], [10.0], [100.0]])
        model = lloyd(data, init)
        assert model.sizes.sum() == 4
        assert np.isfinite(model.centroids).all()
        assert (model.sizes > 0).sum() >= 2

    def test_sizes_sum_to_n(self, rng):
        data = rng.normal(size=(70, 2))
        model = lloyd(data, kmeans_pp_init(data, 6, rng))
        assert model.sizes.sum() == 70


class TestBestOfRestarts:
    def test_single_restart_equals_one_lloyd_run(self, rng):
        data = np.random.default_rng(3).normal(size=(40, 2))
        model = best_of_restarts(data, 3, restarts=1,
                                 rng=np.random.default_rng(99))
        twin_rng = np.random.default_rng(99)
        seed = int(twin_rng.integers(0, 2**63 - 1, size=1)[0])
        child = np.random.default_rng(seed)
        expected = lloyd(data, kmeans_pp_init(data, 3, child))
        assert model.energy == expected.energy
        np.testing.assert_array_equal(model.centroids, expected.centroids)

    def test_best_not_worse_than_each_restart(self):
        data = np.random.default_rng(4).normal(size=(60, 2))
        model = best_of_restarts(data, 4, restarts=10,
                                 rng=np.random.default_rng(5))
        twin_rng = np.random.default_rng(5)
        seeds = [int(s) for s in twin_rng.integers(0, 2**63 - 1, size=10)]
        energies = [lloyd(data, kmeans_pp_init(data, 4,
                                               np.random.default_rng(s))).energy
                    for s in seeds]
        assert model.energy == min(energies)
        assert all(model.energy <= e for e in energies)

    def test_fixed_seed_reproducible(self):
        data = np.random.default_rng(6).normal(size=(50, 3))
        a = best_of_restarts(data, 3, rng=np.random.default_rng(1))
        b = best_of_restarts(data, 3, rng=np.random.default_rng(1))
        np.testing.assert_array_equal(a.centroids, b.centroids)
        np.testing.assert_array_equal(a.assignments, b.assignments)
        assert a.energy == b.energy

    def test_worker_threads_do_not_change_result(self):
        data = np.random.default_rng(8).normal(size=(50, 3))
        a = best_of_restarts(data, 3, rng=np.random.default_rng(2), workers=1)
        b = best_of_restarts(data, 3, rng=np.random.default_rng(2), workers=4)
        np.testing.assert_array_equal(a.centroids, b.centroids)


class TestPruneSmallClusters:
    def _model(self, sizes):
        sizes = np.asarray(sizes)
        k = len(sizes)
        return ClusterModel(
            centroids=np.zeros((k, 2)),
            assignments=np.repeat(np.arange(k), sizes),
            sizes=sizes,
            energy=0.0,
            retained=np.ones(k, dtype=bool),
            energy_history=[0.0],
        )

    def test_boundary_at_min_size(self):
        model = prune_small_clusters(self._model([600, 499, 500]), min_size=500)
        np.testing.assert_array_equal(model.retained, [True, False, True])

    def test_fallback_keeps_largest(self):
        model = prune_small_clusters(self._model([10, 30, 20]), min_size=500)
        np.testing.assert_array_equal(model.retained, [False, True, False])

    def test_idempotent(self):
        once = prune_small_clusters(self._model([600, 499, 500]), min_size=500)
        twice = prune_small_clusters(once, min_size=500)
        np.testing.assert_array_equal(once.retained, twice.retained)

    def test_retained_follows_sizes_under_permutation(self, rng):
        sizes = [700, 20, 510, 499]
        base = prune_small_clusters(self._model(sizes), min_size=500)
        perm = [2, 0, 3, 1]
        permuted = prune_small_clusters(
            self._model([sizes[i] for i in perm]), min_size=500)
        np.testing.assert_array_equal(permuted.retained,
                                      base.retained[perm])


def two_gaussian_toy(seed):
    """400 points from two separated normal populations, k=30, prune < 10."""
    r = np.random.default_rng(seed)
    data = np.vstack([
        r.normal(loc=(0.0, 0.0), scale=1.0, size=(200, 2)),
        r.normal(loc=(8.0, 0.0), scale=1.0, size=(200, 2)),
    ])
    model = best_of_restarts(data, 30, restarts=10, rng=r)
    return prune_small_clusters(model, min_size=10)


def toy_pruned_centroids_are_farther(seed) -> bool:
    """Pruned centroids sit farther from the nearer population mean than
    retained ones do, on average."""
    model = two_gaussian_toy(seed)
    means = np.array([[0.0, 0.0], [8.0, 0.0]])
    d = np.sqrt(((model.centroids[:, None, :] - means[None]) ** 2).sum(-1)).min(1)
    pruned = ~model.retained
    if not pruned.any():
        return True
    return d[pruned].mean() > d[model.retained].mean()


def test_two_gaussian_toy_prunes_outlier_clusters():
    assert sum(toy_pruned_centroids_are_farther(seed) for seed in range(5)) >= 4
