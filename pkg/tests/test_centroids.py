import numpy as np
import pytest

from passclust import (
    Assignment,
    CentroidModel,
    ConstraintSet,
    Dataset,
    assign_nearest,
    cop_kmeans,
    init_minibatch,
    update_centroids,
)
from passclust.centroids import kmeans_pp, pairwise_sqdist, weighted_sse
from passclust.collapse import collapse

from conftest import brute_sse, random_dataset, random_cl_pairs


class TestAssignNearest:
    def test_tie_breaks_low_index(self):
        ds = Dataset([[0.5, 0.0]])
        model = CentroidModel([[0.0, 0.0], [5.0, 5.0], [1.0, 0.0]])
        state = assign_nearest(ds, model)
        assert state.labels.labels[0] == 0

    def test_single_centroid_total_scatter(self):
        rng = np.random.default_rng(2)
        ds = random_dataset(rng, n=20, weighted=True)
        mu = (ds.weights[:, None] * ds.points).sum(0) / ds.weights.sum()
        state = assign_nearest(ds, CentroidModel(mu[None, :]))
        assert np.all(state.labels.labels == 0)
        expected = float((ds.weights * ((ds.points - mu) ** 2).sum(1)).sum())
        assert state.sse == pytest.approx(expected, rel=1e-12)

    def test_sse_matches_double_loop(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            ds = random_dataset(rng, weighted=True)
            k = int(rng.integers(1, 5))
            model = CentroidModel(rng.normal(size=(k, ds.d)))
            state = assign_nearest(ds, model)
            oracle = brute_sse(ds, model.centroids, state.labels.labels)
            assert state.sse == pytest.approx(oracle, rel=1e-9)

    def test_never_worse_than_any_labeling(self):
        rng = np.random.default_rng(6)
        ds = random_dataset(rng, n=15)
        model = CentroidModel(rng.normal(size=(3, ds.d)))
        nearest = assign_nearest(ds, model).sse
        for _ in range(20):
            labels = rng.integers(0, 3, size=ds.n)
            assert nearest <= weighted_sse(ds, model, labels) + 1e-12


class TestUpdateCentroids:
    def test_weighted_mean(self):
        ds = Dataset([[0.0, 0.0], [3.0, 0.0]], weights=[2.0, 1.0])
        model = update_centroids(ds, Assignment([0, 0], 1), 1)
        assert np.allclose(model.centroids[0], [1.0, 0.0])

    def test_each_point_own_cluster(self):
        rng = np.random.default_rng(8)
        ds = random_dataset(rng, n=6)
        model = update_centroids(ds, Assignment(np.arange(6), 6), 6)
        assert np.allclose(model.centroids, ds.points)

    def test_empty_cluster_keeps_previous(self):
        ds = Dataset([[0.0], [1.0]])
        prev = CentroidModel([[0.0], [1.0], [42.0]])
        model = update_centroids(ds, Assignment([0, 1], 3), 3, prev=prev)
        assert model.centroids[2, 0] == 42.0

    def test_empty_cluster_reseeds_to_worst_fit(self):
        ds = Dataset([[0.0], [0.1], [9.0]])
        model = update_centroids(ds, Assignment([0, 0, 0], 2), 2)
        # cluster 1 is empty; the worst-fit point under cluster 0's mean is 9.0
        assert model.centroids[1, 0] == 9.0

    def test_never_increases_sse_for_fixed_labels(self):
        rng = np.random.default_rng(10)
        for _ in range(10):
            ds = random_dataset(rng, weighted=True)
            k = int(rng.integers(1, 4))
            labels = rng.integers(0, k, size=ds.n)
            before = CentroidModel(rng.normal(size=(k, ds.d)))
            after = update_centroids(ds, Assignment(labels, k), k, prev=before)
            assert weighted_sse(ds, after, labels) <= weighted_sse(
                ds, before, labels
            ) + 1e-12


class TestLloydMonotone:
    def test_sse_non_increasing(self):
        rng = np.random.default_rng(12)
        ds = random_dataset(rng, n=40, d=2)
        model = CentroidModel(ds.points[kmeans_pp(ds, 3, rng)])
        last = np.inf
        for _ in range(10):
            state = assign_nearest(ds, model)
            assert state.sse <= last + 1e-12
            last = state.sse
            model = update_centroids(ds, state.labels, 3, prev=model)
            fixed = weighted_sse(ds, model, state.labels)
            assert fixed <= last + 1e-12
            last = fixed


class TestInitMinibatch:
    def test_saturated_k(self):
        rng = np.random.default_rng(14)
        pts = rng.normal(size=(6, 2)) * 5
        ds = Dataset(pts)
        collapsed, _ = collapse(ds, ConstraintSet())
        model = init_minibatch(collapsed, k=6, seed=0)
        state = assign_nearest(ds, model)
        assert state.sse == pytest.approx(0.0, abs=1e-18)

    def test_two_blobs(self):
        rng = np.random.default_rng(16)
        a = rng.normal(size=(30, 2)) * 0.5 + [0, 0]
        b = rng.normal(size=(30, 2)) * 0.5 + [20, 0]
        ds = Dataset(np.vstack([a, b]))
        collapsed, _ = collapse(ds, ConstraintSet())
        model = init_minibatch(collapsed, k=2, seed=1)
        # compare against full-batch Lloyd means of each blob
        means = np.stack([a.mean(0), b.mean(0)])
        d = pairwise_sqdist(means, model.centroids)
        assert d.min(axis=1).max() < 1.0  # within blob radius

    def test_deterministic(self):
        rng = np.random.default_rng(18)
        ds = random_dataset(rng, n=50, d=3)
        collapsed, _ = collapse(ds, ConstraintSet())
        m1 = init_minibatch(collapsed, k=4, seed=9)
        m2 = init_minibatch(collapsed, k=4, seed=9)
        assert np.array_equal(m1.centroids, m2.centroids)

    def test_k_too_large(self):
        ds = Dataset([[0.0], [1.0]])
        collapsed, _ = collapse(ds, ConstraintSet())
        with pytest.raises(ValueError):
            init_minibatch(collapsed, k=3, seed=0)


class TestCopKmeans:
    def test_unconstrained_equals_lloyd(self):
        rng = np.random.default_rng(20)
        ds = random_dataset(rng, n=30, d=2)
        state = cop_kmeans(ds, ConstraintSet(), 3, restarts=1, seed=7)
        # replay the same seeding and run a plain Lloyd loop by hand
        r = np.random.default_rng([7, 0])
        model = CentroidModel(ds.points[kmeans_pp(ds, 3, r)])
        prev = None
        for _ in range(100):
            st = assign_nearest(ds, model)
            model = update_centroids(ds, st.labels, 3, prev=model)
            if prev is not None and np.array_equal(st.labels.labels, prev):
                break
            prev = st.labels.labels
        assert state is not None
        assert np.array_equal(state.labels.labels, prev)

    def test_pigeonhole_infeasible(self):
        ds = Dataset([[0.0], [1.0], [2.0]])
        cl = frozenset({(0, 1), (0, 2), (1, 2)})
        state = cop_kmeans(ds, ConstraintSet(frozenset(), cl), 2, restarts=5, seed=0)
        assert state is None

    def test_feasible_result_violates_nothing(self):
        rng = np.random.default_rng(22)
        for trial in range(5):
            ds = random_dataset(rng, n=25, d=2)
            ml = frozenset({(0, 1), (2, 3)})
            cl = random_cl_pairs(rng, 25, 6, forbid=ml)
            cs = ConstraintSet(ml, cl)
            state = cop_kmeans(ds, cs, 3, restarts=20, seed=trial)
            if state is None:
                continue
            lab = state.labels.labels
            assert all(lab[i] == lab[j] for i, j in cs.ml)
            assert all(lab[i] != lab[j] for i, j in cs.cl)
