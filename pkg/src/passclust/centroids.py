"""Weighted k-means primitives and the COP-k-means baseline.

All distances are squared Euclidean, never rooted.  Ties are broken by
lowest cluster index everywhere so that every routine is deterministic
given its seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Assignment, ConstraintSet, Dataset, as_labels


def pairwise_sqdist(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """(n, k) matrix of squared Euclidean distances, floored at zero."""
    x2 = np.einsum("ij,ij->i", points, points)
    c2 = np.einsum("ij,ij->i", centroids, centroids)
    d = x2[:, None] + c2[None, :] - 2.0 * points @ centroids.T
    np.maximum(d, 0.0, out=d)
    return d


@dataclass(frozen=True)
class CentroidModel:
    """k cluster centers of dimension d."""

    centroids: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.centroids, dtype=float).copy()
        if c.ndim != 2 or c.shape[0] < 1:
            raise ValueError("centroids must be a (k, d) array with k >= 1")
        c.flags.writeable = False
        object.__setattr__(self, "centroids", c)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def d(self) -> int:
        return self.centroids.shape[1]


@dataclass(frozen=True)
class ClusteringState:
    """Centroids plus the labels and cached weighted SSE they induce."""

    model: CentroidModel
    labels: Assignment
    sse: float


def weighted_sse(data: Dataset, model: CentroidModel, labels) -> float:
    lab = as_labels(labels)
    diff = data.points - model.centroids[lab]
    return float((data.weights * (diff**2).sum(axis=1)).sum())


def kmeans_pp(data: Dataset, k: int, rng: np.random.Generator) -> np.ndarray:
    """Weighted k-means++ seeding; returns k distinct point indices."""
    n = data.n
    if k > n:
        raise ValueError(f"k={k} exceeds the {n} available points")
    chosen = np.empty(k, dtype=np.int64)
    w = data.weights
    first = rng.choice(n, p=w / w.sum())
    chosen[0] = first
    d2 = pairwise_sqdist(data.points, data.points[[first]])[:, 0]
    for c in range(1, k):
        probs = w * d2
        probs[chosen[:c]] = 0.0
        total = probs.sum()
        if total <= 0:
            # Duplicate-heavy data: fall back to uniform over unchosen points.
            probs = np.ones(n)
            probs[chosen[:c]] = 0.0
            total = probs.sum()
        idx = rng.choice(n, p=probs / total)
        chosen[c] = idx
        d2 = np.minimum(d2, pairwise_sqdist(data.points, data.points[[idx]])[:, 0])
    return chosen


def assign_nearest(data: Dataset, model: CentroidModel) -> ClusteringState:
    """Label every point with its nearest centroid (ties: lowest index)."""
    d2 = pairwise_sqdist(data.points, model.centroids)
    labels = np.argmin(d2, axis=1)
    sse = float((data.weights * d2[np.arange(data.n), labels]).sum())
    return ClusteringState(model, Assignment(labels, model.k), sse)


def update_centroids(
    data: Dataset, labels, k: int, prev: CentroidModel | None = None
) -> CentroidModel:
    """Weighted cluster means.

    An empty cluster keeps its previous centroid when ``prev`` is given;
    otherwise it is re-seeded to the point with the largest weighted
    distance to its own cluster's mean (worst fit first, ties by lowest
    point index).
    """
    lab = as_labels(labels)
    d = data.d
    centroids = np.zeros((k, d), dtype=float)
    wsum = np.zeros(k, dtype=float)
    np.add.at(wsum, lab, data.weights)
    np.add.at(centroids, lab, data.weights[:, None] * data.points)
    nonempty = wsum > 0
    centroids[nonempty] /= wsum[nonempty, None]
    empty = np.flatnonzero(~nonempty)
    if empty.size:
        if prev is not None:
            centroids[empty] = prev.centroids[empty]
        else:
            diff = data.points - centroids[lab]
            scores = data.weights * (diff**2).sum(axis=1)
            worst = np.argsort(-scores, kind="stable")
            for slot, cluster in enumerate(empty):
                centroids[cluster] = data.points[worst[slot]]
    return CentroidModel(centroids)


def init_minibatch(
    collapsed,
    k: int,
    batch: int | None = None,
    iters: int = 50,
    seed: int = 0,
) -> CentroidModel:
    """Mini-batch k-means on the contracted data.

    Seeding is weighted k-means++; each round samples ``batch`` pseudo-points
    and pulls their centroids toward the batch members with per-center
    accumulated-weight step sizes.  Deterministic given the seed.
    """
    data: Dataset = collapsed.data if hasattr(collapsed, "data") else collapsed
    n = data.n
    if k > n:
        raise ValueError(f"k={k} exceeds the {n} pseudo-points")
    if batch is None:
        batch = min(1024, n)
    rng = np.random.default_rng(seed)
    centroids = data.points[kmeans_pp(data, k, rng)].copy()
    counts = np.zeros(k, dtype=float)
    for _ in range(iters):
        idx = rng.integers(0, n, size=batch)
        pts = data.points[idx]
        w = data.weights[idx]
        lab = np.argmin(pairwise_sqdist(pts, centroids), axis=1)
        for g in range(k):
            members = lab == g
            if not members.any():
                continue
            bw = w[members].sum()
            counts[g] += bw
            centroids[g] += (
                (w[members, None] * (pts[members] - centroids[g])).sum(axis=0)
                / counts[g]
            )
    return CentroidModel(centroids)


def _violates(i, cluster, labels, assigned, ml_adj, cl_adj):
    for j in ml_adj.get(i, ()):
        if assigned[j] and labels[j] != cluster:
            return True
    for j in cl_adj.get(i, ()):
        if assigned[j] and labels[j] == cluster:
            return True
    return False


def cop_kmeans(
    data: Dataset,
    constraints: ConstraintSet,
    k: int,
    restarts: int = 100,
    seed: int = 0,
    max_iter: int = 100,
) -> ClusteringState | None:
    """Classic COP-k-means: greedy constrained assignment with restarts.

    Points are assigned in index order to the nearest cluster that does not
    conflict with any already-assigned ML/CL partner; a dead end aborts the
    restart.  Returns the best feasible state over all restarts, or None
    when every restart fails.
    """
    constraints.validate_for(data.n)
    ml_adj: dict[int, list[int]] = {}
    cl_adj: dict[int, list[int]] = {}
    for i, j in sorted(constraints.ml):
        ml_adj.setdefault(i, []).append(j)
        ml_adj.setdefault(j, []).append(i)
    for i, j in sorted(constraints.cl):
        cl_adj.setdefault(i, []).append(j)
        cl_adj.setdefault(j, []).append(i)

    n = data.n
    best: ClusteringState | None = None
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        centroids = data.points[kmeans_pp(data, k, rng)].copy()
        labels = np.zeros(n, dtype=np.int64)
        prev_labels = None
        dead = False
        for _ in range(max_iter):
            d2 = pairwise_sqdist(data.points, centroids)
            order = np.argsort(d2, axis=1, kind="stable")
            assigned = np.zeros(n, dtype=bool)
            for i in range(n):
                placed = False
                for cluster in order[i]:
                    if not _violates(i, cluster, labels, assigned, ml_adj, cl_adj):
                        labels[i] = cluster
                        assigned[i] = True
                        placed = True
                        break
                if not placed:
                    dead = True
                    break
            if dead:
                break
            model = update_centroids(
                data, labels, k, prev=CentroidModel(centroids)
            )
            centroids = model.centroids.copy()
            if prev_labels is not None and np.array_equal(labels, prev_labels):
                break
            prev_labels = labels.copy()
        if dead:
            continue
        model = CentroidModel(centroids)
        sse = weighted_sse(data, model, labels)
        if best is None or sse < best.sse:
            best = ClusteringState(model, Assignment(labels, k), sse)
    return best


def lloyd_kmeans(
    data: Dataset, k: int, seed: int = 0, max_iter: int = 100
) -> ClusteringState:
    """Plain Lloyd's k-means; equals cop_kmeans with no constraints."""
    result = cop_kmeans(data, ConstraintSet(), k, restarts=1, seed=seed, max_iter=max_iter)
    assert result is not None  # unconstrained assignment cannot dead-end
    return result
