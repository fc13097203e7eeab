"""Shared generators for randomized tests.

Every helper takes an explicit seed so failures reproduce exactly.
"""

from __future__ import annotations

import numpy as np

from passclust import ConstraintSet, Dataset
from passclust.centroids import CentroidModel
from passclust.restricted import RestrictedModel


def random_dataset(rng: np.random.Generator, n=None, d=None, weighted=False) -> Dataset:
    n = n or int(rng.integers(2, 30))
    d = d or int(rng.integers(1, 5))
    pts = rng.normal(size=(n, d)) * rng.uniform(0.5, 3.0)
    w = rng.uniform(0.5, 4.0, size=n) if weighted else None
    return Dataset(pts, w)


def random_ml_graph(rng: np.random.Generator, n: int, n_edges: int) -> frozenset:
    edges = set()
    for _ in range(n_edges):
        i, j = rng.choice(n, size=2, replace=False)
        edges.add((min(int(i), int(j)), max(int(i), int(j))))
    return frozenset(edges)


def random_cl_pairs(rng: np.random.Generator, n: int, n_edges: int,
                    forbid=frozenset()) -> frozenset:
    edges = set()
    tries = 0
    while len(edges) < n_edges and tries < 50 * n_edges + 50:
        tries += 1
        i, j = rng.choice(n, size=2, replace=False)
        pair = (min(int(i), int(j)), max(int(i), int(j)))
        if pair not in forbid:
            edges.add(pair)
    return frozenset(edges)


def brute_sse(data: Dataset, centroids: np.ndarray, labels: np.ndarray) -> float:
    """Double-loop SSE oracle, independent of the vectorized kernels."""
    total = 0.0
    for i in range(data.n):
        mu = centroids[labels[i]]
        acc = 0.0
        for t in range(data.d):
            acc += (data.points[i, t] - mu[t]) ** 2
        total += data.weights[i] * acc
    return total


def random_restricted_model(
    rng: np.random.Generator, size: int, k: int, n_cl: int, full_candidates=True
) -> RestrictedModel:
    """Hand-built restricted model with a zero column at each warm label."""
    warm = rng.integers(0, k, size=size)
    deltas = rng.normal(size=(size, k)) * rng.uniform(0.5, 2.0)
    deltas[np.arange(size), warm] = 0.0
    if full_candidates:
        candidates = tuple(tuple(range(k)) for _ in range(size))
    else:
        candidates = []
        for pos in range(size):
            extra = set(int(g) for g in rng.choice(k, size=2))
            extra.add(int(warm[pos]))
            candidates.append(tuple(sorted(extra)))
        candidates = tuple(candidates)
    edges = set()
    while len(edges) < n_cl:
        a, b = rng.choice(size, size=2, replace=False)
        edges.add((min(int(a), int(b)), max(int(a), int(b))))
    return RestrictedModel(
        subset=np.arange(size),
        k=k,
        deltas=deltas,
        candidates=candidates,
        internal_cl=tuple(sorted(edges)),
        external_forbidden=tuple(frozenset() for _ in range(size)),
        warm_start=warm,
    )


def enumerate_optimum(model: RestrictedModel):
    """Exhaustive oracle over all k^|S| assignments (None if infeasible)."""
    best_cost, best = None, None
    size, k = model.size, model.k

    def ok(assign) -> bool:
        for pos, g in enumerate(assign):
            if g not in model.candidates[pos]:
                return False
            if g in model.external_forbidden[pos]:
                return False
        return all(assign[a] != assign[b] for a, b in model.internal_cl)

    import itertools

    for assign in itertools.product(range(k), repeat=size):
        if not ok(assign):
            continue
        cost = sum(model.deltas[pos][g] for pos, g in enumerate(assign))
        if best_cost is None or cost < best_cost:
            best_cost, best = cost, assign
    return best_cost, best


def random_centroids(rng: np.random.Generator, k: int, d: int) -> CentroidModel:
    return CentroidModel(rng.normal(size=(k, d)) * 2.0)
