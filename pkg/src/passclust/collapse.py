"""Must-link contraction into weighted pseudo-points.

Each connected component of the ML graph is replaced by one pseudo-point at
the component mean, weighted by the component size.  The within-component
scatter is a constant cost offset, so clustering the contracted instance is
cost-equivalent to clustering the original one: for a component of size t
with trace tr of its sample covariance (denominator t-1, defined as 0 for
t=1), the offset contribution is (t-1)*tr.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Assignment, ConstraintSet, Dataset, as_labels
from .errors import InfeasibleInstanceError


class _UnionFind:
    """Union-find with path compression and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]


@dataclass(frozen=True)
class CollapsedInstance:
    """Contracted dataset plus the bookkeeping to go back.

    ``lift`` maps each original index to its pseudo index; ``components``
    lists the original-index groups in pseudo order.  ``offset`` is the
    constant cost carried out of the contraction (squared-distance units).
    """

    data: Dataset
    offset: float
    lift: np.ndarray
    components: tuple

    def __post_init__(self):
        lift = np.asarray(self.lift, dtype=np.int64).copy()
        lift.flags.writeable = False
        object.__setattr__(self, "lift", lift)
        object.__setattr__(
            self, "components", tuple(tuple(c) for c in self.components)
        )

    @property
    def n_original(self) -> int:
        return self.lift.shape[0]

    @property
    def n_pseudo(self) -> int:
        return self.data.n


def collapse(dataset: Dataset, constraints: ConstraintSet):
    """Contract ML components; project CL constraints onto pseudo indices.

    Returns (CollapsedInstance, ConstraintSet) where the returned constraint
    set has an empty ML part.  A CL pair whose endpoints fall into the same
    ML component makes the instance infeasible and raises.
    """
    constraints.validate_for(dataset.n)
    n = dataset.n
    uf = _UnionFind(n)
    for i, j in sorted(constraints.ml):
        uf.union(i, j)

    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(uf.find(i), []).append(i)
    # Pseudo order: by smallest original index, so no-ML collapse is identity.
    components = sorted(groups.values(), key=lambda g: g[0])

    lift = np.empty(n, dtype=np.int64)
    points = np.empty((len(components), dataset.d), dtype=float)
    weights = np.empty(len(components), dtype=float)
    offset = 0.0
    for p, comp in enumerate(components):
        idx = np.asarray(comp, dtype=np.int64)
        lift[idx] = p
        w = dataset.weights[idx]
        total = w.sum()
        mean = (w[:, None] * dataset.points[idx]).sum(axis=0) / total
        points[p] = mean
        weights[p] = total
        if len(comp) > 1:
            offset += float(
                (w * ((dataset.points[idx] - mean) ** 2).sum(axis=1)).sum()
            )

    cl_proj = set()
    for i, j in sorted(constraints.cl):
        pi, pj = int(lift[i]), int(lift[j])
        if pi == pj:
            raise InfeasibleInstanceError(
                f"CL pair ({i},{j}) lies inside one ML component; "
                "the constraints are jointly unsatisfiable"
            )
        cl_proj.add((pi, pj) if pi < pj else (pj, pi))

    collapsed = CollapsedInstance(
        data=Dataset(points, weights),
        offset=offset,
        lift=lift,
        components=components,
    )
    return collapsed, ConstraintSet(frozenset(), frozenset(cl_proj))


def component_trace(dataset: Dataset, component) -> float:
    """Sample-covariance trace of one component (0 for singletons)."""
    idx = np.asarray(component, dtype=np.int64)
    t = idx.size
    if t <= 1:
        return 0.0
    pts = dataset.points[idx]
    mean = pts.mean(axis=0)
    return float(((pts - mean) ** 2).sum() / (t - 1))


def lift_assignment(collapsed: CollapsedInstance, pseudo_labels) -> Assignment:
    """Each original point inherits its pseudo-point's label."""
    labels = as_labels(pseudo_labels)
    if labels.shape[0] != collapsed.n_pseudo:
        raise ValueError(
            f"expected {collapsed.n_pseudo} pseudo labels, got {labels.shape[0]}"
        )
    k = pseudo_labels.k if isinstance(pseudo_labels, Assignment) else int(labels.max()) + 1
    return Assignment(labels[collapsed.lift], k)


def verify_cost_identity(
    dataset: Dataset,
    collapsed: CollapsedInstance,
    centroids: np.ndarray,
    pseudo_labels,
):
    """Evaluate both sides of the contraction cost identity.

    Returns (full_sse, collapsed_sse_plus_offset): the weighted SSE of the
    original points, each assigned to its component's cluster, versus the
    weighted pseudo SSE plus the constant offset.  Test utility, not a hot
    path.
    """
    centroids = np.asarray(centroids, dtype=float)
    if centroids.ndim != 2 or centroids.shape[1] != dataset.d:
        raise ValueError("centroid dimension mismatch")
    labels = as_labels(pseudo_labels)
    full_labels = labels[collapsed.lift]
    diff = dataset.points - centroids[full_labels]
    full = float((dataset.weights * (diff**2).sum(axis=1)).sum())
    pdiff = collapsed.data.points - centroids[labels]
    reduced = float(
        (collapsed.data.weights * (pdiff**2).sum(axis=1)).sum()
    ) + collapsed.offset
    return full, reduced
