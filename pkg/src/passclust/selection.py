"""Working-subset selection: margin-based and information-geometric.

Both selectors return a :class:`WorkingSubset` whose index set always
contains every endpoint of a currently violated cannot-link pair, so the
restricted reassignment that follows can always restore feasibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .centroids import CentroidModel, pairwise_sqdist
from .data import ConstraintSet, Dataset, as_labels


@dataclass(frozen=True)
class WorkingSubset:
    """Selected indices S with the violation set V and per-point diagnostics.

    ``margins`` is filled by both selectors; ``tau`` only by the margin
    selector and ``scores``/``budget`` only by the information-geometric one.
    """

    indices: np.ndarray
    violations: np.ndarray
    margins: np.ndarray | None = None
    scores: np.ndarray | None = None
    tau: float | None = None
    budget: int | None = None

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).copy()
        vio = np.asarray(self.violations, dtype=np.int64).copy()
        idx.flags.writeable = False
        vio.flags.writeable = False
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "violations", vio)

    @property
    def size(self) -> int:
        return self.indices.shape[0]


def compute_margins(data: Dataset, model: CentroidModel, labels) -> np.ndarray:
    """Signed margin of each point: current squared distance minus the best
    alternative's.  Positive means a strictly better cluster exists."""
    if model.k < 2:
        raise ValueError("margins need at least two clusters")
    lab = as_labels(labels)
    d2 = pairwise_sqdist(data.points, model.centroids)
    rows = np.arange(data.n)
    current = d2[rows, lab].copy()
    d2[rows, lab] = np.inf
    return current - d2.min(axis=1)


def find_violations(labels, cl: ConstraintSet | frozenset) -> np.ndarray:
    """All endpoints of cannot-link pairs whose two labels coincide."""
    lab = as_labels(labels)
    pairs = cl.cl if isinstance(cl, ConstraintSet) else cl
    out: set[int] = set()
    for i, j in pairs:
        if lab[i] == lab[j]:
            out.add(int(i))
            out.add(int(j))
    return np.asarray(sorted(out), dtype=np.int64)


def select_ca(
    data: Dataset,
    model: CentroidModel,
    labels,
    cl: ConstraintSet,
    percentile: float = 20.0,
) -> WorkingSubset:
    """Margin selector: violations plus points with margin above the
    reflected percentile threshold."""
    if not 0.0 < percentile < 100.0:
        raise ValueError("percentile must lie in (0, 100)")
    margins = compute_margins(data, model, labels)
    tau = float(np.percentile(margins, percentile))
    ambiguous = np.flatnonzero(margins > -tau)
    violations = find_violations(labels, cl)
    indices = np.union1d(violations, ambiguous)
    return WorkingSubset(
        indices=indices, violations=violations, margins=margins, tau=tau
    )


def soft_assignments(
    data: Dataset, model: CentroidModel, temperature: float
) -> np.ndarray:
    """Softmax over negative squared distances, max-shifted for stability."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    logits = -pairwise_sqdist(data.points, model.centroids) / temperature
    logits -= logits.max(axis=1, keepdims=True)
    p = np.exp(logits)
    p /= p.sum(axis=1, keepdims=True)
    return p


def default_temperature(data: Dataset, model: CentroidModel) -> float:
    """Median nearest-centroid squared distance (guarded away from zero)."""
    d2 = pairwise_sqdist(data.points, model.centroids).min(axis=1)
    t = float(np.median(d2))
    if t <= 0.0:
        t = max(float(d2.mean()), 1e-12)
    return t


def _top_two(p: np.ndarray):
    """Indices of the two largest entries per row, ties to the lowest index."""
    first = np.argmax(p, axis=1)
    masked = p.copy()
    masked[np.arange(p.shape[0]), first] = -np.inf
    second = np.argmax(masked, axis=1)
    return first, second


def fisher_rao_scores(p: np.ndarray) -> np.ndarray:
    """Vectorized ambiguity scores in [0, 1] from assignment probabilities.

    The top-two probabilities are renormalized to a binomial q and scored by
    geodesic closeness to the maximally ambiguous (1/2, 1/2): distance
    2*arccos((sqrt(q1)+sqrt(q2))/sqrt(2)), rescaled so that 1 means a tie
    and 0 a certain point.
    """
    p = np.atleast_2d(np.asarray(p, dtype=float))
    if p.shape[1] < 2:
        raise ValueError("need at least two clusters")
    first, second = _top_two(p)
    rows = np.arange(p.shape[0])
    p1 = p[rows, first]
    p2 = p[rows, second]
    q1 = p1 / (p1 + p2)
    q2 = p2 / (p1 + p2)
    arg = np.clip((np.sqrt(q1) + np.sqrt(q2)) / math.sqrt(2.0), -1.0, 1.0)
    d_fr = 2.0 * np.arccos(arg)
    return 1.0 - (2.0 / math.pi) * d_fr


def fisher_rao_score(p_i) -> float:
    """Scalar version of :func:`fisher_rao_scores` for one probability vector."""
    return float(fisher_rao_scores(np.asarray(p_i, dtype=float)[None, :])[0])


def budget(
    n: int, k: int, n_violations: int, alpha: float = 0.2, beta: float = 3.0
) -> int:
    """Subset budget: min(ceil(alpha*n), |V| + ceil(beta*k*ln n)), never
    below |V| and never above n."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    if beta <= 0:
        raise ValueError("beta must be positive")
    # ceil with a guard against float fuzz (0.2*1000 -> 200.0000...03).
    cap = math.ceil(alpha * n - 1e-9)
    log_term = math.ceil(beta * k * math.log(n) - 1e-9) if n > 1 else 0
    m = max(n_violations, min(cap, n_violations + log_term))
    return min(max(m, n_violations), n)


def select_ig(
    data: Dataset,
    model: CentroidModel,
    labels,
    cl: ConstraintSet,
    temperature: float | None = None,
    alpha: float = 0.2,
    beta: float = 3.0,
) -> WorkingSubset:
    """Budgeted selector: all violations plus the highest-scoring remainder.

    Ties between equal scores go to the lowest index; the returned subset
    has exactly the budgeted size.
    """
    if model.k < 2:
        raise ValueError("selection needs at least two clusters")
    violations = find_violations(labels, cl)
    n = data.n
    m = budget(n, model.k, violations.size, alpha, beta)
    if temperature is None:
        temperature = default_temperature(data, model)
    p = soft_assignments(data, model, temperature)
    scores = fisher_rao_scores(p)
    margins = compute_margins(data, model, labels)
    in_v = np.zeros(n, dtype=bool)
    in_v[violations] = True
    candidates = np.flatnonzero(~in_v)
    order = candidates[np.lexsort((candidates, -scores[candidates]))]
    extra = order[: m - violations.size]
    indices = np.union1d(violations, extra)
    return WorkingSubset(
        indices=indices,
        violations=violations,
        margins=margins,
        scores=scores,
        budget=m,
    )
