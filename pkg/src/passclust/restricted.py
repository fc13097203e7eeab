"""Restricted 0-1 reassignment on the working subset.

The model keeps, for every selected point, a candidate cluster list and the
incremental cost of each move relative to the current label.  Cannot-link
pairs inside the subset become pairwise exclusions; partners outside the
subset clamp their fixed label out of the candidate lists.  The exact
solver is a branch-and-bound over per-point choices; the local search is
the deterministic fallback used when exactness is not worth the time.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .centroids import CentroidModel, pairwise_sqdist
from .data import ConstraintSet, Dataset, as_labels
from .selection import WorkingSubset

_STATUS_OPTIMAL = "optimal"
_STATUS_HEURISTIC = "feasible-heuristic"
_STATUS_INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class RestrictedModel:
    """Reduced assignment problem over a subset S of points.

    ``deltas`` is the full (|S|, k) incremental-cost matrix (zero at each
    point's current label); ``candidates`` holds the allowed clusters per
    position after external clamps; ``internal_cl`` are position pairs that
    must take different clusters.
    """

    subset: np.ndarray
    k: int
    deltas: np.ndarray
    candidates: tuple
    internal_cl: tuple
    external_forbidden: tuple
    warm_start: np.ndarray

    def __post_init__(self):
        sub = np.asarray(self.subset, dtype=np.int64).copy()
        warm = np.asarray(self.warm_start, dtype=np.int64).copy()
        sub.flags.writeable = False
        warm.flags.writeable = False
        object.__setattr__(self, "subset", sub)
        object.__setattr__(self, "warm_start", warm)
        object.__setattr__(
            self, "candidates", tuple(tuple(int(g) for g in c) for c in self.candidates)
        )
        object.__setattr__(
            self, "internal_cl", tuple((int(a), int(b)) for a, b in self.internal_cl)
        )
        object.__setattr__(
            self,
            "external_forbidden",
            tuple(frozenset(int(g) for g in f) for f in self.external_forbidden),
        )

    @property
    def size(self) -> int:
        return self.subset.shape[0]

    @property
    def n_binaries(self) -> int:
        return sum(len(c) for c in self.candidates)

    def objective_of(self, labels_on_s: np.ndarray) -> float:
        return float(self.deltas[np.arange(self.size), labels_on_s].sum())


@dataclass(frozen=True)
class RestrictedSolution:
    labels_on_s: np.ndarray | None
    objective: float
    status: str
    node_count: int = 0

    @property
    def feasible(self) -> bool:
        return self.status in (_STATUS_OPTIMAL, _STATUS_HEURISTIC)


def build_model(
    data: Dataset,
    model: CentroidModel,
    labels,
    cl_projected: ConstraintSet,
    subset: WorkingSubset,
    candidate_width: int = 4,
) -> RestrictedModel:
    """Assemble the reduced problem for the selected subset.

    Candidate lists start as the ``candidate_width`` nearest centroids, are
    widened to all k for violators and their cannot-link neighbors, and
    always include the point's own current label plus the current labels of
    its cannot-link partners.  A candidate list emptied by external clamps
    is re-expanded to all k minus the clamped clusters.
    """
    if subset.size == 0:
        raise ValueError("subset must be nonempty")
    lab = as_labels(labels)
    k = model.k
    s = subset.indices
    pos_of = {int(i): p for p, i in enumerate(s)}
    in_s = set(pos_of)
    violators = set(int(v) for v in subset.violations)

    cl_adj: dict[int, list[int]] = {}
    for i, j in sorted(cl_projected.cl):
        cl_adj.setdefault(i, []).append(j)
        cl_adj.setdefault(j, []).append(i)

    d2 = pairwise_sqdist(data.points[s], model.centroids)
    deltas = d2 - d2[np.arange(s.size), lab[s]][:, None]

    candidates: list[set[int]] = []
    forbidden_all: list[set[int]] = []
    pinned: list[bool] = []
    width = min(candidate_width, k)
    for p, i in enumerate(map(int, s)):
        neighbors = cl_adj.get(i, ())
        if i in violators or any(j in violators for j in neighbors):
            cand = set(range(k))
        else:
            order = np.argsort(d2[p], kind="stable")
            cand = set(int(g) for g in order[:width])
            cand.add(int(lab[i]))
            cand.update(int(lab[j]) for j in neighbors)
        forbidden = set(int(lab[j]) for j in neighbors if j not in in_s)
        allowed = cand - forbidden
        if not allowed:
            allowed = set(range(k)) - forbidden
        is_pinned = False
        if not allowed:
            # Outside partners cover every cluster: the point cannot be
            # repaired this round.  Pin it at its current label and waive
            # that one clamp; the surviving violation is counted later.
            cur = int(lab[i])
            allowed = {cur}
            forbidden.discard(cur)
            is_pinned = True
        candidates.append(allowed)
        forbidden_all.append(forbidden)
        pinned.append(is_pinned)

    internal = sorted(
        (min(pos_of[i], pos_of[j]), max(pos_of[i], pos_of[j]))
        for i, j in cl_projected.cl
        if i in in_s and j in in_s
    )

    # Edges touching a pinned point collapse to clamps on the free endpoint;
    # a clamp that would empty that endpoint pins it too, so iterate until
    # every surviving edge joins two free points.
    cur_of = {p: int(lab[int(s[p])]) for p in range(len(candidates))}
    while True:
        changed = False
        survivors = []
        for a, b in internal:
            if not pinned[a] and not pinned[b]:
                survivors.append((a, b))
                continue
            if pinned[a] and pinned[b]:
                continue  # both fixed; any conflict survives as a residual
            fixed, free = (a, b) if pinned[a] else (b, a)
            g = cur_of[fixed]
            if g in candidates[free]:
                candidates[free] = candidates[free] - {g}
                forbidden_all[free] = forbidden_all[free] | {g}
                if not candidates[free]:
                    refill = set(range(k)) - forbidden_all[free]
                    if refill:
                        candidates[free] = refill
                    else:
                        candidates[free] = {cur_of[free]}
                        forbidden_all[free].discard(cur_of[free])
                        pinned[free] = True
                changed = True
        internal = survivors
        if not changed:
            break

    return RestrictedModel(
        subset=s,
        k=k,
        deltas=deltas,
        candidates=tuple(tuple(sorted(c)) for c in candidates),
        internal_cl=tuple(internal),
        external_forbidden=tuple(frozenset(f) for f in forbidden_all),
        warm_start=lab[s],
    )


def _components(size: int, edges) -> list[list[int]]:
    adj: dict[int, list[int]] = {}
    for a, b in edges:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    seen = [False] * size
    comps = []
    for start in range(size):
        if seen[start]:
            continue
        stack = [start]
        seen[start] = True
        comp = []
        while stack:
            u = stack.pop()
            comp.append(u)
            for v in adj.get(u, ()):
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
        comps.append(sorted(comp))
    return comps


class _Timeout(Exception):
    pass


class _ComponentBnB:
    """Depth-first branch-and-bound on one CL-connected component.

    Branches on the point with the fewest remaining candidates (ties by
    lowest position), bounds with the sum of per-point minima over the
    still-feasible candidates, and tries candidates in increasing cost.
    """

    def __init__(self, model: RestrictedModel, positions: list[int], deadline: float):
        self.model = model
        self.positions = positions
        self.deadline = deadline
        self.local = {p: idx for idx, p in enumerate(positions)}
        self.deltas = [model.deltas[p] for p in positions]
        self.domains = [list(model.candidates[p]) for p in positions]
        self.edges = [
            (self.local[a], self.local[b])
            for a, b in model.internal_cl
            if a in self.local and b in self.local
        ]
        self.adj: dict[int, list[int]] = {}
        for a, b in self.edges:
            self.adj.setdefault(a, []).append(b)
            self.adj.setdefault(b, []).append(a)
        self.best_cost = np.inf
        self.best: list[int] | None = None
        self.nodes = 0

    def seed_incumbent(self, labels: list[int] | None):
        if labels is None:
            return
        if self._feasible(labels):
            cost = sum(self.deltas[i][g] for i, g in enumerate(labels))
            self.best_cost = cost
            self.best = list(labels)

    def _feasible(self, labels) -> bool:
        for i, g in enumerate(labels):
            if g not in self.domains[i]:
                return False
        return all(labels[a] != labels[b] for a, b in self.edges)

    def solve(self):
        m = len(self.positions)
        assign = [-1] * m
        domains = [sorted(dom, key=lambda g, i=i: (self.deltas[i][g], g))
                   for i, dom in enumerate(self.domains)]
        self._search(assign, domains, 0.0)
        return self.best, self.best_cost

    def _search(self, assign, domains, cost):
        self.nodes += 1
        if self.nodes % 4096 == 0 and time.monotonic() > self.deadline:
            raise _Timeout
        unassigned = [i for i in range(len(assign)) if assign[i] < 0]
        if not unassigned:
            if cost < self.best_cost:
                self.best_cost = cost
                self.best = list(assign)
            return
        bound = cost
        for i in unassigned:
            if not domains[i]:
                return
            bound += self.deltas[i][domains[i][0]]
        if bound >= self.best_cost:
            return
        pick = min(unassigned, key=lambda i: (len(domains[i]), i))
        for g in domains[pick]:
            assign[pick] = g
            pruned: list[tuple[int, list[int]]] = []
            ok = True
            for nb in self.adj.get(pick, ()):
                if assign[nb] == g:
                    ok = False
                    break
                if assign[nb] < 0 and g in domains[nb]:
                    pruned.append((nb, domains[nb]))
                    domains[nb] = [h for h in domains[nb] if h != g]
                    if not domains[nb]:
                        ok = False
            if ok:
                self._search(assign, domains, cost + self.deltas[pick][g])
            for nb, old in pruned:
                domains[nb] = old
            assign[pick] = -1


def _repair_labels(model: RestrictedModel) -> np.ndarray | None:
    """Greedy feasibility repair of the warm start, violators first."""
    labels = model.warm_start.copy()
    adj: dict[int, list[int]] = {}
    for a, b in model.internal_cl:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)

    def conflicts(pos: int, g: int) -> bool:
        if g in model.external_forbidden[pos]:
            return True
        return any(labels[q] == g for q in adj.get(pos, ()))

    for pos in range(model.size):
        if labels[pos] in model.candidates[pos] and not conflicts(pos, labels[pos]):
            continue
        options = sorted(
            (g for g in model.candidates[pos] if not conflicts(pos, g)),
            key=lambda g: (model.deltas[pos][g], g),
        )
        if not options:
            return None
        labels[pos] = options[0]
    for a, b in model.internal_cl:
        if labels[a] == labels[b]:
            return None
    return labels


def solve_exact(model: RestrictedModel, time_limit: float = 10.0) -> RestrictedSolution:
    """Branch-and-bound, decomposed over CL-connected components.

    Returns the optimum when the search completes within the time limit, a
    feasible incumbent (warm start if nothing better was proven) with status
    ``feasible-heuristic`` on timeout, and status ``infeasible`` when some
    component admits no labeling.
    """
    deadline = time.monotonic() + time_limit
    labels = np.empty(model.size, dtype=np.int64)
    seed = _repair_labels(model)
    total_nodes = 0
    timed_out = False
    for comp in _components(model.size, model.internal_cl):
        bnb = _ComponentBnB(model, comp, deadline)
        bnb.seed_incumbent([int(seed[p]) for p in comp] if seed is not None else None)
        try:
            best, _ = bnb.solve()
        except _Timeout:
            timed_out = True
            best = bnb.best
        total_nodes += bnb.nodes
        if best is None:
            return RestrictedSolution(None, np.inf, _STATUS_INFEASIBLE, total_nodes)
        for local_idx, pos in enumerate(comp):
            labels[pos] = best[local_idx]
    status = _STATUS_HEURISTIC if timed_out else _STATUS_OPTIMAL
    return RestrictedSolution(labels, model.objective_of(labels), status, total_nodes)


def solve_local_search(model: RestrictedModel, max_sweeps: int = 50) -> RestrictedSolution:
    """Deterministic feasible local search from the (repaired) warm start.

    Sweeps points in index order moving each to its cheapest feasible
    candidate, then attempts pairwise swaps across internal CL edges; only
    strict improvements are taken so the objective is non-increasing and
    the search terminates.
    """
    labels = _repair_labels(model)
    if labels is None:
        return RestrictedSolution(None, np.inf, _STATUS_INFEASIBLE)
    adj: dict[int, list[int]] = {}
    for a, b in model.internal_cl:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)

    def feasible_for(pos: int, g: int, current) -> bool:
        if g in model.external_forbidden[pos]:
            return False
        return all(current[q] != g for q in adj.get(pos, ()))

    for _ in range(max_sweeps):
        changed = False
        for pos in range(model.size):
            here = model.deltas[pos][labels[pos]]
            best_g, best_cost = labels[pos], here
            for g in model.candidates[pos]:
                if g == labels[pos]:
                    continue
                if model.deltas[pos][g] < best_cost and feasible_for(pos, g, labels):
                    best_g, best_cost = g, model.deltas[pos][g]
            if best_g != labels[pos]:
                labels[pos] = best_g
                changed = True
        for a, b in model.internal_cl:
            ga, gb = labels[a], labels[b]
            if gb not in model.candidates[a] or ga not in model.candidates[b]:
                continue
            old = model.deltas[a][ga] + model.deltas[b][gb]
            new = model.deltas[a][gb] + model.deltas[b][ga]
            if new >= old - 1e-15:
                continue
            labels[a], labels[b] = gb, ga
            if feasible_for(a, gb, labels) and feasible_for(b, ga, labels):
                changed = True
            else:
                labels[a], labels[b] = ga, gb
        if not changed:
            break
    return RestrictedSolution(labels, model.objective_of(labels), _STATUS_HEURISTIC)


def extend_solution(model: RestrictedModel, labels_full, solution: RestrictedSolution):
    """Overlay a restricted solution onto the full label vector (copy)."""
    if not solution.feasible or solution.labels_on_s is None:
        raise ValueError("cannot extend an infeasible solution")
    out = as_labels(labels_full).copy()
    out[model.subset] = solution.labels_on_s
    return out
