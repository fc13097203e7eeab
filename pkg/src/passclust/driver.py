"""Four-phase driver: contract, initialize, refine subsets, post-process.

Labels persist across refinement iterations, so after the first repair the
warm start handed to the restricted solver is always feasible and the
weighted cost trace is non-increasing.  Stabilization is declared at the
first iteration with zero violations and a relative cost change below the
configured tolerance.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .centroids import (
    CentroidModel,
    assign_nearest,
    init_minibatch,
    pairwise_sqdist,
    update_centroids,
    weighted_sse,
)
from .collapse import CollapsedInstance, collapse, lift_assignment
from .data import Assignment, ConstraintSet, Dataset, as_labels
from .errors import InfeasibleSubproblemError
from .qaoa import run_qaoa_p1
from .qubo import build_qubo
from .restricted import build_model, solve_exact, solve_local_search
from .selection import WorkingSubset, find_violations, select_ca, select_ig


@dataclass(frozen=True)
class PassConfig:
    """Driver knobs; defaults follow the midpoints of the recommended ranges."""

    k: int
    selector: str = "ig"  # "ca" | "ig"
    percentile: float = 20.0
    alpha: float = 0.2
    beta: float = 3.0
    temperature: float | None = None  # None: median nearest sq-distance
    candidate_width: int = 4
    max_iters: int = 30
    sse_rel_tol: float = 1e-3
    seed: int = 0
    solver: str = "exact"  # "exact" | "local"
    time_limit: float = 10.0
    batch: int | None = None
    minibatch_iters: int = 50
    n_init: int = 3
    refine: str = "none"  # "none" | "qaoa"
    qaoa_shots: int = 2048
    qaoa_max_vars: int = 20

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.sse_rel_tol <= 0:
            raise ValueError("sse_rel_tol must be positive")
        if self.selector not in ("ca", "ig"):
            raise ValueError(f"unknown selector {self.selector!r}")
        if self.solver not in ("exact", "local"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.refine not in ("none", "qaoa"):
            raise ValueError(f"unknown refine mode {self.refine!r}")


@dataclass(frozen=True)
class PassResult:
    """Final labeling over original indices plus run diagnostics."""

    labels: Assignment
    centroids: CentroidModel
    sse: float
    violations: int
    iterations: int
    stabilized_at: int | None
    phase_times: dict
    trace: tuple
    max_binaries: int

    def to_dict(self) -> dict:
        return {
            "sse": self.sse,
            "violations": self.violations,
            "iterations": self.iterations,
            "stabilized_at": self.stabilized_at,
            "phase_times": dict(self.phase_times),
            "max_binaries": self.max_binaries,
            "labels": self.labels.labels.tolist(),
            "trace": [dict(row) for row in self.trace],
        }


def _count_cl_violations(labels: np.ndarray, cl_pairs) -> int:
    return sum(1 for i, j in cl_pairs if labels[i] == labels[j])


def _trim_subset(subset: WorkingSubset, limit: int) -> WorkingSubset | None:
    """Shrink a subset to ``limit`` points, keeping all violations.

    Extra slots go to the highest-score (or, failing that, highest-margin)
    non-violating indices.  Returns None when the violations alone exceed
    the limit, in which case the caller should fall back to the classical
    solver.
    """
    if subset.size <= limit:
        return subset
    if subset.violations.size > limit:
        return None
    keep = set(int(v) for v in subset.violations)
    rest = [int(i) for i in subset.indices if int(i) not in keep]
    if subset.scores is not None:
        rest.sort(key=lambda i: (-subset.scores[i], i))
    elif subset.margins is not None:
        rest.sort(key=lambda i: (-subset.margins[i], i))
    for i in rest[: limit - len(keep)]:
        keep.add(i)
    return WorkingSubset(
        indices=np.asarray(sorted(keep), dtype=np.int64),
        violations=subset.violations,
        margins=subset.margins,
        scores=subset.scores,
        tau=subset.tau,
        budget=subset.budget,
    )


def run_pass(data: Dataset, constraints: ConstraintSet, config: PassConfig) -> PassResult:
    """Run the full pipeline and return the lifted result.

    Raises InfeasibleInstanceError for contradictory constraints and
    InfeasibleSubproblemError (with iteration context) when a restricted
    subproblem admits no feasible labeling.
    """
    phase_times = {"collapse": 0.0, "init": 0.0, "selection": 0.0,
                   "ilp": 0.0, "centroids": 0.0, "post": 0.0}
    k = config.k

    t0 = time.perf_counter()
    collapsed, cl_proj = collapse(data, constraints)
    phase_times["collapse"] = time.perf_counter() - t0
    cl_pairs = sorted(cl_proj.cl)
    pdata = collapsed.data

    t0 = time.perf_counter()
    model, state = None, None
    for trial in range(max(1, config.n_init)):
        trial_seed = int(
            np.random.default_rng([config.seed, trial]).integers(2**31)
        )
        cand_model = init_minibatch(
            collapsed, k, batch=config.batch, iters=config.minibatch_iters,
            seed=trial_seed,
        )
        cand_state = assign_nearest(pdata, cand_model)
        if state is None or cand_state.sse < state.sse:
            model, state = cand_model, cand_state
    labels = state.labels.labels.copy()
    phase_times["init"] = time.perf_counter() - t0

    sse_prev = state.sse + collapsed.offset
    trace: list[dict] = []
    max_binaries = 0
    stabilized_at = None

    for iteration in range(1, config.max_iters + 1):
        t0 = time.perf_counter()
        subset = None
        if k >= 2:
            if config.selector == "ca":
                subset = select_ca(pdata, model, labels, cl_proj, config.percentile)
            else:
                subset = select_ig(
                    pdata, model, labels, cl_proj,
                    temperature=config.temperature,
                    alpha=config.alpha, beta=config.beta,
                )
        phase_times["selection"] += time.perf_counter() - t0

        t0 = time.perf_counter()
        binaries = 0
        solver_status = "skipped"
        objective = 0.0
        warm_feasible = True
        if subset is not None and subset.size > 0:
            rmodel = build_model(
                pdata, model, labels, cl_proj, subset, config.candidate_width
            )
            binaries = rmodel.n_binaries
            max_binaries = max(max_binaries, binaries)
            warm_feasible = _warm_is_feasible(rmodel)
            new_on_s = None
            if config.refine == "qaoa":
                new_on_s, solver_status = _qaoa_step(rmodel, subset, config, iteration)
            if new_on_s is None:
                if config.solver == "exact":
                    sol = solve_exact(rmodel, config.time_limit)
                else:
                    sol = solve_local_search(rmodel)
                if not sol.feasible:
                    raise InfeasibleSubproblemError(
                        f"restricted subproblem infeasible at iteration {iteration}",
                        iteration=iteration,
                    )
                new_on_s = sol.labels_on_s
                solver_status = sol.status
                objective = sol.objective
            labels[rmodel.subset] = new_on_s
        phase_times["ilp"] += time.perf_counter() - t0

        t0 = time.perf_counter()
        present = np.bincount(labels, minlength=k)
        empty_seen = bool((present == 0).any())
        model = update_centroids(pdata, labels, k, prev=model)
        sse_now = weighted_sse(pdata, model, labels) + collapsed.offset
        phase_times["centroids"] += time.perf_counter() - t0

        violations = _count_cl_violations(labels, cl_pairs)
        trace.append({
            "iteration": iteration,
            "sse": sse_now,
            "subset_size": int(subset.size) if subset is not None else 0,
            "violations": violations,
            "ilp_binaries": binaries,
            "objective": objective,
            "solver_status": solver_status,
            "warm_feasible": warm_feasible,
            "empty_cluster": empty_seen,
        })

        rel = abs(sse_prev - sse_now) / max(abs(sse_prev), 1e-300)
        sse_prev = sse_now
        if violations == 0 and rel < config.sse_rel_tol:
            stabilized_at = iteration
            break

    t0 = time.perf_counter()
    lifted, residual = post_process(labels, collapsed, cl_proj, model)
    final_pseudo = lifted.labels[_first_of_components(collapsed)]
    model = update_centroids(pdata, final_pseudo, k, prev=model)
    sse_final = weighted_sse(pdata, model, final_pseudo) + collapsed.offset
    phase_times["post"] = time.perf_counter() - t0

    return PassResult(
        labels=lifted,
        centroids=model,
        sse=sse_final,
        violations=residual,
        iterations=len(trace),
        stabilized_at=stabilized_at,
        phase_times=phase_times,
        trace=tuple(trace),
        max_binaries=max_binaries,
    )


def _first_of_components(collapsed: CollapsedInstance) -> np.ndarray:
    return np.asarray([comp[0] for comp in collapsed.components], dtype=np.int64)


def _warm_is_feasible(rmodel) -> bool:
    warm = rmodel.warm_start
    for pos in range(rmodel.size):
        if int(warm[pos]) in rmodel.external_forbidden[pos]:
            return False
    return all(warm[a] != warm[b] for a, b in rmodel.internal_cl)


def _qaoa_step(rmodel, subset: WorkingSubset, config: PassConfig, iteration: int):
    """Quantum refinement of one restricted subproblem.

    Returns (labels_on_s or None, status).  None means the classical solver
    should handle this iteration (subset too large after trimming, or the
    warm start is not yet feasible).
    """
    limit = config.qaoa_max_vars // rmodel.k
    if rmodel.size > limit or not _warm_is_feasible(rmodel):
        return None, "qaoa-skipped"
    qubo = build_qubo(rmodel, mode="search")
    warm_bits = np.zeros(qubo.n_vars, dtype=np.int64)
    for pos, g in enumerate(rmodel.warm_start):
        warm_bits[qubo.layout.qubit(pos, int(g))] = 1
    run = run_qaoa_p1(
        qubo, warm_bits, shots=config.qaoa_shots,
        seed=int(np.random.default_rng([config.seed, iteration]).integers(2**31)),
    )
    # Never regress: keep the sampled labeling only when it is at least as
    # good as the warm start under the same Hamiltonian.
    if run.best_energy <= run.warm_energy:
        decoded = qubo.layout.decode(run.best)
        if decoded is not None:
            return decoded, "qaoa"
    return rmodel.warm_start.copy(), "qaoa-warm"


def post_process(pseudo_labels, collapsed: CollapsedInstance, cl_projected: ConstraintSet,
                 model: CentroidModel):
    """Greedy repair of residual CL violations, then lift to original indices.

    Each violated pair moves the endpoint with the smaller weighted cost
    increase to its cheapest non-conflicting cluster (ties: lower index);
    pairs that cannot be repaired are left in place and counted.
    Returns (lifted Assignment, residual violation count).
    """
    labels = as_labels(pseudo_labels).copy()
    k = model.k
    pdata = collapsed.data
    adj: dict[int, list[int]] = {}
    for i, j in sorted(cl_projected.cl):
        adj.setdefault(i, []).append(j)
        adj.setdefault(j, []).append(i)

    d2 = None
    for i, j in sorted(cl_projected.cl):
        if labels[i] != labels[j]:
            continue
        if d2 is None:
            d2 = pairwise_sqdist(pdata.points, model.centroids)
        best = None  # (cost increase, endpoint, cluster)
        for endpoint in (i, j):
            taken = {int(labels[q]) for q in adj.get(endpoint, ())}
            for g in range(k):
                if g == labels[endpoint] or g in taken:
                    continue
                cost = pdata.weights[endpoint] * (
                    d2[endpoint, g] - d2[endpoint, labels[endpoint]]
                )
                key = (cost, endpoint, g)
                if best is None or key < best:
                    best = key
        if best is not None:
            _, endpoint, g = best
            labels[endpoint] = g

    residual = _count_cl_violations(labels, sorted(cl_projected.cl))
    lifted = lift_assignment(collapsed, Assignment(labels, k))
    return lifted, residual


def evaluate(labels, data: Dataset, constraints: ConstraintSet,
             model: CentroidModel, truth=None) -> dict:
    """Metrics on the original data: cost with centroids recomputed from the
    labels, ML/CL violation counts, and agreement scores when truth labels
    are supplied."""
    lab = as_labels(labels)
    k = model.k
    fitted = update_centroids(data, lab, k, prev=model)
    sse = weighted_sse(data, fitted, lab)
    ml_violations = sum(1 for i, j in constraints.ml if lab[i] != lab[j])
    cl_violations = sum(1 for i, j in constraints.cl if lab[i] == lab[j])
    out = {
        "sse": sse,
        "ml_violations": ml_violations,
        "cl_violations": cl_violations,
    }
    if truth is not None:
        truth = np.asarray(truth, dtype=np.int64)
        out["ari"] = adjusted_rand_index(truth, lab)
        out["ami"] = adjusted_mutual_info(truth, lab)
        out["purity"] = purity(truth, lab)
    return out


def _contingency(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    return table


def adjusted_rand_index(a, b) -> float:
    table = _contingency(np.asarray(a), np.asarray(b))
    n = table.sum()
    sum_comb = (table * (table - 1) / 2).sum()
    rows = table.sum(axis=1)
    cols = table.sum(axis=0)
    comb_rows = (rows * (rows - 1) / 2).sum()
    comb_cols = (cols * (cols - 1) / 2).sum()
    total = n * (n - 1) / 2
    expected = comb_rows * comb_cols / total if total else 0.0
    max_index = (comb_rows + comb_cols) / 2
    if max_index == expected:
        return 1.0
    return float((sum_comb - expected) / (max_index - expected))


def _entropy(counts: np.ndarray) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log(p)).sum())


def adjusted_mutual_info(a, b) -> float:
    """AMI with the permutation-model expected MI and arithmetic-mean
    normalization."""
    table = _contingency(np.asarray(a), np.asarray(b))
    n = int(table.sum())
    rows = table.sum(axis=1)
    cols = table.sum(axis=0)
    nz = table > 0
    p = table[nz] / n
    outer = np.outer(rows, cols)[nz] / (n * n)
    mi = float((p * np.log(p / outer)).sum())

    emi = 0.0
    for i, ai in enumerate(rows):
        for j, bj in enumerate(cols):
            lo = max(1, ai + bj - n)
            hi = min(ai, bj)
            for nij in range(lo, hi + 1):
                term = nij / n * np.log(n * nij / (ai * bj))
                log_p = (
                    gammaln(ai + 1) + gammaln(bj + 1)
                    + gammaln(n - ai + 1) + gammaln(n - bj + 1)
                    - gammaln(n + 1) - gammaln(nij + 1)
                    - gammaln(ai - nij + 1) - gammaln(bj - nij + 1)
                    - gammaln(n - ai - bj + nij + 1)
                )
                emi += term * float(np.exp(log_p))
    h_a = _entropy(rows)
    h_b = _entropy(cols)
    denom = 0.5 * (h_a + h_b) - emi
    if abs(denom) < 1e-15:
        return 1.0
    return float((mi - emi) / denom)


def purity(truth, labels) -> float:
    table = _contingency(np.asarray(labels), np.asarray(truth))
    return float(table.max(axis=1).sum() / table.sum())
