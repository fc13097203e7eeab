"""Pairwise-constrained k-means with must-link collapse, ambiguity-driven
subset selection, an exact restricted reassignment solver, and a desk-scale
QUBO/QAOA refinement path."""

__version__ = "0.1.0"

from .collapse import CollapsedInstance, collapse, lift_assignment, verify_cost_identity
from .centroids import (
    CentroidModel,
    ClusteringState,
    assign_nearest,
    cop_kmeans,
    init_minibatch,
    lloyd_kmeans,
    update_centroids,
)
from .data import (
    Assignment,
    ConstraintSet,
    Dataset,
    generate_blobs,
    load_constraints,
    load_dataset,
    load_labels,
    sample_constraints,
    save_constraints,
)
from .driver import PassConfig, PassResult, evaluate, post_process, run_pass
from .errors import (
    DataFormatError,
    InfeasibleInstanceError,
    InfeasibleSubproblemError,
    PassclustError,
)
from .qaoa import QaoaRun, apply_xy_mixer, mixer_gate_count, run_qaoa_p1
from .qubo import (
    OneHotLayout,
    QuboModel,
    brute_force_ground,
    build_qubo,
    read_qubo_text,
    write_qubo_text,
)
from .restricted import (
    RestrictedModel,
    RestrictedSolution,
    build_model,
    solve_exact,
    solve_local_search,
)
from .selection import (
    WorkingSubset,
    budget,
    compute_margins,
    find_violations,
    fisher_rao_score,
    fisher_rao_scores,
    select_ca,
    select_ig,
    soft_assignments,
)

__all__ = [name for name in dir() if not name.startswith("_")]
