"""Penalty QUBO for the restricted reassignment problem.

Binary variable (i, g) means "subset point i takes cluster g", flattened as
qubit k*i + g.  The energy is the linear incremental-cost term plus weighted
quadratic penalties for the one-hot, must-link, and cannot-link structure,
plus linear cross-edge penalties for constraints reaching outside the
subset.  Two penalty modes are provided: ``evaluate`` picks a weight large
enough that every infeasible bitstring ranks strictly above every feasible
one; ``search`` caps the weight so a single mixer layer can still lower the
expected energy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .restricted import RestrictedModel


@dataclass(frozen=True)
class OneHotLayout:
    """Flattening of (point, cluster) pairs onto qubit indices."""

    n_points: int
    k: int

    @property
    def n_vars(self) -> int:
        return self.n_points * self.k

    def qubit(self, i: int, g: int) -> int:
        return self.k * i + g

    def pairs(self):
        """Per-point cluster pairs in deterministic order (i asc, g<h lex)."""
        for i in range(self.n_points):
            for g in range(self.k):
                for h in range(g + 1, self.k):
                    yield i, g, h

    def decode(self, bits: np.ndarray) -> np.ndarray | None:
        """Labels from a one-hot bitstring, or None if any point is not."""
        mat = np.asarray(bits).reshape(self.n_points, self.k)
        if not np.all(mat.sum(axis=1) == 1):
            return None
        return np.argmax(mat, axis=1).astype(np.int64)


@dataclass(frozen=True)
class QuboModel:
    """Upper-triangular quadratic coefficients, linear terms, and offset."""

    quad: np.ndarray
    linear: np.ndarray
    constant: float
    lam: float
    layout: OneHotLayout
    internal_cl: tuple = ()
    internal_ml: tuple = ()
    external_forbidden: tuple = ()
    mode: str = "evaluate"

    def __post_init__(self):
        q = np.asarray(self.quad, dtype=float).copy()
        c = np.asarray(self.linear, dtype=float).copy()
        n = self.layout.n_vars
        if q.shape != (n, n) or c.shape != (n,):
            raise ValueError("coefficient shapes do not match the layout")
        if np.any(np.tril(q) != 0.0):
            raise ValueError("quad must be strictly upper-triangular")
        q.flags.writeable = False
        c.flags.writeable = False
        object.__setattr__(self, "quad", q)
        object.__setattr__(self, "linear", c)
        object.__setattr__(
            self, "internal_cl", tuple((int(a), int(b)) for a, b in self.internal_cl)
        )
        object.__setattr__(
            self, "internal_ml", tuple((int(a), int(b)) for a, b in self.internal_ml)
        )
        object.__setattr__(
            self,
            "external_forbidden",
            tuple(frozenset(f) for f in self.external_forbidden),
        )

    @property
    def n_vars(self) -> int:
        return self.layout.n_vars

    def energy(self, bits) -> float:
        b = np.asarray(bits, dtype=float)
        return float(b @ (self.quad @ b) + self.linear @ b + self.constant)

    def is_feasible(self, bits) -> bool:
        """One-hot everywhere, internal CL apart, internal ML together, and
        no externally clamped cluster taken."""
        labels = self.layout.decode(np.asarray(bits))
        if labels is None:
            return False
        for a, b in self.internal_cl:
            if labels[a] == labels[b]:
                return False
        for a, b in self.internal_ml:
            if labels[a] != labels[b]:
                return False
        for pos, forbidden in enumerate(self.external_forbidden):
            if int(labels[pos]) in forbidden:
                return False
        return True


def search_lambda_limit(model: RestrictedModel, n_edges: int) -> float:
    """Largest penalty weight keeping the one-layer improvement window open:
    mean positive margin times |S| over 32 (k-1) edge count."""
    if n_edges <= 0:
        raise ValueError("lambda limit needs at least one ML/CL edge")
    rows = np.arange(model.size)
    masked = model.deltas.copy()
    masked[rows, model.warm_start] = np.inf
    eta = np.maximum(0.0, -masked.min(axis=1))
    eta_bar = float(eta.mean())
    return eta_bar * model.size / (32.0 * (model.k - 1) * n_edges)


def build_qubo(
    model: RestrictedModel,
    ml_internal=(),
    ml_external=(),
    mode: str = "evaluate",
) -> QuboModel:
    """Translate a restricted model into a penalty QUBO.

    ``ml_internal`` lists position pairs inside the subset that must share a
    cluster (only present when the contraction step was bypassed);
    ``ml_external`` lists (position, target label) attractions for must-link
    partners outside the subset.  Cannot-link structure is taken from the
    model itself.  In ``evaluate`` mode the weight exceeds the total absolute
    linear cost, so infeasible strings are strictly separated; in ``search``
    mode it is capped for the mixer-improvement regime, falling back to the
    evaluate weight when there are no edges to scale against.
    """
    if mode not in ("evaluate", "search"):
        raise ValueError(f"unknown mode {mode!r}")
    layout = OneHotLayout(model.size, model.k)
    n = layout.n_vars
    total_abs = float(np.abs(model.deltas).sum())
    lam_eval = total_abs + 1e-6 * max(1.0, total_abs)
    ml_internal = tuple((int(a), int(b)) for a, b in ml_internal)
    n_edges = len(model.internal_cl) + len(ml_internal)
    if mode == "search" and n_edges > 0:
        lam = search_lambda_limit(model, n_edges)
    else:
        lam = lam_eval

    quad = np.zeros((n, n), dtype=float)
    linear = np.zeros(n, dtype=float)
    constant = 0.0

    for pos in range(model.size):
        for g in range(model.k):
            linear[layout.qubit(pos, g)] += model.deltas[pos, g]

    # One-hot: lam * (1 - sum_g d)^2 per point.
    for pos in range(model.size):
        constant += lam
        for g in range(model.k):
            linear[layout.qubit(pos, g)] -= lam
        for g in range(model.k):
            for h in range(g + 1, model.k):
                quad[layout.qubit(pos, g), layout.qubit(pos, h)] += 2.0 * lam

    # Must-link inside the subset: lam * sum_g (d_u - d_v)^2.
    for a, b in ml_internal:
        for g in range(model.k):
            qa, qb = layout.qubit(a, g), layout.qubit(b, g)
            linear[qa] += lam
            linear[qb] += lam
            lo, hi = (qa, qb) if qa < qb else (qb, qa)
            quad[lo, hi] -= 2.0 * lam

    # Cannot-link inside the subset: lam * sum_g d_u d_v.
    for a, b in model.internal_cl:
        for g in range(model.k):
            qa, qb = layout.qubit(a, g), layout.qubit(b, g)
            lo, hi = (qa, qb) if qa < qb else (qb, qa)
            quad[lo, hi] += lam

    # Cross edges: CL partner outside the subset forbids its fixed label;
    # ML partner outside attracts toward its fixed label.
    for pos, forbidden in enumerate(model.external_forbidden):
        for g in sorted(forbidden):
            linear[layout.qubit(pos, g)] += lam
    for pos, target in ml_external:
        for g in range(model.k):
            linear[layout.qubit(pos, g)] += lam
        linear[layout.qubit(pos, int(target))] -= 2.0 * lam

    return QuboModel(
        quad=quad,
        linear=linear,
        constant=constant,
        lam=lam,
        layout=layout,
        internal_cl=model.internal_cl,
        internal_ml=ml_internal,
        external_forbidden=model.external_forbidden,
        mode=mode,
    )


def all_bitstrings(n_vars: int) -> np.ndarray:
    """(2^n, n) matrix of bits; row z holds the big-endian bits of z, so
    ascending row order is lexicographic order of the bitstrings."""
    if n_vars > 20:
        raise ValueError(f"{n_vars} variables exceed the dense enumeration cap of 20")
    z = np.arange(1 << n_vars, dtype=np.uint32)
    shifts = np.arange(n_vars - 1, -1, -1, dtype=np.uint32)
    return ((z[:, None] >> shifts[None, :]) & 1).astype(np.float64)


def all_energies(qubo: QuboModel) -> np.ndarray:
    """Energies of every bitstring, indexed like :func:`all_bitstrings`."""
    n = qubo.n_vars
    energies = np.empty(1 << n, dtype=np.float64)
    chunk = 1 << 16
    shifts = np.arange(n - 1, -1, -1, dtype=np.uint32)
    for start in range(0, 1 << n, chunk):
        z = np.arange(start, min(start + chunk, 1 << n), dtype=np.uint32)
        bits = ((z[:, None] >> shifts[None, :]) & 1).astype(np.float64)
        energies[start : start + bits.shape[0]] = (
            np.einsum("zi,ij,zj->z", bits, qubo.quad, bits)
            + bits @ qubo.linear
            + qubo.constant
        )
    return energies


def brute_force_ground(qubo: QuboModel):
    """Exact minimum over all bitstrings; ties go to the lexicographically
    smallest string.  Returns (bits, energy)."""
    energies = all_energies(qubo)
    z = int(np.argmin(energies))
    n = qubo.n_vars
    bits = np.array([(z >> (n - 1 - j)) & 1 for j in range(n)], dtype=np.int64)
    return bits, float(energies[z])


def write_qubo_text(qubo: QuboModel, path) -> None:
    """Plain-text triplet export: quadratic ``i j value`` lines, linear
    ``i value`` lines, and one ``constant value`` line."""
    with open(path, "w") as fh:
        rows, cols = np.nonzero(qubo.quad)
        for i, j in zip(rows, cols):
            fh.write(f"{i} {j} {qubo.quad[i, j]!r}\n")
        for i in np.nonzero(qubo.linear)[0]:
            fh.write(f"{i} {qubo.linear[i]!r}\n")
        fh.write(f"constant {qubo.constant!r}\n")


def read_qubo_text(path):
    """Inverse of :func:`write_qubo_text`; returns (quad dict, linear dict,
    constant) without reconstructing layout metadata."""
    quad: dict[tuple[int, int], float] = {}
    linear: dict[int, float] = {}
    constant = 0.0
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "constant":
                constant = float(parts[1])
            elif len(parts) == 3:
                quad[(int(parts[0]), int(parts[1]))] = float(parts[2])
            elif len(parts) == 2:
                linear[int(parts[0])] = float(parts[1])
            else:
                raise ValueError(f"unrecognized QUBO line: {line!r}")
    return quad, linear, constant
