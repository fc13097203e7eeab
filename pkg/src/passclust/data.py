"""Core instance types and file ingestion.

A clustering instance is a :class:`Dataset` (points plus positive weights)
together with a :class:`ConstraintSet` of unordered must-link / cannot-link
index pairs.  Constraint files are plain text (``ML i j`` / ``CL i j`` lines),
datasets are headerless CSV by default.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataFormatError

Pair = tuple[int, int]


def _canon(i: int, j: int) -> Pair:
    """Canonical unordered pair: (min, max)."""
    if i == j:
        raise DataFormatError(f"self-pair ({i},{i}) is not a valid constraint")
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class Dataset:
    """Points to be clustered, with per-point positive weights.

    ``points`` is an (n, d) float array; ``weights`` defaults to all ones.
    Arrays are made read-only so instances can be shared across threads.
    """

    points: np.ndarray
    weights: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValueError(f"points must be 2-D, got shape {pts.shape}")
        n, d = pts.shape
        if n < 1 or d < 1:
            raise ValueError(f"need n >= 1 and d >= 1, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points contain non-finite values")
        if self.weights is None:
            w = np.ones(n, dtype=float)
        else:
            w = np.asarray(self.weights, dtype=float)
        if w.shape != (n,):
            raise ValueError(f"weights shape {w.shape} does not match n={n}")
        if not np.all(w > 0):
            raise ValueError("all weights must be positive")
        pts = pts.copy()
        w = w.copy()
        pts.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class ConstraintSet:
    """Unordered must-link and cannot-link pairs over point indices."""

    ml: frozenset = field(default_factory=frozenset)
    cl: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        ml = frozenset(_canon(int(i), int(j)) for i, j in self.ml)
        cl = frozenset(_canon(int(i), int(j)) for i, j in self.cl)
        both = ml & cl
        if both:
            pair = min(both)
            raise DataFormatError(
                f"pair {pair} appears as both ML and CL; constraints are contradictory"
            )
        object.__setattr__(self, "ml", ml)
        object.__setattr__(self, "cl", cl)

    def validate_for(self, n: int) -> None:
        """Check every index against a dataset of size ``n``."""
        for name, pairs in (("ML", self.ml), ("CL", self.cl)):
            for i, j in pairs:
                if not (0 <= i < n and 0 <= j < n):
                    raise DataFormatError(
                        f"{name} pair ({i},{j}) has an index out of range for n={n}"
                    )

    def is_empty(self) -> bool:
        return not self.ml and not self.cl


@dataclass(frozen=True)
class Assignment:
    """Per-point cluster labels in [0, k)."""

    labels: np.ndarray
    k: int

    def __post_init__(self):
        lab = np.asarray(self.labels, dtype=np.int64).copy()
        if lab.ndim != 1:
            raise ValueError("labels must be 1-D")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if lab.size and (lab.min() < 0 or lab.max() >= self.k):
            raise ValueError(f"labels must lie in [0, {self.k})")
        lab.flags.writeable = False
        object.__setattr__(self, "labels", lab)

    @property
    def n(self) -> int:
        return self.labels.shape[0]


def as_labels(labels) -> np.ndarray:
    """Accept an Assignment or a plain integer array; return the array."""
    if isinstance(labels, Assignment):
        return labels.labels
    return np.asarray(labels, dtype=np.int64)


def load_dataset(path, header: bool = False, delimiter: str = ",") -> Dataset:
    """Parse a CSV of numeric rows into a Dataset with unit weights.

    Raises DataFormatError naming the offending row/column for ragged or
    non-numeric input, and for an empty file.
    """
    rows: list[list[float]] = []
    arity = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        for lineno, row in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not row or all(cell.strip() == "" for cell in row):
                continue
            values = []
            for col, cell in enumerate(row, start=1):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise DataFormatError(
                        f"{path}: non-numeric cell at row {lineno}, column {col}: {cell!r}"
                    ) from None
            if arity is None:
                arity = len(values)
            elif len(values) != arity:
                raise DataFormatError(
                    f"{path}: ragged row {lineno}: expected {arity} columns, got {len(values)}"
                )
            rows.append(values)
    if not rows:
        raise DataFormatError(f"{path}: empty dataset")
    return Dataset(np.asarray(rows, dtype=float))


def load_labels(path) -> np.ndarray:
    """Read one integer label per line (``#`` comments allowed)."""
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                out.append(int(text))
            except ValueError:
                raise DataFormatError(
                    f"{path}: line {lineno}: expected an integer label, got {text!r}"
                ) from None
    if not out:
        raise DataFormatError(f"{path}: empty label file")
    return np.asarray(out, dtype=np.int64)


def load_constraints(path, n: int | None = None) -> ConstraintSet:
    """Parse ``ML i j`` / ``CL i j`` lines into a ConstraintSet.

    Duplicates are deduplicated via canonical (min, max) pairs.  When ``n``
    is given, indices are range-checked here rather than at use time.
    """
    ml: set[Pair] = set()
    cl: set[Pair] = set()
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            if len(parts) != 3:
                raise DataFormatError(
                    f"{path}: line {lineno}: expected 'ML i j' or 'CL i j', got {text!r}"
                )
            tag, si, sj = parts
            tag = tag.upper()
            if tag not in ("ML", "CL"):
                raise DataFormatError(f"{path}: line {lineno}: unknown tag {parts[0]!r}")
            try:
                i, j = int(si), int(sj)
            except ValueError:
                raise DataFormatError(
                    f"{path}: line {lineno}: indices must be integers, got {si!r} {sj!r}"
                ) from None
            if i == j:
                raise DataFormatError(f"{path}: line {lineno}: self-pair ({i},{j})")
            if i < 0 or j < 0 or (n is not None and (i >= n or j >= n)):
                raise DataFormatError(
                    f"{path}: line {lineno}: index out of range in ({i},{j})"
                )
            (ml if tag == "ML" else cl).add(_canon(i, j))
    try:
        return ConstraintSet(frozenset(ml), frozenset(cl))
    except DataFormatError as exc:
        raise DataFormatError(f"{path}: {exc}") from None


def save_constraints(constraints: ConstraintSet, path) -> None:
    """Write constraints in the same plain-text format load_constraints reads."""
    with open(path, "w") as fh:
        for i, j in sorted(constraints.ml):
            fh.write(f"ML {i} {j}\n")
        for i, j in sorted(constraints.cl):
            fh.write(f"CL {i} {j}\n")


def sample_constraints(
    dataset: Dataset,
    truth=None,
    n_ml: int = 0,
    n_cl: int = 0,
    seed: int = 0,
) -> ConstraintSet:
    """Random-pair constraint sampling, deterministic given the seed.

    Distinct unordered pairs are drawn uniformly without replacement across
    both quotas.  With ``truth`` labels, an equal-label pair counts toward
    the ML quota and an unequal-label pair toward the CL quota; pairs whose
    quota is already filled are discarded (never redrawn).  Without truth,
    the first ``n_ml`` drawn pairs become ML and the rest CL.
    """
    n = dataset.n
    if truth is not None:
        truth = np.asarray(truth, dtype=np.int64)
        if truth.shape != (n,):
            raise ValueError(f"truth labels must have length n={n}")
    if n_ml < 0 or n_cl < 0:
        raise ValueError("quotas must be non-negative")
    universe = n * (n - 1) // 2
    if n_ml + n_cl > universe:
        raise ValueError(
            f"quotas n_ml+n_cl={n_ml + n_cl} exceed the {universe} distinct pairs"
        )
    rng = np.random.default_rng(seed)
    ml: set[Pair] = set()
    cl: set[Pair] = set()

    def admit(pair: Pair) -> None:
        i, j = pair
        if truth is not None:
            if truth[i] == truth[j]:
                if len(ml) < n_ml:
                    ml.add(pair)
            elif len(cl) < n_cl:
                cl.add(pair)
        elif len(ml) < n_ml:
            ml.add(pair)
        else:
            cl.add(pair)

    if universe <= 200_000:
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        for idx in rng.permutation(universe):
            admit(pairs[idx])
            if len(ml) == n_ml and len(cl) == n_cl:
                break
    else:
        seen: set[Pair] = set()
        attempts = 0
        limit = 200 * (n_ml + n_cl) + 10_000
        while (len(ml) < n_ml or len(cl) < n_cl) and attempts < limit:
            attempts += 1
            i = int(rng.integers(n))
            j = int(rng.integers(n))
            if i == j:
                continue
            pair = _canon(i, j)
            if pair in seen:
                continue
            seen.add(pair)
            admit(pair)
    if len(ml) < n_ml or len(cl) < n_cl:
        raise ValueError(
            f"constraint quotas unsatisfiable: drew {len(ml)} ML / {len(cl)} CL, "
            f"wanted {n_ml} / {n_cl}"
        )
    return ConstraintSet(frozenset(ml), frozenset(cl))


def generate_blobs(
    n: int, k: int, d: int = 2, spread: float = 1.0, sep: float = 8.0, seed: int = 0
):
    """Balanced Gaussian blobs for synthetic benchmarks.

    Returns (Dataset, truth labels).  Centers sit on a seeded isotropic
    Gaussian with scale ``sep``; points get per-blob N(0, spread^2) noise.
    """
    if k < 1 or n < k:
        raise ValueError("need n >= k >= 1")
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, sep, size=(k, d))
    truth = np.repeat(np.arange(k), math.ceil(n / k))[:n]
    rng.shuffle(truth)
    points = centers[truth] + rng.normal(0.0, spread, size=(n, d))
    return Dataset(points), truth
