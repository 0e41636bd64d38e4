"""Box geometry (IoU) and exact bipartite assignment.

The solver returns a maximum-cardinality matching of maximum total value.
Among equal-value matchings it returns the lexicographically smallest pair
list sorted by (row, col), so repeated runs and both kernel backends
produce identical output. ``brute_force_assignment`` is the exhaustive
reference with the same contract, usable up to min-dimension 8.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .kernels import iou_matrix_kernel, lap_min_square, lex_refine

BRUTE_FORCE_MAX_DIM = 8


@dataclass(frozen=True)
class CostMatrix:
    """Finite row-major value matrix for assignment problems."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, np.float64)
        if arr.ndim != 2:
            raise ValueError(f"cost matrix must be 2-D, got shape {arr.shape}")
        if arr.size and not np.all(np.isfinite(arr)):
            raise ValueError("cost matrix entries must be finite")
        object.__setattr__(self, "values", arr)

    @property
    def rows(self):
        return self.values.shape[0]

    @property
    def cols(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class Assignment:
    pairs: tuple = field(default_factory=tuple)
    objective: float = 0.0


def iou_xywh(a, b):
    """IoU of two (x, y, w, h) boxes given as array-likes."""
    m = iou_matrix_kernel(
        np.asarray([a], np.float64), np.asarray([b], np.float64)
    )
    return float(m[0, 0])


def iou(a, b):
    """IoU of two box objects carrying x/y/w/h attributes."""
    return iou_xywh((a.x, a.y, a.w, a.h), (b.x, b.y, b.w, b.h))


def iou_matrix(gts, preds):
    """CostMatrix of IoUs, entry (i, j) = iou(gts[i], preds[j])."""
    g = np.asarray(
        [(b.x, b.y, b.w, b.h) for b in gts], np.float64
    ).reshape(len(gts), 4)
    p = np.asarray(
        [(b.x, b.y, b.w, b.h) for b in preds], np.float64
    ).reshape(len(preds), 4)
    return CostMatrix(iou_matrix_kernel(g, p))


def _as_values(m):
    if isinstance(m, CostMatrix):
        return m.values
    return CostMatrix(np.asarray(m, np.float64)).values


def solve_max_assignment(m):
    """Optimal assignment maximizing total value (see module docstring)."""
    values = _as_values(m)
    n_rows, n_cols = values.shape
    if n_rows == 0 or n_cols == 0:
        return Assignment(pairs=(), objective=0.0)
    n = max(n_rows, n_cols)
    cost = np.zeros((n, n), np.float64)
    cost[:n_rows, :n_cols] = -values
    col4row, u, v = lap_min_square(cost)
    col4row = lex_refine(cost, u, v, col4row, n_rows)
    pairs = []
    for r in range(n_rows):
        c = int(col4row[r])
        if c < n_cols:
            pairs.append((r, c))
    objective = 0.0
    for r, c in pairs:
        objective += float(values[r, c])
    return Assignment(pairs=tuple(pairs), objective=objective)


def brute_force_assignment(m):
    """Exhaustive oracle with the same optimum and tie-break as the solver."""
    values = _as_values(m)
    n_rows, n_cols = values.shape
    if n_rows == 0 or n_cols == 0:
        return Assignment(pairs=(), objective=0.0)
    if min(n_rows, n_cols) > BRUTE_FORCE_MAX_DIM:
        raise ValueError(
            f"brute force limited to min-dimension {BRUTE_FORCE_MAX_DIM}, "
            f"got {n_rows}x{n_cols}"
        )
    best_pairs = None
    best_obj = -np.inf
    if n_rows <= n_cols:
        for perm in itertools.permutations(range(n_cols), n_rows):
            pairs = tuple(enumerate(perm))
            obj = 0.0
            for r, c in pairs:
                obj += float(values[r, c])
            if obj > best_obj or (obj == best_obj and pairs < best_pairs):
                best_obj = obj
                best_pairs = pairs
    else:
        for perm in itertools.permutations(range(n_rows), n_cols):
            pairs = tuple(sorted((r, c) for c, r in enumerate(perm)))
            obj = 0.0
            for r, c in pairs:
                obj += float(values[r, c])
            if obj > best_obj or (obj == best_obj and pairs < best_pairs):
                best_obj = obj
                best_pairs = pairs
    return Assignment(pairs=best_pairs, objective=best_obj)
