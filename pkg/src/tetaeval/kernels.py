"""Hot numeric kernels: box IoU matrices and linear assignment.

Every kernel is written as plain loops over NumPy arrays so the same source
compiles under numba and runs unmodified as the fallback. The only
backend-specific variant is the vectorized IoU matrix used when numba is
off; its elementwise operations are bit-identical to the loop version.
"""

import numpy as np

from .backend import NUMBA_ENABLED, jit_kernel


def _iou_matrix_loops(gts, preds):
    """IoU of every (gt, pred) box pair; boxes are (x, y, w, h) rows."""
    n = gts.shape[0]
    m = preds.shape[0]
    out = np.zeros((n, m), np.float64)
    for i in range(n):
        ax, ay, aw, ah = gts[i, 0], gts[i, 1], gts[i, 2], gts[i, 3]
        ax2 = ax + aw
        ay2 = ay + ah
        area_a = aw * ah
        for j in range(m):
            bx, by, bw, bh = preds[j, 0], preds[j, 1], preds[j, 2], preds[j, 3]
            iw = min(ax2, bx + bw) - max(ax, bx)
            if iw <= 0.0:
                continue
            ih = min(ay2, by + bh) - max(ay, by)
            if ih <= 0.0:
                continue
            inter = iw * ih
            union = area_a + bw * bh - inter
            if union > 0.0:
                out[i, j] = inter / union
    return out


def _iou_matrix_numpy(gts, preds):
    """Vectorized twin of :func:`_iou_matrix_loops` (same arithmetic per cell)."""
    if gts.shape[0] == 0 or preds.shape[0] == 0:
        return np.zeros((gts.shape[0], preds.shape[0]), np.float64)
    gx1 = gts[:, 0][:, None]
    gy1 = gts[:, 1][:, None]
    gx2 = gx1 + gts[:, 2][:, None]
    gy2 = gy1 + gts[:, 3][:, None]
    px1 = preds[:, 0][None, :]
    py1 = preds[:, 1][None, :]
    px2 = px1 + preds[:, 2][None, :]
    py2 = py1 + preds[:, 3][None, :]
    iw = np.minimum(gx2, px2) - np.maximum(gx1, px1)
    ih = np.minimum(gy2, py2) - np.maximum(gy1, py1)
    pos = (iw > 0.0) & (ih > 0.0)
    inter = np.where(pos, iw * ih, 0.0)
    union = (gts[:, 2] * gts[:, 3])[:, None] + (preds[:, 2] * preds[:, 3])[None, :] - inter
    ok = pos & (union > 0.0)
    return np.where(ok, inter / np.where(ok, union, 1.0), 0.0)


def _lap_min_square(cost):
    """Minimum-cost perfect matching on a square matrix.

    Shortest-augmenting-path method with dual potentials. Returns
    (col4row, u, v) where u[i] + v[j] <= cost[i, j] holds for every cell
    with equality on matched cells, so zero reduced cost identifies the
    edges usable by any optimal matching.
    """
    n = cost.shape[0]
    inf = np.inf
    u = np.zeros(n + 1, np.float64)
    v = np.zeros(n + 1, np.float64)
    p = np.zeros(n + 1, np.int64)
    way = np.zeros(n + 1, np.int64)
    minv = np.empty(n + 1, np.float64)
    used = np.empty(n + 1, np.bool_)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        for j in range(n + 1):
            minv[j] = inf
            used[j] = False
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = inf
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    col4row = np.full(n, -1, np.int64)
    for j in range(1, n + 1):
        if p[j] > 0:
            col4row[p[j] - 1] = j - 1
    return col4row, u[1:], v[1:]


def _lex_refine(cost, u, v, col4row, n_rows_real):
    """Rewrite ``col4row`` to the lexicographically smallest optimal matching.

    Works on the zero-reduced-cost subgraph of a solved square problem, so
    every matching it can reach has the same objective. Rows are fixed in
    ascending order; each row prefers the smallest real column, falling
    back to padding columns (= unmatched) only when no real column keeps
    the remainder solvable.
    """
    n = cost.shape[0]
    row4col = np.empty(n, np.int64)
    for r in range(n):
        row4col[col4row[r]] = r
    locked_col = np.zeros(n, np.bool_)
    visited = np.empty(n, np.bool_)
    s_row = np.empty(n + 1, np.int64)
    s_col = np.empty(n + 1, np.int64)
    pend = np.empty(n + 1, np.int64)

    for r in range(n_rows_real):
        cur = col4row[r]
        # ascending index order = real columns first, padding columns last
        for c in range(n):
            if locked_col[c]:
                continue
            if cost[r, c] - u[r] - v[c] != 0.0:
                continue
            if c == cur:
                break
            # tentatively force (r, c) and try to re-seat the displaced row
            r1 = row4col[c]
            col4row[r] = c
            row4col[c] = r
            col4row[r1] = -1
            row4col[cur] = -1
            for j in range(n):
                visited[j] = False
            lvl = 0
            s_row[0] = r1
            s_col[0] = 0
            success = False
            while lvl >= 0:
                rr = s_row[lvl]
                c2 = s_col[lvl]
                moved = False
                while c2 < n:
                    if (
                        not visited[c2]
                        and not locked_col[c2]
                        and c2 != c
                        and cost[rr, c2] - u[rr] - v[c2] == 0.0
                    ):
                        visited[c2] = True
                        if row4col[c2] < 0:
                            col4row[rr] = c2
                            row4col[c2] = rr
                            lvl -= 1
                            while lvl >= 0:
                                r_up = s_row[lvl]
                                c_up = pend[lvl]
                                col4row[r_up] = c_up
                                row4col[c_up] = r_up
                                lvl -= 1
                            success = True
                            moved = True
                            break
                        pend[lvl] = c2
                        s_col[lvl] = c2 + 1
                        lvl += 1
                        s_row[lvl] = row4col[c2]
                        s_col[lvl] = 0
                        moved = True
                        break
                    c2 += 1
                if success:
                    break
                if not moved:
                    lvl -= 1
            if success:
                break
            # infeasible at the optimum; revert and try the next column
            col4row[r] = cur
            row4col[cur] = r
            col4row[r1] = c
            row4col[c] = r1
        locked_col[col4row[r]] = True
    return col4row


if NUMBA_ENABLED:
    iou_matrix_kernel = jit_kernel(_iou_matrix_loops)
    lap_min_square = jit_kernel(_lap_min_square)
    lex_refine = jit_kernel(_lex_refine)
else:
    iou_matrix_kernel = _iou_matrix_numpy
    lap_min_square = _lap_min_square
    lex_refine = _lex_refine
