"""Maximum-weight bipartite matching on sparse supports.

``solve_auction`` is a forward auction with epsilon-scaling; ``solve_greedy``
is the usual 1/2-approximation (heaviest pair first).

The auction works on a square problem built from the sparse instance so that
a perfect assignment always exists and epsilon-scaling stays valid:

* persons: every row that has a pair, plus one "column slack" per column;
* objects: every column that has a pair, plus one "row slack" per row.

Row ``r`` may take any of its columns, or its own row slack (weight 0, or a
large penalty when a complete matching is forced).  Column slack ``j`` may take
column ``j`` or the row slack of any row adjacent to ``j`` (weight 0).  A row
taking its row slack is unmatched in the original problem.
"""

from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .evaluation import Mapping

__all__ = ["BipartiteInstance", "solve_auction", "solve_greedy"]


@dataclass(frozen=True)
class BipartiteInstance:
    rows: int
    cols: int
    weighted_pairs: Tuple[Tuple[int, int, float], ...]

    def __post_init__(self):
        pairs = tuple((int(r), int(c), float(w)) for r, c, w in self.weighted_pairs)
        seen = set()
        for r, c, w in pairs:
            if not (0 <= r < self.rows and 0 <= c < self.cols):
                raise ValueError(f"pair ({r}, {c}) out of range for {self.rows}x{self.cols}")
            if not np.isfinite(w):
                raise ValueError(f"pair ({r}, {c}) has non-finite weight {w}")
            if (r, c) in seen:
                raise ValueError(f"pair ({r}, {c}) is duplicated")
            seen.add((r, c))
        object.__setattr__(self, "weighted_pairs", pairs)

    @classmethod
    def from_dense(cls, weights, mask=None) -> "BipartiteInstance":
        w = np.asarray(weights, dtype=float)
        if mask is None:
            mask = np.ones(w.shape, dtype=bool)
        rr, cc = np.nonzero(mask)
        return cls(w.shape[0], w.shape[1], tuple(zip(rr.tolist(), cc.tolist(), w[rr, cc].tolist())))


def _auction(adj_obj, adj_w, n_objects, eps_start, eps_final):
    n_persons = len(adj_obj)
    price = np.zeros(n_objects)
    owner = np.full(n_objects, -1, dtype=np.int64)
    assigned = np.full(n_persons, -1, dtype=np.int64)
    eps = eps_start
    while True:
        eps = max(eps, eps_final)
        owner[:] = -1
        assigned[:] = -1
        queue = deque(range(n_persons))
        while queue:
            i = queue.popleft()
            objs = adj_obj[i]
            values = adj_w[i] - price[objs]
            k1 = int(np.argmax(values))
            v1 = values[k1]
            values[k1] = -np.inf
            v2 = values.max()
            o = objs[k1]
            price[o] += v1 - v2 + eps
            prev = owner[o]
            if prev >= 0:
                assigned[prev] = -1
                queue.append(prev)
            owner[o] = i
            assigned[i] = o
        if eps <= eps_final:
            return assigned
        eps /= 4.0


def solve_auction(inst: BipartiteInstance, eps_final: Optional[float] = None,
                  force_complete: bool = False) -> Tuple[Mapping, float]:
    """Maximum-weight matching over the sparse support of ``inst``.

    The returned value is within ``n * eps_final`` of the optimum (``n`` the
    number of auction persons).  By default ``eps_final`` is small enough
    relative to the weight scale that the optimum is recovered unless two
    matchings differ by less than ~1e-10 of the largest weight.

    Rows whose every option has negative weight stay unmatched, unless
    ``force_complete`` is set: then the matching has maximum cardinality
    and maximum weight among maximum-cardinality matchings.
    """
    pairs = inst.weighted_pairs
    if not pairs:
        return Mapping([]), 0.0
    r = np.array([p[0] for p in pairs], dtype=np.int64)
    c = np.array([p[1] for p in pairs], dtype=np.int64)
    w = np.array([p[2] for p in pairs], dtype=np.float64)

    rows = np.unique(r)
    cols = np.unique(c)
    row_id = np.full(inst.rows, -1, dtype=np.int64)
    row_id[rows] = np.arange(len(rows))
    col_id = np.full(inst.cols, -1, dtype=np.int64)
    col_id[cols] = np.arange(len(cols))
    n_r, n_c = len(rows), len(cols)

    span = max(float(np.abs(w).max()), 1e-300)
    slack = -(2.0 * n_r * span + 1.0) if force_complete else 0.0
    scale = max(span, abs(slack))

    # objects: columns 0..n_c-1, row slacks n_c..n_c+n_r-1
    order = np.lexsort((c, r))
    r, c, w = r[order], c[order], w[order]
    starts = np.searchsorted(r, rows)
    ends = np.searchsorted(r, rows, side="right")
    adj_obj, adj_w = [], []
    for k in range(n_r):
        objs = np.append(col_id[c[starts[k]:ends[k]]], n_c + k)
        adj_obj.append(objs)
        adj_w.append(np.append(w[starts[k]:ends[k]], slack))
    order = np.lexsort((r, c))
    rc, cc = r[order], c[order]
    starts = np.searchsorted(cc, cols)
    ends = np.searchsorted(cc, cols, side="right")
    for k in range(n_c):
        objs = np.concatenate([[k], n_c + row_id[rc[starts[k]:ends[k]]]])
        adj_obj.append(objs)
        adj_w.append(np.zeros(len(objs)))

    n_persons = n_r + n_c
    if eps_final is None:
        eps_final = 1e-10 * scale / n_persons
    assigned = _auction(adj_obj, adj_w, n_r + n_c, scale / 2.0, eps_final)

    weight_of = {(int(a), int(b)): float(x) for a, b, x in zip(r, c, w)}
    out = []
    for k in range(n_r):
        o = assigned[k]
        if o < n_c:
            i, j = int(rows[k]), int(cols[o])
            out.append((i, j, weight_of[(i, j)]))
    value = float(sum(x for _, _, x in out))
    return Mapping(out), value


def solve_greedy(inst: BipartiteInstance) -> Tuple[Mapping, float]:
    """Heaviest-first greedy matching; negative pairs are never taken."""
    row_used, col_used = set(), set()
    out = []
    for r, c, w in sorted(inst.weighted_pairs, key=lambda t: (-t[2], t[0], t[1])):
        if w < 0:
            break
        if r in row_used or c in col_used:
            continue
        row_used.add(r)
        col_used.add(c)
        out.append((r, c, w))
    out.sort()
    return Mapping(out), float(sum(w for _, _, w in out))
