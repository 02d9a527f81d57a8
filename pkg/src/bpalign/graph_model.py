"""Problem instances for sparse network alignment.

An instance is made of two directed graphs ``A`` and ``B``, a sparse set of
candidate correspondences ``(i, i')`` carrying node similarities ``p``, and
the square index: the nonzero entries of the quadratic term ``Q`` restricted to
the candidate support.  The objective being maximised is::

    alpha * x.p + (1 - alpha) * x.Q.x

over one-to-one (possibly partial) assignments ``x``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

__all__ = [
    "CandidateError",
    "Graph",
    "CandidateSet",
    "SquareIndex",
    "SolverConfig",
    "Problem",
    "build_candidates",
    "compute_squares",
    "build_problem",
]

EdgeWeights = Union[Mapping[Tuple[int, int, int, int], float], Callable[[int, int, int, int], float]]


class CandidateError(ValueError):
    """Invalid candidate triple. ``index`` is the position in the raw input."""

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


def _csr_expand(ptr: np.ndarray, owners: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """For each owner, enumerate the slots ``ptr[o]:ptr[o+1]``.

    Returns ``(which, slot)`` where ``which`` indexes into ``owners``.
    """
    counts = ptr[owners + 1] - ptr[owners]
    which = np.repeat(np.arange(len(owners)), counts)
    if len(which) == 0:
        return which, np.zeros(0, dtype=np.int64)
    offsets = np.cumsum(counts) - counts
    slot = ptr[owners][which] + (np.arange(len(which)) - offsets[which])
    return which, slot


def _group_index(keys: np.ndarray, n_groups: int):
    order = np.argsort(keys, kind="stable")
    counts = np.bincount(keys, minlength=n_groups)
    ptr = np.zeros(n_groups + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    return order, ptr


class Graph:
    """Directed simple graph over nodes ``0 .. node_count - 1``."""

    def __init__(self, node_count: int, edges: Iterable[Tuple[int, int]] = ()):
        node_count = int(node_count)
        if node_count < 0:
            raise ValueError("node_count must be non-negative")
        arr = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if len(arr):
            if arr.min() < 0 or arr.max() >= node_count:
                bad = int(np.flatnonzero((arr < 0).any(1) | (arr >= node_count).any(1))[0])
                raise ValueError(f"edge #{bad} {tuple(arr[bad])} out of range for {node_count} nodes")
            loops = np.flatnonzero(arr[:, 0] == arr[:, 1])
            if len(loops):
                raise ValueError(f"edge #{loops[0]} {tuple(arr[loops[0]])} is a self-loop")
            keys = arr[:, 0] * node_count + arr[:, 1]
            uniq, first = np.unique(keys, return_index=True)
            if len(uniq) != len(keys):
                dup = sorted(set(range(len(keys))) - set(first.tolist()))[0]
                raise ValueError(f"edge #{dup} {tuple(arr[dup])} is duplicated")
            # set semantics: canonical (src, dst) order
            arr = np.stack([uniq // node_count, uniq % node_count], axis=1)
        self.node_count = node_count
        self.src = arr[:, 0].copy()
        self.dst = arr[:, 1].copy()
        order, self.out_ptr = _group_index(self.src, node_count)
        self.out_dst = self.dst[order]

    @property
    def edges(self) -> list:
        return list(zip(self.src.tolist(), self.dst.tolist()))

    @property
    def edge_count(self) -> int:
        return len(self.src)

    def has_edge(self, u: int, v: int) -> bool:
        lo, hi = self.out_ptr[u], self.out_ptr[u + 1]
        return bool(np.any(self.out_dst[lo:hi] == v))

    def edge_set(self) -> set:
        return set(self.edges)

    def __repr__(self):
        return f"Graph(node_count={self.node_count}, edges={self.edge_count})"


class CandidateSet:
    """Sparse list of allowed correspondences ``(i, i')`` with weights ``p``.

    Candidates keep their input order; ``row_index(i)`` and ``col_index(i')``
    return candidate positions in increasing order.
    """

    def __init__(self, a, b, p, sigma, n_a: int, n_b: int):
        self.a = np.asarray(a, dtype=np.int64)
        self.b = np.asarray(b, dtype=np.int64)
        self.p = np.asarray(p, dtype=np.float64)
        self.sigma = np.asarray(sigma, dtype=np.float64)
        self.n_a = int(n_a)
        self.n_b = int(n_b)
        self.row_order, self.row_ptr = _group_index(self.a, self.n_a)
        self.col_order, self.col_ptr = _group_index(self.b, self.n_b)
        self._keys = self.a * self.n_b + self.b
        self._key_order = np.argsort(self._keys, kind="stable")
        self._sorted_keys = self._keys[self._key_order]

    def __len__(self):
        return len(self.a)

    @property
    def pairs(self) -> list:
        return list(zip(self.a.tolist(), self.b.tolist(), self.p.tolist()))

    def row_index(self, i: int) -> np.ndarray:
        return self.row_order[self.row_ptr[i]:self.row_ptr[i + 1]]

    def col_index(self, j: int) -> np.ndarray:
        return self.col_order[self.col_ptr[j]:self.col_ptr[j + 1]]

    def lookup(self, a, b) -> np.ndarray:
        """Candidate positions of the pairs ``(a, b)``; -1 where absent."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        keys = a * self.n_b + b
        if len(self._sorted_keys) == 0:
            return np.full(keys.shape, -1, dtype=np.int64)
        loc = np.searchsorted(self._sorted_keys, keys)
        loc = np.minimum(loc, len(self._sorted_keys) - 1)
        hit = self._sorted_keys[loc] == keys
        return np.where(hit, self._key_order[loc], -1)

    def position(self, i: int, j: int) -> int:
        return int(self.lookup([i], [j])[0])

    def __repr__(self):
        return f"CandidateSet({len(self)} candidates, {self.n_a}x{self.n_b})"


def build_candidates(raw: Iterable[Tuple[int, int, float]], n_a: int, n_b: int,
                     zeta: float = 0.0) -> CandidateSet:
    """Validate raw ``(i, i', sigma_v)`` triples and build a :class:`CandidateSet`.

    Triples with ``sigma_v == 0`` are infeasible matches and are dropped.
    The stored weight is ``sigma_v - zeta``.
    """
    if zeta < 0:
        raise ValueError("zeta must be non-negative")
    a, b, s = [], [], []
    seen = set()
    for k, item in enumerate(raw):
        try:
            i, j, sigma = item
            i, j, sigma = int(i), int(j), float(sigma)
        except (TypeError, ValueError):
            raise CandidateError(f"candidate #{k}: malformed entry {item!r}", k) from None
        if not 0 <= i < n_a:
            raise CandidateError(f"candidate #{k} ({i}, {j}): node {i} out of range for graph A ({n_a} nodes)", k)
        if not 0 <= j < n_b:
            raise CandidateError(f"candidate #{k} ({i}, {j}): node {j} out of range for graph B ({n_b} nodes)", k)
        if not np.isfinite(sigma) or sigma < 0:
            raise CandidateError(f"candidate #{k} ({i}, {j}): similarity {sigma} must be finite and >= 0", k)
        if (i, j) in seen:
            raise CandidateError(f"candidate #{k} ({i}, {j}) is duplicated", k)
        seen.add((i, j))
        if sigma == 0:
            continue
        a.append(i)
        b.append(j)
        s.append(sigma)
    s = np.asarray(s, dtype=np.float64)
    return CandidateSet(a, b, s - zeta, s, n_a, n_b)


class SquareIndex:
    """Nonzero entries of ``Q`` on the candidate support.

    Entry ``k`` is the ordered pair ``(src[k], dst[k])`` of candidate
    positions ``c = (i, i')`` and ``d = (j, j')`` with ``(i, j)`` in ``E_A``
    and ``(i', j')`` in ``E_B``; its weight is ``weight[k] > 0``.

    Each entry is a pairwise factor touching two candidates, so it is also
    listed as two half-edges: half-edge ``k`` is received by ``src[k]`` and
    half-edge ``K + k`` by ``dst[k]``.  ``node``/``other``/``half_weight``
    describe half-edges; ``incidence`` is the sparse ``(n_candidates, 2K)``
    0/1 matrix summing half-edge values into their receiving candidate.
    """

    def __init__(self, src, dst, weight, n_candidates: int):
        import scipy.sparse as sp

        self.src = np.asarray(src, dtype=np.int64)
        self.dst = np.asarray(dst, dtype=np.int64)
        self.weight = np.asarray(weight, dtype=np.float64)
        self.n_candidates = int(n_candidates)
        k = len(self.src)
        self.node = np.concatenate([self.src, self.dst])
        self.other = np.concatenate([self.dst, self.src])
        self.half_weight = np.concatenate([self.weight, self.weight])
        self.mate = np.concatenate([np.arange(k, 2 * k), np.arange(k)])
        order, ptr = _group_index(self.node, self.n_candidates)
        self.incidence = sp.csr_matrix(
            (np.ones(2 * k), order, ptr), shape=(self.n_candidates, 2 * k))

    def __len__(self):
        return len(self.src)

    def entries(self) -> list:
        return list(zip(self.src.tolist(), self.dst.tolist(), self.weight.tolist()))

    def partners(self, c: int) -> list:
        """``(d, w)`` for every half-edge received by candidate ``c``."""
        row = self.incidence.indices[self.incidence.indptr[c]:self.incidence.indptr[c + 1]]
        return [(int(self.other[h]), float(self.half_weight[h])) for h in row]

    def __repr__(self):
        return f"SquareIndex({len(self)} entries)"


def compute_squares(graph_a: Graph, graph_b: Graph, cands: CandidateSet,
                    sigma_e: Optional[EdgeWeights] = None,
                    default_weight: float = 1.0) -> SquareIndex:
    """Enumerate squares ``(c, d)`` induced by ``E_A x E_B`` on the candidates.

    ``sigma_e`` is either a dict keyed by ``(i, i', j, j')`` overriding the
    default weight, or a callable returning the weight. Zero weights drop the
    entry. Entries are sorted by ``(src, dst)`` so the index does not depend
    on edge or label order.
    """
    # A edge (i, j) x candidate c=(i, i')
    which, slot = _csr_expand(cands.row_ptr, graph_a.src)
    c = cands.row_order[slot]
    j = graph_a.dst[which]
    # x B edge (i', j')
    which2, slot2 = _csr_expand(graph_b.out_ptr, cands.b[c])
    c = c[which2]
    j = j[which2]
    jp = graph_b.out_dst[slot2]
    d = cands.lookup(j, jp)
    keep = d >= 0
    c, d = c[keep], d[keep]

    w = np.full(len(c), float(default_weight))
    if sigma_e is not None:
        ca, cb, da, db = cands.a[c], cands.b[c], cands.a[d], cands.b[d]
        if callable(sigma_e):
            for k in range(len(c)):
                w[k] = sigma_e(int(ca[k]), int(cb[k]), int(da[k]), int(db[k]))
        else:
            for key, value in sigma_e.items():
                i, ip, jj, jjp = key
                if not (graph_a.has_edge(i, jj) and graph_b.has_edge(ip, jjp)):
                    raise ValueError(f"square weight {key}: ({i}, {jj}) and ({ip}, {jjp}) are not both edges")
            for k in range(len(c)):
                w[k] = sigma_e.get((int(ca[k]), int(cb[k]), int(da[k]), int(db[k])), default_weight)
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("square weights must be finite and non-negative")
    keep = w > 0
    c, d, w = c[keep], d[keep], w[keep]
    order = np.lexsort((d, c))
    return SquareIndex(c[order], d[order], w[order], len(cands))


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of the belief-propagation solver.

    ``epsilon_growth == 1`` disables the adaptive relaxation. ``fill`` is
    ``"complete"`` (final matching covers as many unmatched nodes as possible)
    or ``"positive"`` (only pairs with a positive log-ratio are added).
    ``tie_break`` decides who escapes the epsilon penalty when several
    candidates share a row or column maximum: ``"shared"`` exempts all of
    them, ``"first"`` only the first in candidate order (auction style).
    """

    alpha: float = 0.75
    epsilon0: float = 0.5
    max_iterations: int = 1000
    patience: int = 10
    epsilon_growth: float = 2.0
    message_tolerance: float = 1e-6
    damping: float = 0.0
    zeta: float = 0.0
    fill: str = "complete"
    tie_break: str = "shared"
    workers: int = 1

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not self.epsilon0 > 0:
            raise ValueError(f"epsilon0 must be positive, got {self.epsilon0}")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ValueError(f"max_iterations must be a positive integer, got {self.max_iterations}")
        if int(self.patience) != self.patience or self.patience < 1:
            raise ValueError(f"patience must be a positive integer, got {self.patience}")
        if not self.epsilon_growth >= 1.0:
            raise ValueError(f"epsilon_growth must be >= 1, got {self.epsilon_growth}")
        if not self.message_tolerance > 0:
            raise ValueError(f"message_tolerance must be positive, got {self.message_tolerance}")
        if not 0.0 <= self.damping < 1.0:
            raise ValueError(f"damping must lie in [0, 1), got {self.damping}")
        if not self.zeta >= 0:
            raise ValueError(f"zeta must be non-negative, got {self.zeta}")
        if self.fill not in ("complete", "positive"):
            raise ValueError(f"fill must be 'complete' or 'positive', got {self.fill!r}")
        if self.tie_break not in ("shared", "first"):
            raise ValueError(f"tie_break must be 'shared' or 'first', got {self.tie_break!r}")
        if int(self.workers) != self.workers or self.workers < 1:
            raise ValueError(f"workers must be a positive integer, got {self.workers}")


@dataclass
class Problem:
    graph_a: Graph
    graph_b: Graph
    candidates: CandidateSet
    squares: SquareIndex
    sigma_e: Optional[EdgeWeights] = field(default=None, repr=False)
    default_weight: float = 1.0

    def edge_weight(self, i: int, ip: int, j: int, jp: int) -> float:
        """``Q`` entry for an ordered pair of correspondences (0 if not a square)."""
        if not (self.graph_a.has_edge(i, j) and self.graph_b.has_edge(ip, jp)):
            return 0.0
        if self.sigma_e is None:
            return self.default_weight
        if callable(self.sigma_e):
            return float(self.sigma_e(i, ip, j, jp))
        return float(self.sigma_e.get((i, ip, j, jp), self.default_weight))


def build_problem(graph_a: Graph, graph_b: Graph, raw: Sequence[Tuple[int, int, float]],
                  zeta: float = 0.0, sigma_e: Optional[EdgeWeights] = None,
                  default_weight: float = 1.0) -> Problem:
    cands = build_candidates(raw, graph_a.node_count, graph_b.node_count, zeta=zeta)
    squares = compute_squares(graph_a, graph_b, cands, sigma_e, default_weight)
    return Problem(graph_a, graph_b, cands, squares, sigma_e, default_weight)
