"""Mappings, scores, accuracy metrics and exhaustive reference solvers."""

from __future__ import annotations

import itertools
import math
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

__all__ = [
    "Mapping",
    "GroundTruth",
    "objective",
    "normalized_scores",
    "precision_recall",
    "compose_ground_truth",
    "brute_force_nap",
    "naive_max_product",
]


class Mapping:
    """One-to-one (possibly partial) correspondence with per-pair scores."""

    def __init__(self, pairs: Iterable[Tuple] = ()):
        out = []
        self.col_of: Dict[int, int] = {}
        self.row_of: Dict[int, int] = {}
        for item in pairs:
            if len(item) == 2:
                i, j = item
                score = 0.0
            else:
                i, j, score = item
            i, j, score = int(i), int(j), float(score)
            if i in self.col_of:
                raise ValueError(f"node {i} of A is mapped twice")
            if j in self.row_of:
                raise ValueError(f"node {j} of B is mapped twice")
            self.col_of[i] = j
            self.row_of[j] = i
            out.append((i, j, score))
        self.pairs: Tuple[Tuple[int, int, float], ...] = tuple(out)

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __eq__(self, other):
        if not isinstance(other, Mapping):
            return NotImplemented
        return self.as_set() == other.as_set()

    def __repr__(self):
        return f"Mapping({sorted(self.as_set())})"

    def as_set(self) -> set:
        return {(i, j) for i, j, _ in self.pairs}

    def sorted(self) -> "Mapping":
        return Mapping(sorted(self.pairs))


class GroundTruth(Mapping):
    """Reference one-to-one correspondence (scores are ignored)."""

    def __init__(self, pairs: Iterable[Tuple] = ()):
        super().__init__((p[0], p[1]) for p in pairs)

    def validate(self, n_a: int, n_b: int) -> "GroundTruth":
        for i, j, _ in self.pairs:
            if not (0 <= i < n_a and 0 <= j < n_b):
                raise ValueError(f"ground-truth pair ({i}, {j}) out of range for {n_a}x{n_b}")
        return self


def _positions(mapping: Mapping, problem) -> np.ndarray:
    if len(mapping) == 0:
        return np.zeros(0, dtype=np.int64)
    a = [i for i, _, _ in mapping.pairs]
    b = [j for _, j, _ in mapping.pairs]
    return problem.candidates.lookup(a, b)


def objective(mapping: Mapping, problem, alpha: float, strict: bool = True) -> Tuple[float, float, float]:
    """``(similarity, squares, alpha * similarity + (1 - alpha) * squares)``.

    With ``strict`` every pair must be a candidate.  Otherwise pairs outside
    the candidate set contribute no similarity, and squares are counted
    directly on the graphs (used to score ground truths).
    """
    pos = _positions(mapping, problem)
    if strict:
        if np.any(pos < 0):
            k = int(np.flatnonzero(pos < 0)[0])
            i, j, _ = mapping.pairs[k]
            raise ValueError(f"pair ({i}, {j}) is not a candidate: mapping is infeasible")
        sim = float(problem.candidates.p[pos].sum())
        chosen = np.zeros(len(problem.candidates), dtype=bool)
        chosen[pos] = True
        sq = problem.squares
        both = chosen[sq.src] & chosen[sq.dst]
        squares = float(sq.weight[both].sum())
    else:
        sim = float(problem.candidates.p[pos[pos >= 0]].sum())
        squares = 0.0
        ga, gb = problem.graph_a, problem.graph_b
        for i, j in ga.edges:
            if i in mapping.col_of and j in mapping.col_of:
                ip, jp = mapping.col_of[i], mapping.col_of[j]
                squares += problem.edge_weight(i, ip, j, jp)
    return sim, squares, alpha * sim + (1.0 - alpha) * squares


def normalized_scores(mapping: Mapping, truth: GroundTruth, problem, alpha: float) -> Dict[str, float]:
    """Each score divided by the same score of the ground truth."""
    mine = objective(mapping, problem, alpha, strict=False)
    ref = objective(truth, problem, alpha, strict=False)
    names = ("similarity", "squares", "objective")
    return {n: (m / r if r != 0 else float("nan")) for n, m, r in zip(names, mine, ref)}


def precision_recall(predicted: Mapping, truth: Mapping) -> Tuple[float, float]:
    pred = predicted.as_set()
    true = truth.as_set()
    hit = len(pred & true)
    precision = hit / len(pred) if pred else 1.0
    recall = hit / len(true) if true else 1.0
    return precision, recall


def compose_ground_truth(chain: Sequence[Mapping]) -> GroundTruth:
    """Compose version-to-version mappings ``M_1 -> M_2 -> ... -> M_n``."""
    if not chain:
        return GroundTruth()
    current = {i: j for i, j, _ in chain[0].pairs}
    for link in chain[1:]:
        nxt = link.col_of
        current = {i: nxt[j] for i, j in current.items() if j in nxt}
    return GroundTruth(sorted(current.items()))


def _enumerate_matchings(rows: List[np.ndarray], cand_col: np.ndarray, n_cols: int, limit: int) -> np.ndarray:
    """Every one-to-one choice of at most one candidate per row, as a (count, len(rows)) array.

    Entry -1 means the row is left unmatched.  Order is depth-first with
    "unmatched" tried first, i.e. lexicographic in the per-row options.
    """
    chosen = np.full((1, len(rows)), -1, dtype=np.int64)
    used = np.zeros((1, n_cols), dtype=bool)
    for r, opts in enumerate(rows):
        allowed = np.ones((len(chosen), len(opts) + 1), dtype=bool)
        allowed[:, 1:] = ~used[:, cand_col[opts]]
        parent, option = np.nonzero(allowed)
        if len(parent) > limit:
            raise ValueError(f"more than {limit} feasible mappings; instance too large for brute force")
        chosen = chosen[parent]
        used = used[parent]
        take = option > 0
        picked = opts[option[take] - 1]
        chosen[take, r] = picked
        used[np.flatnonzero(take), cand_col[picked]] = True
    return chosen


def brute_force_nap(problem, alpha: float, limit: int = 200_000) -> Tuple[Mapping, float]:
    """Exact optimum by enumerating every one-to-one mapping on the candidates.

    Raises ``ValueError`` when more than ``limit`` mappings would be enumerated.
    Ties go to the first mapping in enumeration order.
    """
    cands = problem.candidates
    rows = [cands.row_index(i) for i in range(cands.n_a) if len(cands.row_index(i))]
    chosen = _enumerate_matchings(rows, cands.b, cands.n_b, limit)
    x = np.zeros((len(chosen), len(cands) + 1), dtype=bool)
    x[np.arange(len(chosen))[:, None], chosen] = True  # -1 lands in the spare last column
    x = x[:, :-1]
    sq = problem.squares
    values = alpha * (x @ cands.p) + (1.0 - alpha) * ((x[:, sq.src] & x[:, sq.dst]) @ sq.weight)
    best = int(np.argmax(values))
    picks = chosen[best][chosen[best] >= 0]
    pairs = [(int(cands.a[c]), int(cands.b[c]), float(cands.p[c])) for c in picks]
    return Mapping(sorted(pairs)), float(values[best])


def _factor_to_variable(members, table, incoming):
    """Max-product message from a factor to each of its variables.

    ``table(x)`` evaluates the factor on a 0/1 tuple; ``incoming[k]`` is the
    2-vector message from member ``k``.  Returns a list of 2-vectors.
    """
    out = []
    for k in range(len(members)):
        msg = np.zeros(2)
        for x in itertools.product((0, 1), repeat=len(members)):
            val = table(x)
            for u in range(len(members)):
                if u != k:
                    val *= incoming[u][x[u]]
            msg[x[k]] = max(msg[x[k]], val)
        out.append(msg)
    return out


def naive_max_product(problem, alpha: float, iterations: int, max_candidates: int = 6) -> List[Dict[str, np.ndarray]]:
    """Unsimplified max-product on the alignment factor graph (test oracle).

    Messages are explicit 2-vectors over ``{0, 1}``; factors are evaluated by
    enumeration.  Starts from uniform messages and runs synchronous sweeps.
    Returns, per sweep ``t``, log-ratios ``log(m(1) / m(0))`` of:

    ``f``, ``g``        row / column constraint -> variable, at ``t``
    ``pair``            pairwise factor -> variable, one per half-edge, at ``t``
    ``x_f``, ``x_g``    variable -> row / column constraint, at ``t + 1``
    ``x_pair``          variable -> pairwise factor, per half-edge, at ``t + 1``
    ``marginal``        max-marginal at ``t``
    """
    cands = problem.candidates
    n = len(cands)
    if n > max_candidates:
        raise ValueError(f"{n} candidates exceeds the oracle limit of {max_candidates}")
    sq = problem.squares
    n_sq = len(sq)

    # factors: (kind, members, table)
    factors = []
    for c in range(n):
        e = math.exp(alpha * cands.p[c])
        factors.append(("unary", (c,), lambda x, e=e: e if x[0] else 1.0))
    row_factor = {}
    for i in np.unique(cands.a):
        members = tuple(int(c) for c in range(n) if cands.a[c] == i)
        row_factor[int(i)] = len(factors)
        factors.append(("f", members, lambda x: 1.0 if sum(x) <= 1 else 0.0))
    col_factor = {}
    for j in np.unique(cands.b):
        members = tuple(int(c) for c in range(n) if cands.b[c] == j)
        col_factor[int(j)] = len(factors)
        factors.append(("g", members, lambda x: 1.0 if sum(x) <= 1 else 0.0))
    pair_factor = []
    for k in range(n_sq):
        e = math.exp((1.0 - alpha) * sq.weight[k])
        pair_factor.append(len(factors))
        factors.append(("pair", (int(sq.src[k]), int(sq.dst[k])), lambda x, e=e: e if x[0] and x[1] else 1.0))

    ones = np.ones(2)
    mu = {(fi, v): ones.copy() for fi, (_, members, _) in enumerate(factors) for v in members}
    lr = lambda m: float(math.log(m[1] / m[0]))

    trace = []
    for _ in range(iterations):
        lam = {}
        for fi, (_, members, table) in enumerate(factors):
            msgs = _factor_to_variable(members, table, [mu[(fi, v)] for v in members])
            for v, m in zip(members, msgs):
                lam[(fi, v)] = m / m.max()
        by_var: Dict[int, List[int]] = {v: [] for v in range(n)}
        for fi, (_, members, _) in enumerate(factors):
            for v in members:
                by_var[v].append(fi)
        new_mu = {}
        for (fi, v) in mu:
            m = ones.copy()
            for gi in by_var[v]:
                if gi != fi:
                    m = m * lam[(gi, v)]
            new_mu[(fi, v)] = m / m.max()
        marginal = np.zeros(n)
        for v in range(n):
            m = ones.copy()
            for gi in by_var[v]:
                m = m * lam[(gi, v)]
            marginal[v] = lr(m)
        rec = {
            "f": np.array([lr(lam[(row_factor[int(cands.a[c])], c)]) for c in range(n)]),
            "g": np.array([lr(lam[(col_factor[int(cands.b[c])], c)]) for c in range(n)]),
            "pair": np.array([lr(lam[(pair_factor[k], int(sq.src[k]))]) for k in range(n_sq)]
                             + [lr(lam[(pair_factor[k], int(sq.dst[k]))]) for k in range(n_sq)]),
            "x_f": np.array([lr(new_mu[(row_factor[int(cands.a[c])], c)]) for c in range(n)]),
            "x_g": np.array([lr(new_mu[(col_factor[int(cands.b[c])], c)]) for c in range(n)]),
            "x_pair": np.array([lr(new_mu[(pair_factor[k], int(sq.src[k]))]) for k in range(n_sq)]
                               + [lr(new_mu[(pair_factor[k], int(sq.dst[k]))]) for k in range(n_sq)]),
            "marginal": marginal,
        }
        trace.append(rec)
        mu = new_mu
    return trace
