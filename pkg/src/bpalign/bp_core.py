"""Max-product belief propagation for network alignment.

All messages are stored as log-ratios ``log(m(1) / m(0))`` on the binary
variables ``x_c`` (one per candidate ``c = (i, i')``):

* ``x_f[c]``, ``x_g[c]``: variable -> row constraint ``f_i`` / column constraint ``g_i'``
* ``f[c]``, ``g[c]``: row / column constraint -> variable
* ``x_pair[h]``, ``pair[h]``: variable <-> pairwise factor, per half-edge ``h``
  of the square index (``h`` is received by candidate ``squares.node[h]``)

One sweep computes the factor messages from the current variable messages and
then the next variable messages (synchronous updates).  Row and column
messages carry the epsilon-complementary-slackness penalty: a candidate that
is not the maximum of its row loses an extra ``epsilon``.  The relaxation is
adaptive: it grows after ``patience`` sweeps without improving the best
rounded objective and falls back to ``epsilon0`` as soon as it improves.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .evaluation import Mapping
from .graph_model import Problem, SolverConfig
from .matching import BipartiteInstance, solve_auction

__all__ = [
    "MessageState",
    "SolveResult",
    "init_messages",
    "factor_messages",
    "variable_messages",
    "sweep",
    "max_marginals",
    "max_marginal_log_ratio",
    "round_assignment",
    "adapt_epsilon",
    "solve",
]

logger = logging.getLogger(__name__)


class _Groups:
    """Candidates grouped by a key (row or column), in sorted order."""

    def __init__(self, keys: np.ndarray):
        n = len(keys)
        self.perm = np.argsort(keys, kind="stable")
        sk = keys[self.perm]
        if n:
            self.starts = np.flatnonzero(np.r_[True, sk[1:] != sk[:-1]])
        else:
            self.starts = np.zeros(0, dtype=np.int64)
        sizes = np.diff(np.r_[self.starts, n])
        self.gid = np.repeat(np.arange(len(self.starts)), sizes)
        self.n = n

    def chunks(self, workers: int):
        """Split into at most ``workers`` slices aligned on group boundaries."""
        ng = len(self.starts)
        cuts = np.unique(np.linspace(0, ng, min(workers, max(ng, 1)) + 1).astype(np.int64))
        out = []
        for g0, g1 in zip(cuts[:-1], cuts[1:]):
            lo = self.starts[g0]
            hi = self.starts[g1] if g1 < ng else self.n
            out.append((lo, hi, self.starts[g0:g1] - lo, self.gid[lo:hi] - g0))
        return out


def _excluded_max_block(v, starts, gid):
    gmax = np.maximum.reduceat(v, starts)
    gm = gmax[gid]
    idx = np.arange(len(v))
    first = np.minimum.reduceat(np.where(v == gm, idx, len(v)), starts)
    v2 = v.copy()
    v2[first] = -np.inf
    second = np.maximum.reduceat(v2, starts)
    excl = gm.copy()
    excl[first] = second
    leader = np.zeros(len(v), dtype=bool)
    leader[first] = True
    return excl, leader


class _Layout:
    def __init__(self, problem: Problem, workers: int = 1):
        cands = problem.candidates
        self.rows = _Groups(cands.a)
        self.cols = _Groups(cands.b)
        self.workers = workers
        self.row_chunks = self.rows.chunks(workers)
        self.col_chunks = self.cols.chunks(workers)
        inc = problem.squares.incidence
        n = inc.shape[0]
        cuts = np.unique(np.linspace(0, n, min(workers, max(n, 1)) + 1).astype(np.int64))
        self.inc_chunks = [(lo, hi, inc[lo:hi]) for lo, hi in zip(cuts[:-1], cuts[1:])]
        self.pool: Optional[ThreadPoolExecutor] = None

    def map(self, fn, items):
        if self.pool is None or len(items) <= 1:
            return [fn(it) for it in items]
        return list(self.pool.map(fn, items))

    def excluded_max(self, values: np.ndarray, which: str):
        """Per candidate: max of its group without itself, and the leader flag.

        An empty competitor set gives ``-inf``.  The leader of a group is the
        first candidate (in candidate order) attaining the group maximum.
        """
        groups = self.rows if which == "row" else self.cols
        chunks = self.row_chunks if which == "row" else self.col_chunks
        v = values[groups.perm]
        parts = self.map(lambda ch: _excluded_max_block(v[ch[0]:ch[1]], ch[2], ch[3]), chunks)
        excl = np.empty(len(values))
        leader = np.zeros(len(values), dtype=bool)
        if parts:
            excl[groups.perm] = np.concatenate([p[0] for p in parts])
            leader[groups.perm] = np.concatenate([p[1] for p in parts])
        return excl, leader

    def square_sum(self, half: np.ndarray) -> np.ndarray:
        parts = self.map(lambda ch: ch[2] @ half, self.inc_chunks)
        if not parts:
            return np.zeros(0)
        return np.concatenate(parts)


@dataclass
class MessageState:
    x_f: np.ndarray
    x_g: np.ndarray
    x_pair: np.ndarray
    f: np.ndarray
    g: np.ndarray
    pair: np.ndarray
    epsilon: float
    t: int = 0
    best_objective: float = -np.inf
    stall: int = 0
    layout: Optional[_Layout] = field(default=None, repr=False)

    def variable_messages(self) -> np.ndarray:
        return np.concatenate([self.x_f, self.x_g, self.x_pair])


@dataclass
class SolveResult:
    mapping: Mapping
    objective: float
    similarity: float
    squares: float
    iterations_used: int
    converged: bool
    history: List[Tuple[float, float]]
    rounded_objective: float = 0.0


def init_messages(problem: Problem, config: SolverConfig) -> MessageState:
    n = len(problem.candidates)
    h = 2 * len(problem.squares)
    z = np.zeros
    return MessageState(z(n), z(n), z(h), z(n), z(n), z(h), float(config.epsilon0),
                        layout=_Layout(problem, config.workers))


def _layout(state: MessageState, problem: Problem) -> _Layout:
    if state.layout is None:
        state.layout = _Layout(problem)
    return state.layout


def factor_messages(state: MessageState, problem: Problem, config: SolverConfig) -> MessageState:
    """Constraint and pairwise factor -> variable messages, in place."""
    lay = _layout(state, problem)
    eps = state.epsilon
    shared = config.tie_break == "shared"
    out = []
    for values, which in ((state.x_f, "row"), (state.x_g, "col")):
        excl, leader = lay.excluded_max(values, which)
        # a candidate at the maximum has no larger competitor: excl <= value
        exempt = values >= excl if shared else leader
        out.append(-np.maximum(excl, 0.0) - eps * ~exempt)
    state.f, state.g = out
    sq = problem.squares
    incoming = state.x_pair[sq.mate]
    state.pair = np.maximum((1.0 - config.alpha) * sq.half_weight + incoming, 0.0) - np.maximum(incoming, 0.0)
    return state


def variable_messages(state: MessageState, problem: Problem, config: SolverConfig) -> MessageState:
    """Variable -> factor messages for the next sweep, in place."""
    lay = _layout(state, problem)
    unary = config.alpha * problem.candidates.p
    total = lay.square_sum(state.pair)
    base = unary + total
    x_f = base + state.g
    x_g = base + state.f
    node = problem.squares.node
    x_pair = (base + state.f + state.g)[node] - state.pair
    gamma = config.damping
    if gamma > 0:
        x_f = gamma * state.x_f + (1.0 - gamma) * x_f
        x_g = gamma * state.x_g + (1.0 - gamma) * x_g
        x_pair = gamma * state.x_pair + (1.0 - gamma) * x_pair
    state.x_f, state.x_g, state.x_pair = x_f, x_g, x_pair
    state.t += 1
    return state


def max_marginals(state: MessageState, problem: Problem, config: SolverConfig) -> np.ndarray:
    """Max-marginal log-ratio of every candidate from the current factor messages."""
    lay = _layout(state, problem)
    return config.alpha * problem.candidates.p + state.f + state.g + lay.square_sum(state.pair)


def max_marginal_log_ratio(state: MessageState, problem: Problem, config: SolverConfig, c: int) -> float:
    return float(max_marginals(state, problem, config)[c])


def sweep(state: MessageState, problem: Problem, config: SolverConfig) -> np.ndarray:
    """One synchronous iteration; returns the max-marginals it produced."""
    factor_messages(state, problem, config)
    mm = max_marginals(state, problem, config)
    variable_messages(state, problem, config)
    return mm


def _select(mm: np.ndarray, lay: _Layout) -> np.ndarray:
    """Candidates with a positive log-ratio that strictly dominate their row and column."""
    if len(mm) == 0:
        return np.zeros(0, dtype=bool)
    row_excl, _ = lay.excluded_max(mm, "row")
    col_excl, _ = lay.excluded_max(mm, "col")
    return (mm > 0) & (mm > row_excl) & (mm > col_excl)


def round_assignment(state: MessageState, problem: Problem, config: SolverConfig,
                     mm: Optional[np.ndarray] = None) -> Mapping:
    if mm is None:
        mm = max_marginals(state, problem, config)
    chosen = np.flatnonzero(_select(mm, _layout(state, problem)))
    cands = problem.candidates
    return Mapping((int(cands.a[c]), int(cands.b[c]), float(mm[c])) for c in chosen)


def adapt_epsilon(state: MessageState, objective: float, config: SolverConfig) -> bool:
    """Update the relaxation after a sweep whose rounded objective is ``objective``.

    Returns True when the best objective improved (epsilon back to
    ``epsilon0``).  After ``patience`` consecutive sweeps without improvement
    epsilon is multiplied by ``epsilon_growth`` and the count restarts.
    """
    if objective > state.best_objective:
        state.best_objective = objective
        state.stall = 0
        state.epsilon = float(config.epsilon0)
        return True
    state.stall += 1
    if state.stall >= config.patience:
        state.epsilon *= config.epsilon_growth
        state.stall = 0
    return False


def _objective_of(chosen: np.ndarray, problem: Problem, alpha: float) -> Tuple[float, float, float]:
    sim = float(problem.candidates.p[chosen].sum())
    sq = problem.squares
    squares = float(sq.weight[chosen[sq.src] & chosen[sq.dst]].sum())
    return sim, squares, alpha * sim + (1.0 - alpha) * squares


def _fill_in(chosen: np.ndarray, mm: np.ndarray, problem: Problem, config: SolverConfig) -> np.ndarray:
    cands = problem.candidates
    row_used = np.zeros(cands.n_a, dtype=bool)
    col_used = np.zeros(cands.n_b, dtype=bool)
    row_used[cands.a[chosen]] = True
    col_used[cands.b[chosen]] = True
    free = ~row_used[cands.a] & ~col_used[cands.b]
    if config.fill == "positive":
        free &= mm > 0
    pos = np.flatnonzero(free)
    if len(pos) == 0:
        return chosen
    inst = BipartiteInstance(cands.n_a, cands.n_b,
                             tuple(zip(cands.a[pos].tolist(), cands.b[pos].tolist(), mm[pos].tolist())))
    extra, _ = solve_auction(inst, force_complete=config.fill == "complete")
    out = chosen.copy()
    if len(extra):
        out[cands.lookup([i for i, _, _ in extra], [j for _, j, _ in extra])] = True
    return out


def solve(problem: Problem, config: Optional[SolverConfig] = None) -> SolveResult:
    """Run belief propagation, keep the best rounded mapping, then complete it by matching."""
    config = config or SolverConfig()
    n = len(problem.candidates)
    if n == 0:
        return SolveResult(Mapping(), 0.0, 0.0, 0.0, 0, True, [])

    state = init_messages(problem, config)
    lay = state.layout
    if config.workers > 1:
        lay.pool = ThreadPoolExecutor(max_workers=config.workers)
    history: List[Tuple[float, float]] = []
    best_chosen = np.zeros(n, dtype=bool)
    best_mm = np.zeros(n)
    converged = False
    try:
        for _ in range(config.max_iterations):
            before = state.variable_messages()
            eps_used = state.epsilon
            mm = sweep(state, problem, config)
            chosen = _select(mm, lay)
            obj = _objective_of(chosen, problem, config.alpha)[2]
            history.append((obj, eps_used))
            if adapt_epsilon(state, obj, config):
                best_chosen, best_mm = chosen, mm
            delta = np.max(np.abs(state.variable_messages() - before))
            if delta < config.message_tolerance:
                converged = True
                break
    finally:
        if lay.pool is not None:
            lay.pool.shutdown()
            lay.pool = None
    logger.debug("bp stopped after %d sweeps (converged=%s, best=%g)", state.t, converged, state.best_objective)

    final = _fill_in(best_chosen, best_mm, problem, config)
    sim, squares, obj = _objective_of(final, problem, config.alpha)
    cands = problem.candidates
    pos = np.flatnonzero(final)
    mapping = Mapping((int(cands.a[c]), int(cands.b[c]), float(best_mm[c])) for c in pos).sorted()
    return SolveResult(mapping, obj, sim, squares, state.t, converged, history,
                       rounded_objective=float(state.best_objective))
