import itertools

import numpy as np

from bpalign import Graph, build_problem


def random_graph(n, density, rng):
    edges = [(u, v) for u in range(n) for v in range(n) if u != v and rng.random() < density]
    return Graph(n, edges)


def random_problem(rng, n_a=6, n_b=6, density=0.3, cand_prob=1.0, alpha_p=True):
    ga = random_graph(n_a, density, rng)
    gb = random_graph(n_b, density, rng)
    raw = [(i, j, float(rng.random())) for i in range(n_a) for j in range(n_b) if rng.random() < cand_prob]
    return build_problem(ga, gb, raw)


def isomorphic_instance(rng, n=20, m=60):
    """A random digraph, a relabeled copy, all n*n candidates with equal weight, and the relabeling."""
    allp = [(u, v) for u in range(n) for v in range(n) if u != v]
    idx = rng.choice(len(allp), m, replace=False)
    ea = [allp[k] for k in idx]
    perm = rng.permutation(n)
    eb = [(int(perm[u]), int(perm[v])) for u, v in ea]
    raw = [(i, j, 1.0) for i in range(n) for j in range(n)]
    return build_problem(Graph(n, ea), Graph(n, eb), raw), perm


def brute_force_assignment(w):
    """Best value over all (partial) one-to-one assignments of a dense weight matrix with NaN = no pair."""
    rows, cols = w.shape
    best = 0.0
    for k in range(0, min(rows, cols) + 1):
        for rs in itertools.combinations(range(rows), k):
            for cs in itertools.permutations(range(cols), k):
                vals = w[list(rs), list(cs)]
                if np.isnan(vals).any():
                    continue
                best = max(best, float(vals.sum()))
    return best


def permutation_optimum(w):
    """Best full permutation value of a square dense matrix."""
    n = w.shape[0]
    return max(float(w[np.arange(n), list(p)].sum()) for p in itertools.permutations(range(n)))
