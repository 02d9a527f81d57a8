"""A few thousand nodes per side, a few dozen thousand candidates.

Builds a planted instance (B is a relabeled A), then times square
construction and the solve, serially and with worker threads.  The two
runs must agree exactly.
"""

import time

import numpy as np

from bpalign import Graph, SolverConfig, build_problem, solve

rng = np.random.default_rng(1)
n, m, per_node = 4000, 16000, 15
pairs = rng.integers(0, n, size=(2 * m, 2))
pairs = np.unique(pairs[pairs[:, 0] != pairs[:, 1]], axis=0)
edges_a = pairs[rng.permutation(len(pairs))[:m]]
perm = rng.permutation(n)
edges_b = perm[edges_a]

cands = []
for i in range(n):
    js = set(rng.choice(n, per_node - 1, replace=False).tolist()) | {int(perm[i])}
    cands.extend((i, int(j), float(rng.random())) for j in js)

t = time.perf_counter()
problem = build_problem(Graph(n, edges_a.tolist()), Graph(n, edges_b.tolist()), cands)
print(f"built {len(problem.candidates)} candidates and {len(problem.squares)} square entries "
      f"in {time.perf_counter() - t:.2f}s")

results = {}
for workers in (1, 4):
    t = time.perf_counter()
    results[workers] = solve(problem, SolverConfig(alpha=0.5, workers=workers))
    r = results[workers]
    hits = sum(int(perm[i]) == j for i, j, _ in r.mapping)
    print(f"workers={workers}: {time.perf_counter() - t:.2f}s, {r.iterations_used} sweeps, "
          f"{hits}/{n} planted pairs, objective {r.objective:.2f}")
print("identical results:", results[1].mapping.pairs == results[4].mapping.pairs)
