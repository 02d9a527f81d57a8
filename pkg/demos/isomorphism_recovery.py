"""Recover a hidden relabeling from structure alone.

B is a shuffled copy of a random directed graph A.  Every node of A may map
to every node of B with the same similarity, so at alpha = 0 only the edge
overlap can tell the nodes apart.
"""

import numpy as np

from bpalign import Graph, SolverConfig, build_problem, precision_recall, solve, GroundTruth

rng = np.random.default_rng(7)
n, m = 30, 100
all_pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
edges_a = [all_pairs[k] for k in rng.choice(len(all_pairs), m, replace=False)]
perm = rng.permutation(n)
edges_b = [(int(perm[u]), int(perm[v])) for u, v in edges_a]

problem = build_problem(Graph(n, edges_a), Graph(n, edges_b), [(i, j, 1.0) for i in range(n) for j in range(n)])
print(f"{len(problem.candidates)} candidates, {len(problem.squares)} square entries")

result = solve(problem, SolverConfig(alpha=0.0))
truth = GroundTruth((i, int(perm[i])) for i in range(n))
precision, recall = precision_recall(result.mapping, truth)
print(f"overlapped edges {result.squares:.0f} of {m}")
print(f"precision {precision:.2f}, recall {recall:.2f} after {result.iterations_used} sweeps")
