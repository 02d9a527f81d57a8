"""Watch the relaxation rise and fall on a perfectly symmetric instance.

A and B are both two disjoint 2-cycles and every pair is a candidate with
the same similarity.  Mapping the first cycle onto either cycle of B is
equally good, so the messages have nothing to separate the optima.  With
ordered tie-breaking the growing epsilon eventually commits to one of them;
with growth disabled the run keeps oscillating.
"""

from bpalign import Graph, SolverConfig, build_problem, solve

g = Graph(4, [(0, 1), (1, 0), (2, 3), (3, 2)])
problem = build_problem(g, g, [(i, j, 1.0) for i in range(4) for j in range(4)])

base = dict(alpha=0.75, epsilon0=0.01, patience=10, max_iterations=50, tie_break="first")
for growth in (2.0, 1.0):
    r = solve(problem, SolverConfig(**base, epsilon_growth=growth))
    print(f"growth {growth}: converged={r.converged} after {r.iterations_used} sweeps, objective {r.objective}")
    if growth > 1:
        last = None
        for t, (obj, eps) in enumerate(r.history, start=1):
            if eps != last:
                print(f"  sweep {t:2d}: epsilon {eps:.2f}, rounded objective {obj:.2f}")
                last = eps
    print(f"  mapping {sorted(r.mapping.as_set())}")
