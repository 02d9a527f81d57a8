import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bpalign import (BipartiteInstance, Graph, GroundTruth, Mapping, brute_force_nap, build_problem,
                     compose_ground_truth, naive_max_product, objective, precision_recall, solve_auction)
from bpalign.evaluation import normalized_scores

from helpers import random_graph, random_problem


def test_mapping_one_to_one():
    with pytest.raises(ValueError):
        Mapping([(0, 1), (0, 2)])
    with pytest.raises(ValueError):
        Mapping([(0, 1), (2, 1)])


def test_objective_identity_full_overlap():
    rng = np.random.default_rng(0)
    g = random_graph(7, 0.3, rng)
    p = build_problem(g, g, [(i, j, 1.0) for i in range(7) for j in range(7)])
    ident = Mapping((i, i) for i in range(7))
    for alpha in (0.0, 0.3, 1.0):
        sim, sq, obj = objective(ident, p, alpha)
        assert sim == 7 and sq == g.edge_count
        assert obj == pytest.approx(alpha * 7 + (1 - alpha) * g.edge_count)


def test_objective_empty():
    rng = np.random.default_rng(0)
    p = random_problem(rng)
    assert objective(Mapping(), p, 0.5) == (0.0, 0.0, 0.0)


def test_objective_rejects_infeasible():
    g = Graph(2, [(0, 1)])
    p = build_problem(g, g, [(0, 0, 1.0)])
    with pytest.raises(ValueError, match="not a candidate"):
        objective(Mapping([(1, 1)]), p, 0.5)


def _dense_quadratic(mapping, problem, alpha):
    """x^T p and x^T Q x with Q built from the graphs over all |V_A||V_B| pairs."""
    ga, gb, cands = problem.graph_a, problem.graph_b, problem.candidates
    na, nb = ga.node_count, gb.node_count
    x = np.zeros(na * nb)
    for i, j, _ in mapping:
        x[i * nb + j] = 1
    pvec = np.zeros(na * nb)
    for i, j, w in cands.pairs:
        pvec[i * nb + j] = w
    q = np.zeros((na * nb, na * nb))
    for i, j in ga.edges:
        for ip, jp in gb.edges:
            q[i * nb + ip, j * nb + jp] = 1.0
    sim, sq = x @ pvec, x @ q @ x
    return sim, sq, alpha * sim + (1 - alpha) * sq


@pytest.mark.parametrize("seed", range(10))
def test_objective_matches_dense_quadratic_form(seed):
    rng = np.random.default_rng(seed)
    p = random_problem(rng, 5, 6, density=0.4, cand_prob=0.7)
    cands = p.candidates
    used_r, used_c, pairs = set(), set(), []
    for k in rng.permutation(len(cands)):
        i, j = int(cands.a[k]), int(cands.b[k])
        if i not in used_r and j not in used_c and rng.random() < 0.7:
            used_r.add(i); used_c.add(j); pairs.append((i, j))
    m = Mapping(pairs)
    alpha = float(rng.random())
    assert objective(m, p, alpha) == pytest.approx(_dense_quadratic(m, p, alpha), abs=1e-12)
    assert objective(m, p, alpha, strict=False) == pytest.approx(_dense_quadratic(m, p, alpha), abs=1e-12)


def test_objective_additive_over_components():
    rng = np.random.default_rng(4)
    g1a, g1b = random_graph(4, 0.5, rng), random_graph(4, 0.5, rng)
    g2a, g2b = random_graph(3, 0.6, rng), random_graph(3, 0.6, rng)
    raw1 = [(i, j, float(rng.random())) for i in range(4) for j in range(4)]
    raw2 = [(i, j, float(rng.random())) for i in range(3) for j in range(3)]
    p1, p2 = build_problem(g1a, g1b, raw1), build_problem(g2a, g2b, raw2)
    shift = lambda g: [(u + 4, v + 4) for u, v in g.edges]
    joint = build_problem(Graph(7, g1a.edges + shift(g2a)), Graph(7, g1b.edges + shift(g2b)),
                          raw1 + [(i + 4, j + 4, w) for i, j, w in raw2])
    m1, m2 = Mapping([(0, 1), (1, 0), (3, 3)]), Mapping([(0, 2), (2, 0)])
    mj = Mapping([(0, 1), (1, 0), (3, 3), (4, 6), (6, 4)])
    for alpha in (0.0, 0.4, 1.0):
        a, b, c = objective(mj, joint, alpha)
        a1, b1, c1 = objective(m1, p1, alpha)
        a2, b2, c2 = objective(m2, p2, alpha)
        assert (a, b, c) == pytest.approx((a1 + a2, b1 + b2, c1 + c2))


def test_precision_recall_examples():
    t = Mapping([(0, 0), (1, 1), (2, 2), (3, 3)])
    assert precision_recall(t, t) == (1.0, 1.0)
    assert precision_recall(Mapping([(0, 1)]), Mapping([(1, 0)])) == (0.0, 0.0)
    pred = Mapping([(0, 0), (1, 1), (2, 2), (3, 4), (4, 3)])
    assert precision_recall(pred, t) == pytest.approx((0.6, 0.75))
    assert precision_recall(Mapping(), Mapping()) == (1.0, 1.0)


@settings(max_examples=60, deadline=None)
@given(st.permutations(range(8)), st.permutations(range(8)), st.integers(0, 8), st.integers(0, 8))
def test_precision_recall_bounds(p1, p2, k1, k2):
    a, b = Mapping(list(enumerate(p1))[:k1]), Mapping(list(enumerate(p2))[:k2])
    prec, rec = precision_recall(a, b)
    assert 0 <= prec <= 1 and 0 <= rec <= 1
    assert len(a.as_set() & b.as_set()) <= min(len(a), len(b))


def test_compose_examples():
    ident = Mapping((i, i) for i in range(5))
    assert compose_ground_truth([ident, ident, ident]) == ident
    assert compose_ground_truth([Mapping([(0, 1)]), Mapping([(1, 2)])]).as_set() == {(0, 2)}


def _random_partial(rng, n):
    perm = rng.permutation(n)
    keep = rng.random(n) < 0.7
    return Mapping((i, int(perm[i])) for i in range(n) if keep[i])


def _boolean(m, n):
    x = np.zeros((n, n), dtype=int)
    for i, j, _ in m:
        x[i, j] = 1
    return x


@pytest.mark.parametrize("seed", range(10))
def test_compose_equals_boolean_product(seed):
    rng = np.random.default_rng(seed)
    chain = [_random_partial(rng, 9) for _ in range(3)]
    prod = _boolean(chain[0], 9) @ _boolean(chain[1], 9) @ _boolean(chain[2], 9)
    got = compose_ground_truth(chain)
    assert _boolean(got, 9).tolist() == (prod > 0).astype(int).tolist()
    a, b, c = chain
    assert compose_ground_truth([compose_ground_truth([a, b]), c]) == compose_ground_truth([a, compose_ground_truth([b, c])])


def test_brute_force_single_candidate():
    g = Graph(1)
    m, v = brute_force_nap(build_problem(g, g, [(0, 0, 1.0)]), 1.0)
    assert m.as_set() == {(0, 0)} and v == 1.0


@pytest.mark.parametrize("seed", range(8))
def test_brute_force_mwm_agrees_with_auction(seed):
    rng = np.random.default_rng(seed)
    p = random_problem(rng, 5, 5, cand_prob=0.6)
    _, v = brute_force_nap(p, 1.0)
    _, va = solve_auction(BipartiteInstance(5, 5, tuple(p.candidates.pairs)))
    assert v == pytest.approx(va, abs=1e-9)


def test_brute_force_triangles():
    tri = Graph(3, [(0, 1), (1, 2), (2, 0)])
    relabeled = Graph(3, [(1, 0), (0, 2), (2, 1)])
    m, v = brute_force_nap(build_problem(tri, relabeled, [(i, j, 1.0) for i in range(3) for j in range(3)]), 0.0)
    assert v == 3.0


def test_brute_force_guard():
    rng = np.random.default_rng(0)
    p = random_problem(rng, 9, 9)
    with pytest.raises(ValueError, match="too large"):
        brute_force_nap(p, 0.5, limit=1000)


def test_naive_max_product_isolated_candidate():
    g = Graph(1)
    p = build_problem(g, g, [(0, 0, 2.0)])
    trace = naive_max_product(p, 0.5, 4)
    for rec in trace:
        assert rec["marginal"][0] == pytest.approx(1.0)
        assert rec["x_f"][0] == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(5))
def test_naive_max_product_finite(seed):
    rng = np.random.default_rng(seed)
    p = random_problem(rng, 3, 3, density=0.5, cand_prob=0.6)
    if len(p.candidates) > 6:
        pytest.skip("too many candidates for the oracle")
    for rec in naive_max_product(p, 0.5, 5):
        for arr in rec.values():
            assert np.all(np.isfinite(arr))


def test_naive_guard():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        naive_max_product(random_problem(rng, 3, 3), 0.5, 1)


def test_normalized_scores_against_truth():
    g = Graph(3, [(0, 1), (1, 2)])
    p = build_problem(g, g, [(i, j, 1.0) for i in range(3) for j in range(3)])
    truth = GroundTruth([(0, 0), (1, 1), (2, 2)])
    s = normalized_scores(Mapping([(0, 0), (1, 1)]), truth, p, 0.5)
    assert s["similarity"] == pytest.approx(2 / 3)
    assert s["squares"] == pytest.approx(1 / 2)
    assert s["objective"] == pytest.approx(1.5 / 2.5)
