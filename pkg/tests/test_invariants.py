"""Property suites, 1000 derandomised cases per property."""

import random
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from conftest import generator_sets, raw_words
from ghnclab.ghnc import compare_with_oracle, ghnc_report
from ghnclab.gog import (
    Edge,
    GraphOfGroups,
    baumslag_solitar,
    euler_characteristic,
    free_product_decompose,
    predicted_l2_betti,
    presentation_rel_tree,
    spanning_tree,
)
from ghnclab.hall import SubgraphOfGroups, hall_completion, mv_certificate
from ghnclab.phi import (
    KLEIN,
    WeightedGraph,
    build_phi,
    classify,
    detect_klein_torus_loops,
    fundamental_gains,
    gbs_complex,
    gbs_euler_characteristic,
    is_balanced,
    orientation_double_cover,
)
from ghnclab.stallings import (
    basis,
    fold,
    from_generators,
    index_in_ambient,
    intersection,
    is_isomorphic,
    membership,
    pullback,
    rank,
    reduced_rank,
)
from ghnclab.words import (
    CyclicWord,
    Word,
    cyclic_equal_up_to_inversion,
    cyclic_reduce,
    free_reduce,
    invert,
    primitive_root,
    reduce,
)
from oracles import naive_inverse, naive_period, naive_reduce

pytestmark = pytest.mark.invariant

MIN_CASES = 1000
CASES: dict[str, int] = {}

_SETTINGS = settings(
    max_examples=MIN_CASES,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)


def PROP(fn):
    """Hypothesis settings plus a counter of completed cases, read by the acceptance suite."""
    test = _SETTINGS(fn)
    inner = test.hypothesis.inner_test

    def counted(*args, **kwargs):
        inner(*args, **kwargs)
        CASES[fn.__name__] = CASES.get(fn.__name__, 0) + 1

    test.hypothesis.inner_test = counted
    return test


def reduced(rank=2, max_size=8):
    return raw_words(rank, max_size).map(free_reduce)


def cyclic_words(rank=2, max_size=8):
    return reduced(rank, max_size).map(lambda w: cyclic_reduce(w)[1]).filter(lambda c: len(c) > 0)


# --- words ----------------------------------------------------------------------


@PROP
@given(raw_words(3, 14))
def test_reduce_idempotent(raw):
    once = reduce(raw)
    assert reduce(once.letters) == once
    assert once.letters == naive_reduce(raw)


@PROP
@given(reduced(3, 10))
def test_word_times_inverse(w):
    assert free_reduce(w + invert(w)) == ()
    assert invert(w) == naive_inverse(w)


@PROP
@given(reduced(2, 7).filter(bool), st.integers(1, 4))
def test_primitive_root_powers(w, k):
    root, e = primitive_root(w)
    root_k, e_k = primitive_root(Word(w) ** k)
    assert e_k == k * e
    assert naive_period(root.letters) == len(root)
    assert root.letters * e == cyclic_reduce(w)[1].letters or (
        cyclic_equal_up_to_inversion(CyclicWord(root.letters * e), cyclic_reduce(w)[1])[0]
    )


@PROP
@given(cyclic_words(2, 8), st.integers(0, 20), st.integers(0, 20), st.booleans(), st.booleans())
def test_cyclic_equality_orientation(u, r1, r2, inv1, inv2):
    def transform(c, r, inv):
        letters = invert(c.letters) if inv else c.letters
        k = r % len(letters)
        return CyclicWord(letters[k:] + letters[:k]), (-1 if inv else 1)

    v, s1 = transform(u, r1, inv1)
    x, s2 = transform(v, r2, inv2)
    assert cyclic_equal_up_to_inversion(u, u) == (True, 1)
    eq_uv, o_uv = cyclic_equal_up_to_inversion(u, v)
    eq_vu, o_vu = cyclic_equal_up_to_inversion(v, u)
    eq_ux, o_ux = cyclic_equal_up_to_inversion(u, x)
    eq_vx, o_vx = cyclic_equal_up_to_inversion(v, x)
    assert eq_uv and eq_vu and eq_ux and eq_vx and o_uv == o_vu
    self_inverse = cyclic_equal_up_to_inversion(u, u.inverse())[0]
    if not self_inverse:
        assert o_uv == s1 and o_ux == o_uv * o_vx


# --- stallings -------------------------------------------------------------------


@PROP
@given(generator_sets(2, 4, 6), st.randoms(use_true_random=False))
def test_folding_confluence(gens, rnd):
    gens = [free_reduce(g) for g in gens]
    g = from_generators(gens, 2)
    for _ in range(20):
        shuffled = list(gens)
        rnd.shuffle(shuffled)
        shuffled = [invert(s) if rnd.random() < 0.5 else s for s in shuffled]
        assert is_isomorphic(from_generators(shuffled, 2), g)
    assert all(membership(g, s) for s in gens)


@st.composite
def permutation_covers(draw):
    """Finite covers of the rose built from random permutations."""
    r = draw(st.integers(1, 3))
    n = draw(st.integers(1, 6))
    edges = []
    for x in range(1, r + 1):
        perm = draw(st.permutations(range(n)))
        edges += [(v, perm[v], x) for v in range(n)]
    return r, fold(n, edges, r)


@PROP
@given(permutation_covers())
def test_nielsen_schreier(data):
    r, g = data
    n = index_in_ambient(g)
    assert n == g.num_vertices
    assert rank(g) - 1 == n * (r - 1)


@PROP
@given(generator_sets(2, 3, 5), generator_sets(2, 3, 5))
def test_pullback_symmetry_and_soundness(U, V):
    gU, gV = from_generators([free_reduce(u) for u in U], 2), from_generators([free_reduce(v) for v in V], 2)
    fwd = sorted(c.reduced_rank for c in pullback(gU, gV) if not c.degenerate)
    bwd = sorted(c.reduced_rank for c in pullback(gV, gU) if not c.degenerate)
    assert fwd == bwd
    for c in pullback(gU, gV):
        t = c.representative.letters
        for s in basis(c.intersection):
            assert membership(gU, s)
            assert membership(gV, free_reduce(invert(t) + s.letters + t))


def _intersection_mismatch(gU, gV, gI, max_len):
    stack = [((), 0, 0, 0)]
    letters = (1, -1, 2, -2)
    while stack:
        w, pu, pv, pi = stack.pop()
        if w and ((pu == 0 and pv == 0) != (pi == 0)):
            return w
        if len(w) == max_len:
            continue
        for x in letters:
            if w and x == -w[-1]:
                continue
            qu = gU.target(pu, x) if pu is not None else None
            qv = gV.target(pv, x) if pv is not None else None
            qi = gI.target(pi, x) if pi is not None else None
            if (qu is None or qv is None) and qi is None:
                continue
            stack.append((w + (x,), qu, qv, qi))
    return None


@PROP
@given(generator_sets(2, 3, 5), generator_sets(2, 3, 5))
def test_intersection_membership(U, V):
    gU, gV = from_generators([free_reduce(u) for u in U], 2), from_generators([free_reduce(v) for v in V], 2)
    assert _intersection_mismatch(gU, gV, intersection(gU, gV), 8) is None


# --- hall ------------------------------------------------------------------------


@PROP
@given(st.integers(1, 3).flatmap(lambda r: st.tuples(st.just(r), generator_sets(r, 3, 6))))
def test_hall_identities(data):
    r, gens = data
    g = from_generators([free_reduce(x) for x in gens], r)
    h = hall_completion(g)
    assert index_in_ambient(h.cover) == h.index == g.num_vertices
    assert rank(h.cover) == 1 + h.index * (r - 1)
    assert rank(g) + len(h.complement_basis) == rank(h.cover)
    assert len(set(h.embedded_core.vertices.values())) == g.num_vertices
    assert len(set(h.embedded_core.edges.values())) == g.num_edges
    assert all(membership(h.cover, w) for w in basis(g))
    assert from_generators(basis(g) + list(h.complement_basis), r) == h.cover


@PROP
@given(generator_sets(2, 3, 4), st.integers(0, 2), st.integers(0, 2))
def test_certificate_soundness(gens, loops, trivial_loops):
    h = from_generators([free_reduce(x) for x in gens], 2)
    edges = tuple(Edge(f"e{i}", "v", "v", Word((1,)), Word((2,) * (i + 1))) for i in range(loops))
    edges += tuple(Edge(f"f{i}", "v", "v") for i in range(trivial_loops))
    amb = GraphOfGroups({"v": 2}, edges)
    sub = SubgraphOfGroups({"s": "v"}, {"s": h})
    cert = mv_certificate(sub, amb)
    if cert:
        assert max(-sub.euler_characteristic(), 0) <= max(-euler_characteristic(amb), 0)
    # rank-level monotonicity against a finite-index overgroup
    cover = hall_completion(h).cover
    assert reduced_rank(cover) >= reduced_rank(h)


# --- gog -------------------------------------------------------------------------


@st.composite
def graphs_of_groups(draw, max_vertices=4, max_edges=5):
    n = draw(st.integers(1, max_vertices))
    names = [f"v{i}" for i in range(n)]
    ranks = {v: draw(st.integers(0, 3)) for v in names}
    edges = []
    pairs = [(names[i], names[draw(st.integers(0, i - 1))]) for i in range(1, n)]
    pairs += [
        (draw(st.sampled_from(names)), draw(st.sampled_from(names))) for _ in range(draw(st.integers(0, max_edges)))
    ]
    for k, (s, t) in enumerate(pairs):
        if ranks[s] and ranks[t] and draw(st.booleans()):
            wf = Word(free_reduce(draw(raw_words(ranks[s], 4).filter(lambda w: free_reduce(w)))))
            wt = Word(free_reduce(draw(raw_words(ranks[t], 4).filter(lambda w: free_reduce(w)))))
            edges.append(Edge(f"e{k}", s, t, wf, wt))
        else:
            edges.append(Edge(f"e{k}", s, t))
    return GraphOfGroups(ranks, tuple(edges))


@PROP
@given(graphs_of_groups())
def test_chi_additivity_and_presentation_counts(g):
    d = free_product_decompose(g)
    assert sum(euler_characteristic(f) for f in d.factors) - len(d.removed_edges) == euler_characteristic(g)
    tree = spanning_tree(g)
    p = presentation_rel_tree(g, tree)
    assert len(p.generators) == sum(g.vertex_ranks.values()) + len(g.edges) - len(tree)
    assert len(p.relations) == len(g.cyclic_edges)


@PROP
@given(st.integers(-9, 9).filter(bool), st.integers(-9, 9).filter(bool), st.integers(2, 9))
def test_bs_chi_and_free_b1(m, n, r):
    assert euler_characteristic(baumslag_solitar(m, n)) == 0
    assert predicted_l2_betti(GraphOfGroups({"v": r})).b1 == r - 1


# --- phi -------------------------------------------------------------------------

weights = st.integers(-4, 4).filter(bool)


@st.composite
def weighted_graphs(draw, connected=True, max_vertices=4, max_extra=4, unit_bias=False):
    n = draw(st.integers(1, max_vertices))
    w = st.sampled_from([1, -1, 1, -1, 2, -3]) if unit_bias else weights
    edges = []
    k = 0
    if connected:
        for i in range(1, n):
            j = draw(st.integers(0, i - 1))
            edges.append((f"e{k}", f"x{j}", draw(w), f"x{i}", draw(w)))
            k += 1
    for _ in range(draw(st.integers(0 if n > 1 else 1, max_extra))):
        s, t = draw(st.integers(0, n - 1)), draw(st.integers(0, n - 1))
        edges.append((f"e{k}", f"x{s}", draw(w), f"x{t}", draw(w)))
        k += 1
    return WeightedGraph.from_edges(edges, [f"x{i}" for i in range(n)])


def _random_tree(w, rnd):
    parent = {v: v for v in w.vertex_ids}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    order = list(w.edges)
    rnd.shuffle(order)
    tree = []
    for e in order:
        a, b = find(e.source), find(e.target)
        if a != b:
            parent[a] = b
            tree.append(e.id)
    return tree


@PROP
@given(weighted_graphs(connected=False), st.randoms(use_true_random=False))
def test_balanced_orientation_independent(w, rnd):
    flipped = WeightedGraph(w.vertices, tuple(e.flipped() if rnd.random() < 0.5 else e for e in w.edges))
    assert is_balanced(w)[0] == is_balanced(flipped)[0]


@PROP
@given(weighted_graphs(), st.randoms(use_true_random=False))
def test_balanced_tree_independent(w, rnd):
    verdict = is_balanced(w)[0]
    unicyclic = len(w.edges) == len(w.vertices)
    reference = [abs(c.gain) for c in fundamental_gains(w)]
    for _ in range(50):
        tree = _random_tree(w, rnd)
        assert is_balanced(w, tree)[0] == verdict
        if unicyclic and not verdict:
            gain = abs(fundamental_gains(w, tree)[0].gain)
            assert gain in (reference[0], 1 / reference[0])


@PROP
@given(weighted_graphs(max_extra=3))
def test_gbs_phi_idempotent(w):
    g = gbs_complex(w)
    phi = build_phi(g)
    again = build_phi(gbs_complex(phi))

    def shape(p):
        by = {v.id: v.gog_vertex for v in p.vertices}
        return sorted((e.id, by[e.source], by[e.target], e.weight_o, e.weight_t) for e in p.edges)

    renamed = {v.id: v.gog_vertex for v in phi.vertices}
    assert sorted((e.id, renamed[e.source], renamed[e.target], e.weight_o, e.weight_t) for e in phi.edges) == sorted(
        (e.id, e.source, e.target, e.weight_o, e.weight_t) for e in w.edges
    )
    assert [(e.id, e.weight_o, e.weight_t) for e in again.edges] == [(e.id, e.weight_o, e.weight_t) for e in phi.edges]


@PROP
@given(weighted_graphs(unit_bias=True))
def test_double_cover(w):
    cover = orientation_double_cover(w)
    assert len(cover.vertices) == 2 * len(w.vertices) and len(cover.edges) == 2 * len(w.edges)
    assert not [loop for loop in detect_klein_torus_loops(cover) if loop.kind == KLEIN]
    assert gbs_euler_characteristic(cover) == 2 * gbs_euler_characteristic(w)


@PROP
@given(graphs_of_groups(max_vertices=3, max_edges=3))
def test_classify_consistency(g):
    r = classify(g)
    if r.rel_hyp_virt_abelian:
        assert r.lerf and r.rf and r.l2_hall_predicted
    assert r.lerf == all(c.balanced for c in r.components)
    assert r.rf == all(c.balanced or c.solvable for c in r.components)


# --- ghnc ------------------------------------------------------------------------


@PROP
@given(st.integers(2, 3).flatmap(lambda r: st.tuples(generator_sets(r, 3, 8), generator_sets(r, 3, 8), st.just(r))))
def test_ghnc_inequalities(data):
    U, V, r = data
    gU = from_generators([free_reduce(u) for u in U], r)
    gV = from_generators([free_reduce(v) for v in V], r)
    rep = ghnc_report(gU, gV)
    assert rep.holds and rep.classical_holds
    assert rep.lhs >= reduced_rank(intersection(gU, gV))
    assert rep.lhs == sum(c.reduced_rank for c in rep.components)


@PROP
@given(generator_sets(2, 2, 4), generator_sets(2, 2, 4))
def test_oracle_agreement_small(U, V):
    gU = from_generators([free_reduce(u) for u in U], 2)
    gV = from_generators([free_reduce(v) for v in V], 2)
    assume(gU.num_vertices <= 12 and gV.num_vertices <= 12)
    cmp = compare_with_oracle(gU, gV, 8)
    assert cmp.agrees, cmp.problems
    if cmp.beyond_horizon == 0:
        assert cmp.pullback_nontrivial == cmp.oracle_nontrivial
