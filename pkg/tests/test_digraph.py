import json

import pytest
from hypothesis import given, strategies as st

from loopsat.digraph import (
    INFINITY,
    Digraph,
    algebraic_length,
    disjoint_union,
    edge_residuals,
    has_loop,
    is_isomorphic,
    is_strongly_connected,
    make_basic,
    potentials,
    relational_power,
    strong_components,
    verify_isomorphism,
    weak_components,
)
from loopsat.errors import InvalidParameter
from loopsat.families import clqp, dcp
from oracles import corpus, cycle_gcd


@st.composite
def digraphs(draw, max_nodes=6):
    n = draw(st.integers(1, max_nodes))
    edges = draw(st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=3 * n))
    return Digraph.from_edges(n, edges)


def test_basic_shapes():
    d3 = make_basic("dir_cycle", 3)
    assert (len(d3), len(d3.edges), has_loop(d3)) == (3, 3, False)
    k3 = make_basic("clique", 3)
    assert len(k3.edges) == 6 and k3.is_symmetric()
    assert len(make_basic("sym_cycle", 5).edges) == 10
    assert make_basic("dir_path", 4).sorted_edges() == [(0, 1), (1, 2), (2, 3)]


def test_basic_rejects_bad_input():
    with pytest.raises(InvalidParameter):
        make_basic("torus", 3)
    with pytest.raises(InvalidParameter):
        make_basic("clique", 0)


def test_constructor_validation():
    with pytest.raises(InvalidParameter):
        Digraph(("a", "a"), frozenset())
    with pytest.raises(InvalidParameter):
        Digraph.from_edges(2, [(0, 2)])


def test_loops():
    assert has_loop(make_basic("dir_cycle", 1))
    assert not has_loop(dcp(2, 5))


def test_strong_components():
    assert [len(c) for c, _ in strong_components(make_basic("dir_cycle", 5))] == [5]
    comps = strong_components(make_basic("dir_path", 4))
    assert [c for c, _ in comps] == [[0], [1], [2], [3]]
    assert not any(flag for _, flag in comps)
    assert [len(c) for c, _ in strong_components(dcp(2, 3))] == [4]


def test_weak_components():
    assert len(weak_components(disjoint_union(make_basic("dir_cycle", 2), make_basic("dir_cycle", 3)))) == 2
    assert len(weak_components(make_basic("clique", 3))) == 1
    # injective pairs over 3 letters: (0,1)->(1,2)->(2,0) and the reverse orientation
    assert len(weak_components(clqp(2, 0, 3))) == 2


@pytest.mark.parametrize("g, expected", [
    (make_basic("dir_cycle", 5), 5),
    (make_basic("sym_cycle", 4), 2),
    (make_basic("sym_cycle", 5), 1),
    (make_basic("dir_path", 4), INFINITY),
    (dcp(2, 5), 1),
])
def test_algebraic_length_examples(g, expected):
    assert algebraic_length(g) == expected
    assert cycle_gcd(g) == expected


def test_algebraic_length_matches_cycle_gcd_on_corpus():
    for g in corpus():
        assert algebraic_length(g) == cycle_gcd(g), g.to_dict()


@given(digraphs())
def test_algebraic_length_matches_cycle_gcd(g):
    assert algebraic_length(g) == cycle_gcd(g)


@given(digraphs())
def test_residuals_are_multiples(g):
    al = algebraic_length(g)
    res = edge_residuals(g, potentials(g))
    if al == INFINITY:
        assert all(r == 0 for r in res)
    else:
        assert all(r % al == 0 for r in res)


@given(digraphs())
def test_components_partition_in_topological_order(g):
    comps = strong_components(g)
    order = {}
    for i, (nodes, _) in enumerate(comps):
        for v in nodes:
            order[v] = i
    assert sorted(order) == list(range(len(g)))
    for u, v in g.edges:
        assert order[u] <= order[v]
    for nodes, cyclic in comps:
        sub = g.induced(nodes)
        assert cyclic == (len(nodes) > 1 or has_loop(sub))
    assert is_strongly_connected(g) == (len(comps) == 1)


def test_relational_power():
    sq = relational_power(make_basic("dir_cycle", 6), 2)
    assert sorted(sq.edges) == sorted((x, (x + 2) % 6) for x in range(6))
    assert len(weak_components(sq)) == 2
    g = dcp(2, 3)
    assert relational_power(g, 1) == g
    assert relational_power(g, 2).has_edge(0, 0)


@given(digraphs(5), st.integers(1, 4))
def test_relational_power_is_walk_count(g, k):
    import numpy as np
    adj = np.zeros((len(g), len(g)), dtype=np.int64)
    for u, v in g.edges:
        adj[u, v] = 1
    walks = np.linalg.matrix_power(adj, k)
    expected = {(int(u), int(v)) for u, v in zip(*np.nonzero(walks))}
    assert set(relational_power(g, k).edges) == expected


def test_disjoint_union_counts():
    u = disjoint_union(make_basic("dir_cycle", 2), make_basic("dir_cycle", 3))
    assert (len(u), len(u.edges)) == (5, 5)
    k = make_basic("clique", 3)
    assert (len(disjoint_union(k, k)), len(disjoint_union(k, k).edges)) == (6, 12)
    empty = Digraph((), frozenset())
    assert is_isomorphic(disjoint_union(empty, k), k) is not None


def test_isomorphism_examples():
    k3 = make_basic("clique", 3)
    f = is_isomorphic(clqp(1, 0, 3), k3)
    assert f is not None and verify_isomorphism(clqp(1, 0, 3), k3, f)
    assert is_isomorphic(make_basic("dir_cycle", 3), make_basic("sym_cycle", 3)) is None
    assert is_isomorphic(clqp(2, 3, 1), k3) is not None


@given(digraphs(5), st.randoms(use_true_random=False))
def test_isomorphic_to_relabeling(g, rnd):
    perm = list(range(len(g)))
    rnd.shuffle(perm)
    h = Digraph.from_edges(len(g), {(perm[u], perm[v]) for u, v in g.edges})
    f = is_isomorphic(g, h)
    assert f is not None and verify_isomorphism(g, h, f)


@given(digraphs())
def test_json_round_trip(g):
    assert Digraph.from_json(g.to_json()) == g
    assert Digraph.from_dict(json.loads(json.dumps(g.to_dict()))) == g
