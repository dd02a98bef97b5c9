import itertools
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from loopsat.algebra import eval_term, term_from_dict
from loopsat.digraph import make_basic
from loopsat.errors import InvalidParameter
from loopsat.families import dcp
from loopsat.homsearch import verify_hom
from loopsat.loopcond import (
    LoopCondition,
    builtin_algebra,
    builtin_condition,
    classified_implies,
    classify_condition,
    condition_digraph,
    condition_generators,
    cyclic_condition,
    cyclic_implies,
    digraph_condition,
    find_cyclic_term,
    implies_by_hom,
    is_trivial,
    majority_threshold_check,
    median_order_check,
    position_name,
    rad,
    satisfies,
    sim_transitivity,
    term_table,
)
from oracles import closure

CATALOG_CONDITIONS = [
    "siggers6", "siggers4", "maltsev", "cyclic(1)", "cyclic(2)", "cyclic(3)", "cyclic(4)",
    "cone(2)", "cone(3)", "totally_symmetric_clique(3)", "sym_cycle_condition(5)", "dcp(2,3)",
]
CATALOG_ALGEBRAS = ["projections2", "semilattice2", "majority2", "affine(2)", "affine(3)"]


def brute_sound(a, c, t) -> bool:
    """Scalar check of t(lhs) = t(rhs) under every assignment of the variables."""
    for values in itertools.product(range(a.size), repeat=len(c.variables)):
        env = dict(zip(c.variables, values))
        left = eval_term(a, t, {position_name(i): env[x] for i, x in enumerate(c.lhs)})
        right = eval_term(a, t, {position_name(i): env[y] for i, y in enumerate(c.rhs)})
        if left != right:
            return False
    return True


def has_diagonal(a, c) -> bool:
    _, rows = condition_generators(a, c)
    half = rows.shape[1] // 2
    return any(t[:half] == t[half:] for t in closure(a, rows))


def test_condition_digraphs():
    g = condition_digraph(builtin_condition("siggers6"))
    assert set(g.edges) == set(make_basic("clique", 3).edges)
    g = condition_digraph(builtin_condition("siggers4"))
    named = {(g.nodes[u], g.nodes[v]) for u, v in g.edges}
    assert named == {("r", "a"), ("a", "r"), ("r", "e"), ("e", "a")}
    g = condition_digraph(cyclic_condition(4))
    assert set(g.edges) == set(make_basic("dir_cycle", 4).edges)


def test_condition_validation():
    with pytest.raises(InvalidParameter):
        LoopCondition(("x",), ("x", "y"), ("x", "x"))
    with pytest.raises(InvalidParameter):
        LoopCondition(("x", "y"), ("x",), ("x", "y"))
    with pytest.raises(InvalidParameter):
        LoopCondition(("x", "x"), ("x",), ("x",))
    with pytest.raises(InvalidParameter):
        LoopCondition(("x",), (), ())


def test_triviality_examples():
    assert is_trivial(LoopCondition(("x", "y"), ("x", "y"), ("x", "x")))
    assert not is_trivial(builtin_condition("siggers6"))
    assert is_trivial(cyclic_condition(1))


def test_implication_examples():
    assert implies_by_hom(cyclic_condition(6), cyclic_condition(3)) is not None
    assert implies_by_hom(cyclic_condition(3), cyclic_condition(6)) is None
    f = implies_by_hom(builtin_condition("siggers4"), builtin_condition("siggers6"))
    assert f is not None
    assert verify_hom(condition_digraph(builtin_condition("siggers4")),
                      condition_digraph(builtin_condition("siggers6")), f)


def test_satisfies_examples():
    maj = builtin_algebra("majority2")
    v = satisfies(maj, builtin_condition("siggers6"))
    assert v.yes and brute_sound(maj, v.condition, v.witness)
    v = satisfies(builtin_algebra("projections2"), builtin_condition("siggers6"))
    assert v.no and v.witness is None
    assert satisfies(builtin_algebra("affine(2)"), cyclic_condition(2)).no
    a2 = builtin_algebra("affine(2)")
    v = satisfies(a2, cyclic_condition(3))
    assert v.yes
    names = [position_name(i) for i in range(3)]
    xor3 = tuple(sum(row) % 2 for row in itertools.product(range(2), repeat=3))
    assert term_table(a2, v.witness, names) == xor3


def test_cyclic_examples():
    semi = builtin_algebra("semilattice2")
    v = find_cyclic_term(semi, 3)
    names = [position_name(i) for i in range(3)]
    assert term_table(semi, v.witness, names) == tuple(min(r) for r in itertools.product(range(2), repeat=3))
    assert find_cyclic_term(builtin_algebra("affine(3)"), 3).no
    v = find_cyclic_term(builtin_algebra("affine(3)"), 2)
    assert v.yes
    # 1/2 = 2 over Z_3: c(x, y) = 2x + 2y
    assert term_table(builtin_algebra("affine(3)"), v.witness, names[:2]) == tuple(
        (2 * x + 2 * y) % 3 for x, y in itertools.product(range(3), repeat=2))
    with pytest.raises(InvalidParameter):
        find_cyclic_term(semi, 1)


def test_rad_examples():
    assert (rad(12), rad(8), rad(1), rad(30), rad(49)) == (6, 2, 1, 30, 7)
    with pytest.raises(InvalidParameter):
        rad(0)


@given(st.integers(1, 5000))
def test_rad_is_product_of_prime_divisors(n):
    primes = [p for p in range(2, n + 1) if n % p == 0 and all(p % q for q in range(2, p))]
    assert rad(n) == int(np.prod(primes, dtype=np.int64))  # empty product is 1


def test_classify_examples():
    k = classify_condition(builtin_condition("siggers6"))
    assert (k.strongly_connected, k.algebraic_length, k.kind) == (True, 1, "SIGGERS")
    k12 = classify_condition(cyclic_condition(12))
    assert (k12.kind, k12.radical) == ("CYCLIC", 6)
    k6, k18 = classify_condition(cyclic_condition(6)), classify_condition(cyclic_condition(18))
    assert classified_implies(k12, k6) and classified_implies(k6, k18) and classified_implies(k18, k12)
    assert not classified_implies(classify_condition(cyclic_condition(4)), k6)
    k = classify_condition(builtin_condition("maltsev"))
    assert (k.kind, k.strongly_connected, k.weakly_connected, k.algebraic_length) == ("UNCLASSIFIED", False, True, 1)
    assert classified_implies(k, k6) is None
    assert classify_condition(cyclic_condition(1)).kind == "TRIVIAL"
    assert classify_condition(builtin_condition("siggers4")).kind == "SIGGERS"
    json.dumps(k.to_dict())


def test_cyclic_implies_matches_homomorphisms():
    for n1 in range(1, 9):
        for n2 in range(1, 9):
            by_rad = cyclic_implies(n1, n2)
            if implies_by_hom(cyclic_condition(n1), cyclic_condition(n2)) is not None:
                assert by_rad


def test_builtin_algebras():
    maj = builtin_algebra("majority2")
    assert maj.size == 2 and [o.arity for o in maj.ops] == [3]
    a2 = builtin_algebra("affine(2)")
    assert all(a2.apply("m", x, y, z) == (x + y + z) % 2 for x, y, z in itertools.product(range(2), repeat=3))
    assert builtin_algebra("affine(7)").size == 7
    for bad in ("affine(4)", "affine(11)", "lattice3"):
        with pytest.raises(InvalidParameter):
            builtin_algebra(bad)


def test_builtin_conditions():
    cone2 = builtin_condition("cone(2)")
    assert len(cone2.variables) == 4
    g = condition_digraph(cone2)
    named = {(g.nodes[u], g.nodes[v]) for u, v in g.edges}
    assert named == {("c1", "c2"), ("c2", "c1"), ("a", "c1"), ("a", "c2"), ("b", "a")}
    g = condition_digraph(builtin_condition("sym_cycle_condition(5)"))
    assert set(g.edges) == set(make_basic("sym_cycle", 5).edges)
    assert builtin_condition("cyclic-12") == cyclic_condition(12)
    g = condition_digraph(builtin_condition("dcp(2,3)"))
    assert set(g.edges) == set(dcp(2, 3).edges)
    with pytest.raises(InvalidParameter):
        builtin_condition("taylor")


def test_digraph_condition_needs_edges():
    with pytest.raises(InvalidParameter):
        digraph_condition(make_basic("dir_path", 1))


@pytest.mark.parametrize("name", CATALOG_CONDITIONS)
def test_triviality_oracle(name):
    c = builtin_condition(name)
    assert is_trivial(c) == satisfies(builtin_algebra("projections2"), c).yes


@pytest.mark.parametrize("an", CATALOG_ALGEBRAS)
def test_witness_soundness_and_no_against_naive_closure(an):
    a = builtin_algebra(an)
    for name in ["siggers6", "siggers4", "maltsev", "cyclic(2)", "cyclic(3)", "cone(2)", "dcp(2,3)"]:
        c = builtin_condition(name)
        v = satisfies(a, c)
        assert v.status in ("yes", "no")
        if v.yes:
            assert brute_sound(a, c, v.witness)
        if len(c.variables) <= 3 and a.size == 2:
            assert v.yes == has_diagonal(a, c)


def test_monotone_implication():
    conds = {n: builtin_condition(n) for n in CATALOG_CONDITIONS}
    verdicts = {(an, n): satisfies(builtin_algebra(an), c).yes
                for an in CATALOG_ALGEBRAS for n, c in conds.items()}
    for n1, n2 in itertools.permutations(conds, 2):
        if implies_by_hom(conds[n1], conds[n2]) is None:
            continue
        for an in CATALOG_ALGEBRAS:
            if verdicts[(an, n1)]:
                assert verdicts[(an, n2)], (an, n1, n2)


@pytest.mark.parametrize("p", [2, 3])
@pytest.mark.parametrize("name", ["maltsev", "cone(2)", "cone(3)"])
def test_maltsev_algebras_satisfy_weakly_connected_loops(p, name):
    assert satisfies(builtin_algebra(f"affine({p})"), builtin_condition(name)).yes


def test_maltsev_witness_is_parity():
    a2 = builtin_algebra("affine(2)")
    v = satisfies(a2, builtin_condition("maltsev"))
    names = [position_name(i) for i in range(3)]
    assert term_table(a2, v.witness, names) == tuple(sum(r) % 2 for r in itertools.product(range(2), repeat=3))


def test_identity_form():
    v = satisfies(builtin_algebra("semilattice2"), builtin_condition("siggers6"))
    lhs, rhs = v.identity()
    env = {"x": 1, "y": 0, "z": 1}
    a = builtin_algebra("semilattice2")
    assert eval_term(a, lhs, env) == eval_term(a, rhs, env)


def test_undecided_on_small_caps():
    v = satisfies(builtin_algebra("majority2"), builtin_condition("cone(4)"), max_elements=50)
    assert v.status == "undecided" and v.reason


def test_json_round_trips():
    for name in CATALOG_CONDITIONS:
        c = builtin_condition(name)
        back = LoopCondition.from_json(c.to_json())
        assert (back.variables, back.lhs, back.rhs) == (c.variables, c.lhs, c.rhs)
    v = satisfies(builtin_algebra("majority2"), builtin_condition("siggers6"))
    d = json.loads(json.dumps(v.to_dict()))
    assert d["verdict"] == "yes" and set(d["stats"]) == {"elements", "applications"}
    assert term_from_dict(d["witness"]) == v.witness
    with pytest.raises(InvalidParameter):
        LoopCondition.from_dict({"vars": ["x"]})


def test_median_checks():
    assert median_order_check(2) and median_order_check(5) and median_order_check(10)
    assert majority_threshold_check(6)
    with pytest.raises(InvalidParameter):
        median_order_check(1)


def test_sim_relation_on_small_cycles():
    r = sim_transitivity((2, 3))
    assert r.transitive and r.successor_compatible and r.fixed_classes == 0


@st.composite
def small_conditions(draw):
    vs = ("x", "y", "z")[: draw(st.integers(1, 3))]
    n = draw(st.integers(1, 4))
    lhs = tuple(draw(st.sampled_from(vs)) for _ in range(n))
    rhs = tuple(draw(st.sampled_from(vs)) for _ in range(n))
    return LoopCondition(vs, lhs, rhs)


@given(small_conditions(), st.sampled_from(["projections2", "semilattice2", "majority2", "affine(2)"]))
def test_random_conditions_against_naive_closure(c, an):
    a = builtin_algebra(an)
    v = satisfies(a, c)
    assert v.yes == has_diagonal(a, c)
    if v.yes:
        assert brute_sound(a, c, v.witness)


def test_nu4_scaffold():
    nu = builtin_algebra("nu4")
    assert nu.ops[0].arity == 4
    assert nu.apply("nu", 1, 1, 1, 0) == 1 and nu.apply("nu", 0, 1, 1, 0) == 0
    assert satisfies(nu, builtin_condition("cone(3)")).yes
    assert satisfies(nu, builtin_condition("maltsev")).no  # the clone is monotone
