"""Loop conditions t(x_1..x_n) = t(y_1..y_n): their digraphs and satisfaction.

``satisfies`` decides a condition for a finite algebra by closing the
pairs (p_x, p_y) of projections under the basic operations coordinatewise
and looking for a diagonal pair. The witness is an n-ary term over the
positional variables ``#1 .. #n``.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import families
from .algebra import (
    DEFAULT_MAX_APPLICATIONS,
    DEFAULT_MAX_ELEMENTS,
    FiniteAlgebra,
    Term,
    Var,
    assignments,
    eval_term,
    extract_term,
    projections,
    substitute,
    subpower_closure,
    term_to_dict,
)
from .digraph import (
    INFINITY,
    Digraph,
    algebraic_length,
    is_strongly_connected,
    is_weakly_connected,
    make_basic,
    strong_components,
)
from .errors import InvalidParameter, VerificationFailed
from .homsearch import HomProblem, find_hom


@dataclass(frozen=True)
class LoopCondition:
    variables: tuple[str, ...]
    lhs: tuple[str, ...]
    rhs: tuple[str, ...]
    name: str = ""

    def __post_init__(self):
        for attr in ("variables", "lhs", "rhs"):
            object.__setattr__(self, attr, tuple(str(x) for x in getattr(self, attr)))
        if len(set(self.variables)) != len(self.variables):
            raise InvalidParameter("variables must be distinct")
        if len(self.lhs) != len(self.rhs) or not self.lhs:
            raise InvalidParameter("lhs and rhs must have equal positive length")
        declared = set(self.variables)
        for x in self.lhs + self.rhs:
            if x not in declared:
                raise InvalidParameter(f"undeclared variable {x!r}")

    @property
    def arity(self) -> int:
        return len(self.lhs)

    def __str__(self):
        label = f"{self.name}: " if self.name else ""
        return f"{label}t({', '.join(self.lhs)}) = t({', '.join(self.rhs)})"

    def to_dict(self) -> dict:
        return {"vars": list(self.variables), "lhs": list(self.lhs), "rhs": list(self.rhs)}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict, name: str = "") -> "LoopCondition":
        try:
            return cls(tuple(data["vars"]), tuple(data["lhs"]), tuple(data["rhs"]), name)
        except (KeyError, TypeError) as exc:
            raise InvalidParameter("condition JSON needs 'vars', 'lhs' and 'rhs'") from exc

    @classmethod
    def from_json(cls, text: str, name: str = "") -> "LoopCondition":
        return cls.from_dict(json.loads(text), name)


def digraph_condition(g: Digraph, name: str = "") -> LoopCondition:
    """The G loop condition: one position per edge, variables named by node labels."""
    edges = g.sorted_edges()
    if not edges:
        raise InvalidParameter("a loop condition needs at least one edge")
    return LoopCondition(
        g.nodes,
        tuple(g.nodes[u] for u, _ in edges),
        tuple(g.nodes[v] for _, v in edges),
        name,
    )


def condition_digraph(c: LoopCondition) -> Digraph:
    return Digraph.from_labeled_edges(c.variables, set(zip(c.lhs, c.rhs)))


def distinct_edges(c: LoopCondition) -> list[tuple[str, str]]:
    """Edges in order of first appearance among the positions."""
    seen: dict[tuple[str, str], None] = {}
    for e in zip(c.lhs, c.rhs):
        seen.setdefault(e)
    return list(seen)


def is_trivial(c: LoopCondition) -> bool:
    return any(x == y for x, y in zip(c.lhs, c.rhs))


def implies_by_hom(c1: LoopCondition, c2: LoopCondition) -> list[int] | None:
    """A homomorphism G_c1 -> G_c2 (certifying c1 => c2), indexed by variable position."""
    return find_hom(HomProblem(condition_digraph(c1), condition_digraph(c2)))


# -- satisfaction -------------------------------------------------------------

@dataclass
class SatisfactionVerdict:
    status: str  # "yes" | "no" | "undecided"
    condition: LoopCondition
    witness: Term | None = None
    reason: str = ""
    stats: dict = field(default_factory=dict)
    diagonal: tuple[int, ...] | None = None

    @property
    def yes(self) -> bool:
        return self.status == "yes"

    @property
    def no(self) -> bool:
        return self.status == "no"

    def identity(self) -> tuple[Term, Term]:
        """Both sides of the witnessed identity as terms over the condition's variables."""
        if self.witness is None:
            raise InvalidParameter("no witness")
        lhs = substitute(self.witness, {position_name(i): Var(x) for i, x in enumerate(self.condition.lhs)})
        rhs = substitute(self.witness, {position_name(i): Var(y) for i, y in enumerate(self.condition.rhs)})
        return lhs, rhs

    def to_dict(self) -> dict:
        out = {"verdict": self.status, "stats": dict(self.stats)}
        if self.witness is not None:
            out["witness"] = term_to_dict(self.witness)
        if self.reason:
            out["reason"] = self.reason
        return out


def position_name(i: int) -> str:
    return f"#{i + 1}"


def condition_generators(a: FiniteAlgebra, c: LoopCondition) -> tuple[list[tuple[str, str]], np.ndarray]:
    """Distinct edges of G_c and the pairs (p_x, p_y) as rows of A^(2 n^g)."""
    g = len(c.variables)
    proj = projections(a.size, g)
    var_index = {x: i for i, x in enumerate(c.variables)}
    edges = distinct_edges(c)
    rows = np.array([np.concatenate([proj[var_index[x]], proj[var_index[y]]]) for x, y in edges])
    return edges, rows


def satisfies(
    a: FiniteAlgebra,
    c: LoopCondition,
    max_elements: int = DEFAULT_MAX_ELEMENTS,
    max_applications: int = DEFAULT_MAX_APPLICATIONS,
    verify: bool = True,
) -> SatisfactionVerdict:
    """Decide whether ``a`` has a term t with t(lhs) = t(rhs).

    NO is only reported after the closure reached its fixpoint; hitting a
    cap gives UNDECIDED.
    """
    a.check()
    g = len(c.variables)
    half = a.size ** g
    edges, rows = condition_generators(a, c)

    def diagonal(t):
        return t[:half] == t[half:]

    res = subpower_closure(a, 2 * half, rows, diagonal, max_elements, max_applications)
    stats = {"elements": len(res.trace), "applications": res.applications}
    if res.status == "undecided":
        return SatisfactionVerdict("undecided", c, reason=res.reason, stats=stats)
    if res.status == "closed":
        return SatisfactionVerdict("no", c, stats=stats)

    first_pos = {}
    for i, e in enumerate(zip(c.lhs, c.rhs)):
        first_pos.setdefault(e, i)
    names = [position_name(first_pos[e]) for e in edges]
    witness = extract_term(res.trace, res.witness, names)
    verdict = SatisfactionVerdict("yes", c, witness, stats=stats, diagonal=res.trace.element(res.witness))
    if verify:
        bad = witness_counterexample(a, c, witness)
        if bad is not None:
            raise VerificationFailed("witness term fails the identity", bad)
        replay = replay_witness(a, c, witness)
        if replay != verdict.diagonal:
            raise VerificationFailed("witness replay does not reproduce the diagonal element")
    return verdict


def witness_counterexample(a: FiniteAlgebra, c: LoopCondition, t: Term) -> dict[str, int] | None:
    """First assignment (row-major over the variables) where t(lhs) != t(rhs), else None."""
    g = len(c.variables)
    env_all = assignments(a.size, g)
    col = {x: env_all[:, i] for i, x in enumerate(c.variables)}
    left = eval_term(a, t, {position_name(i): col[x] for i, x in enumerate(c.lhs)})
    right = eval_term(a, t, {position_name(i): col[y] for i, y in enumerate(c.rhs)})
    left = np.broadcast_to(left, (len(env_all),))
    right = np.broadcast_to(right, (len(env_all),))
    bad = np.nonzero(left != right)[0]
    if len(bad) == 0:
        return None
    row = env_all[bad[0]]
    return {x: int(row[i]) for i, x in enumerate(c.variables)}


def replay_witness(a: FiniteAlgebra, c: LoopCondition, t: Term) -> tuple[int, ...]:
    """Evaluate t coordinatewise with position i bound to the pair (p_{x_i}, p_{y_i})."""
    g = len(c.variables)
    proj = projections(a.size, g)
    var_index = {x: i for i, x in enumerate(c.variables)}
    env = {
        position_name(i): np.concatenate([proj[var_index[x]], proj[var_index[y]]])
        for i, (x, y) in enumerate(zip(c.lhs, c.rhs))
    }
    out = np.broadcast_to(eval_term(a, t, env), (2 * a.size ** g,))
    return tuple(int(v) for v in out)


def term_table(a: FiniteAlgebra, t: Term, names: Sequence[str]) -> tuple[int, ...]:
    """Values of t over A^len(names), row-major."""
    env_all = assignments(a.size, len(names))
    out = eval_term(a, t, {x: env_all[:, i] for i, x in enumerate(names)})
    return tuple(int(v) for v in np.broadcast_to(out, (len(env_all),)))


def find_cyclic_term(a: FiniteAlgebra, n: int, **caps) -> SatisfactionVerdict:
    if n < 2:
        raise InvalidParameter("cyclic terms need arity at least 2")
    return satisfies(a, cyclic_condition(n), **caps)


# -- classification -------------------------------------------------------------

def rad(n: int) -> int:
    """Product of the distinct prime divisors of n."""
    if n < 1:
        raise InvalidParameter("rad needs n >= 1")
    out, p = 1, 2
    while p * p <= n:
        if n % p == 0:
            out *= p
            while n % p == 0:
                n //= p
        p += 1
    return out * n if n > 1 else out


@dataclass
class Classification:
    trivial: bool
    strongly_connected: bool
    weakly_connected: bool
    algebraic_length: int | float
    kind: str  # TRIVIAL | SIGGERS | CYCLIC | UNCLASSIFIED
    radical: int | None = None
    components: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        al = self.algebraic_length
        return {
            "trivial": self.trivial,
            "strongly_connected": self.strongly_connected,
            "weakly_connected": self.weakly_connected,
            "algebraic_length": "inf" if al == INFINITY else al,
            "class": self.kind,
            "radical": self.radical,
            "components": self.components,
        }


def classify_condition(c: LoopCondition) -> Classification:
    g = condition_digraph(c)
    al = algebraic_length(g)
    trivial = is_trivial(c)
    strong = is_strongly_connected(g)
    comps = []
    for nodes, cyclic in strong_components(g):
        sub = g.induced(nodes)
        comps.append({
            "nodes": [g.nodes[v] for v in nodes],
            "cyclic": cyclic,
            "algebraic_length": "inf" if algebraic_length(sub) == INFINITY else algebraic_length(sub),
        })
    if trivial:
        kind, radical = "TRIVIAL", None
    elif strong:
        radical = rad(int(al))
        kind = "SIGGERS" if al == 1 else "CYCLIC"
    else:
        kind, radical = "UNCLASSIFIED", None
    return Classification(trivial, strong, is_weakly_connected(g), al, kind, radical, comps)


def cyclic_implies(n1: int, n2: int) -> bool:
    """Whether the D_n1 condition implies the D_n2 condition: rad(n2) divides rad(n1)."""
    return rad(n1) % rad(n2) == 0


def classified_implies(k1: Classification, k2: Classification) -> bool | None:
    """Implication between two classified conditions, or None when not covered."""
    if k2.kind == "TRIVIAL":
        return True
    if k1.kind == "TRIVIAL":
        return False
    if k1.kind in ("SIGGERS", "CYCLIC") and k2.kind in ("SIGGERS", "CYCLIC"):
        return k1.radical % k2.radical == 0
    return None


# -- catalog ----------------------------------------------------------------------

def _is_prime(p: int) -> bool:
    return p >= 2 and all(p % q for q in range(2, math.isqrt(p) + 1))


def affine_algebra(p: int) -> FiniteAlgebra:
    if not _is_prime(p):
        raise InvalidParameter(f"affine(p) needs a prime, got {p}")
    return FiniteAlgebra.from_function(p, {"m": (3, lambda x, y, z: (x - y + z) % p)}, f"affine({p})")


def _nu4(*xs):
    # 4-ary near-unanimity on {0,1}; 2-2 ties go to 0
    return 1 if sum(xs) >= 3 else 0


_ALGEBRAS = {
    "projections2": lambda: FiniteAlgebra.from_function(
        2, {"p1": (2, lambda x, y: x), "p2": (2, lambda x, y: y)}, "projections2"),
    "semilattice2": lambda: FiniteAlgebra.from_function(2, {"meet": (2, min)}, "semilattice2"),
    "majority2": lambda: FiniteAlgebra.from_function(
        2, {"maj": (3, lambda x, y, z: 1 if x + y + z >= 2 else 0)}, "majority2"),
    "nu4": lambda: FiniteAlgebra.from_function(2, {"nu": (4, _nu4)}, "nu4"),
}

_PARAM = re.compile(r"^([a-z_0-9]+?)(?:\(([\d,\s]*)\)|_?(\d+(?:_\d+)*))?$")


def _split_name(name: str) -> tuple[str, list[int]]:
    name = name.strip().lower().replace("-", "_")
    m = _PARAM.match(name)
    if not m:
        raise InvalidParameter(f"cannot parse name {name!r}")
    base = m.group(1)
    raw = m.group(2) if m.group(2) is not None else (m.group(3) or "")
    nums = [int(x) for x in re.split(r"[,_\s]+", raw) if x]
    return base, nums


def builtin_algebra(name: str) -> FiniteAlgebra:
    key = name.strip().lower()
    if key in _ALGEBRAS:
        return _ALGEBRAS[key]()
    base, nums = _split_name(key)
    if base == "affine" and len(nums) == 1 and nums[0] <= 7:
        return affine_algebra(nums[0])
    raise InvalidParameter(f"unknown algebra {name!r}; known: {sorted(_ALGEBRAS)} and affine(p), p prime <= 7")


def cyclic_condition(n: int) -> LoopCondition:
    if n < 1:
        raise InvalidParameter("cyclic condition needs n >= 1")
    xs = tuple(f"x{i}" for i in range(1, n + 1))
    return LoopCondition(xs, xs, xs[1:] + xs[:1], f"cyclic({n})")


def cone_condition(n: int) -> LoopCondition:
    if n < 2:
        raise InvalidParameter("cone needs n >= 2")
    cs = [f"c{i}" for i in range(1, n + 1)]
    edges = [(cs[i], cs[(i + 1) % n]) for i in range(n)]
    edges += [("a", x) for x in cs]
    edges.append(("b", "a"))
    return LoopCondition(tuple(cs + ["a", "b"]), tuple(u for u, _ in edges), tuple(v for _, v in edges), f"cone({n})")


def _graph_condition(g: Digraph, prefix: str, name: str) -> LoopCondition:
    relabeled = Digraph(tuple(f"{prefix}{x}" for x in g.nodes), g.edges)
    return digraph_condition(relabeled, name)


def builtin_condition(name: str) -> LoopCondition:
    key = name.strip().lower()
    if key == "siggers6":
        return LoopCondition(("x", "y", "z"), tuple("xxyyzz"), tuple("yzzxxy"), "siggers6")
    if key == "siggers4":
        return LoopCondition(("r", "a", "e"), tuple("rare"), tuple("area"), "siggers4")
    if key == "maltsev":
        return LoopCondition(("x", "y", "z"), tuple("yxx"), tuple("zzy"), "maltsev")
    base, nums = _split_name(key)
    if base == "cyclic" and len(nums) == 1:
        return cyclic_condition(nums[0])
    if base == "cone" and len(nums) == 1:
        return cone_condition(nums[0])
    if base in ("totally_symmetric_clique", "clique") and len(nums) == 1:
        return _graph_condition(make_basic("clique", nums[0]), "x", f"totally_symmetric_clique({nums[0]})")
    if base in ("sym_cycle_condition", "sym_cycle") and len(nums) == 1:
        return _graph_condition(make_basic("sym_cycle", nums[0]), "x", f"sym_cycle_condition({nums[0]})")
    if base == "dcp" and len(nums) == 2:
        return digraph_condition(families.dcp(*nums), f"dcp({nums[0]},{nums[1]})")
    raise InvalidParameter(f"unknown condition {name!r}")


BUILTIN_ALGEBRAS = ("projections2", "semilattice2", "majority2", "affine(2)", "affine(3)")
EQUIVALENCE_CONDITIONS = ("siggers6", "siggers4", "sym_cycle_condition(5)", "dcp(2,3)", "totally_symmetric_clique(3)")


def equivalence_matrix(algebras: Sequence[str] = BUILTIN_ALGEBRAS,
                       conditions: Sequence[str] = EQUIVALENCE_CONDITIONS,
                       **caps) -> dict[str, dict[str, SatisfactionVerdict]]:
    out = {}
    for an in algebras:
        a = builtin_algebra(an)
        out[an] = {cn: satisfies(a, builtin_condition(cn), **caps) for cn in conditions}
    return out


# -- finite checks of the non-strongly-connected examples ----------------------------

def median_order_check(m: int) -> bool:
    """Strict order on 0..m-1 is preserved by the median of three."""
    if not 2 <= m <= 30:
        raise InvalidParameter("median_order_check needs 2 <= m <= 30")
    p, q = np.triu_indices(m, k=1)
    lo = np.stack(np.meshgrid(p, p, indexing="ij"), axis=-1).reshape(-1, 2)
    hi = np.stack(np.meshgrid(q, q, indexing="ij"), axis=-1).reshape(-1, 2)
    for i in range(len(p)):
        lows = np.column_stack([np.full(len(lo), p[i]), lo])
        highs = np.column_stack([np.full(len(hi), q[i]), hi])
        if not (np.median(lows, axis=1) < np.median(highs, axis=1)).all():
            return False
    return True


def majority_threshold_check(m: int) -> bool:
    """Majority of the step functions b_p, b_q, b_r on 0..m-1 is the step at their median.

    b_q(x) = 0 for x <= q and 1 otherwise.
    """
    if not 2 <= m <= 30:
        raise InvalidParameter("majority_threshold_check needs 2 <= m <= 30")
    x = np.arange(m)
    steps = (x[None, :] > x[:, None]).astype(np.int8)  # row q is b_q
    p, q, r = np.meshgrid(x, x, x, indexing="ij")
    p, q, r = p.ravel(), q.ravel(), r.ravel()
    maj = (steps[p] + steps[q] + steps[r] >= 2).astype(np.int8)
    med = np.median(np.stack([p, q, r]), axis=0).astype(int)
    return bool((maj == steps[med]).all())


@dataclass
class SimReport:
    cycles: tuple[int, ...]
    tuples: int
    related_pairs: int
    transitive: bool
    successor_compatible: bool
    fixed_classes: int


def sim_transitivity(cycles: Sequence[int] = (2, 3)) -> SimReport:
    """Check the ~ relation on (disjoint directed cycles)^6.

    ~ is the reflexive symmetric relation generated by
    (x,x,y,y,z,z) ~ (y,z,z,x,x,y). Reports transitivity, compatibility
    with the successor map and the number of classes it fixes.
    """
    succ = []
    for length in cycles:
        base = len(succ)
        succ.extend(base + (i + 1) % length for i in range(length))
    n = len(succ)
    rel: dict[tuple, set] = {}

    def add(u, v):
        rel.setdefault(u, {u}).add(v)
        rel.setdefault(v, {v}).add(u)

    for x in range(n):
        for y in range(n):
            for z in range(n):
                add((x, x, y, y, z, z), (y, z, z, x, x, y))

    def related(u, v):
        return u == v or v in rel.get(u, ())

    transitive = all(related(u, w) for u, vs in rel.items() for v in vs for w in rel.get(v, {v}))
    phi = lambda t: tuple(succ[x] for x in t)  # noqa: E731
    compatible = all(related(phi(u), phi(v)) for u, vs in rel.items() for v in vs)
    fixed = sum(1 for t in np.ndindex(*(n,) * 6) if related(t, phi(t)))
    pairs = sum(len(vs - {u}) for u, vs in rel.items())
    return SimReport(tuple(cycles), n ** 6, pairs, transitive, compatible, fixed)
