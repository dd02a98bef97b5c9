"""Finite digraphs and their structural invariants.

Nodes are addressed by index; labels are opaque strings kept for
round-tripping (family nodes carry readable sequence labels).
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

from .errors import BudgetExceeded, InvalidParameter

INFINITY = math.inf

BASIC_KINDS = ("clique", "sym_cycle", "dir_cycle", "dir_path")


@dataclass(frozen=True, eq=False)
class Digraph:
    nodes: tuple[str, ...]
    edges: frozenset[tuple[int, int]] = field(default_factory=frozenset)

    def __post_init__(self):
        nodes = tuple(str(x) for x in self.nodes)
        object.__setattr__(self, "nodes", nodes)
        edges = frozenset((int(u), int(v)) for u, v in self.edges)
        object.__setattr__(self, "edges", edges)
        if len(set(nodes)) != len(nodes):
            raise InvalidParameter("node labels must be pairwise distinct")
        n = len(nodes)
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise InvalidParameter(f"edge ({u}, {v}) has an endpoint outside 0..{n - 1}")

    @classmethod
    def from_edges(cls, nodes: int | Sequence[str], edges: Iterable[tuple[int, int]]) -> "Digraph":
        if isinstance(nodes, int):
            nodes = [str(i) for i in range(nodes)]
        return cls(tuple(nodes), frozenset(edges))

    @classmethod
    def from_labeled_edges(cls, nodes: Sequence[str], edges: Iterable[tuple[str, str]]) -> "Digraph":
        index = {x: i for i, x in enumerate(nodes)}
        return cls(tuple(nodes), frozenset((index[u], index[v]) for u, v in edges))

    def __len__(self):
        return len(self.nodes)

    def __eq__(self, other):
        if not isinstance(other, Digraph):
            return NotImplemented
        return self.nodes == other.nodes and self.edges == other.edges

    def __hash__(self):
        return hash((self.nodes, self.edges))

    def __repr__(self):
        return f"Digraph(nodes={len(self.nodes)}, edges={len(self.edges)})"

    @cached_property
    def index(self) -> dict[str, int]:
        return {x: i for i, x in enumerate(self.nodes)}

    @cached_property
    def out_adj(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in self.nodes]
        for u, v in self.edges:
            adj[u].append(v)
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def in_adj(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in self.nodes]
        for u, v in self.edges:
            adj[v].append(u)
        return tuple(tuple(sorted(a)) for a in adj)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self.edges

    def is_symmetric(self) -> bool:
        return all((v, u) in self.edges for u, v in self.edges)

    def induced(self, keep: Sequence[int]) -> "Digraph":
        pos = {v: i for i, v in enumerate(keep)}
        return Digraph(
            tuple(self.nodes[v] for v in keep),
            frozenset((pos[u], pos[v]) for u, v in self.edges if u in pos and v in pos),
        )

    # JSON ---------------------------------------------------------------

    def to_dict(self) -> dict:
        return {"nodes": list(self.nodes), "edges": [list(e) for e in self.sorted_edges()]}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "Digraph":
        try:
            nodes = data["nodes"]
            edges = data["edges"]
        except (KeyError, TypeError) as exc:
            raise InvalidParameter("digraph JSON needs 'nodes' and 'edges'") from exc
        return cls(tuple(nodes), frozenset(tuple(e) for e in edges))

    @classmethod
    def from_json(cls, text: str) -> "Digraph":
        return cls.from_dict(json.loads(text))


def make_basic(kind: str, n: int) -> Digraph:
    """Return one of the basic digraphs K_n, C_n, D_n or a directed path."""
    if n < 1:
        raise InvalidParameter(f"n must be positive, got {n}")
    if kind == "clique":
        edges = {(x, y) for x in range(n) for y in range(n) if x != y}
    elif kind == "sym_cycle":
        edges = set()
        if n > 1:
            for x in range(n):
                edges.add((x, (x + 1) % n))
                edges.add(((x + 1) % n, x))
    elif kind == "dir_cycle":
        edges = {(x, (x + 1) % n) for x in range(n)}
    elif kind == "dir_path":
        edges = {(x, x + 1) for x in range(n - 1)}
    else:
        raise InvalidParameter(f"unknown basic digraph kind {kind!r}; expected one of {BASIC_KINDS}")
    return Digraph.from_edges(n, edges)


def has_loop(g: Digraph) -> bool:
    return any(u == v for u, v in g.edges)


def strong_components(g: Digraph) -> list[tuple[list[int], bool]]:
    """Strongly connected components in topological order.

    Each component comes with a flag telling whether it contains a cycle,
    i.e. has at least two nodes or a loop.
    """
    n = len(g)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    adj = g.out_adj
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, i = work[-1]
            if i < len(adj[v]):
                work[-1] = (v, i + 1)
                w = adj[v][i]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
    # Tarjan emits sinks first
    comps.reverse()
    return [(c, len(c) > 1 or (c[0], c[0]) in g.edges) for c in comps]


def is_strongly_connected(g: Digraph) -> bool:
    return len(g) > 0 and len(strong_components(g)) == 1


def weak_components(g: Digraph) -> list[list[int]]:
    n = len(g)
    seen = [False] * n
    comps = []
    for root in range(n):
        if seen[root]:
            continue
        seen[root] = True
        comp = [root]
        queue = deque([root])
        while queue:
            v = queue.popleft()
            for w in g.out_adj[v] + g.in_adj[v]:
                if not seen[w]:
                    seen[w] = True
                    comp.append(w)
                    queue.append(w)
        comps.append(sorted(comp))
    return comps


def is_weakly_connected(g: Digraph) -> bool:
    return len(g) > 0 and len(weak_components(g)) == 1


def potentials(g: Digraph) -> list[int]:
    """Integer labels along a spanning forest: forward tree edges add one.

    Roots of the weak components (their smallest node) get 0.
    """
    n = len(g)
    pot: list[int | None] = [None] * n
    for root in range(n):
        if pot[root] is not None:
            continue
        pot[root] = 0
        queue = deque([root])
        while queue:
            v = queue.popleft()
            for w in g.out_adj[v]:
                if pot[w] is None:
                    pot[w] = pot[v] + 1
                    queue.append(w)
            for w in g.in_adj[v]:
                if pot[w] is None:
                    pot[w] = pot[v] - 1
                    queue.append(w)
    return pot  # type: ignore[return-value]


def edge_residuals(g: Digraph, pot: Sequence[int] | None = None) -> list[int]:
    if pot is None:
        pot = potentials(g)
    return [pot[u] + 1 - pot[v] for u, v in g.sorted_edges()]


def algebraic_length(g: Digraph) -> int | float:
    """gcd of algebraic lengths of all oriented cycles, or INFINITY.

    The residuals of non-tree edges generate the cycle lengths of their
    weak component; components combine by gcd with INFINITY as identity.
    """
    d = 0
    for r in edge_residuals(g):
        d = math.gcd(d, abs(r))
    return INFINITY if d == 0 else d


def relational_power(g: Digraph, k: int) -> Digraph:
    """Same nodes; x -> y iff there is a directed walk of length exactly k."""
    if k < 1:
        raise InvalidParameter(f"k must be positive, got {k}")
    edges = set()
    adj = g.out_adj
    for x in range(len(g)):
        cur = {x}
        for _ in range(k):
            cur = {w for v in cur for w in adj[v]}
            if not cur:
                break
        edges.update((x, y) for y in cur)
    return Digraph(g.nodes, frozenset(edges))


def disjoint_union(g: Digraph, h: Digraph) -> Digraph:
    nodes = tuple(f"0:{x}" for x in g.nodes) + tuple(f"1:{x}" for x in h.nodes)
    off = len(g)
    edges = set(g.edges) | {(u + off, v + off) for u, v in h.edges}
    return Digraph(nodes, frozenset(edges))


def _profile(g: Digraph, v: int) -> tuple[int, int, bool]:
    return (len(g.out_adj[v]), len(g.in_adj[v]), (v, v) in g.edges)


def is_isomorphic(g: Digraph, h: Digraph, budget: int = 1_000_000) -> list[int] | None:
    """Return a node bijection g -> h preserving edges both ways, or None.

    Plain backtracking with degree-profile pruning; raises BudgetExceeded
    after ``budget`` node expansions.
    """
    n = len(g)
    if n != len(h) or len(g.edges) != len(h.edges):
        return None
    gp = [_profile(g, v) for v in range(n)]
    hp = [_profile(h, v) for v in range(n)]
    if sorted(gp) != sorted(hp):
        return None

    # visit g in BFS order so that most candidates are constrained early
    order: list[int] = []
    seen = [False] * n
    for root in sorted(range(n), key=lambda v: (-(gp[v][0] + gp[v][1]), v)):
        if seen[root]:
            continue
        seen[root] = True
        queue = deque([root])
        while queue:
            v = queue.popleft()
            order.append(v)
            for w in g.out_adj[v] + g.in_adj[v]:
                if not seen[w]:
                    seen[w] = True
                    queue.append(w)

    by_profile: dict[tuple, list[int]] = {}
    for v in range(n):
        by_profile.setdefault(hp[v], []).append(v)

    mapping = [-1] * n
    used = [False] * n
    expansions = 0

    def consistent(v: int, t: int) -> bool:
        for w in g.out_adj[v]:
            if mapping[w] != -1 and (t, mapping[w]) not in h.edges:
                return False
        for w in g.in_adj[v]:
            if mapping[w] != -1 and (mapping[w], t) not in h.edges:
                return False
        # reverse direction: h-edges between t and already used images
        mapped_out = sum(1 for w in g.out_adj[v] if mapping[w] != -1)
        mapped_in = sum(1 for w in g.in_adj[v] if mapping[w] != -1)
        img_out = sum(1 for w in h.out_adj[t] if used[w])
        img_in = sum(1 for w in h.in_adj[t] if used[w])
        return mapped_out == img_out and mapped_in == img_in

    def search(pos: int) -> bool:
        nonlocal expansions
        if pos == n:
            return True
        v = order[pos]
        for t in by_profile[gp[v]]:
            if used[t]:
                continue
            expansions += 1
            if expansions > budget:
                raise BudgetExceeded(f"isomorphism search exceeded {budget} expansions", expansions)
            # a loop at v is accounted for by the profile; count it as mapped
            mapping[v] = t
            used[t] = True
            if consistent(v, t) and search(pos + 1):
                return True
            mapping[v] = -1
            used[t] = False
        return False

    if search(0):
        return mapping
    return None


def verify_isomorphism(g: Digraph, h: Digraph, mapping: Sequence[int]) -> bool:
    if len(mapping) != len(g) or len(g) != len(h) or sorted(mapping) != list(range(len(h))):
        return False
    image = {(mapping[u], mapping[v]) for u, v in g.edges}
    return image == set(h.edges)
