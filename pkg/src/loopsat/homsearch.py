"""Digraph homomorphism search.

Domains are Python ints used as bitsets over target nodes. The search
maintains arc consistency on the single binary edge constraint and picks
variables fail-first, values in increasing target index.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np

from .digraph import Digraph, INFINITY, algebraic_length, potentials
from .errors import BudgetExceeded, EdgeCapExceeded, InvalidParameter

DEFAULT_BUDGET = 1_000_000
DEFAULT_EDGE_CAP = 20


@dataclass(frozen=True)
class HomProblem:
    source: Digraph
    target: Digraph
    pins: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        for s, t in self.pins.items():
            if not 0 <= s < len(self.source):
                raise InvalidParameter(f"pin key {s} is not a source node")
            if not 0 <= t < len(self.target):
                raise InvalidParameter(f"pin value {t} is not a target node")


def _bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class _Solver:
    def __init__(self, p: HomProblem, budget: int):
        self.g = p.source
        self.h = p.target
        self.budget = budget
        self.expansions = 0
        h = self.h
        m = len(h)
        self.out_mask = [0] * m
        self.in_mask = [0] * m
        for u, v in h.edges:
            self.out_mask[u] |= 1 << v
            self.in_mask[v] |= 1 << u
        full = (1 << m) - 1
        loops = 0
        for t in range(m):
            if (t, t) in h.edges:
                loops |= 1 << t
        self.arcs = sorted(e for e in self.g.edges if e[0] != e[1])
        self.neighbors: list[list[tuple[int, int]]] = [[] for _ in self.g.nodes]
        for u, v in self.arcs:
            self.neighbors[u].append((u, v))
            self.neighbors[v].append((u, v))
        dom = [full] * len(self.g)
        for u, v in self.g.edges:
            if u == v:
                dom[u] &= loops
        for s, t in p.pins.items():
            dom[s] &= 1 << t
        self.initial = dom

    def _support_out(self, mask: int) -> int:
        acc = 0
        for t in _bits(mask):
            acc |= self.out_mask[t]
        return acc

    def _support_in(self, mask: int) -> int:
        acc = 0
        for t in _bits(mask):
            acc |= self.in_mask[t]
        return acc

    def propagate(self, dom: list[int], queue: list[tuple[int, int]]) -> bool:
        pending = set(queue)
        while queue:
            arc = queue.pop()
            pending.discard(arc)
            u, v = arc
            du, dv = dom[u], dom[v]
            nv = dv & self._support_out(du)
            nu = du & self._support_in(dv if nv == dv else nv)
            if nu == 0 or nv == 0:
                return False
            for x, new in ((u, nu), (v, nv)):
                if new != dom[x]:
                    dom[x] = new
                    for a in self.neighbors[x]:
                        if a not in pending:
                            pending.add(a)
                            queue.append(a)
        return True

    def _tick(self):
        self.expansions += 1
        if self.expansions > self.budget:
            raise BudgetExceeded(
                f"homomorphism search exceeded {self.budget} expansions", self.expansions
            )

    def search(self, dom: list[int], fail_first: bool) -> Iterator[list[int]]:
        n = len(dom)
        var = -1
        best = None
        for x in range(n):
            c = dom[x].bit_count()
            if c > 1:
                if not fail_first:
                    var = x
                    break
                if best is None or c < best:
                    best, var = c, x
        if var == -1:
            yield [d.bit_length() - 1 for d in dom]
            return
        for t in _bits(dom[var]):
            self._tick()
            child = list(dom)
            child[var] = 1 << t
            if self.propagate(child, list(self.neighbors[var])):
                yield from self.search(child, fail_first)

    def run(self, fail_first: bool) -> Iterator[list[int]]:
        dom = list(self.initial)
        if len(self.g) == 0:
            yield []
            return
        if any(d == 0 for d in dom):
            return
        if not self.propagate(dom, list(self.arcs)):
            return
        yield from self.search(dom, fail_first)


def find_hom(p: HomProblem, budget: int = DEFAULT_BUDGET) -> list[int] | None:
    """Return a homomorphism extending the pins, or None if none exists.

    Raises BudgetExceeded when the search is cut off, which is not the same
    as "none exists".
    """
    for f in _Solver(p, budget).run(fail_first=True):
        return f
    return None


def enumerate_homs(p: HomProblem, limit: int, budget: int = DEFAULT_BUDGET) -> list[list[int]]:
    """Up to ``limit`` homomorphisms in lexicographic order of their value lists."""
    out = []
    if limit <= 0:
        return out
    for f in _Solver(p, budget).run(fail_first=False):
        out.append(f)
        if len(out) >= limit:
            break
    return out


def verify_hom(g: Digraph, h: Digraph, mapping: Sequence[int] | Mapping[int, int]) -> bool:
    if isinstance(mapping, Mapping):
        if set(mapping) != set(range(len(g))):
            return False
        mapping = [mapping[i] for i in range(len(g))]
    if len(mapping) != len(g):
        return False
    if any(not 0 <= t < len(h) for t in mapping):
        return False
    return all((mapping[u], mapping[v]) in h.edges for u, v in g.edges)


def hom_to_dir_cycle(g: Digraph, n: int) -> list[int] | None:
    """A homomorphism to the directed n-cycle, read off from potentials."""
    if n < 1:
        raise InvalidParameter(f"n must be positive, got {n}")
    pot = potentials(g)
    for u, v in g.edges:
        if (pot[u] + 1 - pot[v]) % n:
            return None
    return [x % n for x in pot]


def divides_algebraic_length(g: Digraph, n: int) -> bool:
    al = algebraic_length(g)
    return al == INFINITY or al % n == 0


def edge_surjective_cycle_lengths(g: Digraph, max_n: int, edge_cap: int = DEFAULT_EDGE_CAP) -> set[int]:
    """All n <= max_n admitting a closed directed walk of length n covering every edge.

    Dynamic programming over (current node, covered-edge bitmask), one
    layer per walk length, starting from the tail of the first edge.
    """
    edges = g.sorted_edges()
    if len(edges) > edge_cap:
        raise EdgeCapExceeded(f"{len(edges)} edges exceed the cap of {edge_cap}")
    if not edges or max_n < 1:
        return set()
    E = len(edges)
    full = (1 << E) - 1
    size = 1 << E
    masks = np.arange(size, dtype=np.int64)
    start = edges[0][0]
    cur = np.zeros((len(g), size), dtype=bool)
    cur[start, 0] = True
    found = set()
    for step in range(1, max_n + 1):
        nxt = np.zeros_like(cur)
        for b, (u, v) in enumerate(edges):
            bit = 1 << b
            has = (masks & bit) != 0
            src = cur[u]
            nxt[v] |= has & (src | src[masks ^ bit])
        cur = nxt
        if cur[start, full]:
            found.add(step)
    return found


def map_to_json(mapping: Sequence[int | None]) -> str:
    return json.dumps({"map": list(mapping)})


def map_from_json(text: str | dict) -> list[int | None]:
    data = json.loads(text) if isinstance(text, str) else text
    try:
        return list(data["map"])
    except (KeyError, TypeError) as exc:
        raise InvalidParameter("homomorphism JSON needs a 'map' list") from exc


def pins_from_list(values: Sequence[int | None]) -> dict[int, int]:
    return {i: t for i, t in enumerate(values) if t is not None}
