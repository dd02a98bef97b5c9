"""Directed cycle pairs, cycle walks, clique paths and the explicit maps between them.

A family node is a sequence ``(a_1, l_1, a_2, ..., l_{k-1}, a_k)`` of letters
and separators; a separator is ``None`` (NONE) or a loop symbol index
``i >= 1`` standing for ``L<i>``. Labels interleave both with ``|`` and
write NONE as ``.``, e.g. ``0|.|1|L1|1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations
from typing import Callable, Iterator, Sequence

import numpy as np

from .digraph import Digraph
from .errors import BudgetExceeded, InvalidParameter, VerificationFailed
from .homsearch import HomProblem, find_hom, verify_hom


@dataclass(frozen=True, order=True)
class FamilyNode:
    letters: tuple[int, ...]
    separators: tuple[int | None, ...]

    def __post_init__(self):
        if len(self.separators) != len(self.letters) - 1:
            raise InvalidParameter("need exactly one separator between consecutive letters")
        used = [s for s in self.separators if s is not None]
        if len(set(used)) != len(used):
            raise InvalidParameter("loop symbols must not repeat")

    @property
    def label(self) -> str:
        parts = [str(self.letters[0])]
        for s, a in zip(self.separators, self.letters[1:]):
            parts.append("." if s is None else f"L{s}")
            parts.append(str(a))
        return "|".join(parts)

    @classmethod
    def parse(cls, label: str) -> "FamilyNode":
        parts = label.split("|")
        if len(parts) % 2 == 0:
            raise InvalidParameter(f"malformed family label {label!r}")
        letters = tuple(int(x) for x in parts[0::2])
        seps = tuple(None if x == "." else int(x[1:]) for x in parts[1::2])
        return cls(letters, seps)

    def prefix(self) -> "FamilyNode":
        return FamilyNode(self.letters[:-1], self.separators[:-1])

    def suffix(self) -> "FamilyNode":
        return FamilyNode(self.letters[1:], self.separators[1:])


def _family_digraph(nodes: list[FamilyNode], longer: Iterator[FamilyNode]) -> Digraph:
    labels = [x.label for x in nodes]
    index = {x: i for i, x in enumerate(nodes)}
    edges = set()
    for w in longer:
        edges.add((index[w.prefix()], index[w.suffix()]))
    return Digraph(tuple(labels), frozenset(edges))


# -- DCP ---------------------------------------------------------------------

def dcp_labels(a: int, b: int) -> list[str]:
    return [f"A{i}" for i in range(a)] + [f"B{j}" for j in range(1, b)]


def dcp(a: int, b: int) -> Digraph:
    """Two directed cycles of lengths a and b glued at A0 = B0."""
    if a < 1 or b < 1:
        raise InvalidParameter(f"cycle lengths must be positive, got ({a}, {b})")

    def bnode(j):
        return 0 if j % b == 0 else a + j - 1

    edges = {(i, (i + 1) % a) for i in range(a)}
    edges |= {(bnode(j), bnode(j + 1)) for j in range(b)}
    return Digraph(tuple(dcp_labels(a, b)), frozenset(edges))


# -- CCLW --------------------------------------------------------------------

def _cclw_walks(k: int, l: int, c: int) -> Iterator[FamilyNode]:
    def extend(letters, seps, free):
        if len(letters) == k:
            yield FamilyNode(tuple(letters), tuple(seps))
            return
        a = letters[-1]
        for b in sorted({(a - 1) % c, (a + 1) % c}):
            yield from extend(letters + [b], seps + [None], free)
        for s in free:
            yield from extend(letters + [a], seps + [s], tuple(x for x in free if x != s))

    for a in range(c):
        yield from extend([a], [], tuple(range(1, l + 1)))


def cclw_nodes(k: int, l: int, c: int) -> list[FamilyNode]:
    _check_kc(k, l, c)
    return sorted(_cclw_walks(k, l, c))


def cclw(k: int, l: int, c: int) -> Digraph:
    """Cycle walks of k letters on the symmetric c-cycle with l loop symbols."""
    nodes = cclw_nodes(k, l, c)
    return _family_digraph(nodes, _cclw_walks(k + 1, l, c))


def is_cclw_node(x: FamilyNode, l: int, c: int) -> bool:
    if any(not 0 <= a < c for a in x.letters):
        return False
    for s, a, b in zip(x.separators, x.letters, x.letters[1:]):
        if s is None:
            if b not in ((a - 1) % c, (a + 1) % c):
                return False
        elif not 1 <= s <= l or a != b:
            return False
    return True


# -- CLQP --------------------------------------------------------------------

def _clqp_walks(k: int, l: int, s: int) -> Iterator[FamilyNode]:
    # NONE forces a letter unseen so far; a loop symbol repeats the last letter
    def extend(letters, seps, free):
        if len(letters) == k:
            yield FamilyNode(tuple(letters), tuple(seps))
            return
        seen = set(letters)
        for b in range(s):
            if b not in seen:
                yield from extend(letters + [b], seps + [None], free)
        for x in free:
            yield from extend(letters + [letters[-1]], seps + [x], tuple(y for y in free if y != x))

    for a in range(s):
        yield from extend([a], [], tuple(range(1, l + 1)))


def clqp_nodes(k: int, l: int, s: int) -> list[FamilyNode]:
    _check_kc(k, l, s)
    return sorted(_clqp_walks(k, l, s))


def clqp(k: int, l: int, s: int) -> Digraph:
    """Clique paths: letters repeat exactly when joined by loop symbols."""
    nodes = clqp_nodes(k, l, s)
    return _family_digraph(nodes, _clqp_walks(k + 1, l, s))


def is_clqp_node(x: FamilyNode, l: int, s: int) -> bool:
    if any(not 0 <= a < s for a in x.letters):
        return False
    if any(sep is not None and not 1 <= sep <= l for sep in x.separators):
        return False
    k = len(x.letters)
    for i in range(k):
        for j in range(i + 1, k):
            joined = all(sep is not None for sep in x.separators[i:j])
            if (x.letters[i] == x.letters[j]) != joined:
                return False
    return True


def _check_kc(k, l, c):
    if k < 1 or c < 1 or l < 0:
        raise InvalidParameter(f"need k >= 1, l >= 0 and a positive alphabet, got ({k}, {l}, {c})")


# -- witness maps -------------------------------------------------------------

def _map_between(g: Digraph, h: Digraph, image: Callable[[FamilyNode], FamilyNode]) -> list[int]:
    out = []
    for label in g.nodes:
        target = image(FamilyNode.parse(label)).label
        if target not in h.index:
            raise VerificationFailed(f"{label} is sent to {target}, which is not a node", (label, target))
        out.append(h.index[target])
    return out


def _first_bad_edge(g: Digraph, h: Digraph, mapping: Sequence[int]):
    for u, v in g.sorted_edges():
        if (mapping[u], mapping[v]) not in h.edges:
            return g.nodes[u], g.nodes[v]
    return None


def raise_image(x: FamilyNode) -> FamilyNode:
    """(a_1, ., a_2, ..., a_k) -> (0, L(a_1+1), 0, ..., L(a_k+1), 0)."""
    return FamilyNode((0,) * (len(x.letters) + 1), tuple(a + 1 for a in x.letters))


def clqp_raise_iso(k: int, s: int) -> tuple[Digraph, Digraph, list[int]]:
    """Verified isomorphism CLQP(k,0,s) -> CLQP(k+1,s,1)."""
    if k < 1 or s < 1:
        raise InvalidParameter("k and s must be positive")
    g = clqp(k, 0, s)
    h = clqp(k + 1, s, 1)
    mapping = _map_between(g, h, raise_image)
    ok = (
        len(g) == len(h)
        and sorted(mapping) == list(range(len(h)))
        and {(mapping[u], mapping[v]) for u, v in g.edges} == set(h.edges)
    )
    if not ok:
        raise VerificationFailed("raise map is not an isomorphism", _first_bad_edge(g, h, mapping))
    return g, h, mapping


@dataclass
class ReduceWitness:
    """Witness nodes of the pp-constructed digraph and the checked pair maps.

    ``pairs`` lists the ordered pairs (p, q) for which the edge p -> q was
    verified; ``source`` is the digraph with the extra loop symbol and
    ``target`` the one the maps land in.
    """

    source: Digraph
    base: Digraph
    target: Digraph
    letter_maps: list[Callable[[int], int]]
    pairs: list[tuple[int, int]]
    edges_checked: int


def _split_image(x: FamilyNode, extra: int, before, after) -> FamilyNode:
    i = x.separators.index(extra)
    letters = tuple(before(a) for a in x.letters[: i + 1]) + tuple(after(a) for a in x.letters[i + 1:])
    seps = x.separators[:i] + (None,) + x.separators[i + 1:]
    return FamilyNode(letters, seps)


def _check_pp_edge(source: Digraph, target: Digraph, extra: int, before, after) -> int:
    """Check that maps ``before`` -> ``after`` form an edge of the pp-constructed digraph.

    Nodes without the extra loop symbol go through ``before`` when they are
    the tail of a crossing edge and through ``after`` when they are the head;
    nodes with it go through the split map. Returns the number of edges checked.
    """
    tidx = target.index
    parsed = [FamilyNode.parse(x) for x in source.nodes]
    in_v = [extra in x.separators for x in parsed]

    def img(i, which):
        x = parsed[i]
        if in_v[i]:
            y = _split_image(x, extra, before, after)
        else:
            f = before if which == "before" else after
            y = FamilyNode(tuple(f(a) for a in x.letters), x.separators)
        if y.label not in tidx:
            raise VerificationFailed(f"{x.label} is sent to non-node {y.label}", (x.label, y.label))
        return tidx[y.label]

    count = 0
    for u, v in source.sorted_edges():
        if not in_v[u] and not in_v[v]:
            continue
        tu = img(u, "before")
        tv = img(v, "after")
        if (tu, tv) not in target.edges:
            raise VerificationFailed(
                f"edge {source.nodes[u]} -> {source.nodes[v]} is not preserved",
                (source.nodes[u], source.nodes[v]),
            )
        count += 1
    return count


def _check_base_hom(base: Digraph, target: Digraph, f) -> int:
    mapping = _map_between(base, target, lambda x: FamilyNode(tuple(f(a) for a in x.letters), x.separators))
    bad = _first_bad_edge(base, target, mapping)
    if bad is not None:
        raise VerificationFailed(f"letter map is not a homomorphism at {bad}", bad)
    return len(base.edges)


def clqp_reduce_witness(k: int, l: int, s: int) -> ReduceWitness:
    """Triangle u_1, u_2, u_3 in the digraph pp-constructed from CLQP(k,l-1,3s).

    u_p embeds the s-letter alphabet into block p of the 3s-letter one.
    """
    if k < 2 or l < 1 or s < 1:
        raise InvalidParameter("need k >= 2, l >= 1, s >= 1")
    source = clqp(k, l, s)
    base = clqp(k, l - 1, s)
    target = clqp(k, l - 1, 3 * s)
    maps = [(lambda a, p=p: a + p * s) for p in range(3)]
    checked = sum(_check_base_hom(base, target, f) for f in maps)
    pairs = []
    for p, q in permutations(range(3), 2):
        checked += _check_pp_edge(source, target, l, maps[p], maps[q])
        pairs.append((p, q))
    return ReduceWitness(source, base, target, maps, pairs, checked)


def cclw_reduce_witness(k: int, l: int, c: int) -> ReduceWitness:
    """Symmetric c-cycle of rotations u_i(x) = i + x in the digraph pp-constructed from CCLW(k,l-1,c)."""
    if k < 2 or l < 1 or c < 3 or c % 2 == 0:
        raise InvalidParameter("need k >= 2, l >= 1 and odd c >= 3")
    source = cclw(k, l, c)
    base = cclw(k, l - 1, c)
    maps = [(lambda a, i=i: (a + i) % c) for i in range(c)]
    checked = sum(_check_base_hom(base, base, f) for f in maps)
    pairs = []
    for x in range(c):
        for y in ((x + 1) % c, (x - 1) % c):
            checked += _check_pp_edge(source, base, l, maps[x], maps[y])
            pairs.append((x, y))
    return ReduceWitness(source, base, base, maps, pairs, checked)


# -- CCLW -> DCP ----------------------------------------------------------------

DEFAULT_WINDOW_CAP = 1 << 24
_CHUNK = 1 << 18


@dataclass
class CclwDcpWitness:
    """The local-rule map CCLW(2k+1,0,c) -> DCP(2,c), k = 3c.

    ``images[w]`` is the DCP node index of window ``w``, where a window is
    encoded as ``start_letter << 2k | steps`` and bit t of ``steps`` is set
    when step t goes up (+1 mod c).
    """

    c: int
    k: int
    images: np.ndarray
    walks_checked: int

    @property
    def window(self) -> int:
        return 2 * self.k + 1

    def encode(self, letters: Sequence[int]) -> int:
        c, steps = self.c, 0
        for t, (a, b) in enumerate(zip(letters, letters[1:])):
            if b == (a + 1) % c:
                steps |= 1 << t
            elif b != (a - 1) % c:
                raise InvalidParameter(f"{letters} is not a walk on the {c}-cycle")
        return (letters[0] << (2 * self.k)) | steps

    def decode(self, w: int, length: int | None = None) -> list[int]:
        length = self.window if length is None else length
        a = w >> (length - 1)
        out = [a]
        for t in range(length - 1):
            a = (a + (1 if (w >> t) & 1 else -1)) % self.c
            out.append(a)
        return out

    def image(self, node: FamilyNode | Sequence[int]) -> str:
        letters = node.letters if isinstance(node, FamilyNode) else node
        return dcp_labels(2, self.c)[int(self.images[self.encode(list(letters))])]

    def samples(self, count: int = 10) -> list[dict]:
        n = len(self.images)
        idx = sorted({int(i) for i in np.linspace(0, n - 1, num=min(count, n))})
        labels = dcp_labels(2, self.c)
        out = []
        for w in idx:
            letters = self.decode(w)
            node = FamilyNode(tuple(letters), (None,) * (len(letters) - 1))
            out.append({"node": node.label, "image": labels[int(self.images[w])]})
        return out


def _window_letters(c: int, start: np.ndarray, steps: np.ndarray, length: int) -> np.ndarray:
    out = np.empty((len(start), length), dtype=np.int16)
    out[:, 0] = start
    for t in range(length - 1):
        up = ((steps >> t) & 1).astype(np.int16)
        out[:, t + 1] = (out[:, t] + 2 * up - 1) % c
    return out


def _center_images(letters: np.ndarray, c: int) -> np.ndarray:
    """DCP(2,c) node index of the center of every window row.

    Indices: A0 = 0, A1 = 1, B_j = 1 + j.
    """
    n, length = letters.shape
    center = length // 2
    zero = letters == 0
    # zeros in [p-c+1, p+c-1] via prefix sums
    zc = np.concatenate([np.zeros((n, 1), dtype=np.int32), np.cumsum(zero, axis=1, dtype=np.int32)], axis=1)
    in_s = np.zeros((n, length), dtype=bool)
    lo_ok, hi_ok = c - 1, length - c  # rule 2 needs radius c-1 inside the window
    for p in range(length):
        rule = zero[:, p].copy()
        if lo_ok <= p <= hi_ok:
            near_zero = zc[:, p + c] - zc[:, p - c + 1]
            rule |= (letters[:, p] % 2 == 0) & (near_zero == 0)
        in_s[:, p] = rule
    reach = 2 * c
    if center - reach < lo_ok or center + reach > hi_ok:
        raise InvalidParameter("window too small for the gap bound")
    left = np.full(n, -1, dtype=np.int32)
    for p in range(center - reach, center + 1):
        left = np.where(in_s[:, p], p, left)
    right = np.full(n, -1, dtype=np.int32)
    for p in range(center + reach, center - 1, -1):
        right = np.where(in_s[:, p], p, right)
    if (left < 0).any() or (right < 0).any():
        bad = int(np.nonzero((left < 0) | (right < 0))[0][0])
        raise VerificationFailed("gap between S positions exceeds 2c", letters[bad].tolist())
    gap = right - left
    t = center - left
    out = np.where(t % 2 == 0, 0, 1).astype(np.int16)  # alternation A0, A1, ...
    odd = (gap % 2 == 1) & (t > 0)
    if (odd & (gap < c)).any():
        bad = int(np.nonzero(odd & (gap < c))[0][0])
        raise VerificationFailed("odd gap shorter than c", letters[bad].tolist())
    in_b = odd & (t < c)
    out = np.where(in_b, 1 + t, out)
    after_b = odd & (t >= c)
    out = np.where(after_b, (t - c) % 2, out)
    out = np.where(t == 0, 0, out)
    return out.astype(np.int16)


def cclw_to_dcp_hom(c: int, window_cap: int = DEFAULT_WINDOW_CAP) -> CclwDcpWitness:
    """Build the local-rule map CCLW(6c+1,0,c) -> DCP(2,c) and verify it on every edge.

    Edges are the (6c+2)-letter walks; they are streamed in chunks and
    each checked against the DCP edge relation.
    """
    if c < 3 or c % 2 == 0:
        raise InvalidParameter("c must be odd and at least 3")
    k = 3 * c
    width = 2 * k  # steps in a window
    n_windows = c << width
    if n_windows > window_cap:
        raise BudgetExceeded(f"{n_windows} windows exceed the cap of {window_cap}", n_windows)
    images = np.empty(n_windows, dtype=np.int16)
    for lo in range(0, n_windows, _CHUNK):
        w = np.arange(lo, min(lo + _CHUNK, n_windows), dtype=np.int64)
        letters = _window_letters(c, w >> width, w & ((1 << width) - 1), width + 1)
        images[lo:lo + len(w)] = _center_images(letters, c)

    target = dcp(2, c)
    adj = np.zeros((len(target), len(target)), dtype=bool)
    for u, v in target.edges:
        adj[u, v] = True

    n_walks = c << (width + 1)
    mask = (1 << width) - 1
    for lo in range(0, n_walks, _CHUNK):
        w = np.arange(lo, min(lo + _CHUNK, n_walks), dtype=np.int64)
        a1 = w >> (width + 1)
        steps = w & ((1 << (width + 1)) - 1)
        a2 = (a1 + 2 * (steps & 1) - 1) % c
        head = images[(a1 << width) | (steps & mask)]
        tail = images[(a2 << width) | (steps >> 1)]
        ok = adj[head, tail]
        if not ok.all():
            bad = int(w[np.nonzero(~ok)[0][0]])
            a, walk = bad >> (width + 1), [bad >> (width + 1)]
            for t in range(width + 1):
                a = (a + (1 if (bad >> t) & 1 else -1)) % c
                walk.append(a)
            raise VerificationFailed("local-rule map breaks an edge", walk)
    return CclwDcpWitness(c, k, images, n_walks)


def search_cclw_dcp_k(c: int, max_k: int, budget: int = 1_000_000) -> int | None:
    """Smallest k <= max_k with a homomorphism CCLW(2k+1,0,c) -> DCP(2,c), by plain search."""
    target = dcp(2, c)
    for k in range(1, max_k + 1):
        if find_hom(HomProblem(cclw(2 * k + 1, 0, c), target), budget=budget) is not None:
            return k
    return None


# -- misc ------------------------------------------------------------------

def clqp_node_count(k: int, s: int) -> int:
    return math.perm(s, k) if k <= s else 0


def cclw_node_count(k: int, c: int) -> int:
    return c * 2 ** (k - 1)


def embed_clqp_in_cclw(k: int, l: int, c: int) -> tuple[Digraph, Digraph, list[int]]:
    """Identity embedding of CLQP(k,l,1) into CCLW(k,l,c), checked to be induced."""
    small = clqp(k, l, 1)
    big = cclw(k, l, c)
    mapping = [big.index[x] for x in small.nodes]
    pos = {t: i for i, t in enumerate(mapping)}
    induced = {(pos[u], pos[v]) for u, v in big.edges if u in pos and v in pos}
    if induced != set(small.edges) or not verify_hom(small, big, mapping):
        raise VerificationFailed("CLQP(k,l,1) is not an induced subdigraph of CCLW(k,l,c)")
    return small, big, mapping
