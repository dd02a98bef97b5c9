"""Finite algebras, terms, and traced subpower closure.

Elements of a power A^m are stored bit-sliced: one uint64 mask per
universe value marking the coordinates holding that value. Coordinates
whose generator columns coincide are merged, since every derived element
agrees on them too. Operations act on the masks through their tables.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from .errors import AlgebraError, CapExceeded

DEFAULT_MAX_ELEMENTS = 100_000
DEFAULT_MAX_APPLICATIONS = 100_000_000
_BATCH_WORDS = 1 << 22


# -- algebras ----------------------------------------------------------------

@dataclass(frozen=True)
class Operation:
    name: str
    arity: int
    table: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "table", tuple(int(x) for x in self.table))


@dataclass(frozen=True)
class FiniteAlgebra:
    size: int
    ops: tuple[Operation, ...] = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))

    def op(self, name: str) -> Operation:
        for o in self.ops:
            if o.name == name:
                return o
        raise AlgebraError(f"unknown operation {name!r}")

    def apply(self, name: str, *args: int) -> int:
        o = self.op(name)
        if len(args) != o.arity:
            raise AlgebraError(f"{name} takes {o.arity} arguments, got {len(args)}")
        idx = 0
        for a in args:
            idx = idx * self.size + a
        return o.table[idx]

    def check(self) -> "FiniteAlgebra":
        report = validate_algebra(self)
        if not report.ok:
            raise AlgebraError("; ".join(report.errors))
        return self

    @classmethod
    def from_function(cls, size: int, ops: Mapping[str, tuple[int, Callable[..., int]]], name: str = "") -> "FiniteAlgebra":
        built = []
        for op_name, (arity, fn) in ops.items():
            table = [fn(*args) for args in itertools.product(range(size), repeat=arity)]
            built.append(Operation(op_name, arity, tuple(table)))
        return cls(size, tuple(built), name)

    def to_dict(self) -> dict:
        return {
            "size": self.size,
            "ops": [{"name": o.name, "arity": o.arity, "table": list(o.table)} for o in self.ops],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict, name: str = "") -> "FiniteAlgebra":
        try:
            ops = tuple(Operation(o["name"], int(o["arity"]), tuple(o["table"])) for o in data["ops"])
            alg = cls(int(data["size"]), ops, name)
        except (KeyError, TypeError, ValueError) as exc:
            raise AlgebraError(f"malformed algebra JSON: {exc}") from exc
        return alg.check()

    @classmethod
    def from_json(cls, text: str, name: str = "") -> "FiniteAlgebra":
        return cls.from_dict(json.loads(text), name)


@dataclass
class AlgebraReport:
    ok: bool
    errors: list[str]
    idempotent: dict[str, bool]


def validate_algebra(a: FiniteAlgebra) -> AlgebraReport:
    errors = []
    idem = {}
    if a.size < 1:
        errors.append(f"size must be positive, got {a.size}")
    names = [o.name for o in a.ops]
    if len(set(names)) != len(names):
        errors.append("operation names must be distinct")
    for o in a.ops:
        if o.arity < 0:
            errors.append(f"{o.name}: negative arity")
            continue
        want = a.size ** o.arity
        if len(o.table) != want:
            errors.append(f"{o.name}: table has {len(o.table)} entries, expected {want}")
            continue
        if any(not 0 <= x < a.size for x in o.table):
            errors.append(f"{o.name}: table value out of range 0..{a.size - 1}")
            continue
        if o.arity == 0:
            idem[o.name] = a.size == 1
        else:
            step = sum(a.size ** i for i in range(o.arity))
            idem[o.name] = all(o.table[x * step] == x for x in range(a.size))
    return AlgebraReport(not errors, errors, idem)


# -- terms --------------------------------------------------------------------

@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class App:
    op: str
    args: tuple["Term", ...] = field(default_factory=tuple)

    def __str__(self):
        return f"{self.op}({', '.join(str(x) for x in self.args)})"


Term = Union[Var, App]


def term_variables(t: Term) -> list[str]:
    seen: dict[str, None] = {}
    memo = set()

    def walk(x):
        if id(x) in memo:
            return
        memo.add(id(x))
        if isinstance(x, Var):
            seen.setdefault(x.name)
        else:
            for y in x.args:
                walk(y)

    walk(t)
    return list(seen)


def term_depth(t: Term) -> int:
    memo: dict[int, int] = {}

    def walk(x):
        if isinstance(x, Var):
            return 0
        if id(x) not in memo:
            memo[id(x)] = 1 + max((walk(y) for y in x.args), default=0)
        return memo[id(x)]

    return walk(t)


def substitute(t: Term, env: Mapping[str, Term]) -> Term:
    memo: dict[int, Term] = {}

    def walk(x):
        if isinstance(x, Var):
            return env.get(x.name, x)
        if id(x) not in memo:
            memo[id(x)] = App(x.op, tuple(walk(y) for y in x.args))
        return memo[id(x)]

    return walk(t)


def term_to_dict(t: Term) -> dict:
    if isinstance(t, Var):
        return {"var": t.name}
    return {"op": t.op, "args": [term_to_dict(x) for x in t.args]}


def term_from_dict(d: dict) -> Term:
    if "var" in d:
        return Var(str(d["var"]))
    try:
        return App(str(d["op"]), tuple(term_from_dict(x) for x in d["args"]))
    except (KeyError, TypeError) as exc:
        raise AlgebraError(f"malformed term JSON: {d!r}") from exc


def eval_term(a: FiniteAlgebra, t: Term, env: Mapping[str, object]):
    """Evaluate bottom-up through the tables.

    Values in ``env`` may be ints or equally shaped integer numpy arrays,
    in which case evaluation is coordinatewise.
    """
    tables = {o.name: (o.arity, np.asarray(o.table, dtype=np.int64)) for o in a.ops}
    memo: dict[int, object] = {}

    def walk(x):
        if isinstance(x, Var):
            if x.name not in env:
                raise AlgebraError(f"unbound variable {x.name!r}")
            return env[x.name]
        key = id(x)
        if key in memo:
            return memo[key]
        if x.op not in tables:
            raise AlgebraError(f"unknown operation {x.op!r}")
        arity, table = tables[x.op]
        if arity != len(x.args):
            raise AlgebraError(f"{x.op} takes {arity} arguments, got {len(x.args)}")
        idx = 0
        for y in x.args:
            idx = idx * a.size + np.asarray(walk(y), dtype=np.int64)
        val = table[idx]
        memo[key] = val
        return val

    out = walk(t)
    if isinstance(out, np.ndarray) and out.ndim == 0:
        return int(out)
    if isinstance(out, (np.integer,)):
        return int(out)
    return out


# -- traced subpower closure ---------------------------------------------------

@dataclass(frozen=True)
class Generator:
    index: int


@dataclass(frozen=True)
class Derived:
    op: str
    args: tuple[int, ...]


Provenance = Union[Generator, Derived]


class SubpowerTrace:
    """Elements of a generated subuniverse of A^m with how each was produced."""

    def __init__(self, algebra: FiniteAlgebra, m: int, generators: Sequence[Sequence[int]]):
        self.algebra = algebra
        self.m = m
        n = algebra.size
        gens = np.asarray(generators, dtype=np.int64).reshape(len(generators), m)
        if gens.size and (gens.min() < 0 or gens.max() >= n):
            raise AlgebraError("generator entry out of range")
        if len(generators) and m:
            _, first, inverse = np.unique(gens.T, axis=0, return_index=True, return_inverse=True)
            order = np.argsort(first)
            rank = np.empty_like(order)
            rank[order] = np.arange(len(order))
            self._col_of = rank[np.ravel(inverse)]
            self._cols = np.sort(first)
        else:
            self._col_of = np.zeros(m, dtype=np.int64)
            self._cols = np.arange(min(m, 1))
        self.width = len(self._cols)
        self.words = max(1, (self.width + 63) // 64)
        self._store = np.zeros((16, n, self.words), dtype=np.uint64)
        self._count = 0
        self.provenance: list[Provenance] = []
        self._buckets: dict[int, list[int]] = {}
        self._keys: np.ndarray | None = None
        self._key_idx: np.ndarray | None = None
        rng = np.random.default_rng(20180721)
        self._hash_w = rng.integers(1, 2**63, size=n * self.words, dtype=np.uint64) | np.uint64(1)
        self.generators = gens

    def __len__(self):
        return self._count

    @property
    def packed(self) -> np.ndarray:
        return self._store[: self._count]

    def encode(self, rows: np.ndarray) -> np.ndarray:
        rows = np.atleast_2d(np.asarray(rows, dtype=np.int64))
        comp = rows[:, self._cols]
        n = self.algebra.size
        count = rows.shape[0]
        pad = np.full((count, self.words * 64), -1, dtype=np.int64)
        pad[:, : self.width] = comp
        out = np.empty((count, n, self.words), dtype=np.uint64)
        for v in range(n):
            bits = np.packbits((pad == v).reshape(count, self.words, 64), axis=2, bitorder="little")
            out[:, v, :] = bits.reshape(count, self.words * 8).view(np.uint64)
        return out

    def _decode_packed(self, packed: np.ndarray) -> np.ndarray:
        n = self.algebra.size
        bits = np.unpackbits(packed.reshape(n, self.words).view(np.uint8), bitorder="little")
        bits = bits.reshape(n, self.words * 64)[:, : self.width]
        comp = np.argmax(bits, axis=0)
        return comp[self._col_of]

    def element_array(self, i: int) -> np.ndarray:
        if not 0 <= i < self._count:
            raise IndexError(i)
        return self._decode_packed(self._store[i])

    def element(self, i: int) -> tuple[int, ...]:
        return tuple(int(x) for x in self.element_array(i))

    @property
    def elements(self) -> list[tuple[int, ...]]:
        return [self.element(i) for i in range(self._count)]

    def _hash(self, packed: np.ndarray) -> np.ndarray:
        flat = packed.reshape(len(packed), -1)
        return (flat * self._hash_w).sum(axis=1, dtype=np.uint64)

    def _sorted_keys(self):
        if self._keys is None:
            keys = np.fromiter(self._buckets.keys(), dtype=np.uint64, count=len(self._buckets))
            idx = np.fromiter((b[0] for b in self._buckets.values()), dtype=np.int64, count=len(self._buckets))
            order = np.argsort(keys)
            self._keys, self._key_idx = keys[order], idx[order]
        return self._keys, self._key_idx

    def _lookup_packed(self, row: np.ndarray, h: int) -> int:
        for i in self._buckets.get(h, ()):
            if np.array_equal(self._store[i], row):
                return i
        return -1

    def _push(self, row: np.ndarray, h: int, prov: Provenance) -> int:
        if self._count == len(self._store):
            grown = np.zeros((2 * len(self._store),) + self._store.shape[1:], dtype=np.uint64)
            grown[: self._count] = self._store[: self._count]
            self._store = grown
        i = self._count
        self._store[i] = row
        self._count += 1
        self.provenance.append(prov)
        self._buckets.setdefault(h, []).append(i)
        self._keys = None
        return i

    def index_of(self, element: Sequence[int]) -> int | None:
        row = np.asarray(element, dtype=np.int64)
        if row.shape != (self.m,):
            return None
        # coordinates merged by the column map must agree
        comp = row[self._cols]
        if not np.array_equal(comp[self._col_of], row):
            return None
        packed = self.encode(row[None, :])[0]
        i = self._lookup_packed(packed, int(self._hash(packed[None])[0]))
        return None if i < 0 else i

    def absorb(self, batch: np.ndarray, provenance_of: Callable[[int], Provenance]) -> list[int]:
        """Intern a batch of packed rows; return indices of the new elements in batch order."""
        if not len(batch):
            return []
        hashes = self._hash(batch)
        keys, key_idx = self._sorted_keys()
        if len(keys):
            pos = np.searchsorted(keys, hashes)
            pos[pos >= len(keys)] = 0
            cand = key_idx[pos]
            known = keys[pos] == hashes
            if known.any():
                known[known] = (batch[known] == self._store[cand[known]]).all(axis=(1, 2))
        else:
            known = np.zeros(len(batch), dtype=bool)
        fresh = []
        for r in np.nonzero(~known)[0]:
            row = batch[r]
            h = int(hashes[r])
            if self._lookup_packed(row, h) >= 0:
                continue
            fresh.append(self._push(row, h, provenance_of(int(r))))
        return fresh

    def replay(self, i: int) -> np.ndarray:
        """Recompute element i from its provenance (coordinatewise table lookups)."""
        p = self.provenance[i]
        if isinstance(p, Generator):
            return self.generators[p.index].copy()
        o = self.algebra.op(p.op)
        table = np.asarray(o.table, dtype=np.int64)
        idx = np.zeros(self.m, dtype=np.int64)
        for j in p.args:
            idx = idx * self.algebra.size + self.element_array(j)
        return table[idx]


@dataclass
class ClosureResult:
    trace: SubpowerTrace
    status: str  # "closed" | "witness" | "undecided"
    witness: int | None = None
    applications: int = 0
    reason: str = ""

    @property
    def decided(self) -> bool:
        return self.status != "undecided"


class _OpKernel:
    """Bit-sliced coordinatewise application of one operation."""

    def __init__(self, op: Operation, n: int):
        self.op = op
        self.n = n
        k = op.arity
        table = np.asarray(op.table, dtype=np.int64)
        self.table = table
        if k >= 1:
            res = table.reshape(n ** (k - 1), n)
            self.sel = [[np.nonzero(res[:, last] == v)[0] for v in range(n)] for last in range(n)]

    def prefix_masks(self, prefix: Sequence[np.ndarray], words: int) -> np.ndarray:
        pm = np.full((1, words), np.uint64(0xFFFFFFFFFFFFFFFF), dtype=np.uint64)
        for e in prefix:
            pm = (pm[:, None, :] & e[None, :, :]).reshape(-1, words)
        return pm

    def apply_last_two(self, pm: np.ndarray, eb: np.ndarray, ec: np.ndarray) -> np.ndarray:
        """Rows for all (b, c) in eb x ec after a fixed prefix; shape (|B||C|, n, words)."""
        n = self.n
        words = ec.shape[2]
        nb = eb.shape[0]
        m = (pm[None, :, None, :] & eb[:, None, :, :]).reshape(nb, -1, words)
        u = np.zeros((nb, n, n, words), dtype=np.uint64)
        for last in range(n):
            for v in range(n):
                s = self.sel[last][v]
                if len(s):
                    u[:, last, v] = np.bitwise_or.reduce(m[:, s], axis=1)
        out = np.zeros((nb, ec.shape[0], n, words), dtype=np.uint64)
        for last in range(n):
            out |= u[:, None, last, :, :] & ec[None, :, last, None, :]
        return out.reshape(-1, n, words)

    def apply_unary(self, ec: np.ndarray) -> np.ndarray:
        n = self.n
        out = np.zeros_like(ec)
        for v1 in range(n):
            out[:, self.table[v1], :] |= ec[:, v1, :]
        return out


def subpower_closure(
    a: FiniteAlgebra,
    m: int,
    generators: Sequence[Sequence[int]],
    stop: Callable[[tuple[int, ...]], bool] | None = None,
    max_elements: int = DEFAULT_MAX_ELEMENTS,
    max_applications: int = DEFAULT_MAX_APPLICATIONS,
) -> ClosureResult:
    """Breadth-first closure of ``generators`` in A^m under all basic operations.

    Each round applies every operation to argument tuples holding at least
    one element from the previous round. ``stop`` is tested on every new
    element; the first hit ends the closure with that element as witness.
    """
    a.check()
    trace = SubpowerTrace(a, m, generators)
    if len(generators):
        packed = trace.encode(trace.generators)
        for i, row in enumerate(packed):
            h = int(trace._hash(row[None])[0])
            if trace._lookup_packed(row, h) < 0:
                trace._push(row, h, Generator(i))
    apps = 0

    def fired(new: list[int]) -> int | None:
        if stop is None:
            return None
        for i in new:
            if stop(trace.element(i)):
                return i
        return None

    hit = fired(list(range(len(trace))))
    if hit is not None:
        return ClosureResult(trace, "witness", hit, apps)

    n = a.size
    words = trace.words
    kernels = [_OpKernel(o, n) for o in a.ops]
    const_done = False
    old = 0
    while True:
        f1 = len(trace)
        if f1 == old and const_done:
            return ClosureResult(trace, "closed", None, apps)
        store = trace.packed.copy()
        for ker in kernels:
            k = ker.op.arity
            if k == 0:
                if const_done:
                    continue
                row = np.zeros((1, n, words), dtype=np.uint64)
                full = trace.encode(np.full((1, m), ker.table[0]))
                row[:] = full
                apps += 1
                new = trace.absorb(row, lambda r, name=ker.op.name: Derived(name, ()))
                hit = fired(new)
                if hit is not None:
                    return ClosureResult(trace, "witness", hit, apps)
                continue
            for j in range(k):
                ranges = [range(0, old)] * j + [range(old, f1)] + [range(0, f1)] * (k - j - 1)
                if any(len(r) == 0 for r in ranges):
                    continue
                rc = ranges[-1]
                ec = store[rc.start: rc.stop]
                if k == 1:
                    batches = [((), range(0, 0), rc)]
                else:
                    rb = ranges[-2]
                    step = max(1, _BATCH_WORDS // max(1, len(rc) * n * words))
                    batches = []
                    for prefix in itertools.product(*ranges[:-2]):
                        for lo in range(rb.start, rb.stop, step):
                            batches.append((prefix, range(lo, min(lo + step, rb.stop)), rc))
                for prefix, rb, rc in batches:
                    size = (len(rb) if k > 1 else 1) * len(rc)
                    if apps + size > max_applications:
                        return ClosureResult(trace, "undecided", None, apps,
                                             f"application cap {max_applications} reached")
                    apps += size
                    if k == 1:
                        rows = ker.apply_unary(ec)
                    else:
                        pm = ker.prefix_masks([store[i] for i in prefix], words)
                        rows = ker.apply_last_two(pm, store[rb.start: rb.stop], ec)

                    def prov(r, prefix=prefix, rb=rb, rc=rc, name=ker.op.name, k=k):
                        if k == 1:
                            return Derived(name, (rc.start + r,))
                        b, c = divmod(r, len(rc))
                        return Derived(name, tuple(prefix) + (rb.start + b, rc.start + c))

                    new = trace.absorb(rows, prov)
                    hit = fired(new)
                    if hit is not None:
                        return ClosureResult(trace, "witness", hit, apps)
                    if len(trace) > max_elements:
                        return ClosureResult(trace, "undecided", None, apps,
                                             f"element cap {max_elements} reached")
        const_done = True
        old = f1


def extract_term(trace: SubpowerTrace, index: int, names: Sequence[str]) -> Term:
    """Unwind provenance into a term over generator names (shared subterms are reused)."""
    memo: dict[int, Term] = {}
    stack = [index]
    while stack:
        i = stack[-1]
        if i in memo:
            stack.pop()
            continue
        p = trace.provenance[i]
        if isinstance(p, Generator):
            memo[i] = Var(names[p.index])
            stack.pop()
            continue
        todo = [j for j in p.args if j not in memo]
        if todo:
            stack.extend(todo)
            continue
        memo[i] = App(p.op, tuple(memo[j] for j in p.args))
        stack.pop()
    return memo[index]


def assignments(n: int, g: int) -> np.ndarray:
    """All of A^g in row-major order, shape (n**g, g)."""
    if g == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.indices((n,) * g).reshape(g, -1).T
    return grids.astype(np.int64)


def projections(n: int, g: int) -> np.ndarray:
    """The g projections A^g -> A as rows of length n**g."""
    return assignments(n, g).T.copy()


def free_algebra(
    a: FiniteAlgebra,
    generators: Sequence[str],
    cap: int = DEFAULT_MAX_ELEMENTS,
    max_applications: int = DEFAULT_MAX_APPLICATIONS,
) -> SubpowerTrace:
    """Free algebra on the named generators in the variety of ``a``, inside A^(A^g)."""
    g = len(generators)
    if g < 1:
        raise AlgebraError("need at least one generator")
    res = subpower_closure(a, a.size ** g, projections(a.size, g), None, cap, max_applications)
    if res.status != "closed":
        raise CapExceeded(
            f"free algebra closure stopped at {len(res.trace)} elements: {res.reason}",
            size=len(res.trace), applications=res.applications,
        )
    return res.trace
