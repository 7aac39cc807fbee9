"""Lazy codata values and the corecursors that build them."""

from __future__ import annotations

import itertools
import random
import sys
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any, Callable

from .errors import CorecError, FuelExhausted, SelectorMismatch
from .functor import (
    ID, NAT, UNIT, Container, ConstBool, ConstNat, ConstUnit, FinSetOf, Id, Inj, Leaf, ListOf,
    Prod, Sum, Term, canonical_set, cmap, map_data, show, tmap,
)


class Unproductive(CorecError):
    code = "Unproductive"


# -- codatatypes ------------------------------------------------------------------


class Codatatype:
    """J = gfp F. `ctors` is a list of (name, [(selector, FunctorDesc)])."""

    def __init__(self, name: str, ctors):
        self.name = name
        self.ctors = [(c, list(fs)) for c, fs in ctors]
        alts = [Prod(tuple(d for _, d in fs)) if fs else UNIT for _, fs in self.ctors]
        self.single = len(alts) == 1
        self.desc = alts[0] if self.single else Sum(tuple(alts))
        self.tags = {c: i for i, (c, _) in enumerate(self.ctors)}
        self.selectors = {}
        for i, (c, fs) in enumerate(self.ctors):
            for j, (s, d) in enumerate(fs):
                self.selectors[s] = (i, j, d)
        self.kind = self._kind()

    def _kind(self):
        if self.single:
            fs = self.ctors[0][1]
            ids = [d for _, d in fs if d == ID]
            lists = [d for _, d in fs if d == ListOf(ID)]
            if len(ids) == 1 and not lists and all(d == ID or d == NAT for _, d in fs):
                return "stream"
            if len(lists) == 1 and not ids and all(d == ListOf(ID) or d == NAT for _, d in fs):
                return "tree"
            return "other"
        if len(self.ctors) == 2:
            nil = [c for c, fs in self.ctors if not fs]
            cons = [fs for c, fs in self.ctors if fs]
            if len(nil) == 1 and len(cons) == 1:
                fs = cons[0]
                if len(fs) == 2 and sorted(str(d) for _, d in fs) == ["Id", "Nat"]:
                    return "llist"
        return "other"

    @property
    def entry_name(self) -> str:
        """Name of the constructor bundle in the signature."""
        return "|".join(c for c, _ in self.ctors)

    def data(self, ctor: str, fields) -> Any:
        tag = self.tags[ctor]
        fs = self.ctors[tag][1]
        inner = tuple(canonical_set(v) if isinstance(d, FinSetOf) else v for v, (_, d) in zip(fields, fs))
        return inner if self.single else Inj(tag, inner)

    def make(self, ctor: str, fields) -> "CoVal":
        return ctor_(self, Container(self.desc, self.data(ctor, fields)))

    def split(self, data):
        """Layer data -> (constructor tag, field tuple)."""
        if self.single:
            return 0, data if self.ctors[0][1] else ()
        return data.tag, data.value

    def select(self, j: "CoVal", sel: str):
        tag, idx, _ = self.selectors[sel]
        t, fields = self.split(dtor(j).data)
        if t != tag:
            raise SelectorMismatch(f"{sel} applied to {self.ctors[t][0]}")
        return fields[idx]

    def stream_slots(self):
        """Field indices of the element and the tail for stream- and list-like types."""
        fs = self.ctors[0][1] if self.kind == "stream" else [f for _, f in self.ctors if f][0]
        elem = next(i for i, (_, d) in enumerate(fs) if d == NAT)
        rest = next(i for i, (_, d) in enumerate(fs) if d == ID)
        return elem, rest

    def __repr__(self):
        return f"Codatatype({self.name})"


# -- values ----------------------------------------------------------------------

_serial = itertools.count()
_BLACKHOLE = object()


class Stats:
    __slots__ = ("forced",)

    def __init__(self):
        self.forced = 0


STATS = Stats()


class CoVal:
    """A memoized suspension yielding one F-layer over CoVals."""

    __slots__ = ("codt", "_layer", "_step", "serial", "__weakref__")

    def __init__(self, codt: Codatatype, step: Callable[[], Container] | None = None, layer=None):
        self.codt = codt
        self._layer = layer
        self._step = step
        self.serial = next(_serial)

    @property
    def forced(self) -> bool:
        return self._layer is not None

    def canon(self):
        return f"#{self.serial}"

    def __repr__(self):
        return f"<{self.codt.name} #{self.serial}>"


def ctor_(codt: Codatatype, layer: Container) -> CoVal:
    return CoVal(codt, layer=layer)


ctor = ctor_


def suspend(codt: Codatatype, step: Callable[[], Container]) -> CoVal:
    return CoVal(codt, step)


def dtor(j: CoVal) -> Container:
    """Force one layer, at most once."""
    layer = j._layer
    if layer is not None:
        return layer
    step = j._step
    if step is _BLACKHOLE:
        raise Unproductive(f"{j!r} needs its own first layer to produce it")
    j._step = _BLACKHOLE
    try:
        layer = step()
    except BaseException:
        j._step = step
        raise
    STATS.forced += 1
    j._layer = layer
    j._step = None
    return layer


@dataclass(frozen=True)
class Done:
    """A carrier value standing for an already-built codata value."""

    value: Any

    def canon(self):
        return "done:" + show(self.value)


# -- fuel ------------------------------------------------------------------------

DEFAULT_FUEL = 10**6
_fuel_stack: list = []


class Fuel:
    """Budget for unguarded unfoldings and bounded searches within one forced layer."""

    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    @property
    def remaining(self):
        return self.limit - self.used

    def charge(self, function: str, carrier):
        if self.used >= self.limit:
            raise FuelExhausted(function, carrier, self.used)
        self.used += 1


def set_default_fuel(n: int):
    global DEFAULT_FUEL
    DEFAULT_FUEL = n


@contextmanager
def fuel_scope(fuel: Fuel):
    _fuel_stack.append(fuel)
    try:
        yield fuel
    finally:
        _fuel_stack.pop()


def current_fuel() -> Fuel:
    return _fuel_stack[-1] if _fuel_stack else Fuel(fuel_limit())


_limit_stack: list = []


def fuel_limit() -> int:
    """Per-layer budget in force: the innermost `limited` scope, else DEFAULT_FUEL."""
    return _limit_stack[-1] if _limit_stack else DEFAULT_FUEL


@contextmanager
def limited(n: int):
    _limit_stack.append(n)
    try:
        yield n
    finally:
        _limit_stack.pop()


# -- deep forcing ------------------------------------------------------------------

_deep = threading.local()


def deep(fn: Callable, *args):
    """Run fn on a thread with a large stack; nested lazy forcing can recurse deeply."""
    if getattr(_deep, "active", False):
        return fn(*args)
    box = {}

    def run():
        _deep.active = True
        try:
            box["v"] = fn(*args)
        except BaseException as e:  # re-raised on the caller's thread
            box["e"] = e

    old_limit = sys.getrecursionlimit()
    old_size = threading.stack_size()
    sys.setrecursionlimit(max(old_limit, 400_000))
    threading.stack_size(1 << 30)
    try:
        t = threading.Thread(target=run)
        t.start()
    finally:
        threading.stack_size(old_size)
    t.join()
    sys.setrecursionlimit(old_limit)
    if "e" in box:
        raise box["e"]
    return box["v"]


# -- signatures and eval ------------------------------------------------------------


class OpTable:
    """Minimal interface the evaluator needs: op name -> runtime."""

    def runtime(self, op: str) -> Callable[[Container], CoVal]:
        raise NotImplementedError


def eval_term(t: Term, ops: OpTable, leaf: Callable | None = None) -> CoVal:
    """eval(η j) = j; eval(⟦op⟧ args) = f_op(K eval args). Arguments stay lazy."""
    if type(t) is Leaf:
        return leaf(t.payload) if leaf is not None else t.payload
    f = ops.runtime(t.op)
    return f(cmap(lambda u: eval_term(u, ops, leaf), t.args))


def eval_(t: Term, ops: OpTable) -> CoVal:
    return eval_term(t, ops)


# -- seeds and corecursors ------------------------------------------------------------


class Seed:
    kind = "seed"

    def __init__(self, fn: Callable, codt: Codatatype, state: OpTable | None = None, name: str = "?"):
        self.fn = fn
        self.codt = codt
        self.state = state
        self.name = name
        self.memo: dict = {}
        self.steps = 0

    def __repr__(self):
        return f"{type(self).__name__}({self.name})"


class PrimSeed(Seed):
    """s : A -> F A"""

    kind = "Primitive"


class UpSeed(Seed):
    """s : A -> F (Σ* A)"""

    kind = "TopGuarded"


class FlexSeed(Seed):
    """s : A -> Σ* (F (Σ* A)); outer leaves may also be Done(j)."""

    kind = "FlexGuarded"


def _memo(s: Seed, a, make):
    try:
        j = s.memo.get(a)
    except TypeError:
        return make()
    if j is None:
        j = make()
        s.memo[a] = j
    return j


def _carrier(s: Seed, corec, b):
    if type(b) is Done:
        return b.value
    return corec(s, b)


def corec_prim(s: PrimSeed, a) -> CoVal:
    def step():
        s.steps += 1
        return cmap(lambda b: _carrier(s, corec_prim, b), s.fn(a))

    return _memo(s, a, lambda: CoVal(s.codt, step))


def corec_up(s: UpSeed, a) -> CoVal:
    def step():
        s.steps += 1
        leaf = lambda b: _carrier(s, corec_up, b)
        return cmap(lambda t: eval_term(t, s.state, leaf), s.fn(a))

    return _memo(s, a, lambda: CoVal(s.codt, step))


def _flex_outer(s: FlexSeed, t: Term) -> CoVal:
    leaf = lambda b: _carrier(s, corec_flex, b)

    def outer(p):
        if type(p) is Container:
            return ctor_(s.codt, cmap(lambda u: eval_term(u, s.state, leaf), p))
        if type(p) is Done:
            return p.value
        raise TypeError(f"flexible seed leaf must be a layer, got {p!r}")

    return eval_term(t, s.state, outer)


def corec_flex(s: FlexSeed, a) -> CoVal:
    def step():
        s.steps += 1
        return dtor(_flex_outer(s, s.fn(a)))

    return _memo(s, a, lambda: CoVal(s.codt, step))


CORECURSORS = {"Primitive": corec_prim, "TopGuarded": corec_up, "FlexGuarded": corec_flex}


def corecursor(s: Seed):
    return CORECURSORS[s.kind]


def characteristic_rhs(s: Seed, f: Callable, a) -> CoVal:
    """Right-hand side of the seed's characteristic equation at a, built from f.

    Terms are relabelled with tmap and then evaluated, independently of the
    fused path the corecursors take."""

    def lift(b):
        return b.value if type(b) is Done else f(b)

    match s.kind:
        case "Primitive":
            return ctor_(s.codt, cmap(lift, s.fn(a)))
        case "TopGuarded":
            return ctor_(s.codt, cmap(lambda t: eval_(tmap(lift, t), s.state), s.fn(a)))
        case "FlexGuarded":

            def layer(p):
                if type(p) is Done:
                    return p.value
                return ctor_(s.codt, cmap(lambda t: eval_(tmap(lift, t), s.state), p))

            return eval_(tmap(layer, s.fn(a)), s.state)
    raise ValueError(s.kind)


# -- observation ---------------------------------------------------------------------


class Truncated:
    """Marker for a subtree whose observation depth ran out."""

    __slots__ = ()

    def __repr__(self):
        return "…"


TRUNCATED = Truncated()


@dataclass
class ListPrefix:
    items: list
    terminated: bool

    def to_json(self):
        return {"items": self.items, "terminated": self.terminated}


def observe(j: CoVal, n: int):
    """Depth-n observation as nested hashable data (generic over F)."""
    if n <= 0:
        return TRUNCATED
    layer = dtor(j)
    return map_data(layer.desc, lambda c: observe(c, n - 1), layer.data)


def take_prefix(j: CoVal, n: int):
    """Streams: list of heads. Lazy lists: ListPrefix. Trees: nested {label, children}."""
    return deep(_take_prefix, j, n)


def _take_prefix(j, n):
    codt = j.codt
    if codt.kind == "stream":
        e, r = codt.stream_slots()
        out = []
        for _ in range(n):
            fields = dtor(j).data
            out.append(fields[e])
            j = fields[r]
        return out
    if codt.kind == "llist":
        e, r = codt.stream_slots()
        items = []
        for _ in range(n):
            tag, fields = codt.split(dtor(j).data)
            if not fields:
                return ListPrefix(items, True)
            items.append(fields[e])
            j = fields[r]
        return ListPrefix(items, False)
    if codt.kind == "tree":
        return _tree_obs(j, n) if n > 0 else TRUNCATED
    return observe(j, n)


def _tree_obs(j, n):
    if n <= 0:
        return {"truncated": True}
    fields = dtor(j).data
    fs = j.codt.ctors[0][1]
    out = {}
    for (sel, d), v in zip(fs, fields):
        if d == NAT:
            out.setdefault("label", v)
        else:
            out["children"] = [_tree_obs(c, n - 1) for c in v]
    return out


def to_json(obs):
    if isinstance(obs, ListPrefix):
        return obs.to_json()
    if obs is TRUNCATED:
        return None
    return obs


@dataclass(frozen=True)
class Differ:
    path: tuple
    left: Any
    right: Any

    @property
    def index(self):
        return len(self.path)

    def __bool__(self):
        return False


@dataclass(frozen=True)
class EqualToDepth:
    depth: int

    def __bool__(self):
        return True


def compare(j1: CoVal, j2: CoVal, n: int, deadline: float | None = None):
    """First difference between depth-n observations, searched breadth first.

    A pair of values met again later in the search was already compared to a
    greater remaining depth, so it is skipped. Past a `time.monotonic()`
    deadline the search stops and reports the depth completed."""
    return deep(_compare, j1, j2, n, deadline)


def _compare(j1, j2, n, deadline=None):
    codt = j1.codt
    frontier = [((), j1, j2)]
    seen = set()
    for level in range(n):
        if deadline is not None and time.monotonic() > deadline:
            return EqualToDepth(level)
        nxt = []
        for path, a, b in frontier:
            if a is b:
                continue
            key = (a, b)  # identity-hashed; holding them keeps ids stable
            if key in seen:
                continue
            seen.add(key)
            la, lb = dtor(a), dtor(b)
            ta, fa = codt.split(la.data)
            tb, fb = codt.split(lb.data)
            if ta != tb:
                return Differ(path, codt.ctors[ta][0], codt.ctors[tb][0])
            descs = [d for _, d in codt.ctors[ta][1]]
            for k, (d, x, y) in enumerate(zip(descs, fa, fb)):
                if d == ID:
                    nxt.append((path + (k,), x, y))
                elif isinstance(d, ListOf) and d.elem == ID:
                    if len(x) != len(y):
                        return Differ(path, ("children", len(x)), ("children", len(y)))
                    for i, (u, v) in enumerate(zip(x, y)):
                        nxt.append((path + (i,), u, v))
                elif isinstance(d, FinSetOf):
                    if len(x) != len(y):
                        return Differ(path, len(x), len(y))
                    for i, (u, v) in enumerate(zip(x, y)):
                        nxt.append((path + (i,), u, v))
                elif x != y:
                    return Differ(path, x, y)
        frontier = nxt
    return EqualToDepth(n)


def stream_index(d: Differ) -> int:
    return len(d.path)


# -- random rational values --------------------------------------------------------------


def random_value(codt: Codatatype, rng: random.Random, nodes: int = 3, max_nat: int = 9, max_list: int = 2) -> CoVal:
    """A random rational value: `nodes` cells whose layers point back into the cells."""
    cells = [CoVal(codt) for _ in range(nodes)]

    def gen(d):
        match d:
            case Id():
                return rng.choice(cells)
            case ConstNat():
                return rng.randint(0, max_nat)
            case ConstBool():
                return rng.random() < 0.5
            case ConstUnit():
                return ()
            case Prod(parts):
                return tuple(gen(p) for p in parts)
            case Sum(alts):
                t = rng.randrange(len(alts))
                return Inj(t, gen(alts[t]))
            case ListOf(e):
                return tuple(gen(e) for _ in range(rng.randint(0, max_list)))
            case FinSetOf(e):
                return canonical_set(gen(e) for _ in range(rng.randint(0, max_list)))
        raise TypeError(d)

    for c in cells:
        c._layer = Container(codt.desc, gen(codt.desc))
    return cells[0]


def from_list(codt: Codatatype, items, cycle_from: int | None = None) -> CoVal:
    """Build a stream or lazy list from items; cycle back to index cycle_from if given."""
    if codt.kind == "llist":
        cons = next(c for c, fs in codt.ctors if fs)
        nil = next(c for c, fs in codt.ctors if not fs)
    else:
        cons, nil = codt.ctors[0][0], None
    e, r = codt.stream_slots()
    cells = [CoVal(codt) for _ in items]
    end = None
    if cycle_from is None:
        if nil is None:
            raise ValueError("a stream needs a cycle")
        end = codt.make(nil, ())
    for i, (c, x) in enumerate(zip(cells, items)):
        nxt = cells[i + 1] if i + 1 < len(cells) else (cells[cycle_from] if cycle_from is not None else end)
        fields = [None, None]
        fields[e], fields[r] = x, nxt
        c._layer = Container(codt.desc, codt.data(cons, fields))
    return cells[0] if cells else end
