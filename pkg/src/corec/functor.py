"""Polynomial functors with their container values, and the free monad over a signature.

Container data mirrors the description:

    Id        payload
    ConstNat  int
    ConstBool bool
    ConstUnit ()
    Prod      tuple, one entry per component
    Sum       Inj(tag, value)
    ListOf    tuple
    FinSetOf  tuple, sorted by canonical serialization and duplicate free
"""

from __future__ import annotations

import threading
import weakref
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Callable, Iterable

from .errors import DescMismatch


# -- descriptions ---------------------------------------------------------


class FunctorDesc:
    __slots__ = ()


@dataclass(frozen=True)
class Id(FunctorDesc):
    def __repr__(self):
        return "Id"


@dataclass(frozen=True)
class ConstNat(FunctorDesc):
    def __repr__(self):
        return "Nat"


@dataclass(frozen=True)
class ConstBool(FunctorDesc):
    def __repr__(self):
        return "Bool"


@dataclass(frozen=True)
class ConstUnit(FunctorDesc):
    def __repr__(self):
        return "Unit"


@dataclass(frozen=True)
class Prod(FunctorDesc):
    parts: tuple

    def __post_init__(self):
        if not self.parts:
            raise ValueError("Prod needs at least one component")

    def __repr__(self):
        return "Prod(" + ", ".join(map(repr, self.parts)) + ")"


@dataclass(frozen=True)
class Sum(FunctorDesc):
    alts: tuple

    def __post_init__(self):
        if not self.alts:
            raise ValueError("Sum needs at least one alternative")

    def __repr__(self):
        return "Sum(" + ", ".join(map(repr, self.alts)) + ")"


@dataclass(frozen=True)
class ListOf(FunctorDesc):
    elem: FunctorDesc

    def __repr__(self):
        return f"List({self.elem!r})"


@dataclass(frozen=True)
class FinSetOf(FunctorDesc):
    elem: FunctorDesc

    def __repr__(self):
        return f"FinSet({self.elem!r})"


ID = Id()
NAT = ConstNat()
BOOL = ConstBool()
UNIT = ConstUnit()


@dataclass(frozen=True)
class Inj:
    """A Sum position: the chosen alternative and its value."""

    tag: int
    value: Any


@dataclass(frozen=True)
class Inl:
    value: Any


@dataclass(frozen=True)
class Inr:
    value: Any


# -- canonical serialization ---------------------------------------------


def serialize(x) -> str:
    """Canonical text of a payload. Objects may supply `canon()`."""
    if x is True:
        return "true"
    if x is False:
        return "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, tuple):
        return "(" + ",".join(serialize(y) for y in x) + ")"
    if isinstance(x, Inj):
        return f"#{x.tag}:{serialize(x.value)}"
    if isinstance(x, Inl):
        return f"inl:{serialize(x.value)}"
    if isinstance(x, Inr):
        return f"inr:{serialize(x.value)}"
    canon = getattr(x, "canon", None)
    if canon is not None:
        return canon()
    return repr(x)


def show(x) -> str:
    """Human-readable text of a payload or container value."""
    if isinstance(x, Container):
        return show_data(x.desc, x.data)
    if isinstance(x, tuple):
        return "(" + ", ".join(show(y) for y in x) + ")"
    if x is True or x is False:
        return "true" if x else "false"
    if isinstance(x, Term):
        return x.text()
    return serialize(x)


def canonical_set(items: Iterable) -> tuple:
    seen = {}
    for it in items:
        seen.setdefault(serialize(it), it)
    return tuple(seen[k] for k in sorted(seen))


# -- containers -------------------------------------------------------------


@dataclass(frozen=True)
class Container:
    desc: FunctorDesc
    data: Any

    def __repr__(self):
        return f"Container({show_data(self.desc, self.data)})"


def check_shape(desc: FunctorDesc, data) -> bool:
    match desc:
        case Id():
            return True
        case ConstNat():
            return isinstance(data, int) and not isinstance(data, bool) and data >= 0
        case ConstBool():
            return isinstance(data, bool)
        case ConstUnit():
            return data == ()
        case Prod(parts):
            return (
                isinstance(data, tuple)
                and len(data) == len(parts)
                and all(check_shape(p, d) for p, d in zip(parts, data))
            )
        case Sum(alts):
            return isinstance(data, Inj) and 0 <= data.tag < len(alts) and check_shape(alts[data.tag], data.value)
        case ListOf(elem):
            return isinstance(data, tuple) and all(check_shape(elem, d) for d in data)
        case FinSetOf(elem):
            if not isinstance(data, tuple) or not all(check_shape(elem, d) for d in data):
                return False
            keys = [serialize(d) for d in data]
            return keys == sorted(set(keys))
    return False


def make(desc: FunctorDesc, data) -> Container:
    """Build a container, canonicalizing finite sets and validating the shape."""
    data = _canon(desc, data)
    if not check_shape(desc, data):
        raise DescMismatch(f"data {data!r} does not fit {desc!r}")
    return Container(desc, data)


def _canon(desc, data):
    match desc:
        case Prod(parts):
            return tuple(_canon(p, d) for p, d in zip(parts, data))
        case Sum(alts):
            return Inj(data.tag, _canon(alts[data.tag], data.value))
        case ListOf(elem):
            return tuple(_canon(elem, d) for d in data)
        case FinSetOf(elem):
            return canonical_set(_canon(elem, d) for d in data)
    return data


@lru_cache(maxsize=None)
def _mapper(desc: FunctorDesc):
    """Compile `desc` into fn(f, data) -> data, or None when desc has no Id slot."""
    match desc:
        case Id():
            return lambda f, d: f(d)
        case ConstNat() | ConstBool() | ConstUnit():
            return None
        case Prod(parts):
            subs = [_mapper(p) for p in parts]
            if all(s is None for s in subs):
                return None
            if len(subs) == 2:
                a, b = subs
                if a is None:
                    return lambda f, d: (d[0], b(f, d[1]))
                if b is None:
                    return lambda f, d: (a(f, d[0]), d[1])
                return lambda f, d: (a(f, d[0]), b(f, d[1]))
            return lambda f, d: tuple(d[i] if s is None else s(f, d[i]) for i, s in enumerate(subs))
        case Sum(alts):
            subs = [_mapper(a) for a in alts]
            if all(s is None for s in subs):
                return None

            def sum_map(f, d):
                s = subs[d.tag]
                return d if s is None else Inj(d.tag, s(f, d.value))

            return sum_map
        case ListOf(elem):
            s = _mapper(elem)
            if s is None:
                return None
            return lambda f, d: tuple(s(f, x) for x in d)
        case FinSetOf(elem):
            s = _mapper(elem)
            if s is None:
                return None
            return lambda f, d: canonical_set(s(f, x) for x in d)
    raise TypeError(f"not a functor description: {desc!r}")


def map_data(desc: FunctorDesc, f: Callable, data):
    m = _mapper(desc)
    return data if m is None else m(f, data)


def cmap(f: Callable, c: Container) -> Container:
    """Functorial action: same shape, every Id payload replaced by f(payload)."""
    m = _mapper(c.desc)
    return c if m is None else Container(c.desc, m(f, c.data))


def crel(r: Callable[[Any, Any], bool], c1: Container, c2: Container) -> bool:
    """Relator: identical shapes and every parallel payload pair related by r."""
    if c1.desc != c2.desc:
        raise DescMismatch(f"{c1.desc!r} vs {c2.desc!r}")
    return rel_data(c1.desc, r, c1.data, c2.data)


def rel_data(desc, r, a, b) -> bool:
    match desc:
        case Id():
            return bool(r(a, b))
        case ConstNat() | ConstBool() | ConstUnit():
            return a == b and type(a) is type(b)
        case Prod(parts):
            return all(rel_data(p, r, x, y) for p, x, y in zip(parts, a, b))
        case Sum(alts):
            return a.tag == b.tag and rel_data(alts[a.tag], r, a.value, b.value)
        case ListOf(elem):
            return len(a) == len(b) and all(rel_data(elem, r, x, y) for x, y in zip(a, b))
        case FinSetOf(elem):
            # every element on each side is related to some element on the other
            return all(any(rel_data(elem, r, x, y) for y in b) for x in a) and all(
                any(rel_data(elem, r, x, y) for x in a) for y in b
            )
    raise TypeError(desc)


def content_data(desc, data, out: list):
    match desc:
        case Id():
            out.append(data)
        case ConstNat() | ConstBool() | ConstUnit():
            pass
        case Prod(parts):
            for p, d in zip(parts, data):
                content_data(p, d, out)
        case Sum(alts):
            content_data(alts[data.tag], data.value, out)
        case ListOf(elem) | FinSetOf(elem):
            for d in data:
                content_data(elem, d, out)
    return out


def ccontent(c: Container) -> list:
    """Id-position payloads, left to right."""
    return content_data(c.desc, c.data, [])


def id_slots(desc: FunctorDesc) -> bool:
    return _mapper(desc) is not None


def show_data(desc, data) -> str:
    match desc:
        case Id():
            return show(data)
        case ConstNat():
            return str(data)
        case ConstBool():
            return "true" if data else "false"
        case ConstUnit():
            return "()"
        case Prod(parts):
            if len(parts) == 1:
                return show_data(parts[0], data[0])
            return "(" + ", ".join(show_data(p, d) for p, d in zip(parts, data)) + ")"
        case Sum(alts):
            return f"#{data.tag} " + show_data(alts[data.tag], data.value)
        case ListOf(elem):
            return "[" + ", ".join(show_data(elem, d) for d in data) + "]"
        case FinSetOf(elem):
            return "{" + ", ".join(show_data(elem, d) for d in data) + "}"
    return repr(data)


# -- free monad terms ---------------------------------------------------------

_intern_lock = threading.Lock()
_leaves: "weakref.WeakValueDictionary" = weakref.WeakValueDictionary()
_nodes: "weakref.WeakValueDictionary" = weakref.WeakValueDictionary()


class Term:
    __slots__ = ()

    def text(self) -> str:
        raise NotImplementedError

    def canon(self) -> str:
        return self.text()

    def __repr__(self):
        return self.text()


class Leaf(Term):
    """η x. Instances are interned: equal payloads give the same object."""

    __slots__ = ("payload", "_text", "__weakref__")

    def __new__(cls, payload):
        key = (payload.__class__, payload)
        t = _leaves.get(key)
        if t is not None:
            return t
        with _intern_lock:
            t = _leaves.get(key)
            if t is None:
                t = object.__new__(cls)
                t.payload = payload
                t._text = None
                _leaves[key] = t
        return t

    def __reduce__(self):
        return (Leaf, (self.payload,))

    def text(self):
        if self._text is None:
            inner = show(self.payload)
            self._text = "η " + (inner if " " not in inner or inner[0] in "([{" else f"({inner})")
        return self._text


class Node(Term):
    """⟦op⟧(args): a signature symbol applied to a container of subterms."""

    __slots__ = ("op", "args", "_text", "__weakref__")

    def __new__(cls, op: str, args: Container):
        key = (op, args)
        t = _nodes.get(key)
        if t is not None:
            return t
        with _intern_lock:
            t = _nodes.get(key)
            if t is None:
                t = object.__new__(cls)
                t.op = op
                t.args = args
                t._text = None
                _nodes[key] = t
        return t

    def __reduce__(self):
        return (Node, (self.op, self.args))

    def text(self):
        if self._text is None:
            desc, data = self.args.desc, self.args.data
            if isinstance(desc, Prod):
                inner = ", ".join(show_data(p, d) for p, d in zip(desc.parts, data))
            else:
                inner = show_data(desc, data)
            self._text = f"⟦{self.op}⟧({inner})"
        return self._text


def tmap(f: Callable, t: Term) -> Term:
    """Σ* on morphisms: relabel every leaf."""
    if isinstance(t, Leaf):
        return Leaf(f(t.payload))
    return Node(t.op, cmap(lambda s: tmap(f, s), t.args))


def tjoin(t: Term) -> Term:
    """μ: graft the inner terms stored at the leaves."""
    if isinstance(t, Leaf):
        inner = t.payload
        if not isinstance(inner, Term):
            raise TypeError(f"tjoin needs a term of terms, got leaf {inner!r}")
        return inner
    return Node(t.op, cmap(tjoin, t.args))


def reduce(t: Term) -> Term:
    """μ ∘ Σ*[η, μ]: leaves Inl x become η x, leaves Inr u are joined in place."""

    def case(p):
        if isinstance(p, Inl):
            return Leaf(p.value)
        if isinstance(p, Inr):
            return tjoin(p.value)
        raise TypeError(f"reduce needs Inl/Inr leaves, got {p!r}")

    return tjoin(tmap(case, t))


def leaves(t: Term) -> list:
    out = []
    stack = [t]
    while stack:
        u = stack.pop()
        if isinstance(u, Leaf):
            out.append(u.payload)
        else:
            stack.extend(reversed(ccontent(u.args)))
    return out


def ops_of(t: Term) -> set:
    out = set()
    stack = [t]
    while stack:
        u = stack.pop()
        if isinstance(u, Node):
            out.add(u.op)
            stack.extend(ccontent(u.args))
    return out
