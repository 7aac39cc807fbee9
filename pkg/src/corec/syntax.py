"""Abstract syntax and sorts of the definitional language."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any


@dataclass(frozen=True)
class Span:
    line: int
    col: int
    end_line: int = 0
    end_col: int = 0

    def __str__(self):
        return f"{self.line}:{self.col}"

    def to(self, other: "Span") -> "Span":
        return Span(self.line, self.col, other.end_line, other.end_col)


NOWHERE = Span(0, 0, 0, 0)


# -- sorts ----------------------------------------------------------------------


class Sort:
    __slots__ = ()


@dataclass(frozen=True)
class NatSort(Sort):
    def __str__(self):
        return "Nat"


@dataclass(frozen=True)
class BoolSort(Sort):
    def __str__(self):
        return "Bool"


@dataclass(frozen=True)
class UnitSort(Sort):
    def __str__(self):
        return "Unit"


@dataclass(frozen=True)
class CodataSort(Sort):
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class ListSort(Sort):
    elem: Sort

    def __str__(self):
        return f"List {_atom_sort(self.elem)}"


@dataclass(frozen=True)
class FinSetSort(Sort):
    elem: Sort

    def __str__(self):
        return f"FinSet {_atom_sort(self.elem)}"


@dataclass(frozen=True)
class ProdSort(Sort):
    items: tuple

    def __str__(self):
        return "(" + ", ".join(map(str, self.items)) + ")"


def _atom_sort(s: Sort) -> str:
    return f"({s})" if isinstance(s, (ListSort, FinSetSort)) else str(s)


NAT = NatSort()
BOOL = BoolSort()
UNIT = UnitSort()


def is_base(s: Sort) -> bool:
    """Sorts whose values are finite data: no codatatype anywhere inside."""
    match s:
        case NatSort() | BoolSort() | UnitSort():
            return True
        case CodataSort():
            return False
        case ListSort(e) | FinSetSort(e):
            return is_base(e)
        case ProdSort(items):
            return all(is_base(i) for i in items)
    return False


def mentions(s: Sort, name: str) -> bool:
    match s:
        case CodataSort(n):
            return n == name
        case ListSort(e) | FinSetSort(e):
            return mentions(e, name)
        case ProdSort(items):
            return any(mentions(i, name) for i in items)
    return False


# -- expressions ------------------------------------------------------------------


class Expr:
    __slots__ = ()

    def with_sort(self, sort):
        return replace(self, sort=sort)


def _meta():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class NatLit(Expr):
    value: int
    span: Span = _meta()
    sort: Any = None


@dataclass(frozen=True)
class BoolLit(Expr):
    value: bool
    span: Span = _meta()
    sort: Any = None


@dataclass(frozen=True)
class UnitLit(Expr):
    span: Span = _meta()
    sort: Any = None


@dataclass(frozen=True)
class Var(Expr):
    """A name. After resolution `ref` is one of
    ("param", i), ("local",), ("implicit",), ("fun", name), ("self", name), ("ctor", name)."""

    name: str
    span: Span = _meta()
    sort: Any = None
    ref: Any = None


@dataclass(frozen=True)
class Call(Expr):
    """Application of a named function; constructors and selectors are applied the same way.

    `ref` after resolution: ("fun",), ("self",), ("ctor",), ("sel",), ("builtin",)."""

    fn: str
    args: tuple
    span: Span = _meta()
    sort: Any = None
    ref: Any = None
    infix: bool = field(default=False, compare=False)


@dataclass(frozen=True)
class BinOp(Expr):
    """Built-in binary operators on naturals and booleans."""

    op: str
    left: Expr
    right: Expr
    span: Span = _meta()
    sort: Any = None


@dataclass(frozen=True)
class Not(Expr):
    arg: Expr
    span: Span = _meta()
    sort: Any = None


@dataclass(frozen=True)
class If(Expr):
    cond: Expr
    then: Expr
    orelse: Expr
    span: Span = _meta()
    sort: Any = None


@dataclass(frozen=True)
class TupleLit(Expr):
    items: tuple
    span: Span = _meta()
    sort: Any = None


@dataclass(frozen=True)
class ListLit(Expr):
    items: tuple
    span: Span = _meta()
    sort: Any = None


@dataclass(frozen=True)
class SetLit(Expr):
    items: tuple
    span: Span = _meta()
    sort: Any = None


@dataclass(frozen=True)
class MapLam(Expr):
    """map (λ(p1, ..., pk). body) lst"""

    pattern: tuple
    body: Expr
    lst: Expr
    span: Span = _meta()
    sort: Any = None


@dataclass(frozen=True)
class FImage(Expr):
    """fimage fn set, with fn a selector or unary function name."""

    fn: str
    arg: Expr
    span: Span = _meta()
    sort: Any = None
    ref: Any = None


@dataclass(frozen=True)
class ExistsIn(Expr):
    """exists-in lst pred: fuel-bounded search for an element satisfying pred."""

    lst: Expr
    pred: str
    span: Span = _meta()
    sort: Any = None


ARITH = {"+", "-", "*", "^"}
COMPARE = {"=", "<", ">"}
LOGIC = {"and", "or"}
BUILTINS = {"gcd": 2, "zip": 2, "fmax": 1}


def children(e: Expr) -> tuple:
    match e:
        case Call(args=args):
            return args
        case BinOp(left=l, right=r):
            return (l, r)
        case Not(arg=a):
            return (a,)
        case If(cond=c, then=t, orelse=o):
            return (c, t, o)
        case TupleLit(items=i) | ListLit(items=i) | SetLit(items=i):
            return i
        case MapLam(body=b, lst=l):
            return (l, b)
        case FImage(arg=a):
            return (a,)
        case ExistsIn(lst=l):
            return (l,)
    return ()


def walk(e: Expr):
    stack = [e]
    while stack:
        x = stack.pop()
        yield x
        stack.extend(reversed(children(x)))


def has_self_call(e: Expr) -> bool:
    for x in walk(e):
        if isinstance(x, Call) and x.ref == ("self",):
            return True
        if isinstance(x, Var) and x.ref is not None and x.ref[0] == "self":
            return True
        if isinstance(x, FImage) and x.ref == ("self",):
            return True
    return False


def is_self(e: Expr) -> bool:
    return (isinstance(e, Call) and e.ref == ("self",)) or (
        isinstance(e, Var) and e.ref is not None and e.ref[0] == "self"
    )


def self_args(e: Expr) -> tuple:
    return e.args if isinstance(e, Call) else ()


# -- declarations ------------------------------------------------------------------


@dataclass(frozen=True)
class CtorDecl:
    name: str
    fields: tuple  # of (selector, Sort)
    span: Span = _meta()


@dataclass(frozen=True)
class CodatatypeDecl:
    name: str
    ctors: tuple
    span: Span = _meta()


@dataclass(frozen=True)
class FunDecl:
    name: str
    params: tuple  # of (name, Sort)
    result: Sort
    body: Expr
    well_behaved: bool = False
    span: Span = _meta()
    infix: bool = field(default=False, compare=False)


@dataclass(frozen=True)
class ForceCmd:
    expr: Expr
    count: int
    fuel: int | None = None
    span: Span = _meta()


@dataclass(frozen=True)
class CheckCmd:
    lhs: Expr
    rhs: Expr
    count: int
    fuel: int | None = None
    span: Span = _meta()


@dataclass(frozen=True)
class RegisterCmd:
    name: str
    span: Span = _meta()


@dataclass(frozen=True)
class ProveCmd:
    label: str | None
    lhs: Expr
    rhs: Expr
    schemas: tuple | None  # of (Expr, Expr); None means the goal itself
    depth: int
    lemmas: tuple = ()
    span: Span = _meta()


COMMANDS = (ForceCmd, CheckCmd, RegisterCmd, ProveCmd)


@dataclass(frozen=True)
class SourceFile:
    decls: tuple
