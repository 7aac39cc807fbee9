"""Evaluation of resolved expressions.

Three evaluators share this module:

* `compile_expr` turns an expression without self-calls into a closure over
  an environment dict; this is the fast path used by every compiled seed.
* `compile_skeleton` turns a definition body into a closure producing a
  `Skel` tree: constructor and registered-operation nodes with the self-call
  sites (their arguments already evaluated) at the leaves. The seed builders
  in `registry` and `mixed` convert skeletons into corecursor seeds.
* `TemplateEval` walks a body over *formal* arguments (a parameter together
  with one observed layer). It is how seed rules are extracted and replayed,
  both on concrete values and on symbolic terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

from .errors import CorecError, RuleViolation, SelectorMismatch, SymbolicBranch
from .functor import (
    BOOL as D_BOOL, ID, NAT as D_NAT, UNIT as D_UNIT, Container, FinSetOf, Leaf, ListOf, Node,
    Prod, canonical_set, map_data, serialize,
)
from .runtime import Codatatype, CoVal, current_fuel, dtor
from .syntax import (
    BinOp, BoolLit, BoolSort, Call, CodataSort, ExistsIn, FImage, FinSetSort, If, ListLit,
    ListSort, MapLam, NatLit, NatSort, Not, ProdSort, SetLit, TupleLit, UnitLit, UnitSort, Var,
    has_self_call,
)


def sort_desc(s, codt_name: str):
    """Functor description of a sort, with `codt_name` as the Id position."""
    match s:
        case NatSort():
            return D_NAT
        case BoolSort():
            return D_BOOL
        case UnitSort():
            return D_UNIT
        case CodataSort(n) if n == codt_name:
            return ID
        case ListSort(e):
            return ListOf(sort_desc(e, codt_name))
        case FinSetSort(e):
            return FinSetOf(sort_desc(e, codt_name))
        case ProdSort(items):
            return Prod(tuple(sort_desc(i, codt_name) for i in items))
    raise CorecError(f"sort {s} cannot appear in an operation over {codt_name}")


def arity_desc(params, codt_name: str) -> Prod:
    return Prod(tuple(sort_desc(s, codt_name) for _, s in params)) if params else Prod((D_UNIT,))


def arity_data(params, args) -> tuple:
    """K-container data for an argument tuple (unit placeholder for nullary ops)."""
    if not params:
        return ((),)
    return tuple(canonical_set(a) if isinstance(s, FinSetSort) else a for (_, s), a in zip(params, args))


# -- symbolic base values ------------------------------------------------------------


class Sym:
    """A base value that depends on formal observations."""

    __slots__ = ()

    def canon(self):
        return self.text()


@dataclass(frozen=True)
class BVar(Sym):
    name: str

    def text(self):
        return self.name

    def __repr__(self):
        return self.name


@dataclass(frozen=True)
class BApp(Sym):
    op: str
    args: tuple

    def text(self):
        if self.op in INFIX and len(self.args) == 2:
            a, b = (_btext(x) for x in self.args)
            return f"({a} {self.op} {b})"
        return f"{self.op}(" + ", ".join(_btext(x) for x in self.args) + ")"

    def __repr__(self):
        return self.text()


INFIX = {"+", "-", "*", "^", "=", "<", ">", "and", "or"}


def _btext(x):
    if isinstance(x, Sym):
        return x.text()
    if x is True or x is False:
        return "true" if x else "false"
    return str(x)


def _fmax(xs):
    return max(xs, default=0)


BASE_OPS = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b if a > b else 0,
    "*": lambda a, b: a * b,
    "^": lambda a, b: a**b,
    "=": lambda a, b: a == b,
    "<": lambda a, b: a < b,
    ">": lambda a, b: a > b,
    "and": lambda a, b: a and b,
    "or": lambda a, b: a or b,
    "not": lambda a: not a,
    "gcd": math.gcd,
    "min": min,
    "max": lambda *xs: _fmax(xs),
    "if": lambda c, a, b: a if c else b,
}


def is_sym(x) -> bool:
    if isinstance(x, Sym):
        return True
    if isinstance(x, tuple):
        return any(is_sym(y) for y in x)
    return False


def bapp(op: str, *args):
    """Apply a base operation, folding when every argument is concrete."""
    if not any(is_sym(a) for a in args):
        return BASE_OPS[op](*args)
    return BApp(op, args)


def beval(e, assign: dict, funcs=None):
    """Evaluate a symbolic base value under an assignment of its variables."""
    if isinstance(e, BVar):
        return assign[e.name]
    if isinstance(e, BApp):
        args = [beval(a, assign, funcs) for a in e.args]
        if e.op.startswith("fn:"):
            return funcs[e.op[3:]](*args)
        return BASE_OPS[e.op](*args)
    return e


def bvars(e, out=None) -> set:
    out = set() if out is None else out
    if isinstance(e, BVar):
        out.add(e.name)
    elif isinstance(e, BApp):
        for a in e.args:
            bvars(a, out)
    return out


# -- formals -----------------------------------------------------------------------


class Formal:
    """A formal argument: its value, and for depth 0 one observed layer.

    The layer is F-data whose Id positions hold depth-1 formals. A depth-1
    formal may be passed around but never observed."""

    __slots__ = ("name", "value", "layer", "depth")

    def __init__(self, name: str, value, layer=None, depth: int = 0):
        self.name = name
        self.value = value
        self.layer = layer
        self.depth = depth

    def canon(self):
        return self.name

    def __repr__(self):
        return self.name


def concrete_formal(j: CoVal) -> Formal:
    """Depth-0 formal for a concrete value; its children are depth-1 formals."""
    layer = dtor(j)
    data = map_data(layer.desc, lambda c: Formal(serialize(c), c, None, 1), layer.data)
    return Formal(serialize(j), j, data, 0)


@dataclass(frozen=True)
class SymList:
    """A list of symbolic length whose every element has the shape `elem`."""

    length: Any
    elem: Any

    def canon(self):
        return f"[{serialize(self.elem)} | len {_btext(self.length)}]"


# -- skeletons ------------------------------------------------------------------------


class Skel:
    __slots__ = ()


class SkCall(Skel):
    __slots__ = ("args",)

    def __init__(self, args):
        self.args = args

    def __repr__(self):
        return f"SkCall{self.args!r}"


class SkDone(Skel):
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value

    def __repr__(self):
        return f"SkDone({self.value!r})"


class SkCtor(Skel):
    """A constructor layer. `fields` mirror the constructor's field descs."""

    __slots__ = ("ctor", "fields")

    def __init__(self, ctor, fields):
        self.ctor = ctor
        self.fields = fields

    def __repr__(self):
        return f"SkCtor({self.ctor}, {self.fields!r})"


class SkOp(Skel):
    __slots__ = ("op", "fields")

    def __init__(self, op, fields):
        self.op = op
        self.fields = fields

    def __repr__(self):
        return f"SkOp({self.op}, {self.fields!r})"


def map_fields(descs, fields, f) -> list:
    """Apply f at every skeleton position of a field list."""
    out = []
    for d, x in zip(descs, fields):
        if d == ID:
            out.append(f(x))
        elif isinstance(d, ListOf) and d.elem == ID:
            out.append(tuple(f(y) for y in x))
        elif isinstance(d, FinSetOf) and d.elem == ID:
            out.append(canonical_set(f(y) for y in x))
        else:
            out.append(x)
    return out


# -- program context -------------------------------------------------------------------


class Program:
    """What the evaluators need to know about the definitions processed so far."""

    def __init__(self):
        self.codts: dict[str, Codatatype] = {}
        self.ctor_codt: dict[str, Codatatype] = {}
        self.sel_codt: dict[str, Codatatype] = {}
        self.funcs: dict[str, Any] = {}  # name -> registry.Function
        self.states: dict[str, Any] = {}  # codatatype name -> registry.CorecState
        self.failed_ops: set[str] = set()

    def add_codatatype(self, codt: Codatatype):
        self.codts[codt.name] = codt
        for c, fs in codt.ctors:
            self.ctor_codt[c] = codt
            for s, _ in fs:
                self.sel_codt[s] = codt

    def registered(self, codt_name: str, op: str) -> bool:
        st = self.states.get(codt_name)
        return st is not None and st.has(op)

    def call(self, name: str, args):
        return self.funcs[name].impl(*args)


# -- concrete closures --------------------------------------------------------------------


def compile_expr(e, prog: Program, fname: str = "?"):
    """Compile an expression without self-calls into fn(env) -> value."""
    match e:
        case NatLit(value=v) | BoolLit(value=v):
            return lambda env: v
        case UnitLit():
            return lambda env: ()
        case Var(name=n):
            return lambda env: env[n]
        case Call(fn=f, args=args, ref=ref):
            cs = [compile_expr(a, prog, fname) for a in args]
            kind = ref[0] if ref else "fun"
            if kind == "ctor":
                codt = prog.ctor_codt[f]
                if len(cs) == 2:
                    a, b = cs
                    return lambda env: codt.make(f, (a(env), b(env)))
                return lambda env: codt.make(f, [c(env) for c in cs])
            if kind == "sel":
                codt = prog.sel_codt[f]
                (a,) = cs
                return lambda env: codt.select(a(env), f)
            if kind == "builtin":
                if f == "gcd":
                    a, b = cs
                    return lambda env: math.gcd(a(env), b(env))
                if f == "fmax":
                    (a,) = cs
                    return lambda env: _fmax(a(env))
                a, b = cs
                return lambda env: tuple(zip(a(env), b(env)))
            if kind == "self":
                raise CorecError(f"self-call to {f} outside a skeleton position", e.span)
            funcs = prog.funcs
            if not cs:
                return lambda env: funcs[f].impl()
            if len(cs) == 1:
                (a,) = cs
                return lambda env: funcs[f].impl(a(env))
            if len(cs) == 2:
                a, b = cs
                return lambda env: funcs[f].impl(a(env), b(env))
            return lambda env: funcs[f].impl(*[c(env) for c in cs])
        case BinOp(op=op, left=l, right=r):
            a, b = compile_expr(l, prog, fname), compile_expr(r, prog, fname)
            if op == "and":
                return lambda env: a(env) and b(env)
            if op == "or":
                return lambda env: a(env) or b(env)
            fn = BASE_OPS[op]
            return lambda env: fn(a(env), b(env))
        case Not(arg=x):
            a = compile_expr(x, prog, fname)
            return lambda env: not a(env)
        case If(cond=c, then=t, orelse=o):
            cc, tt, oo = (compile_expr(x, prog, fname) for x in (c, t, o))
            return lambda env: tt(env) if cc(env) else oo(env)
        case TupleLit(items=items) | ListLit(items=items):
            cs = [compile_expr(i, prog, fname) for i in items]
            return lambda env: tuple(c(env) for c in cs)
        case SetLit(items=items):
            cs = [compile_expr(i, prog, fname) for i in items]
            return lambda env: canonical_set(c(env) for c in cs)
        case MapLam(pattern=pat, body=b, lst=l):
            lc = compile_expr(l, prog, fname)
            bc = compile_expr(b, prog, fname)
            bind = _binder(pat)
            return lambda env: tuple(bc(bind(env, x)) for x in lc(env))
        case FImage(fn=f, arg=a, ref=ref):
            ac = compile_expr(a, prog, fname)
            if ref == ("sel",):
                codt = prog.sel_codt[f]
                return lambda env: canonical_set(codt.select(x, f) for x in ac(env))
            funcs = prog.funcs
            return lambda env: canonical_set(funcs[f].impl(x) for x in ac(env))
        case ExistsIn(lst=l, pred=p):
            return _compile_exists(compile_expr(l, prog, fname), p, prog, fname)
    raise TypeError(f"cannot compile {e!r}")


def _binder(pat):
    if len(pat) == 1:
        (n,) = pat
        return lambda env, x: {**env, n: x}
    return lambda env, x: {**env, **dict(zip(pat, x))}


def _compile_exists(lc, pred: str, prog: Program, fname: str):
    def run(env):
        j = lc(env)
        codt = j.codt
        e, r = codt.stream_slots()
        p = prog.funcs[pred].impl
        fuel = current_fuel()
        seen = {}  # a revisited cell closes a cycle with no match; values keep ids alive
        while id(j) not in seen:
            seen[id(j)] = j
            fuel.charge(fname, j)
            _, fields = codt.split(dtor(j).data)
            if not fields:
                return False
            if p(fields[e]):
                return True
            j = fields[r]
        return False

    return run


def compile_function(params, body, prog: Program, fname: str):
    """fn(*args) for a definition body without self-calls."""
    c = compile_expr(body, prog, fname)
    names = [p for p, _ in params]
    if not names:
        return lambda: c({})
    if len(names) == 1:
        (n,) = names
        return lambda x: c({n: x})
    return lambda *args: c(dict(zip(names, args)))


# -- skeleton closures ------------------------------------------------------------------


def compile_skeleton(e, prog: Program, codt: Codatatype, fname: str):
    """Compile a J-sorted body into fn(env) -> Skel.

    Only the positions classification accepted are handled: conditionals,
    constructors, registered operations, `map` and list literals in list
    positions, and self-calls. Anything without a self-call is evaluated
    concretely and wrapped in SkDone."""
    return _SkelCompiler(prog, codt, fname).skel(e)


class _SkelCompiler:
    def __init__(self, prog, codt, fname):
        self.prog = prog
        self.codt = codt
        self.fname = fname

    def concrete(self, e):
        return compile_expr(e, self.prog, self.fname)

    def skel(self, e):
        if not has_self_call(e):
            c = self.concrete(e)
            return lambda env: SkDone(c(env))
        match e:
            case If(cond=c, then=t, orelse=o):
                cc, tt, oo = self.concrete(c), self.skel(t), self.skel(o)
                return lambda env: tt(env) if cc(env) else oo(env)
            case Call(ref=("self",)) | Var(ref=("self", _)) as call:
                cs = [self.concrete(a) for a in getattr(call, "args", ())]
                if not cs:
                    return lambda env: SkCall(())
                if len(cs) == 1:
                    (a,) = cs
                    return lambda env: SkCall((a(env),))
                return lambda env: SkCall(tuple(c(env) for c in cs))
            case Call(fn=f, args=args, ref=("ctor",)):
                tag = self.codt.tags[f]
                descs = [d for _, d in self.codt.ctors[tag][1]]
                fs = [self.field(a, d) for a, d in zip(args, descs)]
                return lambda env: SkCtor(f, [g(env) for g in fs])
            case Call(fn=f, args=args, ref=("fun",)) if self.prog.registered(self.codt.name, f):
                descs = list(self.prog.states[self.codt.name].arity(f).parts)
                fs = [self.field(a, d) for a, d in zip(args, descs)]
                return lambda env: SkOp(f, [g(env) for g in fs])
        raise CorecError(f"self-call in a position {self.fname} cannot compile", getattr(e, "span", None))

    def field(self, e, d):
        if d == ID:
            return self.skel(e)
        if isinstance(d, (ListOf, FinSetOf)) and d.elem == ID:
            return self.skel_list(e)
        return self.concrete(e)

    def skel_list(self, e):
        if not has_self_call(e):
            c = self.concrete(e)
            return lambda env: tuple(SkDone(x) for x in c(env))
        match e:
            case ListLit(items=items) | SetLit(items=items):
                cs = [self.skel(i) for i in items]
                return lambda env: tuple(c(env) for c in cs)
            case MapLam(pattern=pat, body=b, lst=l):
                lc, bc, bind = self.concrete(l), self.skel(b), _binder(pat)
                return lambda env: tuple(bc(bind(env, x)) for x in lc(env))
            case If(cond=c, then=t, orelse=o):
                cc, tt, oo = self.concrete(c), self.skel_list(t), self.skel_list(o)
                return lambda env: tt(env) if cc(env) else oo(env)
        raise CorecError(f"self-call in a list position {self.fname} cannot compile", getattr(e, "span", None))


# -- template evaluation ----------------------------------------------------------------------


class TemplateEval:
    """Evaluate a body whose codata parameters are formals.

    mode "concrete": conditions are decided; base values are concrete.
    mode "symbolic": base values may be symbolic; a condition that does not
        fold raises SymbolicBranch.
    mode "check":    both branches of every conditional are visited; used to
        detect violations statically.

    J-sorted results are Terms: Leaf(Formal) for formals, Node(self) for
    self-calls, Node(op) for registered operations, Node(entry) for
    constructors."""

    def __init__(self, prog: Program, codt: Codatatype, fname: str, params, mode: str = "concrete"):
        self.prog = prog
        self.codt = codt
        self.fname = fname
        self.params = params
        self.mode = mode
        self.state = prog.states.get(codt.name)
        self.self_arity = arity_desc(params, codt.name)
        self.allow_defs = False  # unregistered codata calls become opaque nodes

    # values
    def ev(self, e, env):
        match e:
            case NatLit(value=v) | BoolLit(value=v):
                return v
            case UnitLit():
                return ()
            case Var(name=n):
                return env[n]
            case Call():
                return self.call(e, env)
            case BinOp(op=op, left=l, right=r):
                return bapp(op, self.ev(l, env), self.ev(r, env))
            case Not(arg=a):
                return bapp("not", self.ev(a, env))
            case If(cond=c, then=t, orelse=o):
                cv = self.ev(c, env)
                if self.mode == "check":
                    a = self.ev(t, env)
                    self.ev(o, env)
                    return a
                if is_sym(cv):
                    raise SymbolicBranch(f"cannot decide {_btext(cv)} symbolically", c.span)
                return self.ev(t if cv else o, env)
            case TupleLit(items=items) | ListLit(items=items):
                return tuple(self.ev(i, env) for i in items)
            case SetLit(items=items):
                return canonical_set(self.ev(i, env) for i in items)
            case MapLam(pattern=pat, body=b, lst=l):
                lv = self.ev(l, env)
                bind = _binder(pat)
                if isinstance(lv, SymList):
                    return SymList(lv.length, self.ev(b, bind(env, lv.elem)))
                return tuple(self.ev(b, bind(env, x)) for x in lv)
            case FImage(fn=f, arg=a, ref=ref):
                xs = self.ev(a, env)
                if ref == ("sel",):
                    return canonical_set(self.select(f, x, e) for x in xs)
                return canonical_set(self.apply(f, (x,), e) for x in xs)
            case ExistsIn():
                raise RuleViolation(
                    "TwoLayerDestruction", "exists-in may inspect unboundedly many layers", e.span
                )
        raise TypeError(f"cannot evaluate {e!r}")

    def call(self, e: Call, env):
        f, ref = e.fn, (e.ref[0] if e.ref else "fun")
        if ref == "sel":
            return self.select(f, self.ev(e.args[0], env), e)
        args = tuple(self.ev(a, env) for a in e.args)
        if ref == "ctor":
            codt = self.prog.ctor_codt[f]
            return Node(codt.entry_name, Container(codt.desc, codt.data(f, args)))
        if ref == "builtin":
            if f == "gcd":
                return bapp("gcd", *args)
            if f == "fmax":
                return bapp("max", *args[0])
            a, b = args
            if isinstance(a, SymList) or isinstance(b, SymList):
                if not (isinstance(a, SymList) and isinstance(b, SymList)):
                    raise SymbolicBranch("zip of a symbolic and a concrete list", e.span)
                return SymList(bapp("min", a.length, b.length), (a.elem, b.elem))
            return tuple(zip(a, b))
        if ref == "self":
            return Node(self.fname, Container(self.self_arity, arity_data(self.params, args)))
        return self.apply(f, args, e)

    def apply(self, f: str, args, e):
        if self.state is not None and self.state.has(f):
            entry = self.state.entry(f)
            return Node(f, Container(entry.arity, arity_data(entry.params, args)))
        fn = self.prog.funcs[f]
        if fn.is_base:
            if any(is_sym(a) for a in args):
                return BApp("fn:" + f, args)
            if not _touches_formals(args):
                return fn.impl(*args)
        elif self.allow_defs and fn.codt is not None:
            params = fn.decl.params
            return Node(f, Container(arity_desc(params, fn.codt.name), arity_data(params, args)))
        reason = f"UnknownOperation({f})" if fn.never_registered else f"NonWellBehavedContext({f})"
        raise RuleViolation(reason, f"{f} is not a registered well-behaved operation", e.span)

    def select(self, sel: str, x, e):
        if isinstance(x, Leaf) and isinstance(x.payload, Formal):
            fm = x.payload
            if fm.depth > 0 or fm.layer is None:
                raise RuleViolation(
                    "TwoLayerDestruction",
                    f"{sel} observes a layer below the first one of {self.params_text()}",
                    e.span,
                )
            codt = self.prog.sel_codt[sel]
            tag, idx, d = codt.selectors[sel]
            if isinstance(fm.layer, SymLayer):
                return fm.layer.select(sel)
            t, fields = codt.split(fm.layer)
            if t != tag:
                raise SelectorMismatch(f"{sel} applied to {codt.ctors[t][0]}")
            v = fields[idx]
            return _wrap(d, v)
        raise RuleViolation(
            f"NonWellBehavedContext({sel})", f"{sel} is applied to a computed value, not a parameter", e.span
        )

    def params_text(self):
        return ", ".join(p for p, _ in self.params) or "the argument"

    # the whole rule
    def layer(self, body, env):
        """Evaluate the body to one F-layer over terms."""
        t = self.ev(body, env)
        return self.top(t, body)

    def top(self, t, body):
        codt = self.codt
        if isinstance(t, Node) and t.op == codt.entry_name:
            return t.args
        if isinstance(t, Leaf) and isinstance(t.payload, Formal):
            fm = t.payload
            if fm.depth > 0:
                raise RuleViolation(
                    "TwoLayerDestruction", f"the result needs a layer below the first one of {fm.name}", body.span
                )
            if isinstance(fm.layer, SymLayer):
                return fm.layer.as_container()
            return Container(codt.desc, map_data(codt.desc, Leaf, fm.layer))
        raise RuleViolation(
            "UnguardedSelfCall-BadContext",
            f"{self.fname} does not start with a constructor, so its one-step behaviour is not a template",
            body.span,
        )


class SymLayer:
    """Hook for symbolic observations; see coinduction.SymObs."""

    def select(self, sel):
        raise NotImplementedError

    def as_container(self):
        raise NotImplementedError


def _wrap(d, v):
    if d == ID:
        return Leaf(v)
    if isinstance(d, ListOf) and d.elem == ID:
        return tuple(Leaf(x) for x in v)
    if isinstance(d, FinSetOf) and d.elem == ID:
        return canonical_set(Leaf(x) for x in v)
    return v


def _touches_formals(x) -> bool:
    if isinstance(x, (Leaf, Node, SymList)):
        return True
    if isinstance(x, tuple):
        return any(_touches_formals(y) for y in x)
    return False
