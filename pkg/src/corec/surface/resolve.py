"""Name resolution and sort checking."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..errors import DuplicateName, SortMismatch, UnboundName
from ..syntax import (
    BOOL, BUILTINS, NAT, UNIT, BinOp, BoolLit, BoolSort, Call, CheckCmd, CodataSort,
    CodatatypeDecl, ExistsIn, FImage, FinSetSort, ForceCmd, FunDecl, If, ListLit, ListSort,
    MapLam, NatLit, NatSort, Not, ProdSort, ProveCmd, RegisterCmd, SetLit, Sort,
    SourceFile, TupleLit, UnitLit, UnitSort, Var, is_base, mentions,
)


@dataclass
class Signature:
    """Names visible at a point of the file."""

    codatatypes: dict = field(default_factory=dict)  # name -> CodatatypeDecl
    ctors: dict = field(default_factory=dict)  # name -> (codt, index, field sorts)
    selectors: dict = field(default_factory=dict)  # name -> (codt, ctor, field index, sort)
    functions: dict = field(default_factory=dict)  # name -> (param sorts, result sort)

    def taken(self, name):
        return name in self.ctors or name in self.selectors or name in self.functions or name in BUILTINS


def _mismatch(span, expected, got):
    return SortMismatch(f"expected {expected}, got {got}", span)


def _check_sort(sig: Signature, s: Sort, span):
    match s:
        case NatSort() | BoolSort() | UnitSort():
            return
        case CodataSort(n):
            if n not in sig.codatatypes:
                raise UnboundName(f"unknown sort {n}", span)
        case ListSort(e) | FinSetSort(e):
            _check_sort(sig, e, span)
        case ProdSort(items):
            for i in items:
                _check_sort(sig, i, span)


class ExprResolver:
    def __init__(self, sig: Signature, params=(), self_name=None, self_sig=None, implicit=False):
        self.sig = sig
        self.params = {n: (i, s) for i, (n, s) in enumerate(params)}
        self.self_name = self_name
        self.self_sig = self_sig
        self.implicit = {} if implicit else None
        self.locals: list[dict] = []

    def lookup_local(self, name):
        for scope in reversed(self.locals):
            if name in scope:
                return scope[name]
        return None

    def expect(self, e, expected):
        if expected is not None and e.sort != expected:
            raise _mismatch(e.span, expected, e.sort)
        return e

    def fun_sig(self, name):
        if name == self.self_name:
            return self.self_sig, ("self",)
        if name in self.sig.functions:
            return self.sig.functions[name], ("fun",)
        return None, None

    def res(self, e, expected=None):
        match e:
            case NatLit():
                return self.expect(e.with_sort(NAT), expected)
            case BoolLit():
                return self.expect(e.with_sort(BOOL), expected)
            case UnitLit():
                return self.expect(e.with_sort(UNIT), expected)
            case Var(name=n, span=sp):
                local = self.lookup_local(n)
                if local is not None:
                    return self.expect(replace(e, sort=local, ref=("local",)), expected)
                if n in self.params:
                    i, s = self.params[n]
                    return self.expect(replace(e, sort=s, ref=("param", i)), expected)
                if self.implicit is not None and n in self.implicit:
                    return self.expect(replace(e, sort=self.implicit[n], ref=("implicit",)), expected)
                fs, kind = self.fun_sig(n)
                if n in self.sig.ctors or fs is not None:
                    return self.res(Call(n, (), span=sp), expected)
                if n in self.sig.selectors:
                    raise SortMismatch(f"selector {n} needs an argument", sp)
                if self.implicit is not None and isinstance(expected, CodataSort):
                    self.implicit[n] = expected
                    return replace(e, sort=expected, ref=("implicit",))
                raise UnboundName(f"unbound name {n}", sp)
            case Call(fn=f, args=args, span=sp):
                return self.expect(self.res_call(e, f, args, sp), expected)
            case BinOp(op=op, left=l, right=r, span=sp):
                if op in ("+", "-", "*", "^"):
                    return self.expect(replace(e, left=self.res(l, NAT), right=self.res(r, NAT), sort=NAT), expected)
                if op in ("<", ">"):
                    return self.expect(replace(e, left=self.res(l, NAT), right=self.res(r, NAT), sort=BOOL), expected)
                if op == "=":
                    l2 = self.res(l)
                    if l2.sort not in (NAT, BOOL, UNIT):
                        raise SortMismatch(f"'=' compares base values, got {l2.sort}", l.span)
                    return self.expect(replace(e, left=l2, right=self.res(r, l2.sort), sort=BOOL), expected)
                return self.expect(replace(e, left=self.res(l, BOOL), right=self.res(r, BOOL), sort=BOOL), expected)
            case Not(arg=a):
                return self.expect(replace(e, arg=self.res(a, BOOL), sort=BOOL), expected)
            case If(cond=c, then=t, orelse=o):
                c2 = self.res(c, BOOL)
                t2 = self.res(t, expected)
                o2 = self.res(o, t2.sort)
                return replace(e, cond=c2, then=t2, orelse=o2, sort=t2.sort)
            case TupleLit(items=items, span=sp):
                if isinstance(expected, ProdSort) and len(expected.items) == len(items):
                    its = tuple(self.res(i, s) for i, s in zip(items, expected.items))
                else:
                    its = tuple(self.res(i) for i in items)
                return self.expect(replace(e, items=its, sort=ProdSort(tuple(i.sort for i in its))), expected)
            case ListLit(items=items, span=sp) | SetLit(items=items, span=sp):
                cls = ListSort if isinstance(e, ListLit) else FinSetSort
                elem = expected.elem if isinstance(expected, cls) else None
                its = []
                for i in items:
                    r = self.res(i, elem)
                    elem = r.sort
                    its.append(r)
                if elem is None:
                    raise SortMismatch("cannot infer the element sort of an empty literal", sp)
                return self.expect(replace(e, items=tuple(its), sort=cls(elem)), expected)
            case MapLam(pattern=pat, body=b, lst=l, span=sp):
                l2 = self.res(l)
                if not isinstance(l2.sort, ListSort):
                    raise _mismatch(l.span, "a list", l2.sort)
                el = l2.sort.elem
                if len(pat) == 1:
                    binds = {pat[0]: el}
                elif isinstance(el, ProdSort) and len(el.items) == len(pat):
                    binds = dict(zip(pat, el.items))
                else:
                    raise SortMismatch(f"pattern ({', '.join(pat)}) does not fit elements of sort {el}", sp)
                if len(set(pat)) != len(pat):
                    raise DuplicateName("repeated name in lambda pattern", sp)
                self.locals.append(binds)
                try:
                    want = expected.elem if isinstance(expected, ListSort) else None
                    b2 = self.res(b, want)
                finally:
                    self.locals.pop()
                return self.expect(replace(e, body=b2, lst=l2, sort=ListSort(b2.sort)), expected)
            case FImage(fn=f, arg=a, span=sp):
                a2 = self.res(a)
                if not isinstance(a2.sort, FinSetSort):
                    raise _mismatch(a.span, "a finite set", a2.sort)
                el = a2.sort.elem
                if f in self.sig.selectors:
                    codt, _, _, s = self.sig.selectors[f]
                    if el != CodataSort(codt):
                        raise _mismatch(a.span, f"FinSet {codt}", a2.sort)
                    return self.expect(replace(e, arg=a2, ref=("sel",), sort=FinSetSort(s)), expected)
                fs, kind = self.fun_sig(f)
                if fs is None:
                    raise UnboundName(f"unbound name {f}", sp)
                ps, r = fs
                if len(ps) != 1 or ps[0] != el:
                    raise SortMismatch(f"{f} cannot be mapped over {a2.sort}", sp)
                return self.expect(replace(e, arg=a2, ref=kind, sort=FinSetSort(r)), expected)
            case ExistsIn(lst=l, pred=p, span=sp):
                l2 = self.res(l)
                if not isinstance(l2.sort, CodataSort) or list_shape(self.sig.codatatypes[l2.sort.name]) is None:
                    raise _mismatch(l.span, "a lazy list", l2.sort)
                fs, _ = self.fun_sig(p)
                if fs is None:
                    raise UnboundName(f"unbound name {p}", sp)
                if fs != ((NAT,), BOOL):
                    raise SortMismatch(f"{p} must have sort Nat -> Bool", sp)
                return self.expect(replace(e, lst=l2, sort=BOOL), expected)
        raise TypeError(f"unknown expression {e!r}")

    def res_call(self, e, f, args, sp):
        if f in BUILTINS:
            if len(args) != BUILTINS[f]:
                raise SortMismatch(f"{f} takes {BUILTINS[f]} arguments", sp)
            if f == "gcd":
                a = tuple(self.res(x, NAT) for x in args)
                return replace(e, args=a, ref=("builtin",), sort=NAT)
            if f == "fmax":
                a = (self.res(args[0], FinSetSort(NAT)),)
                return replace(e, args=a, ref=("builtin",), sort=NAT)
            a = tuple(self.res(x) for x in args)
            for x in a:
                if not isinstance(x.sort, ListSort):
                    raise _mismatch(x.span, "a list", x.sort)
            return replace(e, args=a, ref=("builtin",), sort=ListSort(ProdSort((a[0].sort.elem, a[1].sort.elem))))
        if f in self.sig.ctors:
            codt, _, fsorts = self.sig.ctors[f]
            if len(args) != len(fsorts):
                raise SortMismatch(f"{f} takes {len(fsorts)} arguments, got {len(args)}", sp)
            a = tuple(self.res(x, s) for x, s in zip(args, fsorts))
            return replace(e, args=a, ref=("ctor",), sort=CodataSort(codt))
        if f in self.sig.selectors:
            codt, _, _, s = self.sig.selectors[f]
            if len(args) != 1:
                raise SortMismatch(f"selector {f} takes one argument", sp)
            return replace(e, args=(self.res(args[0], CodataSort(codt)),), ref=("sel",), sort=s)
        fs, kind = self.fun_sig(f)
        if fs is None:
            raise UnboundName(f"unbound name {f}", sp)
        ps, r = fs
        if len(args) != len(ps):
            raise SortMismatch(f"{f} takes {len(ps)} arguments, got {len(args)}", sp)
        a = tuple(self.res(x, s) for x, s in zip(args, ps))
        return replace(e, args=a, ref=kind, sort=r)


def list_shape(decl: CodatatypeDecl):
    """For a lazy-list-like codatatype return (cons ctor, element selector, tail selector)."""
    cons = [c for c in decl.ctors if c.fields]
    if len(cons) != 1 or len(decl.ctors) > 2:
        return None
    c = cons[0]
    elems = [s for s, t in c.fields if t == NAT]
    rest = [s for s, t in c.fields if t == CodataSort(decl.name)]
    if len(elems) == 1 and len(rest) == 1 and len(c.fields) == 2:
        return c.name, elems[0], rest[0]
    return None


class Resolver:
    def __init__(self, sig: Signature | None = None):
        self.sig = sig or Signature()

    def decl(self, d):
        match d:
            case CodatatypeDecl():
                return self.codatatype(d)
            case FunDecl():
                return self.fundecl(d)
            case ForceCmd(expr=e):
                r = ExprResolver(self.sig).res(e)
                if not isinstance(r.sort, CodataSort):
                    raise _mismatch(e.span, "a codatatype value", r.sort)
                return replace(d, expr=r)
            case CheckCmd(lhs=l, rhs=r):
                l2 = ExprResolver(self.sig).res(l)
                if not isinstance(l2.sort, CodataSort):
                    raise _mismatch(l.span, "a codatatype value", l2.sort)
                return replace(d, lhs=l2, rhs=ExprResolver(self.sig).res(r, l2.sort))
            case RegisterCmd(name=n, span=sp):
                if n not in self.sig.functions and not self.codata_selector(n):
                    raise UnboundName(f"unbound name {n}", sp)
                return d
            case ProveCmd():
                return self.prove(d)
        raise TypeError(d)

    def codata_selector(self, n):
        """The codatatype name when n selects a field of that same codatatype."""
        info = self.sig.selectors.get(n)
        if info and isinstance(info[3], CodataSort) and info[3].name == info[0]:
            return info[0]
        return None

    def selector_decl(self, n, span=None) -> FunDecl:
        """n wrapped as a unary operation, so a selector can go through the registration gate."""
        codt = CodataSort(self.codata_selector(n))
        params = (("x", codt),)
        body = ExprResolver(self.sig, params, n, ((codt,), codt)).res(Call(n, (Var("x", span),), span), codt)
        return FunDecl(n, params, codt, body, span=span)

    def codatatype(self, d: CodatatypeDecl):
        if d.name in self.sig.codatatypes or d.name in ("Nat", "Bool", "Unit", "List", "FinSet"):
            raise DuplicateName(f"sort {d.name} already declared", d.span)
        if not d.ctors:
            raise SortMismatch("a codatatype needs a constructor", d.span)
        self.sig.codatatypes[d.name] = d
        sels = set()
        for c in d.ctors:
            if self.sig.taken(c.name):
                raise DuplicateName(f"name {c.name} already declared", c.span)
            for s, t in c.fields:
                if s in sels or self.sig.taken(s):
                    raise DuplicateName(f"selector {s} already declared", c.span)
                sels.add(s)
                _check_sort(self.sig, t, c.span)
                for other in self.sig.codatatypes:
                    if other != d.name and mentions(t, other):
                        raise SortMismatch(f"selector {s} may only nest {d.name}", c.span)
                if isinstance(t, ProdSort) and not is_base(t):
                    raise SortMismatch(f"selector {s}: products of codata are not supported", c.span)
        for i, c in enumerate(d.ctors):
            self.sig.ctors[c.name] = (d.name, i, tuple(t for _, t in c.fields))
            for j, (s, t) in enumerate(c.fields):
                self.sig.selectors[s] = (d.name, c.name, j, t)
        return d

    def fundecl(self, d: FunDecl):
        if self.sig.taken(d.name) or d.name in self.sig.codatatypes:
            raise DuplicateName(f"name {d.name} already declared", d.span)
        names = [p for p, _ in d.params]
        if len(set(names)) != len(names):
            raise DuplicateName("repeated parameter name", d.span)
        for _, s in d.params:
            _check_sort(self.sig, s, d.span)
            if isinstance(s, ProdSort):
                raise SortMismatch("product-sorted parameters are not supported", d.span)
        _check_sort(self.sig, d.result, d.span)
        fsig = (tuple(s for _, s in d.params), d.result)
        r = ExprResolver(self.sig, d.params, d.name, fsig)
        body = r.res(d.body, d.result)
        self.sig.functions[d.name] = fsig
        return replace(d, body=body)

    def prove(self, d: ProveCmd):
        r = ExprResolver(self.sig, implicit=True)
        lhs = r.res(d.lhs)
        if not isinstance(lhs.sort, CodataSort):
            raise _mismatch(d.lhs.span, "a codatatype value", lhs.sort)
        rhs = r.res(d.rhs, lhs.sort)
        goal_vars = dict(r.implicit)
        schemas = []
        # without `via`, the goal itself is the one-schema candidate
        for a, b in d.schemas if d.schemas is not None else ((d.lhs, d.rhs),):
            rs = ExprResolver(self.sig, implicit=True)
            rs.implicit.update(goal_vars)
            a2 = rs.res(a)
            if not isinstance(a2.sort, CodataSort):
                raise _mismatch(a.span, "a codatatype value", a2.sort)
            schemas.append((a2, rs.res(b, a2.sort)))
        if d.depth < 1:
            raise SortMismatch("certificate depth must be at least 1", d.span)
        return replace(d, lhs=lhs, rhs=rhs, schemas=tuple(schemas))


def resolve(f: SourceFile, sig: Signature | None = None) -> SourceFile:
    r = Resolver(sig)
    return SourceFile(tuple(r.decl(d) for d in f.decls))
