"""Equality of codata by certificates checked up to congruence closure.

A certificate is a finite relation R given by schemas over universally
quantified variables. It is accepted when the goal lies in cl(R) and every
schema steps to equal heads and to tails related by cl(R), where cl(R) is
closed under equivalence, under every registered operation, and under
rewriting with previously verified lemmas.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any

from .errors import CorecError, NotProvable, RuleViolation, SelectorMismatch, SymbolicBranch
from .functor import ID, Container, FinSetOf, Inj, Leaf, ListOf, Prod, canonical_set
from .interp import (
    BApp, BASE_OPS, BVar, Formal, Program, SymLayer, SymList, Sym, TemplateEval, _btext, arity_data,
    bapp, is_sym,
)
from .runtime import compare
from .syntax import (
    BinOp, BoolLit, Call, If, ListLit, NatLit, Not, SetLit, TupleLit, UnitLit, Var,
)

# -- symbolic terms --------------------------------------------------------------------


class SymTerm:
    __slots__ = ()

    def canon(self):
        return stext(self)

    def __repr__(self):
        return stext(self)


@dataclass(frozen=True, repr=False)
class SVar(SymTerm):
    name: str
    sort: str


@dataclass(frozen=True, repr=False)
class SSel(SymTerm):
    """A formal observation of a variable chain, e.g. `tail xs`."""

    sel: str
    arg: SymTerm
    sort: str


@dataclass(frozen=True, repr=False)
class SOp(SymTerm):
    """A registered operation (or the constructor bundle) applied to container data."""

    op: str
    args: Any
    sort: str


@dataclass(frozen=True, repr=False)
class SDef(SymTerm):
    """A definition that is not registered; it is stepped through its body."""

    name: str
    args: Any
    sort: str


@dataclass(frozen=True, repr=False)
class SAC(SymTerm):
    """Normal form of an associative-commutative operation: sorted flat arguments."""

    op: str
    args: tuple
    sort: str


@dataclass(frozen=True)
class BObs(Sym):
    """A base-valued observation of a variable chain, e.g. `head xs`."""

    sel: str
    term: SymTerm

    def text(self):
        return f"{self.sel} {_paren(stext(self.term))}"

    def __repr__(self):
        return self.text()


def _paren(s: str) -> str:
    return f"({s})" if " " in s and not s.startswith("(") else s


def _dtext(x) -> str:
    if isinstance(x, SymTerm):
        return stext(x)
    if isinstance(x, SymList):
        return f"[{_dtext(x.elem)} | len {_btext(x.length)}]"
    if isinstance(x, Inj):
        return _dtext(x.value)
    if isinstance(x, tuple):
        return "[" + ", ".join(_dtext(y) for y in x) + "]"
    return _btext(x)


@lru_cache(maxsize=200_000)
def stext(t) -> str:
    match t:
        case SVar(name=n):
            return n
        case SSel(sel=s, arg=a):
            return f"{s} {_paren(stext(a))}"
        case SOp(op=op, args=args) | SDef(name=op, args=args):
            items = args.value if isinstance(args, Inj) else args
            if items == ((),):
                return f"⟦{op}⟧()"
            return f"⟦{op}⟧(" + ", ".join(_dtext(x) for x in items) + ")"
        case SAC(op=op, args=args):
            return f"⟦{op}⟧{{" + ", ".join(stext(a) for a in args) + "}"
    return _dtext(t)


def sym_sort(t) -> str | None:
    return getattr(t, "sort", None)


# -- base expressions: normal forms and testing ---------------------------------------------


def _padd(p, q):
    r = dict(p)
    for m, c in q.items():
        r[m] = r.get(m, 0) + c
        if r[m] == 0:
            del r[m]
    return r


def _pmul(p, q):
    r = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            d = dict(m1)
            for a, k in m2:
                d[a] = d.get(a, 0) + k
            m = tuple(sorted(d.items()))
            r[m] = r.get(m, 0) + c1 * c2
            if r[m] == 0:
                del r[m]
    return r


def _pconst(p):
    if not p:
        return 0
    if len(p) == 1 and () in p:
        return p[()]
    return None


def _patom(key):
    return {((key, 1),): 1}


def _ptext(p) -> str:
    if not p:
        return "0"
    parts = []
    for m in sorted(p, key=lambda m: (len(m), m)):
        c = p[m]
        mono = "·".join(a if k == 1 else f"{a}^{k}" for a, k in m)
        parts.append(str(c) if not m else (mono if c == 1 else f"{c}·{mono}"))
    return " + ".join(parts)


MAX_EXPANSION = 64


def to_poly(e) -> dict:
    """Polynomial normal form with commutative-ring rewrites and x^(a+b) = x^a·x^b.

    Non-polynomial subterms become atoms keyed by the normal form of their arguments."""
    if e is True or e is False:
        return _patom("true" if e else "false")
    if isinstance(e, int):
        return {(): e} if e else {}
    if isinstance(e, (BVar, BObs)):
        return _patom(e.text())
    if isinstance(e, BApp):
        op, args = e.op, e.args
        if op == "+":
            return _padd(to_poly(args[0]), to_poly(args[1]))
        if op == "*":
            return _pmul(to_poly(args[0]), to_poly(args[1]))
        if op == "^":
            return _ppow(to_poly(args[0]), to_poly(args[1]))
        ps = [to_poly(a) for a in args]
        if op in ("min", "max", "gcd", "=", "and", "or"):
            keys = sorted(_ptext(p) for p in ps)
        else:
            keys = [_ptext(p) for p in ps]
        if op == "-" and _pconst(ps[1]) == 0:
            return ps[0]
        return _patom(f"{op}(" + ", ".join(keys) + ")")
    return _patom(repr(e))


def _ppow(b, x):
    k = _pconst(x)
    if k is not None:
        if k <= MAX_EXPANSION:
            r = {(): 1}
            for _ in range(k):
                r = _pmul(r, b)
            return r
        bc = _pconst(b)
        if bc is not None:
            return {(): bc**k} if bc else {}
        return _patom(f"({_ptext(b)})^{k}")
    if len(x) > 1:
        r = {(): 1}
        for m, c in x.items():
            r = _pmul(r, _ppow(b, {m: c}))
        return r
    ((m, c),) = x.items()
    if c > 1 and c <= MAX_EXPANSION:
        base = _ppow(b, {m: 1})
        return _ppow(base, {(): c})
    if _pconst(b) == 1:
        return {(): 1}
    return _patom(f"({_ptext(b)})^({_ptext(x)})")


def _base_vars(e, out):
    if isinstance(e, (BVar, BObs)):
        out[e.text()] = e
    elif isinstance(e, BApp):
        for a in e.args:
            _base_vars(a, out)
    return out


def _beval(e, assign, funcs):
    if isinstance(e, (BVar, BObs)):
        return assign[e.text()]
    if isinstance(e, BApp):
        args = [_beval(a, assign, funcs) for a in e.args]
        if e.op == "^" and args[1] > 1 << 20:
            raise OverflowError("exponent too large to test")
        if e.op.startswith("fn:"):
            return funcs[e.op[3:]](*args)
        return BASE_OPS[e.op](*args)
    return e


@dataclass
class HeadVerdict:
    equal: bool
    by: str  # "rewrite", "trials" or "witness"
    witness: dict | None = None
    left: Any = None
    right: Any = None

    def __bool__(self):
        return self.equal

    def to_json(self):
        d = {"equal": self.equal, "by": self.by}
        if self.witness is not None:
            d.update(witness=self.witness, left=_numtext(self.left), right=_numtext(self.right))
        return d


def _numtext(x):
    if isinstance(x, int) and not isinstance(x, bool) and x.bit_length() > 4000:
        return f"<{x.bit_length()}-bit number>"
    return _btext(x)


def heads_equal(e1, e2, trials: int = 64, seed: int = 0, funcs=None) -> HeadVerdict:
    """Normalize, then test on pseudo-random assignments below 2^16."""
    try:
        if to_poly(e1) == to_poly(e2):
            return HeadVerdict(True, "rewrite")
    except RecursionError:  # pragma: no cover - pathological nesting
        pass
    names = sorted(set(_base_vars(e1, {})) | set(_base_vars(e2, {})))
    rng = random.Random(seed)
    assigns = [dict.fromkeys(names, 0), dict.fromkeys(names, 1)]
    # a few small assignments first keep witnesses readable
    while len(assigns) < min(trials, 10):
        assigns.append({n: rng.randrange(8) for n in names})
    while len(assigns) < trials:
        assigns.append({n: rng.randrange(1 << 16) for n in names})
    for a in assigns[:trials]:
        try:
            v1, v2 = _beval(e1, a, funcs), _beval(e2, a, funcs)
        except OverflowError:
            continue
        if v1 != v2:
            return HeadVerdict(False, "witness", a, v1, v2)
    return HeadVerdict(True, "trials")


def base_key(e):
    """Hashable normal form of a base value, used inside term equality."""
    if isinstance(e, Sym) or isinstance(e, BApp):
        return ("poly", _ptext(to_poly(e)))
    return e


# -- symbolic observation ---------------------------------------------------------------------


class SymObs(SymLayer):
    """The lazily computed one-step observation of a symbolic term."""

    def __init__(self, prover: "Prover", t: SymTerm):
        self.prover = prover
        self.t = t
        self._layer = None

    @property
    def data(self):
        if self._layer is None:
            self._layer = self.prover.step(self.t)
        return self._layer

    def select(self, sel):
        codt = self.prover.prog.sel_codt[sel]
        tag, idx, d = codt.selectors[sel]
        t, fields = codt.split(self.data)
        if t != tag:
            raise SelectorMismatch(f"{sel} applied to {codt.ctors[t][0]}")
        return self.prover.wrap_formals(d, fields[idx])

    def as_container(self):
        codt = self.prover.codt_of(self.t)
        return Container(codt.desc, _map_data(codt.desc, self.data, lambda x: Leaf(self.prover.formal(x))))


def _map_data(desc, data, f):
    """map_data that also passes through symbolic lists."""
    match desc:
        case ListOf(e) if isinstance(data, SymList):
            return SymList(data.length, _map_data(e, data.elem, f))
        case ListOf(e):
            return tuple(_map_data(e, x, f) for x in data)
        case FinSetOf(e):
            return canonical_set(_map_data(e, x, f) for x in data)
        case Prod(parts):
            return tuple(_map_data(p, x, f) for p, x in zip(parts, data))
        case _ if desc == ID:
            return f(data)
    from .functor import Sum

    if isinstance(desc, Sum):
        return Inj(data.tag, _map_data(desc.alts[data.tag], data.value, f))
    return data


# -- derivations -----------------------------------------------------------------------------------


@dataclass
class Deriv:
    rule: str  # Refl, SchemaInstance, Sym, Congr, Trans, LemmaRewrite
    left: str
    right: str
    detail: Any = None
    premises: list = field(default_factory=list)

    def to_json(self):
        d = {"rule": self.rule, "left": self.left, "right": self.right}
        if self.detail is not None:
            d["detail"] = self.detail
        if self.premises:
            d["premises"] = [p.to_json() for p in self.premises]
        return d

    def rules(self) -> set:
        out = {self.rule}
        for p in self.premises:
            out |= p.rules()
        return out


@dataclass
class Lemma:
    name: str
    lhs: SymTerm
    rhs: SymTerm


@dataclass
class Certificate:
    schemas: list  # of (SymTerm, SymTerm)
    depth: int
    lemmas: list = field(default_factory=list)


@dataclass
class ProofResult:
    verified: bool
    goal: tuple
    derivations: list = field(default_factory=list)
    stage: str | None = None
    schema: int | None = None
    detail: Any = None
    index: int | None = None

    def __bool__(self):
        return self.verified

    def to_json(self):
        d = {"verified": self.verified, "goal": [stext(self.goal[0]), stext(self.goal[1])]}
        if self.verified:
            d["derivations"] = self.derivations
        else:
            d.update(stage=self.stage, schema=self.schema, detail=self.detail, index=self.index)
        return d


# -- the prover ----------------------------------------------------------------------------------------


class Prover:
    """Symbolic stepping and closure search over a frozen program state."""

    def __init__(self, prog: Program, trials: int = 64, seed: int = 0):
        self.prog = prog
        self.trials = trials
        self.seed = seed
        self.funcs = {n: f.impl for n, f in prog.funcs.items() if f.is_base}
        self._steps: dict = {}
        self._depth = 0

    # sorts and formals
    def codt_of(self, t):
        return self.prog.codts[sym_sort(t)]

    def formal(self, t: SymTerm) -> Formal:
        return Formal(stext(t), t, SymObs(self, t), 0)

    def wrap_formals(self, d, v):
        if d == ID:
            return Leaf(self.formal(v))
        if isinstance(d, ListOf) and d.elem == ID:
            if isinstance(v, SymList):
                return SymList(v.length, Leaf(self.formal(v.elem)))
            return tuple(Leaf(self.formal(x)) for x in v)
        if isinstance(d, FinSetOf) and d.elem == ID:
            return canonical_set(Leaf(self.formal(x)) for x in v)
        return v

    def is_op(self, codt_name, op):
        return self.prog.registered(codt_name, op)

    # surface expressions
    def to_sym(self, e, env=None):
        env = env or {}
        match e:
            case NatLit(value=v) | BoolLit(value=v):
                return v
            case UnitLit():
                return ()
            case Var(name=n, ref=ref):
                if n in env:
                    return env[n]
                if ref and ref[0] == "implicit":
                    return SVar(n, e.sort.name)
                raise NotProvable(f"cannot reason about {n} symbolically", e.span)
            case BinOp(op=op, left=l, right=r):
                return bapp(op, self.to_sym(l, env), self.to_sym(r, env))
            case Not(arg=a):
                return bapp("not", self.to_sym(a, env))
            case If(cond=c, then=t, orelse=o):
                cv = self.to_sym(c, env)
                if is_sym(cv):
                    return bapp("if", cv, self.to_sym(t, env), self.to_sym(o, env))
                return self.to_sym(t if cv else o, env)
            case TupleLit(items=items) | ListLit(items=items):
                return tuple(self.to_sym(i, env) for i in items)
            case SetLit(items=items):
                return canonical_set(self.to_sym(i, env) for i in items)
            case Call(fn=f, args=args, ref=ref):
                kind = ref[0] if ref else "fun"
                vals = tuple(self.to_sym(a, env) for a in args)
                if kind == "ctor":
                    codt = self.prog.ctor_codt[f]
                    return SOp(codt.entry_name, codt.data(f, vals), codt.name)
                if kind == "sel":
                    return self.select(vals[0], f)
                if kind == "builtin":
                    if f == "gcd":
                        return bapp("gcd", *vals)
                    if f == "fmax":
                        return bapp("max", *vals[0])
                    return tuple(zip(*vals))
                fn = self.prog.funcs[f]
                if fn.is_base:
                    if any(is_sym(v) for v in vals):
                        return BApp("fn:" + f, vals)
                    return fn.impl(*vals)
                return self.apply(fn, vals)
        raise NotProvable(f"unsupported expression in a proof: {type(e).__name__}", getattr(e, "span", None))

    def apply(self, fn, vals):
        data = arity_data(fn.decl.params, vals)
        if fn.registered and self.is_op(fn.codt.name, fn.name):
            return SOp(fn.name, data, fn.codt.name)
        return SDef(fn.name, data, fn.codt.name)

    def select(self, t, sel):
        codt = self.prog.sel_codt[sel]
        tag, idx, d = codt.selectors[sel]
        tg, fields = codt.split(self.step(t))
        if tg != tag:
            raise NotProvable(f"{sel} applied to {codt.ctors[tg][0]}")
        return fields[idx]

    # one step
    def step(self, t):
        """F-layer data of the first observation of t, over symbolic terms."""
        hit = self._steps.get(t)
        if hit is not None:
            return hit
        self._depth += 1
        try:
            if self._depth > 200:
                raise NotProvable(f"{stext(t)} does not reach a constructor")
            out = self._step(t)
        finally:
            self._depth -= 1
        self._steps[t] = out
        return out

    def _step(self, t):
        match t:
            case SVar() | SSel():
                return self.var_layer(t)
            case SOp(op=op, args=args, sort=s):
                codt = self.prog.codts[s]
                if op == codt.entry_name:
                    return args
                entry = self.prog.states[s].entry(op)
                k = entry.arity
                formals = Container(k, _map_data(k, args, self.formal))
                try:
                    layer = entry.rule.apply(formals, mode="symbolic")
                except SymbolicBranch as e:
                    raise NotProvable(f"stepping {stext(t)}: {e.message}") from None
                return self.term_layer(codt, layer)
            case SDef(name=n, args=args, sort=s):
                fn = self.prog.funcs[n]
                codt = self.prog.codts[s]
                params = fn.decl.params
                ev = TemplateEval(self.prog, codt, n, params, "symbolic")
                ev.allow_defs = True
                env = {}
                if params:
                    parts = _parts(params, codt.name)
                    for (p, _), d, v in zip(params, parts, args):
                        env[p] = self.wrap_formals(d, v)
                try:
                    u = self.from_term(ev.ev(fn.decl.body, env), codt)
                except SymbolicBranch as e:
                    raise NotProvable(f"stepping {stext(t)}: {e.message}") from None
                except RuleViolation as e:
                    raise NotProvable(f"stepping {stext(t)}: {e.message}") from None
                if u == t:
                    raise NotProvable(f"{stext(t)} unfolds to itself")
                return self.step(u)
        raise NotProvable(f"cannot step {t!r}")

    def var_layer(self, t):
        codt = self.codt_of(t)
        if not codt.single:
            raise NotProvable(f"{stext(t)} has several constructors; its first layer is unknown")
        fields = []
        for s, d in codt.ctors[0][1]:
            if d == ID:
                fields.append(SSel(s, t, codt.name))
            elif isinstance(d, ListOf) and d.elem == ID:
                fields.append(SymList(BObs(f"#{s}", t), SSel(f"{s}[i]", t, codt.name)))
            elif isinstance(d, (ListOf, FinSetOf)):
                raise NotProvable(f"symbolic {s} of {stext(t)} is not supported")
            else:
                fields.append(BObs(s, t))
        return tuple(fields)

    def term_layer(self, codt, layer: Container):
        return _map_data(layer.desc, layer.data, lambda u: self.from_term(u, codt))

    def from_term(self, u, codt):
        """Σ*-term over symbolic formals -> SymTerm."""
        if isinstance(u, Leaf):
            p = u.payload
            if isinstance(p, Formal):
                return p.value
            raise NotProvable(f"unexpected leaf {p!r}")
        data = _map_data(u.args.desc, u.args.data, lambda x: self.from_term(x, codt))
        if u.op == codt.entry_name:
            return SOp(u.op, data, codt.name)
        if self.is_op(codt.name, u.op):
            return SOp(u.op, data, codt.name)
        return SDef(u.op, data, codt.name)


def _parts(params, codt_name):
    from .interp import arity_desc

    return arity_desc(params, codt_name).parts


# -- normalization and matching ------------------------------------------------------------------


def _is_pvar(p, pvars):
    return isinstance(p, SVar) and p in pvars


class Closure:
    """cl(R) up to lemmas: bounded search for derivations."""

    def __init__(self, prover: Prover, schemas, lemmas=(), depth: int = 1):
        self.pv = prover
        self.depth = depth
        self.ac: set = set()
        self.comm: set = set()
        self.rules: list = []
        lemmas = list(lemmas)
        for lm in lemmas:
            kind = _lemma_shape(lm)
            if kind and kind[0] == "comm":
                self.comm.add(kind[1])
        for lm in lemmas:
            kind = _lemma_shape(lm)
            if kind and kind[0] == "assoc" and kind[1] in self.comm:
                self.ac.add(kind[1])
        self.comm -= self.ac
        for lm in lemmas:
            kind = _lemma_shape(lm)
            if kind and (kind[1] in self.ac or kind[1] in self.comm):
                continue
            lhs = self.norm(lm.lhs, rewrite=False)
            self.rules.append((lm.name, lhs, lm.rhs, _vars(lm.lhs)))
        self._norm: dict = {}
        self.schemas = []
        for i, (a, b) in enumerate(schemas):
            pvars = _vars(a) | _vars(b)
            self.schemas.append((i, self.norm(a), self.norm(b), pvars))
        self._memo: dict = {}

    # normal forms
    def norm(self, t, rewrite=True):
        if rewrite:
            hit = self._norm.get(t)
            if hit is not None:
                return hit
        out = self._norm_node(t, rewrite)
        if rewrite:
            for _ in range(50):
                nxt = self._lemma_step(out)
                if nxt is None:
                    break
                out = nxt
            self._norm[t] = out
        return out

    def _norm_data(self, data, rewrite):
        if isinstance(data, SymTerm):
            return self.norm(data, rewrite)
        if isinstance(data, Inj):
            return Inj(data.tag, self._norm_data(data.value, rewrite))
        if isinstance(data, SymList):
            return SymList(base_key(data.length), self._norm_data(data.elem, rewrite))
        if isinstance(data, tuple):
            return tuple(self._norm_data(x, rewrite) for x in data)
        return base_key(data)

    def _norm_node(self, t, rewrite):
        match t:
            case SVar():
                return t
            case SSel(sel=s, arg=a, sort=so):
                return SSel(s, self.norm(a, rewrite), so)
            case SOp(op=op, args=args, sort=s):
                data = self._norm_data(args, rewrite)
                if op in self.ac:
                    flat = []
                    for x in data:
                        if isinstance(x, SAC) and x.op == op:
                            flat.extend(x.args)
                        else:
                            flat.append(x)
                    return SAC(op, tuple(sorted(flat, key=stext)), s)
                if op in self.comm:
                    return SOp(op, tuple(sorted(data, key=stext)), s)
                return SOp(op, data, s)
            case SDef(name=n, args=args, sort=s):
                return SDef(n, self._norm_data(args, rewrite), s)
            case SAC(op=op, args=args, sort=s):
                return self._norm_node(SOp(op, args, s), rewrite) if len(args) == 2 else SAC(
                    op, tuple(sorted((self.norm(a, rewrite) for a in args), key=stext)), s
                )
        return t

    def rebuild(self, t):
        return self.norm(_unflatten(t))

    def _lemma_step(self, t):
        """One directed lemma rewrite anywhere in t (outermost first), renormalized."""
        for name, lhs, rhs, pvars in self.rules:
            for sigma in self.match(lhs, t, {}, pvars):
                return self.norm(self.subst(rhs, sigma))
        for pos, sub, rebuild in _positions(t):
            if pos == ():
                continue
            for name, lhs, rhs, pvars in self.rules:
                for sigma in self.match(lhs, sub, {}, pvars):
                    return self.norm(_unflatten(rebuild(self.norm(self.subst(rhs, sigma)))))
        return None

    # substitution and matching
    def subst(self, t, sigma):
        match t:
            case SVar():
                return sigma.get(t, t)
            case SSel(sel=s, arg=a, sort=so):
                a2 = self.subst(a, sigma)
                if isinstance(a2, (SVar, SSel)):
                    return SSel(s, a2, so)
                return self.pv.select(a2, s) if "[" not in s else _child_of(self.pv, a2, s)
            case SOp(op=op, args=args, sort=so):
                return SOp(op, self._subst_data(args, sigma), so)
            case SDef(name=n, args=args, sort=so):
                return SDef(n, self._subst_data(args, sigma), so)
            case SAC(op=op, args=args, sort=so):
                return SAC(op, tuple(self.subst(a, sigma) for a in args), so)
        return self._subst_data(t, sigma)

    def _subst_data(self, d, sigma):
        if isinstance(d, SymTerm):
            return self.subst(d, sigma)
        if isinstance(d, Inj):
            return Inj(d.tag, self._subst_data(d.value, sigma))
        if isinstance(d, SymList):
            return SymList(self._subst_data(d.length, sigma), self._subst_data(d.elem, sigma))
        if isinstance(d, tuple):
            return tuple(self._subst_data(x, sigma) for x in d)
        if isinstance(d, BObs):
            t = self.subst(d.term, sigma)
            if isinstance(t, (SVar, SSel)):
                return BObs(d.sel, t)
            return self.pv.select(t, d.sel)
        if isinstance(d, BApp):
            return bapp(d.op, *(self._subst_data(a, sigma) for a in d.args))
        return d

    def match(self, p, t, sigma, pvars):
        """Substitutions σ with σ(p) = t modulo AC/C of the normalized operations."""
        if isinstance(p, SVar) and p in pvars:
            bound = sigma.get(p)
            if bound is None:
                if sym_sort(t) == p.sort:
                    yield {**sigma, p: t}
            elif bound == t:
                yield sigma
            return
        if type(p) is not type(t):
            if isinstance(p, SAC) and isinstance(t, SAC):
                pass
            elif not (isinstance(p, SymTerm) or isinstance(t, SymTerm)):
                if self._base_match(p, t, sigma):
                    yield sigma
                return
            else:
                return
        match p:
            case SVar():
                if p == t:
                    yield sigma
            case SSel(sel=s, arg=a):
                if t.sel == s:
                    yield from self.match(a, t.arg, sigma, pvars)
            case SOp(op=op, args=args) | SDef(name=op, args=args):
                tname = t.op if isinstance(t, SOp) else t.name
                if tname != op:
                    return
                if op in self.comm and isinstance(p, SOp):
                    seen = set()
                    for perm in itertools.permutations(t.args):
                        if perm in seen:
                            continue
                        seen.add(perm)
                        yield from self.match_data(args, perm, sigma, pvars)
                else:
                    yield from self.match_data(args, t.args, sigma, pvars)
            case SAC(op=op, args=args):
                if t.op == op:
                    # structured patterns first, so a trailing variable can absorb the rest
                    ps = sorted(args, key=lambda a: _is_pvar(a, pvars))
                    yield from self.match_ac(ps, list(t.args), sigma, pvars, op, t.sort)
            case _:
                if self._base_match(p, t, sigma):
                    yield sigma

    def match_data(self, p, t, sigma, pvars):
        if isinstance(p, SymTerm) or isinstance(t, SymTerm):
            if isinstance(p, SymTerm) and isinstance(t, SymTerm):
                yield from self.match(p, t, sigma, pvars)
            return
        if isinstance(p, Inj):
            if isinstance(t, Inj) and t.tag == p.tag:
                yield from self.match_data(p.value, t.value, sigma, pvars)
            return
        if isinstance(p, SymList):
            if isinstance(t, SymList) and self._base_match(p.length, t.length, sigma):
                yield from self.match_data(p.elem, t.elem, sigma, pvars)
            return
        if isinstance(p, tuple):
            if not isinstance(t, tuple) or len(p) != len(t):
                return
            # codata positions first so base positions see a complete substitution
            order = sorted(range(len(p)), key=lambda i: not _has_term(p[i]))
            yield from self._match_seq([p[i] for i in order], [t[i] for i in order], sigma, pvars)
            return
        if self._base_match(p, t, sigma):
            yield sigma

    def _match_seq(self, ps, ts, sigma, pvars):
        if not ps:
            yield sigma
            return
        for s2 in self.match_data(ps[0], ts[0], sigma, pvars):
            yield from self._match_seq(ps[1:], ts[1:], s2, pvars)

    def match_ac(self, ps, ts, sigma, pvars, op, sort, extend=False):
        if not ps:
            if not ts:
                yield sigma
            return
        p, rest = ps[0], ps[1:]
        if not rest and isinstance(p, SVar) and p in pvars and len(ts) > 1:
            yield from self.match(p, SAC(op, tuple(ts), sort), sigma, pvars)
            return
        tried = set()
        for i, t in enumerate(ts):
            if t in tried:
                continue
            tried.add(t)
            for s2 in self.match(p, t, sigma, pvars):
                yield from self.match_ac(rest, ts[:i] + ts[i + 1:], s2, pvars, op, sort)

    def _base_match(self, p, t, sigma):
        pk = base_key(self._subst_data(p, sigma)) if sigma else base_key(p)
        return pk == base_key(t)

    # the closure search
    def derive(self, l, r, depth=None):
        depth = self.depth if depth is None else depth
        nl, nr = self.norm(l), self.norm(r)
        return self._derive(nl, nr, depth)

    def _derive(self, nl, nr, depth):
        key = (nl, nr, depth)
        if key in self._memo:
            return self._memo[key]
        self._memo[key] = None  # cut cycles
        d = self._derive_new(nl, nr, depth)
        self._memo[key] = d
        return d

    def _derive_new(self, nl, nr, depth):
        L, R = stext(nl), stext(nr)
        if nl == nr:
            return Deriv("Refl", L, R)
        for i, a, b, pvars in self.schemas:
            if self._instance(a, b, nl, nr, pvars):
                return Deriv("SchemaInstance", L, R, {"schema": i})
            if self._instance(a, b, nr, nl, pvars):
                return Deriv("Sym", L, R, premises=[Deriv("SchemaInstance", R, L, {"schema": i})])
        d = self._congr(nl, nr, depth)
        if d is not None:
            return d
        if depth > 0:
            for side, t, other in ((0, nl, nr), (1, nr, nl)):
                for i, t2 in self._schema_rewrites(t):
                    if t2 == t:
                        continue
                    sub = self._derive(t2, other, depth - 1) if side == 0 else self._derive(other, t2, depth - 1)
                    if sub is not None:
                        step = Deriv("SchemaInstance", stext(t), stext(t2), {"schema": i, "inContext": True})
                        prem = [step, sub] if side == 0 else [sub, Deriv("Sym", stext(t2), stext(t), premises=[step])]
                        return Deriv("Trans", L, R, premises=prem)
        return None

    def _instance(self, a, b, l, r, pvars):
        for sigma in self.match(a, l, {}, pvars):
            if self.norm(self.subst(b, sigma)) == r:
                return True
        return False

    def _congr(self, nl, nr, depth):
        L, R = stext(nl), stext(nr)
        if isinstance(nl, SOp) and isinstance(nr, SOp) and nl.op == nr.op:
            prem = self._data_pairs(nl.args, nr.args, depth)
            if prem is not None:
                return Deriv("Congr", L, R, {"op": nl.op}, prem)
            if nl.op in self.comm:
                prem = self._data_pairs(nl.args, tuple(reversed(nr.args)), depth)
                if prem is not None:
                    return Deriv("Congr", L, R, {"op": nl.op, "commuted": True}, prem)
        if isinstance(nl, SAC) and isinstance(nr, SAC) and nl.op == nr.op and len(nl.args) == len(nr.args):
            if len(nl.args) <= 6:
                for perm in itertools.permutations(nr.args):
                    prem = []
                    for a, b in zip(nl.args, perm):
                        d = self._derive(a, b, depth)
                        if d is None:
                            break
                        prem.append(d)
                    else:
                        return Deriv("Congr", L, R, {"op": nl.op, "modulo": "AC"}, prem)
        return None

    def _data_pairs(self, a, b, depth):
        if isinstance(a, SymTerm) and isinstance(b, SymTerm):
            d = self._derive(a, b, depth)
            return None if d is None else [d]
        if isinstance(a, SymTerm) or isinstance(b, SymTerm):
            return None
        if isinstance(a, Inj):
            if not isinstance(b, Inj) or a.tag != b.tag:
                return None
            return self._data_pairs(a.value, b.value, depth)
        if isinstance(a, SymList):
            if not isinstance(b, SymList) or a.length != b.length:
                return None
            return self._data_pairs(a.elem, b.elem, depth)
        if isinstance(a, tuple):
            if not isinstance(b, tuple) or len(a) != len(b):
                return None
            out = []
            for x, y in zip(a, b):
                p = self._data_pairs(x, y, depth)
                if p is None:
                    return None
                out.extend(p)
            return out
        return [] if base_key(a) == base_key(b) else None

    def _schema_rewrites(self, t):
        """Every single rewrite of t by a schema instance (either direction) in an operation context."""
        out = []
        for pos, sub, rebuild in _positions(t, self.pv, ops_only=True):
            for i, a, b, pvars in self.schemas:
                for src, dst in ((a, b), (b, a)):
                    for sigma in self.match(src, sub, {}, pvars):
                        out.append((i, self.norm(_unflatten(rebuild(self.norm(self.subst(dst, sigma)))))))
                    if isinstance(sub, SAC) and isinstance(src, SAC) and src.op == sub.op and len(src.args) < len(sub.args):
                        for chosen in itertools.combinations(range(len(sub.args)), len(src.args)):
                            part = SAC(sub.op, tuple(sub.args[k] for k in chosen), sub.sort)
                            rest = tuple(sub.args[k] for k in range(len(sub.args)) if k not in chosen)
                            for sigma in self.match(src, part, {}, pvars):
                                new = self.norm(self.subst(dst, sigma))
                                out.append((i, self.norm(_unflatten(rebuild(SAC(sub.op, rest + (new,), sub.sort))))))
        return out


def _has_term(d) -> bool:
    if isinstance(d, SymTerm):
        return True
    if isinstance(d, (tuple,)):
        return any(_has_term(x) for x in d)
    if isinstance(d, (Inj,)):
        return _has_term(d.value)
    if isinstance(d, SymList):
        return _has_term(d.elem)
    return False


def _child_of(pv, t, s):
    fields = pv.step(t)
    sel = s[: s.index("[")]
    codt = pv.codt_of(t)
    _, idx, _ = codt.selectors[sel]
    v = codt.split(fields)[1][idx]
    if isinstance(v, SymList):
        return v.elem
    raise NotProvable(f"{sel} of {stext(t)} is not a uniform list")


def _unflatten(t):
    """SAC -> nested binary SOp so that it can be renormalized."""
    match t:
        case SAC(op=op, args=args, sort=s):
            args = [_unflatten(a) for a in args]
            acc = args[0]
            for a in args[1:]:
                acc = SOp(op, (acc, a), s)
            return acc
        case SOp(op=op, args=args, sort=s):
            return SOp(op, _unflatten_data(args), s)
        case SDef(name=n, args=args, sort=s):
            return SDef(n, _unflatten_data(args), s)
        case SSel(sel=sl, arg=a, sort=s):
            return SSel(sl, _unflatten(a), s)
    return t


def _unflatten_data(d):
    if isinstance(d, SymTerm):
        return _unflatten(d)
    if isinstance(d, tuple):
        return tuple(_unflatten_data(x) for x in d)
    if isinstance(d, Inj):
        return Inj(d.tag, _unflatten_data(d.value))
    if isinstance(d, SymList):
        return SymList(d.length, _unflatten_data(d.elem))
    return d


def _positions(t, pv=None, ops_only=False, path=()):
    """(path, subterm, rebuild) for t and its subterms; rebuild replaces the subterm.

    With ops_only, descend only through registered operations (contexts in which
    cl(R) is a congruence)."""
    yield path, t, lambda new: new
    match t:
        case SOp(op=op, args=args, sort=s):
            if ops_only and pv is not None and not pv.is_op(s, op):
                return
            for sub_path, sub, put in _data_positions(args):
                for p2, sub2, rebuild2 in _positions(sub, pv, ops_only, path + sub_path):
                    yield p2, sub2, (lambda put, rebuild2, op=op, s=s: lambda new: SOp(op, put(rebuild2(new)), s))(put, rebuild2)
        case SAC(op=op, args=args, sort=s):
            for i, a in enumerate(args):
                for p2, sub2, rebuild2 in _positions(a, pv, ops_only, path + (i,)):
                    yield p2, sub2, (lambda i, rebuild2, op=op, s=s, args=args: lambda new: SAC(
                        op, args[:i] + (rebuild2(new),) + args[i + 1:], s))(i, rebuild2)
        case SDef(name=n, args=args, sort=s) if not ops_only:
            for sub_path, sub, put in _data_positions(args):
                for p2, sub2, rebuild2 in _positions(sub, pv, ops_only, path + sub_path):
                    yield p2, sub2, (lambda put, rebuild2, n=n, s=s: lambda new: SDef(n, put(rebuild2(new)), s))(put, rebuild2)


def _data_positions(d, path=()):
    """(path, term, put) for every SymTerm inside container data; put rebuilds the data."""
    if isinstance(d, SymTerm):
        yield path, d, lambda new: new
    elif isinstance(d, tuple):
        for i, x in enumerate(d):
            for p, sub, put in _data_positions(x, path + (i,)):
                yield p, sub, (lambda i, put: lambda new: d[:i] + (put(new),) + d[i + 1:])(i, put)
    elif isinstance(d, Inj):
        for p, sub, put in _data_positions(d.value, path):
            yield p, sub, (lambda put: lambda new: Inj(d.tag, put(new)))(put)
    elif isinstance(d, SymList):
        for p, sub, put in _data_positions(d.elem, path + ("i",)):
            yield p, sub, (lambda put: lambda new: SymList(d.length, put(new)))(put)


def _vars(t, out=None) -> set:
    out = set() if out is None else out
    match t:
        case SVar():
            out.add(t)
        case SSel(arg=a):
            _vars(a, out)
        case SOp(args=args) | SDef(args=args):
            _vars_data(args, out)
        case SAC(args=args):
            for a in args:
                _vars(a, out)
    return out


def _vars_data(d, out):
    if isinstance(d, SymTerm):
        _vars(d, out)
    elif isinstance(d, tuple):
        for x in d:
            _vars_data(x, out)
    elif isinstance(d, Inj):
        _vars_data(d.value, out)
    elif isinstance(d, SymList):
        _vars_data(d.elem, out)
    elif isinstance(d, BObs):
        _vars(d.term, out)
    elif isinstance(d, BApp):
        for a in d.args:
            _vars_data(a, out)


def _lemma_shape(lm: Lemma):
    """("comm", op) or ("assoc", op) for lemmas of those shapes, else None."""
    l, r = lm.lhs, lm.rhs
    if not (isinstance(l, SOp) and isinstance(r, SOp) and l.op == r.op):
        return None
    la, ra = l.args, r.args
    if not (isinstance(la, tuple) and len(la) == 2 and isinstance(ra, tuple) and len(ra) == 2):
        return None
    if all(isinstance(x, SVar) for x in la + ra):
        if la[0] != la[1] and la == (ra[1], ra[0]):
            return ("comm", l.op)
        return None
    op = l.op

    def is_op(t):
        return isinstance(t, SOp) and t.op == op and all(isinstance(x, SVar) for x in t.args)

    for a, b in ((l, r), (r, l)):
        if is_op(a.args[0]) and isinstance(a.args[1], SVar) and is_op(b.args[1]) and isinstance(b.args[0], SVar):
            x, y = a.args[0].args
            z = a.args[1]
            if b.args[0] == x and b.args[1].args == (y, z) and len({x, y, z}) == 3:
                return ("assoc", op)
    return None


# -- certificates --------------------------------------------------------------------------------


def _layer_pairs(codt, a, b):
    """Parallel walk of two layers: yields ("base", x, y), ("term", s, t), ("len", m, n) or ("shape", ...)."""
    ta, fa = codt.split(a)
    tb, fb = codt.split(b)
    if ta != tb:
        yield ("shape", codt.ctors[ta][0], codt.ctors[tb][0])
        return
    for (s, d), x, y in zip(codt.ctors[ta][1], fa, fb):
        if d == ID:
            yield ("term", x, y)
        elif isinstance(d, (ListOf, FinSetOf)) and d.elem == ID:
            if isinstance(x, SymList) and isinstance(y, SymList):
                yield ("len", x.length, y.length)
                yield ("term", x.elem, y.elem)
            elif isinstance(x, tuple) and isinstance(y, tuple):
                if len(x) != len(y):
                    yield ("shape", len(x), len(y))
                    return
                for u, v in zip(x, y):
                    yield ("term", u, v)
            else:
                yield ("shape", _dtext(x), _dtext(y))
                return
        else:
            yield ("base", x, y)


def check_certificate(goal, cert: Certificate, prover: Prover) -> ProofResult:
    """Check that the goal lies in cl(R) and that each schema steps to equal heads and related tails."""
    cl = Closure(prover, cert.schemas, cert.lemmas, cert.depth)
    derivs = []
    try:
        g = cl.derive(goal[0], goal[1])
    except NotProvable as e:
        return ProofResult(False, goal, stage="goal", detail=e.message)
    if g is None:
        return ProofResult(False, goal, stage="goal", detail="the goal is not in the closure of the schemas")
    derivs.append({"goal": g.to_json()})
    for i, (a, b) in enumerate(cert.schemas):
        codt = prover.codt_of(a)
        try:
            la, lb = prover.step(a), prover.step(b)
        except NotProvable as e:
            return ProofResult(False, goal, stage="step", schema=i, detail=e.message)
        obligations = []
        for kind, x, y in _layer_pairs(codt, la, lb):
            if kind == "shape":
                return ProofResult(False, goal, stage="shape", schema=i, detail={"left": x, "right": y}, index=0)
            if kind == "base":
                hv = heads_equal(x, y, prover.trials, prover.seed, prover.funcs)
                if not hv:
                    return ProofResult(False, goal, stage="head", schema=i, detail=hv.to_json(), index=0)
                obligations.append({"head": [_btext(x), _btext(y)], "by": hv.by})
            elif kind == "len":
                if base_key(x) != base_key(y):
                    return ProofResult(
                        False, goal, stage="children", schema=i,
                        detail=f"child-list lengths {_btext(x)} and {_btext(y)} are not evidently equal",
                    )
                obligations.append({"length": _btext(x)})
            else:
                try:
                    d = cl.derive(x, y)
                except NotProvable as e:
                    return ProofResult(False, goal, stage="tail", schema=i, detail=e.message)
                if d is None:
                    idx, info = probe_mismatch(prover, x, y)
                    detail = {"left": stext(x), "right": stext(y), "reason": "not in the closure"}
                    if info:
                        detail["mismatch"] = info
                    return ProofResult(False, goal, stage="tail", schema=i, detail=detail, index=idx)
                obligations.append({"tail": d.to_json()})
        derivs.append({"schema": i, "obligations": obligations})
    return ProofResult(True, goal, derivs)


def probe_mismatch(prover: Prover, x, y, limit: int = 8):
    """Step a failed pair further, looking for concrete heads that differ."""
    pend = [(x, y)]
    for k in range(1, limit + 1):
        nxt = []
        for a, b in pend:
            try:
                codt = prover.codt_of(a)
                la, lb = prover.step(a), prover.step(b)
            except (NotProvable, CorecError):
                return None, None
            for kind, u, v in _layer_pairs(codt, la, lb):
                if kind == "shape":
                    return k, {"left": str(u), "right": str(v)}
                if kind == "base":
                    hv = heads_equal(u, v, prover.trials, prover.seed, prover.funcs)
                    if not hv:
                        return k, {"left": _btext(u), "right": _btext(v), **({"witness": hv.witness} if hv.witness else {})}
                elif kind == "term":
                    nxt.append((u, v))
        pend = nxt[:16]
    return None, None


# -- empirical equality -----------------------------------------------------------------------------


def empirical_eq(j1, j2, n: int, deadline: float | None = None):
    """Compare depth-n observations; the first difference carries its path.

    Past the `time.monotonic()` deadline the comparison stops and reports the
    depth it completed."""
    return compare(j1, j2, n, deadline)
