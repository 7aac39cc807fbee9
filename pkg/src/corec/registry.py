"""Classification of definitions, and registration of well-behaved operations."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Any, Callable

from .errors import (
    CorecError, DuplicateOp, RuleViolation, SelectorMismatch, SymbolicBranch, UnknownOp,
    WellBehavednessCheckFailed,
)
from .functor import (
    ID, ConstBool, ConstNat, ConstUnit, Container, FinSetOf, Id, Inj,
    Leaf, ListOf, Node, Prod, Sum, canonical_set, cmap, map_data, show,
)
from .interp import (
    BVar, Formal, Program, SkCall, SkCtor, SkDone, SkOp, TemplateEval, _wrap, arity_desc,
    compile_function, compile_skeleton, concrete_formal, map_fields,
)
from .runtime import (
    Codatatype, CoVal, Done, FlexSeed, OpTable, PrimSeed, UpSeed, corec_flex, corec_prim,
    corec_up, ctor_, deep, dtor, eval_term, observe, random_value,
)
from .syntax import (
    Call, CodataSort, FImage, FinSetSort, FunDecl, If, ListLit, ListSort, MapLam, SetLit,
    has_self_call, is_base,
)

KINDS = ("Primitive", "TopGuarded", "FlexGuarded", "Mixed")
BAD_CONTEXT = "UnguardedSelfCall-BadContext"


# -- states ---------------------------------------------------------------------------


class SeedRule:
    """One operation's one-step behaviour: K-container of formals -> F-layer of terms."""

    def apply(self, args: Container) -> Container:
        raise NotImplementedError


class CtorRule(SeedRule):
    """The constructor bundle: each argument is re-emitted as one formal constructor."""

    def __init__(self, codt: Codatatype):
        self.codt = codt

    def apply(self, args):
        codt = self.codt

        def one(x: Formal):
            obs = x.layer.as_container() if hasattr(x.layer, "as_container") else Container(
                codt.desc, map_data(codt.desc, Leaf, x.layer)
            )
            return Node(codt.entry_name, obs)

        return cmap(one, args)

    def __repr__(self):
        return f"CtorRule({self.codt.name})"


class TemplateRule(SeedRule):
    """A definition body replayed over formals."""

    def __init__(self, prog: Program, codt: Codatatype, decl: FunDecl, mode: str = "concrete"):
        self.prog = prog
        self.codt = codt
        self.decl = decl
        self.mode = mode
        self.parts = arity_desc(decl.params, codt.name).parts

    def env(self, args: Container) -> dict:
        if not self.decl.params:
            return {}
        return {p: _wrap(d, v) for (p, _), d, v in zip(self.decl.params, self.parts, args.data)}

    def apply(self, args, mode=None):
        ev = TemplateEval(self.prog, self.codt, self.decl.name, self.decl.params, mode or self.mode)
        return ev.layer(self.decl.body, self.env(args))

    def __repr__(self):
        return f"TemplateRule({self.decl.name})"


@dataclass
class OpEntry:
    op_id: int
    name: str
    arity: Any  # FunctorDesc K_i
    runtime: Callable[[Container], CoVal]
    rule: SeedRule
    params: tuple = ()


class CorecState(OpTable):
    """Registered operations of one codatatype. Entry 0 is the constructor bundle."""

    def __init__(self, codt: Codatatype):
        self.codt = codt
        self.ops: list[OpEntry] = []
        self.index: dict[str, OpEntry] = {}

    @property
    def sig_desc(self) -> Sum:
        return Sum(tuple(e.arity for e in self.ops))

    def has(self, name: str) -> bool:
        return name in self.index

    def entry(self, name: str) -> OpEntry:
        try:
            return self.index[name]
        except KeyError:
            raise UnknownOp(f"{name} is not registered for {self.codt.name}") from None

    def arity(self, name: str):
        return self.entry(name).arity

    def runtime(self, op: str):
        e = self.index.get(op)
        if e is None:
            raise UnknownOp(f"{op} is not registered for {self.codt.name}")
        return e.runtime

    def add(self, name, arity, runtime, rule, params=()) -> OpEntry:
        if name in self.index:
            raise DuplicateOp(f"{name} is already registered for {self.codt.name}")
        e = OpEntry(len(self.ops), name, arity, runtime, rule, tuple(params))
        self.ops.append(e)
        self.index[name] = e
        return e

    def remove_last(self):
        e = self.ops.pop()
        del self.index[e.name]

    def tag(self, name: str) -> int:
        """Position of the operation in the signature sum."""
        return self.entry(name).op_id

    def names(self):
        return [e.name for e in self.ops]


def init_state(codt: Codatatype) -> CorecState:
    st = CorecState(codt)
    st.add(codt.entry_name, codt.desc, lambda c: ctor_(codt, c), CtorRule(codt))
    return st


# -- functions and classification ------------------------------------------------------------


@dataclass
class Classification:
    kind: str  # one of KINDS, "Rejected" or "Base"
    reason: str | None = None
    span: Any = None
    message: str = ""

    @property
    def rejected(self):
        return self.kind == "Rejected"

    def __str__(self):
        return f"Rejected({self.reason})" if self.rejected else self.kind


class Function:
    """A processed definition: its classification and executable form."""

    def __init__(self, decl: FunDecl, codt: Codatatype | None):
        self.decl = decl
        self.name = decl.name
        self.codt = codt
        self.is_base = codt is None or (is_base(decl.result) and all(is_base(s) for _, s in decl.params))
        self.classification: Classification | None = None
        self.seed = None
        self.impl: Callable | None = None
        self.never_registered = True
        self.registered = False

    def __call__(self, *args):
        return self.impl(*args)

    def __repr__(self):
        return f"Function({self.name}: {self.classification})"


class _Reject(Exception):
    def __init__(self, reason, span, message):
        self.reason, self.span, self.message = reason, span, message


def classify(decl: FunDecl, prog: Program) -> Classification:
    """Assign a corecursor class, or the first (leftmost, outermost) fault."""
    if not isinstance(decl.result, CodataSort):
        if has_self_call(decl.body):
            site = _first_self(decl.body)
            return Classification(
                "Rejected", BAD_CONTEXT, site.span, f"{decl.name} recurses but returns {decl.result}, not codata"
            )
        return Classification("Base")
    codt = prog.codts[decl.result.name]
    try:
        kind = _Classifier(prog, codt, decl).branch_join(decl.body)
    except _Reject as r:
        return Classification("Rejected", r.reason, r.span, r.message)
    if kind == "Primitive" and any(isinstance(s, (ListSort, FinSetSort)) for _, s in decl.params):
        # their carriers are collections of values; see the notes on sup
        kind = "TopGuarded"
    return Classification(kind)


def _first_self(e):
    for x in _walk_lr(e):
        if isinstance(x, Call) and x.ref == ("self",):
            return x
        if isinstance(x, FImage) and x.ref == ("self",):
            return x
    return e


def _walk_lr(e):
    from .syntax import walk

    return walk(e)


def _join(a, b):
    return a if KINDS.index(a) >= KINDS.index(b) else b


class _Classifier:
    def __init__(self, prog, codt, decl):
        self.prog = prog
        self.codt = codt
        self.decl = decl
        self.jsort = CodataSort(codt.name)

    def branch_join(self, e):
        if isinstance(e, If):
            self.no_self(e.cond)
            return _join(self.branch_join(e.then), self.branch_join(e.orelse))
        sites = []
        top_ctor = isinstance(e, Call) and e.ref == ("ctor",)
        self.scan(e, False, False, sites, top=True)
        if not sites:
            return "Primitive"
        if not all(g for g, _ in sites):
            return "Mixed"
        if top_ctor:
            return "Primitive" if all(d for _, d in sites) else "TopGuarded"
        return "FlexGuarded"

    def no_self(self, e):
        """A position where no self-call may occur at all."""
        if has_self_call(e):
            raise self.bad(e)

    def bad(self, e):
        """Fault for the outermost node of e on the path to a self-call."""
        match e:
            case Call(ref=("sel",), fn=f):
                return _Reject(f"NonWellBehavedContext({f})", e.span, f"self-call under the selector {f}")
            case Call(ref=("fun",), fn=f):
                fn = self.prog.funcs.get(f)
                if fn is not None and fn.never_registered and not self.prog.registered(self.codt.name, f):
                    return _Reject(
                        f"UnknownOperation({f})", e.span, f"self-call under {f}, which is not a registered operation"
                    )
                return _Reject(f"NonWellBehavedContext({f})", e.span, f"self-call under {f}, which is not well behaved")
            case Call(ref=("self",)) | FImage(ref=("self",)):
                return _Reject(BAD_CONTEXT, e.span, "self-call where only a finished value may occur")
        return _Reject(BAD_CONTEXT, e.span, "self-call inside a base-valued computation")

    def scan(self, e, guarded, direct, sites, top=False):
        if not has_self_call(e):
            return
        match e:
            case If(cond=c, then=t, orelse=o):
                self.no_self(c)
                self.scan(t, guarded, direct, sites)
                self.scan(o, guarded, direct, sites)
            case Call(ref=("self",), args=args):
                for a in args:
                    if has_self_call(a):
                        raise _Reject(BAD_CONTEXT, a.span, "self-call inside the arguments of a self-call")
                sites.append((guarded, direct))
            case Call(ref=("ctor",), fn=f, args=args):
                tag = self.codt.tags[f]
                for a, (_, d) in zip(args, self.codt.ctors[tag][1]):
                    self.field(a, d, True, top, sites)
            case Call(ref=("fun",), fn=f, args=args) if self.prog.registered(self.codt.name, f):
                parts = self.prog.states[self.codt.name].arity(f).parts
                for a, d in zip(args, parts):
                    self.field(a, d, guarded, False, sites)
            case _:
                raise self.bad(e)

    def field(self, a, d, guarded, direct, sites):
        if d == ID:
            self.scan(a, guarded, direct, sites)
        elif isinstance(d, (ListOf, FinSetOf)) and d.elem == ID:
            self.scan_list(a, guarded, direct, sites)
        else:
            self.no_self(a)

    def scan_list(self, e, guarded, direct, sites):
        if not has_self_call(e):
            return
        match e:
            case ListLit(items=items) | SetLit(items=items):
                for i in items:
                    self.scan(i, guarded, direct, sites)
            case MapLam(body=b, lst=l):
                self.no_self(l)
                self.scan(b, guarded, direct, sites)
            case If(cond=c, then=t, orelse=o):
                self.no_self(c)
                self.scan_list(t, guarded, direct, sites)
                self.scan_list(o, guarded, direct, sites)
            case _:
                raise self.bad(e)


# -- seeds from skeletons -------------------------------------------------------------------------


def _kdata(fields) -> tuple:
    return tuple(fields) if fields else ((),)


class SeedBuilder:
    """Converts skeletons into the output shapes of the three corecursors."""

    def __init__(self, prog: Program, codt: Codatatype):
        self.prog = prog
        self.codt = codt
        self.descs = [[d for _, d in fs] for _, fs in codt.ctors]

    def layer(self, sk: SkCtor, slot):
        codt = self.codt
        tag = codt.tags[sk.ctor]
        return Container(codt.desc, codt.data(sk.ctor, map_fields(self.descs[tag], sk.fields, slot)))

    def op_args(self, sk: SkOp, slot):
        k = self.prog.states[self.codt.name].arity(sk.op)
        return Container(k, _kdata(map_fields(k.parts, sk.fields, slot)))

    # Primitive: A -> F A
    def prim(self, sk):
        if type(sk) is SkCtor:
            return self.layer(sk, _prim_slot)
        if type(sk) is SkDone:
            return cmap(Done, dtor(sk.value))
        raise CorecError(f"not a primitive skeleton: {sk!r}")

    # Σ* A, constructors as formal operations
    def term(self, sk):
        t = type(sk)
        if t is SkCall:
            return Leaf(sk.args)
        if t is SkDone:
            return Leaf(Done(sk.value))
        if t is SkCtor:
            return Node(self.codt.entry_name, self.layer(sk, self.term))
        return Node(sk.op, self.op_args(sk, self.term))

    # TopGuarded: A -> F (Σ* A)
    def up(self, sk):
        if type(sk) is SkCtor:
            return self.layer(sk, self.term)
        if type(sk) is SkDone:
            return cmap(lambda c: Leaf(Done(c)), dtor(sk.value))
        raise CorecError(f"not a top-guarded skeleton: {sk!r}")

    # FlexGuarded: A -> Σ* (F (Σ* A) + Done)
    def flex(self, sk):
        t = type(sk)
        if t is SkCtor:
            return Leaf(self.layer(sk, self.term))
        if t is SkDone:
            return Leaf(Done(sk.value))
        if t is SkOp:
            return Node(sk.op, self.op_args(sk, self.flex))
        raise CorecError("unguarded self-call in a flexibly guarded definition")


def _prim_slot(x):
    return x.args if type(x) is SkCall else Done(x.value)


def _carrier_fn(skel, names):
    if not names:
        return lambda a: skel({})
    if len(names) == 1:
        (n,) = names
        return lambda a: skel({n: a[0]})
    return lambda a: skel(dict(zip(names, a)))


def build_seed(decl: FunDecl, kind: str, prog: Program, codt: Codatatype):
    skel = compile_skeleton(decl.body, prog, codt, decl.name)
    run = _carrier_fn(skel, [p for p, _ in decl.params])
    b = SeedBuilder(prog, codt)
    state = prog.states[codt.name]
    if kind == "Primitive":
        return PrimSeed(lambda a: b.prim(run(a)), codt, state, decl.name)
    if kind == "TopGuarded":
        return UpSeed(lambda a: b.up(run(a)), codt, state, decl.name)
    if kind == "FlexGuarded":
        return FlexSeed(lambda a: b.flex(run(a)), codt, state, decl.name)
    raise ValueError(kind)


CORECS = {"Primitive": corec_prim, "TopGuarded": corec_up, "FlexGuarded": corec_flex}


def seed_impl(seed, corec):
    return lambda *args: corec(seed, args)


def define(decl: FunDecl, prog: Program) -> Function:
    """Classify and compile a definition, adding it to the program."""
    from .mixed import build_mixed

    codt = prog.codts[decl.result.name] if isinstance(decl.result, CodataSort) else None
    fn = Function(decl, codt)
    cls = classify(decl, prog)
    fn.classification = cls
    if cls.kind == "Base":
        fn.impl = compile_function(decl.params, decl.body, prog, decl.name)
    elif cls.kind in CORECS:
        fn.seed = build_seed(decl, cls.kind, prog, codt)
        fn.impl = seed_impl(fn.seed, CORECS[cls.kind])
    elif cls.kind == "Mixed":
        fn.seed, fn.impl = build_mixed(decl, prog, codt)
    else:
        fn.impl = _rejected(decl.name, cls)
    prog.funcs[decl.name] = fn
    return fn


def _rejected(name, cls):
    def run(*args):
        raise CorecError(f"{name} was rejected ({cls.reason}) and cannot run", cls.span)

    return run


# -- rule extraction ---------------------------------------------------------------------------------


def _sym_data(desc, name: str, n: int = 2):
    """Symbolic data of a description: a variable at every slot."""
    match desc:
        case Id():
            return Formal(name, None, None, 1)
        case ConstNat() | ConstBool():
            return BVar(name)
        case ConstUnit():
            return ()
        case Prod(parts):
            return tuple(_sym_data(p, f"{name}.{i}") for i, p in enumerate(parts))
        case ListOf(e):
            return tuple(_sym_data(e, f"{name}[{i}]") for i in range(n))
        case FinSetOf(e):
            return canonical_set(_sym_data(e, f"{name}{{{i}}}") for i in range(n))
    raise TypeError(desc)


def _sym_layer(codt: Codatatype, tag: int, x: str):
    fs = codt.ctors[tag][1]
    inner = tuple(_sym_data(d, f"{s} {x}") for s, d in fs)
    return inner if codt.single else Inj(tag, inner)


def _sym_arg(codt, d, name, tag):
    if d == ID:
        return Formal(name, None, _sym_layer(codt, tag, name), 0)
    if isinstance(d, (ListOf, FinSetOf)) and d.elem == ID:
        xs = tuple(Formal(f"{name}{i}", None, _sym_layer(codt, tag, f"{name}{i}"), 0) for i in range(2))
        return xs if isinstance(d, ListOf) else canonical_set(xs)
    return _sym_data(d, name)


def extract_rho(fn: Function, prog: Program) -> TemplateRule:
    """Check that the body only observes one layer of its arguments; return its rule."""
    decl, codt = fn.decl, fn.codt
    cls = fn.classification
    if cls.rejected:
        raise RuleViolation(cls.reason, cls.message, cls.span)
    if cls.kind not in ("Primitive", "TopGuarded"):
        raise RuleViolation(
            BAD_CONTEXT,
            f"{decl.name} is {cls.kind}; only definitions that start with a constructor can be registered",
            decl.span,
        )
    for _, s in decl.params:
        if isinstance(s, CodataSort) and s.name != codt.name:
            raise RuleViolation(BAD_CONTEXT, f"{decl.name} takes a {s.name} argument", decl.span)
    rule = TemplateRule(prog, codt, decl)
    k = arity_desc(decl.params, codt.name)
    for tag in range(len(codt.ctors)):
        data = tuple(_sym_arg(codt, d, p, tag) for (p, _), d in zip(decl.params, k.parts)) or ((),)
        try:
            rule.apply(Container(k, data), mode="check")
        except (SelectorMismatch, SymbolicBranch):
            continue
    return rule


# -- registration and verification ------------------------------------------------------------------------


@dataclass
class WBReport:
    name: str
    samples: int
    depth: int
    counterexample: dict | None = None

    @property
    def ok(self):
        return self.counterexample is None

    def to_json(self):
        return {
            "name": self.name,
            "samples": self.samples,
            "depth": self.depth,
            "verdict": "PASS" if self.ok else "FAIL",
            "counterexample": self.counterexample,
        }


def _unpack(params):
    if not params:
        return lambda c: ()
    return lambda c: c.data


def register(name: str, prog: Program, samples: int = 200, depth: int = 5, seed: int = 0) -> OpEntry:
    fn = prog.funcs[name]
    if fn.codt is None:
        raise RuleViolation(BAD_CONTEXT, f"{name} does not return codata", fn.decl.span)
    state = prog.states[fn.codt.name]
    if state.has(name):
        raise DuplicateOp(f"{name} is already registered for {fn.codt.name}", fn.decl.span)
    fn.never_registered = False
    try:
        rule = extract_rho(fn, prog)
        unpack = _unpack(fn.decl.params)
        impl = fn.impl
        entry = state.add(
            name, arity_desc(fn.decl.params, fn.codt.name), lambda c: impl(*unpack(c)), rule, fn.decl.params
        )
        report = verify_well_behaved(entry, state, prog, samples, depth, seed)
        if not report.ok:
            state.remove_last()
            raise WellBehavednessCheckFailed(name, report.counterexample)
    except CorecError:
        prog.failed_ops.add(name)
        raise
    fn.registered = True
    return entry


def characteristic_rhs(entry: OpEntry, state: CorecState, args: Container) -> CoVal:
    """ctor (F eval (λ (Σ⟨id, dtor⟩ (ι x)))) for one argument container x."""
    formals = cmap(concrete_formal, args)
    layer = entry.rule.apply(formals)
    leaf = lambda fm: fm.value
    return ctor_(state.codt, cmap(lambda t: eval_term(t, state, leaf), layer))


def sample_pool(codt: Codatatype, rng: random.Random, size: int = 24):
    pool = []
    for i in range(size):
        pool.append(random_value(codt, rng, nodes=1 + i % 4, max_nat=9, max_list=2))
    return pool


def random_args(k: Prod, pool, rng: random.Random) -> Container:
    def gen(d):
        match d:
            case Id():
                return rng.choice(pool)
            case ConstNat():
                return rng.randint(0, 9)
            case ConstBool():
                return rng.random() < 0.5
            case ConstUnit():
                return ()
            case Prod(parts):
                return tuple(gen(p) for p in parts)
            case ListOf(e):
                return tuple(gen(e) for _ in range(rng.randint(0, 3)))
            case FinSetOf(e):
                return canonical_set(gen(e) for _ in range(rng.randint(0, 3)))
        raise TypeError(d)

    return Container(k, gen(k))


def verify_well_behaved(entry: OpEntry, state: CorecState, prog: Program | None = None, samples: int = 200,
                        depth: int = 5, seed: int = 0) -> WBReport:
    """Sample the equation f x = ctor (F eval (λ (Σ⟨id,dtor⟩ (ι x)))) on random x."""

    def run():
        rng = random.Random(seed)
        pool = sample_pool(state.codt, rng)
        k = entry.arity if isinstance(entry.arity, Prod) else None
        for _ in range(samples):
            if k is None:  # the constructor bundle: arguments are layers
                args = dtor(random_value(state.codt, rng, nodes=1 + rng.randrange(4)))
                args = cmap(lambda _c: rng.choice(pool), args)
            else:
                args = random_args(k, pool, rng)
            lhs = entry.runtime(args)
            rhs = characteristic_rhs(entry, state, args)
            lo, ro = observe(lhs, depth), observe(rhs, depth)
            if lo != ro:
                return {
                    "input": show(cmap(lambda j: observe(j, depth), args)),
                    "runtime": repr(lo),
                    "rule": repr(ro),
                    "firstDifferenceDepth": _first_diff_depth(lhs, rhs, depth),
                }
        return None

    return WBReport(entry.name, samples, depth, deep(run))


def _first_diff_depth(a, b, depth):
    for d in range(1, depth + 1):
        if observe(a, d) != observe(b, d):
            return d
    return None
