"""Mixed recursion and corecursion.

A mixed body is compiled to a seed  A -> Σ*(F(Σ* A) + Σ* A): guarded call
groups on the left, unguarded ones on the right. `unfold_g` removes the
right-hand side by unfolding it under a fuel budget; what remains is a
flexibly guarded seed for `corec_flex`.
"""

from __future__ import annotations

from .functor import Container, Inl, Inr, Leaf, Node, Term, cmap, reduce, tmap
from .interp import Program, SkCall, SkCtor, SkDone, compile_skeleton
from .runtime import (
    Codatatype, Done, Fuel, FlexSeed, corec_flex, ctor_, eval_, fuel_limit, fuel_scope,
)
from .syntax import FunDecl


class MixedSeed:
    """s : A -> Σ*(F(Σ* A) + Σ* A), with Done(j) allowed on the left."""

    kind = "Mixed"

    def __init__(self, fn, codt: Codatatype, state, name: str):
        self.fn = fn
        self.codt = codt
        self.state = state
        self.name = name
        self.unfoldings = 0

    def __repr__(self):
        return f"MixedSeed({self.name})"


def split_calls(decl: FunDecl, prog: Program, codt: Codatatype) -> MixedSeed:
    from .registry import SeedBuilder, _carrier_fn

    skel = compile_skeleton(decl.body, prog, codt, decl.name)
    run = _carrier_fn(skel, [p for p, _ in decl.params])
    b = SeedBuilder(prog, codt)

    def mixed(sk):
        t = type(sk)
        if t is SkCtor:
            return Leaf(Inl(b.layer(sk, b.term)))
        if t is SkDone:
            return Leaf(Inl(Done(sk.value)))
        if t is SkCall:
            return Leaf(Inr(Leaf(sk.args)))
        return Node(sk.op, b.op_args(sk, mixed))

    return MixedSeed(lambda a: mixed(run(a)), codt, prog.states[codt.name], decl.name)


def unfold_g(seed: MixedSeed, a, fuel: Fuel) -> Term:
    """g a = reduce (Σ*(id + Σ* g) (s a)): a term whose every leaf is a layer or Done."""
    t = seed.fn(a)
    # unguarded tail calls are iterated rather than recursed into
    while type(t) is Leaf and type(t.payload) is Inr and type(t.payload.value) is Leaf:
        fuel.charge(seed.name, a)  # a is the carrier that asked for another unguarded step
        seed.unfoldings += 1
        a = t.payload.value.payload
        t = seed.fn(a)
    if type(t) is Leaf and type(t.payload) is Inl:
        return Leaf(t.payload.value)

    def g(b):
        fuel.charge(seed.name, a)
        seed.unfoldings += 1
        return unfold_g(seed, b, fuel)

    def case(p):
        if type(p) is Inr:
            return Inr(tmap(g, p.value))
        return p

    return reduce(tmap(case, t))


def flex_seed(seed: MixedSeed) -> FlexSeed:
    def fn(a):
        fuel = Fuel(fuel_limit())
        with fuel_scope(fuel):
            return unfold_g(seed, a, fuel)

    return FlexSeed(fn, seed.codt, seed.state, seed.name)


def build_mixed(decl: FunDecl, prog: Program, codt: Codatatype):
    """(mixed seed, executable f = corec_flex of the unfolded seed)."""
    ms = split_calls(decl, prog, codt)
    fs = flex_seed(ms)
    ms.flex = fs
    return ms, lambda *args: corec_flex(fs, args)


def mixed_equation_rhs(seed: MixedSeed, f, a):
    """eval ([ctor ∘ F eval, eval] (Σ*(F(Σ* f) + Σ* f) (s a))), built from f."""
    state = seed.state

    def lift(b):
        return b.value if type(b) is Done else f(*b)

    def case(p):
        if type(p) is Inl:
            layer = p.value
            if type(layer) is Done:
                return layer.value
            return ctor_(seed.codt, layer_eval(layer))
        return eval_(tmap(lift, p.value), state)

    def layer_eval(layer: Container):
        return cmap(lambda t: eval_(tmap(lift, t), state), layer)

    return eval_(tmap(case, seed.fn(a)), state)
