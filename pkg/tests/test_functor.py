"""Laws of the functor descriptions and of the free monad, on random inputs."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corec.errors import DescMismatch
from corec.functor import (
    BOOL, ID, NAT, UNIT, Container, FinSetOf, Inj, Inl, Inr, Leaf, ListOf, Node, Prod, Sum,
    canonical_set, ccontent, check_shape, cmap, crel, leaves, make, ops_of, reduce, serialize, tjoin, tmap,
)

CASES = settings(max_examples=150, deadline=None)

descs = st.recursive(
    st.sampled_from([ID, NAT, BOOL, UNIT]),
    lambda inner: st.one_of(
        st.lists(inner, min_size=1, max_size=3).map(lambda ps: Prod(tuple(ps))),
        st.lists(inner, min_size=1, max_size=3).map(lambda ps: Sum(tuple(ps))),
        inner.map(ListOf),
        inner.map(FinSetOf),
    ),
    max_leaves=6,
)

payloads = st.integers(0, 20)


def data_for(desc, payload=payloads):
    match desc:
        case _ if desc == ID:
            return payload
        case _ if desc == NAT:
            return st.integers(0, 50)
        case _ if desc == BOOL:
            return st.booleans()
        case _ if desc == UNIT:
            return st.just(())
        case Prod(parts):
            return st.tuples(*(data_for(p, payload) for p in parts))
        case Sum(alts):
            return st.one_of(*(data_for(a, payload).map(lambda v, i=i: Inj(i, v)) for i, a in enumerate(alts)))
        case ListOf(e):
            return st.lists(data_for(e, payload), max_size=3).map(tuple)
        case FinSetOf(e):
            return st.lists(data_for(e, payload), max_size=3).map(canonical_set)
    raise TypeError(desc)


containers = descs.flatmap(lambda d: data_for(d).map(lambda x: make(d, x)))

# a small signature: a binary op and one with a constant and a list of subterms
SIG = {"a": Prod((ID, ID)), "b": Prod((NAT, ListOf(ID)))}


def terms(leaf):
    return st.recursive(
        leaf.map(Leaf),
        lambda inner: st.one_of(
            st.tuples(inner, inner).map(lambda p: Node("a", Container(SIG["a"], p))),
            st.tuples(st.integers(0, 5), st.lists(inner, max_size=2).map(tuple)).map(
                lambda p: Node("b", Container(SIG["b"], p))
            ),
        ),
        max_leaves=6,
    )


small_terms = terms(payloads)


def f(x):
    return x * 3 + 1


def g(x):
    return x % 7


@CASES
@given(containers)
def test_map_identity(c):
    assert cmap(lambda x: x, c) == c


@CASES
@given(containers)
def test_map_composition(c):
    assert cmap(lambda x: f(g(x)), c) == cmap(f, cmap(g, c))


@CASES
@given(containers)
def test_map_preserves_shape(c):
    assert check_shape(c.desc, cmap(f, c).data)


@CASES
@given(containers)
def test_content_commutes_with_map_on_lists(c):
    # FinSet re-sorts after mapping; f is injective, so nothing merges
    assert sorted(ccontent(cmap(f, c))) == sorted(map(f, ccontent(c)))


@CASES
@given(containers)
def test_relator_equality_is_equality(c):
    assert crel(lambda x, y: x == y, c, c)


@CASES
@given(containers)
def test_relator_graph(c):
    # Rel(graph f) relates c to F f c
    assert crel(lambda x, y: f(x) == y, c, cmap(f, c))


@CASES
@given(containers)
def test_relator_converse(c):
    d = cmap(f, c)
    assert crel(lambda x, y: x < y, c, d) == crel(lambda y, x: x < y, d, c)


def test_finset_relator_ignores_order():
    d = FinSetOf(ID)
    a, b = make(d, (1, 2)), make(d, (5, 4))
    assert crel(lambda x, y: y == 6 - x, a, b)
    assert crel(lambda x, y: x <= y, make(d, (1, 2)), make(d, (2,)))
    assert not crel(lambda x, y: x == y, make(d, (1, 2)), make(d, (2,)))


@CASES
@given(containers)
def test_relator_empty_relation_iff_no_payloads(c):
    assert crel(lambda x, y: False, c, c) == (not ccontent(c))


def test_relator_rejects_different_descriptions():
    with pytest.raises(DescMismatch):
        crel(lambda x, y: True, make(ID, 1), make(NAT, 1))


@CASES
@given(descs.flatmap(lambda d: st.tuples(st.just(d), data_for(d))))
def test_finset_canonicalization_idempotent(dx):
    d, x = dx
    once = make(d, x)
    assert make(d, once.data) == once
    assert check_shape(d, once.data)


@CASES
@given(st.lists(st.integers(0, 9), max_size=8))
def test_canonical_set_is_sorted_and_duplicate_free(xs):
    s = canonical_set(xs)
    assert canonical_set(s) == s
    keys = [serialize(x) for x in s]
    assert keys == sorted(set(keys)) and set(s) == set(xs)


@CASES
@given(small_terms)
def test_monad_left_unit(t):
    assert tjoin(Leaf(t)) is t


@CASES
@given(small_terms)
def test_monad_right_unit(t):
    assert tjoin(tmap(Leaf, t)) is t


@CASES
@given(terms(terms(terms(payloads))))
def test_monad_associativity(ttt):
    assert tjoin(tjoin(ttt)) is tjoin(tmap(tjoin, ttt))


@CASES
@given(small_terms)
def test_tmap_functor_laws(t):
    assert tmap(lambda x: x, t) is t
    assert tmap(lambda x: f(g(x)), t) is tmap(f, tmap(g, t))


@CASES
@given(small_terms)
def test_leaves_and_ops_follow_tmap(t):
    assert leaves(tmap(f, t)) == [f(x) for x in leaves(t)]
    assert ops_of(tmap(f, t)) == ops_of(t)


@CASES
@given(terms(st.one_of(payloads.map(Inl), terms(small_terms).map(Inr))))
def test_reduce_is_join_after_case(t):
    expected = tjoin(tmap(lambda p: Leaf(p.value) if isinstance(p, Inl) else tjoin(p.value), t))
    assert reduce(t) is expected


@CASES
@given(small_terms)
def test_reduce_all_left_is_identity(t):
    assert reduce(tmap(Inl, t)) is t


@CASES
@given(terms(terms(small_terms)))
def test_reduce_all_right_is_double_join(ttt):
    assert reduce(tmap(Inr, ttt)) is tjoin(tjoin(ttt))


def test_terms_are_interned():
    x = Node("a", Container(SIG["a"], (Leaf(1), Leaf(2))))
    y = Node("a", Container(SIG["a"], (Leaf(1), Leaf(2))))
    assert x is y
    assert x.text() == "⟦a⟧(η 1, η 2)"


def test_make_rejects_bad_shapes():
    with pytest.raises(DescMismatch):
        make(Prod((NAT, NAT)), (1,))
    with pytest.raises(DescMismatch):
        make(NAT, -1)
    with pytest.raises(DescMismatch):
        make(BOOL, 0)
