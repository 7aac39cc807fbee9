import random
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import load_definitions
from corec.errors import FuelExhausted
from corec.functor import canonical_set
from corec.runtime import (
    Differ, EqualToDepth, ListPrefix, compare, from_list, limited, observe, random_value, stream_index, take_prefix,
)

CASES = settings(max_examples=120, deadline=None)

cycles = st.lists(st.integers(0, 5), min_size=1, max_size=4)


def stream(s, items):
    return from_list(s.prog.codts["Stream"], items, cycle_from=0)


def unroll(items, n):
    return [items[i % len(items)] for i in range(n)]


@CASES
@given(cycles, cycles)
def test_plus_matches_oracle(streams, xs, ys):
    got = take_prefix(streams.fun("⊕")(stream(streams, xs), stream(streams, ys)), 12)
    assert got == oracles.plus(unroll(xs, 12), unroll(ys, 12))


@CASES
@given(cycles, cycles)
def test_shuffle_product_matches_oracle(streams, xs, ys):
    got = take_prefix(streams.fun("⊗")(stream(streams, xs), stream(streams, ys)), 8)
    assert got == oracles.times(unroll(xs, 8), unroll(ys, 8))


@CASES
@given(cycles)
def test_exp_matches_oracle(streams, xs):
    got = take_prefix(streams.fun("exp")(stream(streams, xs)), 6)
    assert got == oracles.exp(unroll(xs, 6))


@CASES
@given(st.lists(st.integers(0, 5), min_size=1, max_size=4).map(frozenset))
def test_sup_of_constant_streams(streams, ks):
    Xs = tuple(stream(streams, [k]) for k in sorted(ks))
    got = take_prefix(streams.fun("sup")(canonical_set(Xs)), 3)
    assert got == [max(ks)] * 3


def test_frozen_values(streams):
    # produced by tests/oracles.py
    assert take_prefix(streams.fun("natsFrom")(0), 3) == [0, 1, 2]
    assert take_prefix(streams.value_of("exp (natsFrom 0)"), 8) == [1, 1, 3, 10, 41, 196, 1057, 6322]
    assert take_prefix(streams.value_of("fibA"), 12) == [0, 1, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89]
    assert take_prefix(streams.value_of("facA"), 8) == [1, 2, 6, 24, 120, 720, 5040, 40320]
    assert take_prefix(streams.value_of("onetwos"), 5) == [1, 2, 1, 2, 1]


def test_fib_and_factorial_against_oracles(streams):
    assert take_prefix(streams.value_of("fibB"), 40) == oracles.fib(40)
    assert take_prefix(streams.value_of("facB"), 12) == [1] + oracles.fac_stream(11)


def test_compare_reports_first_difference(streams):
    a = stream(streams, [1, 2, 3])
    b = from_list(streams.prog.codts["Stream"], [1, 2, 4], cycle_from=0)
    r = compare(a, b, 10)
    assert isinstance(r, Differ) and stream_index(r) == 2
    assert (r.left, r.right) == (3, 4)
    assert compare(a, a, 10) == EqualToDepth(10)


def test_compare_handles_cycles_of_different_lengths(streams):
    a = stream(streams, [7])
    b = stream(streams, [7, 7, 7])
    assert compare(a, b, 1000) == EqualToDepth(1000)


def test_compare_deadline_stops_early(streams):
    j = streams.value_of("facA")
    r = compare(j, streams.value_of("SCons 1 facA ⊗ SCons 1 facA"), 10_000, deadline=time.monotonic() - 1)
    assert r == EqualToDepth(0)


def test_observe_is_generic(trees):
    t = trees.value_of("spine(0)")
    o = observe(t, 2)
    assert o[0] == 0 and len(o[1]) == 2


def test_tree_prefix(trees):
    obs = take_prefix(trees.value_of("spine(0) ⊞ spine(10)"), 2)
    assert obs == {"label": 10, "children": [{"label": 12, "children": [{"truncated": True}, {"truncated": True}]},
                                             {"label": 10, "children": []}]}


def test_tree_ops_against_oracle(trees):
    got = take_prefix(trees.value_of("spine(1) ⊠ spine(2)"), 3)
    # the oracle trees are cut deeper than observed so no zip is shortened
    want = oracles.tree_times(oracles.spine(1, 8), oracles.spine(2, 8))

    def strip(o, d):
        if d == 0:
            return {"truncated": True}
        return {"label": o[0], "children": [strip(c, d - 1) for c in o[1]]}

    assert got == strip(want, 3)


def test_lazy_list_prefix(llists):
    assert take_prefix(llists.value_of("range 1 3"), 10) == ListPrefix([1, 2, 3], True)
    assert take_prefix(llists.value_of("lfrom 5"), 3) == ListPrefix([5, 6, 7], False)


def test_random_values_are_rational(streams):
    rng = random.Random(3)
    codt = streams.prog.codts["Stream"]
    for _ in range(20):
        j = random_value(codt, rng, nodes=3)
        assert len(take_prefix(j, 50)) == 50


def test_fuel_is_scoped():
    streams = load_definitions("streams")  # fresh, so no layer is memoized yet
    with limited(3):
        with pytest.raises(FuelExhausted):
            take_prefix(streams.value_of("primes(1, 2)"), 20)
    assert len(take_prefix(streams.value_of("primes(1, 2)"), 20)) == 20
