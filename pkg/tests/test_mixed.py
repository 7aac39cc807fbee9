from math import gcd

import pytest

import oracles
from conftest import load_definitions
from corec.errors import FuelExhausted
from corec.mixed import unfold_g
from corec.runtime import Fuel, ListPrefix, limited, take_prefix
from corec.surface.session import Session
from laws import mixed_failures


def test_primes(streams):
    assert take_prefix(streams.value_of("primes(1, 2)"), 20) == oracles.primes(20)
    assert take_prefix(streams.value_of("primes(1, 2)"), 60) == oracles.primes(60)


def test_catalan_and_factorials(streams):
    assert take_prefix(streams.value_of("cat(1)"), 12) == oracles.catalan(12)
    got = take_prefix(streams.value_of("facC(1, 1, 1)"), 25)
    assert got == oracles.factorials(25)
    assert got[-1] == 15511210043330985984000000  # needs arbitrary precision


def test_lfilter(llists):
    assert take_prefix(llists.value_of("lfilter(lfrom 1)"), 5) == ListPrefix([2, 4, 6, 8, 10], False)
    assert take_prefix(llists.value_of("lfilter(range 1 7)"), 10) == ListPrefix([2, 4, 6], True)
    assert take_prefix(llists.value_of("lfilter(range 1 1)"), 10) == ListPrefix([], True)


def test_lfilter_against_oracle(llists):
    for k in range(12):
        got = take_prefix(llists.value_of(f"lfilter(range 3 {k})"), 20)
        assert got == ListPrefix(oracles.lfilter_even(list(range(3, k + 1))), True)


@pytest.mark.parametrize("corpus", ["streams", "lazy_lists"])
def test_mixed_equations(corpus):
    s = load_definitions(corpus)
    mixed = [fn for fn in s.prog.funcs.values() if str(fn.classification) == "Mixed"]
    assert mixed
    for fn in mixed:
        assert mixed_failures(fn, s.prog, samples=100, depth=4) == [], fn.name


def test_unfolding_counts_for_primes():
    # after emitting 2 and 3 the seed is (6, 4); 4 is skipped by one unguarded step
    s = load_definitions("streams")
    seed = s.prog.funcs["primes"].seed
    take_prefix(s.value_of("primes(6, 4)"), 1)
    assert seed.unfoldings == 1
    take_prefix(s.value_of("primes(2, 3)"), 1)
    assert seed.unfoldings == 1


# frozen from oracles.primes_stall
STALLS = {1: "(210, 9)", 2: "(210, 10)", 3: "(223092870, 27)"}


@pytest.mark.parametrize("fuel", sorted(STALLS))
def test_fuel_starved_run_names_the_stalling_carrier(fuel):
    s = load_definitions("streams")
    with limited(fuel):
        with pytest.raises(FuelExhausted) as ei:
            take_prefix(s.value_of("primes(1, 2)"), 20)
    assert ei.value.to_json() == {"function": "primes", "carrierValue": STALLS[fuel], "fuelUsed": fuel}


def test_stalling_carrier_oracle():
    assert {f: str(oracles.primes_stall(f)) for f in STALLS} == STALLS


def test_fuel_starved_force_reports_instead_of_printing():
    s = load_definitions("streams")
    (r,) = s.run_text("force primes(1, 2) upto 20 fuel 3")
    assert r.verdict == "FuelExhausted" and not r.ok
    assert r.detail["function"] == "primes"


def test_unproductive_definition_exhausts_fuel():
    s = Session()
    s.run_text("codatatype Stream = SCons (head: Nat) (tail: Stream)\ncorec loop(n: Nat): Stream = loop (n + 1)\n")
    (r,) = s.run_text("force loop(0) upto 1 fuel 50")
    assert r.verdict == "FuelExhausted"
    assert r.detail["fuelUsed"] == 50


@pytest.mark.parametrize("seed, term, steps", [
    ((1, 2), "η (2, η (2, 3))", 0),
    ((2, 3), "η (3, η (6, 4))", 0),
    ((6, 4), "η (5, η (30, 6))", 1),
    ((2, 4), "η (5, η (10, 6))", 1),
])
def test_unfold_g_on_primes(seed, term, steps):
    m, k = seed
    while gcd(m, k) != 1:  # the oracle: step n -> n + 1 until coprime
        k += 1
    assert k - seed[1] == steps
    s = load_definitions("streams")
    fuel = Fuel(64)
    assert unfold_g(s.prog.funcs["primes"].seed, seed, fuel).text() == term
    assert fuel.used == steps
