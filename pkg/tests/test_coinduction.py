import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import corpus_text
from corec.coinduction import heads_equal, to_poly
from corec.interp import BVar, bapp, beval
from corec.surface.session import Session

CASES = settings(max_examples=150, deadline=None)

STREAM_OPS = """codatatype Stream = SCons (head: Nat) (tail: Stream)
corec well_behaved ⊕(xs: Stream, ys: Stream): Stream = SCons (head xs + head ys) (tail xs ⊕ tail ys)
corec well_behaved ⊗(xs: Stream, ys: Stream): Stream =
  SCons (head xs * head ys) ((xs ⊗ tail ys) ⊕ (tail xs ⊗ ys))
corec well_behaved exp(xs: Stream): Stream = SCons (2 ^ head xs) (tail xs ⊗ exp xs)
corec onetwos: Stream = SCons 1 (SCons 2 onetwos)
"""


def session(corroborate=4):
    s = Session(samples=40, corroborate=corroborate, corroborate_depth=60, corroborate_seconds=2.0)
    s.run_text(STREAM_OPS)
    return s


def prove(s, text):
    (r,) = s.run_text(text)
    return r


# head equality

polys = st.recursive(
    st.one_of(st.integers(0, 4), st.sampled_from("xyz").map(BVar)),
    lambda inner: st.tuples(st.sampled_from(["+", "*"]), inner, inner).map(lambda t: bapp(*t)),
    max_leaves=7,
)


@CASES
@given(polys, polys)
def test_ring_rewrites_are_sound(a, b):
    # commuted sums and products normalize alike
    assert heads_equal(bapp("+", a, b), bapp("+", b, a)).by == "rewrite"
    assert heads_equal(bapp("*", a, bapp("+", b, 1)), bapp("+", bapp("*", a, b), a))


@CASES
@given(polys)
def test_off_by_one_is_refuted_with_a_witness(a):
    v = heads_equal(a, bapp("+", a, 1))
    assert not v and v.by == "witness"
    assert beval(bapp("+", a, 1), v.witness) == beval(a, v.witness) + 1


@CASES
@given(polys, polys)
def test_normal_form_agrees_with_evaluation(a, b):
    env = {"x": 3, "y": 5, "z": 7}
    if to_poly(a) == to_poly(b):
        assert beval(a, env) == beval(b, env)


def test_exponent_laws():
    x, y, z = BVar("x"), BVar("y"), BVar("z")
    assert heads_equal(bapp("^", 2, bapp("+", x, y)), bapp("*", bapp("^", 2, x), bapp("^", 2, y))).by == "rewrite"
    assert not heads_equal(bapp("^", 2, bapp("+", x, y)), bapp("+", bapp("^", 2, x), bapp("^", 2, y)))
    assert heads_equal(bapp("max", x, z), bapp("max", z, x))


def test_monus_is_not_treated_as_ring_subtraction():
    x, y = BVar("x"), BVar("y")
    assert not heads_equal(bapp("+", bapp("-", x, y), y), x)


# certificates


def test_plus_commutativity_one_schema_no_lemmas():
    r = prove(session(), "prove plus_comm: xs ⊕ ys = ys ⊕ xs via { (xs ⊕ ys, ys ⊕ xs) } depth 1")
    assert r.verdict == "VERIFIED"
    assert r.detail["corroboration"]["agree"]
    assert "Trans" not in r.shown and "Congr" not in r.shown


def test_goal_defaults_to_its_own_schema():
    r = prove(session(), "prove xs ⊕ ys = ys ⊕ xs depth 1")
    assert r.verdict == "VERIFIED"


def test_head_off_by_one_fails_at_index_zero():
    r = prove(session(), "prove xs ⊕ ys = SCons (head xs + head ys + 1) (tail ys ⊕ tail xs) depth 1")
    assert r.verdict == "FAIL"
    assert r.detail["stage"] == "head" and r.detail["index"] == 0
    head = r.detail["detail"]
    assert int(head["right"]) == int(head["left"]) + 1, head["witness"]


def test_false_goal_has_a_head_counterexample():
    r = prove(session(), "prove xs ⊕ ys = xs ⊗ ys depth 1")
    assert r.verdict == "FAIL" and r.detail["index"] == 0


def test_too_weak_certificate_fails_in_the_tail():
    r = prove(session(), "prove onetwos = SCons 1 onetwos depth 1")
    assert r.verdict == "FAIL"
    assert r.detail["stage"] == "tail" and r.detail["index"] == 1


def test_lemmas_must_be_verified_first():
    r = prove(session(), "prove xs ⊗ ys = ys ⊗ xs depth 1 using plus_comm")
    assert r.verdict == "FAIL" and r.detail["stage"] == "lemmas"


def test_times_commutativity_needs_plus_lemmas():
    s = session()
    assert prove(s, "prove xs ⊗ ys = ys ⊗ xs depth 1").verdict == "FAIL"
    prove(s, "prove plus_comm: xs ⊕ ys = ys ⊕ xs depth 1")
    prove(s, "prove plus_assoc: (xs ⊕ ys) ⊕ zs = xs ⊕ (ys ⊕ zs) depth 1")
    assert prove(s, "prove xs ⊗ ys = ys ⊗ xs depth 1 using plus_comm plus_assoc").verdict == "VERIFIED"


def test_exp_distributes_over_sum_with_the_lemma_chain():
    s = Session(samples=40, corroborate=3, corroborate_depth=30, corroborate_seconds=3.0)
    reps = s.run_text(corpus_text("proofs"))
    verdicts = {r.command.split(":")[0]: r.verdict for r in reps if r.command.startswith("prove")}
    assert verdicts == {
        "prove plus_comm": "VERIFIED", "prove plus_assoc": "VERIFIED", "prove times_comm": "VERIFIED",
        "prove distrib": "VERIFIED", "prove times_assoc": "VERIFIED", "prove exp_sum": "VERIFIED",
    }
    assert set(s.lemmas) == {"plus_comm", "plus_assoc", "times_comm", "distrib", "times_assoc", "exp_sum"}


def test_exp_sum_fails_without_distributivity():
    s = Session(samples=40, corroborate=0)
    text = corpus_text("proofs").replace("times_comm times_assoc distrib\n", "times_comm\n")
    reps = s.run_text(text)
    assert reps[-1].command.startswith("prove exp_sum") and reps[-1].verdict == "FAIL"


def test_tree_sum_commutativity_under_list_relator():
    s = Session(samples=40, corroborate=20, corroborate_depth=5)
    reps = s.run_text(corpus_text("trees").split("force")[0])
    (r,) = s.run_text("prove t ⊞ u = u ⊞ t via { (t ⊞ u, u ⊞ t) } depth 1")
    assert r.verdict == "VERIFIED"
    assert r.detail["corroboration"] == {"agree": True, "instances": 20, "depth": 5, "requested": 5}
    assert all(x.ok for x in reps)


def test_tree_product_commutativity_needs_the_sum_lemma():
    s = Session(samples=40, corroborate=5, corroborate_depth=6)
    s.run_text(corpus_text("trees").split("force")[0])
    assert prove(s, "prove t ⊠ u = u ⊠ t depth 1").verdict == "FAIL"
    prove(s, "prove tree_sum_comm: t ⊞ u = u ⊞ t depth 1")
    assert prove(s, "prove t ⊠ u = u ⊠ t depth 1 using tree_sum_comm").verdict == "VERIFIED"


@pytest.mark.parametrize("goal", [
    "xs ⊕ ys = ys ⊕ xs",
    "(xs ⊕ ys) ⊕ zs = xs ⊕ (ys ⊕ zs)",
])
def test_verified_goals_are_corroborated(goal):
    r = prove(session(corroborate=20), f"prove {goal} depth 1")
    c = r.detail["corroboration"]
    assert c["agree"] and c["instances"] == 20 and c["depth"] == 60
