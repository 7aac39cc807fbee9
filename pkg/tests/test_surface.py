import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import CORPUS
from corec.errors import CorecError, SortMismatch, SyntaxError, UnboundName
from corec.surface import parse_expr, parse_file, pretty, resolve
from corec.surface.lexer import tokenize
from corec.surface.pretty import pp_expr
from corec.surface.session import Session
from corec.syntax import BinOp, BoolLit, Call, If, ListLit, NatLit, Not, Var

CASES = settings(max_examples=200, deadline=None)

nat_exprs = st.recursive(
    st.one_of(st.integers(0, 30).map(NatLit), st.sampled_from("xyz").map(Var)),
    lambda inner: st.one_of(
        st.tuples(st.sampled_from(["+", "-", "*", "^"]), inner, inner).map(lambda t: BinOp(*t)),
        st.tuples(inner, inner).map(lambda p: Call("f", p)),
        inner.map(lambda a: Call("g", (a,))),
        st.tuples(st.sampled_from(["⊕", "⊗"]), inner, inner).map(lambda t: Call(t[0], (t[1], t[2]), infix=True)),
    ),
    max_leaves=8,
)

bool_exprs = st.recursive(
    st.one_of(
        st.booleans().map(BoolLit),
        st.tuples(st.sampled_from(["=", "<", ">"]), nat_exprs, nat_exprs).map(lambda t: BinOp(*t)),
    ),
    lambda inner: st.one_of(
        st.tuples(st.sampled_from(["and", "or"]), inner, inner).map(lambda t: BinOp(*t)),
        inner.map(Not),
    ),
    max_leaves=5,
)

exprs = st.one_of(
    nat_exprs,
    bool_exprs,
    st.tuples(bool_exprs, nat_exprs, nat_exprs).map(lambda t: If(*t)),
    st.lists(nat_exprs, max_size=3).map(lambda xs: ListLit(tuple(xs))),
)


@CASES
@given(exprs)
def test_expression_round_trip(e):
    assert parse_expr(pp_expr(e)) == e


@CASES
@given(exprs)
def test_printing_is_stable(e):
    s = pp_expr(e)
    assert pp_expr(parse_expr(s)) == s


# ground arithmetic against Python, with truncated subtraction on naturals

ground = st.recursive(
    st.integers(0, 12).map(NatLit),
    lambda inner: st.tuples(st.sampled_from(["+", "-", "*"]), inner, inner).map(lambda t: BinOp(*t)),
    max_leaves=8,
)


def oracle(e):
    if isinstance(e, NatLit):
        return e.value
    a, b = oracle(e.left), oracle(e.right)
    return {"+": a + b, "-": max(a - b, 0), "*": a * b}[e.op]


@CASES
@given(ground)
def test_ground_arithmetic_matches_python(e):
    s = Session()
    s.run_text("codatatype Stream = SCons (head: Nat) (tail: Stream)\n"
               f"corec c: Stream = SCons ({pp_expr(e)}) c\n")
    assert s.run_text("force c upto 1")[0].detail == [oracle(e)]


@pytest.mark.parametrize("name", sorted(p.stem for p in CORPUS.glob("*.corec")))
def test_corpus_round_trips(name):
    f = parse_file((CORPUS / f"{name}.corec").read_text())
    text = pretty(f)
    assert parse_file(text) == f
    assert pretty(parse_file(text)) == text


def test_corpus_resolves():
    for p in CORPUS.glob("*.corec"):
        resolve(parse_file(p.read_text()))


def test_tokens_carry_positions():
    toks = tokenize("corec f: Stream =\n  SCons 1 f")
    scons = next(t for t in toks if t.text == "SCons")
    assert (scons.span.line, scons.span.col) == (2, 3)
    assert toks[-1].kind == "eof"


def test_infix_symbols_are_op_tokens():
    kinds = [(t.kind, t.text) for t in tokenize("xs ⊕ ys ⊗ zs")]
    assert ("op", "⊕") in kinds and ("op", "⊗") in kinds


def test_precedence_of_infix_ops():
    e = parse_expr("a ⊕ b ⊗ c")
    assert e.fn == "⊕" and e.args[1].fn == "⊗"
    assert pp_expr(parse_expr("(a ⊕ b) ⊗ c")) == "(a ⊕ b) ⊗ c"


def test_syntax_error_location_and_expected():
    with pytest.raises(SyntaxError) as ei:
        parse_file("corec f: Stream = SCons 1\nforce f upto")
    err = ei.value
    assert (err.line, err.col) == (2, 13)
    assert "<nat>" in err.expected


def test_unknown_declaration_keyword():
    with pytest.raises(SyntaxError):
        parse_file("define f = 1")


def test_unbound_name():
    s = Session()
    with pytest.raises(UnboundName):
        s.run_text("codatatype Stream = SCons (head: Nat) (tail: Stream)\ncorec f: Stream = SCons 1 g\n")


def test_sort_mismatch():
    s = Session()
    with pytest.raises(SortMismatch):
        s.run_text("codatatype Stream = SCons (head: Nat) (tail: Stream)\ncorec f: Stream = SCons f 1\n")


def test_errors_are_corec_errors():
    assert issubclass(SyntaxError, CorecError) and issubclass(UnboundName, CorecError)
