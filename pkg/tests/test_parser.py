import random
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from claflite.errors import IndentError, ParseError
from claflite.parser import parse_constraint, parse_model
from claflite.source import (
    ANY, ONE, OPTIONAL, Arrow, Interval, Prefix, UntilOp, apply_defaults, pretty_expr, pretty_model,
)
from oracles import random_model

HERE = Path(__file__).parent
CORPUS = sorted((HERE / "fixtures").glob("*.cfr")) + sorted((HERE / "golden").glob("*.cfr"))


def defaulted(text):
    return apply_defaults(parse_model(text))


def clafer(model, name):
    stack = list(model.decls)
    while stack:
        c = stack.pop()
        if c.name == name:
            return c
        stack.extend(c.children)
    raise KeyError(name)


@pytest.mark.parametrize("path", CORPUS, ids=lambda p: p.name)
def test_corpus_round_trips(path):
    m = defaulted(path.read_text())
    assert defaulted(pretty_model(m)) == m


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_random_models_round_trip(seed):
    text, _ = random_model(random.Random(seed))
    m = defaulted(text)
    assert defaulted(pretty_model(m)) == m


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_parsing_is_deterministic(seed):
    text, _ = random_model(random.Random(seed))
    assert parse_model(text) == parse_model(text)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_apply_defaults_is_idempotent(seed):
    m = defaulted(random_model(random.Random(seed))[0])
    assert apply_defaults(m) == m


def test_interval_rejects_inverted_bounds():
    with pytest.raises(ValueError):
        Interval(3, 2)
    assert 7 in ANY and 0 in OPTIONAL and 2 not in ONE


def test_tab_indentation_is_an_indent_error():
    with pytest.raises(IndentError) as e:
        parse_model("A\n\tB\n")
    assert e.value.kind == "INDENT" and e.value.line == 2


def test_dedent_to_unknown_level():
    with pytest.raises(IndentError):
        parse_model("A\n  B\n C\n")


@pytest.mark.parametrize("text", ["A ->\n", "[ x && ]\n", "A 3..2\n", "xor\n"])
def test_syntax_errors_carry_positions(text):
    with pytest.raises(ParseError) as e:
        parse_model(text)
    assert e.value.line == 1 and e.value.col >= 1


def test_comments_and_blank_lines_are_ignored():
    assert parse_model("// head\nA ?\n\n  // inner\n  B\n") == parse_model("A ?\n  B\n")


def test_cardinality_defaults():
    m = defaulted("abstract T\nA\n  B\nxor C\n  D\n  E\nF : T\n")
    assert clafer(m, "T").cmult == ANY
    assert clafer(m, "A").cmult == ONE
    assert clafer(m, "B").cmult == ONE
    # children of an xor group default to optional
    assert clafer(m, "D").cmult == OPTIONAL
    assert clafer(m, "C").gcard == Interval(1, 1)
    assert clafer(m, "A").super_name == "clafer"
    assert clafer(m, "F").super_name == "T"


def test_reference_syntax():
    c = clafer(defaulted("A *\nC -> A *\nD ->> A\n"), "C")
    assert c.ref.kind == "SET" and c.cmult == ANY
    assert clafer(defaulted("A *\nD ->> A\n"), "D").ref.kind == "BAG"


def test_until_is_right_associative():
    f = parse_constraint("a until b until c")
    assert isinstance(f, UntilOp) and isinstance(f.right, UntilOp)


def test_temporal_prefix_extends_right():
    f = parse_constraint("always a --> b")
    assert isinstance(f, Prefix) and isinstance(f.arg, Arrow)


def test_chained_arrows_nest_to_the_right():
    f = parse_constraint("a -->> b -->> c")
    assert isinstance(f, Arrow) and isinstance(f.right, Arrow)


@pytest.mark.parametrize("text", [
    "a && b || !c", "all x : A | some x.B", "a => b <=> c", "no (a ++ b) -- c ** d",
    "always p between q and r", "one A.parent", "let v = A | v in B", "a.dref = b",
    "initially a", "finally no this", "never (a && b)", "sometime a -->> b",
])
def test_expression_round_trip(text):
    f = parse_constraint(text)
    assert parse_constraint(pretty_expr(f)) == f
