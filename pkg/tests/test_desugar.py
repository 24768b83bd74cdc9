import itertools
import random
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from claflite import compile_model, formula as fm, load_model
from claflite.desugar import assert_core, desugar_model, normalize
from claflite.errors import DesugarError, NotSupported
from claflite.instance import Inst, Snapshot, SING_INST
from claflite.printer import model_text
from claflite.temporal import LassoTrace, eval_constraint
from oracles import random_model

FIXTURES = Path(__file__).parent / "fixtures"


def constraints(text, levels=0):
    out = model_text(compile_model(text, levels))
    body = out.split("constraints\n", 1)[1].split("assertions\n", 1)[0]
    return [ln.strip() for ln in body.splitlines()]


STATE = "S *\n  p ?\n  q ?\n  g ?\n"


@pytest.mark.parametrize("rule, expected", [
    ("p --> q", "[S] some this.p => X some this.q"),
    ("p -[g]-> q", "[S] (some this.p && some this.g) => X some this.q"),
    ("p -->> q", "[S] some this.p => ((some this && some this.p) U some this.q)"),
    ("p -[g]->> q", "[S] (some this.p && some this.g) => ((some this && some this.p) U some this.q)"),
    ("initially p", "[S] (no this && X some this) => X some this.p"),
    ("finally p", "[S] (some this && X no this) => some this.p"),
])
def test_nested_rewrites(rule, expected):
    assert constraints(f"{STATE}  [ {rule} ]\n") == [expected]


def test_patterns():
    got = constraints("a ?\nb ?\n[ never a && b ]\n[ sometime a ]\n[ next a ]\n[ always true ]\n"
                      "[ always a between b and a ]\n")
    assert got == [
        "G(!(some a && some b))",
        "F(some a)",
        "X some a",
        "G(true)",
        "G(((some b && !some a) && F(some a)) => (some a U some a))",
    ]


def test_normalization():
    assert constraints("a ?\nb ?\n[ a != b ]\n[ a = a ]\n[ one a ]\n[ a ]\n") == [
        "!(a in b && b in a)", "a in a && a in a", "one a", "some a"]


def test_initial_modifier_adds_initially_to_parent():
    assert constraints("W\n  m\n    initial s ?\n    t ?\n") == [
        "[W.m] (no this && X some this) => X some this.s"]


def test_final_modifier_adds_frame_rule():
    assert constraints("W ?\n  final m ?\n") == [
        "[W] let s = this.m | X (some this => (this.m in s && s in this.m))"]


def test_top_level_defaults_to_globally_unless_initially():
    assert constraints("a ?\n[ a ]\n[ initially a ]\n", None) == ["G(some a)", "some a"]


def test_lifting_one_level():
    assert constraints("C *\n  p ?\n  [ p ]\n", None) == ["G(all c : this.C | some c => some c.p)"]


def test_constant_initializer():
    assert constraints("A\n  x -> A ? = A\n") == ["[A.x] this.dref in A && A in this.dref"]


def test_default_initializer_is_rejected():
    with pytest.raises(NotSupported):
        compile_model("A\n  x -> A ? := A\n")


def test_top_level_multi_arrow_is_rejected():
    with pytest.raises(DesugarError):
        compile_model("a ?\nb ?\n[ a -->> b ]\n")


def test_scenario_arrows_chain_to_the_right():
    cm = compile_model((FIXTURES / "powerwindow.cfr").read_text(), lift_levels=0)
    text = model_text(cm)
    closed, part, open_ = (f"WinController.winStates.stopped.{n}" for n in ("closed", "partlyOpen", "open"))
    assert (f"F(some {closed} => ((some this && some {closed}) U (some {part} => "
            f"((some this && some {part}) U some {open_}))))") in text


@pytest.mark.parametrize("name", ["window_features.cfr", "presence_condition.cfr", "chime.cfr", "powerwindow.cfr"])
def test_full_pipeline_leaves_only_core_nodes(name):
    cm = compile_model((FIXTURES / name).read_text())
    for c in cm.constraints + cm.assertions:
        assert_core(c.body)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_desugaring_is_deterministic_and_idempotent(seed):
    text, _ = random_model(random.Random(seed))
    try:
        cm = load_model(text)
        once = desugar_model(cm)
    except DesugarError:
        return
    assert desugar_model(load_model(text)) == once
    assert desugar_model(once) == once


def test_no_union_equals_lone_brute_force():
    # over every pair of optional clafers, the two spellings agree snapshot by snapshot
    cm = desugar_model(load_model("a ?\nb ?\n[ lone (a ++ b) ]\n[ no (a ** b) ]\n"))
    ids = [cm.by_path("a"), cm.by_path("b")]
    lone_ab, no_inter = (c.body for c in cm.constraints)
    for present in itertools.product([False, True], repeat=2):
        parent = {Inst(c, 0): SING_INST for c, on in zip(ids, present) if on}
        trace = LassoTrace((Snapshot(parent),))
        assert eval_constraint(cm, trace, 0, (), lone_ab) == (sum(present) <= 1)
        assert eval_constraint(cm, trace, 0, (), no_inter)


def test_normalize_is_idempotent_on_core():
    f = fm.Not(fm.Count("some", fm.Name(2)))
    assert normalize(normalize(f)) == normalize(f)
