import random
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from claflite import compile_model, load_model
from claflite import formula as fm
from claflite.core import ROOT, SING, resolve_name, super_closure, validate_wellformed
from claflite.errors import AmbiguousName, DuplicateName, UnresolvedName
from claflite.printer import model_text
from oracles import random_model

FIXTURES = Path(__file__).parent / "fixtures"


def rules(text):
    return [v.rule for v in validate_wellformed(load_model(text))]


@pytest.mark.parametrize("name", ["window_features.cfr", "presence_condition.cfr", "chime.cfr", "powerwindow.cfr"])
def test_example_models_are_wellformed(name):
    assert rules((FIXTURES / name).read_text()) == []


def test_sing_is_the_root():
    cm = load_model("A\n")
    sing = cm[SING]
    assert sing.parent is None and not sing.is_abstract and sing.cmult.lo == sing.cmult.hi == 1
    assert cm[cm.by_path("A")].parent == SING


def test_contextual_names_follow_the_parent_chain():
    text = model_text(compile_model((FIXTURES / "powerwindow.cfr").read_text(), lift_levels=0))
    under_moving_up = [ln for ln in text.splitlines() if ln.startswith("  [WinController.winStates.movingUp]")]
    assert any("this.parent.parent.req" in ln and "this.parent.movingDown" in ln for ln in under_moving_up)


def test_resolution_tiers_shadow():
    cm = load_model("A\n  B\n    X\n  X\nX\n")
    b = cm.by_path("A.B")
    assert resolve_name(cm, b, "X") == [(0, cm.by_path("A.B.X"))]
    assert resolve_name(cm, cm.by_path("A"), "X") == [(0, cm.by_path("A.X"))]
    assert resolve_name(cm, SING, "X") == [(0, cm.by_path("X"))]


def test_global_tier_needs_a_unique_name():
    cm = load_model("A\n  B\n    Y\nC\n")
    assert resolve_name(cm, cm.by_path("C"), "Y") == [(-1, cm.by_path("A.B.Y"))]


def test_inherited_children_resolve():
    cm = load_model("abstract T\n  p ?\nU : T\n  [ p ]\n")
    assert resolve_name(cm, cm.by_path("U"), "p") == [(0, cm.by_path("T.p"))]


def test_ambiguous_and_unknown_names():
    with pytest.raises(AmbiguousName):
        load_model("A\n  X\nB\n  X\n[ X ]\n")
    with pytest.raises(UnresolvedName):
        load_model("A\n[ Nope ]\n")
    with pytest.raises(DuplicateName):
        load_model("A\n  B\n  B\n")


def test_names_resolve_to_clafer_ids():
    cm = load_model((FIXTURES / "powerwindow.cfr").read_text())
    ids = {c.id for c in cm.clafers}
    for c in cm.constraints + cm.assertions:
        for n in fm.walk(c.body):
            if isinstance(n, fm.Name):
                assert n.clafer in ids


def test_wellformedness_violations():
    assert rules("B\nabstract A : B\n") == ["abstract-super"]
    assert "acyclic" in rules("A : A\n")
    assert rules("abstract S\n  abstract T\nV\n  W : T\n") == ["covariance"]
    assert rules("abstract S\n  abstract T\nV : S\n  W : T\n") == []


def test_super_closure_examples():
    cm = load_model((FIXTURES / "powerwindow.cfr").read_text())
    stop, command = cm.by_path("motorStop"), cm.by_path("Command")
    assert super_closure(cm, stop) == {stop, command, ROOT}
    cm = load_model("A : B\nB : C\nC\n")
    a, b, c = (cm.by_path(n) for n in "ABC")
    assert super_closure(cm, a) == {a, b, c, ROOT}
    assert super_closure(cm, c) == {c, ROOT}


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_super_closure_is_reflexive_and_monotone(seed):
    text, _ = random_model(random.Random(seed))
    cm = load_model(text)
    for c in cm.clafers:
        assert c.id in super_closure(cm, c.id)
        if c.super is not None:
            assert super_closure(cm, c.super) <= super_closure(cm, c.id)


def test_final_is_inherited():
    cm = load_model("abstract final C\nx : C\n  y\n")
    assert cm[cm.by_path("x")].is_final
    assert not cm[cm.by_path("x.y")].is_final
