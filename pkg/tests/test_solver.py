import random
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from claflite import compile_goal, compile_model
from claflite.errors import ClafliteError
from claflite.instance import check_structural
from claflite.solver import (
    REFUTE, WITNESS, Scope, canonical_key, check_assertion, enumerate_instances, find_trace,
)
from claflite.temporal import LassoTrace, check_trace
from oracles import canonical, random_model

FIXTURES = Path(__file__).parent / "fixtures"


def compiled_random(seed):
    text, scope = random_model(random.Random(seed))
    try:
        return compile_model(text), scope
    except ClafliteError:
        return None, scope


def test_scope_validation():
    with pytest.raises(ValueError):
        Scope(0)
    with pytest.raises(ValueError):
        Scope(1, trace_len=0)


def test_counts_under_scope():
    cm = compile_model("A *\n  B ?\n")
    assert len(enumerate_instances(cm, Scope(2))) == 6
    assert len(enumerate_instances(cm, Scope(2), limit=2)) == 2
    assert len(enumerate_instances(cm, Scope(1, {"A": 3}))) == 7
    assert len(enumerate_instances(cm, Scope(1, {"A.B": 2}))) == 3


def test_static_mode_collapses_temporal_operators():
    # as a one-snapshot self-loop, X p is just p
    cm = compile_model("p ?\n[ next p ]\n")
    found = enumerate_instances(cm, Scope())
    assert len(found) == 1 and len(found[0].parent) == 1


def test_contradictory_goals_have_no_trace():
    cm = compile_model("A 1..1\n")
    assert find_trace(cm, Scope(), compile_goal(cm, "always no A")) is None
    cm = compile_model("p ?\n")
    assert find_trace(cm, Scope(), compile_goal(cm, "(sometime p) && (always !p)")) is None


def test_shortest_lasso_first():
    cm = compile_model("p ?\n")
    t = find_trace(cm, Scope(), compile_goal(cm, "no p && next some p"))
    assert (len(t), t.loop) == (2, 1)


def test_assertion_verdicts():
    cm = compile_model("p ?\n")
    assert check_assertion(cm, compile_goal(cm, "true"), REFUTE).status == "PASS-WITHIN-BOUND"
    assert check_assertion(cm, compile_goal(cm, "true"), WITNESS).status == "PASS"
    v = check_assertion(cm, compile_goal(cm, "always p"), REFUTE)
    assert v.status == "FAIL" and v.trace is not None
    cm = compile_model("WinController 1..1\n  assert [ no WinController ]\n")
    assert check_assertion(cm, cm.assertions[0].body, WITNESS).status == "FAIL-WITHIN-BOUND"


def test_safety_property_holds_on_the_power_window():
    cm = compile_model((FIXTURES / "powerwindow.cfr").read_text())
    assert check_assertion(cm, cm.assertions[2].body, REFUTE, Scope(1, trace_len=8)).status == "PASS-WITHIN-BOUND"


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_enumeration_is_sound_canonical_and_deterministic(seed):
    cm, scope = compiled_random(seed)
    if cm is None:
        return
    found = enumerate_instances(cm, Scope(scope))
    assert found == enumerate_instances(cm, Scope(scope))
    for s in found:
        assert check_structural(cm, s) == []
        assert check_trace(cm, LassoTrace((s,))) == []
    assert len({canonical(s) for s in found}) == len(found)
    assert len({canonical_key(s) for s in found}) == len(found)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_found_traces_pass_the_checker(seed):
    cm, scope = compiled_random(seed)
    if cm is None:
        return
    t = find_trace(cm, Scope(scope, trace_len=3))
    assert t == find_trace(cm, Scope(scope, trace_len=3))
    if t is not None:
        assert check_trace(cm, t) == []


def test_fixed_loop_position():
    cm = compile_model("p ?\n")
    goal = compile_goal(cm, "no p && next some p")
    assert find_trace(cm, Scope(trace_len=3, loop=0), goal) is None
    t = find_trace(cm, Scope(trace_len=3, loop=1), goal)
    assert t is not None and t.loop == 1
