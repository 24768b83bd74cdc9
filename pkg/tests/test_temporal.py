import random

import pytest
from hypothesis import given, settings, strategies as st

from claflite import compile_model, formula as fm
from claflite.instance import SING_INST, Inst, Snapshot
from claflite.solver import Scope, find_trace
from claflite.temporal import (
    LassoTrace, check_trace, eval_constraint, parse_trace, trace_from_json, trace_json, trace_text,
)
from oracles import Unrolled, formula_model, random_formula, random_lasso

seeds = st.integers(0, 10**6)


@pytest.fixture(scope="module")
def cm():
    return formula_model()


def present(cm, *names):
    return Snapshot({Inst(cm.by_path(n), 0): SING_INST for n in names})


def test_lasso_needs_a_valid_loop():
    with pytest.raises(ValueError):
        LassoTrace((), 0)
    with pytest.raises(ValueError):
        LassoTrace((Snapshot({}),), 1)


def test_successor_wraps_to_loop(cm):
    t = LassoTrace((present(cm), present(cm), present(cm)), loop=1)
    assert [t.succ(i) for i in range(3)] == [1, 2, 1]


def test_small_examples(cm):
    a = fm.Count("some", fm.Name(cm.by_path("A")))
    none = fm.Count("no", fm.Name(cm.by_path("A")))
    g_true = fm.Not(fm.Until(fm.TrueC(), fm.Not(fm.TrueC())))
    t = LassoTrace((present(cm), present(cm, "A")), loop=0)
    assert eval_constraint(cm, t, 0, (), g_true)
    assert eval_constraint(cm, t, 0, (), fm.Until(fm.TrueC(), a))
    # p everywhere, q nowhere
    assert not eval_constraint(cm, t, 0, (), fm.Until(fm.TrueC(), fm.Binary(fm.AND, a, none)))


@settings(max_examples=300, deadline=None)
@given(seeds)
def test_agrees_with_unrolling(seed):
    cm = formula_model()
    rng = random.Random(seed)
    f, t = random_formula(rng, cm), random_lasso(rng, cm)
    assert eval_constraint(cm, t, 0, (), f) == Unrolled(cm, t).holds(f)


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_next_distributes(seed):
    cm = formula_model()
    rng = random.Random(seed)
    a, b, t = random_formula(rng, cm, 3), random_formula(rng, cm, 3), random_lasso(rng, cm)
    for op in (fm.AND, fm.OR, fm.IMPLIES):
        lhs = fm.Next(fm.Binary(op, a, b))
        rhs = fm.Binary(op, fm.Next(a), fm.Next(b))
        for i in range(len(t)):
            assert eval_constraint(cm, t, i, (), lhs) == eval_constraint(cm, t, i, (), rhs)


def unfold(t: LassoTrace) -> LassoTrace:
    """Same infinite word with the loop entered one step later."""
    return LassoTrace(t.snapshots + (t.snapshots[t.loop],), t.loop + 1)


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_unfolding_the_loop_preserves_truth(seed):
    cm = formula_model()
    rng = random.Random(seed)
    f, t = random_formula(rng, cm), random_lasso(rng, cm)
    assert eval_constraint(cm, t, 0, (), f) == eval_constraint(cm, unfold(t), 0, (), f)


DYNAMIC = "A ?\n  B ?\n[ initially no A ]\n[ no A --> some A ]\n[ sometime A.B ]\n"


def test_unfolding_preserves_validity():
    cm = compile_model(DYNAMIC)
    t = find_trace(cm, Scope(1, trace_len=4))
    assert t is not None and check_trace(cm, t) == []
    assert len(t) == 2 and t.loop == 1
    assert check_trace(cm, unfold(t)) == []
    assert check_trace(cm, unfold(unfold(t))) == []


def test_stuttering_configuration_is_valid():
    cm = compile_model("A\n  B ?\n")
    a = Inst(cm.by_path("A"), 0)
    assert check_trace(cm, LassoTrace((Snapshot({a: SING_INST}),))) == []


def test_reappearance_is_rejected():
    cm = compile_model("A ?\n")
    a = Snapshot({Inst(cm.by_path("A"), 0): SING_INST})
    gone = Snapshot({})
    assert [v.rule for v in check_trace(cm, LassoTrace((a, gone, a), 2))] == ["reappear"]
    # across the seam: present only in the first loop position
    assert [v.rule for v in check_trace(cm, LassoTrace((a, gone), 0))] == ["reappear"]
    assert check_trace(cm, LassoTrace((gone, a), 1)) == []


def test_parent_change_is_rejected():
    cm = compile_model("A 2\n  B ?\n")
    a0, a1, b = Inst(cm.by_path("A"), 0), Inst(cm.by_path("A"), 1), Inst(cm.by_path("A.B"), 0)
    s0 = Snapshot({a0: SING_INST, a1: SING_INST, b: a0})
    s1 = Snapshot({a0: SING_INST, a1: SING_INST, b: a1})
    assert [v.rule for v in check_trace(cm, LassoTrace((s0, s1), 1))] == ["parent"]


def test_violated_constraint_is_reported():
    cm = compile_model("A ?\n[ A ]\n")
    assert [v.rule for v in check_trace(cm, LassoTrace((Snapshot({}),)))] == ["constraint"]


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_trace_serialization_round_trips(seed):
    cm = formula_model()
    t = random_lasso(random.Random(seed), cm)
    assert parse_trace(cm, trace_text(cm, t)) == t
    assert trace_from_json(cm, trace_json(cm, t)) == t
