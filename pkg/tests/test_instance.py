from functools import lru_cache

import pytest
from hypothesis import given, settings, strategies as st

from claflite import compile_model, formula as fm
from claflite.instance import (
    EMPTY, SING_INST, Inst, Snapshot, check_structural, dumps_snapshot, eval_expr, parse_snapshot,
    snapshot_from_json, snapshot_json, snapshot_text,
)
from oracles import oracle_instances
from claflite.solver import Scope, enumerate_instances

MODEL = "abstract T\nA : T 1..2\n  B ?\nR -> A *\nxor G ?\n  x ?\n  y ?\nM 1..1\n"


@pytest.fixture(scope="module")
def cm():
    return compile_model(MODEL)


def inst(cm, path, n=0):
    return Inst(cm.by_path(path), n)


def rules_of(cm, parent, links=None):
    return [v.rule for v in check_structural(cm, Snapshot(parent, links))]


def base(cm):
    return {inst(cm, "A"): SING_INST, inst(cm, "M"): SING_INST}


def test_valid_snapshot_has_no_violations(cm):
    assert rules_of(cm, base(cm)) == []


def test_empty_snapshot_reports_top_level_lower_bounds(cm):
    found = check_structural(cm, EMPTY)
    assert [v.rule for v in found] == ["5", "5"]
    assert {m.message.split()[3].rstrip(",") for m in found} == {"A", "M"}


def test_direct_instance_of_abstract(cm):
    assert rules_of(cm, {**base(cm), inst(cm, "T"): SING_INST}) == ["1"]


def test_parent_must_be_well_typed(cm):
    assert rules_of(cm, {**base(cm), inst(cm, "A.B"): inst(cm, "M")}) == ["2"]


def test_reference_needs_a_target(cm):
    assert rules_of(cm, {**base(cm), inst(cm, "R"): SING_INST}) == ["3"]


def test_set_reference_is_locally_injective(cm):
    r0, r1 = inst(cm, "R"), inst(cm, "R", 1)
    parent = {**base(cm), r0: SING_INST, r1: SING_INST}
    assert rules_of(cm, parent, {r0: inst(cm, "A"), r1: inst(cm, "A")}) == ["4"]
    assert rules_of(cm, {**parent, inst(cm, "A", 1): SING_INST},
                    {r0: inst(cm, "A"), r1: inst(cm, "A", 1)}) == []


def test_bag_reference_allows_repeats():
    cm = compile_model("A\nR ->> A *\n")
    r0, r1, a = Inst(cm.by_path("R"), 0), Inst(cm.by_path("R"), 1), Inst(cm.by_path("A"), 0)
    assert rules_of(cm, {a: SING_INST, r0: SING_INST, r1: SING_INST}, {r0: a, r1: a}) == []


def test_group_cardinality(cm):
    g = inst(cm, "G")
    assert rules_of(cm, {**base(cm), g: SING_INST}) == ["6"]
    assert rules_of(cm, {**base(cm), g: SING_INST, inst(cm, "G.x"): g, inst(cm, "G.y"): g}) == ["6"]
    assert rules_of(cm, {**base(cm), g: SING_INST, inst(cm, "G.y"): g}) == []


def test_vacuous_join_and_root_parent(cm):
    s = Snapshot(base(cm))
    assert eval_expr(cm, s, (), fm.Join(fm.Name(cm.by_path("G")), fm.Name(cm.by_path("G.x")))) == frozenset()
    assert eval_expr(cm, s, (), fm.Parent(fm.Name(cm.by_path("A")))) == {SING_INST}


REF_MODEL = "A *\n  r -> A ?\n  B ?\n"


@lru_cache(maxsize=None)
def ref_snapshots():
    cm = compile_model(REF_MODEL)
    return cm, enumerate_instances(cm, Scope(2))


def test_enumeration_covers_the_oracle():
    from oracles import canonical
    cm, snaps = ref_snapshots()
    assert {canonical(s) for s in snaps} == oracle_instances(cm, lambda c: 2)


@settings(max_examples=80, deadline=None)
@given(st.data())
def test_join_is_monotone(data):
    cm, snaps = ref_snapshots()
    s = data.draw(st.sampled_from(snaps))
    pool = sorted(s.instances)
    small = frozenset(data.draw(st.lists(st.sampled_from(pool), unique=True)))
    large = small | frozenset(data.draw(st.lists(st.sampled_from(pool), unique=True)))
    for right in (fm.Name(cm.by_path("A.r")), fm.Name(cm.by_path("A")), fm.Const(large)):
        lo = eval_expr(cm, s, (), fm.Join(fm.Const(small), right))
        hi = eval_expr(cm, s, (), fm.Join(fm.Const(large), right))
        assert lo <= hi
    lo = eval_expr(cm, s, (), fm.Join(fm.Const(large), fm.Const(small)))
    hi = eval_expr(cm, s, (), fm.Join(fm.Const(large), fm.Const(large)))
    assert lo <= hi


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_reified_reference_parent_stays_in_origin(data):
    cm, snaps = ref_snapshots()
    s = data.draw(st.sampled_from(snaps))
    origin = frozenset(data.draw(st.lists(st.sampled_from(sorted(s.instances)), unique=True)))
    refs = fm.Join(fm.Const(origin), fm.Name(cm.by_path("A.r")))
    assert eval_expr(cm, s, (), fm.Parent(refs)) <= origin
    targets = eval_expr(cm, s, (), fm.Dref(refs))
    assert targets <= s.of_type(cm, cm.by_path("A"))


def test_serialization_format(cm):
    # lines follow declaration order, then instance number
    s = Snapshot({**base(cm), inst(cm, "R"): SING_INST}, {inst(cm, "R"): inst(cm, "A")})
    assert snapshot_text(cm, s) == "A$0:A(sing)\nR$0:R(sing)->A$0\nM$0:M(sing)\n"


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_serialization_round_trips(data):
    cm, snaps = ref_snapshots()
    s = data.draw(st.sampled_from(snaps))
    assert parse_snapshot(cm, snapshot_text(cm, s)) == s
    assert snapshot_from_json(cm, snapshot_json(cm, s)) == s
    assert dumps_snapshot(cm, s) == dumps_snapshot(cm, s)
