"""Snapshots, structural well-formedness, and set-expression evaluation."""
from __future__ import annotations

import json
from collections import defaultdict
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Mapping, NamedTuple, Optional, Tuple

from . import formula as fm
from .core import SING, CoreModel, Violation


class Inst(NamedTuple):
    clafer: int
    num: int


SING_INST = Inst(SING, 0)

Env = Tuple[Tuple[str, FrozenSet[Inst]], ...]
EMPTY_ENV: Env = ()


class Snapshot:
    """One epoch: an instance tree under ``sing`` plus reference links.

    Typing is carried by the instance itself (``Inst.clafer``).
    """

    __slots__ = ("parent", "links", "_hash", "__dict__")

    def __init__(self, parent: Mapping[Inst, Inst], links: Mapping[Inst, Inst] = None):
        self.parent: Dict[Inst, Inst] = {i: p for i, p in parent.items() if i != SING_INST}
        self.links: Dict[Inst, Inst] = dict(links or {})
        self._hash = hash((frozenset(self.parent.items()), frozenset(self.links.items())))

    def __eq__(self, other):
        return isinstance(other, Snapshot) and self._hash == other._hash \
            and self.parent == other.parent and self.links == other.links

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Snapshot({sorted(self.parent.items())}, {sorted(self.links.items())})"

    @cached_property
    def instances(self) -> FrozenSet[Inst]:
        return frozenset(self.parent) | {SING_INST}

    @cached_property
    def by_clafer(self) -> Dict[int, Tuple[Inst, ...]]:
        out: Dict[int, List[Inst]] = defaultdict(list)
        for i in sorted(self.instances):
            out[i.clafer].append(i)
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def children(self) -> Dict[Inst, Tuple[Inst, ...]]:
        out: Dict[Inst, List[Inst]] = defaultdict(list)
        for i, p in sorted(self.parent.items()):
            out[p].append(i)
        return {k: tuple(v) for k, v in out.items()}

    def of_type(self, cm: CoreModel, c: int) -> FrozenSet[Inst]:
        return frozenset(i for d in cm.instantiators[c] for i in self.by_clafer.get(d, ()))


EMPTY = Snapshot({})


def ity_star(cm: CoreModel, s: Snapshot, i: Inst, c: int) -> bool:
    return c in cm.super_closure(i.clafer)


def reference_of(cm: CoreModel, cid: int) -> Optional[Tuple[str, int]]:
    refs = cm.ref_targets(cid)
    return refs[0] if refs else None


def check_structural(cm: CoreModel, s: Snapshot) -> List[Violation]:
    out: List[Violation] = []
    names = cm.display_names

    def bad(rule, msg):
        out.append(Violation(rule, msg))

    for i in sorted(s.instances):
        if i.clafer >= len(cm.clafers):
            bad("1", f"instance {i} has unknown type")
            return out
        if i != SING_INST and (i.clafer == SING or cm[i.clafer].is_abstract):
            bad("1", f"{instance_id(cm, i)} is a direct instance of abstract {names[i.clafer]}")
    for i, p in sorted(s.parent.items()):
        if p not in s.instances:
            bad("2", f"{instance_id(cm, i)} has missing parent {instance_id(cm, p)}")
            continue
        # the child's own declaration must sit under one of the parent's types
        if cm[i.clafer].parent not in cm.super_closure(p.clafer):
            bad("2", f"{instance_id(cm, i)} cannot nest under {instance_id(cm, p)}")
    for i in sorted(s.instances):
        ref = reference_of(cm, i.clafer)
        target = s.links.get(i)
        if ref is None and target is not None:
            bad("3", f"{instance_id(cm, i)} links but its type has no reference")
        elif ref is not None and target is None:
            bad("3", f"{instance_id(cm, i)} has no reference target")
        elif ref is not None and (target not in s.instances or not ity_star(cm, s, target, ref[1])):
            bad("3", f"{instance_id(cm, i)} links to {instance_id(cm, target)}, not a {names[ref[1]]}")
    for i in s.links:
        if i not in s.instances:
            bad("3", f"link from missing instance {instance_id(cm, i)}")
    # local injectivity per concrete declared clafer
    seen: Dict[Tuple[Inst, int, Inst], Inst] = {}
    for i, target in sorted(s.links.items()):
        ref = reference_of(cm, i.clafer)
        if ref is None or ref[0] != "SET":
            continue
        key = (s.parent.get(i), i.clafer, target)
        if key in seen:
            bad("4", f"{instance_id(cm, seen[key])} and {instance_id(cm, i)} both link to "
                     f"{instance_id(cm, target)}")
        seen[key] = i
    for d in cm.clafers[1:]:
        if d.parent is None:
            continue
        for p in sorted(s.of_type(cm, d.parent) | ({SING_INST} if d.parent == SING else set())):
            n = sum(1 for ch in s.children.get(p, ()) if ity_star(cm, s, ch, d.id))
            if n not in d.cmult:
                bad("5", f"{instance_id(cm, p)} has {n} {names[d.id]}, expected {d.cmult}")
    for p in sorted(s.instances):
        for c in sorted(cm.super_closure(p.clafer)):
            n = sum(1 for ch in s.children.get(p, ())
                    if any(cm[x].parent == c for x in cm.super_closure(ch.clafer)))
            if n not in cm[c].gcard:
                bad("6", f"{instance_id(cm, p)} has {n} children under {names[c]}, "
                         f"group allows {cm[c].gcard}")
    return out


# -- evaluation ---------------------------------------------------------------------


def lookup(env: Env, name: str) -> Optional[FrozenSet[Inst]]:
    for k, v in reversed(env):
        if k == name:
            return v
    return None


def bind(env: Env, name: str, value: FrozenSet[Inst]) -> Env:
    return env + ((name, value),)


def eval_expr(cm: CoreModel, s: Snapshot, env: Env, e) -> FrozenSet[Inst]:
    """Value of a set expression against snapshot ``s``.

    Bound variables hold plain instance sets; navigation from them always
    uses the snapshot under evaluation.
    """
    if isinstance(e, fm.Name):
        return frozenset({SING_INST}) if e.clafer == SING else s.of_type(cm, e.clafer)
    if isinstance(e, fm.This):
        v = lookup(env, "this")
        return frozenset({SING_INST}) if v is None else v
    if isinstance(e, fm.Var):
        v = lookup(env, e.name)
        if v is None:
            raise KeyError(f"unbound variable {e.name}")
        return v
    if isinstance(e, fm.Join):
        left = eval_expr(cm, s, env, e.left)
        if isinstance(e.right, fm.Name):
            ok = cm.instantiators[e.right.clafer]
            return frozenset(ch for p in left for ch in s.children.get(p, ()) if ch.clafer in ok)
        right = eval_expr(cm, s, env, e.right)
        return frozenset(i for i in right if s.parent.get(i) in left)
    if isinstance(e, fm.Dref):
        return frozenset(s.links[i] for i in eval_expr(cm, s, env, e.arg) if i in s.links)
    if isinstance(e, fm.Parent):
        return frozenset(s.parent[i] for i in eval_expr(cm, s, env, e.arg) if i in s.parent)
    if isinstance(e, fm.Union):
        return eval_expr(cm, s, env, e.left) | eval_expr(cm, s, env, e.right)
    if isinstance(e, fm.Diff):
        return eval_expr(cm, s, env, e.left) - eval_expr(cm, s, env, e.right)
    if isinstance(e, fm.Inter):
        return eval_expr(cm, s, env, e.left) & eval_expr(cm, s, env, e.right)
    if isinstance(e, fm.Const):
        return e.instances
    raise TypeError(f"not an expression: {e!r}")


# -- serialization ------------------------------------------------------------------


def instance_id(cm: CoreModel, i: Inst) -> str:
    if i == SING_INST:
        return "sing"
    return f"{cm.display_names[i.clafer]}${i.num}"


def snapshot_lines(cm: CoreModel, s: Snapshot) -> List[str]:
    out = []
    for i in sorted(s.parent):
        line = f"{instance_id(cm, i)}:{cm.display_names[i.clafer]}({instance_id(cm, s.parent[i])})"
        if i in s.links:
            line += f"->{instance_id(cm, s.links[i])}"
        out.append(line)
    return out


def snapshot_text(cm: CoreModel, s: Snapshot) -> str:
    return "\n".join(snapshot_lines(cm, s)) + "\n"


def snapshot_json(cm: CoreModel, s: Snapshot) -> list:
    out = []
    for i in sorted(s.parent):
        item = {"id": instance_id(cm, i), "type": cm.display_names[i.clafer],
                "parent": instance_id(cm, s.parent[i])}
        if i in s.links:
            item["target"] = instance_id(cm, s.links[i])
        out.append(item)
    return out


def _parse_id(cm: CoreModel, text: str) -> Inst:
    if text == "sing":
        return SING_INST
    name, _, num = text.rpartition("$")
    inverse = {v: k for k, v in cm.display_names.items()}
    return Inst(inverse[name], int(num))


def parse_snapshot(cm: CoreModel, text: str) -> Snapshot:
    """Inverse of :func:`snapshot_text`."""
    parent, links = {}, {}
    for raw in text.splitlines():
        raw = raw.strip()
        if not raw:
            continue
        ident, _, rest = raw.partition(":")
        _, _, rest = rest.partition("(")
        par, _, rest = rest.partition(")")
        i = _parse_id(cm, ident)
        parent[i] = _parse_id(cm, par)
        if rest.startswith("->"):
            links[i] = _parse_id(cm, rest[2:])
    return Snapshot(parent, links)


def snapshot_from_json(cm: CoreModel, items: Iterable[dict]) -> Snapshot:
    parent, links = {}, {}
    for item in items:
        i = _parse_id(cm, item["id"])
        parent[i] = _parse_id(cm, item["parent"])
        if "target" in item:
            links[i] = _parse_id(cm, item["target"])
    return Snapshot(parent, links)


def dumps_snapshot(cm: CoreModel, s: Snapshot) -> str:
    return json.dumps(snapshot_json(cm, s), indent=2)
