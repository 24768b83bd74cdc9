"""Bounded search for snapshots and lasso traces.

Structures are generated top-down from ``sing``: each node picks which old
children survive and how many fresh ones appear, subject to multiplicity,
group cardinality, scope and the ``final`` frame. Temporal constraints are
handled by formula progression over ground residuals; a candidate loop is
confirmed by exact lasso evaluation.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterator, List, Mapping, NamedTuple, Optional, Sequence, Tuple

from . import formula as fm
from .core import SING, CoreModel
from .instance import (
    EMPTY_ENV, Env, Inst, SING_INST, Snapshot, bind, eval_expr, reference_of,
)
from .temporal import Evaluator, LassoTrace

log = logging.getLogger("claflite")


@dataclass(frozen=True)
class Scope:
    default_max: int = 1
    per_clafer: Mapping[str, int] = field(default_factory=dict)
    trace_len: int = 8
    loop: Optional[int] = None  # None tries every loop position

    def __post_init__(self):
        if self.default_max < 1 or self.trace_len < 1:
            raise ValueError("scope and trace length must be at least 1")

    def bound(self, cm: CoreModel, cid: int) -> int:
        for key in (cm.path(cid), cm[cid].name):
            if key in self.per_clafer:
                return self.per_clafer[key]
        return self.default_max


# -- structure generation -----------------------------------------------------------


@dataclass(frozen=True)
class _Plan:
    clafer: int
    old: Optional[Inst]
    children: Tuple["_Plan", ...]


def _plan_key(p: _Plan):
    return (p.clafer, tuple(_plan_key(c) for c in p.children))


class Structures:
    """All structurally valid snapshots, from scratch or as successors."""

    def __init__(self, cm: CoreModel, scope: Scope):
        self.cm = cm
        n = len(cm.clafers)
        self.budget0 = tuple(scope.bound(cm, c) if c in cm.concrete else 0 for c in range(n))
        self.child_types: Dict[int, Tuple[int, ...]] = {}
        self.rules: Dict[int, List[Tuple[FrozenSet[int], object]]] = {}
        for p in [SING] + list(cm.concrete):
            closure = cm.super_closure(p)
            kids = tuple(d for d in cm.concrete if cm[d].parent in closure)
            self.child_types[p] = kids
            rules = []
            for c2 in cm.clafers[1:]:
                if c2.parent in closure:
                    members = frozenset(d for d in kids if c2.id in cm.super_closure(d))
                    if c2.cmult.lo > 0 or c2.cmult.hi is not None:
                        rules.append((members, c2.cmult))
            for c1 in closure:
                members = frozenset(d for d in kids
                                    if any(cm[x].parent == c1 for x in cm.super_closure(d)))
                g = cm[c1].gcard
                if g.lo > 0 or g.hi is not None:
                    rules.append((members, g))
            self.rules[p] = rules
        self._fresh_memo: Dict[Tuple[int, tuple], List[Tuple[Tuple[_Plan, ...], tuple]]] = {}
        self._link_memo: Dict[FrozenSet, Tuple[Snapshot, ...]] = {}

    # plans ------------------------------------------------------------------------

    def _node(self, p: int, old: Optional[Inst], prev: Optional[Snapshot], budget: tuple):
        """Yield ``(children, budget)`` for a node of type ``p``."""
        if old is None:
            key = (p, budget)
            memo = self._fresh_memo.get(key)
            if memo is None:
                memo = list(self._node_uncached(p, None, None, budget))
                self._fresh_memo[key] = memo
            yield from memo
            return
        yield from self._node_uncached(p, old, prev, budget)

    def _node_uncached(self, p, old, prev, budget):
        cm = self.cm
        olds_all = prev.children.get(old, ()) if old is not None else ()
        per_type = []
        for d in self.child_types[p]:
            olds = tuple(c for c in olds_all if c.clafer == d)
            frozen = old is not None and cm[d].is_final
            hi = cm[d].cmult.hi
            opts = []
            keeps = [olds] if frozen else [
                k for r in range(len(olds) + 1) for k in itertools.combinations(olds, r)]
            for kept in keeps:
                news = [0] if frozen else range(0, budget[d] - len(kept) + 1)
                for n in news:
                    total = len(kept) + n
                    if total > budget[d] or (hi is not None and total > hi):
                        break
                    opts.append((kept, n))
            if not opts:
                return
            per_type.append((d, opts))
        rules = self.rules[p]
        for choice in itertools.product(*(opts for _, opts in per_type)):
            counts = {d: len(k) + n for (d, _), (k, n) in zip(per_type, choice)}
            if any(sum(counts[d] for d in members) not in interval for members, interval in rules):
                continue
            b = list(budget)
            for d, c in counts.items():
                b[d] -= c
            items = []
            for (d, _), (kept, n) in zip(per_type, choice):
                items += [("old", d, k) for k in kept]
                if n:
                    items.append(("new", d, n))
            yield from self._expand(items, 0, tuple(b), prev, ())

    def _expand(self, items, idx, budget, prev, acc):
        if idx == len(items):
            yield acc, budget
            return
        kind, d, arg = items[idx]
        if kind == "old":
            for kids, b in self._node(d, arg, prev, budget):
                yield from self._expand(items, idx + 1, b, prev, acc + (_Plan(d, arg, kids),))
        else:
            yield from self._fresh_run(items, idx, d, arg, budget, prev, acc, None)

    def _fresh_run(self, items, idx, d, n, budget, prev, acc, min_key):
        # siblings of one type are generated in non-decreasing shape order
        if n == 0:
            yield from self._expand(items, idx + 1, budget, prev, acc)
            return
        for kids, b in self._node(d, None, None, budget):
            plan = _Plan(d, None, kids)
            key = _plan_key(plan)
            if min_key is not None and key < min_key:
                continue
            yield from self._fresh_run(items, idx, d, n - 1, b, prev, acc + (plan,), key)

    # materialization ------------------------------------------------------------------

    def _materialize(self, root_kids, counters: Dict[int, int]) -> Dict[Inst, Inst]:
        counters = dict(counters)
        parent: Dict[Inst, Inst] = {}

        def walk(plan: _Plan, p: Inst):
            if plan.old is not None:
                me = plan.old
            else:
                me = Inst(plan.clafer, counters.get(plan.clafer, 0))
                counters[plan.clafer] = me.num + 1
            parent[me] = p
            for k in plan.children:
                walk(k, me)

        for k in root_kids:
            walk(k, SING_INST)
        return parent

    def relinks(self, parent: Mapping[Inst, Inst]) -> Tuple[Snapshot, ...]:
        """Every valid link assignment over a fixed instance tree."""
        key = frozenset(parent.items())
        memo = self._link_memo.get(key)
        if memo is not None:
            return memo
        cm = self.cm
        base = Snapshot(parent)
        sources = []
        for i in sorted(base.parent):
            ref = reference_of(cm, i.clafer)
            if ref is not None:
                sources.append((i, ref[0] == "SET", sorted(base.of_type(cm, ref[1]))))
        out = []

        def assign(idx, links):
            if idx == len(sources):
                out.append(Snapshot(parent, links))
                return
            i, is_set, targets = sources[idx]
            used = {links[j] for j in links
                    if is_set and j.clafer == i.clafer and parent[j] == parent[i]}
            for t in targets:
                if t in used:
                    continue
                links[i] = t
                assign(idx + 1, links)
                del links[i]

        assign(0, {})
        memo = tuple(out)
        self._link_memo[key] = memo
        return memo

    def successors(self, prev: Optional[Snapshot], counters: Dict[int, int]) -> Iterator[Snapshot]:
        """Snapshots that may follow ``prev`` (any valid first snapshot if None)."""
        old = SING_INST if prev is not None else None
        for kids, _ in self._node(SING, old, prev, self.budget0):
            parent = self._materialize(kids, counters)
            yield from self.relinks(parent)


# -- canonical forms ----------------------------------------------------------------


def _order_map(instances) -> Dict[Inst, Inst]:
    by: Dict[int, List[Inst]] = {}
    for i in sorted(instances):
        by.setdefault(i.clafer, []).append(i)
    return {i: Inst(c, n) for c, lst in by.items() for n, i in enumerate(lst)}


def rename_snapshot(s: Snapshot, m: Mapping[Inst, Inst]) -> Snapshot:
    g = lambda i: m.get(i, i)
    return Snapshot({g(i): g(p) for i, p in s.parent.items()}, {g(i): g(t) for i, t in s.links.items()})


def _snapshot_items(s: Snapshot, m) -> tuple:
    g = lambda i: m.get(i, i)
    return (tuple(sorted((g(i), g(p)) for i, p in s.parent.items())),
            tuple(sorted((g(i), g(t)) for i, t in s.links.items())))


def canonical_key(s: Snapshot, cap: int = 40320) -> tuple:
    """Isomorphism-invariant key: minimum over per-clafer id permutations."""
    groups = [tuple(g) for g in s.by_clafer.values() if len(g) > 1 and g[0] != SING_INST]
    base = _order_map(s.parent)
    total = 1
    for g in groups:
        for k in range(2, len(g) + 1):
            total *= k
    if not groups or total > cap:
        return _snapshot_items(s, base)
    best = None
    for perms in itertools.product(*(itertools.permutations(range(len(g))) for g in groups)):
        m = dict(base)
        for g, perm in zip(groups, perms):
            for i, j in zip(g, perm):
                m[i] = Inst(i.clafer, j)
        key = _snapshot_items(s, m)
        if best is None or key < best:
            best = key
    return best


def canonical_snapshot(s: Snapshot) -> Snapshot:
    parent, links = canonical_key(s)
    return Snapshot(dict(parent), dict(links))


# -- progression ----------------------------------------------------------------------


class RTrue:
    __slots__ = ()

    def __repr__(self):
        return "RTrue"


class RFalse:
    __slots__ = ()

    def __repr__(self):
        return "RFalse"


# residuals are plain tuples so hashing stays cheap; the tag keeps the
# conjunction and disjunction of the same items apart


class RAnd(NamedTuple):
    items: frozenset
    tag: str = "and"


class ROr(NamedTuple):
    items: frozenset
    tag: str = "or"


class Pend(NamedTuple):
    """``formula`` must hold (``pos``) or fail at the next position to consume."""

    formula: object
    env: tuple
    pos: bool


TRUE_R, FALSE_R = RTrue(), RFalse()


def r_and(*rs):
    items = set()
    for r in rs:
        if isinstance(r, RFalse):
            return FALSE_R
        if isinstance(r, RTrue):
            continue
        if isinstance(r, RAnd):
            items |= r.items
        else:
            items.add(r)
    if not items:
        return TRUE_R
    if len(items) == 1:
        return next(iter(items))
    return RAnd(frozenset(items))


def r_or(*rs):
    items = set()
    for r in rs:
        if isinstance(r, RTrue):
            return TRUE_R
        if isinstance(r, RFalse):
            continue
        if isinstance(r, ROr):
            items |= r.items
        else:
            items.add(r)
    if not items:
        return FALSE_R
    if len(items) == 1:
        return next(iter(items))
    return ROr(frozenset(items))


class Progressor:
    def __init__(self, cm: CoreModel):
        self.cm = cm
        self.memo: Dict[tuple, object] = {}
        self.res_memo: Dict[tuple, object] = {}

    def prog(self, f, env: Env, s: Snapshot, pos: bool):
        key = (f, env, s, pos)
        r = self.memo.get(key)
        if r is None:
            r = self._prog(f, env, s, pos)
            self.memo[key] = r
        return r

    def _atom(self, value: bool, pos: bool):
        return TRUE_R if value == pos else FALSE_R

    def _prog(self, f, env, s, pos):
        cm, P = self.cm, self.prog
        if isinstance(f, fm.TrueC):
            return self._atom(True, pos)
        if isinstance(f, fm.In):
            return self._atom(eval_expr(cm, s, env, f.left) <= eval_expr(cm, s, env, f.right), pos)
        if isinstance(f, fm.Count):
            n = len(eval_expr(cm, s, env, f.arg) & s.instances)
            return self._atom({"some": n >= 1, "no": n == 0, "one": n == 1, "lone": n <= 1}[f.quant], pos)
        if isinstance(f, fm.Not):
            return P(f.arg, env, s, not pos)
        if isinstance(f, fm.Binary):
            a, b = f.left, f.right
            if f.op == fm.AND:
                return (r_and if pos else r_or)(P(a, env, s, pos), P(b, env, s, pos))
            if f.op == fm.OR:
                return (r_or if pos else r_and)(P(a, env, s, pos), P(b, env, s, pos))
            if f.op == fm.IMPLIES:
                return (r_or if pos else r_and)(P(a, env, s, not pos), P(b, env, s, pos))
            # <=>
            same = r_or(r_and(P(a, env, s, True), P(b, env, s, True)),
                        r_and(P(a, env, s, False), P(b, env, s, False)))
            diff = r_or(r_and(P(a, env, s, True), P(b, env, s, False)),
                        r_and(P(a, env, s, False), P(b, env, s, True)))
            return same if pos else diff
        if isinstance(f, fm.Next):
            return Pend(f.arg, env, pos)
        if isinstance(f, fm.Until):
            if pos:
                return r_or(P(f.right, env, s, True), r_and(P(f.left, env, s, True), Pend(f, env, True)))
            return r_and(P(f.right, env, s, False), r_or(P(f.left, env, s, False), Pend(f, env, False)))
        if isinstance(f, fm.Let):
            return P(f.body, bind(env, f.var, eval_expr(cm, s, env, f.value)), s, pos)
        if isinstance(f, (fm.All, fm.QuantBody)):
            dom = sorted(eval_expr(cm, s, env, f.domain))
            bodies = [(lambda p, e=bind(env, f.var, frozenset({i})): P(f.body, e, s, p)) for i in dom]
            quant = "all" if isinstance(f, fm.All) else f.quant
            return self._quant(quant, bodies, pos)
        raise TypeError(f"not a core formula: {type(f).__name__}")

    def _quant(self, quant, bodies, pos):
        if quant == "some":
            quant, pos = "no", not pos
        if quant == "all":
            return r_and(*(b(True) for b in bodies)) if pos else r_or(*(b(False) for b in bodies))
        if quant == "no":
            return r_and(*(b(False) for b in bodies)) if pos else r_or(*(b(True) for b in bodies))
        pairs = list(itertools.combinations(range(len(bodies)), 2))
        two = r_or(*(r_and(bodies[i](True), bodies[j](True)) for i, j in pairs))
        at_most_one = r_and(*(r_or(bodies[i](False), bodies[j](False)) for i, j in pairs))
        if quant == "lone":
            return at_most_one if pos else two
        # one
        some = r_or(*(b(True) for b in bodies))
        return r_and(some, at_most_one) if pos else r_or(r_and(*(b(False) for b in bodies)), two)

    def step(self, r, s: Snapshot):
        """Residual obligations after consuming snapshot ``s``."""
        if isinstance(r, (RTrue, RFalse)):
            return r
        key = (r, s)
        out = self.res_memo.get(key)
        if out is None:
            if isinstance(r, Pend):
                out = self.prog(r.formula, r.env, s, r.pos)
            elif isinstance(r, RAnd):
                out = TRUE_R
                for x in sorted(r.items, key=hash):
                    out = r_and(out, self.step(x, s))
                    if out is FALSE_R or isinstance(out, RFalse):
                        break
            else:
                out = FALSE_R
                for x in sorted(r.items, key=hash):
                    out = r_or(out, self.step(x, s))
                    if isinstance(out, RTrue):
                        break
            self.res_memo[key] = out
        return out


def eval_residual(r, ev: Evaluator) -> bool:
    if isinstance(r, RTrue):
        return True
    if isinstance(r, RFalse):
        return False
    if isinstance(r, RAnd):
        return all(eval_residual(x, ev) for x in r.items)
    if isinstance(r, ROr):
        return any(eval_residual(x, ev) for x in r.items)
    return ev.vector(r.formula, r.env)[0] == r.pos


def residual_instances(r, out=None) -> set:
    out = set() if out is None else out
    if isinstance(r, (RAnd, ROr)):
        for x in r.items:
            residual_instances(x, out)
    elif isinstance(r, Pend):
        for _, v in r.env:
            out |= v
    return out


def rename_residual(r, m: Mapping[Inst, Inst]):
    if isinstance(r, RAnd):
        return RAnd(frozenset(rename_residual(x, m) for x in r.items))
    if isinstance(r, ROr):
        return ROr(frozenset(rename_residual(x, m) for x in r.items))
    if isinstance(r, Pend):
        env = tuple((k, frozenset(m.get(i, i) for i in v)) for k, v in r.env)
        return Pend(r.formula, env, r.pos)
    return r


# -- search ---------------------------------------------------------------------------


def _is_pure(f) -> bool:
    return not any(isinstance(n, (fm.Next, fm.Until)) for n in fm.walk(f))


def _strip(f):
    """A temporal-free formula implied at the current position by ``f``."""
    if _is_pure(f):
        return f
    g = fm.as_globally(f)
    if g is not None:
        return _strip(g)
    if isinstance(f, fm.All):
        body = _strip(f.body)
        return None if body is None else fm.All(f.var, f.domain, body)
    if isinstance(f, fm.Let):
        body = _strip(f.body)
        return None if body is None else fm.Let(f.var, f.value, body)
    if isinstance(f, fm.Binary) and f.op == fm.AND:
        parts = [x for x in (_strip(f.left), _strip(f.right)) if x is not None]
        return fm.conj(*parts) if parts else None
    if isinstance(f, fm.Binary) and f.op == fm.IMPLIES and _is_pure(f.left):
        right = _strip(f.right)
        return None if right is None else fm.Binary(fm.IMPLIES, f.left, right)
    return None


def invariants(formulas: Sequence) -> List:
    """State formulas every snapshot of a satisfying trace must meet."""
    out = []
    for f in formulas:
        g = fm.as_globally(f)
        inv = _strip(g) if g is not None else None
        if inv is not None and not isinstance(inv, fm.TrueC):
            out.append(inv)
    return out


def _stable_domain(d) -> bool:
    return isinstance(d, fm.Join) and isinstance(d.left, (fm.This, fm.Var)) and isinstance(d.right, fm.Name)


def _flat_body(v: str, body):
    inner = fm.as_globally(body)
    if inner is None:
        return body
    if isinstance(inner, fm.All) and _stable_domain(inner.domain) and inner.domain.left == fm.Var(v):
        return fm.All(inner.var, inner.domain, _flat_body(inner.var, inner.body))
    if isinstance(inner, fm.Binary) and inner.op == fm.IMPLIES and inner.left == fm.some(fm.Var(v)):
        return inner
    return body


def flatten_lifted(f):
    """Drop the inner ``G`` of ``G(all v : x.C | G θ)`` where θ is void once v dies.

    Parents never change and instances never come back, so v stays in
    ``x.C`` for as long as it lives and the inner ``G`` adds nothing.
    Residuals then carry one atom per constraint instead of one per
    instance and nesting level.
    """
    g = fm.as_globally(f)
    if g is not None and isinstance(g, fm.All) and _stable_domain(g.domain) \
            and isinstance(g.domain.left, fm.This):
        return fm.G(fm.All(g.var, g.domain, _flat_body(g.var, g.body)))
    return f


class _Possibility:
    """Over-approximates whether a pending obligation can still be met.

    A pending atom is declared impossible only when no snapshot reachable
    at all, under any re-mapping of its bound instances onto live or dead
    instances of the same clafer, can make it come true. Bound instances
    keep their clafer for life, so every real continuation is among the
    re-mappings tried.
    """

    CAP = 256

    def __init__(self, cm: CoreModel, snaps: Sequence[Snapshot]):
        self.cm = cm
        self.snaps = list(snaps)
        self.evs = {u: Evaluator(cm, LassoTrace((u,), 0)) for u in self.snaps}
        self.memo: Dict[tuple, bool] = {}

    def _domain_type(self, d) -> Optional[int]:
        if isinstance(d, fm.Name):
            return d.clafer
        if isinstance(d, fm.Join) and isinstance(d.right, fm.Name):
            return d.right.clafer
        return None

    def impossible(self, f, pos: bool, env: tuple) -> bool:
        key = (f, pos, env)
        v = self.memo.get(key)
        if v is None:
            v = self._impossible(f, pos, env)
            self.memo[key] = v
        return v

    def _impossible(self, f, pos, env) -> bool:
        I = self.impossible
        if _is_pure(f):
            return not self._possible_now(f, pos, env)
        if isinstance(f, fm.Not):
            return I(f.arg, not pos, env)
        if isinstance(f, fm.Next):
            return I(f.arg, pos, env)
        if isinstance(f, fm.Until):
            # a U b needs b eventually; its negation may hold by a failing forever
            return I(f.right, True, env) if pos else False
        if isinstance(f, fm.Binary):
            a, b = f.left, f.right
            if f.op == fm.AND:
                return (I(a, True, env) or I(b, True, env)) if pos else (I(a, False, env) and I(b, False, env))
            if f.op == fm.OR:
                return (I(a, True, env) and I(b, True, env)) if pos else (I(a, False, env) or I(b, False, env))
            if f.op == fm.IMPLIES:
                return (I(a, False, env) and I(b, True, env)) if pos else (I(a, True, env) or I(b, False, env))
            return False
        witness = (isinstance(f, fm.All) and not pos) or (
            isinstance(f, fm.QuantBody) and (f.quant, pos) in
            {("some", True), ("one", True), ("lone", False), ("no", False)})
        if witness:
            c = self._domain_type(f.domain)
            if c is None:
                return False
            # a single witness suffices; it is some instance of the domain type
            wild = ("*", c, len(env))
            return I(f.body, pos if isinstance(f, fm.QuantBody) else False,
                     env + ((f.var, frozenset({wild})),))
        return False

    def _options(self, x, u: Snapshot, n: int) -> List[Inst]:
        if x == SING_INST:
            return [SING_INST]
        ghost = Inst(x[1] if isinstance(x[0], str) else x.clafer, -10 ** 6 - n)
        if isinstance(x[0], str):
            allowed = self.cm.instantiators[x[1]]
        else:
            allowed = (x.clafer,)
        return [i for c in allowed for i in u.by_clafer.get(c, ())] + [ghost]

    def _possible_now(self, f, pos, env) -> bool:
        elems = sorted({x for _, v in env for x in v}, key=repr)
        for u in self.snaps:
            options = [self._options(x, u, n) for n, x in enumerate(elems)]
            total = 1
            for o in options:
                total *= len(o)
            if total > self.CAP:
                return True
            for pick in itertools.product(*options):
                m = dict(zip(elems, pick))
                e = tuple((k, frozenset(m[x] for x in v)) for k, v in env)
                if self.evs[u].vector(f, e)[0] == pos:
                    return True
        return False

    def viable(self, r) -> bool:
        if isinstance(r, RFalse):
            return False
        if isinstance(r, RTrue):
            return True
        if isinstance(r, RAnd):
            return all(self.viable(x) for x in r.items)
        if isinstance(r, ROr):
            return any(self.viable(x) for x in r.items)
        return not self.impossible(r.formula, r.pos, r.env)


@dataclass(eq=False)
class _State:
    """A search node in its own canonical id frame.

    Live instances are numbered from 0 per clafer; instances only the
    residual still mentions get negative numbers. ``raw`` is the snapshot
    as produced in the predecessor's frame and ``fwd`` renames it into
    this one.
    """
    snap: Optional[Snapshot]
    res: object
    prev: Optional["_State"] = None
    raw: Optional[Snapshot] = None
    fwd: Optional[Dict[Inst, Inst]] = None


def _canon(raw: Snapshot, res) -> Tuple[Dict[Inst, Inst], Snapshot, object]:
    m = _order_map(raw.parent)
    dead: Dict[int, int] = {}
    for i in sorted(residual_instances(res) - set(m) - {SING_INST}):
        dead[i.clafer] = dead.get(i.clafer, 0) + 1
        m[i] = Inst(i.clafer, -dead[i.clafer])
    return m, rename_snapshot(raw, m), rename_residual(res, m)


class TraceSearch:
    def __init__(self, cm: CoreModel, scope: Scope, formulas: Sequence):
        self.cm = cm
        self.scope = scope
        self.structures = Structures(cm, scope)
        self.prog = Progressor(cm)
        formulas = [flatten_lifted(f) for f in formulas]
        self.invariants = invariants(formulas)
        init = r_and(*(Pend(f, EMPTY_ENV, True) for f in formulas))
        self.layers: List[List[_State]] = [[_State(None, init)]]
        self._succ: Dict[Optional[Snapshot], List[Snapshot]] = {}
        self._ok: Dict[Snapshot, bool] = {}
        self._variants: Dict[Snapshot, List[Snapshot]] = {}
        self._closed: Dict[tuple, Optional[Tuple[Snapshot, ...]]] = {}
        self._evals: Dict[Tuple[Snapshot, ...], Evaluator] = {}
        self._possibility: Optional[_Possibility] = None
        self._reach_done = False

    REACH_CAP = 5000

    def _reachable(self) -> Optional[List[Snapshot]]:
        """Every canonical snapshot any trace can visit, or None if too many."""
        seen = {}
        todo: List[Optional[Snapshot]] = [None]
        while todo:
            cur = todo.pop()
            for raw in self.successors(cur):
                u = rename_snapshot(raw, _order_map(raw.parent))
                if u not in seen:
                    seen[u] = None
                    if len(seen) > self.REACH_CAP:
                        return None
                    todo.append(u)
        return list(seen)

    def viable(self, r) -> bool:
        if isinstance(r, RFalse):
            return False
        if not self._reach_done:
            self._reach_done = True
            snaps = self._reachable()
            if snaps is not None:
                self._possibility = _Possibility(self.cm, snaps)
        return self._possibility is None or self._possibility.viable(r)

    def ok(self, s: Snapshot) -> bool:
        if not self.invariants:
            return True
        v = self._ok.get(s)
        if v is None:
            # invariants are closed formulas, so renaming does not change them
            c = rename_snapshot(s, _order_map(s.parent))
            v = self._ok.get(c)
            if v is None:
                ev = Evaluator(self.cm, LassoTrace((c,), 0))
                v = all(ev.vector(f)[0] for f in self.invariants)
                self._ok[c] = v
            self._ok[s] = v
        return v

    def successors(self, snap: Optional[Snapshot]) -> List[Snapshot]:
        out = self._succ.get(snap)
        if out is None:
            counts: Dict[int, int] = {}
            for i in (snap.parent if snap is not None else ()):
                counts[i.clafer] = counts.get(i.clafer, 0) + 1
            out = [s for s in self.structures.successors(snap, counts) if self.ok(s)]
            self._succ[snap] = out
        return out

    def variants(self, u: Snapshot) -> List[Snapshot]:
        out = self._variants.get(u)
        if out is None:
            out = [v for v in self.structures.relinks(u.parent) if self.ok(v)]
            self._variants[u] = out
        return out

    def layer(self, j: int) -> List[_State]:
        while len(self.layers) <= j:
            seen = set()
            nxt: List[_State] = []
            for st in self.layers[-1]:
                for raw in self.successors(st.snap):
                    r = self.prog.step(st.res, raw)
                    if not self.viable(r):
                        continue
                    fwd, snap, res = _canon(raw, r)
                    if (snap, res) in seen:
                        continue
                    seen.add((snap, res))
                    nxt.append(_State(snap, res, st, raw, fwd))
            self.layers.append(nxt)
        return self.layers[j]

    def _loops(self, u0: Snapshot, r, m: int) -> Iterator[Tuple[Snapshot, ...]]:
        variants = self.variants(u0)

        def grow(seq, r):
            if len(seq) == m:
                yield seq
                return
            for u in variants:
                r2 = self.prog.step(r, u)
                if self.viable(r2):
                    yield from grow(seq + (u,), r2)
        yield from grow((u0,), r)

    def find(self) -> Optional[LassoTrace]:
        K, fixed = self.scope.trace_len, self.scope.loop
        for k in range(1, K + 1):
            loops = range(k) if fixed is None else ([fixed] if fixed < k else [])
            for l in loops:
                for st in self.layer(l):
                    found = self._close(st, k - l)
                    if found is not None:
                        return _realize(st, found, l)
        return None

    def _close(self, st: _State, m: int) -> Optional[Tuple[Snapshot, ...]]:
        # the same frame-local state recurs across layers
        key = (st.snap, st.res, m)
        if key not in self._closed:
            self._closed[key] = self._close_uncached(st, m)
        return self._closed[key]

    def _close_uncached(self, st: _State, m: int) -> Optional[Tuple[Snapshot, ...]]:
        for u0 in self.successors(st.snap):
            r = self.prog.step(st.res, u0)
            if not self.viable(r):
                continue
            for seq in self._loops(u0, r, m):
                ev = self._evals.get(seq)
                if ev is None:
                    ev = self._evals[seq] = Evaluator(self.cm, LassoTrace(seq, 0))
                if eval_residual(st.res, ev):
                    return seq
        return None


def _realize(st: _State, cycle: Tuple[Snapshot, ...], loop: int) -> LassoTrace:
    """Translate a stem of frame-local states plus a cycle into real ids."""
    chain: List[_State] = []
    while st.prev is not None:
        chain.append(st)
        st = st.prev
    chain.reverse()
    counters: Dict[int, int] = {}
    to_real: Dict[Inst, Inst] = {}

    def real_map(raw: Snapshot) -> Dict[Inst, Inst]:
        out = {}
        for i in sorted(raw.parent):
            if i in to_real:
                out[i] = to_real[i]
            else:
                n = counters.get(i.clafer, 0)
                counters[i.clafer] = n + 1
                out[i] = Inst(i.clafer, n)
        return out

    snaps: List[Snapshot] = []
    for node in chain:
        m = real_map(node.raw)
        snaps.append(rename_snapshot(node.raw, m))
        to_real = {node.fwd[i]: m[i] for i in node.raw.parent}
    m = real_map(cycle[0])
    snaps += [rename_snapshot(u, m) for u in cycle]
    return LassoTrace(tuple(snaps), loop)


# -- entry points -----------------------------------------------------------------


def structural_snapshots(cm: CoreModel, scope: Scope) -> Iterator[Snapshot]:
    return Structures(cm, scope).successors(None, {})


def enumerate_instances(cm: CoreModel, scope: Scope = Scope(), limit: Optional[int] = None) -> List[Snapshot]:
    """Non-isomorphic snapshots satisfying every constraint as a one-state lasso."""
    out: List[Snapshot] = []
    seen = set()
    formulas = [c.body for c in cm.constraints]
    any_structure = False
    for s in structural_snapshots(cm, scope):
        any_structure = True
        ev = Evaluator(cm, LassoTrace((s,), 0))
        if not all(ev.vector(f)[0] for f in formulas):
            continue
        key = canonical_key(s)
        if key in seen:
            continue
        seen.add(key)
        out.append(s)
        if limit is not None and len(out) >= limit:
            break
    if not any_structure:
        log.warning("SCOPE-EXHAUSTED: mandatory multiplicities do not fit in the scope")
    return out


def find_trace(cm: CoreModel, scope: Scope = Scope(), goal=None) -> Optional[LassoTrace]:
    """Shortest lasso (then earliest loop) satisfying the model and ``goal``."""
    formulas = [c.body for c in cm.constraints] + ([goal] if goal is not None else [])
    return TraceSearch(cm, scope, formulas).find()


WITNESS, REFUTE = "witness", "refute"


@dataclass(frozen=True)
class Verdict:
    status: str  # PASS | FAIL | PASS-WITHIN-BOUND | FAIL-WITHIN-BOUND
    trace: Optional[LassoTrace] = None

    @property
    def passed(self) -> bool:
        return self.status.startswith("PASS")


def check_assertion(cm: CoreModel, a, mode: str = WITNESS, scope: Scope = Scope()) -> Verdict:
    if mode == WITNESS:
        t = find_trace(cm, scope, a)
        return Verdict("PASS", t) if t is not None else Verdict("FAIL-WITHIN-BOUND")
    if mode == REFUTE:
        t = find_trace(cm, scope, fm.Not(a))
        return Verdict("FAIL", t) if t is not None else Verdict("PASS-WITHIN-BOUND")
    raise ValueError(f"unknown mode {mode!r}")
