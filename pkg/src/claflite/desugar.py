"""Rewrite surface sugar into the core grammar and lift constraints to the top level."""
from __future__ import annotations

import dataclasses
from typing import Iterable, List, Optional, Set

from . import formula as fm
from .core import SING, Constraint, CoreModel
from .errors import DesugarError, NotSupported


def _map(f, rewrite):
    """Bottom-up rebuild of ``f`` with ``rewrite`` applied at every node."""
    changes = {}
    for fld in dataclasses.fields(f):
        v = getattr(f, fld.name)
        if isinstance(v, fm.EXPR_TYPES + fm.CORE_FORMULA_TYPES + fm.SURFACE_ONLY_TYPES):
            nv = _map(v, rewrite)
            if nv is not v:
                changes[fld.name] = nv
    node = dataclasses.replace(f, **changes) if changes else f
    return rewrite(node)


def _this_path(context: int, cid: int) -> fm.Expr:
    return fm.Name(cid) if context == SING else fm.Join(fm.This(), fm.Name(cid))


# -- transitions --------------------------------------------------------------------


def desugar_transitions(f: fm.Formula, top_level: bool = False) -> fm.Formula:
    def rewrite(n):
        if not isinstance(n, fm.Arrow):
            return n
        pre = n.left if n.guard is None else fm.Binary(fm.AND, n.left, n.guard)
        if not n.multi:
            return fm.Binary(fm.IMPLIES, pre, fm.Next(n.right))
        if top_level:
            raise DesugarError("'-->>' needs a clafer context for 'this'")
        stay = fm.Binary(fm.AND, fm.Bare(fm.This()), n.left)
        return fm.Binary(fm.IMPLIES, pre, fm.Until(stay, n.right))
    return _map(f, rewrite)


# -- property patterns ----------------------------------------------------------------


def desugar_patterns(f: fm.Formula) -> fm.Formula:
    def rewrite(n):
        if isinstance(n, fm.Temporal):
            if n.op == "always":
                return fm.G(n.arg)
            if n.op == "never":
                return fm.G(fm.Not(n.arg))
            if n.op == "sometime":
                return fm.F(n.arg)
            return n
        if isinstance(n, fm.Pattern):
            q, r = n.start, n.end
            window = fm.conj(q, fm.Not(r), fm.F(r))
            return fm.G(fm.Binary(fm.IMPLIES, window, fm.Until(n.body, r)))
        return n
    return _map(f, rewrite)


# -- modifiers ------------------------------------------------------------------------


def _initially(phi: fm.Formula) -> fm.Formula:
    this = fm.Bare(fm.This())
    appears = fm.Binary(fm.AND, fm.Count("no", fm.This()), fm.Next(this))
    return fm.Binary(fm.IMPLIES, appears, fm.Next(phi))


def _finally(phi: fm.Formula) -> fm.Formula:
    leaves = fm.Binary(fm.AND, fm.Bare(fm.This()), fm.Next(fm.Count("no", fm.This())))
    return fm.Binary(fm.IMPLIES, leaves, phi)


def _temporal_modifiers(f: fm.Formula) -> fm.Formula:
    def rewrite(n):
        if isinstance(n, fm.Temporal) and n.op == "initially":
            return _initially(n.arg)
        if isinstance(n, fm.Temporal) and n.op == "finally":
            return _finally(n.arg)
        return n
    return _map(f, rewrite)


def _modify_constraint(c: Constraint) -> Constraint:
    body = c.body
    if isinstance(body, fm.Temporal) and body.op == "initially":
        if c.context == SING:
            return dataclasses.replace(c, body=_temporal_modifiers(body.arg), first_only=True)
        phi = _temporal_modifiers(body.arg)
        return dataclasses.replace(c, body=_initially(phi), initially=phi)
    return dataclasses.replace(c, body=_temporal_modifiers(body))


def desugar_modifiers(cm: CoreModel) -> CoreModel:
    """Expand initially/finally, the initial and final modifiers, and initializers."""
    extra: List[Constraint] = []
    for c in cm.clafers[1:]:
        if c.is_abstract or c.parent is None:
            continue
        here = _this_path(c.parent, c.id)
        if c.is_initial:
            extra.append(Constraint(c.parent, fm.Temporal("initially", fm.Bare(here)), line=c.line))
        if c.is_final:
            # while the parent persists its set of c-children stays the same
            s = "s"
            frame = fm.Binary(fm.IMPLIES, fm.Bare(fm.This()), fm.Eq(here, fm.Var(s)))
            extra.append(Constraint(c.parent, fm.Let(s, here, fm.Next(frame)), line=c.line))
    for c in cm.clafers[1:]:
        if c.initializer is None:
            continue
        kind, expr = c.initializer
        if kind != "CONSTANT":
            raise NotSupported(f"default initializer ':=' on {cm.path(c.id)}", c.line, 1)
        extra.append(Constraint(c.id, fm.Eq(fm.Dref(fm.This()), expr), line=c.line))
    return dataclasses.replace(
        cm,
        constraints=tuple(_modify_constraint(c) for c in cm.constraints + tuple(extra)),
        assertions=tuple(_modify_constraint(c) for c in cm.assertions),
    )


# -- normalization --------------------------------------------------------------------


def normalize(f: fm.Formula) -> fm.Formula:
    def rewrite(n):
        if isinstance(n, fm.Bare):
            return fm.Count("some", n.arg)
        if isinstance(n, fm.Eq):
            return fm.Binary(fm.AND, fm.In(n.left, n.right), fm.In(n.right, n.left))
        return n
    return _map(f, rewrite)


# -- lifting --------------------------------------------------------------------------


def _fresh(base: str, taken: Set[str]) -> str:
    name, i = base, 1
    while name in taken:
        name = f"{base}{i}"
        i += 1
    taken.add(name)
    return name


def _context_chain(cm: CoreModel, context: int) -> List[int]:
    return list(reversed([context] + cm.ancestors(context)))[1:]  # drops Sing


def _var_for(cm: CoreModel, cid: int, taken: Set[str]) -> str:
    name = cm[cid].name
    return _fresh(name[0].lower() if name[0].isalpha() else "v", taken)


def _lift_full(cm: CoreModel, c: Constraint) -> fm.Formula:
    if c.context == SING:
        # assertions are read from the initial state, like scenarios
        return c.body if c.first_only or c.is_assert else fm.G(c.body)
    chain = _context_chain(cm, c.context)
    taken = fm.bound_names(c.body) | (fm.bound_names(c.initially) if c.initially else set())
    if c.initially is not None:
        return _lift_initially(cm, chain, c.initially, taken)
    names = [_var_for(cm, cid, taken) for cid in chain]
    inner = fm.Binary(fm.IMPLIES, fm.some(fm.Var(names[-1])), fm.replace_this(c.body, fm.Var(names[-1])))
    for i in range(len(chain) - 1, -1, -1):
        source = fm.This() if i == 0 else fm.Var(names[i - 1])
        inner = fm.G(fm.All(names[i], fm.Join(source, fm.Name(chain[i])), inner))
    return inner


def _lift_initially(cm: CoreModel, chain: List[int], phi: fm.Formula, taken: Set[str]) -> fm.Formula:
    # φ holds for instances present at the start and for each later
    # newcomer in the first snapshot where it exists
    path: fm.Expr = fm.This()
    for cid in chain:
        path = fm.Join(path, fm.Name(cid))
    v = _var_for(cm, chain[-1], taken)
    old = _fresh("old", taken)
    body = fm.replace_this(phi, fm.Var(v))
    now = fm.All(v, path, body)
    fresh = fm.All(v, path, fm.Binary(fm.OR, fm.In(fm.Var(v), fm.Var(old)), body))
    return fm.Binary(fm.AND, now, fm.G(fm.Let(old, path, fm.Next(fresh))))


def _lift_steps(cm: CoreModel, c: Constraint, levels: int) -> Constraint:
    if levels == 0:
        return c
    body, context = c.body, c.context
    taken = fm.bound_names(body)
    for _ in range(levels):
        if context == SING:
            break
        v = _var_for(cm, context, taken)
        body = fm.G(fm.All(v, fm.Join(fm.This(), fm.Name(context)), fm.replace_this(body, fm.Var(v))))
        context = cm[context].parent
    return dataclasses.replace(c, body=body, context=context, initially=None)


def lift_constraints(cm: CoreModel, levels: Optional[int] = None) -> CoreModel:
    """Move every constraint to the top level.

    With ``levels=None`` constraints are fully lifted and top-level ones gain
    a leading ``G``. A number applies the one-level rule that many times and
    keeps the remaining context; that form is for display only.
    """
    def lift(c: Constraint) -> Constraint:
        if levels is not None:
            return _lift_steps(cm, c, levels)
        return Constraint(SING, _lift_full(cm, c), c.is_assert, c.line)
    return dataclasses.replace(
        cm,
        constraints=tuple(lift(c) for c in cm.constraints),
        assertions=tuple(lift(c) for c in cm.assertions),
    )


# -- pipeline -------------------------------------------------------------------------


def _surface_passes(c: Constraint) -> Constraint:
    body = desugar_transitions(c.body, top_level=c.context == SING)
    return dataclasses.replace(c, body=desugar_patterns(body))


def _normalize_constraint(c: Constraint) -> Constraint:
    return dataclasses.replace(
        c, body=normalize(c.body),
        initially=normalize(c.initially) if c.initially is not None else None,
    )


def desugar_model(cm: CoreModel, lift_levels: Optional[int] = None) -> CoreModel:
    if cm.desugared:
        return cm
    cm = dataclasses.replace(
        cm,
        constraints=tuple(_surface_passes(c) for c in cm.constraints),
        assertions=tuple(_surface_passes(c) for c in cm.assertions),
    )
    cm = desugar_modifiers(cm)
    # the generated constraints may contain sugar of their own
    cm = dataclasses.replace(
        cm,
        constraints=tuple(_normalize_constraint(_surface_passes(c)) for c in cm.constraints),
        assertions=tuple(_normalize_constraint(c) for c in cm.assertions),
    )
    cm = lift_constraints(cm, lift_levels)
    if lift_levels is None:
        for c in cm.constraints + cm.assertions:
            assert_core(c.body)
    return dataclasses.replace(cm, desugared=True)


def desugar_goal(cm: CoreModel, f: fm.Formula) -> fm.Formula:
    """Desugar a formula written in the top-level context; no default ``G``."""
    c = desugar_modifiers(dataclasses.replace(
        cm, clafers=(), constraints=(_surface_passes(Constraint(SING, f)),), assertions=()))
    body = normalize(c.constraints[0].body)
    assert_core(body)
    return body


def assert_core(f) -> None:
    """Fail if ``f`` contains anything outside the core grammar."""
    for n in fm.walk(f):
        if isinstance(n, fm.SURFACE_ONLY_TYPES) or not isinstance(n, fm.EXPR_TYPES + fm.CORE_FORMULA_TYPES):
            raise DesugarError(f"non-core node left after desugaring: {type(n).__name__}")
