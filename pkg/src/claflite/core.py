"""The elaborated model: a clafer table rooted at ``Sing`` plus resolved constraints."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, List, Optional, Tuple

from . import formula as fm
from . import source as S
from .errors import AmbiguousName, DuplicateName, TypeMismatch, UnresolvedName

SING = 0
ROOT = 1  # the designated super type ``clafer``


@dataclass(frozen=True)
class Clafer:
    id: int
    name: str
    parent: Optional[int]
    super: Optional[int] = None
    is_abstract: bool = False
    is_final: bool = False
    is_initial: bool = False
    ref: Optional[Tuple[str, int]] = None  # (SET|BAG, target id)
    cmult: S.Interval = S.ONE
    gcard: S.Interval = S.ANY
    initializer: Optional[Tuple[str, fm.Expr]] = None
    line: int = 0


@dataclass(frozen=True)
class Constraint:
    context: int
    body: fm.Formula
    is_assert: bool = False
    line: int = 0
    # a top-level `initially φ` is checked at the first position only
    first_only: bool = False
    # φ of a nested `initially φ`; lifting needs it unrewritten
    initially: Optional[fm.Formula] = None


@dataclass(frozen=True)
class CoreModel:
    clafers: Tuple[Clafer, ...]
    constraints: Tuple[Constraint, ...] = ()
    assertions: Tuple[Constraint, ...] = ()
    # set once sugar is expanded and constraints lifted; modifiers must not fire twice
    desugared: bool = False

    def __getitem__(self, cid: int) -> Clafer:
        return self.clafers[cid]

    @cached_property
    def children(self) -> Dict[int, Tuple[int, ...]]:
        out: Dict[int, List[int]] = {c.id: [] for c in self.clafers}
        for c in self.clafers:
            if c.parent is not None:
                out[c.parent].append(c.id)
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def _closures(self) -> Dict[int, FrozenSet[int]]:
        return {c.id: _closure(self, c.id) for c in self.clafers}

    def super_closure(self, cid: int) -> FrozenSet[int]:
        return self._closures[cid]

    def effective_children(self, cid: int) -> Tuple[int, ...]:
        """Own children followed by those inherited through the super chain."""
        seen: List[int] = []
        for s in _super_chain(self, cid):
            for ch in self.children[s]:
                if ch not in seen:
                    seen.append(ch)
        return tuple(seen)

    def ref_targets(self, cid: int) -> Tuple[Tuple[str, int], ...]:
        return tuple(self[s].ref for s in _super_chain(self, cid) if self[s].ref is not None)

    def ancestors(self, cid: int) -> List[int]:
        out = []
        p = self[cid].parent
        while p is not None:
            out.append(p)
            p = self[p].parent
        return out

    def path(self, cid: int) -> str:
        if cid == SING:
            return "Sing"
        parts = [self[cid].name]
        for a in self.ancestors(cid):
            if a != SING:
                parts.append(self[a].name)
        return ".".join(reversed(parts))

    @cached_property
    def instantiators(self) -> Dict[int, FrozenSet[int]]:
        """Concrete clafers whose instances are also instances of each clafer."""
        out: Dict[int, set] = {c.id: set() for c in self.clafers}
        for d in self.clafers:
            if not d.is_abstract:
                for s in self.super_closure(d.id):
                    out[s].add(d.id)
        return {k: frozenset(v) for k, v in out.items()}

    @cached_property
    def concrete(self) -> Tuple[int, ...]:
        return tuple(c.id for c in self.clafers if not c.is_abstract and c.id != SING)

    @cached_property
    def display_names(self) -> Dict[int, str]:
        counts: Dict[str, int] = {}
        for c in self.clafers:
            counts[c.name] = counts.get(c.name, 0) + 1
        return {c.id: (c.name if counts[c.name] == 1 else self.path(c.id)) for c in self.clafers}

    def by_path(self, path: str) -> int:
        for c in self.clafers:
            if self.path(c.id) == path:
                return c.id
        matches = [c.id for c in self.clafers if c.name == path]
        if len(matches) == 1:
            return matches[0]
        raise KeyError(path)


def _super_chain(cm: CoreModel, cid: int) -> List[int]:
    out = []
    c: Optional[int] = cid
    while c is not None and c not in out:
        out.append(c)
        c = cm[c].super
    return out


def _closure(cm: CoreModel, cid: int) -> FrozenSet[int]:
    return frozenset(_super_chain(cm, cid))


def super_closure(cm: CoreModel, cid: int) -> FrozenSet[int]:
    """Reflexive-transitive set of generalizers of ``cid``."""
    return cm.super_closure(cid)


# -- elaboration ------------------------------------------------------------------


class _Elaborator:
    def __init__(self, model: S.SourceModel):
        self.model = model
        self.rows: List[dict] = []
        self.decl_of: Dict[int, S.ClaferDecl] = {}
        self.cm: Optional[CoreModel] = None

    def run(self) -> CoreModel:
        self.rows.append(dict(id=SING, name="Sing", parent=None, cmult=S.ONE, gcard=S.ANY))
        self.rows.append(dict(id=ROOT, name=S.ROOT_TYPE, parent=SING, is_abstract=True,
                              cmult=S.ANY, gcard=S.ANY))
        self._number(self.model.decls, SING)
        self._check_siblings()
        skeleton = CoreModel(tuple(Clafer(**r) for r in self.rows))
        # supers and reference targets
        for cid, d in self.decl_of.items():
            row = self.rows[cid]
            scope = row["parent"]
            if d.super_name is not None:
                row["super"] = ROOT if d.super_name == S.ROOT_TYPE else \
                    self._resolve_type(skeleton, scope, d.super_name, d)
            if d.ref is not None:
                row["ref"] = (d.ref.kind, self._resolve_type(skeleton, scope, d.ref.target, d))
        typed = CoreModel(tuple(Clafer(**r) for r in self.rows))
        self._check_inherited_clashes(typed)
        for cid in self.decl_of:
            closure = typed.super_closure(cid)
            self.rows[cid]["is_final"] = any(typed[s].is_final for s in closure)
            self.rows[cid]["is_initial"] = any(typed[s].is_initial for s in closure)
        self.cm = CoreModel(tuple(Clafer(**r) for r in self.rows))
        constraints, assertions = [], []
        for cid, d in self.decl_of.items():
            if d.initializer is not None:
                expr = _Resolver(self.cm, cid).expr(d.initializer.expr)
                self.rows[cid]["initializer"] = (d.initializer.kind, expr)
            for c in d.constraints:
                (assertions if c.is_assert else constraints).append(self._constraint(cid, c))
        for c in self.model.constraints:
            (assertions if c.is_assert else constraints).append(self._constraint(SING, c))
        return CoreModel(tuple(Clafer(**r) for r in self.rows), tuple(constraints), tuple(assertions))

    def _number(self, decls, parent: int):
        for d in decls:
            if not isinstance(d.gcard, S.Interval) or not isinstance(d.cmult, S.Interval):
                raise TypeError("elaborate() expects a model with defaults applied")
            cid = len(self.rows)
            self.rows.append(dict(
                id=cid, name=d.name, parent=parent, is_abstract=d.is_abstract,
                is_final=d.is_final, is_initial=d.is_initial, cmult=d.cmult,
                gcard=d.gcard, line=d.line,
            ))
            self.decl_of[cid] = d
            self._number(d.children, cid)

    def _check_siblings(self):
        seen: Dict[Tuple[int, str], int] = {}
        for r in self.rows[2:]:
            key = (r["parent"], r["name"])
            if key in seen or (r["parent"] == SING and r["name"] == S.ROOT_TYPE):
                raise DuplicateName(f"duplicate sibling name {r['name']!r}", r.get("line"), 1)
            seen[key] = r["id"]

    def _check_inherited_clashes(self, cm: CoreModel):
        for c in cm.clafers:
            names: Dict[str, int] = {}
            for ch in cm.effective_children(c.id):
                nm = cm[ch].name
                if nm in names and names[nm] != ch:
                    raise DuplicateName(
                        f"{cm.path(c.id)} has own and inherited children both named {nm!r}",
                        cm[ch].line, 1)
                names[nm] = ch

    def _resolve_type(self, cm: CoreModel, scope: int, name: str, d: S.ClaferDecl) -> int:
        hits = resolve_name(cm, scope, name)
        if not hits:
            raise UnresolvedName(f"unknown clafer {name!r}", d.line, d.col)
        if len(hits) > 1:
            raise AmbiguousName(f"clafer name {name!r} is ambiguous", d.line, d.col)
        return hits[0][1]

    def _constraint(self, context: int, c: S.ConstraintDecl) -> Constraint:
        body = _Resolver(self.cm, context, c.line, c.col).formula(c.body)
        return Constraint(context, body, c.is_assert, c.line)


def resolve_name(cm: CoreModel, context: int, name: str) -> List[Tuple[int, int]]:
    """Candidates ``(levels_up, clafer)`` from the first tier that has any.

    Tiers: effective children of the context, then of each ancestor in turn,
    then any clafer in the model with that name. ``levels_up`` is -1 for the
    global tier.
    """
    chain = [context] + cm.ancestors(context)
    for up, c in enumerate(chain):
        hits = [(up, ch) for ch in cm.effective_children(c) if cm[ch].name == name]
        if hits:
            return hits
    return [(-1, c.id) for c in cm.clafers[1:] if c.name == name]


class _Resolver:
    def __init__(self, cm: CoreModel, context: int, line: int = 0, col: int = 0):
        self.cm = cm
        self.context = context
        self.line = line
        self.col = col
        self.scope: Dict[str, Optional[int]] = {}

    def _err(self, cls, msg, at=None):
        line = getattr(at, "line", 0) or self.line
        col = getattr(at, "col", 0) or self.col
        return cls(msg, line, col)

    # static typing used for resolution and implicit dereferencing
    def type_of(self, e) -> Optional[int]:
        cm = self.cm
        if isinstance(e, fm.Name):
            return e.clafer
        if isinstance(e, fm.This):
            return self.context
        if isinstance(e, fm.Var):
            return self.scope.get(e.name)
        if isinstance(e, fm.Join):
            return self.type_of(e.right)
        if isinstance(e, fm.Dref):
            t = self.type_of(e.arg)
            refs = cm.ref_targets(t) if t is not None else ()
            return refs[0][1] if refs else None
        if isinstance(e, fm.Parent):
            t = self.type_of(e.arg)
            return cm[t].parent if t is not None else None
        if isinstance(e, (fm.Union, fm.Diff, fm.Inter)):
            lt, rt = self.type_of(e.left), self.type_of(e.right)
            if isinstance(e, fm.Diff) or lt == rt:
                return lt
            return None
        return None

    def _ident(self, node: S.Ident):
        if node.name in self.scope:
            return fm.Var(node.name)
        hits = resolve_name(self.cm, self.context, node.name)
        if not hits:
            raise self._err(UnresolvedName, f"unknown name {node.name!r}", node)
        if len(hits) > 1:
            raise self._err(AmbiguousName, f"name {node.name!r} is ambiguous here", node)
        up, cid = hits[0]
        if up == -1 or self.cm[cid].parent == SING:
            return fm.Name(cid)
        base = fm.This()
        for _ in range(up):
            base = fm.Parent(base)
        return fm.Join(base, fm.Name(cid))

    def _member(self, left, node: S.Ident):
        cm = self.cm
        t = self.type_of(left)
        if t is None:
            hits = [c.id for c in cm.clafers[1:] if c.name == node.name]
            if len(hits) == 1:
                return fm.Join(left, fm.Name(hits[0]))
            raise self._err(UnresolvedName if not hits else AmbiguousName,
                            f"cannot resolve {node.name!r} after '.'", node)
        hits = [ch for ch in cm.effective_children(t) if cm[ch].name == node.name]
        if hits:
            return fm.Join(left, fm.Name(hits[0]))
        for _, target in cm.ref_targets(t):
            hits = [ch for ch in cm.effective_children(target) if cm[ch].name == node.name]
            if hits:
                return fm.Join(fm.Dref(left), fm.Name(hits[0]))
        raise self._err(UnresolvedName, f"{cm.path(t)} has no child {node.name!r}", node)

    def expr(self, src) -> fm.Expr:
        if isinstance(src, S.Ident):
            return self._ident(src)
        if isinstance(src, S.ThisRef):
            return fm.This()
        if isinstance(src, S.Join):
            left = self.expr(src.left)
            if isinstance(src.right, S.Ident):
                return self._member(left, src.right)
            return fm.Join(left, self.expr(src.right))
        if isinstance(src, S.ParentOf):
            return fm.Parent(self.expr(src.arg))
        if isinstance(src, S.DrefOf):
            return fm.Dref(self.expr(src.arg))
        if isinstance(src, S.SetOp):
            cls = {"++": fm.Union, "--": fm.Diff, "**": fm.Inter}[src.op]
            return cls(self.expr(src.left), self.expr(src.right))
        raise self._err(TypeMismatch, "expected a set expression, found a formula")

    def _compatible(self, a: Optional[int], b: Optional[int]) -> bool:
        if a is None or b is None:
            return True
        return a in self.cm.super_closure(b) or b in self.cm.super_closure(a)

    def _deref_for_compare(self, left, right):
        lt, rt = self.type_of(left), self.type_of(right)
        if not self._compatible(lt, rt):
            if lt is not None and self.cm.ref_targets(lt):
                left = fm.Dref(left)
                lt = self.type_of(left)
            if not self._compatible(lt, rt) and rt is not None and self.cm.ref_targets(rt):
                right = fm.Dref(right)
        return left, right

    def _bind(self, names, domain, build):
        saved = dict(self.scope)
        t = self.type_of(domain)
        for n in names:
            self.scope[n] = t
        try:
            return build()
        finally:
            self.scope = saved

    def formula(self, src) -> fm.Formula:
        if isinstance(src, S.BoolLit):
            return fm.TrueC() if src.value else fm.Not(fm.TrueC())
        if isinstance(src, S.Negation):
            return fm.Not(self.formula(src.arg))
        if isinstance(src, S.BoolOp):
            return fm.Binary(src.op, self.formula(src.left), self.formula(src.right))
        if isinstance(src, S.Prefix):
            arg = self.formula(src.arg)
            return fm.Next(arg) if src.op == "next" else fm.Temporal(src.op, arg)
        if isinstance(src, S.UntilOp):
            return fm.Until(self.formula(src.left), self.formula(src.right))
        if isinstance(src, S.Between):
            return fm.Pattern(self.formula(src.body), self.formula(src.start), self.formula(src.end))
        if isinstance(src, S.Arrow):
            guard = self.formula(src.guard) if src.guard is not None else None
            return fm.Arrow(src.multi, guard, self.formula(src.left), self.formula(src.right))
        if isinstance(src, S.Compare):
            left, right = self._deref_for_compare(self.expr(src.left), self.expr(src.right))
            if src.op == "in":
                return fm.In(left, right)
            eq = fm.Eq(left, right)
            return eq if src.op == "=" else fm.Not(eq)
        if isinstance(src, S.Quant):
            return fm.Count(src.quant, self.expr(src.arg))
        if isinstance(src, S.QuantDecl):
            domain = self.expr(src.domain)

            def build():
                body = self.formula(src.body)
                for n in reversed(src.names):
                    body = fm.All(n, domain, body) if src.quant == "all" else \
                        fm.QuantBody(src.quant, n, domain, body)
                return body
            return self._bind(src.names, domain, build)
        if isinstance(src, S.LetIn):
            value = self.expr(src.value)
            return self._bind([src.name], value, lambda: fm.Let(src.name, value, self.formula(src.body)))
        return fm.Bare(self.expr(src))


def elaborate(model: S.SourceModel) -> CoreModel:
    """Resolve a defaulted source model into the clafer table and constraint trees."""
    return _Elaborator(model).run()


# -- well-formedness ----------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    rule: str
    message: str
    line: int = 0


def validate_wellformed(cm: CoreModel) -> List[Violation]:
    out: List[Violation] = []
    for c in cm.clafers[1:]:
        seen = set()
        p: Optional[int] = c.id
        while p is not None and p not in seen:
            seen.add(p)
            p = cm[p].parent
        if p is not None or SING not in seen:
            out.append(Violation("tree", f"{c.name} is not nested under Sing", c.line))
    for c in cm.clafers:
        seen = set()
        s: Optional[int] = c.id
        while s is not None:
            if s in seen:
                out.append(Violation("acyclic", f"generalization cycle through {cm.path(c.id)}", c.line))
                break
            seen.add(s)
            s = cm[s].super
    for c in cm.clafers:
        if c.is_abstract and c.super is not None and not cm[c.super].is_abstract:
            out.append(Violation(
                "abstract-super",
                f"abstract {cm.path(c.id)} specializes concrete {cm.path(c.super)}", c.line))
    # covariant nesting: a nested super must sit under a super of the parent
    for c4 in cm.clafers[1:]:
        c3 = c4.parent
        for c2 in cm.super_closure(c4.id):
            c1 = cm[c2].parent
            if c2 == SING or c1 is None or c1 == SING or c2 == c4.id:
                continue
            if c1 not in cm.super_closure(c3):
                out.append(Violation(
                    "covariance",
                    f"{cm.path(c4.id)} specializes {cm.path(c2)} but its parent "
                    f"{cm.path(c3)} does not specialize {cm.path(c1)}", c4.line))
    if cm[SING].cmult != S.ONE:
        out.append(Violation("sing", "Sing must have multiplicity 1"))
    return out


def resolve_formula(cm: CoreModel, src, context: int = SING) -> fm.Formula:
    """Resolve a parsed constraint against ``cm`` in the given context."""
    return _Resolver(cm, context).formula(src)
