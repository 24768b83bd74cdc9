"""Resolved constraint and expression trees.

The core grammar is True/All/Let/In/Not/Binary/Next/Until over the expression
forms Name/Var/This/Join/Dref/Parent. Some/No/One/Lone and their binder forms
are kept as native counting nodes. The remaining node types only exist between
elaboration and desugaring.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
import typing as t
from typing import Optional


def _cached_hash(self):
    try:
        return self.__dict__["_hash"]
    except KeyError:
        h = hash((type(self).__name__,) + tuple(getattr(self, f.name) for f in dataclasses.fields(self)))
        object.__setattr__(self, "_hash", h)
        return h


def node(cls):
    cls = dataclass(frozen=True)(cls)
    cls.__hash__ = _cached_hash
    return cls


# -- expressions ----------------------------------------------------------------


@node
class Name:
    clafer: int


@node
class Var:
    name: str


@node
class This:
    pass


@node
class Join:
    left: "Expr"
    right: "Expr"


@node
class Dref:
    arg: "Expr"


@node
class Parent:
    arg: "Expr"


@node
class Union:
    left: "Expr"
    right: "Expr"


@node
class Diff:
    left: "Expr"
    right: "Expr"


@node
class Inter:
    left: "Expr"
    right: "Expr"


@node
class Const:
    """A fixed instance set; only produced inside the solver."""

    instances: frozenset


Expr = t.Union[Name, Var, This, Join, Dref, Parent, Union, Diff, Inter, Const]


# -- constraints ----------------------------------------------------------------


@node
class TrueC:
    pass


@node
class All:
    var: str
    domain: Expr
    body: "Formula"


@node
class Let:
    var: str
    value: Expr
    body: "Formula"


@node
class In:
    left: Expr
    right: Expr


@node
class Not:
    arg: "Formula"


AND, OR, IMPLIES, IFF = "&&", "||", "=>", "<=>"


@node
class Binary:
    op: str
    left: "Formula"
    right: "Formula"


@node
class Next:
    arg: "Formula"


@node
class Until:
    left: "Formula"
    right: "Formula"


@node
class Count:
    """``some e`` / ``no e`` / ``one e`` / ``lone e`` on a set."""

    quant: str
    arg: Expr


@node
class QuantBody:
    """``some x : e | body`` and friends, counted over elements of ``e``."""

    quant: str
    var: str
    domain: Expr
    body: "Formula"


# surface-only nodes, removed by desugaring


@node
class Bare:
    """A set expression written where a formula is expected."""

    arg: Expr


@node
class Eq:
    left: Expr
    right: Expr


@node
class Temporal:
    op: str  # always | never | sometime | initially | finally
    arg: "Formula"


@node
class Pattern:
    body: "Formula"
    start: "Formula"
    end: "Formula"


@node
class Arrow:
    multi: bool
    guard: Optional["Formula"]
    left: "Formula"
    right: "Formula"


Formula = t.Union[TrueC, All, Let, In, Not, Binary, Next, Until, Count, QuantBody, Bare, Eq, Temporal, Pattern, Arrow]

EXPR_TYPES = (Name, Var, This, Join, Dref, Parent, Union, Diff, Inter, Const)
CORE_FORMULA_TYPES = (TrueC, All, Let, In, Not, Binary, Next, Until, Count, QuantBody)
SURFACE_ONLY_TYPES = (Bare, Eq, Temporal, Pattern, Arrow)


# -- derived operators ------------------------------------------------------------


def G(f: Formula) -> Formula:
    return Not(Until(TrueC(), Not(f)))


def F(f: Formula) -> Formula:
    return Until(TrueC(), f)


def conj(*fs: Formula) -> Formula:
    out = None
    for f in fs:
        out = f if out is None else Binary(AND, out, f)
    return TrueC() if out is None else out


def some(e: Expr) -> Formula:
    return Count("some", e)


def as_globally(f: Formula) -> Optional[Formula]:
    """Return ``φ`` if ``f`` is ``G φ`` in its encoded form."""
    if isinstance(f, Not) and isinstance(f.arg, Until) and isinstance(f.arg.left, TrueC) \
            and isinstance(f.arg.right, Not):
        return f.arg.right.arg
    return None


def as_eventually(f: Formula) -> Optional[Formula]:
    if isinstance(f, Until) and isinstance(f.left, TrueC):
        return f.right
    return None


# -- traversal ----------------------------------------------------------------------


def children(n) -> tuple:
    return tuple(getattr(n, f.name) for f in dataclasses.fields(n)
                 if isinstance(getattr(n, f.name), EXPR_TYPES + CORE_FORMULA_TYPES + SURFACE_ONLY_TYPES))


def walk(n):
    yield n
    for c in children(n):
        yield from walk(c)


def substitute(n, mapping: dict):
    """Rebuild ``n`` replacing nodes found (by equality) in ``mapping``."""
    if n in mapping:
        return mapping[n]
    changes = {}
    for f in dataclasses.fields(n):
        v = getattr(n, f.name)
        if isinstance(v, EXPR_TYPES + CORE_FORMULA_TYPES + SURFACE_ONLY_TYPES):
            nv = substitute(v, mapping)
            if nv is not v:
                changes[f.name] = nv
    return dataclasses.replace(n, **changes) if changes else n


def bound_names(n) -> set:
    return {x.var for x in walk(n) if isinstance(x, (All, Let, QuantBody))} | \
        {x.name for x in walk(n) if isinstance(x, Var)}


def replace_this(n, replacement: Expr):
    """Substitute ``this`` by ``replacement``; binders never capture ``this``."""
    return substitute(n, {This(): replacement})
