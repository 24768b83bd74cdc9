"""Surface syntax tree of a model, as produced by the parser.

Declarations keep their sugar (keyword cardinalities, missing parts) until
:func:`apply_defaults` makes every cardinality and super type explicit.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

UNBOUNDED = None

ROOT_TYPE = "clafer"


@dataclass(frozen=True)
class Interval:
    lo: int
    hi: Optional[int] = UNBOUNDED

    def __post_init__(self):
        if self.lo < 0 or (self.hi is not None and self.hi < self.lo):
            raise ValueError(f"bad interval {self.lo}..{self.hi}")

    def __contains__(self, n: int) -> bool:
        return n >= self.lo and (self.hi is None or n <= self.hi)

    def __str__(self) -> str:
        return f"{self.lo}..{'*' if self.hi is None else self.hi}"


ANY = Interval(0, None)
ONE = Interval(1, 1)
OPTIONAL = Interval(0, 1)

GCARD_KEYWORDS = {"xor": Interval(1, 1), "or": Interval(1, None), "mux": Interval(0, 1)}
CMULT_KEYWORDS = {"?": Interval(0, 1), "*": Interval(0, None), "+": Interval(1, None)}


# -- expressions and constraints ---------------------------------------------
# The parser does not know whether a phrase denotes a set or a formula, so a
# single tree type covers both; elaboration sorts them out by position.


@dataclass(frozen=True)
class Ident:
    name: str
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ThisRef:
    pass


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class Join:
    left: "Src"
    right: "Src"


@dataclass(frozen=True)
class ParentOf:
    arg: "Src"


@dataclass(frozen=True)
class DrefOf:
    arg: "Src"


@dataclass(frozen=True)
class SetOp:
    op: str  # "++" | "--" | "**"
    left: "Src"
    right: "Src"


@dataclass(frozen=True)
class Compare:
    op: str  # "in" | "=" | "!="
    left: "Src"
    right: "Src"


@dataclass(frozen=True)
class Quant:
    quant: str  # "some" | "no" | "one" | "lone"
    arg: "Src"


@dataclass(frozen=True)
class QuantDecl:
    quant: str  # "all" | "some" | "no" | "one" | "lone"
    names: Tuple[str, ...]
    domain: "Src"
    body: "Src"


@dataclass(frozen=True)
class LetIn:
    name: str
    value: "Src"
    body: "Src"


@dataclass(frozen=True)
class Negation:
    arg: "Src"


@dataclass(frozen=True)
class BoolOp:
    op: str  # "&&" | "||" | "=>" | "<=>"
    left: "Src"
    right: "Src"


@dataclass(frozen=True)
class Prefix:
    op: str  # always | never | sometime | next | initially | finally
    arg: "Src"


@dataclass(frozen=True)
class UntilOp:
    left: "Src"
    right: "Src"


@dataclass(frozen=True)
class Between:
    body: "Src"
    start: "Src"
    end: "Src"


@dataclass(frozen=True)
class Arrow:
    multi: bool  # False: -->, True: -->>
    guard: Optional["Src"]
    left: "Src"
    right: "Src"


Src = Union[
    Ident, ThisRef, BoolLit, Join, ParentOf, DrefOf, SetOp, Compare, Quant, QuantDecl,
    LetIn, Negation, BoolOp, Prefix, UntilOp, Between, Arrow,
]


# -- declarations -------------------------------------------------------------


@dataclass(frozen=True)
class ConstraintDecl:
    is_assert: bool
    body: Src
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Reference:
    kind: str  # "SET" | "BAG"
    target: str


@dataclass(frozen=True)
class Initializer:
    kind: str  # "CONSTANT" | "DEFAULT"
    expr: Src


@dataclass(frozen=True)
class ClaferDecl:
    name: str
    is_abstract: bool = False
    is_final: bool = False
    is_initial: bool = False
    # Interval once defaulted; a keyword string or None straight from the parser.
    gcard: Union[Interval, str, None] = None
    super_name: Optional[str] = None
    ref: Optional[Reference] = None
    cmult: Union[Interval, str, None] = None
    initializer: Optional[Initializer] = None
    children: Tuple["ClaferDecl", ...] = ()
    constraints: Tuple[ConstraintDecl, ...] = ()
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class SourceModel:
    decls: Tuple[ClaferDecl, ...] = ()
    constraints: Tuple[ConstraintDecl, ...] = ()


# -- defaults -----------------------------------------------------------------


def _default_decl(d: ClaferDecl, parent_gcard: Interval) -> ClaferDecl:
    gcard = d.gcard
    if gcard is None:
        gcard = ANY
    elif isinstance(gcard, str):
        gcard = GCARD_KEYWORDS[gcard]
    cmult = d.cmult
    if cmult is None:
        if d.is_abstract:
            cmult = ANY
        else:
            cmult = ONE if parent_gcard == ANY else OPTIONAL
    elif isinstance(cmult, str):
        cmult = CMULT_KEYWORDS[cmult]
    return dataclasses.replace(
        d,
        gcard=gcard,
        cmult=cmult,
        super_name=d.super_name or ROOT_TYPE,
        children=tuple(_default_decl(c, gcard) for c in d.children),
    )


def apply_defaults(model: SourceModel) -> SourceModel:
    """Make gcard, cmult and super explicit on every declaration.

    Abstract clafers default to ``0..*``; otherwise a missing multiplicity is
    ``1..1`` under a parent whose group cardinality is ``0..*`` and ``0..1``
    under any other parent.
    """
    return dataclasses.replace(model, decls=tuple(_default_decl(d, ANY) for d in model.decls))


# -- pretty printing ----------------------------------------------------------

_LEVEL = {
    "arrow": 0, "impl": 1, "until": 2, "or": 3, "and": 4, "unary": 5,
    "cmp": 6, "union": 7, "inter": 8, "nav": 9,
}


def _level(e: Src) -> int:
    if isinstance(e, Arrow):
        return _LEVEL["arrow"]
    if isinstance(e, BoolOp):
        return _LEVEL["impl"] if e.op in ("=>", "<=>") else _LEVEL["or" if e.op == "||" else "and"]
    if isinstance(e, UntilOp):
        return _LEVEL["until"]
    if isinstance(e, (Prefix, Between, QuantDecl, LetIn)):
        return _LEVEL["arrow"]  # their operand extends to the right
    if isinstance(e, (Negation,)):
        return _LEVEL["unary"]
    if isinstance(e, (Compare, Quant)):
        return _LEVEL["cmp"]
    if isinstance(e, SetOp):
        return _LEVEL["inter" if e.op == "**" else "union"]
    return _LEVEL["nav"]


def _wrap(e: Src, min_level: int) -> str:
    text = pretty_expr(e)
    return f"({text})" if _level(e) < min_level else text


def pretty_expr(e: Src) -> str:
    """Render a surface expression; parenthesizes only where precedence requires."""
    if isinstance(e, Ident):
        return e.name
    if isinstance(e, ThisRef):
        return "this"
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, Join):
        right = pretty_expr(e.right) if isinstance(e.right, Ident) else f"({pretty_expr(e.right)})"
        return f"{_wrap(e.left, _LEVEL['nav'])}.{right}"
    if isinstance(e, ParentOf):
        return f"{_wrap(e.arg, _LEVEL['nav'])}.parent"
    if isinstance(e, DrefOf):
        return f"{_wrap(e.arg, _LEVEL['nav'])}.dref"
    if isinstance(e, SetOp):
        lvl = _level(e)
        return f"{_wrap(e.left, lvl)} {e.op} {_wrap(e.right, lvl + 1)}"
    if isinstance(e, Compare):
        return f"{_wrap(e.left, _LEVEL['union'])} {e.op} {_wrap(e.right, _LEVEL['union'])}"
    if isinstance(e, Quant):
        return f"{e.quant} {_wrap(e.arg, _LEVEL['union'])}"
    if isinstance(e, QuantDecl):
        return f"{e.quant} {', '.join(e.names)} : {_wrap(e.domain, _LEVEL['union'])} | {pretty_expr(e.body)}"
    if isinstance(e, LetIn):
        return f"let {e.name} = {_wrap(e.value, _LEVEL['union'])} | {pretty_expr(e.body)}"
    if isinstance(e, Negation):
        return f"!{_wrap(e.arg, _LEVEL['unary'])}"
    if isinstance(e, BoolOp):
        lvl = _level(e)
        if e.op in ("=>", "<=>"):  # right-associative
            return f"{_wrap(e.left, lvl + 1)} {e.op} {_wrap(e.right, lvl)}"
        return f"{_wrap(e.left, lvl)} {e.op} {_wrap(e.right, lvl + 1)}"
    if isinstance(e, UntilOp):
        return f"{_wrap(e.left, _LEVEL['or'])} until {_wrap(e.right, _LEVEL['until'])}"
    if isinstance(e, Prefix):
        return f"{e.op} {_wrap_prefix_arg(e.arg)}"
    if isinstance(e, Between):
        return (f"always {_wrap(e.body, _LEVEL['impl'])} between "
                f"{_wrap(e.start, _LEVEL['impl'])} and {_wrap(e.end, _LEVEL['impl'])}")
    if isinstance(e, Arrow):
        op = "-->>" if e.multi else "-->"
        if e.guard is not None:
            op = f"-[{pretty_expr(e.guard)}]->" + (">" if e.multi else "")
        return f"{_wrap(e.left, _LEVEL['impl'])} {op} {_wrap(e.right, _LEVEL['arrow'])}"
    raise TypeError(f"not a surface node: {e!r}")


def _wrap_prefix_arg(e: Src) -> str:
    # `always p between q and r` would re-parse as a pattern
    if isinstance(e, Between):
        return f"({pretty_expr(e)})"
    return pretty_expr(e)


def _pretty_decl(d: ClaferDecl, indent: int, out: list):
    parts = []
    if d.is_abstract:
        parts.append("abstract")
    if d.is_final:
        parts.append("final")
    if d.is_initial:
        parts.append("initial")
    if d.gcard is not None:
        parts.append(str(d.gcard))
    parts.append(d.name)
    if d.super_name is not None:
        parts += [":", d.super_name]
    if d.ref is not None:
        parts += ["->" if d.ref.kind == "SET" else "->>", d.ref.target]
    if d.cmult is not None:
        parts.append(str(d.cmult))
    if d.initializer is not None:
        parts += ["=" if d.initializer.kind == "CONSTANT" else ":=", pretty_expr(d.initializer.expr)]
    pad = " " * indent
    out.append(pad + " ".join(parts))
    for c in d.constraints:
        out.append(pad + "  " + _pretty_constraint(c))
    for ch in d.children:
        _pretty_decl(ch, indent + 2, out)


def _pretty_constraint(c: ConstraintDecl) -> str:
    return ("assert " if c.is_assert else "") + f"[ {pretty_expr(c.body)} ]"


def pretty_model(model: SourceModel) -> str:
    out: list = []
    for d in model.decls:
        _pretty_decl(d, 0, out)
    for c in model.constraints:
        out.append(_pretty_constraint(c))
    return "\n".join(out) + "\n"
