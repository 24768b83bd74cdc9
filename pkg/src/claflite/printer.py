"""Canonical text form of a core model, used by ``desugar`` and golden tests."""
from __future__ import annotations

from . import formula as fm
from .core import ROOT, SING, Constraint, CoreModel

_GROUPING = (fm.Binary, fm.All, fm.QuantBody, fm.Let, fm.Until, fm.Pattern, fm.Arrow)


def expr_text(cm: CoreModel, e) -> str:
    if isinstance(e, fm.Name):
        return cm.path(e.clafer)
    if isinstance(e, fm.Var):
        return e.name
    if isinstance(e, fm.This):
        return "this"
    if isinstance(e, fm.Join):
        if isinstance(e.right, fm.Name):
            return f"{expr_text(cm, e.left)}.{cm[e.right.clafer].name}"
        return f"{expr_text(cm, e.left)}.({expr_text(cm, e.right)})"
    if isinstance(e, fm.Dref):
        return f"{expr_text(cm, e.arg)}.dref"
    if isinstance(e, fm.Parent):
        return f"{expr_text(cm, e.arg)}.parent"
    if isinstance(e, (fm.Union, fm.Diff, fm.Inter)):
        op = {fm.Union: "++", fm.Diff: "--", fm.Inter: "**"}[type(e)]
        return f"({expr_text(cm, e.left)} {op} {expr_text(cm, e.right)})"
    if isinstance(e, fm.Const):
        return "{" + ", ".join(sorted(str(i) for i in e.instances)) + "}"
    raise TypeError(f"not an expression: {e!r}")


def _operand(cm: CoreModel, f) -> str:
    text = formula_text(cm, f)
    if fm.as_globally(f) is not None or fm.as_eventually(f) is not None:
        return text
    return f"({text})" if isinstance(f, _GROUPING) and not isinstance(f, fm.Until) else text


def formula_text(cm: CoreModel, f) -> str:
    """Fully parenthesized rendering; ``G``/``F`` shapes print by name."""
    g = fm.as_globally(f)
    if g is not None:
        return f"G({formula_text(cm, g)})"
    ev = fm.as_eventually(f)
    if ev is not None:
        return f"F({formula_text(cm, ev)})"
    if isinstance(f, fm.TrueC):
        return "true"
    if isinstance(f, fm.Not):
        return "!" + _operand(cm, f.arg)
    if isinstance(f, fm.Binary):
        return f"{_operand(cm, f.left)} {f.op} {_operand(cm, f.right)}"
    if isinstance(f, fm.Next):
        return "X " + _operand(cm, f.arg)
    if isinstance(f, fm.Until):
        return f"({_operand(cm, f.left)} U {_operand(cm, f.right)})"
    if isinstance(f, fm.In):
        return f"{expr_text(cm, f.left)} in {expr_text(cm, f.right)}"
    if isinstance(f, fm.Count):
        return f"{f.quant} {expr_text(cm, f.arg)}"
    if isinstance(f, fm.All):
        return f"all {f.var} : {expr_text(cm, f.domain)} | {formula_text(cm, f.body)}"
    if isinstance(f, fm.QuantBody):
        return f"{f.quant} {f.var} : {expr_text(cm, f.domain)} | {formula_text(cm, f.body)}"
    if isinstance(f, fm.Let):
        return f"let {f.var} = {expr_text(cm, f.value)} | {formula_text(cm, f.body)}"
    # surface nodes only appear when printing before desugaring
    if isinstance(f, fm.Bare):
        return expr_text(cm, f.arg)
    if isinstance(f, fm.Eq):
        return f"{expr_text(cm, f.left)} = {expr_text(cm, f.right)}"
    if isinstance(f, fm.Temporal):
        return f"{f.op} {_operand(cm, f.arg)}"
    if isinstance(f, fm.Pattern):
        return (f"always {_operand(cm, f.body)} between {_operand(cm, f.start)}"
                f" and {_operand(cm, f.end)}")
    if isinstance(f, fm.Arrow):
        op = "-->>" if f.multi else "-->"
        if f.guard is not None:
            op = f"-[{formula_text(cm, f.guard)}]->" + (">" if f.multi else "")
        return f"{_operand(cm, f.left)} {op} {_operand(cm, f.right)}"
    raise TypeError(f"not a formula: {f!r}")


def constraint_text(cm: CoreModel, c: Constraint) -> str:
    prefix = "" if c.context == SING else f"[{cm.path(c.context)}] "
    return prefix + formula_text(cm, c.body)


def clafer_line(cm: CoreModel, cid: int) -> str:
    c = cm[cid]
    parts = [w for w, on in (("abstract", c.is_abstract), ("final", c.is_final),
                             ("initial", c.is_initial)) if on]
    parts += [cm.path(cid), ":", "clafer" if c.super in (None, ROOT) else cm.path(c.super)]
    if c.ref is not None:
        parts += ["->" if c.ref[0] == "SET" else "->>", cm.path(c.ref[1])]
    parts += [str(c.cmult), f"group {c.gcard}"]
    return " ".join(parts)


def model_text(cm: CoreModel) -> str:
    lines = ["clafers"]
    lines += ["  " + clafer_line(cm, c.id) for c in cm.clafers if c.id not in (SING, ROOT)]
    lines.append("constraints")
    lines += ["  " + constraint_text(cm, c) for c in cm.constraints]
    lines.append("assertions")
    lines += ["  " + constraint_text(cm, c) for c in cm.assertions]
    return "\n".join(lines) + "\n"
