"""Constraint evaluation over lasso traces and whole-trace validity."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from . import formula as fm
from .core import CoreModel, Violation
from .instance import (
    EMPTY_ENV, Env, Inst, Snapshot, bind, check_structural, eval_expr, instance_id,
    parse_snapshot, snapshot_from_json, snapshot_json, snapshot_lines,
)


@dataclass(frozen=True)
class LassoTrace:
    """``s0 .. s(k-1)`` followed forever by ``s(l) .. s(k-1)``."""

    snapshots: Tuple[Snapshot, ...]
    loop: int = 0

    def __post_init__(self):
        object.__setattr__(self, "snapshots", tuple(self.snapshots))
        if not self.snapshots or not 0 <= self.loop < len(self.snapshots):
            raise ValueError("a lasso needs k >= 1 snapshots and 0 <= loop < k")

    def __len__(self):
        return len(self.snapshots)

    def succ(self, t: int) -> int:
        return t + 1 if t + 1 < len(self.snapshots) else self.loop


_QUANT = {
    "some": lambda n: n >= 1,
    "no": lambda n: n == 0,
    "one": lambda n: n == 1,
    "lone": lambda n: n <= 1,
}


class Evaluator:
    """Per-position truth vectors of formulas over one lasso, memoized."""

    def __init__(self, cm: CoreModel, trace: LassoTrace):
        self.cm = cm
        self.trace = trace
        self.k = len(trace)
        self.memo: Dict[Tuple[object, Env], Tuple[bool, ...]] = {}

    def expr(self, t: int, env: Env, e):
        return eval_expr(self.cm, self.trace.snapshots[t], env, e)

    def vector(self, f, env: Env = EMPTY_ENV) -> Tuple[bool, ...]:
        key = (f, env)
        v = self.memo.get(key)
        if v is None:
            v = self._compute(f, env)
            self.memo[key] = v
        return v

    def _compute(self, f, env: Env) -> Tuple[bool, ...]:
        k, snaps = self.k, self.trace.snapshots
        if isinstance(f, fm.TrueC):
            return (True,) * k
        if isinstance(f, fm.Not):
            return tuple(not x for x in self.vector(f.arg, env))
        if isinstance(f, fm.Binary):
            a, b = self.vector(f.left, env), self.vector(f.right, env)
            op = {
                fm.AND: lambda x, y: x and y,
                fm.OR: lambda x, y: x or y,
                fm.IMPLIES: lambda x, y: (not x) or y,
                fm.IFF: lambda x, y: x == y,
            }[f.op]
            return tuple(op(x, y) for x, y in zip(a, b))
        if isinstance(f, fm.Next):
            a = self.vector(f.arg, env)
            return tuple(a[self.trace.succ(t)] for t in range(k))
        if isinstance(f, fm.Until):
            return self._until(self.vector(f.left, env), self.vector(f.right, env))
        if isinstance(f, fm.In):
            return tuple(self.expr(t, env, f.left) <= self.expr(t, env, f.right) for t in range(k))
        if isinstance(f, fm.Count):
            test = _QUANT[f.quant]
            return tuple(test(len(self.expr(t, env, f.arg) & snaps[t].instances)) for t in range(k))
        if isinstance(f, fm.All):
            out = []
            for t in range(k):
                out.append(all(self.vector(f.body, bind(env, f.var, frozenset({i})))[t]
                               for i in sorted(self.expr(t, env, f.domain))))
            return tuple(out)
        if isinstance(f, fm.QuantBody):
            test = _QUANT[f.quant]
            out = []
            for t in range(k):
                n = sum(1 for i in sorted(self.expr(t, env, f.domain))
                        if self.vector(f.body, bind(env, f.var, frozenset({i})))[t])
                out.append(test(n))
            return tuple(out)
        if isinstance(f, fm.Let):
            return tuple(self.vector(f.body, bind(env, f.var, self.expr(t, env, f.value)))[t]
                         for t in range(k))
        raise TypeError(f"not a core formula: {type(f).__name__}")

    def _until(self, a: Sequence[bool], b: Sequence[bool]) -> Tuple[bool, ...]:
        k, l = self.k, self.trace.loop
        res = [False] * k
        # least fixpoint on the cycle: two backward sweeps suffice
        for _ in range(2):
            for t in range(k - 1, l - 1, -1):
                res[t] = b[t] or (a[t] and res[self.trace.succ(t)])
        for t in range(l - 1, -1, -1):
            res[t] = b[t] or (a[t] and res[t + 1])
        return tuple(res)


def eval_constraint(cm: CoreModel, trace: LassoTrace, t: int, env: Env, f,
                    evaluator: Optional[Evaluator] = None) -> bool:
    ev = evaluator if evaluator is not None else Evaluator(cm, trace)
    return ev.vector(f, env)[t]


def check_trace(cm: CoreModel, trace: LassoTrace, constraints=None) -> List[Violation]:
    """Structural, lifetime and constraint violations of a lasso.

    ``constraints`` defaults to the (already lifted) model constraints.
    """
    out: List[Violation] = []
    for t, s in enumerate(trace.snapshots):
        for v in check_structural(cm, s):
            out.append(Violation(v.rule, f"snapshot {t}: {v.message}"))
    k, l = len(trace), trace.loop
    alive: Dict[Inst, List[int]] = {}
    for t, s in enumerate(trace.snapshots):
        for i in s.parent:
            alive.setdefault(i, []).append(t)
    for i, ts in sorted(alive.items()):
        name = instance_id(cm, i)
        if ts != list(range(ts[0], ts[-1] + 1)):
            out.append(Violation("reappear", f"{name} disappears and reappears"))
        elif ts[-1] >= l and ts[0] > l or (ts[-1] >= l and ts[-1] < k - 1):
            out.append(Violation("reappear", f"{name} is not stable over the loop"))
        parents = {trace.snapshots[t].parent[i] for t in ts}
        if len(parents) > 1:
            out.append(Violation("parent", f"{name} changes parent"))
    if constraints is None:
        constraints = [c.body for c in cm.constraints]
    ev = Evaluator(cm, trace)
    for n, f in enumerate(constraints):
        if not ev.vector(f)[0]:
            out.append(Violation("constraint", f"constraint {n + 1} is violated"))
    return out


# -- serialization ------------------------------------------------------------------


def trace_text(cm: CoreModel, trace: LassoTrace) -> str:
    lines = []
    for t, s in enumerate(trace.snapshots):
        lines.append(f"snapshot {t}")
        lines += ["  " + x for x in snapshot_lines(cm, s)]
    lines.append(f"loop: {trace.loop}")
    return "\n".join(lines) + "\n"


def trace_json(cm: CoreModel, trace: LassoTrace) -> dict:
    return {"snapshots": [snapshot_json(cm, s) for s in trace.snapshots], "loop": trace.loop}


def parse_trace(cm: CoreModel, text: str) -> LassoTrace:
    blocks: List[List[str]] = []
    loop = 0
    for raw in text.splitlines():
        if raw.startswith("snapshot "):
            blocks.append([])
        elif raw.startswith("loop:"):
            loop = int(raw.split(":", 1)[1])
        elif raw.strip():
            blocks[-1].append(raw)
    return LassoTrace(tuple(parse_snapshot(cm, "\n".join(b)) for b in blocks), loop)


def trace_from_json(cm: CoreModel, data: dict) -> LassoTrace:
    return LassoTrace(tuple(snapshot_from_json(cm, s) for s in data["snapshots"]), data["loop"])
