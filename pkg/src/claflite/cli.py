"""Command-line front end: check, desugar, instances, trace and assert."""
from __future__ import annotations

import argparse
import json
import logging
import multiprocessing
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Sequence

from . import __version__, compile_goal
from .core import elaborate, validate_wellformed
from .desugar import desugar_model
from .errors import ClafliteError
from .instance import snapshot_json, snapshot_lines
from .parser import parse_model
from .printer import model_text
from .solver import REFUTE, WITNESS, Scope, check_assertion, enumerate_instances, find_trace
from .source import apply_defaults
from .temporal import check_trace, trace_json, trace_text

OK, FAILED, USAGE = 0, 1, 2

log = logging.getLogger("claflite")


class _Usage(Exception):
    pass


class Reporter:
    def __init__(self, filename: str, stream=None):
        self.filename = filename
        self.stream = stream or sys.stderr
        self.color = os.environ.get("CLAFLITE_COLOR", "1") != "0" and self.stream.isatty()

    def _tag(self, text: str, code: str) -> str:
        return f"\033[{code}m{text}\033[0m" if self.color else text

    def error(self, err: ClafliteError):
        print(f"{err.location(self.filename)}: {self._tag('error', '31')}: "
              f"{err.kind}: {err.message}", file=self.stream)

    def violation(self, rule: str, message: str, line: int = 0):
        where = f"{self.filename}:{line}:1" if line else self.filename
        print(f"{where}: {self._tag('error', '31')}: {rule}: {message}", file=self.stream)

    def note(self, message: str):
        print(f"{self.filename}: {message}", file=self.stream)


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _elaborated(path: str):
    cm = elaborate(apply_defaults(parse_model(_read(path))))
    bad = validate_wellformed(cm)
    return cm, bad


def _scope(args) -> Scope:
    per = {}
    for item in args.scope_for or ():
        name, sep, n = item.partition("=")
        if not sep or not n.isdigit():
            raise _Usage(f"--scope-for expects NAME=N, got {item!r}")
        per[name] = int(n)
    loop = getattr(args, "loop", "all")
    if loop != "all" and not str(loop).isdigit():
        raise _Usage(f"--loop expects a number or 'all', got {loop!r}")
    try:
        return Scope(args.scope, per, getattr(args, "length", 8), None if loop == "all" else int(loop))
    except ValueError as e:
        raise _Usage(str(e))


def _emit_json(command: str, result):
    print(json.dumps({"version": __version__, "command": command, "result": result}, indent=2))


# -- commands -----------------------------------------------------------------------


def cmd_check(args, rep: Reporter) -> int:
    cm, bad = _elaborated(args.file)
    for v in bad:
        rep.violation(v.rule, v.message, v.line)
    if args.json:
        _emit_json("check", {"ok": not bad, "violations": [
            {"rule": v.rule, "message": v.message, "line": v.line} for v in bad]})
    return FAILED if bad else OK


def _model(args, rep: Reporter, lift_levels: Optional[int] = None):
    cm, bad = _elaborated(args.file)
    for v in bad:
        rep.violation(v.rule, v.message, v.line)
    if bad:
        return None
    return desugar_model(cm, lift_levels)


def cmd_desugar(args, rep: Reporter) -> int:
    cm = _model(args, rep, args.lift_levels)
    if cm is None:
        return FAILED
    text = model_text(cm)
    if args.json:
        _emit_json("desugar", {"text": text})
    else:
        sys.stdout.write(text)
    return OK


def cmd_instances(args, rep: Reporter) -> int:
    cm = _model(args, rep)
    if cm is None:
        return FAILED
    found = enumerate_instances(cm, _scope(args), args.max)
    if args.json:
        _emit_json("instances", {"count": len(found),
                                 "instances": [snapshot_json(cm, s) for s in found]})
        return OK
    for n, s in enumerate(found, 1):
        print(f"instance {n}")
        for line in snapshot_lines(cm, s):
            print(f"  {line}")
    print(f"{len(found)} instance{'s' if len(found) != 1 else ''}")
    return OK


def cmd_trace(args, rep: Reporter) -> int:
    cm = _model(args, rep)
    if cm is None:
        return FAILED
    goal = None
    if args.goal:
        try:
            goal = compile_goal(cm, args.goal)
        except ClafliteError as e:
            Reporter("<goal>").error(e)
            return FAILED
    t = find_trace(cm, _scope(args), goal)
    if t is not None:
        extra = [goal] if goal is not None else []
        problems = check_trace(cm, t, [c.body for c in cm.constraints] + extra)
        for v in problems:  # would be a solver bug
            rep.violation(v.rule, f"produced trace fails self-check: {v.message}")
        if problems:
            return FAILED
    if args.json:
        _emit_json("trace", {"status": "FOUND" if t else "NONE-WITHIN-BOUND",
                             "trace": trace_json(cm, t) if t else None})
    else:
        sys.stdout.write(trace_text(cm, t) if t else "NONE-WITHIN-BOUND\n")
    return OK if t is not None else FAILED


_WORKER_STATE: dict = {}


def _init_worker(cm, scope):
    _WORKER_STATE["cm"], _WORKER_STATE["scope"] = cm, scope


def _check_one(job):
    idx, mode = job
    cm, scope = _WORKER_STATE["cm"], _WORKER_STATE["scope"]
    v = check_assertion(cm, cm.assertions[idx].body, mode, scope)
    t = v.trace
    return v.status, (trace_text(cm, t) if t else None), (trace_json(cm, t) if t else None)


def _modes(text: str, n: int) -> List[str]:
    modes = [m.strip() for m in text.split(",")]
    for m in modes:
        if m not in (WITNESS, REFUTE):
            raise _Usage(f"--mode expects witness or refute, got {m!r}")
    if len(modes) == 1:
        return modes * n
    if len(modes) != n:
        raise _Usage(f"--mode lists {len(modes)} modes for {n} assertions")
    return modes


def cmd_assert(args, rep: Reporter) -> int:
    cm = _model(args, rep)
    if cm is None:
        return FAILED
    scope = _scope(args)
    jobs = list(enumerate(_modes(args.mode, len(cm.assertions))))
    if args.jobs > 1 and len(jobs) > 1 and "fork" in multiprocessing.get_all_start_methods():
        # forked workers share the parsed model; only indices cross the pipe
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(args.jobs, mp_context=ctx, initializer=_init_worker,
                                 initargs=(cm, scope)) as pool:
            results = list(pool.map(_check_one, jobs))
    else:
        _init_worker(cm, scope)
        results = [_check_one(j) for j in jobs]
    if not jobs:
        rep.note("no assertions")
    rows = []
    for (idx, mode), (status, text, data) in zip(jobs, results):
        a = cm.assertions[idx]
        rows.append({"index": idx + 1, "line": a.line, "mode": mode, "status": status, "trace": data})
        if not args.json:
            print(f"assert {idx + 1} (line {a.line}, {mode}): {status}")
            if text:
                for line in text.splitlines():
                    print(f"  {line}")
    if args.json:
        _emit_json("assert", {"assertions": rows})
    return OK if all(r["status"].startswith("PASS") for r in rows) else FAILED


# -- argument parsing -----------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="claflite", description=__doc__)
    p.add_argument("--version", action="version", version=f"claflite {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def command(name, help_text):
        c = sub.add_parser(name, help=help_text)
        c.add_argument("file")
        c.add_argument("--json", action="store_true", help="machine-readable output")
        return c

    def scoped(c):
        c.add_argument("--scope", type=int, default=1, help="instances per clafer (default 1)")
        c.add_argument("--scope-for", action="append", metavar="NAME=N",
                       help="per-clafer bound by name or path; repeatable")

    def traced(c):
        c.add_argument("--length", type=int, default=8, help="longest lasso tried (default 8)")
        c.add_argument("--loop", default="all", help="loop-back index or 'all' (default)")

    command("check", "parse, resolve and validate a model")
    c = command("desugar", "print the desugared core model")
    c.add_argument("--lift-levels", type=int, default=None, metavar="N",
                   help="lift constraints N levels instead of to the top")
    c = command("instances", "enumerate static configurations")
    scoped(c)
    c.add_argument("--max", type=int, default=None, help="stop after N instances")
    c = command("trace", "find one lasso trace")
    scoped(c)
    traced(c)
    c.add_argument("--goal", default=None, help="extra constraint in top-level context")
    c = command("assert", "check every assertion in the file")
    scoped(c)
    traced(c)
    c.add_argument("--mode", default=WITNESS,
                   help="witness or refute, or a comma list with one mode per assertion")
    c.add_argument("--jobs", type=int, default=1, help="check assertions in parallel")
    return p


_COMMANDS = {"check": cmd_check, "desugar": cmd_desugar, "instances": cmd_instances,
             "trace": cmd_trace, "assert": cmd_assert}


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(format="%(name)s: %(message)s", level=logging.WARNING)
    p = _parser()
    try:
        args = p.parse_args(argv)
    except SystemExit as e:
        return OK if e.code == 0 else USAGE
    rep = Reporter(args.file)
    try:
        return _COMMANDS[args.command](args, rep)
    except _Usage as e:
        print(f"claflite: {e}", file=sys.stderr)
        return USAGE
    except OSError as e:
        print(f"{args.file}: {e.strerror or e}", file=sys.stderr)
        return USAGE
    except ClafliteError as e:
        rep.error(e)
        return FAILED


if __name__ == "__main__":
    sys.exit(main())
