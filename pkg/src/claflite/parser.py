"""Recursive-descent parser for the indentation-sensitive model syntax."""
from __future__ import annotations

from typing import List, Optional, Tuple

from . import source as S
from .errors import IndentError, ParseError
from .lexer import LogicalLine, Token, logical_lines, tokenize_line

_TEMPORAL_PREFIX = {"always", "never", "sometime", "next", "initially", "finally"}
_QUANTS = {"some", "no", "one", "lone"}


class TokenStream:
    def __init__(self, tokens: List[Token], line: int = 0):
        self.tokens = tokens
        self.pos = 0
        last = tokens[-1] if tokens else None
        self._eof = Token("EOF", "", last.line if last else line, (last.col + len(last.text)) if last else 1)

    def peek(self, offset: int = 0) -> Token:
        idx = self.pos + offset
        return self.tokens[idx] if idx < len(self.tokens) else self._eof

    def at(self, text: str, offset: int = 0) -> bool:
        tok = self.peek(offset)
        return tok.kind in ("OP", "KW") and tok.text == text

    def accept(self, text: str) -> Optional[Token]:
        if self.at(text):
            return self.next()
        return None

    def next(self) -> Token:
        tok = self.peek()
        self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.accept(text)
        if tok is None:
            raise self.error(f"expected {text!r}")
        return tok

    def expect_ident(self) -> Token:
        tok = self.peek()
        if tok.kind != "IDENT":
            raise self.error("expected identifier")
        return self.next()

    def error(self, message: str) -> ParseError:
        tok = self.peek()
        found = "end of line" if tok.kind == "EOF" else repr(tok.text)
        return ParseError(f"{message}, found {found}", tok.line, tok.col)

    def done(self) -> bool:
        return self.pos >= len(self.tokens)


# -- expressions ----------------------------------------------------------------


def parse_expr(ts: TokenStream) -> S.Src:
    return _arrow(ts)


def _arrow(ts: TokenStream) -> S.Src:
    left = _impl(ts)
    tok = ts.peek()
    if tok.kind == "OP" and tok.text in ("-->", "-->>"):
        ts.next()
        return S.Arrow(tok.text == "-->>", None, left, _arrow(ts))
    if ts.at("-["):
        ts.next()
        guard = parse_expr(ts)
        close = ts.peek()
        if not (close.kind == "OP" and close.text in ("]->", "]->>")):
            raise ts.error("expected ']->' or ']->>' closing the guard")
        ts.next()
        return S.Arrow(close.text == "]->>", guard, left, _arrow(ts))
    return left


def _impl(ts: TokenStream) -> S.Src:
    left = _until(ts)
    tok = ts.peek()
    if tok.kind == "OP" and tok.text in ("=>", "<=>"):
        ts.next()
        return S.BoolOp(tok.text, left, _impl(ts))
    return left


def _until(ts: TokenStream) -> S.Src:
    left = _or(ts)
    if ts.accept("until"):
        return S.UntilOp(left, _until(ts))
    return left


def _or(ts: TokenStream) -> S.Src:
    left = _and(ts)
    while ts.accept("||"):
        left = S.BoolOp("||", left, _and(ts))
    return left


def _and(ts: TokenStream) -> S.Src:
    left = _unary(ts)
    while ts.accept("&&"):
        left = S.BoolOp("&&", left, _unary(ts))
    return left


def _binder_ahead(ts: TokenStream) -> bool:
    # quantifier IDENT (, IDENT)* :
    i = 1
    while True:
        if ts.peek(i).kind != "IDENT":
            return False
        if ts.at(":", i + 1):
            return True
        if not ts.at(",", i + 1):
            return False
        i += 2


def _unary(ts: TokenStream) -> S.Src:
    tok = ts.peek()
    if tok.kind == "OP" and tok.text == "!" or ts.at("not"):
        ts.next()
        return S.Negation(_unary(ts))
    if tok.kind == "KW" and tok.text in _TEMPORAL_PREFIX:
        ts.next()
        body = parse_expr(ts)
        if tok.text == "always" and ts.accept("between"):
            start = parse_expr(ts)
            ts.expect("and")
            return S.Between(body, start, parse_expr(ts))
        return S.Prefix(tok.text, body)
    if tok.kind == "KW" and (tok.text == "all" or tok.text in _QUANTS) and _binder_ahead(ts):
        ts.next()
        names = [ts.expect_ident().text]
        while ts.accept(","):
            names.append(ts.expect_ident().text)
        ts.expect(":")
        domain = _union(ts)
        ts.expect("|")
        return S.QuantDecl(tok.text, tuple(names), domain, parse_expr(ts))
    if tok.kind == "KW" and tok.text in _QUANTS:
        ts.next()
        return S.Quant(tok.text, _union(ts))
    if ts.at("let"):
        ts.next()
        name = ts.expect_ident().text
        if not ts.accept("="):
            ts.expect(":")
        value = _union(ts)
        ts.expect("|")
        return S.LetIn(name, value, parse_expr(ts))
    return _compare(ts)


def _compare(ts: TokenStream) -> S.Src:
    left = _union(ts)
    tok = ts.peek()
    if tok.text in ("in", "=", "!=") and tok.kind in ("OP", "KW"):
        ts.next()
        return S.Compare(tok.text, left, _union(ts))
    return left


def _union(ts: TokenStream) -> S.Src:
    left = _inter(ts)
    while True:
        tok = ts.peek()
        if tok.kind == "OP" and tok.text in ("++", "--", ","):
            ts.next()
            op = "++" if tok.text == "," else tok.text
            left = S.SetOp(op, left, _inter(ts))
        else:
            return left


def _inter(ts: TokenStream) -> S.Src:
    left = _nav(ts)
    while ts.accept("**"):
        left = S.SetOp("**", left, _nav(ts))
    return left


def _nav(ts: TokenStream) -> S.Src:
    expr = _primary(ts)
    while ts.accept("."):
        tok = ts.peek()
        if ts.accept("parent"):
            expr = S.ParentOf(expr)
        elif ts.accept("dref"):
            expr = S.DrefOf(expr)
        elif tok.kind == "IDENT":
            ts.next()
            expr = S.Join(expr, S.Ident(tok.text, tok.line, tok.col))
        elif ts.accept("("):
            inner = parse_expr(ts)
            ts.expect(")")
            expr = S.Join(expr, inner)
        else:
            raise ts.error("expected name after '.'")
    return expr


def _primary(ts: TokenStream) -> S.Src:
    tok = ts.peek()
    if tok.kind == "IDENT":
        ts.next()
        return S.Ident(tok.text, tok.line, tok.col)
    if ts.accept("this"):
        return S.ThisRef()
    if ts.accept("true"):
        return S.BoolLit(True)
    if ts.accept("false"):
        return S.BoolLit(False)
    if ts.accept("("):
        inner = parse_expr(ts)
        ts.expect(")")
        return inner
    raise ts.error("expected expression")


# -- declarations ---------------------------------------------------------------


def _interval(ts: TokenStream) -> S.Interval:
    lo = int(ts.next().text)
    if not ts.accept(".."):
        return S.Interval(lo, lo)
    if ts.accept("*"):
        return S.Interval(lo, None)
    tok = ts.peek()
    if tok.kind != "NUM":
        raise ts.error("expected upper bound")
    ts.next()
    hi = int(tok.text)
    if hi < lo:
        raise ParseError(f"empty interval {lo}..{hi}", tok.line, tok.col)
    return S.Interval(lo, hi)


def _constraints(ts: TokenStream) -> List[S.ConstraintDecl]:
    out = []
    while not ts.done():
        start = ts.peek()
        is_assert = ts.accept("assert") is not None
        ts.expect("[")
        body = parse_expr(ts)
        ts.expect("]")
        out.append(S.ConstraintDecl(is_assert, body, start.line, start.col))
    return out


def _declaration(ts: TokenStream) -> Tuple[S.ClaferDecl, List[S.ConstraintDecl]]:
    first = ts.peek()
    flags = {"abstract": False, "final": False, "initial": False}
    while ts.peek().kind == "KW" and ts.peek().text in flags:
        word = ts.next().text
        if flags[word]:
            raise ParseError(f"repeated modifier {word!r}", first.line, first.col)
        flags[word] = True
    gcard = None
    if ts.peek().kind == "NUM":
        gcard = _interval(ts)
    elif ts.peek().kind == "KW" and ts.peek().text in S.GCARD_KEYWORDS:
        gcard = ts.next().text
    name_tok = ts.expect_ident()
    super_name = None
    if ts.accept(":"):
        super_name = ts.expect_ident().text
    ref = None
    tok = ts.peek()
    if tok.kind == "OP" and tok.text in ("->", "->>"):
        ts.next()
        ref = S.Reference("SET" if tok.text == "->" else "BAG", ts.expect_ident().text)
    cmult = None
    tok = ts.peek()
    if tok.kind == "NUM":
        cmult = _interval(ts)
    elif tok.kind == "OP" and tok.text in S.CMULT_KEYWORDS:
        ts.next()
        cmult = tok.text
    init = None
    tok = ts.peek()
    if tok.kind == "OP" and tok.text in ("=", ":="):
        ts.next()
        init = S.Initializer("CONSTANT" if tok.text == "=" else "DEFAULT", _union(ts))
    inline = _constraints(ts)
    decl = S.ClaferDecl(
        name=name_tok.text, is_abstract=flags["abstract"], is_final=flags["final"],
        is_initial=flags["initial"], gcard=gcard, super_name=super_name, ref=ref,
        cmult=cmult, initializer=init, line=first.line, col=first.col,
    )
    return decl, inline


class _Builder:
    """Mutable scaffolding for one declaration while its children are read."""

    def __init__(self, decl: Optional[S.ClaferDecl], indent: int):
        self.decl = decl
        self.indent = indent
        self.children: List[_Builder] = []
        self.constraints: List[S.ConstraintDecl] = []
        self.child_indent: Optional[int] = None

    def freeze(self) -> S.ClaferDecl:
        import dataclasses
        return dataclasses.replace(
            self.decl,
            children=tuple(c.freeze() for c in self.children),
            constraints=tuple(self.constraints),
        )


def parse_model(text: str) -> S.SourceModel:
    """Parse model text into a :class:`SourceModel` with no defaults applied."""
    root = _Builder(None, -1)
    root.child_indent = 0
    stack = [root]
    for ll in logical_lines(text):
        while ll.indent <= stack[-1].indent:
            stack.pop()
        parent = stack[-1]
        if parent.child_indent is None:
            parent.child_indent = ll.indent
        elif ll.indent != parent.child_indent:
            raise IndentError("indentation does not match any enclosing level", ll.line, ll.indent + 1)
        ts = TokenStream(ll.tokens, ll.line)
        if ts.at("[") or ts.at("assert"):
            parent.constraints.extend(_constraints(ts))
            continue
        decl, inline = _declaration(ts)
        if not ts.done():
            raise ts.error("unexpected token in declaration")
        node = _Builder(decl, ll.indent)
        node.constraints.extend(inline)
        parent.children.append(node)
        stack.append(node)
    return S.SourceModel(
        decls=tuple(c.freeze() for c in root.children),
        constraints=tuple(root.constraints),
    )


def parse_constraint(text: str) -> S.Src:
    """Parse a standalone formula such as a ``--goal`` argument."""
    ts = TokenStream(tokenize_line(text, 1))
    body = parse_expr(ts)
    if not ts.done():
        raise ts.error("unexpected trailing input")
    return body
