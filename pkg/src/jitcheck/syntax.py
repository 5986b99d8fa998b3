"""Abstract syntax, parser and pretty-printer for the core language.

Concrete syntax::

    def A.m(x) e end        type A.m : T -> T       if e then e else e end
    A.new    e.m(e)    x = e    e ; e    nil    self

Newlines separate statements just like ``;``. ``#`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

__all__ = [
    "Span", "Nil", "Instance", "Var", "SelfRef", "Assign", "Seq", "New", "If",
    "Call", "Def", "TypeDecl", "Premethod", "NilType", "ClassType", "MethType",
    "Expr", "Value", "ValType", "NIL", "NIL_TYPE", "ParseError", "PrettyError",
    "parse", "parse_type", "pretty", "show", "show_type", "is_value",
    "KEYWORDS",
]


@dataclass(frozen=True, slots=True)
class Span:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


def _span():
    return field(default=None, compare=False, repr=False)


# -- value types ----------------------------------------------------------

@dataclass(frozen=True, slots=True)
class NilType:
    def __str__(self) -> str:
        return "nil"


@dataclass(frozen=True, slots=True)
class ClassType:
    name: str

    def __str__(self) -> str:
        return self.name


ValType = Union[NilType, ClassType]
NIL_TYPE = NilType()


@dataclass(frozen=True, slots=True)
class MethType:
    dom: ValType
    rng: ValType

    def __str__(self) -> str:
        return f"{self.dom} -> {self.rng}"


# -- expressions ----------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Nil:
    span: Optional[Span] = _span()


@dataclass(frozen=True, slots=True)
class Instance:
    """A run-time object ``[A]``; never produced by the parser."""
    cls: str
    span: Optional[Span] = _span()


@dataclass(frozen=True, slots=True)
class Var:
    name: str
    span: Optional[Span] = _span()


@dataclass(frozen=True, slots=True)
class SelfRef:
    span: Optional[Span] = _span()


@dataclass(frozen=True, slots=True)
class Assign:
    name: str
    value: "Expr"
    span: Optional[Span] = _span()


@dataclass(frozen=True, slots=True)
class Seq:
    first: "Expr"
    second: "Expr"
    span: Optional[Span] = _span()


@dataclass(frozen=True, slots=True)
class New:
    cls: str
    span: Optional[Span] = _span()


@dataclass(frozen=True, slots=True)
class If:
    cond: "Expr"
    then: "Expr"
    orelse: "Expr"
    span: Optional[Span] = _span()


@dataclass(frozen=True, slots=True)
class Call:
    recv: "Expr"
    meth: str
    arg: "Expr"
    span: Optional[Span] = _span()


@dataclass(frozen=True, slots=True)
class Premethod:
    param: str
    body: "Expr"


@dataclass(frozen=True, slots=True)
class Def:
    cls: str
    meth: str
    premethod: Premethod
    span: Optional[Span] = _span()


@dataclass(frozen=True, slots=True)
class TypeDecl:
    cls: str
    meth: str
    mtype: MethType
    span: Optional[Span] = _span()


Expr = Union[Nil, Instance, Var, SelfRef, Assign, Seq, New, If, Call, Def, TypeDecl]
Value = Union[Nil, Instance]
NIL = Nil()


def is_value(e: Expr) -> bool:
    return type(e) is Nil or type(e) is Instance


# -- lexer ----------------------------------------------------------------

KEYWORDS = frozenset({"def", "end", "type", "if", "then", "else", "nil", "self"})

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<arrow>->)
  | (?P<punct>[.;()=:])
  | (?P<cid>[A-Z][A-Za-z0-9_]*)
  | (?P<lid>[a-z][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True, slots=True)
class Token:
    kind: str  # 'CID', 'LID', a keyword, a punctuation string, or 'EOF'
    text: str
    line: int
    col: int
    nl_before: bool

    @property
    def span(self) -> Span:
        return Span(self.line, self.col)


class ParseError(Exception):
    """Malformed source; carries position and the set of acceptable tokens."""

    def __init__(self, line: int, col: int, expected, found: str):
        self.line = line
        self.col = col
        self.expected = frozenset(expected)
        self.found = found
        exp = ", ".join(sorted(self.expected))
        super().__init__(f"{line}:{col}: expected one of {{{exp}}}, found {found!r}")


def _tokenize(src: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    nl = False
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(line, col, {"token"}, src[pos])
        kind = m.lastgroup
        text = m.group()
        if kind == "nl":
            nl = True
            line += 1
            line_start = m.end()
        elif kind in ("ws", "comment"):
            pass
        else:
            if kind == "lid":
                kind = text if text in KEYWORDS else "LID"
            elif kind == "cid":
                kind = "CID"
            else:
                kind = text
            tokens.append(Token(kind, text, line, col, nl))
            nl = False
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1, nl))
    return tokens


# -- parser ---------------------------------------------------------------

# Tokens that may begin a statement.
_STMT_START = frozenset({"def", "type", "if", "nil", "self", "LID", "CID", "("})


class _Parser:
    def __init__(self, src: str):
        self.toks = _tokenize(src)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def fail(self, expected) -> ParseError:
        t = self.tok
        return ParseError(t.line, t.col, expected, t.text or "end of input")

    def expect(self, kind: str) -> Token:
        t = self.tok
        if t.kind != kind:
            raise self.fail({kind})
        self.i += 1
        return t

    def program(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "EOF":
            raise self.fail({";", "newline", "end of input"})
        return e

    def expr(self) -> Expr:
        # seq := stmt ((";" | NEWLINE) stmt)*, right-associated
        stmts = [self.stmt()]
        while True:
            t = self.tok
            if t.kind == ";":
                self.i += 1
                stmts.append(self.stmt())
            elif t.nl_before and t.kind in _STMT_START:
                stmts.append(self.stmt())
            else:
                break
        e = stmts[-1]
        for s in reversed(stmts[:-1]):
            e = Seq(s, e, s.span)
        return e

    def stmt(self) -> Expr:
        t = self.tok
        k = t.kind
        if k == "def":
            self.i += 1
            cls = self.expect("CID").text
            self.expect(".")
            meth = self.expect("LID").text
            self.expect("(")
            param = self.expect("LID").text
            self.expect(")")
            body = self.expr()
            self.expect("end")
            return Def(cls, meth, Premethod(param, body), t.span)
        if k == "type":
            self.i += 1
            cls = self.expect("CID").text
            self.expect(".")
            meth = self.expect("LID").text
            self.expect(":")
            dom = self.typ()
            self.expect("->")
            rng = self.typ()
            return TypeDecl(cls, meth, MethType(dom, rng), t.span)
        if k == "if":
            self.i += 1
            cond = self.expr()
            self.expect("then")
            then = self.expr()
            self.expect("else")
            orelse = self.expr()
            self.expect("end")
            return If(cond, then, orelse, t.span)
        if k == "LID" and self.peek().kind == "=":
            self.i += 2
            return Assign(t.text, self.stmt(), t.span)
        if k in _STMT_START:
            return self.postfix()
        raise self.fail(_STMT_START)

    def postfix(self) -> Expr:
        e = self.primary()
        while self.tok.kind == ".":
            dot = self.tok
            self.i += 1
            meth = self.expect("LID").text
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            e = Call(e, meth, arg, dot.span)
        return e

    def primary(self) -> Expr:
        t = self.tok
        k = t.kind
        self.i += 1
        if k == "nil":
            return Nil(t.span)
        if k == "self":
            return SelfRef(t.span)
        if k == "LID":
            return Var(t.text, t.span)
        if k == "CID":
            self.expect(".")
            n = self.tok
            if n.kind != "LID" or n.text != "new":
                raise self.fail({"new"})
            self.i += 1
            return New(t.text, t.span)
        if k == "(":
            e = self.expr()
            self.expect(")")
            return e
        self.i -= 1
        raise self.fail({"nil", "self", "LID", "CID", "("})

    def typ(self) -> ValType:
        t = self.tok
        if t.kind == "CID":
            self.i += 1
            return ClassType(t.text)
        if t.kind == "nil":
            self.i += 1
            return NIL_TYPE
        raise self.fail({"CID", "nil"})


def parse(source: str) -> Expr:
    """Parse a whole program. Raises :class:`ParseError` on malformed input."""
    return _Parser(source).program()


def parse_type(source: str) -> MethType:
    """Parse a method type such as ``"nil -> A"``."""
    p = _Parser(source)
    dom = p.typ()
    p.expect("->")
    rng = p.typ()
    p.expect("EOF")
    return MethType(dom, rng)


# -- printing -------------------------------------------------------------

class PrettyError(ValueError):
    """Raised when asked to print a run-time-only node as source."""


# precedence levels: 0 = seq, 1 = stmt, 2 = postfix/primary
def _level(e: Expr) -> int:
    t = type(e)
    if t is Seq:
        return 0
    if t in (Assign, If, Def, TypeDecl):
        return 1
    return 2


def _print(e: Expr, strict: bool) -> str:
    parts: list[str] = []
    _emit(e, strict, parts)
    return "".join(parts)


def _wrap(e: Expr, level: int, strict: bool, out: list) -> None:
    if _level(e) < level:
        out.append("(")
        _emit(e, strict, out)
        out.append(")")
    else:
        _emit(e, strict, out)


def _emit(e: Expr, strict: bool, out: list) -> None:
    t = type(e)
    if t is Nil:
        out.append("nil")
    elif t is Instance:
        if strict:
            raise PrettyError(f"run-time object [{e.cls}] has no source form")
        out.append(f"[{e.cls}]")
    elif t is Var:
        out.append(e.name)
    elif t is SelfRef:
        out.append("self")
    elif t is New:
        out.append(f"{e.cls}.new")
    elif t is Seq:
        _wrap(e.first, 1, strict, out)
        out.append("; ")
        _emit(e.second, strict, out)
    elif t is Assign:
        out.append(f"{e.name} = ")
        _wrap(e.value, 1, strict, out)
    elif t is If:
        out.append("if ")
        _emit(e.cond, strict, out)
        out.append(" then ")
        _emit(e.then, strict, out)
        out.append(" else ")
        _emit(e.orelse, strict, out)
        out.append(" end")
    elif t is Call:
        _wrap(e.recv, 2, strict, out)
        out.append(f".{e.meth}(")
        _emit(e.arg, strict, out)
        out.append(")")
    elif t is Def:
        out.append(f"def {e.cls}.{e.meth}({e.premethod.param}) ")
        _emit(e.premethod.body, strict, out)
        out.append(" end")
    elif t is TypeDecl:
        out.append(f"type {e.cls}.{e.meth} : {e.mtype}")
    else:
        raise TypeError(f"not an expression: {e!r}")


def pretty(e: Expr) -> str:
    """Render source text that parses back to ``e``."""
    return _print(e, strict=True)


def show(e: Expr) -> str:
    """Like :func:`pretty` but renders run-time objects as ``[A]``."""
    return _print(e, strict=False)


def show_type(t) -> str:
    return str(t)


def subterms(e: Expr) -> Iterator[Expr]:
    """Pre-order walk, descending into method bodies."""
    yield e
    t = type(e)
    if t is Assign:
        yield from subterms(e.value)
    elif t is Seq:
        yield from subterms(e.first)
        yield from subterms(e.second)
    elif t is If:
        yield from subterms(e.cond)
        yield from subterms(e.then)
        yield from subterms(e.orelse)
    elif t is Call:
        yield from subterms(e.recv)
        yield from subterms(e.arg)
    elif t is Def:
        yield from subterms(e.premethod.body)
