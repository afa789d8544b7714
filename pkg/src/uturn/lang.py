"""Regular commands: abstract syntax, concrete grammar, parser and printer.

The concrete syntax is a small while-language::

    vars x y;
    x := 10;
    while (x > 0) { x := x - 1 };
    error()

``if`` and ``while`` are desugared into choice, assume and iteration while
parsing, so everything downstream only sees the four regular-command
constructors.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Union


class ParseError(Exception):
    """Syntax error with a 1-based line/column position."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class UndeclaredVariable(ParseError):
    pass


# ---------------------------------------------------------------------------
# arithmetic and boolean expressions


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - *
    lhs: "AExp"
    rhs: "AExp"


AExp = Union[IntLit, Var, BinOp]


@dataclass(frozen=True)
class BFalse:
    pass


@dataclass(frozen=True)
class BNot:
    arg: "BExp"


@dataclass(frozen=True)
class BAnd:
    lhs: "BExp"
    rhs: "BExp"


@dataclass(frozen=True)
class Cmp:
    op: str  # one of = != <= <
    lhs: AExp
    rhs: AExp


BExp = Union[BFalse, BNot, BAnd, Cmp]

ARITH_OPS = ("+", "-", "*")
CORE_CMP_OPS = ("=", "!=", "<=", "<")

FALSE_B = BFalse()
TRUE_B = BNot(FALSE_B)


def b_or(lhs: BExp, rhs: BExp) -> BExp:
    return BNot(BAnd(BNot(lhs), BNot(rhs)))


def b_implies(lhs: BExp, rhs: BExp) -> BExp:
    return BNot(BAnd(lhs, BNot(rhs)))


def make_cmp(op: str, lhs: AExp, rhs: AExp) -> Cmp:
    """Build a comparison, folding ``>=``/``>`` into the core operators by swapping."""
    if op in ("==",):
        op = "="
    if op == "≠":
        op = "!="
    if op in ("≤",):
        op = "<="
    if op in (">=", "≥"):
        return Cmp("<=", rhs, lhs)
    if op == ">":
        return Cmp("<", rhs, lhs)
    if op not in CORE_CMP_OPS:
        raise ValueError(f"unknown comparison {op!r}")
    return Cmp(op, lhs, rhs)


# ---------------------------------------------------------------------------
# commands


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Assign:
    var: str
    expr: AExp


@dataclass(frozen=True)
class Assume:
    cond: BExp


@dataclass(frozen=True)
class Nondet:
    var: str


@dataclass(frozen=True)
class Error:
    pass


ACmd = Union[Skip, Assign, Assume, Nondet, Error]


@dataclass(frozen=True)
class Atom:
    cmd: ACmd


@dataclass(frozen=True)
class Seq:
    first: "RCmd"
    second: "RCmd"


@dataclass(frozen=True)
class Choice:
    left: "RCmd"
    right: "RCmd"


@dataclass(frozen=True)
class Star:
    body: "RCmd"


RCmd = Union[Atom, Seq, Choice, Star]


def seq_all(cmds: list[RCmd]) -> RCmd:
    """Right-fold a nonempty statement list into binary ``Seq`` nodes."""
    out = cmds[-1]
    for c in reversed(cmds[:-1]):
        out = Seq(c, out)
    return out


def if_then_else(cond: BExp, then: RCmd, other: RCmd) -> RCmd:
    return Choice(Seq(Atom(Assume(cond)), then), Seq(Atom(Assume(BNot(cond))), other))


def while_loop(cond: BExp, body: RCmd) -> RCmd:
    return Seq(Star(Seq(Atom(Assume(cond)), body)), Atom(Assume(BNot(cond))))


@dataclass(frozen=True)
class Program:
    """A parsed source file: declared variables (in order) plus the command."""

    vars: tuple[str, ...]
    cmd: RCmd
    literals: tuple[int, ...] = field(default=(), compare=False)


# ---------------------------------------------------------------------------
# free variables


def aexp_vars(a: AExp) -> frozenset[str]:
    if isinstance(a, IntLit):
        return frozenset()
    if isinstance(a, Var):
        return frozenset((a.name,))
    return aexp_vars(a.lhs) | aexp_vars(a.rhs)


def bexp_vars(b: BExp) -> frozenset[str]:
    if isinstance(b, BFalse):
        return frozenset()
    if isinstance(b, BNot):
        return bexp_vars(b.arg)
    if isinstance(b, BAnd):
        return bexp_vars(b.lhs) | bexp_vars(b.rhs)
    return aexp_vars(b.lhs) | aexp_vars(b.rhs)


def acmd_vars(c: ACmd) -> frozenset[str]:
    if isinstance(c, Assign):
        return frozenset((c.var,)) | aexp_vars(c.expr)
    if isinstance(c, Assume):
        return bexp_vars(c.cond)
    if isinstance(c, Nondet):
        return frozenset((c.var,))
    return frozenset()


def free_vars(r: RCmd) -> frozenset[str]:
    """Every variable read or written anywhere in ``r``."""
    if isinstance(r, Atom):
        return acmd_vars(r.cmd)
    if isinstance(r, Seq):
        return free_vars(r.first) | free_vars(r.second)
    if isinstance(r, Choice):
        return free_vars(r.left) | free_vars(r.right)
    return free_vars(r.body)


def aexp_literals(a: AExp) -> Iterator[int]:
    if isinstance(a, IntLit):
        yield a.value
    elif isinstance(a, BinOp):
        yield from aexp_literals(a.lhs)
        yield from aexp_literals(a.rhs)


def bexp_literals(b: BExp) -> Iterator[int]:
    if isinstance(b, BNot):
        yield from bexp_literals(b.arg)
    elif isinstance(b, BAnd):
        yield from bexp_literals(b.lhs)
        yield from bexp_literals(b.rhs)
    elif isinstance(b, Cmp):
        yield from aexp_literals(b.lhs)
        yield from aexp_literals(b.rhs)


def literals(r: RCmd) -> Iterator[int]:
    if isinstance(r, Atom):
        c = r.cmd
        if isinstance(c, Assign):
            yield from aexp_literals(c.expr)
        elif isinstance(c, Assume):
            yield from bexp_literals(c.cond)
    elif isinstance(r, Seq):
        yield from literals(r.first)
        yield from literals(r.second)
    elif isinstance(r, Choice):
        yield from literals(r.left)
        yield from literals(r.right)
    else:
        yield from literals(r.body)


# ---------------------------------------------------------------------------
# printing

_PREC = {"+": 1, "-": 1, "*": 2}


def show_aexp(a: AExp) -> str:
    if isinstance(a, IntLit):
        return str(a.value)
    if isinstance(a, Var):
        return a.name
    p = _PREC[a.op]
    lhs = show_aexp(a.lhs)
    rhs = show_aexp(a.rhs)
    if isinstance(a.lhs, BinOp) and _PREC[a.lhs.op] < p:
        lhs = f"({lhs})"
    if isinstance(a.rhs, BinOp) and _PREC[a.rhs.op] <= p:
        rhs = f"({rhs})"
    return f"{lhs} {a.op} {rhs}"


def show_bexp(b: BExp) -> str:
    if isinstance(b, BFalse):
        return "false"
    if b == TRUE_B:
        return "true"
    if isinstance(b, BNot):
        return f"not {_bexp_atomic(b.arg)}"
    if isinstance(b, BAnd):
        rhs = show_bexp(b.rhs) if not isinstance(b.rhs, BAnd) else f"({show_bexp(b.rhs)})"
        return f"{_bexp_atomic(b.lhs, allow_and=True)} and {rhs}"
    return f"{show_aexp(b.lhs)} {b.op} {show_aexp(b.rhs)}"


def _bexp_atomic(b: BExp, allow_and: bool = False) -> str:
    s = show_bexp(b)
    if isinstance(b, Cmp) or isinstance(b, BFalse) or b == TRUE_B:
        return s if not isinstance(b, Cmp) else f"({s})"
    if isinstance(b, BAnd) and allow_and:
        return s
    if isinstance(b, BNot):
        return s
    return f"({s})"


def show_acmd(c: ACmd) -> str:
    if isinstance(c, Skip):
        return "skip"
    if isinstance(c, Assign):
        return f"{c.var} := {show_aexp(c.expr)}"
    if isinstance(c, Assume):
        return f"assume ({show_bexp(c.cond)})"
    if isinstance(c, Nondet):
        return f"{c.var} := nondet()"
    return "error()"


def pretty_print(r: RCmd) -> str:
    """Render ``r`` in the concrete grammar so that parsing gives ``r`` back."""
    if isinstance(r, Atom):
        return show_acmd(r.cmd)
    if isinstance(r, Seq):
        first = pretty_print(r.first)
        if isinstance(r.first, Seq):
            first = f"{{ {first} }}"
        return f"{first}; {pretty_print(r.second)}"
    if isinstance(r, Choice):
        return f"choice {{ {pretty_print(r.left)} }} or {{ {pretty_print(r.right)} }}"
    return f"iter {{ {pretty_print(r.body)} }}"


def pretty_program(r: RCmd, vars: tuple[str, ...] | list[str]) -> str:
    return f"vars {' '.join(vars)}; {pretty_print(r)}"


def show_cmd_short(r: RCmd, width: int = 60) -> str:
    s = pretty_print(r)
    return s if len(s) <= width else s[: width - 3] + "..."


# ---------------------------------------------------------------------------
# tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|//[^\n]*)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*'*)
  | (?P<op>:=|==|!=|<=|>=|=>|&&|\|\||[≠≤≥¬∧∨]|[-+*()<>=!{};:.,?])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # num, ident, op, eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        tok_text = m.group()
        if kind != "ws":
            tokens.append(Token(kind, tok_text, line, pos - line_start + 1))
        newlines = tok_text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + tok_text.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


KEYWORDS = {
    "vars", "skip", "nondet", "assume", "error", "if", "else", "while",
    "choice", "or", "iter", "and", "not", "true", "false", "exists", "ok", "er",
}

_CMP_TOKENS = {"=", "==", "!=", "≠", "<", "<=", "≤", ">", ">=", "≥"}


class _Parser:
    """Recursive-descent parser shared by programs and assertions."""

    def __init__(self, text: str, declared: frozenset[str] | None = None):
        self.tokens = tokenize(text)
        self.pos = 0
        self.declared = declared
        self.literals: list[int] = []

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in ("op", "ident") and t.text in texts

    def fail(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        where = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ParseError(f"{message} at {where}", tok.line, tok.col)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        t = self.tok
        self.pos += 1
        return t

    def accept(self, *texts: str) -> bool:
        if self.at(*texts):
            self.pos += 1
            return True
        return False

    def ident(self) -> str:
        t = self.tok
        if t.kind != "ident" or t.text in KEYWORDS:
            self.fail("expected identifier")
        self.pos += 1
        return t.text

    def use_var(self, name: str, tok: Token, bound: frozenset[str] = frozenset()):
        if self.declared is not None and name not in self.declared and name not in bound:
            raise UndeclaredVariable(f"undeclared variable {name!r}", tok.line, tok.col)

    # -- arithmetic
    def aexp(self, bound: frozenset[str] = frozenset()) -> AExp:
        lhs = self.term(bound)
        while self.at("+", "-"):
            op = self.tok.text
            self.pos += 1
            lhs = BinOp(op, lhs, self.term(bound))
        return lhs

    def term(self, bound) -> AExp:
        lhs = self.factor(bound)
        while self.at("*"):
            self.pos += 1
            lhs = BinOp("*", lhs, self.factor(bound))
        return lhs

    def factor(self, bound) -> AExp:
        t = self.tok
        if t.kind == "num":
            self.pos += 1
            self.literals.append(int(t.text))
            return IntLit(int(t.text))
        if self.at("-"):
            self.pos += 1
            if self.tok.kind == "num":
                v = -int(self.tok.text)
                self.pos += 1
                self.literals.append(v)
                return IntLit(v)
            return BinOp("-", IntLit(0), self.factor(bound))
        if self.at("("):
            self.pos += 1
            a = self.aexp(bound)
            self.expect(")")
            return a
        if t.kind == "ident" and t.text not in KEYWORDS:
            name = self.ident()
            self.use_var(name, t, bound)
            return Var(name)
        self.fail("expected arithmetic expression")

    # -- boolean (program level: derived forms normalized)
    def bexp(self) -> BExp:
        lhs = self.b_or()
        if self.accept("=>"):
            return b_implies(lhs, self.bexp())
        return lhs

    def b_or(self) -> BExp:
        lhs = self.b_and()
        while self.accept("or", "||", "∨"):
            lhs = b_or(lhs, self.b_and())
        return lhs

    def b_and(self) -> BExp:
        lhs = self.b_unary()
        while self.accept("and", "&&", "∧"):
            lhs = BAnd(lhs, self.b_unary())
        return lhs

    def b_unary(self) -> BExp:
        if self.accept("not", "!", "¬"):
            return BNot(self.b_unary())
        if self.accept("true"):
            return TRUE_B
        if self.accept("false"):
            return FALSE_B
        if self.at("("):
            # either a parenthesized bexp or a parenthesized aexp starting a comparison
            save = self.pos
            self.pos += 1
            try:
                b = self.bexp()
                self.expect(")")
                if not self.tok.text in _CMP_TOKENS:
                    return b
            except ParseError:
                pass
            self.pos = save
        return self.comparison()

    def comparison(self, bound: frozenset[str] = frozenset()) -> Cmp:
        lhs = self.aexp(bound)
        if self.tok.text not in _CMP_TOKENS or self.tok.kind != "op":
            self.fail("expected comparison operator")
        op = self.tok.text
        self.pos += 1
        return make_cmp(op, lhs, self.aexp(bound))

    # -- commands
    def program(self) -> Program:
        declared: tuple[str, ...] = ()
        if self.at("vars"):
            self.pos += 1
            names = []
            while self.tok.kind == "ident" and self.tok.text not in KEYWORDS:
                names.append(self.ident())
            if not names:
                self.fail("expected at least one variable name")
            self.expect(";")
            if len(set(names)) != len(names):
                self.fail("duplicate variable declaration")
            declared = tuple(names)
            self.declared = frozenset(names)
        cmd = self.stmt()
        if self.tok.kind != "eof":
            self.fail("unexpected trailing input")
        if not declared:
            declared = tuple(sorted(free_vars(cmd)))
        return Program(declared, cmd, tuple(self.literals))

    def stmt(self) -> RCmd:
        items = [self.basic()]
        while self.accept(";"):
            if self.at("}") or self.tok.kind == "eof":
                break  # tolerate a trailing semicolon
            items.append(self.basic())
        return seq_all(items)

    def block(self) -> RCmd:
        self.expect("{")
        r = self.stmt()
        self.expect("}")
        return r

    def basic(self) -> RCmd:
        t = self.tok
        if self.accept("skip"):
            return Atom(Skip())
        if self.accept("error"):
            self.expect("(")
            self.expect(")")
            return Atom(Error())
        if self.accept("assume"):
            self.expect("(")
            b = self.bexp()
            self.expect(")")
            return Atom(Assume(b))
        if self.accept("if"):
            self.expect("(")
            b = self.bexp()
            self.expect(")")
            then = self.block()
            other = self.block() if self.accept("else") else Atom(Skip())
            return if_then_else(b, then, other)
        if self.accept("while"):
            self.expect("(")
            b = self.bexp()
            self.expect(")")
            return while_loop(b, self.block())
        if self.accept("choice"):
            left = self.block()
            self.expect("or")
            return Choice(left, self.block())
        if self.accept("iter"):
            return Star(self.block())
        if self.at("{"):
            return self.block()
        if t.kind == "ident" and t.text not in KEYWORDS:
            name = self.ident()
            self.use_var(name, t)
            self.expect(":=")
            if self.accept("nondet"):
                self.expect("(")
                self.expect(")")
                return Atom(Nondet(name))
            return Atom(Assign(name, self.aexp()))
        self.fail("expected statement")


def parse_source(text: str) -> Program:
    """Parse a whole source file, keeping the declared variable order."""
    return _Parser(text).program()


def parse_program(text: str) -> RCmd:
    return parse_source(text).cmd


def parse_aexp(text: str) -> AExp:
    p = _Parser(text)
    a = p.aexp()
    if p.tok.kind != "eof":
        p.fail("unexpected trailing input")
    return a


def parse_bexp(text: str) -> BExp:
    p = _Parser(text)
    b = p.bexp()
    if p.tok.kind != "eof":
        p.fail("unexpected trailing input")
    return b
