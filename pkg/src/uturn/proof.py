"""Triples, derivation trees and the rule checker shared by both logics.

The two proof systems agree on every structural rule; they differ only in
their axioms for atoms and in the direction of the consequence rule. A
``Logic`` object carries those differences and :func:`check_derivation`
does the rest.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .assertions import (
    Assertion, FALSE, extension, equivalent, is_empty,
)
from .lang import Atom, Choice, RCmd, Seq, Star, pretty_print
from .state import Flag, StateSet, Universe


@dataclass(frozen=True)
class Triple:
    pre: Assertion
    cmd: RCmd
    post: Assertion


@dataclass(frozen=True, eq=False)
class Derivation:
    """A rule instance concluding ``triple`` from ``children``.

    Compared by identity: engines share subtrees, and checkers memoize on
    node identity.
    """

    rule: str
    triple: Triple
    children: tuple["Derivation", ...] = ()

    @property
    def pre(self) -> Assertion:
        return self.triple.pre

    @property
    def cmd(self) -> RCmd:
        return self.triple.cmd

    @property
    def post(self) -> Assertion:
        return self.triple.post

    def at(self, path) -> "Derivation":
        node = self
        for i in path:
            node = node.children[i]
        return node

    def walk(self, path=()):
        """Yield ``(path, node)`` in preorder (shared subtrees repeat)."""
        yield path, self
        for i, c in enumerate(self.children):
            yield from c.walk(path + (i,))

    def rules(self) -> set[str]:
        seen: set[int] = set()
        out: set[str] = set()
        stack = [self]
        while stack:
            n = stack.pop()
            if id(n) in seen:
                continue
            seen.add(id(n))
            out.add(n.rule)
            stack.extend(n.children)
        return out


class DerivationError(Exception):
    """A node does not instantiate its rule."""

    def __init__(self, message: str, path=(), rule: str = ""):
        where = "/".join(str(i) for i in path) or "root"
        super().__init__(f"{rule} at {where}: {message}")
        self.message = message
        self.path = tuple(path)
        self.rule = rule


def show_path(path) -> str:
    return "/".join(str(i) for i in path) or "root"


@dataclass
class Logic:
    """Per-logic rule table.

    ``axioms`` maps an atom rule name to a function ``(cmd, triple, u)`` that
    raises ``ValueError`` when the triple is not an instance of the axiom.
    ``cons_ok(node, child, u)`` decides the consequence side conditions.
    """

    prefix: str
    axioms: dict[str, Callable]
    cons_ok: Callable
    cons_text: str
    extra: dict[str, Callable] = field(default_factory=dict)

    def name(self, base: str) -> str:
        return self.prefix + base


def require_flag(p: Assertion, flag: Flag, u: Universe, what: str) -> None:
    if not extension(p, u) <= StateSet.of_flag(u, flag):
        raise ValueError(f"{what} must contain only {flag} states")


def _same_cmd(a: RCmd, b: RCmd) -> bool:
    return a is b or a == b


def check_derivation(d: Derivation, u: Universe, logic: Logic) -> Triple:
    """Check every node of ``d``; return the root triple or raise ``DerivationError``."""
    done: set[int] = set()
    _check(d, u, logic, (), done)
    return d.triple


def _check(d: Derivation, u: Universe, logic: Logic, path, done: set[int]) -> None:
    if id(d) in done:
        return
    if not isinstance(d, Derivation):
        raise DerivationError("not a derivation node", path)
    for i, c in enumerate(d.children):
        _check(c, u, logic, path + (i,), done)
    try:
        _check_node(d, u, logic)
    except DerivationError:
        raise
    except ValueError as e:
        raise DerivationError(str(e), path, d.rule) from None
    done.add(id(d))


def _arity(d: Derivation, n: int) -> None:
    if len(d.children) != n:
        raise ValueError(f"expected {n} premises, found {len(d.children)}")


def _equiv(p, q, u, what: str) -> None:
    if not equivalent(p, q, u):
        raise ValueError(f"{what} do not denote the same states")


def _check_node(d: Derivation, u: Universe, logic: Logic) -> None:
    t = d.triple
    base = d.rule[len(logic.prefix):] if d.rule.startswith(logic.prefix) else None
    if base is None:
        raise ValueError(f"unknown rule {d.rule!r}")
    r = t.cmd
    if d.rule in logic.axioms:
        _arity(d, 0)
        if not isinstance(r, Atom):
            raise ValueError("axiom applied to a non-atomic command")
        logic.axioms[d.rule](r.cmd, t, u)
        return
    if d.rule in logic.extra:
        logic.extra[d.rule](d, u)
        return
    if base == "ErId":
        _arity(d, 0)
        require_flag(t.pre, Flag.ER, u, "pre")
        _equiv(t.pre, t.post, u, "pre and post")
    elif base == "Empty":
        _arity(d, 0)
        if not is_empty(t.pre, u):
            raise ValueError("pre is not false")
        if not is_empty(t.post, u):
            raise ValueError("post is not false")
    elif base == "Disj":
        _arity(d, 2)
        c1, c2 = d.children
        if not (_same_cmd(c1.cmd, r) and _same_cmd(c2.cmd, r)):
            raise ValueError("premises are about a different command")
        if extension(t.pre, u) != extension(c1.pre, u) | extension(c2.pre, u):
            raise ValueError("pre is not the disjunction of the premise pres")
        if extension(t.post, u) != extension(c1.post, u) | extension(c2.post, u):
            raise ValueError("post is not the disjunction of the premise posts")
    elif base == "Cons":
        _arity(d, 1)
        c = d.children[0]
        if not _same_cmd(c.cmd, r):
            raise ValueError("premise is about a different command")
        logic.cons_ok(t, c.triple, u)
    elif base == "Seq":
        _arity(d, 2)
        if not isinstance(r, Seq):
            raise ValueError("command is not a sequence")
        c1, c2 = d.children
        if not (_same_cmd(c1.cmd, r.first) and _same_cmd(c2.cmd, r.second)):
            raise ValueError("premises do not match the two halves of the sequence")
        _equiv(t.pre, c1.pre, u, "pre and first premise pre")
        _equiv(c1.post, c2.pre, u, "middle assertions")
        _equiv(t.post, c2.post, u, "post and second premise post")
    elif base in ("ChoiceL", "ChoiceR"):
        _arity(d, 1)
        if not isinstance(r, Choice):
            raise ValueError("command is not a choice")
        branch = r.left if base == "ChoiceL" else r.right
        c = d.children[0]
        if not _same_cmd(c.cmd, branch):
            raise ValueError("premise is not about the selected branch")
        _equiv(t.pre, c.pre, u, "pres")
        _equiv(t.post, c.post, u, "posts")
    elif base == "Iter0":
        _arity(d, 0)
        if not isinstance(r, Star):
            raise ValueError("command is not an iteration")
        _equiv(t.pre, t.post, u, "pre and post")
    elif base == "Unroll":
        _arity(d, 1)
        if not isinstance(r, Star):
            raise ValueError("command is not an iteration")
        c = d.children[0]
        if not _same_cmd(c.cmd, Seq(r, r.body)):
            raise ValueError("premise is not about r*; r")
        _equiv(t.pre, c.pre, u, "pres")
        _equiv(t.post, c.post, u, "posts")
    else:
        raise ValueError(f"unknown rule {d.rule!r}")


def count_nodes(d: Derivation) -> int:
    return sum(1 for _ in d.walk())


def format_tree(d: Derivation, u: Universe | None = None, indent: str = "") -> str:
    from .assertions import show
    lines = [f"{indent}{d.rule}  {show(d.pre, u)}  |  {pretty_print(d.cmd)}  |  {show(d.post, u)}"]
    for c in d.children:
        lines.append(format_tree(c, u, indent + "  "))
    return "\n".join(lines)


EMPTY = FALSE
