"""Judgments pairing a finished derivation in one logic with a triple of the other.

A U-Turn judgment carries a complete IL derivation of ``[P] r [Q]`` together
with a SIL triple ``<P'> r <Q'>`` that refines it. Turn-U is the mirror
image: a SIL derivation of ``<P> r <Q>`` with a refining IL triple. Both
share one node type, one checker and one validity test, parameterized by
a :class:`Direction`.

``run_uturn`` replays an IL derivation backward from a chosen subset of its
post; ``run_turnu`` replays a SIL derivation forward from a chosen subset of
its pre.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .assertions import (
    FALSE, Assertion, Tagged, binder_depth, compact, conj, disj, exists, extension,
    implies, is_empty, restrict, size, sp_atom, substitute,
)
from .il import check_il_derivation, il_valid
from .lang import Assign, Atom, Error, Nondet, RCmd
from .proof import Derivation, DerivationError, Triple
from .sil import check_sil_derivation, sil_valid
from .state import Flag, Universe


class AlgorithmPreconditionError(ValueError):
    """The target assertion handed to a replay algorithm is empty or too large."""


@dataclass(frozen=True)
class Judgment:
    """``base`` is the triple proved by the replayed derivation."""

    base: Triple
    pre: Assertion
    cmd: RCmd
    post: Assertion


@dataclass(frozen=True, eq=False)
class ReplayNode:
    """One rule instance; ``ref`` is the replayed node, found at ``ref_path``."""

    rule: str
    pre: Assertion
    post: Assertion
    ref: Derivation
    ref_path: tuple[int, ...] = ()
    children: tuple["ReplayNode", ...] = ()

    @property
    def cmd(self) -> RCmd:
        return self.ref.cmd

    @property
    def judgment(self) -> Judgment:
        return Judgment(self.ref.triple, self.pre, self.ref.cmd, self.post)

    def walk(self, path=()):
        yield path, self
        for i, c in enumerate(self.children):
            yield from c.walk(path + (i,))

    def rules(self) -> set[str]:
        return {n.rule for _, n in self.walk()}


UTurnDerivation = ReplayNode
TurnUDerivation = ReplayNode

UTURN_RULES = tuple("U" + n for n in (
    "Assign", "Nondet", "Assume", "Skip", "Error", "ErId", "Empty", "Disj", "Seq",
    "ChoiceL", "ChoiceR", "Iter0", "Unroll", "ConsIL", "ConsSIL",
))
TURNU_RULES = tuple("T" + n[1:] for n in UTURN_RULES)


@dataclass(frozen=True)
class Direction:
    prefix: str          # replay rule prefix
    base_prefix: str     # prefix of the replayed logic
    own_cons: str        # replay rule for a consequence step of the replayed logic
    other_cons: str      # replay rule for a consequence step of the refining logic
    check_base: Callable
    valid: Callable      # validity of the refining triple


UTURN = Direction("U", "IL", "UConsIL", "UConsSIL", check_il_derivation,
                  lambda t, u: sil_valid(t, u))
TURNU = Direction("T", "SIL", "TConsSIL", "TConsIL", check_sil_derivation,
                  lambda t, u: il_valid(t, u))


# ---------------------------------------------------------------------------
# validity


@dataclass(frozen=True)
class Verdict:
    failed: tuple[int, ...]

    def __bool__(self) -> bool:
        return not self.failed

    def __str__(self) -> str:
        if not self.failed:
            return "valid"
        return "invalid: condition " + ", ".join(map(str, self.failed)) + " failed"


CONDITIONS = {
    1: "the refining triple is valid",
    2: "the refining pre is contained in the pre",
    3: "the refining post is contained in the post",
    4: "the refining pre and post are both empty or both nonempty",
}


def _check_validity(j: Judgment, u: Universe, valid) -> Verdict:
    pre, post = extension(j.pre, u), extension(j.post, u)
    failed = []
    if not valid(Triple(j.pre, j.cmd, j.post), u):
        failed.append(1)
    if not pre <= extension(j.base.pre, u):
        failed.append(2)
    if not post <= extension(j.base.post, u):
        failed.append(3)
    if bool(pre) != bool(post):
        failed.append(4)
    return Verdict(tuple(failed))


def check_judgment_validity(j: Judgment, u: Universe) -> Verdict:
    """U-Turn judgment validity; the verdict lists the failed conditions."""
    return _check_validity(j, u, sil_valid)


def check_turnu_validity(j: Judgment, u: Universe) -> Verdict:
    return _check_validity(j, u, il_valid)


# ---------------------------------------------------------------------------
# checker


def check_uturn_derivation(ud: ReplayNode, u: Universe) -> Judgment:
    """Check the replayed IL tree and every U-Turn node; return the root judgment."""
    return _check_tree(ud, u, UTURN)


def check_turnu_derivation(td: ReplayNode, u: Universe) -> Judgment:
    return _check_tree(td, u, TURNU)


def _check_tree(root: ReplayNode, u: Universe, dn: Direction) -> Judgment:
    try:
        dn.check_base(root.ref, u)
    except DerivationError as e:
        raise DerivationError(f"replayed derivation rejected: {e}", (), root.rule) from None
    if root.ref_path != ():
        raise DerivationError("root must replay the root of the derivation", (), root.rule)
    done: set[int] = set()

    def go(n: ReplayNode, path):
        if id(n) in done:
            return
        for i, c in enumerate(n.children):
            go(c, path + (i,))
        try:
            _check_node(n, u, dn)
        except ValueError as e:
            raise DerivationError(str(e), path, n.rule) from None
        done.add(id(n))

    go(root, ())
    return root.judgment


def _need(cond: bool, message: str) -> None:
    if not cond:
        raise ValueError(message)


def _equiv(p, q, u, what):
    _need(extension(p, u) == extension(q, u), f"{what} do not denote the same states")


def _replays(n: ReplayNode, child: ReplayNode, i: int) -> None:
    _need(i < len(n.ref.children) and child.ref is n.ref.children[i]
          and child.ref_path == n.ref_path + (i,),
          f"premise {i} does not replay premise {i} of the replayed node")


def _check_node(n: ReplayNode, u: Universe, dn: Direction) -> None:
    rule = n.rule
    _need(rule.startswith(dn.prefix), f"unknown rule {rule!r}")
    base = rule[len(dn.prefix):]
    ref = n.ref
    P, Q = ref.pre, ref.post
    arity = {"Empty": 0, "Disj": 2, "Seq": 2, "ChoiceL": 1, "ChoiceR": 1, "Unroll": 1}
    if rule in (dn.own_cons, dn.other_cons):
        _need(len(n.children) == 1, "expected 1 premise")
    elif base in arity:
        _need(len(n.children) == arity[base], f"expected {arity[base]} premises")
    else:
        _need(not n.children, "expected no premises")

    if base == "Empty":
        _need(is_empty(n.pre, u) and is_empty(n.post, u), "pre and post must both be false")
        return
    if rule == dn.other_cons:
        c = n.children[0]
        _need(c.ref is ref and c.ref_path == n.ref_path,
              "premise must replay the same node")
        _check_other_cons(n, c, u, dn)
        return
    expected = dn.base_prefix + ("Cons" if rule == dn.own_cons else base)
    _need(ref.rule == expected,
          f"rule replays {expected} but the replayed node is {ref.rule}")
    if base in ("Disj", "Seq", "ChoiceL", "ChoiceR", "Unroll") or rule == dn.own_cons:
        for i, c in enumerate(n.children):
            _replays(n, c, i)
    if rule == dn.own_cons:
        c = n.children[0]
        _equiv(n.pre, c.pre, u, "pre and premise pre")
        _equiv(n.post, c.post, u, "post and premise post")
        if dn is UTURN:
            _need(implies(n.post, Q, u), "post does not imply the post of the replayed node")
        else:
            _need(implies(n.pre, P, u), "pre does not imply the pre of the replayed node")
        return
    if base == "Disj":
        c1, c2 = n.children
        _equiv(n.pre, disj(c1.pre, c2.pre), u, "pre and the premise pres")
        _equiv(n.post, disj(c1.post, c2.post), u, "post and the premise posts")
        return
    if base == "Seq":
        c1, c2 = n.children
        _equiv(n.pre, c1.pre, u, "pre and first premise pre")
        _equiv(c1.post, c2.pre, u, "middle assertions")
        _equiv(n.post, c2.post, u, "post and second premise post")
        return
    if base in ("ChoiceL", "ChoiceR", "Unroll"):
        c = n.children[0]
        _equiv(n.pre, c.pre, u, "pre and premise pre")
        _equiv(n.post, c.post, u, "post and premise post")
        return
    if base in ("Iter0", "ErId", "Skip", "Assume"):
        _equiv(n.pre, n.post, u, "pre and post")
        if dn is UTURN:
            _need(implies(n.post, Q, u), "post does not imply the post of the replayed node")
        else:
            _need(implies(n.pre, P, u), "pre does not imply the pre of the replayed node")
        return
    if base in ("Assign", "Nondet", "Error"):
        _need(isinstance(n.cmd, Atom), "command is not atomic")
        c = n.cmd.cmd
        if dn is UTURN:
            _need(implies(n.post, Q, u), "post does not imply the post of the replayed node")
            _equiv(n.pre, _uturn_atom(c, P, n.post), u, "pre and the backward replay of the post")
        else:
            _need(implies(n.pre, P, u), "pre does not imply the pre of the replayed node")
            _equiv(n.post, _turnu_atom(c, Q, n.pre), u, "post and the forward replay of the pre")
        return
    raise ValueError(f"unknown rule {rule!r}")


def _check_other_cons(n: ReplayNode, c: ReplayNode, u: Universe, dn: Direction) -> None:
    ref = n.ref
    if dn is UTURN:
        # the SIL pre may shrink to a nonempty part, the post may grow within Q
        _need(not is_empty(n.pre, u), "pre must not be false")
        _need(implies(n.pre, c.pre, u), "pre does not imply the premise pre")
        _need(implies(c.post, n.post, u), "premise post does not imply the post")
        _need(implies(n.post, ref.post, u), "post does not imply the post of the replayed node")
    else:
        _need(not is_empty(n.post, u), "post must not be false")
        _need(implies(n.post, c.post, u), "post does not imply the premise post")
        _need(implies(c.pre, n.pre, u), "premise pre does not imply the pre")
        _need(implies(n.pre, ref.pre, u), "pre does not imply the pre of the replayed node")


# ---------------------------------------------------------------------------
# atom transfer functions


def _uturn_atom(c, P: Assertion, Qp: Assertion) -> Assertion:
    if isinstance(c, Assign):
        return conj(P, substitute(Qp, c.expr, c.var))
    if isinstance(c, Nondet):
        return conj(P, exists(c.var, Qp))
    if isinstance(c, Error):
        return conj(P, Tagged(Flag.OK, restrict(Qp, Flag.ER)))
    return Qp


def _turnu_atom(c, Q: Assertion, Pp: Assertion) -> Assertion:
    if isinstance(c, (Assign, Nondet, Error)):
        return conj(Q, sp_atom(c, Pp))
    return Pp


# ---------------------------------------------------------------------------
# algorithms


COMPACT_SIZE = 160
COMPACT_DEPTH = 4


def _tidy(p: Assertion, u: Universe) -> Assertion:
    if size(p) > COMPACT_SIZE or binder_depth(p) > COMPACT_DEPTH:
        return compact(p, u)
    return p


def run_uturn(d: Derivation, Qp: Assertion, u: Universe) -> tuple[Assertion, ReplayNode]:
    """Replay ``d`` backward from ``Qp``; return the SIL pre and the U-Turn tree."""
    if is_empty(Qp, u):
        raise AlgorithmPreconditionError("the target post is false")
    if not implies(Qp, d.post, u):
        raise AlgorithmPreconditionError("the target post does not imply the derived post")
    node = _uturn(d, Qp, (), u)
    return node.pre, node


def _uturn(d: Derivation, Qp: Assertion, path, u: Universe) -> ReplayNode:
    rule = d.rule[len("IL"):]
    if rule in ("Assign", "Nondet", "Error", "Assume", "Skip"):
        pre = _tidy(_uturn_atom(d.cmd.cmd, d.pre, Qp), u)
        return ReplayNode("U" + rule, pre, Qp, d, path)
    if rule in ("ErId", "Iter0"):
        return ReplayNode("U" + rule, Qp, Qp, d, path)
    if rule == "Empty":
        # a nonempty target cannot sit below an empty post
        return ReplayNode("UEmpty", FALSE, Qp, d, path)
    if rule == "Seq":
        d1, d2 = d.children
        right = _uturn(d2, Qp, path + (1,), u)
        left = _uturn(d1, right.pre, path + (0,), u)
        return ReplayNode("USeq", left.pre, Qp, d, path, (left, right))
    if rule in ("ChoiceL", "ChoiceR", "Unroll"):
        c = _uturn(d.children[0], Qp, path + (0,), u)
        return ReplayNode("U" + rule, c.pre, Qp, d, path, (c,))
    if rule == "Cons":
        c = _uturn(d.children[0], Qp, path + (0,), u)
        return ReplayNode("UConsIL", c.pre, Qp, d, path, (c,))
    if rule == "Disj":
        kids = []
        for i, di in enumerate(d.children):
            qi = _tidy(conj(Qp, di.post), u)
            if is_empty(qi, u):
                kids.append(ReplayNode("UEmpty", FALSE, FALSE, di, path + (i,)))
            else:
                kids.append(_uturn(di, qi, path + (i,), u))
        return ReplayNode("UDisj", disj(kids[0].pre, kids[1].pre), Qp, d, path, tuple(kids))
    raise ValueError(f"cannot replay rule {d.rule!r}")


def run_turnu(d: Derivation, Pp: Assertion, u: Universe) -> tuple[Assertion, ReplayNode]:
    """Replay the SIL derivation ``d`` forward from ``Pp``; return the IL post and the tree."""
    if is_empty(Pp, u):
        raise AlgorithmPreconditionError("the target pre is false")
    if not implies(Pp, d.pre, u):
        raise AlgorithmPreconditionError("the target pre does not imply the derived pre")
    node = _turnu(d, Pp, (), u)
    return node.post, node


def _turnu(d: Derivation, Pp: Assertion, path, u: Universe) -> ReplayNode:
    rule = d.rule[len("SIL"):]
    if rule in ("Assign", "Nondet", "Error", "Assume", "Skip"):
        post = _tidy(_turnu_atom(d.cmd.cmd, d.post, Pp), u)
        return ReplayNode("T" + rule, Pp, post, d, path)
    if rule in ("ErId", "Iter0"):
        return ReplayNode("T" + rule, Pp, Pp, d, path)
    if rule == "Empty":
        return ReplayNode("TEmpty", Pp, FALSE, d, path)
    if rule == "Seq":
        d1, d2 = d.children
        left = _turnu(d1, Pp, path + (0,), u)
        right = _turnu(d2, left.post, path + (1,), u)
        return ReplayNode("TSeq", Pp, right.post, d, path, (left, right))
    if rule in ("ChoiceL", "ChoiceR", "Unroll"):
        c = _turnu(d.children[0], Pp, path + (0,), u)
        return ReplayNode("T" + rule, Pp, c.post, d, path, (c,))
    if rule == "Cons":
        c = _turnu(d.children[0], Pp, path + (0,), u)
        return ReplayNode("TConsSIL", Pp, c.post, d, path, (c,))
    if rule == "Disj":
        kids = []
        for i, di in enumerate(d.children):
            pi = _tidy(conj(Pp, di.pre), u)
            if is_empty(pi, u):
                kids.append(ReplayNode("TEmpty", FALSE, FALSE, di, path + (i,)))
            else:
                kids.append(_turnu(di, pi, path + (i,), u))
        return ReplayNode("TDisj", Pp, disj(kids[0].post, kids[1].post), d, path, tuple(kids))
    raise ValueError(f"cannot replay rule {d.rule!r}")


# ---------------------------------------------------------------------------
# the integer variant of the opaque-call example

FOO_SOURCE = """vars b x p;
x := nondet();
if (b != 0 and x != 0) { p := 1 } else { p := 0 };
if (p = 0) { error() }
"""
FOO_POST = "er: b != 0"
