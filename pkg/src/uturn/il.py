"""Incorrectness Logic: rules, checker, validity and a forward proof engine.

Triples ``[P] r [Q]`` are valid when every state of ``Q`` is reachable from
some state of ``P``. Atoms use the strongest-post axioms restricted to ok
pres; ``ILErId`` carries erroneous states through any command unchanged.
``ILError`` is the axiom for ``error()`` and ``ILEmpty`` concludes
``[false] r [false]``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable

from .assertions import (
    FALSE, Assertion, Or, Tagged, binder_depth, compact, disj, disj_all, extension,
    flag_part, implies, is_empty, size, sp_atom,
)
from .lang import ACmd, Assign, Assume, Atom, Choice, Error, Nondet, RCmd, Seq, Skip, Star
from .proof import Derivation, Logic, Triple, check_derivation, require_flag
from .semantics import fast_fwsem
from .state import Flag, StateSet, Universe

ILTriple = Triple
ILDerivation = Derivation

IL_RULES = (
    "ILAssign", "ILAssume", "ILNondet", "ILSkip", "ILError", "ILErId", "ILDisj", "ILCons",
    "ILSeq", "ILChoiceL", "ILChoiceR", "ILIter0", "ILUnroll", "ILEmpty",
)

ATOM_RULE = {Assign: "Assign", Assume: "Assume", Nondet: "Nondet", Skip: "Skip", Error: "Error"}


def atom_rule(prefix: str, c: ACmd) -> str:
    return prefix + ATOM_RULE[type(c)]


# ---------------------------------------------------------------------------
# checker


def _il_axiom(kind):
    def check(c: ACmd, t: Triple, u: Universe) -> None:
        if not isinstance(c, kind):
            raise ValueError(f"axiom does not match command {type(c).__name__}")
        require_flag(t.pre, Flag.OK, u, "pre")
        if extension(t.post, u) != extension(sp_atom(c, t.pre), u):
            raise ValueError("post is not the strongest post of the pre")
    return check


def _il_cons(node: Triple, child: Triple, u: Universe) -> None:
    # pre may be weakened, post strengthened
    if not implies(child.pre, node.pre, u):
        raise ValueError("premise pre does not imply the conclusion pre")
    if not implies(node.post, child.post, u):
        raise ValueError("conclusion post does not imply the premise post")


IL = Logic(
    prefix="IL",
    axioms={"IL" + name: _il_axiom(kind) for kind, name in ATOM_RULE.items()},
    cons_ok=_il_cons,
    cons_text="P' => P and Q => Q'",
)


def check_il_derivation(d: Derivation, u: Universe) -> Triple:
    """Return the root triple if every node instantiates its rule."""
    return check_derivation(d, u, IL)


def il_valid(t: Triple, u: Universe) -> bool:
    return extension(t.post, u) <= fast_fwsem(t.cmd, extension(t.pre, u), u)


def il_counterexample(t: Triple, u: Universe):
    """A post state unreachable from the pre, or ``None``."""
    return (extension(t.post, u) - fast_fwsem(t.cmd, extension(t.pre, u), u)).witness()


# ---------------------------------------------------------------------------
# forward engine


BRANCH_POLICIES = ("both", "left", "right", "random")
DROP_POLICIES = ("er-first", "largest", "first")


@dataclass(frozen=True)
class Heuristics:
    max_unroll: int = 10
    branch_policy: str = "both"
    seed: int = 0
    max_disjuncts: int = 16
    drop_policy: str = "er-first"
    # formulas beyond these bounds are replaced by an equivalent explicit state set
    compact_size: int = 80
    compact_depth: int = 2

    def __post_init__(self):
        if self.max_unroll < 0:
            raise ValueError("max_unroll must be nonnegative")
        if self.branch_policy not in BRANCH_POLICIES:
            raise ValueError(f"branch_policy must be one of {BRANCH_POLICIES}")
        if self.max_disjuncts < 1:
            raise ValueError("max_disjuncts must be positive")
        if self.drop_policy not in DROP_POLICIES:
            raise ValueError(f"drop_policy must be one of {DROP_POLICIES}")


def disjuncts(p: Assertion) -> list[tuple[Flag | None, Assertion]]:
    """Top-level disjuncts, looking through ``or`` and flag tags."""
    out: list[tuple[Flag | None, Assertion]] = []

    def go(q, flag):
        if isinstance(q, Or):
            go(q.lhs, flag)
            go(q.rhs, flag)
        elif isinstance(q, Tagged) and flag is None:
            go(q.body, q.flag)
        else:
            out.append((flag, q))

    go(p, None)
    return out


def rebuild(parts: Iterable[tuple[Flag | None, Assertion]]) -> Assertion:
    return disj_all(Tagged(f, q) if f is not None else q for f, q in parts)


def select_disjuncts(p: Assertion, h: Heuristics, u: Universe) -> Assertion | None:
    """Drop disjuncts beyond the cap; ``None`` when nothing is dropped.

    Disjuncts that add no state to those already kept go first, so
    redundancy is removed before anything is lost.
    """
    parts = disjuncts(p)
    if len(parts) <= h.max_disjuncts:
        return None
    exts = [extension(rebuild([part]), u) for part in parts]
    order = list(range(len(parts)))
    er = StateSet.of_flag(u, Flag.ER)
    if h.drop_policy == "er-first":
        order.sort(key=lambda i: (not bool(exts[i] & er), -len(exts[i]), i))
    elif h.drop_policy == "largest":
        order.sort(key=lambda i: (-len(exts[i]), i))
    keep: list[int] = []
    covered = StateSet.empty(u)
    for i in order:
        if not exts[i] <= covered:
            keep.append(i)
            covered = covered | exts[i]
    return rebuild(parts[i] for i in sorted(keep[: h.max_disjuncts]))


class ForwardEngine:
    def __init__(self, h: Heuristics, u: Universe):
        self.h = h
        self.u = u
        self.rng = random.Random(h.seed)

    def tidy(self, p: Assertion) -> Assertion:
        if size(p) > self.h.compact_size or binder_depth(p) > self.h.compact_depth:
            return compact(p, self.u)
        return p

    def run(self, p: Assertion, r: RCmd) -> Derivation:
        ext = extension(p, self.u)
        if not ext:
            return Derivation("ILEmpty", Triple(p, r, FALSE))
        ok = ext.flag_part(Flag.OK)
        er = ext.flag_part(Flag.ER)
        if not ok:
            return Derivation("ILErId", Triple(p, r, p))
        if not er:
            return self.run_ok(p, r)
        d1 = self.run_ok(flag_part(p, Flag.OK), r)
        e = flag_part(p, Flag.ER)
        d2 = Derivation("ILErId", Triple(e, r, e))
        return Derivation("ILDisj", Triple(p, r, disj(d1.post, e)), (d1, d2))

    def run_ok(self, p: Assertion, r: RCmd) -> Derivation:
        if isinstance(r, Atom):
            post = self.tidy(sp_atom(r.cmd, p))
            return Derivation(atom_rule("IL", r.cmd), Triple(p, r, post))
        if isinstance(r, Seq):
            d1 = self.run(p, r.first)
            d2 = self.run(d1.post, r.second)
            return Derivation("ILSeq", Triple(p, r, d2.post), (d1, d2))
        if isinstance(r, Choice):
            return self.choice(p, r)
        return self.star(p, r)

    def choice(self, p: Assertion, r: Choice) -> Derivation:
        policy = self.h.branch_policy
        if policy == "random":
            policy = self.rng.choice(("left", "right"))
        if policy == "left":
            d = self.run(p, r.left)
            return Derivation("ILChoiceL", Triple(p, r, d.post), (d,))
        if policy == "right":
            d = self.run(p, r.right)
            return Derivation("ILChoiceR", Triple(p, r, d.post), (d,))
        dl = self.run(p, r.left)
        dr = self.run(p, r.right)
        left = Derivation("ILChoiceL", Triple(p, r, dl.post), (dl,))
        right = Derivation("ILChoiceR", Triple(p, r, dr.post), (dr,))
        if is_empty(dr.post, self.u):
            return left
        if is_empty(dl.post, self.u):
            return right
        d = Derivation("ILDisj", Triple(p, r, disj(dl.post, dr.post)), (left, right))
        return self.cap(d)

    def cap(self, d: Derivation) -> Derivation:
        kept = select_disjuncts(d.post, self.h, self.u)
        if kept is None:
            return d
        return Derivation("ILCons", Triple(d.pre, d.cmd, kept), (d,))

    def star(self, p: Assertion, r: Star) -> Derivation:
        """Disjunction of unrolling chains of increasing length.

        Chain ``k`` ends in ``ILIter0`` after ``k`` ``ILUnroll`` steps and
        concludes the states reachable after exactly ``k`` iterations.
        Unrolling stops once an iteration adds no new state, or at the
        unroll budget; chains that contribute nothing are left out.
        """
        u = self.u
        chain = Derivation("ILIter0", Triple(p, r, p))
        chains = [chain]
        seen = extension(p, u)
        for _ in range(self.h.max_unroll):
            body = self.run(chain.post, r.body)
            inner = Derivation("ILSeq", Triple(p, Seq(r, r.body), body.post), (chain, body))
            chain = Derivation("ILUnroll", Triple(p, r, body.post), (inner,))
            new = extension(chain.post, u)
            if not new:
                break
            if new <= seen:
                break
            chains.append(chain)
            seen = seen | new
        out = chains[-1]
        for c in reversed(chains[:-1]):
            out = Derivation("ILDisj", Triple(p, r, disj(c.post, out.post)), (c, out))
        return self.cap(out) if len(chains) > 1 else out


def synthesize_forward(p: Assertion, r: RCmd, h: Heuristics | None = None,
                       u: Universe | None = None) -> Derivation:
    """Build an IL derivation for ``[p] r [Q]``, choosing ``Q`` along the way."""
    if u is None:
        raise ValueError("a universe is required")
    return ForwardEngine(h or Heuristics(), u).run(p, r)
