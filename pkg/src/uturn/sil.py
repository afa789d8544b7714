"""Sufficient Incorrectness Logic: rules, checker, validity and a backward engine.

A triple ``<P> r <Q>`` is valid when every state of ``P`` can reach some
state of ``Q``. Atom axioms compute the pre by weakest-pre style
substitution; the consequence rule may strengthen the pre and weaken the
post.
"""

from __future__ import annotations

import random

from .assertions import (
    FALSE, Assertion, Tagged, binder_depth, compact, disj, extension, flag_part, implies,
    is_empty, restrict, size, wp_atom,
)
from .il import ATOM_RULE, Heuristics, atom_rule, select_disjuncts
from .lang import ACmd, Atom, Choice, Error, RCmd, Seq, Star
from .proof import Derivation, Logic, Triple, check_derivation, require_flag
from .semantics import fast_bwsem
from .state import Flag, Universe

SILTriple = Triple
SILDerivation = Derivation

SIL_RULES = tuple("SIL" + name for name in (
    "Assign", "Assume", "Nondet", "Skip", "Error", "ErId", "Disj", "Cons",
    "Seq", "ChoiceL", "ChoiceR", "Iter0", "Unroll", "Empty",
))


def _sil_axiom(kind):
    def check(c: ACmd, t: Triple, u: Universe) -> None:
        if not isinstance(c, kind):
            raise ValueError(f"axiom does not match command {type(c).__name__}")
        if isinstance(c, Error):
            require_flag(t.post, Flag.ER, u, "post")
            expected = Tagged(Flag.OK, restrict(t.post, Flag.ER))
        else:
            require_flag(t.post, Flag.OK, u, "post")
            expected = wp_atom(c, t.post)
        if extension(t.pre, u) != extension(expected, u):
            raise ValueError("pre is not the backward transform of the post")
    return check


def _sil_cons(node: Triple, child: Triple, u: Universe) -> None:
    # pre may be strengthened, post weakened
    if not implies(node.pre, child.pre, u):
        raise ValueError("conclusion pre does not imply the premise pre")
    if not implies(child.post, node.post, u):
        raise ValueError("premise post does not imply the conclusion post")


SIL = Logic(
    prefix="SIL",
    axioms={"SIL" + name: _sil_axiom(kind) for kind, name in ATOM_RULE.items()},
    cons_ok=_sil_cons,
    cons_text="P => P' and Q' => Q",
)


def check_sil_derivation(d: Derivation, u: Universe) -> Triple:
    """Return the root triple if every node instantiates its rule."""
    return check_derivation(d, u, SIL)


def sil_valid(t: Triple, u: Universe) -> bool:
    return extension(t.pre, u) <= fast_bwsem(t.cmd, extension(t.post, u), u)


def sil_counterexample(t: Triple, u: Universe):
    """A pre state that cannot reach the post, or ``None``."""
    return (extension(t.pre, u) - fast_bwsem(t.cmd, extension(t.post, u), u)).witness()


class BackwardEngine:
    def __init__(self, h: Heuristics, u: Universe):
        self.h = h
        self.u = u
        self.rng = random.Random(h.seed)

    def tidy(self, p: Assertion) -> Assertion:
        if size(p) > self.h.compact_size or binder_depth(p) > self.h.compact_depth:
            return compact(p, self.u)
        return p

    def run(self, r: RCmd, q: Assertion) -> Derivation:
        if is_empty(q, self.u):
            return Derivation("SILEmpty", Triple(FALSE, r, q))
        if isinstance(r, Atom):
            return self.atom(r, q)
        if isinstance(r, Seq):
            d2 = self.run(r.second, q)
            d1 = self.run(r.first, d2.pre)
            return Derivation("SILSeq", Triple(d1.pre, r, q), (d1, d2))
        if isinstance(r, Choice):
            return self.choice(r, q)
        return self.star(r, q)

    def atom(self, r: Atom, q: Assertion) -> Derivation:
        u = self.u
        ext = extension(q, u)
        has_ok = bool(ext.flag_part(Flag.OK))
        has_er = bool(ext.flag_part(Flag.ER))
        c = r.cmd
        e = flag_part(q, Flag.ER) if has_er else FALSE
        if isinstance(c, Error):
            if not has_er:
                # nothing reaches an ok state through error()
                return Derivation("SILCons", Triple(FALSE, r, q),
                                  (Derivation("SILEmpty", Triple(FALSE, r, FALSE)),))
            ax = Derivation("SILError", Triple(Tagged(Flag.OK, restrict(e, Flag.ER)), r, e))
            eid = Derivation("SILErId", Triple(e, r, e))
            d = Derivation("SILDisj", Triple(disj(ax.pre, e), r, e), (ax, eid))
            if has_ok:
                d = Derivation("SILCons", Triple(d.pre, r, q), (d,))
            return d
        o = q if not has_er else flag_part(q, Flag.OK)
        if not has_ok:
            return Derivation("SILErId", Triple(q, r, q))
        ax = Derivation(atom_rule("SIL", c), Triple(self.tidy(wp_atom(c, o)), r, o))
        if not has_er:
            return ax
        eid = Derivation("SILErId", Triple(e, r, e))
        return Derivation("SILDisj", Triple(disj(ax.pre, e), r, q), (ax, eid))

    def choice(self, r: Choice, q: Assertion) -> Derivation:
        policy = self.h.branch_policy
        if policy == "random":
            policy = self.rng.choice(("left", "right"))
        if policy == "left":
            d = self.run(r.left, q)
            return Derivation("SILChoiceL", Triple(d.pre, r, q), (d,))
        if policy == "right":
            d = self.run(r.right, q)
            return Derivation("SILChoiceR", Triple(d.pre, r, q), (d,))
        dl = self.run(r.left, q)
        dr = self.run(r.right, q)
        left = Derivation("SILChoiceL", Triple(dl.pre, r, q), (dl,))
        right = Derivation("SILChoiceR", Triple(dr.pre, r, q), (dr,))
        if is_empty(dr.pre, self.u):
            return left
        if is_empty(dl.pre, self.u):
            return right
        return self.cap(Derivation("SILDisj", Triple(disj(dl.pre, dr.pre), r, q), (left, right)))

    def cap(self, d: Derivation) -> Derivation:
        kept = select_disjuncts(d.pre, self.h, self.u)
        if kept is None:
            return d
        return Derivation("SILCons", Triple(kept, d.cmd, d.post), (d,))

    def star(self, r: Star, q: Assertion) -> Derivation:
        """Disjunction over unrolling chains, mirroring the forward engine.

        ``B_0 = q`` and ``B_j`` is the pre synthesized for the body against
        ``B_{j-1}``. Chain ``k`` concludes ``<B_k> r* <q>``.
        """
        u = self.u
        bodies: list[Derivation] = []
        pres = [q]
        chains = [Derivation("SILIter0", Triple(q, r, q))]
        seen = extension(q, u)
        for _ in range(self.h.max_unroll):
            e = self.run(r.body, pres[-1])
            new = extension(e.pre, u)
            if not new or new <= seen:
                break
            bodies.append(e)
            pres.append(e.pre)
            seen = seen | new
            chains.append(self.chain(r, pres, bodies))
        out = chains[-1]
        for c in reversed(chains[:-1]):
            out = Derivation("SILDisj", Triple(disj(c.pre, out.pre), r, q), (c, out))
        return self.cap(out) if len(chains) > 1 else out

    @staticmethod
    def chain(r: Star, pres: list[Assertion], bodies: list[Derivation]) -> Derivation:
        k = len(bodies)
        top = pres[k]
        node = Derivation("SILIter0", Triple(top, r, top))
        for j in range(k, 0, -1):
            e = bodies[j - 1]
            inner = Derivation("SILSeq", Triple(top, Seq(r, r.body), pres[j - 1]), (node, e))
            node = Derivation("SILUnroll", Triple(top, r, pres[j - 1]), (inner,))
        return node


def synthesize_backward(r: RCmd, q: Assertion, h: Heuristics | None = None,
                        u: Universe | None = None) -> Derivation:
    """Build a SIL derivation for ``<P> r <q>``, choosing ``P`` along the way."""
    if u is None:
        raise ValueError("a universe is required")
    return BackwardEngine(h or Heuristics(), u).run(r, q)
