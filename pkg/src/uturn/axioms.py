"""Combined forward/backward axioms for atomic commands.

For an atom ``c`` with forward transformer ``fw`` and backward transformer
``bw`` the triple ``<P and bw(Q)> c <Q and fw(P)>`` is valid in both logics,
and every triple valid in both logics already has this shape.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .assertions import Assertion, Tagged, conj, disj, extension, restrict, sp_atom, substitute, wp_atom
from .il import il_valid
from .lang import ACmd, Assign, Atom, BinOp, Choice, IntLit, RCmd, Skip, Var
from .proof import Triple
from .sil import sil_valid
from .state import Flag, Universe

Transformer = Callable[[Assertion], Assertion]


def combined_axiom(c: ACmd, P: Assertion, Q: Assertion) -> Triple:
    return Triple(conj(P, wp_atom(c, Q)), Atom(c), conj(Q, sp_atom(c, P)))


def combined_axiom_custom(fw: Transformer, bw: Transformer, P: Assertion, Q: Assertion,
                          cmd: RCmd) -> Triple:
    """The same schema for an atom known only through its transformers."""
    return Triple(conj(P, bw(Q)), cmd, conj(Q, fw(P)))


def verify_schema_validity(c: ACmd, P: Assertion, Q: Assertion, u: Universe) -> bool:
    t = combined_axiom(c, P, Q)
    return il_valid(t, u) and sil_valid(t, u)


class NotBothValid(ValueError):
    pass


def verify_schema_completeness(t: Triple, u: Universe) -> bool:
    """A both-valid atomic triple is unchanged by conjoining the transformers.

    Holds for ok pres. Erroneous pre-states pass through every atom by
    ``ErId`` rather than by an axiom, so such triples report ``False``.
    """
    if not isinstance(t.cmd, Atom):
        raise ValueError("completeness is stated for atomic commands")
    if not (il_valid(t, u) and sil_valid(t, u)):
        raise NotBothValid("the triple is not valid in both logics")
    c = t.cmd.cmd
    pre, post = extension(t.pre, u), extension(t.post, u)
    return (extension(conj(t.pre, wp_atom(c, t.post)), u) == pre
            and extension(conj(t.post, sp_atom(c, t.pre)), u) == post)


@dataclass(frozen=True)
class XppTransformers:
    """Closed forms for ``x++?``, which either does nothing or increments ``x``."""

    var: str

    def _shift(self, p: Assertion, delta: int) -> Assertion:
        op = "+" if delta > 0 else "-"
        return substitute(p, BinOp(op, Var(self.var), IntLit(abs(delta))), self.var)

    def fw(self, P: Assertion) -> Assertion:
        f = Tagged(Flag.OK, restrict(P, Flag.OK))
        return disj(f, self._shift(f, -1))

    def bw(self, Q: Assertion) -> Assertion:
        g = Tagged(Flag.OK, restrict(Q, Flag.OK))
        return disj(g, self._shift(g, +1))

    def desugar(self) -> RCmd:
        x = Var(self.var)
        return Choice(Atom(Skip()), Atom(Assign(self.var, BinOp("+", x, IntLit(1)))))


def xpp_transformers(x: str) -> XppTransformers:
    return XppTransformers(x)
