"""Random programs, assertions and state sets for oracle-backed tests."""

from __future__ import annotations

import random

from hypothesis import strategies as st

from uturn.assertions import TRUE, Bool, Tagged, conj, disj, enum_of, extension, neg
from uturn.lang import (
    Assign, Assume, Atom, BAnd, BinOp, BNot, Choice, Cmp, Error, IntLit, Nondet, Seq, Skip,
    Star, Var,
)
from uturn.state import Flag, StateSet, Universe


def rand_aexp(rng: random.Random, vars_, u: Universe, depth: int = 1):
    k = rng.random()
    if depth <= 0 or k < 0.35:
        return IntLit(rng.randint(u.lo, u.hi)) if rng.random() < 0.4 else Var(rng.choice(vars_))
    op = rng.choice(("+", "-", "+", "-", "*"))
    return BinOp(op, rand_aexp(rng, vars_, u, depth - 1), rand_aexp(rng, vars_, u, depth - 1))


def rand_cmp(rng, vars_, u):
    return Cmp(rng.choice(("=", "!=", "<=", "<")), Var(rng.choice(vars_)),
               rand_aexp(rng, vars_, u, 0))


def rand_bexp(rng, vars_, u, depth: int = 1):
    k = rng.random()
    if depth <= 0 or k < 0.6:
        return rand_cmp(rng, vars_, u)
    if k < 0.8:
        return BNot(rand_bexp(rng, vars_, u, depth - 1))
    return BAnd(rand_bexp(rng, vars_, u, depth - 1), rand_bexp(rng, vars_, u, depth - 1))


def rand_acmd(rng, vars_, u, allow_error: bool = True):
    k = rng.random()
    if k < 0.4:
        return Assign(rng.choice(vars_), rand_aexp(rng, vars_, u))
    if k < 0.65:
        return Assume(rand_bexp(rng, vars_, u))
    if k < 0.8:
        return Nondet(rng.choice(vars_))
    if k < 0.9 and allow_error:
        return Error()
    return Skip()


def rand_rcmd(rng, vars_, u, depth: int = 5, allow_error: bool = True):
    """A regular command whose AST depth is at most ``depth``."""
    k = rng.random()
    if depth <= 1 or k < 0.3:
        return Atom(rand_acmd(rng, vars_, u, allow_error))
    if k < 0.65:
        return Seq(rand_rcmd(rng, vars_, u, depth - 1, allow_error),
                   rand_rcmd(rng, vars_, u, depth - 1, allow_error))
    if k < 0.85:
        return Choice(rand_rcmd(rng, vars_, u, depth - 1, allow_error),
                      rand_rcmd(rng, vars_, u, depth - 1, allow_error))
    return Star(rand_rcmd(rng, vars_, u, depth - 1, allow_error))


def rand_formula(rng, vars_, u, depth: int = 2):
    """A flag-free assertion built from comparisons."""
    k = rng.random()
    if depth <= 0 or k < 0.35:
        return Bool(rand_cmp(rng, vars_, u)) if rng.random() < 0.9 else TRUE
    if k < 0.6:
        return conj(rand_formula(rng, vars_, u, depth - 1), rand_formula(rng, vars_, u, depth - 1))
    if k < 0.85:
        return disj(rand_formula(rng, vars_, u, depth - 1), rand_formula(rng, vars_, u, depth - 1))
    return neg(rand_formula(rng, vars_, u, depth - 1))


def rand_assertion(rng, vars_, u, allow_er: bool = True):
    """An ok-tagged formula, sometimes with an er part."""
    p = Tagged(Flag.OK, rand_formula(rng, vars_, u))
    if allow_er and rng.random() < 0.25:
        p = disj(p, Tagged(Flag.ER, rand_formula(rng, vars_, u)))
    return p


def rand_subset(rng, states: StateSet, nonempty: bool = True) -> StateSet:
    """A uniformly thinned subset; with ``nonempty`` at least one state survives."""
    items = list(states)
    if not items:
        return StateSet.empty(states.universe)
    keep_p = rng.choice((0.1, 0.5, 0.9, 1.0))
    chosen = [s for s in items if rng.random() < keep_p]
    if nonempty and not chosen:
        chosen = [rng.choice(items)]
    return StateSet.from_states(states.universe, chosen)


def rand_sub_assertion(rng, p, u: Universe, vars_):
    """A nonempty assertion implying ``p``: an explicit subset or ``p`` conjoined with a test."""
    ext = extension(p, u)
    if rng.random() < 0.5:
        q = conj(p, Tagged(Flag.OK, rand_formula(rng, vars_, u, 1)) if rng.random() < 0.5
                 else Bool(rand_cmp(rng, vars_, u)))
        if extension(q, u):
            return q
    return enum_of(rand_subset(rng, ext))


# hypothesis strategies --------------------------------------------------------

VARS2 = ("x", "y")


def universes(mods=(4, 5, 8), vars_=VARS2):
    return st.sampled_from([Universe(m, vars_) for m in mods])


def seeds():
    return st.integers(min_value=0, max_value=2**32 - 1)
