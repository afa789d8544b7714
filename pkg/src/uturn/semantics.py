"""Collecting forward and backward semantics over a bounded universe.

Two implementations live here:

* the reference semantics (``atomic_step``, ``fwsem``, ``bwsem``) works one
  store at a time straight from the definitions, and ``bwsem`` reverses the
  forward relation by enumerating every state;
* ``MaskSemantics`` computes the same functions on boolean masks with
  numpy. The validity checks run on it because the property suites call
  them tens of thousands of times. The test suite cross-checks it against
  the reference.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .lang import (
    ACmd, Assign, Assume, Atom, BAnd, BFalse, BNot, Choice, Error, IntLit,
    Nondet, RCmd, Seq, Skip, Var, free_vars,
)
from .state import (
    Flag, FlaggedState, StateSet, Universe, enumerate_states, eval_aexp, eval_bexp,
)


def _check_vars(names, u: Universe) -> None:
    missing = set(names) - set(u.vars)
    if missing:
        raise ValueError(f"variables {sorted(missing)} are not in the universe")


def atomic_step(c: ACmd, s: FlaggedState, u: Universe) -> StateSet:
    """Successors of one flagged state under an atomic command."""
    return StateSet.from_states(u, _successors(c, s, u))


def _successors(c: ACmd, s: FlaggedState, u: Universe) -> list[FlaggedState]:
    if s.flag is Flag.ER:
        return [s]  # every command is the identity on erroneous states
    if isinstance(c, Skip):
        return [s]
    store = u.store_dict(s.store)
    if isinstance(c, Assign):
        store[c.var] = eval_aexp(c.expr, store, u)
        return [FlaggedState(Flag.OK, u.store_of(store))]
    if isinstance(c, Assume):
        return [s] if eval_bexp(c.cond, store, u) else []
    if isinstance(c, Nondet):
        out = []
        for v in u.values:
            store[c.var] = v
            out.append(FlaggedState(Flag.OK, u.store_of(store)))
        return out
    if isinstance(c, Error):
        return [FlaggedState(Flag.ER, s.store)]
    raise TypeError(f"not an atomic command: {c!r}")


def fwsem(r: RCmd, states: StateSet, u: Universe) -> StateSet:
    """States reachable from ``states`` by running ``r``."""
    _check_vars(free_vars(r), u)
    return _fw(r, states, u)


def _fw(r: RCmd, states: StateSet, u: Universe) -> StateSet:
    if isinstance(r, Atom):
        return StateSet.from_states(u, (t for s in states for t in _successors(r.cmd, s, u)))
    if isinstance(r, Seq):
        return _fw(r.second, _fw(r.first, states, u), u)
    if isinstance(r, Choice):
        return _fw(r.left, states, u) | _fw(r.right, states, u)
    # least fixpoint by Kleene iteration; the powerset lattice is finite
    acc = states
    frontier = states
    while frontier:
        new = _fw(r.body, frontier, u) - acc
        acc = acc | new
        frontier = new
    return acc


def bwsem(r: RCmd, states: StateSet, u: Universe, candidates: StateSet | None = None) -> StateSet:
    """States from which some run of ``r`` reaches ``states``.

    Computed by brute force: every state (or every state in ``candidates``)
    is run forward and kept if its reachable set meets ``states``.
    """
    _check_vars(free_vars(r), u)
    pool = candidates if candidates is not None else enumerate_states(u)
    keep = [s for s in pool if _fw(r, StateSet.from_states(u, [s]), u) & states]
    return StateSet.from_states(u, keep)


# ---------------------------------------------------------------------------
# vectorized semantics


class MaskSemantics:
    """Forward/backward collecting semantics on boolean masks of one universe."""

    def __init__(self, u: Universe):
        u.check_budget()
        self.u = u
        self.n = u.n_stores
        self.shape = (u.modulus,) * len(u.vars)
        self._tables: dict[ACmd, object] = {}

    def _grid(self):
        u = self.u
        axes = []
        for i, _ in enumerate(u.vars):
            shape = [1] * len(u.vars)
            shape[i] = u.modulus
            axes.append(np.arange(u.lo, u.hi + 1, dtype=np.int64).reshape(shape))
        return dict(zip(u.vars, axes))

    def _table(self, c: ACmd):
        t = self._tables.get(c)
        if t is not None:
            return t
        u = self.u
        if isinstance(c, Assign):
            grid = self._grid()
            val = np.broadcast_to(_eval_a_np(c.expr, grid, u), self.shape)
            coords = [np.broadcast_to(grid[v], self.shape) for v in u.vars]
            coords[u.var_index(c.var)] = val
            idx = np.ravel_multi_index([co - u.lo for co in coords], self.shape)
            t = idx.reshape(self.n)
        elif isinstance(c, Assume):
            t = np.broadcast_to(_eval_b_np(c.cond, self._grid(), u), self.shape).reshape(self.n)
        elif isinstance(c, Nondet):
            t = u.var_index(c.var)
        else:
            t = None
        self._tables[c] = t
        return t

    def atom_fw(self, c: ACmd, mask: np.ndarray) -> np.ndarray:
        ok, er = mask[: self.n], mask[self.n :]
        if isinstance(c, Skip):
            return mask
        if isinstance(c, Error):
            return np.concatenate([np.zeros(self.n, bool), er | ok])
        t = self._table(c)
        if isinstance(c, Assign):
            new_ok = np.zeros(self.n, bool)
            new_ok[t[ok]] = True
        elif isinstance(c, Assume):
            new_ok = ok & t
        else:
            g = ok.reshape(self.shape).any(axis=t, keepdims=True)
            new_ok = np.broadcast_to(g, self.shape).reshape(self.n)
        return np.concatenate([new_ok, er])

    def atom_bw(self, c: ACmd, mask: np.ndarray) -> np.ndarray:
        ok, er = mask[: self.n], mask[self.n :]
        if isinstance(c, Skip):
            return mask
        if isinstance(c, Error):
            return np.concatenate([er, er])
        t = self._table(c)
        if isinstance(c, Assign):
            pre_ok = ok[t]
        elif isinstance(c, Assume):
            pre_ok = ok & t
        else:
            g = ok.reshape(self.shape).any(axis=t, keepdims=True)
            pre_ok = np.broadcast_to(g, self.shape).reshape(self.n)
        return np.concatenate([pre_ok, er])

    def fw(self, r: RCmd, mask: np.ndarray) -> np.ndarray:
        if isinstance(r, Atom):
            return self.atom_fw(r.cmd, mask)
        if isinstance(r, Seq):
            return self.fw(r.second, self.fw(r.first, mask))
        if isinstance(r, Choice):
            return self.fw(r.left, mask) | self.fw(r.right, mask)
        acc = mask
        frontier = mask
        while frontier.any():
            new = self.fw(r.body, frontier) & ~acc
            acc = acc | new
            frontier = new
        return acc

    def bw(self, r: RCmd, mask: np.ndarray) -> np.ndarray:
        if isinstance(r, Atom):
            return self.atom_bw(r.cmd, mask)
        if isinstance(r, Seq):
            return self.bw(r.first, self.bw(r.second, mask))
        if isinstance(r, Choice):
            return self.bw(r.left, mask) | self.bw(r.right, mask)
        acc = mask
        frontier = mask
        while frontier.any():
            new = self.bw(r.body, frontier) & ~acc
            acc = acc | new
            frontier = new
        return acc

    def fwsem(self, r: RCmd, states: StateSet) -> StateSet:
        _check_vars(free_vars(r), self.u)
        return StateSet(self.u, self.fw(r, states.mask))

    def bwsem(self, r: RCmd, states: StateSet) -> StateSet:
        _check_vars(free_vars(r), self.u)
        return StateSet(self.u, self.bw(r, states.mask))


@lru_cache(maxsize=64)
def mask_semantics(u: Universe) -> MaskSemantics:
    return MaskSemantics(u)


def fast_fwsem(r: RCmd, states: StateSet, u: Universe) -> StateSet:
    return mask_semantics(u).fwsem(r, states)


def fast_bwsem(r: RCmd, states: StateSet, u: Universe) -> StateSet:
    return mask_semantics(u).bwsem(r, states)


# ---------------------------------------------------------------------------
# numpy expression evaluation (shared with the assertion evaluator)


def _wrap_np(v, u: Universe):
    return (v - u.lo) % u.modulus + u.lo


def _eval_a_np(a, env: dict, u: Universe):
    if isinstance(a, IntLit):
        return np.int64(u.wrap(a.value))
    if isinstance(a, Var):
        return env[a.name]
    lhs = _eval_a_np(a.lhs, env, u)
    rhs = _eval_a_np(a.rhs, env, u)
    if a.op == "+":
        return _wrap_np(lhs + rhs, u)
    if a.op == "-":
        return _wrap_np(lhs - rhs, u)
    return _wrap_np(lhs * rhs, u)


def _eval_b_np(b, env: dict, u: Universe):
    if isinstance(b, BFalse):
        return np.bool_(False)
    if isinstance(b, BNot):
        return ~np.asarray(_eval_b_np(b.arg, env, u))
    if isinstance(b, BAnd):
        return np.asarray(_eval_b_np(b.lhs, env, u)) & np.asarray(_eval_b_np(b.rhs, env, u))
    lhs = _eval_a_np(b.lhs, env, u)
    rhs = _eval_a_np(b.rhs, env, u)
    if b.op == "=":
        return np.asarray(lhs == rhs)
    if b.op == "!=":
        return np.asarray(lhs != rhs)
    if b.op == "<=":
        return np.asarray(lhs <= rhs)
    return np.asarray(lhs < rhs)


eval_aexp_np = _eval_a_np
eval_bexp_np = _eval_b_np
