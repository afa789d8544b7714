"""Assertions over flagged states.

Formulas denote sets of flagged states. ``Bool`` leaves are flag-agnostic,
``Tagged(flag, F)`` keeps only the states carrying ``flag``. Meaning is
always semantic: two formulas are interchangeable when their extensions over
the universe coincide, and every side condition in the proof checkers goes
through :func:`implies`.

Extensions are computed with numpy. Every node evaluates to a boolean
relation over the flag and the node's own free variables (named axes), so
bound variables that are not part of the universe are fine, and an
existential is a reduction along one axis.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Union

import numpy as np

from .lang import (
    ACmd, AExp, Assign, Assume, BAnd, BExp, BFalse, BinOp, BNot, Cmp, Error, FALSE_B,
    IntLit, KEYWORDS, Nondet, ParseError, Skip, TRUE_B, Token, UndeclaredVariable, Var,
    _CMP_TOKENS, _Parser, aexp_vars, acmd_vars, bexp_vars, show_acmd, show_aexp,
)
from .semantics import eval_aexp_np, eval_bexp_np, mask_semantics
from .state import FLAGS, Flag, StateSet, Universe


# ---------------------------------------------------------------------------
# syntax


@dataclass(frozen=True)
class Bool:
    cond: BExp


@dataclass(frozen=True)
class Not:
    arg: "Assertion"


@dataclass(frozen=True)
class And:
    lhs: "Assertion"
    rhs: "Assertion"


@dataclass(frozen=True)
class Or:
    lhs: "Assertion"
    rhs: "Assertion"


@dataclass(frozen=True)
class Implies:
    lhs: "Assertion"
    rhs: "Assertion"


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Assertion"


@dataclass(frozen=True)
class Tagged:
    flag: Flag
    body: "Assertion"


@dataclass(frozen=True)
class FwAtom:
    """Forward image of ``body`` under an atomic command."""

    cmd: ACmd
    body: "Assertion"

    def __post_init__(self):
        if not isinstance(self.cmd, (Skip, Assign, Assume, Nondet, Error)):
            raise TypeError("FwAtom takes an atomic command")


@dataclass(frozen=True)
class BwAtom:
    """Backward image of ``body`` under an atomic command."""

    cmd: ACmd
    body: "Assertion"

    def __post_init__(self):
        if not isinstance(self.cmd, (Skip, Assign, Assume, Nondet, Error)):
            raise TypeError("BwAtom takes an atomic command")


@dataclass(frozen=True)
class Enum:
    """An explicit, flag-agnostic set of stores over ``vars``.

    ``subst`` is a pending parallel substitution: a store satisfies the
    formula when the store obtained by evaluating ``subst`` on it (variables
    outside the map keep their value) lies in ``stores``. Substitution into
    an ``Enum`` therefore just composes maps.
    """

    vars: tuple[str, ...]
    stores: frozenset
    subst: tuple[tuple[str, AExp], ...] = ()


Assertion = Union[Bool, Not, And, Or, Implies, Exists, Tagged, FwAtom, BwAtom, Enum]

TRUE = Bool(TRUE_B)
FALSE = Bool(FALSE_B)


def _is_false(p: Assertion) -> bool:
    return isinstance(p, Bool) and isinstance(p.cond, BFalse)


def _is_true(p: Assertion) -> bool:
    return isinstance(p, Bool) and p.cond == TRUE_B


# smart constructors: fold the constants, nothing else


def conj(lhs: Assertion, rhs: Assertion) -> Assertion:
    if _is_false(lhs) or _is_false(rhs):
        return FALSE
    if _is_true(lhs):
        return rhs
    if _is_true(rhs):
        return lhs
    return And(lhs, rhs)


def disj(lhs: Assertion, rhs: Assertion) -> Assertion:
    if _is_false(lhs):
        return rhs
    if _is_false(rhs):
        return lhs
    if _is_true(lhs) or _is_true(rhs):
        return TRUE
    return Or(lhs, rhs)


def neg(p: Assertion) -> Assertion:
    if _is_false(p):
        return TRUE
    if _is_true(p):
        return FALSE
    return Not(p)


def exists(var: str, body: Assertion) -> Assertion:
    # the value range is never empty, so a vacuous binder can go
    if var not in free_vars(body):
        return body
    return Exists(var, body)


def tag(flag: Flag, body: Assertion) -> Assertion:
    return Tagged(flag, body)


def conj_all(items: Iterable[Assertion]) -> Assertion:
    out = TRUE
    for p in items:
        out = conj(out, p)
    return out


def disj_all(items: Iterable[Assertion]) -> Assertion:
    items = list(items)
    if not items:
        return FALSE
    out = items[-1]
    for p in reversed(items[:-1]):
        out = disj(p, out)
    return out


def is_ok_tagged(p: Assertion) -> bool:
    return isinstance(p, Tagged) and p.flag is Flag.OK


# ---------------------------------------------------------------------------
# variables


def _enum_fv(e: Enum) -> frozenset[str]:
    sub = dict(e.subst)
    out: set[str] = set()
    for v in e.vars:
        out |= aexp_vars(sub[v]) if v in sub else {v}
    return frozenset(out)


def free_vars(p: Assertion) -> frozenset[str]:
    if isinstance(p, Bool):
        return bexp_vars(p.cond)
    if isinstance(p, (Not, Tagged)):
        return free_vars(p.arg if isinstance(p, Not) else p.body)
    if isinstance(p, (And, Or, Implies)):
        return free_vars(p.lhs) | free_vars(p.rhs)
    if isinstance(p, Exists):
        return free_vars(p.body) - {p.var}
    if isinstance(p, (FwAtom, BwAtom)):
        return free_vars(p.body) | acmd_vars(p.cmd)
    if isinstance(p, Enum):
        return _enum_fv(p)
    raise TypeError(f"not an assertion: {p!r}")


def names(p: Assertion) -> frozenset[str]:
    """Every variable name occurring in ``p``, free or bound."""
    if isinstance(p, Bool):
        return bexp_vars(p.cond)
    if isinstance(p, (Not, Tagged)):
        return names(p.arg if isinstance(p, Not) else p.body)
    if isinstance(p, (And, Or, Implies)):
        return names(p.lhs) | names(p.rhs)
    if isinstance(p, Exists):
        return names(p.body) | {p.var}
    if isinstance(p, (FwAtom, BwAtom)):
        return names(p.body) | acmd_vars(p.cmd)
    if isinstance(p, Enum):
        return _enum_fv(p) | frozenset(p.vars)
    raise TypeError(f"not an assertion: {p!r}")


def fresh(base: str, avoid: Iterable[str]) -> str:
    """``base`` with enough primes appended to avoid every name in ``avoid``."""
    avoid = set(avoid)
    name = base + "'"
    while name in avoid:
        name += "'"
    return name


def size(p: Assertion) -> int:
    if isinstance(p, (Bool, Enum)):
        return 1
    if isinstance(p, (Not, Tagged, Exists, FwAtom, BwAtom)):
        return 1 + size(p.arg if isinstance(p, Not) else p.body)
    return 1 + size(p.lhs) + size(p.rhs)


def binder_depth(p: Assertion) -> int:
    """Maximum number of nested existentials."""
    if isinstance(p, (Bool, Enum)):
        return 0
    if isinstance(p, Exists):
        return 1 + binder_depth(p.body)
    if isinstance(p, (Not, Tagged, FwAtom, BwAtom)):
        return binder_depth(p.arg if isinstance(p, Not) else p.body)
    return max(binder_depth(p.lhs), binder_depth(p.rhs))


# ---------------------------------------------------------------------------
# substitution


def subst_aexp(e: AExp, a: AExp, x: str) -> AExp:
    if isinstance(e, Var):
        return a if e.name == x else e
    if isinstance(e, IntLit):
        return e
    return BinOp(e.op, subst_aexp(e.lhs, a, x), subst_aexp(e.rhs, a, x))


def subst_bexp(b: BExp, a: AExp, x: str) -> BExp:
    if isinstance(b, BFalse):
        return b
    if isinstance(b, BNot):
        return BNot(subst_bexp(b.arg, a, x))
    if isinstance(b, BAnd):
        return BAnd(subst_bexp(b.lhs, a, x), subst_bexp(b.rhs, a, x))
    return Cmp(b.op, subst_aexp(b.lhs, a, x), subst_aexp(b.rhs, a, x))


def substitute(p: Assertion, a: AExp, x: str) -> Assertion:
    """``p[a/x]``, renaming bound variables that would capture ``fv(a)``."""
    if x not in free_vars(p):
        return p
    return _subst(p, a, x, aexp_vars(a))


def _subst(p: Assertion, a: AExp, x: str, fva: frozenset[str]) -> Assertion:
    if x not in free_vars(p):
        return p
    if isinstance(p, Bool):
        return Bool(subst_bexp(p.cond, a, x))
    if isinstance(p, Not):
        return Not(_subst(p.arg, a, x, fva))
    if isinstance(p, Tagged):
        return Tagged(p.flag, _subst(p.body, a, x, fva))
    if isinstance(p, (And, Or, Implies)):
        return type(p)(_subst(p.lhs, a, x, fva), _subst(p.rhs, a, x, fva))
    if isinstance(p, Exists):
        var, body = p.var, p.body
        if var in fva:
            new = fresh(var, fva | {x} | names(body))
            body = _subst(body, Var(new), var, frozenset((new,)))
            var = new
        return Exists(var, _subst(body, a, x, fva))
    if isinstance(p, Enum):
        sub = {v: subst_aexp(e, a, x) for v, e in p.subst}
        if x in p.vars and x not in sub:
            sub[x] = a
        sub = {v: e for v, e in sub.items() if v in p.vars and e != Var(v)}
        return Enum(p.vars, p.stores, tuple(sorted(sub.items())))
    raise ValueError(f"substitution into {type(p).__name__} is not supported")


# ---------------------------------------------------------------------------
# flags


def restrict(p: Assertion, flag: Flag) -> Assertion:
    """A flag-free formula that holds at a store iff ``p`` holds at ``(flag, store)``."""
    if isinstance(p, (Bool, Enum)):
        return p
    if isinstance(p, Tagged):
        return restrict(p.body, flag) if p.flag is flag else FALSE
    if isinstance(p, Not):
        return neg(restrict(p.arg, flag))
    if isinstance(p, And):
        return conj(restrict(p.lhs, flag), restrict(p.rhs, flag))
    if isinstance(p, Or):
        return disj(restrict(p.lhs, flag), restrict(p.rhs, flag))
    if isinstance(p, Implies):
        lhs = restrict(p.lhs, flag)
        return TRUE if _is_false(lhs) else Implies(lhs, restrict(p.rhs, flag))
    if isinstance(p, Exists):
        body = restrict(p.body, flag)
        return exists(p.var, body) if not _is_false(body) else FALSE
    raise ValueError(f"cannot split {type(p).__name__} by flag")


def retag(p: Assertion, src: Flag, dst: Flag) -> Assertion:
    return Tagged(dst, restrict(p, src))


def flag_part(p: Assertion, flag: Flag) -> Assertion:
    """The ``flag``-tagged part of ``p``; ``FALSE`` when syntactically empty."""
    body = restrict(p, flag)
    return FALSE if _is_false(body) else Tagged(flag, body)


def normalize(p: Assertion) -> Assertion:
    """Rewrite ``p`` as a disjunction of tagged, flag-free parts."""
    return disj_all(flag_part(p, f) for f in FLAGS)


# ---------------------------------------------------------------------------
# extension


class UnknownVariable(ValueError):
    """An assertion mentions a free variable outside the universe."""


class _Rel(NamedTuple):
    vars: tuple[str, ...]  # sorted axis names
    arr: np.ndarray  # shape (1 or 2,) + (M,) * len(vars); a 1-sized flag axis is flag-agnostic


_CACHE_LOCK = threading.Lock()
_CACHE: "OrderedDict[tuple[int, Universe], tuple[Assertion, _Rel]]" = OrderedDict()
_CACHE_BYTES = [0]
_CACHE_LIMIT = 256 << 20


def clear_cache() -> None:
    with _CACHE_LOCK:
        _CACHE.clear()
        _CACHE_BYTES[0] = 0


def _cache_get(p, u):
    key = (id(p), u)
    with _CACHE_LOCK:
        hit = _CACHE.get(key)
        if hit is not None and hit[0] is p:
            _CACHE.move_to_end(key)
            return hit[1]
    return None


def _cache_put(p, u, rel: _Rel) -> None:
    key = (id(p), u)
    with _CACHE_LOCK:
        if key in _CACHE:
            return
        # the entry keeps p alive, so its id cannot be recycled while cached
        _CACHE[key] = (p, rel)
        _CACHE_BYTES[0] += rel.arr.nbytes
        while _CACHE_BYTES[0] > _CACHE_LIMIT and _CACHE:
            _, (_, old) = _CACHE.popitem(last=False)
            _CACHE_BYTES[0] -= old.arr.nbytes


def _axes(vars_: tuple[str, ...], u: Universe) -> dict:
    k = len(vars_)
    out = {}
    for i, v in enumerate(vars_):
        shape = [1] * k
        shape[i] = u.modulus
        out[v] = np.arange(u.lo, u.hi + 1, dtype=np.int64).reshape(shape)
    return out


def _align(r: _Rel, target: tuple[str, ...], m: int) -> np.ndarray:
    shape = (r.arr.shape[0],) + tuple(m if v in r.vars else 1 for v in target)
    return r.arr.reshape(shape)


def _combine(a: _Rel, b: _Rel, op, m: int) -> _Rel:
    vs = tuple(sorted(set(a.vars) | set(b.vars)))
    arr = op(_align(a, vs, m), _align(b, vs, m))
    full = (arr.shape[0],) + (m,) * len(vs)
    return _Rel(vs, np.broadcast_to(arr, full))


def _from_mask(mask: np.ndarray, u: Universe) -> _Rel:
    vs = tuple(sorted(u.vars))
    grid = mask.reshape((2,) + (u.modulus,) * len(u.vars))
    perm = [0] + [1 + u.vars.index(v) for v in vs]
    return _Rel(vs, grid.transpose(perm))


def _to_mask(r: _Rel, u: Universe) -> np.ndarray:
    extra = set(r.vars) - set(u.vars)
    if extra:
        raise UnknownVariable(f"free variables {sorted(extra)} are not in the universe")
    vs = tuple(sorted(u.vars))
    arr = np.broadcast_to(_align(r, vs, u.modulus), (2,) + (u.modulus,) * len(vs))
    perm = [0] + [1 + vs.index(v) for v in u.vars]
    return np.ascontiguousarray(arr.transpose(perm)).reshape(u.size)


def _rel(p: Assertion, u: Universe) -> _Rel:
    hit = _cache_get(p, u)
    if hit is not None:
        return hit
    r = _compute(p, u)
    _cache_put(p, u, r)
    return r


def _compute(p: Assertion, u: Universe) -> _Rel:
    m = u.modulus
    if isinstance(p, Bool):
        vs = tuple(sorted(bexp_vars(p.cond)))
        val = eval_bexp_np(p.cond, _axes(vs, u), u)
        return _Rel(vs, np.broadcast_to(val, (m,) * len(vs))[None])
    if isinstance(p, Not):
        r = _rel(p.arg, u)
        return _Rel(r.vars, ~r.arr)
    if isinstance(p, And):
        return _combine(_rel(p.lhs, u), _rel(p.rhs, u), np.logical_and, m)
    if isinstance(p, Or):
        return _combine(_rel(p.lhs, u), _rel(p.rhs, u), np.logical_or, m)
    if isinstance(p, Implies):
        return _combine(_rel(p.lhs, u), _rel(p.rhs, u), lambda a, b: ~a | b, m)
    if isinstance(p, Exists):
        r = _rel(p.body, u)
        if p.var not in r.vars:
            return r
        i = r.vars.index(p.var)
        return _Rel(r.vars[:i] + r.vars[i + 1 :], r.arr.any(axis=1 + i))
    if isinstance(p, Tagged):
        r = _rel(p.body, u)
        out = np.zeros((2,) + r.arr.shape[1:], dtype=bool)
        out[p.flag.index] = r.arr[p.flag.index if r.arr.shape[0] == 2 else 0]
        return _Rel(r.vars, out)
    if isinstance(p, (FwAtom, BwAtom)):
        sem = mask_semantics(u)
        mask = _to_mask(_rel(p.body, u), u)
        out = sem.atom_fw(p.cmd, mask) if isinstance(p, FwAtom) else sem.atom_bw(p.cmd, mask)
        return _from_mask(out, u)
    if isinstance(p, Enum):
        return _enum_rel(p, u)
    raise TypeError(f"not an assertion: {p!r}")


def _enum_rel(p: Enum, u: Universe) -> _Rel:
    m, k = u.modulus, len(p.vars)
    table = np.zeros((m,) * k, dtype=bool)
    if p.stores:
        idx = (np.array(sorted(p.stores), dtype=np.int64).reshape(-1, k) - u.lo) % m
        table[tuple(idx.T)] = True
    vs = tuple(sorted(_enum_fv(p)))
    env = _axes(vs, u)
    sub = dict(p.subst)
    full = (m,) * len(vs)
    coords = []
    for v in p.vars:
        val = eval_aexp_np(sub[v], env, u) if v in sub else env[v]
        coords.append(np.broadcast_to((np.asarray(val) - u.lo) % m, full))
    arr = table[tuple(coords)] if k else np.broadcast_to(table, full)
    return _Rel(vs, np.asarray(arr).reshape(full)[None])


def extension(p: Assertion, u: Universe) -> StateSet:
    """The set of flagged states of ``u`` satisfying ``p``."""
    u.check_budget()
    return StateSet(u, _to_mask(_rel(p, u), u))


def implies(p: Assertion, q: Assertion, u: Universe) -> bool:
    return extension(p, u) <= extension(q, u)


def equivalent(p: Assertion, q: Assertion, u: Universe) -> bool:
    return extension(p, u) == extension(q, u)


def is_empty(p: Assertion, u: Universe) -> bool:
    return not extension(p, u)


def counterexample(p: Assertion, q: Assertion, u: Universe):
    """A state satisfying ``p`` but not ``q``, or ``None``."""
    return (extension(p, u) - extension(q, u)).witness()


# ---------------------------------------------------------------------------
# closed-form transformers for atomic commands


def sp_atom(c: ACmd, p: Assertion) -> Assertion:
    """Strongest post of the ok-part of ``p`` (Floyd's transformer for assignments)."""
    if isinstance(c, Skip) and is_ok_tagged(p):
        return p
    f = restrict(p, Flag.OK)
    if isinstance(c, Skip):
        return Tagged(Flag.OK, f)
    if isinstance(c, Assign):
        x = c.var
        v = fresh(x, names(f) | aexp_vars(c.expr) | {x})
        eq = Bool(Cmp("=", Var(x), subst_aexp(c.expr, Var(v), x)))
        return Tagged(Flag.OK, Exists(v, conj(substitute(f, Var(v), x), eq)))
    if isinstance(c, Assume):
        return Tagged(Flag.OK, conj(f, Bool(c.cond)))
    if isinstance(c, Nondet):
        return Tagged(Flag.OK, exists(c.var, f))
    if isinstance(c, Error):
        return Tagged(Flag.ER, f)
    raise TypeError(f"not an atomic command: {c!r}")


def wp_atom(c: ACmd, q: Assertion) -> Assertion:
    """Ok-states from which ``c`` can reach ``q`` (Hoare substitution for assignments)."""
    if isinstance(c, Skip) and is_ok_tagged(q):
        return q
    if isinstance(c, Error):
        return Tagged(Flag.OK, restrict(q, Flag.ER))
    g = restrict(q, Flag.OK)
    if isinstance(c, Skip):
        return Tagged(Flag.OK, g)
    if isinstance(c, Assign):
        return Tagged(Flag.OK, substitute(g, c.expr, c.var))
    if isinstance(c, Assume):
        return Tagged(Flag.OK, conj(g, Bool(c.cond)))
    if isinstance(c, Nondet):
        return Tagged(Flag.OK, exists(c.var, g))
    raise TypeError(f"not an atomic command: {c!r}")


# ---------------------------------------------------------------------------
# explicit state sets


def enum_of(states: StateSet) -> Assertion:
    """Name an arbitrary state set symbolically."""
    u = states.universe
    grid = states.grid()
    parts = []
    for f in FLAGS:
        g = grid[f.index]
        if not g.any():
            continue
        if g.all():
            parts.append(Tagged(f, TRUE))
            continue
        idx = np.argwhere(g) + u.lo
        stores = frozenset(tuple(int(v) for v in row) for row in idx)
        parts.append(Tagged(f, Enum(u.vars, stores)))
    return disj_all(parts)


def compact(p: Assertion, u: Universe) -> Assertion:
    """An equivalent formula without nested quantifiers."""
    return enum_of(extension(p, u))


def _value_set(x: str, vals: list[int], u: Universe) -> BExp:
    if len(vals) == u.modulus:
        return TRUE_B
    runs = []
    for v in vals:
        if runs and runs[-1][1] == v - 1:
            runs[-1][1] = v
        else:
            runs.append([v, v])
    if len(runs) > 1 and u.modulus - len(vals) == 1:
        missing = (set(u.values) - set(vals)).pop()
        return Cmp("!=", Var(x), IntLit(missing))
    out = None
    for lo, hi in runs:
        if lo == hi:
            item = Cmp("=", Var(x), IntLit(lo))
        elif lo == u.lo:
            item = Cmp("<=", Var(x), IntLit(hi))
        elif hi == u.hi:
            item = Cmp("<=", IntLit(lo), Var(x))
        else:
            item = BAnd(Cmp("<=", IntLit(lo), Var(x)), Cmp("<=", Var(x), IntLit(hi)))
        out = item if out is None else BNot(BAnd(BNot(out), BNot(item)))
    return out


def _b_and(a: BExp, b: BExp) -> BExp:
    if a == TRUE_B:
        return b
    if b == TRUE_B:
        return a
    return BAnd(a, b)


def _stores_formula(vars_: tuple[str, ...], stores: set, u: Universe) -> BExp:
    if not stores:
        return FALSE_B
    if not vars_:
        return TRUE_B
    by_value: dict[int, set] = {}
    for s in stores:
        by_value.setdefault(s[0], set()).add(s[1:])
    groups: dict[frozenset, list[int]] = {}
    for v in sorted(by_value):
        groups.setdefault(frozenset(by_value[v]), []).append(v)
    out = None
    for rest, vals in sorted(groups.items(), key=lambda kv: kv[1][0]):
        item = _b_and(_value_set(vars_[0], vals, u), _stores_formula(vars_[1:], set(rest), u))
        if item == TRUE_B:
            return TRUE_B
        out = item if out is None else BNot(BAnd(BNot(out), BNot(item)))
    return out


def describe(states: StateSet) -> Assertion:
    """A compact comparison-only formula with exactly this extension."""
    u = states.universe
    grid = states.grid()
    parts = []
    for f in FLAGS:
        g = grid[f.index]
        if not g.any():
            continue
        stores = {tuple(int(v) for v in row) for row in np.argwhere(g) + u.lo}
        parts.append(Tagged(f, Bool(_stores_formula(u.vars, stores, u))))
    return disj_all(parts)


def _enum_formula(e: Enum, u: Universe) -> Assertion:
    body = Bool(_stores_formula(e.vars, {tuple(u.wrap(v) for v in s) for s in e.stores}, u))
    # apply the pending map in parallel via fresh intermediates
    sub = dict(e.subst)
    if not sub:
        return body
    avoid = set(names(body)) | {n for a in sub.values() for n in aexp_vars(a)}
    tmp = {}
    for v in sub:
        t = fresh(v, avoid)
        avoid.add(t)
        tmp[v] = t
        body = substitute(body, Var(t), v)
    for v, a in sub.items():
        body = substitute(body, a, tmp[v])
    return body


# ---------------------------------------------------------------------------
# printing


def _show_b(b: BExp, prec: int = 0) -> str:
    # precedence: 0 implication, 1 or, 2 and, 3 unary
    if isinstance(b, BFalse):
        return "false"
    if b == TRUE_B:
        return "true"
    if isinstance(b, Cmp):
        return f"{show_aexp(b.lhs)} {b.op} {show_aexp(b.rhs)}"
    if isinstance(b, BAnd):
        s = f"{_show_b(b.lhs, 2)} and {_show_b(b.rhs, 3)}"
        return s if prec <= 2 else f"({s})"
    a = b.arg
    if isinstance(a, BAnd) and isinstance(a.lhs, BNot) and isinstance(a.rhs, BNot):
        s = f"{_show_b(a.lhs.arg, 1)} or {_show_b(a.rhs.arg, 2)}"
        return s if prec <= 1 else f"({s})"
    if isinstance(a, BAnd) and isinstance(a.rhs, BNot):
        s = f"{_show_b(a.lhs, 1)} => {_show_b(a.rhs.arg, 0)}"
        return s if prec == 0 else f"({s})"
    if isinstance(a, Cmp):
        flip = {"=": ("!=", False), "!=": ("=", False), "<=": ("<", True), "<": ("<=", True)}
        op, swap = flip[a.op]
        lhs, rhs = (a.rhs, a.lhs) if swap else (a.lhs, a.rhs)
        return f"{show_aexp(lhs)} {op} {show_aexp(rhs)}"
    return f"not {_show_b(a, 3)}"


def _show(p: Assertion, prec: int, u: Universe | None) -> str:
    if isinstance(p, Bool):
        return _show_b(p.cond, prec)
    if isinstance(p, Enum):
        if u is not None:
            return _show(_enum_formula(p, u), prec, u)
        return f"{{{len(p.stores)} stores over {','.join(p.vars)}}}"
    if isinstance(p, Not):
        return f"not {_show(p.arg, 3, u)}"
    if isinstance(p, And):
        s = f"{_show(p.lhs, 2, u)} and {_show(p.rhs, 3, u)}"
        return s if prec <= 2 else f"({s})"
    if isinstance(p, Or):
        s = f"{_show(p.lhs, 1, u)} or {_show(p.rhs, 2, u)}"
        return s if prec <= 1 else f"({s})"
    if isinstance(p, Implies):
        s = f"{_show(p.lhs, 1, u)} => {_show(p.rhs, 0, u)}"
        return s if prec == 0 else f"({s})"
    if isinstance(p, Exists):
        s = f"exists {p.var}. {_show(p.body, 0, u)}"
        return s if prec == 0 else f"({s})"
    if isinstance(p, Tagged):
        return f"{p.flag}: {_show(p.body, 0, u)}"
    if isinstance(p, (FwAtom, BwAtom)):
        br = "[[{}]]" if isinstance(p, FwAtom) else "<<{}>>"
        return f"{br.format(show_acmd(p.cmd))}({_show(p.body, 0, u)})"
    raise TypeError(f"not an assertion: {p!r}")


def show(p: Assertion, u: Universe | None = None) -> str:
    """Render ``p`` in the assertion syntax, as tagged top-level parts.

    Explicit store sets are spelled out as comparisons when a universe is
    given. Formulas containing atom images are printed as they are.
    """
    try:
        p = normalize(p)
    except ValueError:
        return _show(p, 0, u)
    if _is_false(p):
        return "false"
    parts = []
    while isinstance(p, Or) and isinstance(p.lhs, Tagged):
        parts.append(p.lhs)
        p = p.rhs
    parts.append(p)
    return " or ".join(f"{t.flag}: {_show(t.body, 0, u)}" for t in parts)


def show_states(states: StateSet) -> str:
    return show(describe(states), states.universe)


# ---------------------------------------------------------------------------
# parsing


class _AssertionParser(_Parser):
    def __init__(self, text: str, declared=None):
        super().__init__(text, declared)
        self.bound: list[str] = []

    def use_var(self, name: str, tok: Token, bound: frozenset[str] = frozenset()):
        if name in self.bound:
            return
        super().use_var(name, tok, bound)

    def at_tag(self) -> bool:
        t, nxt = self.tok, self.peek()
        return t.kind == "ident" and t.text in ("ok", "er") and nxt.text == ":"

    def top(self) -> Assertion:
        if not self.at_tag():
            body = self.a_impl()
            if self.at("or") and self.peek().text in ("ok", "er") and self.peek(2).text == ":":
                self.fail("untagged formula cannot be mixed with tagged parts")
            self.end()
            return Tagged(Flag.OK, body)
        parts = [self.tagged()]
        while self.at("or") and self.peek().text in ("ok", "er") and self.peek(2).text == ":":
            self.pos += 1
            parts.append(self.tagged())
        self.end()
        out = parts[-1]
        for p in reversed(parts[:-1]):
            out = Or(p, out)
        return out

    def end(self):
        if self.tok.kind != "eof":
            self.fail("unexpected trailing input")

    def tagged(self) -> Assertion:
        flag = Flag(self.tok.text)
        self.pos += 2
        return Tagged(flag, self.a_impl())

    def a_impl(self) -> Assertion:
        lhs = self.a_or()
        if self.accept("=>"):
            return Implies(lhs, self.a_impl())
        return lhs

    def a_or(self) -> Assertion:
        lhs = self.a_and()
        while self.at("or", "||", "∨"):
            nxt = self.peek()
            if nxt.text in ("ok", "er") and self.peek(2).text == ":":
                break  # the next tagged part starts here
            self.pos += 1
            lhs = Or(lhs, self.a_and())
        return lhs

    def a_and(self) -> Assertion:
        lhs = self.a_unary()
        while self.accept("and", "&&", "∧"):
            lhs = And(lhs, self.a_unary())
        return lhs

    def a_unary(self) -> Assertion:
        if self.at_tag():
            self.fail("flag tags are only allowed at the top level")
        if self.accept("not", "!", "¬"):
            return Not(self.a_unary())
        if self.accept("true"):
            return TRUE
        if self.accept("false"):
            return FALSE
        if self.accept("exists", "∃"):
            vs = [self.ident()]
            while self.tok.kind == "ident" and self.tok.text not in KEYWORDS:
                vs.append(self.ident())
            self.expect(".")
            self.bound.extend(vs)
            try:
                body = self.a_impl()
            finally:
                del self.bound[-len(vs):]
            for v in reversed(vs):
                body = Exists(v, body)
            return body
        if self.at("("):
            save = self.pos
            self.pos += 1
            try:
                p = self.a_impl()
                self.expect(")")
                if not (self.tok.kind == "op" and self.tok.text in _CMP_TOKENS):
                    return p
            except UndeclaredVariable:
                raise
            except ParseError:
                pass
            self.pos = save
        return Bool(self.comparison())


def parse_assertion(text: str, vars: Iterable[str] | None = None) -> Assertion:
    """Parse ``("ok:"|"er:")? formula``; an untagged formula means its ok-part.

    When ``vars`` is given, free variables outside it are rejected.
    """
    declared = frozenset(vars) if vars is not None else None
    return _AssertionParser(text, declared).top()
