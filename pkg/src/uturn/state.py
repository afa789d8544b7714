"""Bounded values, stores, flagged states and state sets.

Values are residues modulo ``M`` represented in ``[-M//2, M - M//2 - 1]``;
all arithmetic wraps. A universe fixes the modulus and the ordered variable
list, which together determine a finite, deterministically ordered space of
``2 * M**n`` flagged states.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, NamedTuple

import numpy as np

from .lang import AExp, BAnd, BExp, BFalse, BNot, IntLit, Var

DEFAULT_MODULUS = 32
DEFAULT_BUDGET = 1 << 20


class BudgetExceeded(Exception):
    """The state space is larger than the configured enumeration budget."""


class Flag(enum.Enum):
    OK = "ok"
    ER = "er"

    def __str__(self) -> str:
        return self.value

    @property
    def index(self) -> int:
        return 0 if self is Flag.OK else 1


FLAGS = (Flag.OK, Flag.ER)


class FlaggedState(NamedTuple):
    flag: Flag
    store: tuple[int, ...]  # one value per universe variable, in universe order


@dataclass(frozen=True)
class Universe:
    modulus: int = DEFAULT_MODULUS
    vars: tuple[str, ...] = ("x",)
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if self.modulus < 2:
            raise ValueError("modulus must be at least 2")
        if not self.vars:
            raise ValueError("a universe needs at least one variable")
        if len(set(self.vars)) != len(self.vars):
            raise ValueError("duplicate variable in universe")
        object.__setattr__(self, "vars", tuple(self.vars))

    @property
    def lo(self) -> int:
        return -(self.modulus // 2)

    @property
    def hi(self) -> int:
        return self.lo + self.modulus - 1

    @property
    def values(self) -> range:
        return range(self.lo, self.hi + 1)

    @property
    def n_stores(self) -> int:
        return self.modulus ** len(self.vars)

    @property
    def size(self) -> int:
        return 2 * self.n_stores

    def check_budget(self) -> None:
        if self.size > self.budget:
            raise BudgetExceeded(
                f"{self.size} states (modulus {self.modulus}, {len(self.vars)} vars) "
                f"exceed the budget of {self.budget}"
            )

    def wrap(self, v: int) -> int:
        return (v - self.lo) % self.modulus + self.lo

    def in_range(self, v: int) -> bool:
        return self.lo <= v <= self.hi

    def var_index(self, name: str) -> int:
        return self.vars.index(name)

    def store_dict(self, store: tuple[int, ...]) -> dict[str, int]:
        return dict(zip(self.vars, store))

    def store_of(self, mapping: Mapping[str, int]) -> tuple[int, ...]:
        return tuple(self.wrap(mapping[v]) for v in self.vars)

    def state(self, flag: Flag | str, **values: int) -> FlaggedState:
        """Convenience constructor: ``u.state("ok", x=1)``; missing vars default to 0."""
        flag = Flag(flag) if isinstance(flag, str) else flag
        return FlaggedState(flag, tuple(self.wrap(values.get(v, 0)) for v in self.vars))

    # index <-> state, matching enumeration order (flag major, then lexicographic store)
    def index_of(self, s: FlaggedState) -> int:
        idx = 0
        for v in s.store:
            idx = idx * self.modulus + (v - self.lo)
        return s.flag.index * self.n_stores + idx

    def state_at(self, index: int) -> FlaggedState:
        flag = FLAGS[index // self.n_stores]
        rest = index % self.n_stores
        digits = []
        for _ in self.vars:
            digits.append(rest % self.modulus + self.lo)
            rest //= self.modulus
        return FlaggedState(flag, tuple(reversed(digits)))


def enumerate_states(u: Universe) -> Iterator[FlaggedState]:
    """Every flagged state exactly once: ok before er, stores in lexicographic order."""
    u.check_budget()
    for i in range(u.size):
        yield u.state_at(i)


# ---------------------------------------------------------------------------
# expression evaluation on single stores


def eval_aexp(a: AExp, store: Mapping[str, int], u: Universe) -> int:
    if isinstance(a, IntLit):
        return u.wrap(a.value)
    if isinstance(a, Var):
        return store[a.name]
    lhs = eval_aexp(a.lhs, store, u)
    rhs = eval_aexp(a.rhs, store, u)
    if a.op == "+":
        return u.wrap(lhs + rhs)
    if a.op == "-":
        return u.wrap(lhs - rhs)
    return u.wrap(lhs * rhs)


def eval_bexp(b: BExp, store: Mapping[str, int], u: Universe) -> bool:
    if isinstance(b, BFalse):
        return False
    if isinstance(b, BNot):
        return not eval_bexp(b.arg, store, u)
    if isinstance(b, BAnd):
        return eval_bexp(b.lhs, store, u) and eval_bexp(b.rhs, store, u)
    lhs = eval_aexp(b.lhs, store, u)
    rhs = eval_aexp(b.rhs, store, u)
    if b.op == "=":
        return lhs == rhs
    if b.op == "!=":
        return lhs != rhs
    if b.op == "<=":
        return lhs <= rhs
    return lhs < rhs


# ---------------------------------------------------------------------------
# state sets


class StateSet:
    """An immutable set of flagged states of one universe.

    Stored as a boolean mask in enumeration order, so set algebra is cheap
    and iteration is deterministic.
    """

    __slots__ = ("universe", "mask", "_hash")

    def __init__(self, universe: Universe, mask: np.ndarray):
        mask = np.asarray(mask, dtype=bool).reshape(universe.size)
        mask.setflags(write=False)
        self.universe = universe
        self.mask = mask
        self._hash = None

    @classmethod
    def empty(cls, u: Universe) -> "StateSet":
        return cls(u, np.zeros(u.size, dtype=bool))

    @classmethod
    def full(cls, u: Universe) -> "StateSet":
        return cls(u, np.ones(u.size, dtype=bool))

    @classmethod
    def of_flag(cls, u: Universe, flag: Flag) -> "StateSet":
        m = np.zeros((2, u.n_stores), dtype=bool)
        m[flag.index] = True
        return cls(u, m)

    @classmethod
    def from_states(cls, u: Universe, states: Iterable[FlaggedState]) -> "StateSet":
        u.check_budget()
        m = np.zeros(u.size, dtype=bool)
        for s in states:
            m[u.index_of(s)] = True
        return cls(u, m)

    def _same(self, other: "StateSet") -> None:
        if self.universe != other.universe:
            raise ValueError("state sets from different universes")

    def __iter__(self) -> Iterator[FlaggedState]:
        for i in np.flatnonzero(self.mask):
            yield self.universe.state_at(int(i))

    def __len__(self) -> int:
        return int(self.mask.sum())

    def __bool__(self) -> bool:
        return bool(self.mask.any())

    def __contains__(self, s: FlaggedState) -> bool:
        return bool(self.mask[self.universe.index_of(s)])

    def __or__(self, other: "StateSet") -> "StateSet":
        self._same(other)
        return StateSet(self.universe, self.mask | other.mask)

    def __and__(self, other: "StateSet") -> "StateSet":
        self._same(other)
        return StateSet(self.universe, self.mask & other.mask)

    def __sub__(self, other: "StateSet") -> "StateSet":
        self._same(other)
        return StateSet(self.universe, self.mask & ~other.mask)

    def __le__(self, other: "StateSet") -> bool:
        self._same(other)
        return not bool((self.mask & ~other.mask).any())

    def __ge__(self, other: "StateSet") -> bool:
        return other <= self

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StateSet):
            return NotImplemented
        return self.universe == other.universe and bool(np.array_equal(self.mask, other.mask))

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.universe, self.mask.tobytes()))
        return self._hash

    def __repr__(self) -> str:
        items = list(self)
        shown = ", ".join(f"({s.flag},{self.universe.store_dict(s.store)})" for s in items[:6])
        more = f", ... {len(items) - 6} more" if len(items) > 6 else ""
        return f"StateSet{{{shown}{more}}}"

    def flag_part(self, flag: Flag) -> "StateSet":
        return self & StateSet.of_flag(self.universe, flag)

    def grid(self) -> np.ndarray:
        """The mask reshaped to ``(2, M, ..., M)`` with axes in universe variable order."""
        u = self.universe
        return self.mask.reshape((2,) + (u.modulus,) * len(u.vars))

    def witness(self) -> FlaggedState | None:
        idx = np.flatnonzero(self.mask)
        return self.universe.state_at(int(idx[0])) if len(idx) else None
