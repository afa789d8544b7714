import random

from hypothesis import given

from generators import rand_rcmd, rand_subset
from generators import seeds
from strategies import rcmds
from uturn.lang import Assign, Assume, Error, Nondet, Skip, Star, parse_aexp, parse_bexp, parse_program
from uturn.semantics import atomic_step, bwsem, fast_bwsem, fast_fwsem, fwsem
from uturn.state import Flag, StateSet, Universe, enumerate_states

U1 = Universe(32, ("x",))


def single(u, flag, **vals):
    return StateSet.from_states(u, [u.state(flag, **vals)])


def test_atomic_step_examples():
    assert atomic_step(Assign("x", parse_aexp("x + 1")), U1.state("ok", x=1), U1) == single(U1, "ok", x=2)
    assert not atomic_step(Assume(parse_bexp("x > 0")), U1.state("ok", x=0), U1)
    assert atomic_step(Assign("x", parse_aexp("0")), U1.state("er", x=5), U1) == single(U1, "er", x=5)
    assert atomic_step(Error(), U1.state("ok", x=3), U1) == single(U1, "er", x=3)
    assert atomic_step(Skip(), U1.state("ok", x=3), U1) == single(U1, "ok", x=3)


def test_fwsem_examples():
    s = single(U1, "ok", x=3)
    assert fwsem(parse_program("skip"), s, U1) == s
    loop = parse_program("while (x > 0) { x := x - 1 }")
    assert fwsem(loop, s, U1) == single(U1, "ok", x=0)
    u4 = Universe(4, ("x",))
    out = fwsem(parse_program("x := nondet()"), single(u4, "ok", x=0), u4)
    assert out == StateSet.from_states(u4, [u4.state("ok", x=v) for v in (-2, -1, 0, 1)])


def test_bwsem_examples():
    u = Universe(8, ("x", "y"))
    r = parse_program("x := 0")
    ok_y0 = [s for s in enumerate_states(u) if s.flag is Flag.OK and s.store[1] == 0]
    assert bwsem(r, single(u, "ok", x=0), u) == StateSet.from_states(u, ok_y0)
    u1 = Universe(8, ("x",))
    assert bwsem(r, single(u1, "ok", x=0), u1) == StateSet.of_flag(u1, Flag.OK)
    assert not bwsem(r, single(u1, "ok", x=1), u1)
    s = single(u1, "er", x=2) | single(u1, "ok", x=1)
    assert bwsem(parse_program("skip"), s, u1) == s


def test_divergent_loop_contributes_nothing_extra():
    u = Universe(4, ("x",))
    s = single(u, "ok", x=1)
    assert fwsem(Star(parse_program("skip")), s, u) == s
    assert not fwsem(parse_program("while (true) { skip }"), s, u)


def _setup(seed):
    rng = random.Random(seed)
    u = Universe(4, ("x", "y"))
    return rng, u, rand_rcmd(rng, u.vars, u, 4)


@given(seeds())
def test_adjoint_pairs(seed):
    rng, u, r = _setup(seed)
    states = list(enumerate_states(u))
    fw = {s: fwsem(r, StateSet.from_states(u, [s]), u) for s in states}
    for t in rng.sample(states, 6):
        bw = bwsem(r, StateSet.from_states(u, [t]), u)
        for s in states:
            assert (s in bw) == (t in fw[s])


@given(seeds())
def test_additivity(seed):
    rng, u, r = _setup(seed)
    full = StateSet.full(u)
    s1, s2 = rand_subset(rng, full, False), rand_subset(rng, full, False)
    assert fwsem(r, s1 | s2, u) == fwsem(r, s1, u) | fwsem(r, s2, u)
    assert bwsem(r, s1 | s2, u) == bwsem(r, s1, u) | bwsem(r, s2, u)


@given(seeds())
def test_er_identity(seed):
    rng, u, r = _setup(seed)
    e = rand_subset(rng, StateSet.of_flag(u, Flag.ER), False)
    assert fwsem(r, e, u) == e


@given(seeds())
def test_star_unfolding(seed):
    rng, u, r = _setup(seed)
    s = rand_subset(rng, StateSet.full(u), False)
    star = Star(r)
    assert fwsem(star, s, u) == s | fwsem(star, fwsem(r, s, u), u)


@given(rcmds, seeds())
def test_mask_semantics_matches_reference(r, seed):
    rng = random.Random(seed)
    u = Universe(3, ("x", "y", "z"))
    s = rand_subset(rng, StateSet.full(u), False)
    assert fast_fwsem(r, s, u) == fwsem(r, s, u)
    assert fast_bwsem(r, s, u) == bwsem(r, s, u)


def test_nondet_ranges_over_residues():
    u = Universe(5, ("x",))
    out = atomic_step(Nondet("x"), u.state("ok", x=0), u)
    assert len(out) == 5
