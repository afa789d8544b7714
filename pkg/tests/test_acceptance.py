"""Acceptance criteria 1 to 8, one test each.

Each test records a ``PASS``/``FAIL`` line with its sample count and
runtime; the lines are printed in the terminal summary and on stdout.
"""

import random
import time

import conftest
from generators import (
    rand_acmd, rand_aexp, rand_assertion, rand_bexp, rand_rcmd, rand_sub_assertion, rand_subset,
)
from uturn.assertions import enum_of, equivalent, extension, parse_assertion, sp_atom, wp_atom
from uturn.axioms import (
    combined_axiom_custom, verify_schema_completeness, verify_schema_validity,
    xpp_transformers,
)
from uturn.il import Heuristics, check_il_derivation, il_valid, synthesize_forward
from uturn.lang import Assign, Assume, Atom, Error, Nondet, Skip, parse_source
from uturn.proof import Triple
from uturn.semantics import bwsem, fast_bwsem, fast_fwsem, fwsem
from uturn.sil import check_sil_derivation, sil_valid, synthesize_backward
from uturn.state import Flag, StateSet, Universe
from uturn.uturn import (
    FOO_POST, FOO_SOURCE, check_judgment_validity, check_turnu_derivation,
    check_turnu_validity, check_uturn_derivation, run_turnu, run_uturn,
)


def report(n, ok, detail, t0):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail}; {time.time() - t0:.2f}s)"
    conftest.ACCEPTANCE.append(line)
    print(line)
    assert ok, line


A = parse_assertion


def test_criterion_1_countdown():
    t0 = time.time()
    prog = parse_source("x := 10; while (x > 0) { x := x - 1 }; error()")
    u = Universe(32, prog.vars)
    d = synthesize_forward(A("ok: true"), prog.cmd, Heuristics(max_unroll=10), u)
    check_il_derivation(d, u)
    post_ok = equivalent(d.post, A("er: x = 0"), u)
    pp, ud = run_uturn(d, A("er: x = 0"), u)
    pre_ok = extension(pp, u).flag_part(Flag.OK) == StateSet.of_flag(u, Flag.OK)
    valid = bool(check_judgment_validity(check_uturn_derivation(ud, u), u))
    elapsed = time.time() - t0
    report(1, post_ok and pre_ok and valid and elapsed < 1.0,
           f"post = er: x = 0 {post_ok}, pre covers all ok {pre_ok}", t0)


# criterion 2 runs are reused by criterion 7
_RUNS: list = []


def _criterion_2_runs():
    if _RUNS:
        return _RUNS
    u = Universe(8, ("x", "y", "z"))
    h = Heuristics(max_unroll=10, max_disjuncts=8)
    seed = 0
    while len(_RUNS) < 1000:
        rng = random.Random(seed)
        seed += 1
        vs = u.vars[: rng.randint(1, 3)]
        r = rand_rcmd(rng, vs, u, 5)
        d = synthesize_forward(rand_assertion(rng, vs, u), r, h, u)
        if not extension(d.post, u):
            continue  # no nonempty Q' exists
        q = rand_sub_assertion(rng, d.post, u, vs)
        pp, ud = run_uturn(d, q, u)
        _RUNS.append((u, d, r, q, pp, ud))
    return _RUNS


def test_criterion_2_progress_and_il_validity():
    t0 = time.time()
    bad = 0
    for u, d, r, q, pp, ud in _criterion_2_runs():
        check_il_derivation(d, u)
        v = check_judgment_validity(ud.judgment, u)
        if not (v and il_valid(Triple(pp, r, q), u) and extension(pp, u)):
            bad += 1
    elapsed = time.time() - t0
    report(2, bad == 0 and elapsed < 300, f"{len(_RUNS)} programs, {bad} violations", t0)


def test_criterion_3_axiom_schema():
    t0 = time.time()
    u = Universe(8, ("x", "y"))
    rng = random.Random(3)
    atoms = [
        lambda: Assign(rng.choice(u.vars), rand_aexp(rng, u.vars, u)),
        lambda: Assume(rand_bexp(rng, u.vars, u)),
        lambda: Nondet(rng.choice(u.vars)),
        lambda: Skip(),
        lambda: Error(),
    ]
    bad = checked = 0
    for make in atoms:
        for _ in range(200):
            c = make()
            if not verify_schema_validity(c, rand_assertion(rng, u.vars, u),
                                          rand_assertion(rng, u.vars, u), u):
                bad += 1
            checked += 1
    samples = 0
    while samples < 200:
        c = rand_acmd(rng, u.vars, u)
        p = rand_assertion(rng, u.vars, u, allow_er=False)
        qs = rand_subset(rng, fast_fwsem(Atom(c), extension(p, u), u), nonempty=False)
        pre = enum_of(extension(p, u) & fast_bwsem(Atom(c), qs, u))
        t = Triple(pre, Atom(c), enum_of(qs))
        if not verify_schema_completeness(t, u):
            bad += 1
        samples += 1
    report(3, bad == 0, f"{checked} validity pairs, {samples} completeness samples, "
           f"{bad} violations", t0)


def test_criterion_4_increment_maybe():
    t0 = time.time()
    u = Universe(8, ("x", "y"))
    rng = random.Random(4)
    xpp = xpp_transformers("x")
    r = xpp.desugar()
    bad = 0
    for _ in range(100):
        p = rand_assertion(rng, u.vars, u, allow_er=False)
        q = rand_assertion(rng, u.vars, u, allow_er=False)
        t = combined_axiom_custom(xpp.fw, xpp.bw, p, q, r)
        P, Q = extension(p, u), extension(q, u)
        if extension(t.pre, u) != P & bwsem(r, Q, u) or extension(t.post, u) != Q & fwsem(r, P, u):
            bad += 1
    report(4, bad == 0, f"100 pairs, {bad} mismatches", t0)


def test_criterion_5_adjoint():
    t0 = time.time()
    u = Universe(4, ("x", "y"))
    rng = random.Random(5)
    states = list(StateSet.full(u))
    bad = 0
    for _ in range(100):
        r = rand_rcmd(rng, u.vars, u, 5)
        fw = {s: fwsem(r, StateSet.from_states(u, [s]), u) for s in states}
        bw = {s: bwsem(r, StateSet.from_states(u, [s]), u) for s in states}
        for s in states:
            for t in states:
                if (s in bw[t]) != (t in fw[s]):
                    bad += 1
    report(5, bad == 0, f"100 commands x {len(states)}^2 pairs, {bad} violations", t0)


def test_criterion_6_lemmas():
    t0 = time.time()
    u = Universe(8, ("x", "y"))
    rng = random.Random(6)
    bad = 0
    for _ in range(200):
        c = Assign(rng.choice(u.vars), rand_aexp(rng, u.vars, u))
        p = rand_assertion(rng, u.vars, u, allow_er=False)
        if not extension(p, u) <= extension(wp_atom(c, sp_atom(c, p)), u):
            bad += 1
    for _ in range(500):
        r = rand_rcmd(rng, u.vars, u, 4)
        # IL: a nonempty post forces a nonempty pre
        P = rand_subset(rng, extension(rand_assertion(rng, u.vars, u), u), nonempty=False)
        Q = rand_subset(rng, fast_fwsem(r, P, u), nonempty=False)
        if not il_valid(Triple(enum_of(P), r, enum_of(Q)), u) or (Q and not P):
            bad += 1
        # SIL: a nonempty pre forces a nonempty post
        Q = rand_subset(rng, extension(rand_assertion(rng, u.vars, u), u), nonempty=False)
        P = rand_subset(rng, fast_bwsem(r, Q, u), nonempty=False)
        if not sil_valid(Triple(enum_of(P), r, enum_of(Q)), u) or (P and not Q):
            bad += 1
    report(6, bad == 0, f"200 assignment samples, 500 IL and 500 SIL triples, {bad} violations", t0)


def test_criterion_7_coherence():
    t0 = time.time()
    bad = 0
    runs = _criterion_2_runs()
    for u, d, r, q, pp, ud in runs:
        j = check_uturn_derivation(ud, u)
        if j != ud.judgment or j.pre != pp or j.post != q or j.base != d.triple:
            bad += 1
        if "UConsSIL" in ud.rules():
            bad += 1
    report(7, bad == 0, f"{len(runs)} replays, {bad} violations", t0)


def test_criterion_8_turnu():
    t0 = time.time()
    u = Universe(8, ("x", "y"))
    rng = random.Random(8)
    runs = bad = 0
    while runs < 300:
        r = rand_rcmd(rng, u.vars, u, 5)
        d = synthesize_backward(r, rand_assertion(rng, u.vars, u), Heuristics(max_unroll=6), u)
        if not extension(d.pre, u):
            continue
        check_sil_derivation(d, u)
        pp = rand_sub_assertion(rng, d.pre, u, u.vars)
        qp, td = run_turnu(d, pp, u)
        j = check_turnu_derivation(td, u)
        t = Triple(pp, r, qp)
        if not (check_turnu_validity(j, u) and sil_valid(t, u) and il_valid(t, u)):
            bad += 1
        runs += 1
    prog = parse_source(FOO_SOURCE)
    fu = Universe(8, prog.vars)
    d = synthesize_backward(prog.cmd, A(FOO_POST), Heuristics(), fu)
    pre_shape = extension(d.pre, fu).flag_part(Flag.OK) == extension(A("ok: b != 0"), fu)
    qp, td = run_turnu(d, A("ok: b != 0"), fu)
    post_shape = extension(qp, fu) == extension(A("er: b != 0 and x = 0 and p = 0"), fu)
    foo_ok = pre_shape and post_shape and bool(check_turnu_validity(check_turnu_derivation(td, fu), fu))
    report(8, bad == 0 and foo_ok, f"{runs} dual runs, {bad} violations, foo {foo_ok}", t0)
