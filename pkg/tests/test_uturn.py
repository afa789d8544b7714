import random

import pytest
from hypothesis import given

from generators import rand_assertion, rand_rcmd, rand_sub_assertion, rand_subset, seeds
from uturn.assertions import (
    FALSE, conj, disj, enum_of, equivalent, extension, parse_assertion, sp_atom,
)
from uturn.il import Heuristics, check_il_derivation, il_valid, synthesize_forward
from uturn.lang import Assign, Atom, parse_aexp, parse_program, parse_source
from uturn.proof import Derivation, DerivationError, Triple
from uturn.sil import sil_valid, synthesize_backward
from uturn.state import Flag, StateSet, Universe
from uturn.uturn import (
    FOO_POST, FOO_SOURCE, TURNU_RULES, UTURN_RULES, AlgorithmPreconditionError, Judgment,
    ReplayNode, check_judgment_validity, check_turnu_derivation, check_turnu_validity,
    check_uturn_derivation, run_turnu, run_uturn,
)


def A(text):
    return parse_assertion(text)


COUNTDOWN = parse_source("x := 10; while (x > 0) { x := x - 1 }; error()")
U32 = Universe(32, COUNTDOWN.vars)


def countdown():
    return synthesize_forward(A("ok: true"), COUNTDOWN.cmd, Heuristics(max_unroll=10), U32)


def test_false_judgment_is_valid():
    d = countdown()
    assert check_judgment_validity(Judgment(d.triple, FALSE, d.cmd, FALSE), U32)


def test_countdown_replay():
    d = countdown()
    pp, ud = run_uturn(d, A("er: x = 0"), U32)
    ok = StateSet.of_flag(U32, Flag.OK)
    assert extension(pp, U32).flag_part(Flag.OK) == ok
    j = check_uturn_derivation(ud, U32)
    assert j == Judgment(d.triple, pp, d.cmd, A("er: x = 0"))
    assert check_judgment_validity(j, U32)
    assert "UConsSIL" not in ud.rules()


def test_enlarged_pre_breaks_condition_2():
    d = synthesize_forward(A("ok: x = 1"), parse_program("x := x + 1"), Heuristics(), U32)
    pp, _ = run_uturn(d, d.post, U32)
    v = check_judgment_validity(Judgment(d.triple, disj(pp, A("ok: x = 5")), d.cmd, d.post), U32)
    assert not v and 2 in v.failed and 3 not in v.failed and "2" in str(v)


def test_mismatched_emptiness_breaks_condition_4():
    d = synthesize_forward(A("ok: x = 1"), parse_program("x := x + 1"), Heuristics(), U32)
    v = check_judgment_validity(Judgment(d.triple, A("ok: x = 1"), d.cmd, FALSE), U32)
    assert 4 in v.failed and 2 not in v.failed and 3 not in v.failed


def test_single_assign_replay_of_full_post():
    u = Universe(8, ("x", "y"))
    c = Assign("x", parse_aexp("y + 1"))
    p = A("ok: y < 2")
    d = Derivation("ILAssign", Triple(p, Atom(c), sp_atom(c, p)))
    pp, ud = run_uturn(d, d.post, u)
    assert equivalent(pp, p, u)
    assert ud.rule == "UAssign"
    check_uturn_derivation(ud, u)


def test_choice_rule_must_match_the_il_node():
    u = Universe(8, ("x",))
    r = parse_program("choice { x := 1 } or { x := 2 }")
    d = synthesize_forward(A("ok: true"), r, Heuristics(branch_policy="right"), u)
    assert d.rule == "ILChoiceR"
    _, ud = run_uturn(d, d.post, u)
    forged = ReplayNode("UChoiceL", ud.pre, ud.post, ud.ref, (), ud.children)
    with pytest.raises(DerivationError, match="ILChoiceL"):
        check_uturn_derivation(forged, u)


def test_children_must_replay_the_il_children():
    u = Universe(8, ("x",))
    d = synthesize_forward(A("ok: true"), parse_program("x := 1; x := x + 1"), Heuristics(), u)
    _, ud = run_uturn(d, d.post, u)
    left, right = ud.children
    swapped = ReplayNode("USeq", ud.pre, ud.post, ud.ref, (), (right, left))
    with pytest.raises(DerivationError):
        check_uturn_derivation(swapped, u)


def test_precondition_violations():
    d = countdown()
    with pytest.raises(AlgorithmPreconditionError):
        run_uturn(d, FALSE, U32)
    with pytest.raises(AlgorithmPreconditionError):
        run_uturn(d, A("er: x = 1"), U32)
    with pytest.raises(AlgorithmPreconditionError):
        run_uturn(d, A("ok: x = 0"), U32)


def test_empty_disjunct_emits_empty_rule():
    u = Universe(8, ("x",))
    r = parse_program("if (x = 0) { x := 1 } else { error() }")
    d = synthesize_forward(A("ok: true"), r, Heuristics(), u)
    pp, ud = run_uturn(d, A("ok: x = 1"), u)
    assert "UEmpty" in ud.rules()
    assert equivalent(pp, A("ok: x = 0"), u)


def test_cons_sil_rule():
    u = Universe(8, ("x",))
    r = parse_program("x := x + 1")
    d = synthesize_forward(A("ok: x <= 1"), r, Heuristics(), u)
    _, inner = run_uturn(d, A("ok: x = 1"), u)
    # shrink the pre, keep the post: accepted and still valid
    node = ReplayNode("UConsSIL", A("ok: x = 0"), A("ok: x = 1 or x = 2"), d, (), (inner,))
    j = check_uturn_derivation(node, u)
    assert check_judgment_validity(j, u)
    # an empty pre is refused
    bad = ReplayNode("UConsSIL", FALSE, A("ok: x = 1"), d, (), (inner,))
    with pytest.raises(DerivationError, match="false"):
        check_uturn_derivation(bad, u)
    # a post outside the IL post is refused
    bad = ReplayNode("UConsSIL", A("ok: x = 0"), A("ok: x = 1 or x = 3"), d, (), (inner,))
    with pytest.raises(DerivationError):
        check_uturn_derivation(bad, u)


def test_rejects_broken_base_derivation():
    u = Universe(8, ("x",))
    d = synthesize_forward(A("ok: x = 1"), parse_program("x := x + 1"), Heuristics(), u)
    broken = Derivation("ILAssign", Triple(d.pre, d.cmd, A("ok: x = 3")))
    node = ReplayNode("UAssign", A("ok: x = 1"), A("ok: x = 3"), broken)
    with pytest.raises(DerivationError, match="replayed derivation"):
        check_uturn_derivation(node, u)


def test_rule_names():
    assert {"UConsIL", "UConsSIL", "UEmpty", "UError"} <= set(UTURN_RULES)
    assert {"TConsIL", "TConsSIL", "TEmpty"} <= set(TURNU_RULES)


def _random_run(seed, u=Universe(5, ("x", "y"))):
    rng = random.Random(seed)
    r = rand_rcmd(rng, u.vars, u, 5)
    p = rand_assertion(rng, u.vars, u)
    h = Heuristics(max_unroll=rng.randint(0, 5), max_disjuncts=rng.randint(2, 10),
                   branch_policy=rng.choice(["both", "left", "right"]))
    d = synthesize_forward(p, r, h, u)
    return rng, u, r, d


@given(seeds())
def test_progress_and_il_validity(seed):
    rng, u, r, d = _random_run(seed)
    if not extension(d.post, u):
        return
    q = rand_sub_assertion(rng, d.post, u, u.vars)
    pp, ud = run_uturn(d, q, u)
    j = check_uturn_derivation(ud, u)
    assert j == Judgment(d.triple, pp, r, q)
    assert check_judgment_validity(j, u)
    assert il_valid(Triple(pp, r, q), u)
    assert extension(pp, u)
    assert "UConsSIL" not in ud.rules()
    # monotone shrinking
    for _, n in ud.walk():
        assert extension(n.pre, u) <= extension(n.ref.pre, u)
        assert extension(n.post, u) <= extension(n.ref.post, u)


@given(seeds())
def test_checker_soundness_on_mutated_trees(seed):
    rng, u, r, d = _random_run(seed)
    if not extension(d.post, u):
        return
    q = rand_sub_assertion(rng, d.post, u, u.vars)
    _, ud = run_uturn(d, q, u)
    nodes = [n for _, n in ud.walk()]
    target = rng.choice(nodes)
    junk = enum_of(rand_subset(rng, StateSet.full(u), nonempty=False))

    def rebuild(n):
        kids = tuple(rebuild(c) for c in n.children)
        if n is target:
            which = rng.random()
            pre = junk if which < 0.5 else n.pre
            post = junk if which >= 0.5 else n.post
            return ReplayNode(n.rule, pre, post, n.ref, n.ref_path, kids)
        return ReplayNode(n.rule, n.pre, n.post, n.ref, n.ref_path, kids)

    mutated = rebuild(ud)
    if rng.random() < 0.5:
        shrink = enum_of(rand_subset(rng, extension(mutated.pre, u), nonempty=True))
        mutated = ReplayNode("UConsSIL", shrink, conj(d.post, disj(mutated.post, junk)), d, (), (mutated,))
    try:
        j = check_uturn_derivation(mutated, u)
    except DerivationError:
        return
    assert check_judgment_validity(j, u)


# Turn-U ------------------------------------------------------------------------------


def test_turnu_skip():
    u = Universe(8, ("x",))
    q = A("ok: x = 2")
    d = synthesize_backward(parse_program("skip"), q, Heuristics(), u)
    qp, td = run_turnu(d, d.pre, u)
    assert qp == d.pre and td.rule == "TSkip"


def test_turnu_foo_variant():
    prog = parse_source(FOO_SOURCE)
    u = Universe(8, prog.vars)
    d = synthesize_backward(prog.cmd, A(FOO_POST), Heuristics(), u)
    ok = extension(d.pre, u).flag_part(Flag.OK)
    assert ok == extension(A("ok: b != 0"), u)
    qp, td = run_turnu(d, A("ok: b != 0"), u)
    assert extension(qp, u) == extension(A("er: b != 0 and x = 0 and p = 0"), u)
    j = check_turnu_derivation(td, u)
    assert check_turnu_validity(j, u)
    assert sil_valid(Triple(A("ok: b != 0"), prog.cmd, qp), u)


def test_turnu_precondition():
    u = Universe(8, ("x",))
    d = synthesize_backward(parse_program("x := 1"), A("ok: x = 1"), Heuristics(), u)
    with pytest.raises(AlgorithmPreconditionError):
        run_turnu(d, FALSE, u)
    d = synthesize_backward(parse_program("assume(x = 1)"), A("ok: true"), Heuristics(), u)
    with pytest.raises(AlgorithmPreconditionError):
        run_turnu(d, A("ok: x = 2"), u)


@given(seeds())
def test_turnu_duality(seed):
    rng = random.Random(seed)
    u = Universe(5, ("x", "y"))
    r = rand_rcmd(rng, u.vars, u, 5)
    q = rand_assertion(rng, u.vars, u)
    d = synthesize_backward(r, q, Heuristics(max_unroll=rng.randint(0, 5)), u)
    if not extension(d.pre, u):
        return
    pp = rand_sub_assertion(rng, d.pre, u, u.vars)
    qp, td = run_turnu(d, pp, u)
    j = check_turnu_derivation(td, u)
    assert j == Judgment(d.triple, pp, r, qp)
    assert check_turnu_validity(j, u)
    assert sil_valid(Triple(pp, r, qp), u) and il_valid(Triple(pp, r, qp), u)
    assert "TConsIL" not in td.rules()


def test_il_tree_check_runs_first():
    d = countdown()
    check_il_derivation(d, U32)
