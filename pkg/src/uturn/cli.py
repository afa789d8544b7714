"""Command-line front end.

Exit codes: 0 success, 1 parse error, 2 state budget exceeded, 3 algorithm
precondition violated, 4 proof check failed or triple invalid.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Sequence

from . import assertions as A
from .assertions import extension, parse_assertion, show_states
from .axioms import combined_axiom, combined_axiom_custom, xpp_transformers
from .il import (
    BRANCH_POLICIES, Heuristics, check_il_derivation, il_counterexample, il_valid,
    synthesize_forward,
)
from .lang import (
    Atom, ParseError, Program, parse_source, pretty_print, show_acmd,
)
from .proof import Derivation, DerivationError, Triple, count_nodes
from .serialize import FormatError, loads, make_document, dumps
from .sil import check_sil_derivation, sil_counterexample, sil_valid, synthesize_backward
from .state import DEFAULT_MODULUS, BudgetExceeded, Universe
from .uturn import (
    CONDITIONS, AlgorithmPreconditionError, ReplayNode, check_judgment_validity,
    check_turnu_derivation, check_turnu_validity, check_uturn_derivation, run_turnu, run_uturn,
)

EXIT_OK, EXIT_PARSE, EXIT_BUDGET, EXIT_PRECONDITION, EXIT_CHECK = 0, 1, 2, 3, 4


class CheckFailed(Exception):
    pass


# ---------------------------------------------------------------------------
# inputs


def read_program(arg: str) -> Program:
    """``arg`` names a file when one exists, otherwise it is program text."""
    if os.path.isfile(arg):
        with open(arg, encoding="utf-8") as f:
            return parse_source(f.read())
    return parse_source(arg)


def make_universe(prog_vars: Sequence[str], texts: Sequence[str | None], modulus: int) -> Universe:
    names = list(prog_vars)
    for t in texts:
        if t is None:
            continue
        for v in sorted(A.free_vars(parse_assertion(t))):
            if v not in names:
                names.append(v)
    u = Universe(modulus, tuple(names) or ("x",))
    u.check_budget()
    return u


def warn_literals(prog: Program, u: Universe) -> None:
    for n in sorted(set(prog.literals)):
        if not u.in_range(n):
            print(f"warning: literal {n} lies outside [{u.lo}, {u.hi}] and wraps to {u.wrap(n)}",
                  file=sys.stderr)


def heuristics(args) -> Heuristics:
    return Heuristics(max_unroll=args.unroll, branch_policy=args.branch_policy, seed=args.seed,
                      max_disjuncts=args.max_disjuncts)


def fmt(p: A.Assertion, u: Universe) -> str:
    return show_states(extension(p, u))


# ---------------------------------------------------------------------------
# rendering


def _segments(n: ReplayNode) -> list[ReplayNode]:
    if n.rule[1:] == "Seq":
        return _segments(n.children[0]) + _segments(n.children[1])
    return [n]


def _indent(text: str, pad: str) -> str:
    return "\n".join(pad + line for line in text.splitlines())


def render_replay(root: ReplayNode, u: Universe, forward: str = "IL") -> str:
    """Linearized proof: the replayed derivation's assertions in square brackets,
    the refining triple's assertions in angle brackets, one pair per program point.
    """
    def point(il: A.Assertion, sil: A.Assertion) -> str:
        return f"  [{fmt(il, u)}]\n  <{fmt(sil, u)}>"

    uturn = forward == "IL"
    lines = []
    for seg in _segments(root):
        ref = seg.ref
        il_pre, sil_pre = (ref.pre, seg.pre) if uturn else (seg.pre, ref.pre)
        lines.append(point(il_pre, sil_pre))
        body = show_acmd(ref.cmd.cmd) if isinstance(ref.cmd, Atom) else pretty_print(ref.cmd)
        lines.append(_indent(body, "      ") + f"    -- {seg.rule}")
    il_post, sil_post = (root.ref.post, root.post) if uturn else (root.post, root.ref.post)
    lines.append(point(il_post, sil_post))
    return "\n".join(lines)


def emit(args, doc: dict) -> None:
    if args.emit_derivation:
        with open(args.emit_derivation, "w", encoding="utf-8") as f:
            f.write(dumps(doc))


def output(args, text: str, data: dict) -> None:
    if args.format == "json":
        print(json.dumps(data, indent=1))
    else:
        print(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_analyze(args) -> int:
    prog = read_program(args.program)
    u = make_universe(prog.vars, [args.pre], args.modulus)
    warn_literals(prog, u)
    pre = parse_assertion(args.pre, u.vars)
    d = synthesize_forward(pre, prog.cmd, heuristics(args), u)
    check_il_derivation(d, u)
    emit(args, make_document("il", u, prog.cmd, d))
    text = (f"[{fmt(d.pre, u)}]\n{_indent(pretty_print(prog.cmd), '  ')}\n[{fmt(d.post, u)}]\n"
            f"rules: {', '.join(sorted(d.rules()))}; nodes: {count_nodes(d)}")
    output(args, text, {"pre": fmt(d.pre, u), "post": fmt(d.post, u),
                        "post_size": len(extension(d.post, u)), "rules": sorted(d.rules()),
                        "nodes": count_nodes(d)})
    return EXIT_OK


def _forward_or_load(args, prog_cmd, u, pre_text) -> Derivation:
    if args.derivation:
        doc = _load(args.derivation)
        if doc.kind != "il":
            raise CheckFailed(f"expected an IL derivation, found {doc.kind}")
        check_il_derivation(doc.derivation, u)
        return doc.derivation
    pre = parse_assertion(pre_text, u.vars)
    return synthesize_forward(pre, prog_cmd, heuristics(args), u)


def _load(path: str):
    with open(path, encoding="utf-8") as f:
        return loads(f.read())


def cmd_uturn(args) -> int:
    if args.derivation and not args.program:
        doc = _load(args.derivation)
        u, cmd = doc.universe, doc.cmd
        prog = None
    else:
        prog = read_program(args.program)
        u = make_universe(prog.vars, [args.pre, args.post], args.modulus)
        warn_literals(prog, u)
        cmd = prog.cmd
    d = _forward_or_load(args, cmd, u, args.pre)
    target = parse_assertion(args.post, u.vars) if args.post else d.post
    pp, ud = run_uturn(d, target, u)
    check_uturn_derivation(ud, u)
    verdict = check_judgment_validity(ud.judgment, u)
    emit(args, make_document("uturn", u, cmd, d, ud))
    text = (render_replay(ud, u, "IL") + f"\n\nSIL pre: {fmt(pp, u)}\n"
            f"IL triple valid: {il_valid(Triple(pp, cmd, target), u)}; judgment: {verdict}")
    output(args, text, {"pre": fmt(pp, u), "post": fmt(target, u), "judgment": str(verdict),
                        "valid": bool(verdict), "il_valid": il_valid(Triple(pp, cmd, target), u)})
    return EXIT_OK if verdict else EXIT_CHECK


def cmd_backward(args) -> int:
    prog = read_program(args.program)
    u = make_universe(prog.vars, [args.post], args.modulus)
    warn_literals(prog, u)
    post = parse_assertion(args.post, u.vars)
    d = synthesize_backward(prog.cmd, post, heuristics(args), u)
    check_sil_derivation(d, u)
    emit(args, make_document("sil", u, prog.cmd, d))
    text = (f"<{fmt(d.pre, u)}>\n{_indent(pretty_print(prog.cmd), '  ')}\n<{fmt(d.post, u)}>\n"
            f"rules: {', '.join(sorted(d.rules()))}; nodes: {count_nodes(d)}")
    output(args, text, {"pre": fmt(d.pre, u), "post": fmt(d.post, u),
                        "rules": sorted(d.rules()), "nodes": count_nodes(d)})
    return EXIT_OK


def cmd_turnu(args) -> int:
    if args.derivation and not args.program:
        doc = _load(args.derivation)
        if doc.kind != "sil":
            raise CheckFailed(f"expected a SIL derivation, found {doc.kind}")
        u, cmd, d = doc.universe, doc.cmd, doc.derivation
        check_sil_derivation(d, u)
    else:
        prog = read_program(args.program)
        u = make_universe(prog.vars, [args.pre, args.post], args.modulus)
        warn_literals(prog, u)
        cmd = prog.cmd
        if args.post is None:
            raise AlgorithmPreconditionError("--post is required to run the backward pass")
        d = synthesize_backward(cmd, parse_assertion(args.post, u.vars), heuristics(args), u)
    target = parse_assertion(args.pre, u.vars) if args.pre else d.pre
    qp, td = run_turnu(d, target, u)
    check_turnu_derivation(td, u)
    verdict = check_turnu_validity(td.judgment, u)
    emit(args, make_document("turnu", u, cmd, d, td))
    sil_ok = sil_valid(Triple(target, cmd, qp), u)
    text = (render_replay(td, u, "SIL") + f"\n\nIL post: {fmt(qp, u)}\n"
            f"SIL triple valid: {sil_ok}; judgment: {verdict}")
    output(args, text, {"pre": fmt(target, u), "post": fmt(qp, u), "judgment": str(verdict),
                        "valid": bool(verdict), "sil_valid": sil_ok})
    return EXIT_OK if verdict else EXIT_CHECK


def _triple_verdict(kind: str, pre_t: str, prog_arg: str, post_t: str, args):
    prog = read_program(prog_arg)
    u = make_universe(prog.vars, [pre_t, post_t], args.modulus)
    warn_literals(prog, u)
    t = Triple(parse_assertion(pre_t, u.vars), prog.cmd, parse_assertion(post_t, u.vars))
    if kind == "il":
        ok, cex, what = il_valid(t, u), il_counterexample(t, u), "post state unreachable from the pre"
    else:
        ok, cex, what = sil_valid(t, u), sil_counterexample(t, u), "pre state that cannot reach the post"
    return ok, cex, what, u


def cmd_check(args) -> int:
    if args.il or args.sil:
        kind = "il" if args.il else "sil"
        pre_t, prog_arg, post_t = args.il or args.sil
        ok, cex, what, u = _triple_verdict(kind, pre_t, prog_arg, post_t, args)
        lines = [f"{kind.upper()} triple: {'valid' if ok else 'invalid'}"]
        data = {"kind": kind, "valid": ok}
        if cex is not None:
            store = ", ".join(f"{k} = {v}" for k, v in u.store_dict(cex.store).items())
            lines.append(f"counterexample ({what}): {cex.flag}: {store}")
            data["counterexample"] = {"flag": str(cex.flag), "store": u.store_dict(cex.store)}
        output(args, "\n".join(lines), data)
        return EXIT_OK if ok else EXIT_CHECK
    if not args.derivation:
        raise CheckFailed("give --il, --sil or --derivation")
    doc = _load(args.derivation)
    u = doc.universe
    if doc.kind in ("il", "sil"):
        checker = check_il_derivation if doc.kind == "il" else check_sil_derivation
        valid = il_valid if doc.kind == "il" else sil_valid
        t = checker(doc.derivation, u)
        ok = valid(t, u)
        text = (f"{doc.kind.upper()} derivation accepted ({count_nodes(doc.derivation)} nodes)\n"
                f"root: {fmt(t.pre, u)}  |  {fmt(t.post, u)}\nroot triple valid: {ok}")
        output(args, text, {"kind": doc.kind, "accepted": True, "valid": ok})
        return EXIT_OK if ok else EXIT_CHECK
    if doc.kind == "uturn":
        j = check_uturn_derivation(doc.replay, u)
        verdict = check_judgment_validity(j, u)
    else:
        j = check_turnu_derivation(doc.replay, u)
        verdict = check_turnu_validity(j, u)
    lines = [f"{doc.kind} derivation accepted"]
    for i, desc in CONDITIONS.items():
        lines.append(f"  condition {i} ({desc}): {'fail' if i in verdict.failed else 'ok'}")
    output(args, "\n".join(lines), {"kind": doc.kind, "accepted": True,
                                    "failed_conditions": list(verdict.failed)})
    return EXIT_OK if verdict else EXIT_CHECK


def cmd_axiom(args) -> int:
    atom = args.atom.strip()
    pre_t, post_t = args.pre or "ok: true", args.post or "ok: true"
    if atom.endswith("++?"):
        x = atom[:-3].strip()
        if not x.isidentifier():
            raise ParseError(f"bad variable in {atom!r}", 1, 1)
        tr = xpp_transformers(x)
        u = make_universe([x], [pre_t, post_t], args.modulus)
        P, Q = parse_assertion(pre_t, u.vars), parse_assertion(post_t, u.vars)
        t = combined_axiom_custom(tr.fw, tr.bw, P, Q, tr.desugar())
        shown = atom
    else:
        prog = read_program(atom)
        if not isinstance(prog.cmd, Atom):
            raise ParseError("expected a single atomic command", 1, 1)
        u = make_universe(prog.vars, [pre_t, post_t], args.modulus)
        P, Q = parse_assertion(pre_t, u.vars), parse_assertion(post_t, u.vars)
        t = combined_axiom(prog.cmd.cmd, P, Q)
        shown = show_acmd(prog.cmd.cmd)
    ok_il, ok_sil = il_valid(t, u), sil_valid(t, u)
    text = (f"<{A.show(t.pre)}>\n  {shown}\n<{A.show(t.post)}>\n"
            f"states: pre {fmt(t.pre, u)}; post {fmt(t.post, u)}\n"
            f"IL valid: {ok_il}; SIL valid: {ok_sil}")
    output(args, text, {"pre": A.show(t.pre), "post": A.show(t.post),
                        "il_valid": ok_il, "sil_valid": ok_sil})
    return EXIT_OK if ok_il and ok_sil else EXIT_CHECK


# ---------------------------------------------------------------------------
# argument parsing


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--modulus", type=int, default=DEFAULT_MODULUS,
                   help="number of representable integers (default %(default)s)")
    p.add_argument("--unroll", type=int, default=10, help="loop unrolling budget")
    p.add_argument("--branch-policy", choices=BRANCH_POLICIES, default="both")
    p.add_argument("--seed", type=int, default=0, help="seed for the random branch policy")
    p.add_argument("--max-disjuncts", type=int, default=16)
    p.add_argument("--emit-derivation", metavar="PATH", help="write the proof tree as JSON")
    p.add_argument("--format", choices=("text", "json"), default="text")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="uturn", description=(
        "Under-approximate program analysis: forward incorrectness proofs, "
        "backward replays and validity checks over a finite integer universe."))
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="forward IL analysis")
    p.add_argument("program", help="program file or inline program text")
    p.add_argument("--pre", default="ok: true")
    _common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("uturn", help="forward IL analysis followed by a U-Turn replay")
    p.add_argument("program", nargs="?")
    p.add_argument("--pre", default="ok: true")
    p.add_argument("--post", help="target subset of the IL post (default: the whole post)")
    p.add_argument("--derivation", help="replay a stored IL derivation instead")
    _common(p)
    p.set_defaults(func=cmd_uturn)

    p = sub.add_parser("backward", help="backward SIL analysis")
    p.add_argument("program")
    p.add_argument("--post", required=True)
    _common(p)
    p.set_defaults(func=cmd_backward)

    p = sub.add_parser("turnu", help="backward SIL analysis followed by a forward Turn-U replay")
    p.add_argument("program", nargs="?")
    p.add_argument("--post", help="post for the backward pass")
    p.add_argument("--pre", help="target subset of the SIL pre (default: the whole pre)")
    p.add_argument("--derivation", help="replay a stored SIL derivation instead")
    _common(p)
    p.set_defaults(func=cmd_turnu)

    p = sub.add_parser("check", help="validity of a triple or a stored derivation")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--il", nargs=3, metavar=("PRE", "PROGRAM", "POST"))
    g.add_argument("--sil", nargs=3, metavar=("PRE", "PROGRAM", "POST"))
    g.add_argument("--derivation", metavar="FILE")
    _common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("axiom", help="combined forward/backward axiom for an atom")
    p.add_argument("atom", help="atomic command, or 'x++?' for the optional increment")
    p.add_argument("--pre")
    p.add_argument("--post")
    _common(p)
    p.set_defaults(func=cmd_axiom)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, A.UnknownVariable, FormatError) as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except BudgetExceeded as e:
        print(f"budget exceeded: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except AlgorithmPreconditionError as e:
        print(f"precondition violated: {e}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (DerivationError, CheckFailed) as e:
        print(f"check failed: {e}", file=sys.stderr)
        return EXIT_CHECK
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
