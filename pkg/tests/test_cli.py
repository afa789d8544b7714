import json

import pytest

from uturn.assertions import extension, parse_assertion
from uturn.cli import main
from uturn.lang import parse_source
from uturn.semantics import fwsem
from uturn.state import Flag, StateSet, Universe

COUNTDOWN = "x := 10; while (x > 0) { x := x - 1 }; error()"
BRANCHY = "if (x = 0) { y := 1 } else { y := 2 }"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def jrun(capsys, *argv):
    code, out, err = run(capsys, *argv, "--format", "json")
    return code, (json.loads(out) if out.strip() else None), err


@pytest.fixture
def countdown_file(tmp_path):
    p = tmp_path / "countdown.prog"
    p.write_text(COUNTDOWN)
    return str(p)


def test_analyze_countdown(capsys, countdown_file):
    code, data, _ = jrun(capsys, "analyze", countdown_file, "--pre", "ok: true", "--unroll", "10")
    assert code == 0
    assert data["post"] == "er: x = 0"


def test_analyze_skip(capsys):
    code, data, _ = jrun(capsys, "analyze", "skip", "--pre", "ok: true")
    assert code == 0 and data["post"] == "ok: true"


def test_analyze_left_branch_policy(capsys, tmp_path):
    code, _, _ = run(capsys, "analyze", BRANCHY, "--branch-policy", "left", "--modulus", "8",
                     "--emit-derivation", str(tmp_path / "d.json"))
    assert code == 0
    doc = json.loads((tmp_path / "d.json").read_text())
    from uturn.serialize import load_document
    d = load_document(doc).derivation
    u = Universe(8, ("x", "y"))
    left = parse_source("assume(x = 0); y := 1").cmd
    oracle = fwsem(left, StateSet.of_flag(u, Flag.OK), u)
    assert extension(d.post, u) == oracle


def test_analyze_text_output(capsys):
    code, out, _ = run(capsys, "analyze", "x := 1", "--modulus", "8")
    assert code == 0 and "[ok: x = 1]" in out and "ILAssign" in out


def test_parse_error_exit_1(capsys):
    code, _, err = run(capsys, "analyze", "x := := 1")
    assert code == 1 and "parse error" in err


def test_budget_exit_2(capsys):
    code, _, err = run(capsys, "analyze", "a := b + c + d + e", "--modulus", "64")
    assert code == 2 and "budget" in err


def test_literal_warning(capsys):
    code, _, err = run(capsys, "analyze", "x := 100", "--modulus", "8")
    assert code == 0 and "100" in err


def test_uturn_countdown(capsys, countdown_file, tmp_path):
    out_file = tmp_path / "u.json"
    code, data, _ = jrun(capsys, "uturn", countdown_file, "--post", "er: x = 0",
                         "--emit-derivation", str(out_file))
    assert code == 0
    u = Universe(32, ("x",))
    pre = parse_assertion(data["pre"], ("x",)) if "pre" in data else None
    assert pre is None or extension(pre, u).flag_part(Flag.OK) == StateSet.of_flag(u, Flag.OK)
    assert data["valid"] is True
    code, _, _ = run(capsys, "check", "--derivation", str(out_file))
    assert code == 0


def test_uturn_text_shows_both_columns(capsys, countdown_file):
    code, out, _ = run(capsys, "uturn", countdown_file, "--post", "er: x = 0")
    assert code == 0 and "[" in out and "<" in out


def test_uturn_false_target_exit_3(capsys, countdown_file):
    code, _, err = run(capsys, "uturn", countdown_file, "--post", "false")
    assert code == 3 and "precondition" in err


def test_uturn_non_subset_exit_3(capsys, countdown_file):
    code, _, _ = run(capsys, "uturn", countdown_file, "--post", "er: x = 3")
    assert code == 3


def test_mutated_derivation_exit_4(capsys, countdown_file, tmp_path):
    out_file = tmp_path / "u.json"
    assert run(capsys, "uturn", countdown_file, "--post", "er: x = 0",
               "--emit-derivation", str(out_file))[0] == 0
    doc = json.loads(out_file.read_text())
    node = doc["replay"]
    while node["children"]:
        node = node["children"][-1]
    node["post"] = {"t": "tagged", "flag": "ok", "body": {"t": "bool", "cond": {
        "t": "cmp", "op": "=", "l": {"t": "var", "name": "x"}, "r": {"t": "int", "v": 7}}}}
    out_file.write_text(json.dumps(doc))
    code, _, err = run(capsys, "check", "--derivation", str(out_file))
    assert code == 4 and "check failed" in err and "at" in err


def test_backward_and_turnu_foo(capsys, tmp_path):
    from uturn.uturn import FOO_POST, FOO_SOURCE
    prog = tmp_path / "foo.prog"
    prog.write_text(FOO_SOURCE)
    code, _, _ = run(capsys, "backward", str(prog), "--post", FOO_POST, "--modulus", "8")
    assert code == 0
    code, data, _ = jrun(capsys, "turnu", str(prog), "--post", FOO_POST, "--pre", "ok: b != 0",
                         "--modulus", "8")
    assert code == 0 and data["valid"] is True


def test_check_il_nondet(capsys):
    code, out, _ = run(capsys, "check", "--il", "ok: true", "x := nondet()", "ok: x > 0")
    assert code == 0 and "valid" in out


def test_check_sil_false(capsys):
    code, out, _ = run(capsys, "check", "--sil", "ok: false", "x := 1", "ok: false")
    assert code == 0


def test_check_invalid_prints_counterexample(capsys):
    code, out, _ = run(capsys, "check", "--il", "ok: x = 0", "x := x + 1", "ok: x = 1 or x = 2",
                       "--modulus", "8")
    assert code == 4 and "x = 2" in out


def test_axiom_increment(capsys):
    code, out, _ = run(capsys, "axiom", "x++?", "--pre", "ok: x = 1", "--post", "ok: x = 2")
    assert code == 0 and "x = 2" in out


def test_axiom_assign(capsys):
    code, out, _ = run(capsys, "axiom", "x := 0", "--pre", "ok: x = 1", "--post", "ok: true")
    assert code == 0 and "x = 0" in out


def test_missing_file_is_inline_text(capsys):
    code, _, _ = run(capsys, "analyze", "no_such_file.prog")
    assert code == 1


def test_deterministic_output(capsys):
    args = ("analyze", "choice { x := 1 } or { x := 2 }", "--branch-policy", "random",
            "--seed", "3", "--modulus", "8")
    assert run(capsys, *args) == run(capsys, *args)
