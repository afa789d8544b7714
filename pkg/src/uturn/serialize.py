"""JSON encoding of programs, assertions and proof trees.

Every node is an object with a ``"t"`` tag. Derivations store their rule
name, concluded triple and children; replay trees add ``ref`` (the path of
the replayed node) and are resolved against the replayed derivation when
loaded, so a document is self-contained and can be re-checked.
"""

from __future__ import annotations

import json
from typing import Any

from . import assertions as A
from . import lang as L
from .proof import Derivation, Triple
from .state import Flag, Universe
from .uturn import ReplayNode

FORMAT = "uturn-proof"
VERSION = 1


class FormatError(ValueError):
    """The document does not follow the proof schema."""


# ---------------------------------------------------------------------------
# expressions and commands


def aexp_to_json(a: L.AExp) -> dict:
    if isinstance(a, L.IntLit):
        return {"t": "int", "v": a.value}
    if isinstance(a, L.Var):
        return {"t": "var", "name": a.name}
    return {"t": "bin", "op": a.op, "l": aexp_to_json(a.lhs), "r": aexp_to_json(a.rhs)}


def bexp_to_json(b: L.BExp) -> dict:
    if isinstance(b, L.BFalse):
        return {"t": "false"}
    if isinstance(b, L.BNot):
        return {"t": "not", "arg": bexp_to_json(b.arg)}
    if isinstance(b, L.BAnd):
        return {"t": "and", "l": bexp_to_json(b.lhs), "r": bexp_to_json(b.rhs)}
    return {"t": "cmp", "op": b.op, "l": aexp_to_json(b.lhs), "r": aexp_to_json(b.rhs)}


def acmd_to_json(c: L.ACmd) -> dict:
    if isinstance(c, L.Skip):
        return {"t": "skip"}
    if isinstance(c, L.Assign):
        return {"t": "assign", "var": c.var, "expr": aexp_to_json(c.expr)}
    if isinstance(c, L.Assume):
        return {"t": "assume", "cond": bexp_to_json(c.cond)}
    if isinstance(c, L.Nondet):
        return {"t": "nondet", "var": c.var}
    return {"t": "error"}


def rcmd_to_json(r: L.RCmd) -> dict:
    if isinstance(r, L.Atom):
        return {"t": "atom", "cmd": acmd_to_json(r.cmd)}
    if isinstance(r, L.Seq):
        return {"t": "seq", "l": rcmd_to_json(r.first), "r": rcmd_to_json(r.second)}
    if isinstance(r, L.Choice):
        return {"t": "choice", "l": rcmd_to_json(r.left), "r": rcmd_to_json(r.right)}
    return {"t": "star", "body": rcmd_to_json(r.body)}


def _tag(o: Any) -> str:
    if not isinstance(o, dict) or "t" not in o:
        raise FormatError(f"expected a tagged object, found {o!r}")
    return o["t"]


def aexp_from_json(o) -> L.AExp:
    t = _tag(o)
    if t == "int":
        return L.IntLit(int(o["v"]))
    if t == "var":
        return L.Var(str(o["name"]))
    if t == "bin":
        if o["op"] not in L.ARITH_OPS:
            raise FormatError(f"unknown operator {o['op']!r}")
        return L.BinOp(o["op"], aexp_from_json(o["l"]), aexp_from_json(o["r"]))
    raise FormatError(f"unknown expression tag {t!r}")


def bexp_from_json(o) -> L.BExp:
    t = _tag(o)
    if t == "false":
        return L.FALSE_B
    if t == "not":
        return L.BNot(bexp_from_json(o["arg"]))
    if t == "and":
        return L.BAnd(bexp_from_json(o["l"]), bexp_from_json(o["r"]))
    if t == "cmp":
        if o["op"] not in L.CORE_CMP_OPS:
            raise FormatError(f"unknown comparison {o['op']!r}")
        return L.Cmp(o["op"], aexp_from_json(o["l"]), aexp_from_json(o["r"]))
    raise FormatError(f"unknown condition tag {t!r}")


def acmd_from_json(o) -> L.ACmd:
    t = _tag(o)
    if t == "skip":
        return L.Skip()
    if t == "assign":
        return L.Assign(str(o["var"]), aexp_from_json(o["expr"]))
    if t == "assume":
        return L.Assume(bexp_from_json(o["cond"]))
    if t == "nondet":
        return L.Nondet(str(o["var"]))
    if t == "error":
        return L.Error()
    raise FormatError(f"unknown atom tag {t!r}")


def rcmd_from_json(o) -> L.RCmd:
    t = _tag(o)
    if t == "atom":
        return L.Atom(acmd_from_json(o["cmd"]))
    if t == "seq":
        return L.Seq(rcmd_from_json(o["l"]), rcmd_from_json(o["r"]))
    if t == "choice":
        return L.Choice(rcmd_from_json(o["l"]), rcmd_from_json(o["r"]))
    if t == "star":
        return L.Star(rcmd_from_json(o["body"]))
    raise FormatError(f"unknown command tag {t!r}")


# ---------------------------------------------------------------------------
# assertions


def assertion_to_json(p: A.Assertion) -> dict:
    if isinstance(p, A.Bool):
        return {"t": "bool", "cond": bexp_to_json(p.cond)}
    if isinstance(p, A.Not):
        return {"t": "not", "arg": assertion_to_json(p.arg)}
    if isinstance(p, (A.And, A.Or, A.Implies)):
        t = {A.And: "and", A.Or: "or", A.Implies: "implies"}[type(p)]
        return {"t": t, "l": assertion_to_json(p.lhs), "r": assertion_to_json(p.rhs)}
    if isinstance(p, A.Exists):
        return {"t": "exists", "var": p.var, "body": assertion_to_json(p.body)}
    if isinstance(p, A.Tagged):
        return {"t": "tagged", "flag": p.flag.value, "body": assertion_to_json(p.body)}
    if isinstance(p, A.Enum):
        return {
            "t": "enum",
            "vars": list(p.vars),
            "stores": sorted(list(s) for s in p.stores),
            "subst": [[x, aexp_to_json(a)] for x, a in p.subst],
        }
    raise FormatError(f"cannot serialize {type(p).__name__}")


def assertion_from_json(o) -> A.Assertion:
    t = _tag(o)
    if t == "bool":
        return A.Bool(bexp_from_json(o["cond"]))
    if t == "not":
        return A.Not(assertion_from_json(o["arg"]))
    if t in ("and", "or", "implies"):
        cls = {"and": A.And, "or": A.Or, "implies": A.Implies}[t]
        return cls(assertion_from_json(o["l"]), assertion_from_json(o["r"]))
    if t == "exists":
        return A.Exists(str(o["var"]), assertion_from_json(o["body"]))
    if t == "tagged":
        return A.Tagged(Flag(o["flag"]), assertion_from_json(o["body"]))
    if t == "enum":
        vars_ = tuple(o["vars"])
        stores = frozenset(tuple(int(v) for v in s) for s in o["stores"])
        if any(len(s) != len(vars_) for s in stores):
            raise FormatError("enumerated store of the wrong width")
        subst = tuple((str(x), aexp_from_json(a)) for x, a in o.get("subst", []))
        return A.Enum(vars_, stores, subst)
    raise FormatError(f"unknown assertion tag {t!r}")


# ---------------------------------------------------------------------------
# proof trees


def derivation_to_json(d: Derivation) -> dict:
    return {
        "rule": d.rule,
        "pre": assertion_to_json(d.pre),
        "cmd": rcmd_to_json(d.cmd),
        "post": assertion_to_json(d.post),
        "children": [derivation_to_json(c) for c in d.children],
    }


def derivation_from_json(o) -> Derivation:
    try:
        t = Triple(assertion_from_json(o["pre"]), rcmd_from_json(o["cmd"]),
                   assertion_from_json(o["post"]))
        return Derivation(str(o["rule"]), t,
                          tuple(derivation_from_json(c) for c in o.get("children", [])))
    except (KeyError, TypeError) as e:
        raise FormatError(f"malformed derivation node: {e}") from None


def replay_to_json(n: ReplayNode) -> dict:
    return {
        "rule": n.rule,
        "pre": assertion_to_json(n.pre),
        "post": assertion_to_json(n.post),
        "ref": list(n.ref_path),
        "children": [replay_to_json(c) for c in n.children],
    }


def replay_from_json(o, base: Derivation) -> ReplayNode:
    try:
        path = tuple(int(i) for i in o["ref"])
        try:
            ref = base.at(path)
        except IndexError:
            raise FormatError(f"reference {list(path)} is not a node of the derivation") from None
        return ReplayNode(
            str(o["rule"]), assertion_from_json(o["pre"]), assertion_from_json(o["post"]),
            ref, path, tuple(replay_from_json(c, base) for c in o.get("children", [])),
        )
    except (KeyError, TypeError) as e:
        raise FormatError(f"malformed replay node: {e}") from None


# ---------------------------------------------------------------------------
# documents


KINDS = ("il", "sil", "uturn", "turnu")


def make_document(kind: str, u: Universe, cmd: L.RCmd, derivation: Derivation,
                  replay: ReplayNode | None = None) -> dict:
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "kind": kind,
        "universe": {"modulus": u.modulus, "vars": list(u.vars)},
        "program": rcmd_to_json(cmd),
        "derivation": derivation_to_json(derivation),
    }
    if replay is not None:
        doc["replay"] = replay_to_json(replay)
    return doc


class Document:
    def __init__(self, kind: str, universe: Universe, cmd: L.RCmd, derivation: Derivation,
                 replay: ReplayNode | None):
        self.kind = kind
        self.universe = universe
        self.cmd = cmd
        self.derivation = derivation
        self.replay = replay


def load_document(o: dict) -> Document:
    if not isinstance(o, dict) or o.get("format") != FORMAT:
        raise FormatError("not a proof document")
    if o.get("version") != VERSION:
        raise FormatError(f"unsupported version {o.get('version')!r}")
    kind = o.get("kind")
    if kind not in KINDS:
        raise FormatError(f"unknown document kind {kind!r}")
    try:
        uo = o["universe"]
        u = Universe(int(uo["modulus"]), tuple(uo["vars"]))
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"bad universe: {e}") from None
    cmd = rcmd_from_json(o["program"])
    d = derivation_from_json(o["derivation"])
    replay = replay_from_json(o["replay"], d) if "replay" in o else None
    if kind in ("uturn", "turnu") and replay is None:
        raise FormatError("replay tree missing")
    return Document(kind, u, cmd, d, replay)


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=1)


def loads(text: str) -> Document:
    try:
        return load_document(json.loads(text))
    except json.JSONDecodeError as e:
        raise FormatError(f"invalid JSON: {e}") from None
