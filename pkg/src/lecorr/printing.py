"""Pretty-printers and JSON emission for terms, inequalities, meta-formulas.

Printing honors declared infix symbols when a signature is supplied and falls
back to prefix application otherwise. Output is ASCII and re-parseable:
parse(print(x)) == x structurally.
"""

from __future__ import annotations

from typing import Any

from .signature import Signature
from .syntax import (
    App,
    Atom,
    Bottom,
    Conominal,
    ExistsConom,
    ExistsNom,
    ForallConom,
    ForallNom,
    Inequality,
    Join,
    Meet,
    MetaAnd,
    MetaFormula,
    MetaImplies,
    MetaNot,
    MetaOr,
    Nominal,
    PropVar,
    Term,
    Top,
)

MEET_PREC = 40
JOIN_PREC = 35


def print_term(t: Term, sig: Signature | None = None) -> str:
    def infix_of(conn: str) -> tuple[str, int] | None:
        if sig is None or conn not in sig.connectives:
            return None
        d = sig.connectives[conn]
        if d.infix is None:
            return None
        return d.infix, d.prec

    def go(s: Term, parent_prec: int, right_spine: bool) -> str:
        if isinstance(s, PropVar) or isinstance(s, Nominal) or isinstance(s, Conominal):
            return s.name
        if isinstance(s, Top):
            return "top"
        if isinstance(s, Bottom):
            return "bot"
        if isinstance(s, (Meet, Join)):
            sym, prec = ("/\\", MEET_PREC) if isinstance(s, Meet) else ("\\/", JOIN_PREC)
            body = f"{go(s.left, prec + 1, False)} {sym} {go(s.right, prec, True)}"
            if prec < parent_prec or (prec == parent_prec and not right_spine):
                return f"({body})"
            return body
        assert isinstance(s, App)
        fx = infix_of(s.conn)
        if fx is not None and len(s.args) == 2:
            sym, prec = fx
            body = f"{go(s.args[0], prec + 1, False)} {sym} {go(s.args[1], prec, True)}"
            if prec < parent_prec or (prec == parent_prec and not right_spine):
                return f"({body})"
            return body
        if not s.args:
            return f"{s.conn}()"
        return f"{s.conn}({', '.join(go(a, 0, True) for a in s.args)})"

    return go(t, 0, True)


def print_ineq(iq: Inequality, sig: Signature | None = None) -> str:
    op = "!<=" if iq.negated else "<="
    return f"{print_term(iq.lhs, sig)} {op} {print_term(iq.rhs, sig)}"


IMPLIES_PREC = 10
OR_PREC = 20
AND_PREC = 25
NOT_PREC = 28


def print_meta(f: MetaFormula, sig: Signature | None = None) -> str:
    def go(g: MetaFormula, parent_prec: int) -> str:
        if isinstance(g, Atom):
            return print_ineq(g.ineq, sig)
        if isinstance(g, MetaAnd):
            body = " & ".join(go(p, AND_PREC + 1) for p in g.parts)
            return f"({body})" if AND_PREC < parent_prec else body
        if isinstance(g, MetaOr):
            body = " | ".join(go(p, OR_PREC + 1) for p in g.parts)
            return f"({body})" if OR_PREC < parent_prec else body
        if isinstance(g, MetaNot):
            return f"~{go(g.body, NOT_PREC + 1)}"
        if isinstance(g, MetaImplies):
            body = f"{go(g.antecedent, IMPLIES_PREC + 1)} => {go(g.consequent, IMPLIES_PREC)}"
            return f"({body})" if IMPLIES_PREC < parent_prec else body
        # quantifier: merge adjacent binders of the same kind into one prefix
        if isinstance(g, (ForallNom, ForallConom)):
            kind, types = "forall", (ForallNom, ForallConom)
        else:
            kind, types = "exists", (ExistsNom, ExistsConom)
        names: list[str] = []
        while isinstance(g, types):
            names.append(g.var)
            g = g.body
        body = f"{kind} {', '.join(names)}. {go(g, 0)}"
        return f"({body})" if parent_prec > 0 else body

    return go(f, 0)


# ---------------------------------------------------------------------------
# JSON views (stable field names: kind, name, args)

SCHEMA_VERSION = 1


def term_json(t: Term) -> dict[str, Any]:
    if isinstance(t, PropVar):
        return {"kind": "propvar", "name": t.name}
    if isinstance(t, Nominal):
        return {"kind": "nominal", "name": t.name}
    if isinstance(t, Conominal):
        return {"kind": "conominal", "name": t.name}
    if isinstance(t, Top):
        return {"kind": "top"}
    if isinstance(t, Bottom):
        return {"kind": "bot"}
    if isinstance(t, Meet):
        return {"kind": "meet", "args": [term_json(t.left), term_json(t.right)]}
    if isinstance(t, Join):
        return {"kind": "join", "args": [term_json(t.left), term_json(t.right)]}
    assert isinstance(t, App)
    return {"kind": "app", "name": t.conn, "args": [term_json(a) for a in t.args]}


def ineq_json(iq: Inequality) -> dict[str, Any]:
    return {
        "kind": "ineq",
        "negated": iq.negated,
        "args": [term_json(iq.lhs), term_json(iq.rhs)],
    }


def meta_json(f: MetaFormula) -> dict[str, Any]:
    if isinstance(f, Atom):
        return {"kind": "atom", "args": [ineq_json(f.ineq)]}
    if isinstance(f, MetaAnd):
        return {"kind": "and", "args": [meta_json(p) for p in f.parts]}
    if isinstance(f, MetaOr):
        return {"kind": "or", "args": [meta_json(p) for p in f.parts]}
    if isinstance(f, MetaNot):
        return {"kind": "not", "args": [meta_json(f.body)]}
    if isinstance(f, MetaImplies):
        return {"kind": "implies", "args": [meta_json(f.antecedent), meta_json(f.consequent)]}
    kind = {
        ForallNom: "forall_nom",
        ForallConom: "forall_conom",
        ExistsNom: "exists_nom",
        ExistsConom: "exists_conom",
    }[type(f)]
    return {"kind": kind, "name": f.var, "args": [meta_json(f.body)]}
