"""Many-sorted first-order formulas for frame correspondents.

Sorts: "W" for Kripke worlds, "A" for polarity objects, "X" for polarity
features.  Relational atoms are positive; negation is explicit.
"""

from __future__ import annotations

from dataclasses import dataclass

WORLD = "W"
OBJ = "A"
FEAT = "X"


class FOFormula:
    pass


@dataclass(frozen=True)
class FOAtom(FOFormula):
    rel: str
    args: tuple[str, ...]


@dataclass(frozen=True)
class FOEq(FOFormula):
    left: str
    right: str


@dataclass(frozen=True)
class FONot(FOFormula):
    body: FOFormula


@dataclass(frozen=True)
class FOAnd(FOFormula):
    parts: tuple[FOFormula, ...]


@dataclass(frozen=True)
class FOOr(FOFormula):
    parts: tuple[FOFormula, ...]


@dataclass(frozen=True)
class FOImplies(FOFormula):
    antecedent: FOFormula
    consequent: FOFormula


@dataclass(frozen=True)
class FOForall(FOFormula):
    var: str
    sort: str
    body: FOFormula


@dataclass(frozen=True)
class FOExists(FOFormula):
    var: str
    sort: str
    body: FOFormula


def fo_forall(vars_: list[tuple[str, str]], body: FOFormula) -> FOFormula:
    for v, s in reversed(vars_):
        body = FOForall(v, s, body)
    return body


def fo_exists(vars_: list[tuple[str, str]], body: FOFormula) -> FOFormula:
    for v, s in reversed(vars_):
        body = FOExists(v, s, body)
    return body


def fo_conj(parts: list[FOFormula]) -> FOFormula:
    if not parts:
        return FOAnd(())
    if len(parts) == 1:
        return parts[0]
    return FOAnd(tuple(parts))


def fo_disj(parts: list[FOFormula]) -> FOFormula:
    if not parts:
        return FOOr(())
    if len(parts) == 1:
        return parts[0]
    return FOOr(tuple(parts))


@dataclass
class FrameCondition:
    """A first-order frame correspondent: the setting is 'kripke' or
    'polarity'; the formula's free variables are listed with their sorts."""

    setting: str
    formula: FOFormula
    free: list[tuple[str, str]]

    def closed(self) -> FOFormula:
        return fo_forall(self.free, self.formula)


def fo_atoms(f: FOFormula) -> list[FOFormula]:
    """All relational/equality atoms, with one FONot layer kept if directly
    negated (multiset order = occurrence order)."""
    out: list[FOFormula] = []

    def walk(g: FOFormula) -> None:
        if isinstance(g, (FOAtom, FOEq)):
            out.append(g)
        elif isinstance(g, FONot) and isinstance(g.body, (FOAtom, FOEq)):
            out.append(g)
        elif isinstance(g, FONot):
            walk(g.body)
        elif isinstance(g, (FOAnd, FOOr)):
            for p in g.parts:
                walk(p)
        elif isinstance(g, FOImplies):
            walk(g.antecedent)
            walk(g.consequent)
        elif isinstance(g, (FOForall, FOExists)):
            walk(g.body)

    walk(f)
    return out


_PREC_IMPL = 10
_PREC_OR = 20
_PREC_AND = 25
_PREC_NOT = 30


def print_fo(f: FOFormula, prec: int = 0) -> str:
    if isinstance(f, FOAtom):
        return f"{f.rel}({', '.join(f.args)})"
    if isinstance(f, FOEq):
        return f"{f.left} = {f.right}"
    if isinstance(f, FONot):
        if isinstance(f.body, FOEq):
            return f"{f.body.left} != {f.body.right}"
        s = "~" + print_fo(f.body, _PREC_NOT)
        return s
    if isinstance(f, FOAnd):
        if not f.parts:
            return "true"
        s = " & ".join(print_fo(p, _PREC_AND + 1) for p in f.parts)
        return f"({s})" if prec > _PREC_AND else s
    if isinstance(f, FOOr):
        if not f.parts:
            return "false"
        s = " | ".join(print_fo(p, _PREC_OR + 1) for p in f.parts)
        return f"({s})" if prec > _PREC_OR else s
    if isinstance(f, FOImplies):
        s = (
            print_fo(f.antecedent, _PREC_IMPL + 1)
            + " => "
            + print_fo(f.consequent, _PREC_IMPL)
        )
        return f"({s})" if prec > _PREC_IMPL else s
    if isinstance(f, (FOForall, FOExists)):
        kind = "forall" if isinstance(f, FOForall) else "exists"
        names = [f.var]
        body = f.body
        while isinstance(body, type(f)):
            names.append(body.var)
            body = body.body
        s = f"{kind} {', '.join(names)}. {print_fo(body, _PREC_IMPL)}"
        return f"({s})" if prec > 0 else s
    raise TypeError(f"not a first-order formula: {f!r}")


def fo_json(f: FOFormula) -> dict:
    if isinstance(f, FOAtom):
        return {"kind": "atom", "rel": f.rel, "args": list(f.args)}
    if isinstance(f, FOEq):
        return {"kind": "eq", "left": f.left, "right": f.right}
    if isinstance(f, FONot):
        return {"kind": "not", "body": fo_json(f.body)}
    if isinstance(f, FOAnd):
        return {"kind": "and", "parts": [fo_json(p) for p in f.parts]}
    if isinstance(f, FOOr):
        return {"kind": "or", "parts": [fo_json(p) for p in f.parts]}
    if isinstance(f, FOImplies):
        return {
            "kind": "implies",
            "antecedent": fo_json(f.antecedent),
            "consequent": fo_json(f.consequent),
        }
    if isinstance(f, FOForall):
        return {"kind": "forall", "var": f.var, "sort": f.sort, "body": fo_json(f.body)}
    if isinstance(f, FOExists):
        return {"kind": "exists", "var": f.var, "sort": f.sort, "body": fo_json(f.body)}
    raise TypeError(f"not a first-order formula: {f!r}")
