"""Term and meta-formula ASTs with printers and canonical normal forms.

Terms are LE- and L*-language formulas: proposition variables, nominals,
conominals, lattice constants, binary meet/join, and applications of declared
connectives. Meta-formulas form the first-order correspondence language:
inequalities as atoms (with a negation flag rendering !<=), propositional
connectives, and quantifiers over nominals and conominals.

Everything here is immutable and hashable; printers are total and produce
text the parsers accept back.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator


# ---------------------------------------------------------------------------
# Terms


class Term:
    __slots__ = ()

    def __str__(self) -> str:  # pragma: no cover - convenience
        from .printing import print_term

        return print_term(self)


@dataclass(frozen=True)
class PropVar(Term):
    name: str


@dataclass(frozen=True)
class Nominal(Term):
    name: str


@dataclass(frozen=True)
class Conominal(Term):
    name: str


@dataclass(frozen=True)
class Top(Term):
    pass


@dataclass(frozen=True)
class Bottom(Term):
    pass


@dataclass(frozen=True)
class Meet(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Join(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class App(Term):
    conn: str
    args: tuple[Term, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))


TOP = Top()
BOT = Bottom()

# Simple terms: those that may sit on the pure side of a flat atom.
SIMPLE_TYPES = (PropVar, Nominal, Conominal, Top, Bottom)


def is_variable(t: Term) -> bool:
    return isinstance(t, (PropVar, Nominal, Conominal))


def is_simple(t: Term) -> bool:
    return isinstance(t, SIMPLE_TYPES)


def subterms(t: Term) -> Iterator[Term]:
    yield t
    for c in children(t):
        yield from subterms(c)


def children(t: Term) -> tuple[Term, ...]:
    if isinstance(t, (Meet, Join)):
        return (t.left, t.right)
    if isinstance(t, App):
        return t.args
    return ()


def rebuild(t: Term, new_children: tuple[Term, ...]) -> Term:
    if isinstance(t, Meet):
        return Meet(*new_children)
    if isinstance(t, Join):
        return Join(*new_children)
    if isinstance(t, App):
        return App(t.conn, tuple(new_children))
    return t


def prop_vars(t: Term) -> list[str]:
    """Proposition variable names in first-occurrence order."""
    out: list[str] = []
    for s in subterms(t):
        if isinstance(s, PropVar) and s.name not in out:
            out.append(s.name)
    return out


def pure_vars(t: Term) -> list[str]:
    """Nominal/conominal names in first-occurrence order."""
    out: list[str] = []
    for s in subterms(t):
        if isinstance(s, (Nominal, Conominal)) and s.name not in out:
            out.append(s.name)
    return out


def is_pure(t: Term) -> bool:
    return not any(isinstance(s, PropVar) for s in subterms(t))


def substitute(t: Term, mapping: dict[str, Term]) -> Term:
    """Replace proposition variables by terms (capture is impossible:
    terms have no binders)."""
    if isinstance(t, PropVar) and t.name in mapping:
        return mapping[t.name]
    kids = children(t)
    if not kids:
        return t
    return rebuild(t, tuple(substitute(c, mapping) for c in kids))


def substitute_pure(t: Term, mapping: dict[str, Term]) -> Term:
    """Replace nominals/conominals by terms."""
    if isinstance(t, (Nominal, Conominal)) and t.name in mapping:
        return mapping[t.name]
    kids = children(t)
    if not kids:
        return t
    return rebuild(t, tuple(substitute_pure(c, mapping) for c in kids))


def replace_at(t: Term, path: tuple[int, ...], new: Term) -> Term:
    if not path:
        return new
    kids = list(children(t))
    kids[path[0]] = replace_at(kids[path[0]], path[1:], new)
    return rebuild(t, tuple(kids))


def term_at(t: Term, path: tuple[int, ...]) -> Term:
    for i in path:
        t = children(t)[i]
    return t


# ---------------------------------------------------------------------------
# Inequalities


@dataclass(frozen=True)
class Inequality:
    lhs: Term
    rhs: Term
    negated: bool = False

    def negate(self) -> "Inequality":
        return Inequality(self.lhs, self.rhs, not self.negated)

    def __str__(self) -> str:  # pragma: no cover - convenience
        from .printing import print_ineq

        return print_ineq(self)


# ---------------------------------------------------------------------------
# Meta-formulas


class MetaFormula:
    __slots__ = ()

    def __str__(self) -> str:  # pragma: no cover - convenience
        from .printing import print_meta

        return print_meta(self)


@dataclass(frozen=True)
class Atom(MetaFormula):
    ineq: Inequality


@dataclass(frozen=True)
class MetaAnd(MetaFormula):
    parts: tuple[MetaFormula, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.parts, tuple):
            object.__setattr__(self, "parts", tuple(self.parts))


@dataclass(frozen=True)
class MetaOr(MetaFormula):
    parts: tuple[MetaFormula, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.parts, tuple):
            object.__setattr__(self, "parts", tuple(self.parts))


@dataclass(frozen=True)
class MetaNot(MetaFormula):
    body: MetaFormula


@dataclass(frozen=True)
class MetaImplies(MetaFormula):
    antecedent: MetaFormula
    consequent: MetaFormula


@dataclass(frozen=True)
class ForallNom(MetaFormula):
    var: str
    body: MetaFormula


@dataclass(frozen=True)
class ForallConom(MetaFormula):
    var: str
    body: MetaFormula


@dataclass(frozen=True)
class ExistsNom(MetaFormula):
    var: str
    body: MetaFormula


@dataclass(frozen=True)
class ExistsConom(MetaFormula):
    var: str
    body: MetaFormula


QUANTIFIERS = (ForallNom, ForallConom, ExistsNom, ExistsConom)
FORALLS = (ForallNom, ForallConom)
EXISTS = (ExistsNom, ExistsConom)


def meta_children(f: MetaFormula) -> tuple[MetaFormula, ...]:
    if isinstance(f, (MetaAnd, MetaOr)):
        return f.parts
    if isinstance(f, MetaNot):
        return (f.body,)
    if isinstance(f, MetaImplies):
        return (f.antecedent, f.consequent)
    if isinstance(f, QUANTIFIERS):
        return (f.body,)
    return ()


def meta_rebuild(f: MetaFormula, kids: tuple[MetaFormula, ...]) -> MetaFormula:
    if isinstance(f, MetaAnd):
        return MetaAnd(kids)
    if isinstance(f, MetaOr):
        return MetaOr(kids)
    if isinstance(f, MetaNot):
        return MetaNot(kids[0])
    if isinstance(f, MetaImplies):
        return MetaImplies(kids[0], kids[1])
    if isinstance(f, QUANTIFIERS):
        return type(f)(f.var, kids[0])
    return f


def meta_atoms(f: MetaFormula) -> Iterator[Atom]:
    if isinstance(f, Atom):
        yield f
    for c in meta_children(f):
        yield from meta_atoms(c)


def forall(vars_: list[Term], body: MetaFormula) -> MetaFormula:
    """Universally close body over the given nominal/conominal terms, in order."""
    for v in reversed(vars_):
        if isinstance(v, Nominal):
            body = ForallNom(v.name, body)
        elif isinstance(v, Conominal):
            body = ForallConom(v.name, body)
        else:  # pragma: no cover - defensive
            raise TypeError(f"cannot quantify over {v!r}")
    return body


def exists(vars_: list[Term], body: MetaFormula) -> MetaFormula:
    for v in reversed(vars_):
        if isinstance(v, Nominal):
            body = ExistsNom(v.name, body)
        elif isinstance(v, Conominal):
            body = ExistsConom(v.name, body)
        else:  # pragma: no cover - defensive
            raise TypeError(f"cannot quantify over {v!r}")
    return body


def conj(parts: list[MetaFormula]) -> MetaFormula:
    if len(parts) == 1:
        return parts[0]
    return MetaAnd(tuple(parts))


def disj(parts: list[MetaFormula]) -> MetaFormula:
    if len(parts) == 1:
        return parts[0]
    return MetaOr(tuple(parts))


def strip_foralls(f: MetaFormula) -> tuple[list[tuple[type, str]], MetaFormula]:
    """Peel the outer universal prefix; returns [(binder type, name)] and body."""
    prefix: list[tuple[type, str]] = []
    while isinstance(f, FORALLS):
        prefix.append((type(f), f.var))
        f = f.body
    return prefix, f


def strip_exists(f: MetaFormula) -> tuple[list[tuple[type, str]], MetaFormula]:
    prefix: list[tuple[type, str]] = []
    while isinstance(f, EXISTS):
        prefix.append((type(f), f.var))
        f = f.body
    return prefix, f


def meta_substitute_pure(f: MetaFormula, mapping: dict[str, Term]) -> MetaFormula:
    """Replace free nominals/conominals in a meta-formula; binders shadow."""
    if isinstance(f, Atom):
        return Atom(
            Inequality(
                substitute_pure(f.ineq.lhs, mapping),
                substitute_pure(f.ineq.rhs, mapping),
                f.ineq.negated,
            )
        )
    if isinstance(f, QUANTIFIERS):
        inner = {k: v for k, v in mapping.items() if k != f.var}
        if not inner:
            return f
        return type(f)(f.var, meta_substitute_pure(f.body, inner))
    kids = meta_children(f)
    if not kids:
        return f
    return meta_rebuild(f, tuple(meta_substitute_pure(c, mapping) for c in kids))


def free_pure_vars(f: MetaFormula) -> list[str]:
    """Free nominal/conominal names in first-occurrence order."""
    out: list[str] = []

    def walk(g: MetaFormula, bound: frozenset[str]) -> None:
        if isinstance(g, Atom):
            for side in (g.ineq.lhs, g.ineq.rhs):
                for s in subterms(side):
                    if isinstance(s, (Nominal, Conominal)):
                        if s.name not in bound and s.name not in out:
                            out.append(s.name)
            return
        if isinstance(g, QUANTIFIERS):
            walk(g.body, bound | {g.var})
            return
        for c in meta_children(g):
            walk(c, bound)

    walk(f, frozenset())
    return out


# ---------------------------------------------------------------------------
# Normal forms


def _right_nest(t: Term) -> Term:
    kids = children(t)
    if kids:
        t = rebuild(t, tuple(_right_nest(c) for c in kids))
    for cls in (Meet, Join):
        while isinstance(t, cls) and isinstance(t.left, cls):
            # (a op b) op c  ->  a op (b op c)
            t = cls(t.left.left, cls(t.left.right, t.right))
    return t


def normalize_term(t: Term, rename: dict[str, Term] | None = None) -> Term:
    """Canonical form: right-nested meet/join chains, proposition variables
    renamed v1, v2, ... in first-occurrence order (shared rename map may be
    threaded through for multi-term comparisons)."""
    t = _right_nest(t)
    if rename is None:
        rename = {}
    for name in prop_vars(t):
        if name not in rename:
            rename[name] = PropVar(f"v{len(rename) + 1}")
    return substitute(t, rename)


def normalize_ineq(iq: Inequality) -> Inequality:
    rename: dict[str, Term] = {}
    lhs = normalize_term(iq.lhs, rename)
    rhs = normalize_term(iq.rhs, rename)
    return Inequality(lhs, rhs, iq.negated)


def normalize_meta(f: MetaFormula) -> MetaFormula:
    """Canonical form for meta-formulas: right-nested lattice chains inside
    atoms; nominals/conominals renamed j1../m1.. in binder-then-occurrence
    order; proposition variables renamed v1.. in occurrence order."""
    nom_map: dict[str, Term] = {}
    conom_map: dict[str, Term] = {}
    prop_map: dict[str, Term] = {}

    def fresh_nom(name: str) -> Term:
        if name not in nom_map:
            nom_map[name] = Nominal(f"j{len(nom_map) + 1}")
        return nom_map[name]

    def fresh_conom(name: str) -> Term:
        if name not in conom_map:
            conom_map[name] = Conominal(f"m{len(conom_map) + 1}")
        return conom_map[name]

    def walk_term(t: Term) -> Term:
        t = _right_nest(t)

        def go(s: Term) -> Term:
            if isinstance(s, Nominal):
                return fresh_nom(s.name)
            if isinstance(s, Conominal):
                return fresh_conom(s.name)
            if isinstance(s, PropVar):
                if s.name not in prop_map:
                    prop_map[s.name] = PropVar(f"v{len(prop_map) + 1}")
                return prop_map[s.name]
            kids = children(s)
            if not kids:
                return s
            return rebuild(s, tuple(go(c) for c in kids))

        return go(t)

    def walk(g: MetaFormula) -> MetaFormula:
        if isinstance(g, Atom):
            return Atom(
                Inequality(walk_term(g.ineq.lhs), walk_term(g.ineq.rhs), g.ineq.negated)
            )
        if isinstance(g, (ForallNom, ExistsNom)):
            v = fresh_nom(g.var)
            return type(g)(v.name, walk(g.body))
        if isinstance(g, (ForallConom, ExistsConom)):
            v = fresh_conom(g.var)
            return type(g)(v.name, walk(g.body))
        kids = meta_children(g)
        if not kids:
            return g
        return meta_rebuild(g, tuple(walk(c) for c in kids))

    return walk(f)


def terms_equal(a: Term, b: Term) -> bool:
    return normalize_term(a) == normalize_term(b)


def ineqs_equal(a: Inequality, b: Inequality) -> bool:
    return normalize_ineq(a) == normalize_ineq(b)


def metas_equal(a: MetaFormula, b: MetaFormula) -> bool:
    return normalize_meta(a) == normalize_meta(b)
