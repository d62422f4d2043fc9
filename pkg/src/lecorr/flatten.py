"""Flattening quantified implications into generalized geometric form.

The ALBA output of an inductive inequality is a quantified implication whose
antecedent inequalities may nest skeleton and PIA layers arbitrarily.  `flat`
rewrites a single such inequality into a first-order meta-formula whose atoms
are inequalities with a definite-skeleton side; `flatten_output` assembles the
whole output into a single generalized geometric implication; `ga_level`
measures where a meta-formula sits in the generalized-geometric hierarchy, and
`strict_flatten`/`flat_strict` implement the density-based rewriting that makes
every antecedent atom single-headed when the shape allows it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .alba import AlbaOutput, adjoint_solve
from .signature import Signature
from .syntax import (
    EXISTS,
    FORALLS,
    QUANTIFIERS,
    Atom,
    Conominal,
    ExistsConom,
    ExistsNom,
    ForallConom,
    ForallNom,
    Inequality,
    MetaAnd,
    MetaFormula,
    MetaImplies,
    MetaNot,
    MetaOr,
    Nominal,
    Term,
    children,
    conj,
    disj,
    exists,
    forall,
    is_simple,
    meta_children,
    meta_rebuild,
    replace_at,
    strip_foralls,
    subterms,
)
from .trees import (
    CONSTANT,
    DEFINITE_SKELETON,
    LEAF,
    SOFT_SKELETON,
    SignedNode,
    build_signed_tree,
)


class NotStrictlyFlattenable(ValueError):
    """Raised when the density-based rewriting has no sound step to take."""


# ---------------------------------------------------------------------------
# Fresh-name streams


@dataclass
class FreshNames:
    """Per-kind counters for fresh variables, skipping names already in use."""

    used: set[str] = field(default_factory=set)
    nominal_prefix: str = "h"
    conominal_prefix: str = "o"
    counters: dict[str, int] = field(default_factory=dict)

    def _next(self, prefix: str) -> str:
        n = self.counters.get(prefix, 0)
        while True:
            n += 1
            name = f"{prefix}{n}"
            if name not in self.used:
                break
        self.counters[prefix] = n
        self.used.add(name)
        return name

    def nominal(self, prefix: str | None = None) -> Nominal:
        return Nominal(self._next(prefix or self.nominal_prefix))

    def conominal(self, prefix: str | None = None) -> Conominal:
        return Conominal(self._next(prefix or self.conominal_prefix))


def _names_in_meta(f: MetaFormula) -> set[str]:
    out: set[str] = set()

    def walk(g: MetaFormula) -> None:
        if isinstance(g, Atom):
            for side in (g.ineq.lhs, g.ineq.rhs):
                for s in subterms(side):
                    name = getattr(s, "name", None)
                    if name is not None:
                        out.add(name)
            return
        if isinstance(g, QUANTIFIERS):
            out.add(g.var)
        for c in meta_children(g):
            walk(c)

    walk(f)
    return out


def _names_in_ineq(iq: Inequality) -> set[str]:
    return _names_in_meta(Atom(iq))


# ---------------------------------------------------------------------------
# Flat atoms

_PREFIX_CLASSES = (DEFINITE_SKELETON, CONSTANT)
_FLAT_CLASSES = (DEFINITE_SKELETON, CONSTANT, LEAF)


def _side_flat(t: Term, sign: int, sig: Signature) -> bool:
    tree = build_signed_tree(t, sign, sig)
    return all(n.node_class in _FLAT_CLASSES for n in tree.nodes())


def is_flat_atom(iq: Inequality, sig: Signature) -> bool:
    """An inequality one of whose sides is a variable (or constant) while the
    other is built purely from definite-skeleton connectives, read under either
    polarity.  These are the atomic predicates of the target first-order
    language: each one unfolds to a single (composed) relational statement."""
    lhs_s, rhs_s = is_simple(iq.lhs), is_simple(iq.rhs)
    if lhs_s and rhs_s:
        return True
    if lhs_s:
        t = iq.rhs
    elif rhs_s:
        t = iq.lhs
    else:
        return False
    return _side_flat(t, 1, sig) or _side_flat(t, -1, sig)


# ---------------------------------------------------------------------------
# Flat


def _prefix_slots(tree: SignedNode) -> list[SignedNode]:
    """Boundary nodes of the maximal definite-skeleton region at the root, in
    depth-first order.  Lattice constants stay inside the region."""
    slots: list[SignedNode] = []

    def walk(node: SignedNode) -> None:
        if node.node_class in _PREFIX_CLASSES:
            for c in node.children:
                walk(c)
        else:
            slots.append(node)

    for c in tree.children:
        walk(c)
    return slots


def flat(iq: Inequality, sig: Signature, fresh: FreshNames | None = None) -> MetaFormula:
    """Rewrite `x <= t` (or `t <= y`) with x, y variables into an equivalent
    meta-formula whose atoms all have a definite-skeleton non-variable side.

    Each definite-skeleton layer of t is kept; every boundary subterm is
    replaced by a fresh nominal (positive boundary) or conominal (negative
    boundary) whose defining bound is recursively flattened and placed in the
    antecedent of a universally quantified implication."""
    if fresh is None:
        fresh = FreshNames(used=_names_in_ineq(iq))
    if iq.negated:
        raise ValueError("flat expects a positive inequality")
    if is_flat_atom(iq, sig):
        return Atom(iq)
    if is_simple(iq.lhs):
        return _flat_at(iq.lhs, iq.rhs, -1, sig, fresh)
    if is_simple(iq.rhs):
        return _flat_at(iq.rhs, iq.lhs, 1, sig, fresh)
    raise ValueError("flat expects one side of the inequality to be a variable")


def _mk_ineq(x: Term, t: Term, sign: int) -> Inequality:
    # sign -1: variable below the term; sign +1: term below the variable.
    return Inequality(x, t, False) if sign == -1 else Inequality(t, x, False)


def _flat_at(x: Term, t: Term, sign: int, sig: Signature, fresh: FreshNames) -> MetaFormula:
    """Common body of flat for `x <= t` (sign -1) and `t <= x` (sign +1); the
    sign is the polarity under which t's skeleton is read."""
    tree = build_signed_tree(t, sign, sig)
    if tree.node_class == SOFT_SKELETON:
        # x <= a /\ b  iff  x <= a and x <= b (dually for joins below x).
        left, right = children(t)
        return conj(
            [
                _flat_rec(_mk_ineq(x, left, sign), sig, fresh),
                _flat_rec(_mk_ineq(x, right, sign), sig, fresh),
            ]
        )
    if tree.node_class not in _PREFIX_CLASSES:
        # The root itself faces the wrong way (a PIA layer): approximate
        # through a fresh variable on the other side of t.
        if sign == -1:
            v: Term = fresh.conominal()
            inner = _flat_rec(Inequality(t, v), sig, fresh)
            return ForallConom(v.name, MetaImplies(inner, Atom(Inequality(x, v))))
        v = fresh.nominal()
        inner = _flat_rec(Inequality(v, t), sig, fresh)
        return ForallNom(v.name, MetaImplies(inner, Atom(Inequality(v, x))))
    slots = _prefix_slots(tree)
    noms: list[Term] = []
    conoms: list[Term] = []
    bounds: list[MetaFormula] = []
    kept = t
    for node in slots:
        if node.sign == 1:
            v = fresh.nominal()
            noms.append(v)
            bounds.append(_flat_rec(Inequality(v, node.term), sig, fresh))
        else:
            v = fresh.conominal()
            conoms.append(v)
            bounds.append(_flat_rec(Inequality(node.term, v), sig, fresh))
        kept = replace_at(kept, node.path, v)
    body: MetaFormula = MetaImplies(conj(bounds), Atom(_mk_ineq(x, kept, sign)))
    # Negative position: conominal block first; positive position: nominals.
    block = conoms + noms if sign == -1 else noms + conoms
    return forall(block, body)


def _flat_rec(iq: Inequality, sig: Signature, fresh: FreshNames) -> MetaFormula:
    if is_flat_atom(iq, sig):
        return Atom(iq)
    if is_simple(iq.lhs):
        return _flat_at(iq.lhs, iq.rhs, -1, sig, fresh)
    if is_simple(iq.rhs):
        return _flat_at(iq.rhs, iq.lhs, 1, sig, fresh)
    raise ValueError("flat expects one side of the inequality to be a variable")


# ---------------------------------------------------------------------------
# Negation normal form helpers (classical meta-level)


def _conjuncts(f: MetaFormula) -> list[MetaFormula]:
    if isinstance(f, MetaAnd):
        out: list[MetaFormula] = []
        for p in f.parts:
            out.extend(_conjuncts(p))
        return out
    return [f]


def _disjuncts(f: MetaFormula) -> list[MetaFormula]:
    if isinstance(f, MetaOr):
        out: list[MetaFormula] = []
        for p in f.parts:
            out.extend(_disjuncts(p))
        return out
    return [f]


_DUAL = {
    ForallNom: ExistsNom,
    ForallConom: ExistsConom,
    ExistsNom: ForallNom,
    ExistsConom: ForallConom,
}


def neg_norm(f: MetaFormula) -> MetaFormula:
    """The classical negation of f, with negation pushed onto atoms.  A
    universally quantified implication becomes an existential conjunction whose
    last conjunct is the negated consequent."""
    if isinstance(f, Atom):
        return Atom(f.ineq.negate())
    if isinstance(f, MetaNot):
        return pos_norm(f.body)
    if isinstance(f, MetaAnd):
        return disj([neg_norm(p) for p in f.parts])
    if isinstance(f, MetaOr):
        return conj([neg_norm(p) for p in f.parts])
    if isinstance(f, FORALLS):
        binders, body = strip_foralls(f)
        dual = [(_DUAL[cls], name) for cls, name in binders]
        if isinstance(body, MetaImplies):
            items = [pos_norm(p) for p in _conjuncts(body.antecedent)]
            items.append(neg_norm(body.consequent))
            inner: MetaFormula = conj(items)
        else:
            inner = neg_norm(body)
        for cls, name in reversed(dual):
            inner = cls(name, inner)
        return inner
    if isinstance(f, EXISTS):
        return _DUAL[type(f)](f.var, neg_norm(f.body))
    if isinstance(f, MetaImplies):
        items = [pos_norm(p) for p in _conjuncts(f.antecedent)]
        items.append(neg_norm(f.consequent))
        return conj(items)
    raise TypeError(f"cannot negate {f!r}")  # pragma: no cover - exhaustive


def pos_norm(f: MetaFormula) -> MetaFormula:
    """Normalize f itself: universally quantified implications whose antecedent
    contains a non-atomic conjunct are contraposed (the atomic consequent is
    negated and the antecedent conjuncts become negated disjuncts)."""
    if isinstance(f, Atom):
        return f
    if isinstance(f, MetaNot):
        return neg_norm(f.body)
    if isinstance(f, MetaAnd):
        return conj([pos_norm(p) for p in f.parts])
    if isinstance(f, MetaOr):
        return disj([pos_norm(p) for p in f.parts])
    if isinstance(f, EXISTS):
        return type(f)(f.var, pos_norm(f.body))
    if isinstance(f, FORALLS):
        binders, body = strip_foralls(f)
        if isinstance(body, MetaImplies) and isinstance(body.consequent, Atom):
            parts = _conjuncts(body.antecedent)
            if all(isinstance(p, Atom) for p in parts):
                inner: MetaFormula = body
            else:
                inner = MetaImplies(
                    Atom(body.consequent.ineq.negate()),
                    disj([neg_norm(p) for p in parts]),
                )
        else:
            inner = pos_norm(body)
        for cls, name in reversed(binders):
            inner = cls(name, inner)
        return inner
    if isinstance(f, MetaImplies):
        if isinstance(f.consequent, Atom):
            parts = _conjuncts(f.antecedent)
            if all(isinstance(p, Atom) for p in parts):
                return f
            return MetaImplies(
                Atom(f.consequent.ineq.negate()),
                disj([neg_norm(p) for p in parts]),
            )
        return MetaImplies(pos_norm(f.antecedent), pos_norm(f.consequent))
    raise TypeError(f"cannot normalize {f!r}")  # pragma: no cover - exhaustive


# ---------------------------------------------------------------------------
# Negated-skeleton rewriting


def negate_skeleton(iq: Inequality, sig: Signature, fresh: FreshNames | None = None) -> MetaFormula:
    """Rewrite a negated inequality `phi !<= psi` as an existential statement
    about witnesses: some completely join-irreducible below phi fails to sit
    below some completely meet-irreducible above psi."""
    if not iq.negated:
        raise ValueError("negate_skeleton expects a negated inequality")
    if fresh is None:
        fresh = FreshNames(used=_names_in_ineq(iq), nominal_prefix="j", conominal_prefix="m")
    vars_: list[Term] = []
    chunks: list[MetaFormula] = []
    if isinstance(iq.lhs, Nominal):
        jterm: Term = iq.lhs
    else:
        jterm = fresh.nominal("j")
        vars_.append(jterm)
        chunks.append(Atom(Inequality(jterm, iq.lhs)))
    if isinstance(iq.rhs, Conominal):
        mterm: Term = iq.rhs
    else:
        mterm = fresh.conominal("m")
        vars_.append(mterm)
        chunks.append(Atom(Inequality(iq.rhs, mterm)))
    if not chunks:
        return Atom(iq)
    chunks.append(Atom(Inequality(jterm, mterm, negated=True)))
    return exists(vars_, conj(chunks))


# ---------------------------------------------------------------------------
# Assembly of a whole ALBA output


def flatten_output(out: AlbaOutput, sig: Signature | None = None) -> MetaFormula:
    """Assemble the ALBA output into one generalized geometric implication:
    antecedent inequalities that are already flat atoms stay as guards, all
    others contribute an existential disjunct (their flattened negation), and a
    non-atomic consequent is replaced through fresh witnesses."""
    sig = sig or out.sig
    fresh = FreshNames(used=_names_in_meta(out.formula()))
    holes: list[Term] = list(out.holes)
    guards: list[MetaFormula] = []
    disjuncts: list[MetaFormula] = []

    def place(iq: Inequality) -> None:
        if is_flat_atom(iq, sig):
            guards.append(Atom(iq))
        else:
            disjuncts.append(neg_norm(flat(iq, sig, fresh)))

    for iq in out.antecedent:
        place(iq)

    cons = out.consequent
    extra: list[Inequality] = []
    if is_flat_atom(cons, sig):
        kept: MetaFormula = Atom(cons)
    else:
        if isinstance(cons.lhs, Nominal):
            jterm: Term = cons.lhs
        else:
            jterm = fresh.nominal("j")
            holes.append(jterm)
            extra.append(Inequality(jterm, cons.lhs))
        if isinstance(cons.rhs, Conominal):
            mterm: Term = cons.rhs
        else:
            mterm = fresh.conominal("m")
            holes.append(mterm)
            extra.append(Inequality(cons.rhs, mterm))
        kept = Atom(Inequality(jterm, mterm))
    for iq in extra:
        place(iq)

    body: MetaFormula = disj([kept] + disjuncts)
    if guards:
        body = MetaImplies(conj(guards), body)
    return forall(holes, body)


# ---------------------------------------------------------------------------
# Generalized geometric hierarchy


def _nnf(f: MetaFormula) -> MetaFormula:
    if isinstance(f, Atom):
        return f
    if isinstance(f, MetaNot):
        return _nnf_neg(f.body)
    if isinstance(f, MetaImplies):
        return MetaOr((_nnf_neg(f.antecedent), _nnf(f.consequent)))
    if isinstance(f, QUANTIFIERS):
        return type(f)(f.var, _nnf(f.body))
    return meta_rebuild(f, tuple(_nnf(c) for c in meta_children(f)))


def _nnf_neg(f: MetaFormula) -> MetaFormula:
    if isinstance(f, Atom):
        return Atom(f.ineq.negate())
    if isinstance(f, MetaNot):
        return _nnf(f.body)
    if isinstance(f, MetaAnd):
        return MetaOr(tuple(_nnf_neg(c) for c in f.parts))
    if isinstance(f, MetaOr):
        return MetaAnd(tuple(_nnf_neg(c) for c in f.parts))
    if isinstance(f, MetaImplies):
        return MetaAnd((_nnf(f.antecedent), _nnf_neg(f.consequent)))
    if isinstance(f, QUANTIFIERS):
        return _DUAL[type(f)](f.var, _nnf_neg(f.body))
    raise TypeError(f"cannot normalize {f!r}")  # pragma: no cover - exhaustive


def _strip_quants(f: MetaFormula) -> MetaFormula:
    while isinstance(f, QUANTIFIERS):
        f = f.body
    return f


def _has_forall(f: MetaFormula) -> bool:
    if isinstance(f, FORALLS):
        return True
    return any(_has_forall(c) for c in meta_children(f))


def ga_level(f: MetaFormula) -> int:
    """Position of f in the generalized geometric hierarchy: level 0 holds the
    geometric implications; each universally quantified implication nested
    inside an existential disjunct raises the level by one.  The formula is
    read classically (negations pushed onto atoms; implication as disjunction);
    the input itself is never rewritten."""
    return _ga(_nnf(f))


def _ga(g: MetaFormula) -> int:
    level = 0
    for d in _disjuncts(_strip_quants(g)):
        for c in _conjuncts(_strip_quants(d)):
            if isinstance(c, Atom):
                continue
            if not _has_forall(c):
                continue
            level = max(level, _ga(c) + 1)
    return level


def quantifier_alternations(f: MetaFormula) -> int:
    """Maximal number of forall/exists switches along any path of the formula,
    read in negation normal form."""

    def walk(g: MetaFormula, last: str) -> int:
        if isinstance(g, FORALLS):
            kind = "A"
        elif isinstance(g, EXISTS):
            kind = "E"
        else:
            return max((walk(c, last) for c in meta_children(g)), default=0)
        step = 1 if last and kind != last else 0
        return step + walk(g.body, kind)

    return walk(_nnf(f), "")


# ---------------------------------------------------------------------------
# Strict flattening (density-based)


def _connective_count(t: Term) -> int:
    return sum(1 for s in subterms(t) if not is_simple(s))


def _pure_side(iq: Inequality) -> tuple[Term, Term, int] | None:
    """(variable, other side, sign) where sign -1 means `x <= t`."""
    if is_simple(iq.lhs) and not is_simple(iq.rhs):
        return iq.lhs, iq.rhs, -1
    if is_simple(iq.rhs) and not is_simple(iq.lhs):
        return iq.rhs, iq.lhs, 1
    return None


def _strict_target(iq: Inequality, sig: Signature) -> bool:
    """Atoms that stack more than one connective abbreviate composed relations;
    under strict flattening each of them must be unfolded through a swap."""
    if iq.negated:
        return False
    ps = _pure_side(iq)
    if ps is None:
        return False
    _, t, _ = ps
    return _connective_count(t) >= 2


def _occurrence_count(f: MetaFormula, name: str) -> int:
    n = 0
    if isinstance(f, Atom):
        for side in (f.ineq.lhs, f.ineq.rhs):
            n += sum(1 for s in subterms(side) if getattr(s, "name", None) == name)
        return n
    if isinstance(f, QUANTIFIERS) and f.var == name:
        return 0
    return sum(_occurrence_count(c, name) for c in meta_children(f))


def _term_var_path(t: Term, name: str) -> list[tuple[int, ...]]:
    paths: list[tuple[int, ...]] = []

    def walk(s: Term, p: tuple[int, ...]) -> None:
        if getattr(s, "name", None) == name and is_simple(s):
            paths.append(p)
        for i, c in enumerate(children(s)):
            walk(c, p + (i,))

    walk(t, ())
    return paths


def flat_strict(iq: Inequality, context: MetaFormula, sig: Signature) -> MetaFormula:
    """One density-based step on one antecedent atom of a universally
    quantified implication: solve the consequent for the atom's variable by
    residuation, let the variable range over everything (the algebra is dense),
    and re-introduce a fresh variable on the other side of the atom's composite
    term.  The atom's composite side moves to the consequent, where its head
    faces the right way."""
    binders, body = strip_foralls(context)
    if not isinstance(body, MetaImplies) or not isinstance(body.consequent, Atom):
        raise NotStrictlyFlattenable("strict flattening expects a universally quantified implication")
    parts = _conjuncts(body.antecedent)
    if not any(isinstance(p, Atom) and p.ineq == iq for p in parts):
        raise NotStrictlyFlattenable("the targeted inequality is not an antecedent atom of the context")
    ps = _pure_side(iq)
    if ps is None:
        raise NotStrictlyFlattenable("the targeted inequality has no variable side")
    x, t, sign = ps
    xname = x.name  # type: ignore[union-attr]
    others = [p for p in parts if not (isinstance(p, Atom) and p.ineq == iq)]
    if sum(_occurrence_count(p, xname) for p in others) > 0:
        raise NotStrictlyFlattenable(
            f"{xname} occurs in more than one antecedent inequality; "
            "there is no clear way to rewrite the implication"
        )
    cons = body.consequent.ineq
    in_lhs = _term_var_path(cons.lhs, xname)
    in_rhs = _term_var_path(cons.rhs, xname)
    if len(in_lhs) + len(in_rhs) != 1:
        raise NotStrictlyFlattenable(f"{xname} must occur exactly once in the consequent")
    # Solve the consequent for x by residuation along its path.
    if in_rhs:
        bound, x_right = adjoint_solve(cons.rhs, in_rhs[0], cons.lhs, sig, term_on_right=True)
    else:
        bound, x_right = adjoint_solve(cons.lhs, in_lhs[0], cons.rhs, sig, term_on_right=False)
    # The solved consequent must bound x from the side opposite the atom,
    # otherwise the two constraints on x do not compose.
    if (sign == -1) == x_right:
        raise NotStrictlyFlattenable("the consequent bounds the variable from the same side as the atom")
    fresh = FreshNames(used=_names_in_meta(context))
    if sign == -1:
        # x <= t and x <= bound pointwise: t <= o with bound <= o.
        v: Term = fresh.conominal()
        new_guard = Atom(Inequality(bound, v))
        new_cons = Atom(Inequality(t, v))
    else:
        v = fresh.nominal()
        new_guard = Atom(Inequality(v, bound))
        new_cons = Atom(Inequality(v, t))
    new_parts = [new_guard if (isinstance(p, Atom) and p.ineq == iq) else p for p in parts]
    new_binders = [(cls, name) for cls, name in binders if name != xname]
    vcls = ForallConom if isinstance(v, Conominal) else ForallNom
    at = max((i + 1 for i, (cls, _) in enumerate(new_binders) if cls is vcls), default=len(new_binders))
    new_binders.insert(at, (vcls, v.name))
    inner: MetaFormula = MetaImplies(conj(new_parts), new_cons)
    for cls, name in reversed(new_binders):
        inner = cls(name, inner)
    return inner


def strict_flatten(f: MetaFormula, sig: Signature) -> MetaFormula:
    """Apply flat_strict to every antecedent atom that abbreviates a composed
    relation, left to right.  Atoms introduced by earlier steps are final."""
    binders, body = strip_foralls(f)
    if not isinstance(body, MetaImplies) or not isinstance(body.consequent, Atom):
        return f
    introduced: set[str] = set()
    while True:
        binders, body = strip_foralls(f)
        if not isinstance(body, MetaImplies):
            return f
        parts = _conjuncts(body.antecedent)
        target: Inequality | None = None
        for p in parts:
            if not isinstance(p, Atom):
                continue
            names = _names_in_ineq(p.ineq)
            if names & introduced:
                continue
            if _strict_target(p.ineq, sig):
                target = p.ineq
                break
        if target is None:
            return f
        f = flat_strict(target, f, sig)
        new_binders, _ = strip_foralls(f)
        introduced.add(new_binders[-1][1])
