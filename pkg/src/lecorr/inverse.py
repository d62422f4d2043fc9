"""Inverse correspondence: from first-order clauses back to inequalities.

This module implements the other direction of the correspondence pipeline:

1. ``recognize`` parses a pure first-order clause (a universally quantified
   disjunction of *inverse disjuncts* plus one main inequality, or the
   equivalent guarded-implication form produced by :mod:`lecorr.flatten`) and
   checks the pre-inverse conditions: every prefix nominal occurs only
   negatively and every prefix conominal only positively inside the disjuncts,
   the main inequality has skeleton sides, and every prefix variable occurs in
   the main inequality with the right polarity exactly once.
2. ``to_vss`` compacts each disjunct into a single bound for its pivot
   variable, replaces prefix variables by proposition variables, and
   substitutes the bounds into the main inequality.  The result is a very
   simple Sahlqvist inequality over the expanded language, for the order type
   mapping the nominal-derived variables to 1 and the conominal-derived ones
   to d.
3. ``check_crypto`` / ``crypto_witnesses`` decide whether such an inequality
   is crypto-inductive: every critical branch stays inside the base language
   and every occurrence of a non-base connective is covered by a maximal
   variable-subtree (MVTree) whose root-to-leaf path admits residuation back
   into the base language.
4. ``crypto_rewrite`` performs the rewriting certified by the witness: each
   MVTree class is replaced by a fresh variable whose defining bound is solved
   by residuation along the path, and the collected bounds are substituted
   into the critical occurrences.  The output is an inductive inequality in
   the base language.

``inverse_pipeline`` chains the stages and reports the strongest verdict.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .alba import adjoint_solve
from .classify import (
    DependencyOrder,
    NotInductiveError,
    _has_critical_srr,
    check_refined_inductive,
    decompose,
    signed_trees,
)
from .flatten import FreshNames, _conjuncts, _disjuncts, neg_norm
from .printing import print_ineq, print_term
from .signature import Signature
from .syntax import (
    EXISTS,
    FORALLS,
    Atom,
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
    children,
    conj,
    disj,
    exists,
    forall,
    free_pure_vars,
    ineqs_equal,
    meta_atoms,
    meta_substitute_pure,
    prop_vars,
    pure_vars,
    replace_at,
    strip_exists,
    strip_foralls,
    substitute,
    substitute_pure,
    term_at,
)
from .trees import (
    CONSTANT,
    DEFINITE_SKELETON,
    LEAF,
    SOFT_SKELETON,
    SignedNode,
    branch_profile,
    build_signed_tree,
    critical_leaves,
    is_critical,
    path_to_root,
    subtree_prop_vars,
)

_SKELETON_CLASSES = (DEFINITE_SKELETON, SOFT_SKELETON, LEAF, CONSTANT)
_DEFINITE_CLASSES = (DEFINITE_SKELETON, LEAF, CONSTANT)


class InverseError(ValueError):
    """The clause is outside the pre-inverse fragment."""


class _Reject(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


# ---------------------------------------------------------------------------
# Disjunct structure


@dataclass
class Disjunct:
    """One inverse disjunct, canonicalized.

    * ``base``: a single inequality between the pivot and ``bound``.
    * ``split``: a conjunction (positive form) or disjunction (negative form)
      of same-pivot disjuncts.
    * ``quantified``: a block of fresh variables ``uvars``, a definite
      skeleton ``restrictor`` relating the pivot to the block, and one inner
      disjunct per quantified variable in ``parts``.
    """

    pivot: Term
    case: str
    bound: Term | None = None
    parts: list["Disjunct"] = field(default_factory=list)
    uvars: list[Term] = field(default_factory=list)
    restrictor: Term | None = None

    def _core(self, body: Term, negated: bool) -> Atom:
        if isinstance(self.pivot, Nominal):
            return Atom(Inequality(self.pivot, body, negated))
        return Atom(Inequality(body, self.pivot, negated))

    def formula(self, polarity: int) -> MetaFormula:
        """Render the canonical shape: positive disjuncts as guarded
        universals, negative ones as existential conjunctions."""
        if self.case == "base":
            assert self.bound is not None
            return self._core(self.bound, polarity == -1)
        if self.case == "split":
            parts = [p.formula(polarity) for p in self.parts]
            return conj(parts) if polarity == 1 else disj(parts)
        assert self.restrictor is not None
        if polarity == -1:
            items = [p.formula(1) for p in self.parts]
            items.append(self._core(self.restrictor, True))
            return exists(self.uvars, conj(items))
        inner = disj([p.formula(-1) for p in self.parts])
        return forall(self.uvars, MetaImplies(self._core(self.restrictor, True), inner))

    def free_names(self) -> set[str]:
        """Variables visible outside the disjunct (the pivot included)."""
        names = {self.pivot.name}
        if self.bound is not None:
            names |= set(pure_vars(self.bound))
        if self.restrictor is not None:
            names |= set(pure_vars(self.restrictor))
        for p in self.parts:
            names |= p.free_names()
        return names - {u.name for u in self.uvars}

    def json(self, sig: Signature | None = None) -> dict:
        out: dict = {"pivot": self.pivot.name, "case": self.case}
        if self.bound is not None:
            out["bound"] = print_term(self.bound, sig)
        if self.restrictor is not None:
            out["restrictor"] = print_term(self.restrictor, sig)
        if self.uvars:
            out["block"] = [u.name for u in self.uvars]
        if self.parts:
            out["parts"] = [p.json(sig) for p in self.parts]
        return out


# ---------------------------------------------------------------------------
# Normalization helpers


def _push_nots(f: MetaFormula) -> MetaFormula:
    """Eliminate explicit meta-negations (classically) without disturbing the
    quantifier/implication structure elsewhere."""
    if isinstance(f, MetaNot):
        return neg_norm(f.body)
    if isinstance(f, Atom):
        return f
    if isinstance(f, MetaAnd):
        return conj([_push_nots(p) for p in f.parts])
    if isinstance(f, MetaOr):
        return disj([_push_nots(p) for p in f.parts])
    if isinstance(f, MetaImplies):
        return MetaImplies(_push_nots(f.antecedent), _push_nots(f.consequent))
    if isinstance(f, FORALLS + EXISTS):
        return type(f)(f.var, _push_nots(f.body))
    raise InverseError(f"unsupported meta formula {f!r}")


def _uniquify_binders(f: MetaFormula, used: set[str]) -> MetaFormula:
    """Alpha-rename quantified variables so no name is bound twice or shadows
    an outer name."""
    if isinstance(f, FORALLS + EXISTS):
        cls = type(f)
        name = f.var
        body = f.body
        if name in used:
            is_nom = cls in (ForallNom, ExistsNom)
            fresh = FreshNames(used=set(used))
            new = fresh.nominal() if is_nom else fresh.conominal()
            body = meta_substitute_pure(body, {name: new})
            name = new.name
        used.add(name)
        return cls(name, _uniquify_binders(body, used))
    if isinstance(f, Atom):
        return f
    if isinstance(f, MetaAnd):
        return conj([_uniquify_binders(p, used) for p in f.parts])
    if isinstance(f, MetaOr):
        return disj([_uniquify_binders(p, used) for p in f.parts])
    if isinstance(f, MetaImplies):
        return MetaImplies(
            _uniquify_binders(f.antecedent, used), _uniquify_binders(f.consequent, used)
        )
    if isinstance(f, MetaNot):
        return MetaNot(_uniquify_binders(f.body, used))
    raise InverseError(f"unsupported meta formula {f!r}")


def _bind_free(cls: type, name: str, body: MetaFormula) -> MetaFormula:
    # meta_substitute_pure respects binders; the variable is free inside body
    # here because we stripped its own binder already.
    return body


# ---------------------------------------------------------------------------
# Skeleton checks


def _all_classes(t: Term, sign: int, sig: Signature, allowed: tuple[str, ...]) -> bool:
    tree = build_signed_tree(t, sign, sig)
    return all(n.node_class in allowed for n in tree.nodes())


def _skeleton_reading(t: Term, pivot: Term, sig: Signature) -> int | None:
    """Sign under which the bound of a base disjunct is a skeleton formula.

    The proper reading puts the bound opposite the pivot (negative for a
    nominal pivot, positive for a conominal one); the flat procedure also
    emits atoms whose bound is a skeleton formula under the pivot's own
    reading, which are equivalent to one-step quantified disjuncts with a
    bare-variable restrictor, so both readings are accepted."""
    proper = -1 if isinstance(pivot, Nominal) else 1
    if _all_classes(t, proper, sig, _SKELETON_CLASSES):
        return proper
    if _all_classes(t, -proper, sig, _SKELETON_CLASSES):
        return -proper
    return None


# ---------------------------------------------------------------------------
# Recognition


@dataclass
class InverseReport:
    formula: MetaFormula
    recognized: bool
    reason: str = ""
    prefix: list[Term] = field(default_factory=list)
    main: Inequality | None = None
    disjuncts: list[Disjunct] = field(default_factory=list)

    def json(self, sig: Signature | None = None) -> dict:
        out: dict = {"recognized": self.recognized, "reason": self.reason}
        if self.recognized:
            out["prefix"] = [v.name for v in self.prefix]
            assert self.main is not None
            out["main"] = print_ineq(self.main, sig)
            out["disjuncts"] = [d.json(sig) for d in self.disjuncts]
        return out


def _atom_pivot(
    iq: Inequality, outer: set[str], exclude: set[str]
) -> tuple[Term, Term] | None:
    """(pivot, other side) for an atom, preferring a nominal left-hand side;
    variables in exclude (a quantifier block) cannot serve as the pivot."""
    if isinstance(iq.lhs, Nominal) and iq.lhs.name in outer and iq.lhs.name not in exclude:
        return iq.lhs, iq.rhs
    if isinstance(iq.rhs, Conominal) and iq.rhs.name in outer and iq.rhs.name not in exclude:
        return iq.rhs, iq.lhs
    return None


def _check_restrictor(
    term: Term,
    pivot: Term,
    uvars: list[Term],
    forbidden: set[str],
    ambient: set[str],
    sig: Signature,
    fresh: FreshNames,
) -> tuple[Term, list[Term], list[Disjunct]]:
    """Validate a restrictor: a definite skeleton formula (read negatively for
    a nominal pivot, positively for a conominal one) containing each variable
    of the block exactly once and nothing else.  Occurrences of legal outer
    variables are replaced by fresh block variables with a bare defining
    disjunct, which compaction undoes."""
    sign = -1 if isinstance(pivot, Nominal) else 1
    tree = build_signed_tree(term, sign, sig)
    bad = [n for n in tree.nodes() if n.node_class not in _DEFINITE_CLASSES]
    if bad:
        raise _Reject(
            f"restrictor {print_term(term, sig)} is not a definite skeleton formula"
        )
    unames = {u.name for u in uvars}
    counts: dict[str, int] = {u.name: 0 for u in uvars}
    extra_vars: list[Term] = []
    extra_parts: list[Disjunct] = []
    for leaf in tree.leaves():
        t = leaf.term
        if not isinstance(t, (Nominal, Conominal)):
            continue
        if t.name in unames:
            counts[t.name] += 1
            continue
        if t.name in forbidden:
            raise _Reject(f"pivot variable {t.name} reappears inside a restrictor")
        if t.name not in ambient:
            raise _Reject(f"restrictor mentions the unknown variable {t.name}")
        # Freshen the outer variable: a positive occurrence is approximated
        # from below by a fresh nominal, a negative one from above by a fresh
        # conominal; either bound compacts back to the variable itself.
        if leaf.sign == 1:
            v: Term = fresh.nominal()
        else:
            v = fresh.conominal()
        term = replace_at(term, leaf.path, v)
        extra_vars.append(v)
        extra_parts.append(Disjunct(pivot=v, case="base", bound=t))
    for u in uvars:
        if counts[u.name] == 0:
            raise _Reject(f"quantified variable {u.name} does not occur in the restrictor")
        if counts[u.name] > 1:
            raise _Reject(f"quantified variable {u.name} occurs more than once in the restrictor")
    return term, extra_vars, extra_parts


def _group_by_pivot(parts: list[Disjunct]) -> list[Disjunct]:
    order: list[str] = []
    groups: dict[str, list[Disjunct]] = {}
    for d in parts:
        if d.pivot.name not in groups:
            order.append(d.pivot.name)
            groups[d.pivot.name] = []
        groups[d.pivot.name].append(d)
    out = []
    for name in order:
        ds = groups[name]
        if len(ds) == 1:
            out.append(ds[0])
        else:
            out.append(Disjunct(pivot=ds[0].pivot, case="split", parts=ds))
    return out


def _binder_terms(binders: list[tuple[type, str]]) -> list[Term]:
    return [
        Nominal(name) if cls in (ForallNom, ExistsNom) else Conominal(name)
        for cls, name in binders
    ]


def _recognize_parts(
    parts: list[MetaFormula],
    polarity: int,
    uvars: list[Term],
    pivot: Term,
    forbidden: set[str],
    ambient: set[str],
    sig: Signature,
    fresh: FreshNames,
) -> list[Disjunct]:
    """Inner disjuncts of a quantified case: one group per block variable,
    with no leakage of the pivot or of sibling block variables."""
    unames = {u.name for u in uvars}
    inner_forbidden = forbidden | {pivot.name}
    recognized: list[Disjunct] = []
    for g in parts:
        d = _recognize_disjunct(
            g, polarity, unames, inner_forbidden, ambient | unames, sig, fresh
        )
        leak = (d.free_names() - {d.pivot.name}) & unames
        if leak:
            raise _Reject(
                f"quantified variable {sorted(leak)[0]} leaks into the disjunct for {d.pivot.name}"
            )
        recognized.append(d)
    return recognized


def _recognize_disjunct(
    f: MetaFormula,
    polarity: int,
    outer: set[str],
    forbidden: set[str],
    ambient: set[str],
    sig: Signature,
    fresh: FreshNames,
) -> Disjunct:
    if isinstance(f, Atom):
        iq = f.ineq
        if bool(iq.negated) != (polarity == -1):
            raise _Reject(
                f"atom {print_ineq(iq, sig)} is oriented against its position in the clause"
            )
        found = _atom_pivot(iq, outer, set())
        if found is None:
            raise _Reject(f"no pivot variable in the atom {print_ineq(iq, sig)}")
        pivot, bound = found
        if _skeleton_reading(bound, pivot, sig) is None:
            raise _Reject(
                f"bound {print_term(bound, sig)} of pivot {pivot.name} is not a skeleton formula"
            )
        illegal = set(pure_vars(bound)) & (forbidden | {pivot.name})
        if illegal:
            raise _Reject(
                f"pivot variable {sorted(illegal)[0]} reappears inside a bound"
            )
        return Disjunct(pivot=pivot, case="base", bound=bound)

    if isinstance(f, (MetaAnd, MetaOr)):
        if isinstance(f, MetaAnd) and polarity == -1:
            raise _Reject("bare conjunction in a negative disjunct (missing quantifier block)")
        if isinstance(f, MetaOr) and polarity == 1:
            raise _Reject("disjunction in a positive disjunct")
        ds = [
            _recognize_disjunct(p, polarity, outer, forbidden, ambient, sig, fresh)
            for p in f.parts
        ]
        pivots = {d.pivot.name for d in ds}
        if len(pivots) != 1:
            raise _Reject("a split disjunct must keep a single pivot variable")
        return Disjunct(pivot=ds[0].pivot, case="split", parts=ds)

    if isinstance(f, EXISTS):
        if polarity != -1:
            raise _Reject("existential quantifier in a positive disjunct")
        binders, body = strip_exists(f)
        uvars = _binder_terms(binders)
        items = _conjuncts(body)
        cores = [p for p in items if isinstance(p, Atom) and p.ineq.negated]
        if len(cores) != 1:
            raise _Reject(
                "an existential disjunct needs exactly one negated core inequality"
            )
        core = cores[0].ineq
        unames = {u.name for u in uvars}
        found = _atom_pivot(core, outer, unames)
        if found is None:
            raise _Reject(
                f"core atom {print_ineq(core, sig)} has no outer pivot variable"
            )
        pivot, restrictor = found
        restrictor, extra_vars, extra_parts = _check_restrictor(
            restrictor, pivot, uvars, forbidden | {pivot.name}, ambient, sig, fresh
        )
        rest = [p for p in items if p is not cores[0]]
        parts = extra_parts + _recognize_parts(
            rest, 1, uvars + extra_vars, pivot, forbidden, ambient, sig, fresh
        )
        return _assemble_quantified(pivot, uvars + extra_vars, restrictor, parts, sig)

    if isinstance(f, FORALLS):
        if polarity != 1:
            raise _Reject("universal quantifier in a negative disjunct")
        binders, body = strip_foralls(f)
        uvars = _binder_terms(binders)
        if not isinstance(body, MetaImplies):
            raise _Reject("a universal disjunct must be an implication")
        unames = {u.name for u in uvars}
        cons = _disjuncts(body.consequent)
        # Direct form: the consequent is the defining inequality itself.
        if (
            len(cons) == 1
            and isinstance(cons[0], Atom)
            and not cons[0].ineq.negated
            and _atom_pivot(cons[0].ineq, outer, unames) is not None
        ):
            pivot, restrictor = _atom_pivot(cons[0].ineq, outer, unames)  # type: ignore[misc]
            restrictor, extra_vars, extra_parts = _check_restrictor(
                restrictor, pivot, uvars, forbidden | {pivot.name}, ambient, sig, fresh
            )
            parts = extra_parts + _recognize_parts(
                _conjuncts(body.antecedent), 1, uvars + extra_vars, pivot,
                forbidden, ambient, sig, fresh,
            )
            return _assemble_quantified(pivot, uvars + extra_vars, restrictor, parts, sig)
        # Contrapositive form: the negated defining inequality is the antecedent.
        ants = _conjuncts(body.antecedent)
        if len(ants) == 1 and isinstance(ants[0], Atom) and ants[0].ineq.negated:
            core = ants[0].ineq
            found = _atom_pivot(core, outer, unames)
            if found is None:
                raise _Reject(
                    f"core atom {print_ineq(core, sig)} has no outer pivot variable"
                )
            pivot, restrictor = found
            restrictor, extra_vars, extra_parts = _check_restrictor(
                restrictor, pivot, uvars, forbidden | {pivot.name}, ambient, sig, fresh
            )
            parts = extra_parts + _recognize_parts(
                cons, -1, uvars + extra_vars, pivot, forbidden, ambient, sig, fresh
            )
            return _assemble_quantified(pivot, uvars + extra_vars, restrictor, parts, sig)
        raise _Reject("a universal disjunct matches neither implication form")

    raise _Reject(f"unsupported formula shape {type(f).__name__} inside a disjunct")


def _assemble_quantified(
    pivot: Term,
    uvars: list[Term],
    restrictor: Term,
    parts: list[Disjunct],
    sig: Signature,
) -> Disjunct:
    grouped = _group_by_pivot(parts)
    covered = {d.pivot.name for d in grouped}
    for u in uvars:
        if u.name not in covered:
            raise _Reject(f"quantified variable {u.name} has no defining disjunct")
    extra = covered - {u.name for u in uvars}
    if extra:
        raise _Reject(
            f"disjunct for {sorted(extra)[0]} does not match any quantified variable"
        )
    return Disjunct(
        pivot=pivot, case="quantified", parts=grouped, uvars=uvars, restrictor=restrictor
    )


def _occurrence_signs(
    f: MetaFormula, polarity: int, sig: Signature, out: dict[str, set[int]]
) -> None:
    if isinstance(f, Atom):
        s = polarity * (-1 if f.ineq.negated else 1)
        for term, side in ((f.ineq.lhs, 1), (f.ineq.rhs, -1)):
            tree = build_signed_tree(term, side, sig)
            for leaf in tree.leaves():
                if isinstance(leaf.term, (Nominal, Conominal)):
                    out.setdefault(leaf.term.name, set()).add(leaf.sign * s)
        return
    if isinstance(f, MetaImplies):
        _occurrence_signs(f.antecedent, -polarity, sig, out)
        _occurrence_signs(f.consequent, polarity, sig, out)
        return
    if isinstance(f, MetaNot):
        _occurrence_signs(f.body, -polarity, sig, out)
        return
    if isinstance(f, (MetaAnd, MetaOr)):
        for p in f.parts:
            _occurrence_signs(p, polarity, sig, out)
        return
    if isinstance(f, FORALLS + EXISTS):
        _occurrence_signs(f.body, polarity, sig, out)
        return
    raise InverseError(f"unsupported meta formula {f!r}")


def _main_occurrences(main: Inequality, sig: Signature) -> dict[str, list[int]]:
    occ: dict[str, list[int]] = {}
    for term, side in ((main.lhs, 1), (main.rhs, -1)):
        tree = build_signed_tree(term, side, sig)
        for leaf in tree.leaves():
            if isinstance(leaf.term, (Nominal, Conominal)):
                occ.setdefault(leaf.term.name, []).append(leaf.sign)
    return occ


def recognize(f: MetaFormula, sig: Signature) -> InverseReport:
    """Parse a clause as a pre-inverse correspondent and check the conditions
    that make the inverse procedure sound."""
    original = f
    try:
        for a in meta_atoms(f):
            if prop_vars(a.ineq.lhs) or prop_vars(a.ineq.rhs):
                raise _Reject("the clause must be pure: no proposition variables")
        f = _push_nots(f)
        f = _uniquify_binders(f, set())
        if free_pure_vars(f):
            raise _Reject(
                f"the clause has free variables: {', '.join(free_pure_vars(f))}"
            )
        binders, body = strip_foralls(f)
        prefix = _binder_terms(binders)
        prefix_names = {v.name for v in prefix}
        if isinstance(body, MetaImplies):
            tops: list[tuple[MetaFormula, int]] = [
                (a, 1) for a in _conjuncts(body.antecedent)
            ] + [(c, -1) for c in _disjuncts(body.consequent)]
        else:
            tops = [(c, -1) for c in _disjuncts(body)]
        mains = [
            (i, p)
            for i, (p, pol) in enumerate(tops)
            if pol == -1 and isinstance(p, Atom) and not p.ineq.negated
        ]
        if not mains:
            raise _Reject("no main inequality: every disjunct is negated or quantified")
        if len(mains) > 1:
            raise _Reject("more than one candidate main inequality")
        main_index, main_atom = mains[0]
        main = main_atom.ineq  # type: ignore[union-attr]
        fresh = FreshNames(used=_clause_names(f))
        parts: list[Disjunct] = []
        for i, (g, pol) in enumerate(tops):
            if i == main_index:
                continue
            parts.append(
                _recognize_disjunct(
                    g, pol, prefix_names, set(), prefix_names, sig, fresh
                )
            )
        disjuncts = _group_by_pivot(parts)

        # Condition 1: prefix polarities inside the disjuncts.
        occ: dict[str, set[int]] = {}
        for d in disjuncts:
            _occurrence_signs(d.formula(-1), 1, sig, occ)
        for v in prefix:
            want = -1 if isinstance(v, Nominal) else 1
            if occ.get(v.name, set()) - {want}:
                kind = "nominal" if isinstance(v, Nominal) else "conominal"
                side = "negatively" if want == -1 else "positively"
                raise _Reject(
                    f"prefix {kind} {v.name} must occur only {side} inside the disjuncts"
                )

        # Condition 2: the main inequality has skeleton sides.
        if not _all_classes(main.lhs, 1, sig, _SKELETON_CLASSES):
            raise _Reject(
                f"left side {print_term(main.lhs, sig)} of the main inequality is not skeleton"
            )
        if not _all_classes(main.rhs, -1, sig, _SKELETON_CLASSES):
            raise _Reject(
                f"right side {print_term(main.rhs, sig)} of the main inequality is not skeleton"
            )

        # Condition 3: each prefix variable occurs in the main inequality on
        # its own side, exactly once.
        main_occ = _main_occurrences(main, sig)
        for v in prefix:
            want = 1 if isinstance(v, Nominal) else -1
            signs = main_occ.get(v.name, [])
            if not signs:
                raise _Reject(
                    f"prefix variable {v.name} occurs only in the bounds, never in the main inequality"
                )
            if any(s != want for s in signs):
                side = "positively" if want == 1 else "negatively"
                raise _Reject(
                    f"prefix variable {v.name} must occur {side} in the main inequality"
                )
            if len(signs) > 1:
                raise _Reject(
                    f"prefix variable {v.name} occurs more than once in the main inequality"
                )
        stray = set(main_occ) - prefix_names
        if stray:
            raise _Reject(
                f"main inequality mentions the unquantified variable {sorted(stray)[0]}"
            )
        return InverseReport(
            formula=original,
            recognized=True,
            prefix=prefix,
            main=main,
            disjuncts=disjuncts,
        )
    except _Reject as exc:
        return InverseReport(formula=original, recognized=False, reason=exc.reason)


def _clause_names(f: MetaFormula) -> set[str]:
    names: set[str] = set()

    def walk(g: MetaFormula) -> None:
        if isinstance(g, Atom):
            names.update(pure_vars(g.ineq.lhs))
            names.update(pure_vars(g.ineq.rhs))
            return
        if isinstance(g, FORALLS + EXISTS):
            names.add(g.var)
            walk(g.body)
            return
        if isinstance(g, MetaImplies):
            walk(g.antecedent)
            walk(g.consequent)
            return
        if isinstance(g, MetaNot):
            walk(g.body)
            return
        if isinstance(g, (MetaAnd, MetaOr)):
            for p in g.parts:
                walk(p)
            return
    walk(f)
    return names


# ---------------------------------------------------------------------------
# Compaction and the very simple Sahlqvist inequality


def compact(d: Disjunct, sig: Signature) -> Term:
    """The single bound equivalent to the disjunct: the pivot's side of the
    one inequality `pivot <= bound` (nominal) or `bound <= pivot` (conominal)
    the disjunct amounts to."""
    if d.case == "base":
        assert d.bound is not None
        return d.bound
    if d.case == "split":
        bounds = [compact(p, sig) for p in d.parts]
        if isinstance(d.pivot, Nominal):
            return _fold(bounds, Meet)
        return _fold(bounds, Join)
    assert d.restrictor is not None
    mapping = {p.pivot.name: compact(p, sig) for p in d.parts}
    out = substitute_pure(d.restrictor, mapping)
    leak = set(pure_vars(out)) & {u.name for u in d.uvars}
    if leak:  # pragma: no cover - recognition forbids leakage
        raise InverseError(f"quantified variable {sorted(leak)[0]} escapes compaction")
    return out


def _fold(terms: list[Term], cls) -> Term:
    out = terms[-1]
    for t in reversed(terms[:-1]):
        out = cls(t, out)
    return out


@dataclass
class VssResult:
    ineq: Inequality
    eps: dict[str, int]
    propvar_of: dict[str, str]
    bounds: dict[str, Term]

    def json(self, sig: Signature | None = None) -> dict:
        return {
            "inequality": print_ineq(self.ineq, sig),
            "epsilon": {v: ("1" if s == 1 else "d") for v, s in self.eps.items()},
            "variables": dict(self.propvar_of),
            "bounds": {k: print_term(v, sig) for k, v in self.bounds.items()},
        }


def to_vss(report: InverseReport, sig: Signature) -> VssResult:
    """Compact a recognized clause into a very simple Sahlqvist inequality
    over the expanded language."""
    if not report.recognized:
        raise InverseError(report.reason)
    assert report.main is not None
    bounds = {d.pivot.name: compact(d, sig) for d in report.disjuncts}
    pivot_names = set(bounds)
    used_in_bounds: set[str] = set()
    for b in bounds.values():
        used_in_bounds.update(pure_vars(b))

    propvar_of: dict[str, str] = {}
    rename: dict[str, Term] = {}
    eps: dict[str, int] = {}
    for v in report.prefix:
        overlap = v.name in pivot_names and v.name in used_in_bounds
        plain = v.name not in pivot_names
        if not (plain or overlap):
            continue
        pname = ("p_" if isinstance(v, Nominal) else "q_") + v.name
        propvar_of[v.name] = pname
        rename[v.name] = PropVar(pname)
        eps[pname] = 1 if isinstance(v, Nominal) else -1

    bounds2 = {k: substitute_pure(b, rename) for k, b in bounds.items()}
    merged: dict[str, Term] = {}
    for d in report.disjuncts:
        name = d.pivot.name
        b = bounds2[name]
        if name in propvar_of:
            pv = PropVar(propvar_of[name])
            b = Meet(b, pv) if isinstance(d.pivot, Nominal) else Join(b, pv)
        merged[name] = b

    main_map = dict(rename)
    main_map.update(merged)
    out = Inequality(
        substitute_pure(report.main.lhs, main_map),
        substitute_pure(report.main.rhs, main_map),
    )
    eps = {v: eps[v] for v in _prop_order(out) if v in eps}
    if not _vss_for_eps(out, eps, sig):
        raise InverseError(
            "internal: the compacted inequality is not very simple Sahlqvist "
            f"({print_ineq(out, sig)})"
        )
    return VssResult(ineq=out, eps=eps, propvar_of=propvar_of, bounds=bounds2)


def _prop_order(iq: Inequality) -> list[str]:
    names: list[str] = []

    def walk(t: Term) -> None:
        if isinstance(t, PropVar) and t.name not in names:
            names.append(t.name)
        for c in children(t):
            walk(c)

    walk(iq.lhs)
    walk(iq.rhs)
    return names


def _vss_for_eps(iq: Inequality, eps: dict[str, int], sig: Signature) -> bool:
    """Very simple Sahlqvist for the given fixed order type: every critical
    branch is refined good without SRR nodes, and the decomposition leaves
    bare variables in every minimal-valuation slot."""
    trees = signed_trees(iq, sig)
    if any(
        branch_profile(tree, leaf.path) is None
        for tree in trees
        for leaf in critical_leaves(tree, eps)
    ):
        return False
    if _has_critical_srr(trees, eps):
        return False
    try:
        d = decompose(iq, eps, DependencyOrder(), sig)
    except NotInductiveError:
        return False
    return all(
        isinstance(m.term, PropVar)
        for cut in d.cuts
        for m in cut.members
        if m.kind in ("alpha", "beta") or len(cut.members) > 1
    )


# ---------------------------------------------------------------------------
# Crypto-inductive check


def _base_in_view(head: str, sig: Signature, view: str) -> bool:
    if head in ("meet", "join"):
        return view == "base" and sig.lattice_member(head)
    return sig.decl(head).base


def _residual_is_base(sig: Signature, head: str, i: int) -> bool:
    """Whether the i-th residual of head is a base connective, without
    generating second-level residuals as a side effect."""
    if head in ("meet", "join"):
        if not sig.lattice_member(head):
            return False
        for dd in sig.connectives.values():
            if dd.origin == (head, i):
                return dd.base
        return False
    d = sig.decl(head)
    if d.origin is not None and d.origin[1] == i:
        parent = d.origin[0]
        if parent in ("meet", "join"):
            return sig.lattice_member(parent)
        return sig.decl(parent).base
    for dd in sig.connectives.values():
        if dd.origin == (head, i):
            return dd.base
    return False


def _node_conservative(node: SignedNode, coord: int, sig: Signature) -> bool:
    """Residuation through this node in the given coordinate stays in the
    base language.  Lattice nodes are commutative, so a linked residual in
    either coordinate serves both."""
    head = sig.term_head(node.term)
    if head in ("meet", "join"):
        if not sig.lattice_member(head):
            return False
        return _residual_is_base(sig, head, 1) or _residual_is_base(sig, head, 2)
    return _residual_is_base(sig, head, coord + 1)


def _node_admissible(node: SignedNode, coord: int, sig: Signature) -> bool:
    head = sig.term_head(node.term)
    if head is None:
        return False
    if head in ("meet", "join"):
        if not sig.lattice_member(head):
            return False
        family = sig.lattice_family[head]
    else:
        family = sig.decl(head).family
    if not ((node.sign == -1 and family == "F") or (node.sign == 1 and family == "G")):
        return False
    return _node_conservative(node, coord, sig)


@dataclass
class MVTree:
    side: int  # 0: left-hand side, 1: right-hand side
    leaf_path: tuple[int, ...]
    root_path: tuple[int, ...]
    var: str
    sign: int  # sign of the root (= sign of the leaf occurrence)
    path_positions: list[tuple[int, ...]]

    def json(self) -> dict:
        return {
            "side": "lhs" if self.side == 0 else "rhs",
            "variable": self.var,
            "root": list(self.root_path),
            "leaf": list(self.leaf_path),
        }


def _assign_mvtree(
    tree: SignedNode,
    side: int,
    leaf: SignedNode,
    eps: dict[str, int],
    omega: DependencyOrder,
    sig: Signature,
    view: str,
    taken: set[tuple[int, tuple[int, ...]]],
) -> MVTree:
    ancestors = path_to_root(tree, leaf.path)  # nearest parent first, root last
    # Walk upward from the leaf while residuation stays admissible.
    admissible: list[SignedNode] = []
    for node in ancestors:
        coord = leaf.path[len(node.path)]
        if _node_admissible(node, coord, sig):
            admissible.append(node)
        else:
            break
    for node in reversed(admissible):  # largest candidate first
        head = sig.term_head(node.term)
        if head is None or _base_in_view(head, sig, view):
            continue
        if (side, node.path) in taken:
            continue
        if any(is_critical(l, eps) for l in node.leaves()):
            continue
        if any(
            q != leaf.term.name and omega.less(leaf.term.name, q)
            for q in subtree_prop_vars(node)
        ):
            continue
        positions = [
            a.path for a in ancestors if len(a.path) >= len(node.path)
        ] + [leaf.path]
        return MVTree(
            side=side,
            leaf_path=leaf.path,
            root_path=node.path,
            var=leaf.term.name,
            sign=node.sign,
            path_positions=positions,
        )
    return MVTree(
        side=side,
        leaf_path=leaf.path,
        root_path=leaf.path,
        var=leaf.term.name,
        sign=leaf.sign,
        path_positions=[leaf.path],
    )


@dataclass
class CryptoWitness:
    view: str
    eps: dict[str, int]
    omega: DependencyOrder
    mvtrees: list[MVTree]

    def json(self) -> dict:
        return {
            "view": self.view,
            "epsilon": {v: ("1" if s == 1 else "d") for v, s in self.eps.items()},
            "omega": [list(p) for p in self.omega.pairs()],
            "mvtrees": [m.json() for m in self.mvtrees],
        }


def check_crypto(
    iq: Inequality,
    eps: dict[str, int],
    omega: DependencyOrder,
    sig: Signature,
    view: str = "base",
    leaf_order: str = "ltr",
) -> tuple[bool, str, list[MVTree]]:
    """Certify the inequality as crypto-inductive for the given order type,
    dependency order, and view of the base language."""
    if not _vss_for_eps(iq, eps, sig):
        return False, "not very simple Sahlqvist for this order type", []
    trees = signed_trees(iq, sig)
    for side, tree in enumerate(trees):
        for leaf in critical_leaves(tree, eps):
            for node in path_to_root(tree, leaf.path):
                head = sig.term_head(node.term)
                if head is not None and not _base_in_view(head, sig, view):
                    return (
                        False,
                        f"critical branch to {leaf.term.name} passes through non-base {head}",
                        [],
                    )
    # Assign MVTrees to the non-critical variable occurrences.
    worklist: list[tuple[int, SignedNode]] = []
    for side, tree in enumerate(trees):
        for leaf in tree.leaves():
            if isinstance(leaf.term, PropVar) and not is_critical(leaf, eps):
                worklist.append((side, leaf))
    if leaf_order == "rtl":
        worklist.reverse()
    taken: set[tuple[int, tuple[int, ...]]] = set()
    mvtrees: list[MVTree] = []
    for side, leaf in worklist:
        mv = _assign_mvtree(trees[side], side, leaf, eps, omega, sig, view, taken)
        mvtrees.append(mv)
        taken.update((side, p) for p in mv.path_positions)
    covered = {
        (mv.side, p): mv for mv in mvtrees for p in mv.path_positions
    }
    for side, tree in enumerate(trees):
        for node in tree.nodes():
            head = sig.term_head(node.term)
            if head is None or _base_in_view(head, sig, view):
                continue
            if (side, node.path) not in covered:
                return (
                    False,
                    f"occurrence of non-base {head} is not covered by any variable subtree",
                    [],
                )
            scope = subtree_prop_vars(node)
            if not scope:
                return False, f"non-base {head} has no variable in scope", []
            if not any(
                all(w == v or omega.less(w, v) for w in scope) for v in scope
            ):
                return (
                    False,
                    f"no largest variable in the scope of non-base {head}",
                    [],
                )
    return True, "", mvtrees


def _omegas(names: list[str]):
    """Strict partial orders over names: for up to four variables every
    transitively closed set of pairs in ascending size, otherwise the empty
    order followed by the total orders (chains)."""
    yield DependencyOrder()
    n = len(names)
    if n <= 1:
        return
    if n <= 4:
        index = {v: i for i, v in enumerate(names)}
        all_pairs = sorted(
            ((a, b) for a in names for b in names if a != b),
            key=lambda ab: (index[ab[0]], index[ab[1]]),
        )
        for size in range(1, len(all_pairs) + 1):
            for subset in itertools.combinations(all_pairs, size):
                omega = DependencyOrder(list(subset))
                if not omega.is_strict():
                    continue
                if set(omega.pairs()) != set(subset):
                    continue  # not transitively closed; its closure is listed once
                yield omega
    else:
        for perm in itertools.permutations(names):
            pairs = [(perm[i], perm[j]) for i in range(n) for j in range(i + 1, n)]
            yield DependencyOrder(pairs)


def crypto_witnesses(
    iq: Inequality,
    sig: Signature,
    leaf_order: str = "ltr",
):
    """All crypto-inductive witnesses in deterministic order: base view before
    the starred view, order types with 1 before d in first-occurrence order,
    dependency orders by ascending size."""
    views = ["base"]
    if any(
        d.origin is not None and d.origin[0] in ("meet", "join")
        for d in sig.connectives.values()
    ):
        views.append("starred")
    names = _prop_order(iq)
    for view in views:
        for combo in itertools.product((1, -1), repeat=len(names)):
            eps = dict(zip(names, combo))
            for omega in _omegas(names):
                ok, _, mvtrees = check_crypto(iq, eps, omega, sig, view, leaf_order)
                if ok:
                    yield CryptoWitness(view=view, eps=eps, omega=omega, mvtrees=mvtrees)


# ---------------------------------------------------------------------------
# Crypto rewriting (extraction)


class _ExtractReject(Exception):
    pass


def _commutative_prefer(
    t: Term, path: tuple[int, ...], sig: Signature
) -> tuple[Term, tuple[int, ...]]:
    """Swap lattice arguments along the path so that residuation uses a
    declared base residual whenever one coordinate has it and the descent
    coordinate does not."""
    if not path:
        return t, path
    coord = path[0]
    if isinstance(t, (Meet, Join)):
        head = "meet" if isinstance(t, Meet) else "join"
        if (
            sig.lattice_member(head)
            and not _residual_is_base(sig, head, coord + 1)
            and _residual_is_base(sig, head, 2 - coord)
        ):
            args = [t.left, t.right]
            args[0], args[1] = args[1], args[0]
            t = type(t)(args[0], args[1])
            coord = 1 - coord
    kids = list(children(t))
    sub, subpath = _commutative_prefer(kids[coord], path[1:], sig)
    return replace_at(t, (coord,), sub), (coord,) + subpath


@dataclass
class RewriteResult:
    input: Inequality
    output: Inequality
    eps: dict[str, int]
    omega: DependencyOrder
    witness: CryptoWitness
    bounds: dict[str, Term]

    def json(self, sig: Signature | None = None) -> dict:
        return {
            "input": print_ineq(self.input, sig),
            "output": print_ineq(self.output, sig),
            "epsilon": {v: ("1" if s == 1 else "d") for v, s in self.eps.items()},
            "omega": [list(p) for p in self.omega.pairs()],
            "witness": self.witness.json(),
            "bounds": {k: print_term(v, sig) for k, v in self.bounds.items()},
        }


def _fresh_prop_stream(used: set[str]):
    k = 1
    while True:
        name = f"q{k}"
        if name not in used:
            used.add(name)
            yield name
        k += 1


def _class_order(
    classes: list[list[MVTree]], eps: dict[str, int], omega: DependencyOrder
) -> list[int]:
    """Topological order of extraction classes: inner roots before the roots
    that contain them, Omega-smaller leaf variables before larger ones; ties
    keep the leftmost-root order."""
    n = len(classes)

    def position(c: list[MVTree]) -> tuple[int, tuple[int, ...]]:
        return min((m.side, m.root_path) for m in c)

    edges: dict[int, set[int]] = {i: set() for i in range(n)}
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            vars_i = {m.var for m in classes[i]}
            vars_j = {m.var for m in classes[j]}
            if any(omega.less(a, b) for a in vars_i for b in vars_j):
                edges[j].add(i)  # i precedes j
            if any(
                mi.side == mj.side
                and len(mi.root_path) > len(mj.root_path)
                and mi.root_path[: len(mj.root_path)] == mj.root_path
                for mi in classes[i]
                for mj in classes[j]
            ):
                edges[j].add(i)  # i's root is inside j's root: i precedes j
    order: list[int] = []
    remaining = sorted(range(n), key=lambda i: position(classes[i]))
    while remaining:
        ready = [i for i in remaining if not (edges[i] & set(remaining))]
        if not ready:
            raise _ExtractReject("cyclic dependencies between extraction classes")
        nxt = ready[0]
        order.append(nxt)
        remaining.remove(nxt)
    return order


def _extract(
    iq: Inequality,
    eps: dict[str, int],
    sig: Signature,
    witness: CryptoWitness,
) -> RewriteResult:
    sides: list[Term] = [iq.lhs, iq.rhs]
    # Group MVTrees into classes by (root term, root sign).
    keys: list[tuple[Term, int]] = []
    classes: list[list[MVTree]] = []
    for mv in witness.mvtrees:
        root_term = term_at(sides[mv.side], mv.root_path)
        key = (root_term, mv.sign)
        for i, k in enumerate(keys):
            if k == key:
                classes[i].append(mv)
                break
        else:
            keys.append(key)
            classes.append([mv])
    order = _class_order(classes, eps, witness.omega)

    used = set(_prop_order(iq))
    stream = _fresh_prop_stream(used)
    uppers: dict[str, list[Term]] = {}
    lowers: dict[str, list[Term]] = {}
    eps_out: dict[str, int] = {}
    chain: list[str] = []
    bounds_log: dict[str, Term] = {}

    for ci in order:
        cls = classes[ci]
        cur_terms = [term_at(sides[mv.side], mv.root_path) for mv in cls]
        if any(t != cur_terms[0] for t in cur_terms[1:]):
            raise _ExtractReject("extraction class lost its shared subterm")
        t_cur = cur_terms[0]
        sign = cls[0].sign
        leaf_vars = {mv.var for mv in cls}
        if len({eps[v] for v in leaf_vars}) != 1:
            raise _ExtractReject("extraction class mixes order-type values")
        fresh_name = next(stream)
        fresh = PropVar(fresh_name)
        for mv in cls:
            rel = mv.leaf_path[len(mv.root_path):]
            massaged, rel2 = _commutative_prefer(t_cur, rel, sig)
            try:
                bound, on_right = adjoint_solve(
                    massaged, rel2, fresh, sig, term_on_right=(sign == 1)
                )
            except NotInductiveError as exc:
                raise _ExtractReject(str(exc))
            if on_right:
                if eps[mv.var] != -1:
                    raise _ExtractReject(
                        f"lower bound produced for the 1-variable {mv.var}"
                    )
                lowers.setdefault(mv.var, []).append(bound)
            else:
                if eps[mv.var] != 1:
                    raise _ExtractReject(
                        f"upper bound produced for the d-variable {mv.var}"
                    )
                uppers.setdefault(mv.var, []).append(bound)
        for mv in cls:
            sides[mv.side] = replace_at(sides[mv.side], mv.root_path, fresh)
        eps_out[fresh_name] = eps[next(iter(leaf_vars))]
        bounds_log[fresh_name] = t_cur
        chain.append(fresh_name)

    # Substitute the collected bounds into the remaining (critical) occurrences.
    mapping: dict[str, Term] = {}
    for v in eps:
        if v in uppers or v in lowers:
            if eps[v] == 1:
                if v in lowers:
                    raise _ExtractReject(f"stray lower bound for {v}")
                mapping[v] = _fold(uppers[v], Meet)
            else:
                if v in uppers:
                    raise _ExtractReject(f"stray upper bound for {v}")
                mapping[v] = _fold(lowers[v], Join)
        else:
            eps_out[v] = eps[v]
    out = Inequality(substitute(sides[0], mapping), substitute(sides[1], mapping))

    if witness.view == "starred":
        out = _rotate_lattice(out, sig)

    eps_out = {v: eps_out[v] for v in _prop_order(out) if v in eps_out}
    omega_out = DependencyOrder(
        [(chain[i], chain[j]) for i in range(len(chain)) for j in range(i + 1, len(chain))]
    )
    for head in _heads(out):
        if head in ("meet", "join"):
            if not sig.lattice_member(head):
                raise _ExtractReject("output uses an undeclared lattice connective")
        elif not sig.decl(head).base:
            raise _ExtractReject(f"output still uses the non-base connective {head}")
    ok, why = check_refined_inductive(out, eps_out, omega_out, sig)
    if not ok:
        raise _ExtractReject(f"output failed the inductive check: {why}")
    return RewriteResult(
        input=iq, output=out, eps=eps_out, omega=omega_out, witness=witness,
        bounds=bounds_log,
    )


def _heads(iq: Inequality):
    def walk(t: Term):
        if isinstance(t, (Meet, Join)):
            yield "meet" if isinstance(t, Meet) else "join"
        elif hasattr(t, "conn"):
            yield t.conn
        for c in children(t):
            yield from walk(c)

    yield from walk(iq.lhs)
    yield from walk(iq.rhs)


def _rotate_lattice(iq: Inequality, sig: Signature, limit: int = 8) -> Inequality:
    """In the starred view the goal is a lattice-free output: residuate away
    folded meets on the left and joins on the right when a declared base
    residual is available."""
    for _ in range(limit):
        if isinstance(iq.lhs, Meet) and sig.lattice_member("meet"):
            if _residual_is_base(sig, "meet", 2):
                res = sig.residual_name("meet", 2)
                iq = Inequality(iq.lhs.right, sig.apply(res, [iq.lhs.left, iq.rhs]))
                continue
            if _residual_is_base(sig, "meet", 1):
                res = sig.residual_name("meet", 1)
                iq = Inequality(iq.lhs.left, sig.apply(res, [iq.rhs, iq.lhs.right]))
                continue
        if isinstance(iq.rhs, Join) and sig.lattice_member("join"):
            if _residual_is_base(sig, "join", 2):
                res = sig.residual_name("join", 2)
                iq = Inequality(sig.apply(res, [iq.rhs.left, iq.lhs]), iq.rhs.right)
                continue
            if _residual_is_base(sig, "join", 1):
                res = sig.residual_name("join", 1)
                iq = Inequality(sig.apply(res, [iq.lhs, iq.rhs.right]), iq.rhs.left)
                continue
        break
    return iq


def crypto_rewrite(
    iq: Inequality,
    sig: Signature,
    all_witnesses: bool = False,
    leaf_order: str = "ltr",
) -> list[RewriteResult]:
    """Rewrite a crypto-inductive inequality into the base language.  Returns
    the first successful rewriting, or all distinct ones when requested."""
    results: list[RewriteResult] = []
    seen: list[Inequality] = []
    for witness in crypto_witnesses(iq, sig, leaf_order):
        try:
            res = _extract(iq, witness.eps, sig, witness)
        except _ExtractReject:
            continue
        if any(ineqs_equal(res.output, s) for s in seen):
            continue
        seen.append(res.output)
        results.append(res)
        if not all_witnesses:
            break
    return results


# ---------------------------------------------------------------------------
# The inverse pipeline


@dataclass
class InverseOutcome:
    verdict: str  # "inductive" | "vss-only" | "not-recognized"
    report: InverseReport
    vss: VssResult | None = None
    rewrite: RewriteResult | None = None

    def json(self, sig: Signature | None = None) -> dict:
        out: dict = {"verdict": self.verdict, "recognized": self.report.recognized}
        if not self.report.recognized:
            out["reason"] = self.report.reason
        else:
            out["clause"] = self.report.json(sig)
        if self.vss is not None:
            out["vss"] = self.vss.json(sig)
        if self.rewrite is not None:
            out["inductive"] = self.rewrite.json(sig)
        return out


def inverse_pipeline(
    f: MetaFormula,
    sig: Signature,
    all_witnesses: bool = False,
    leaf_order: str = "ltr",
) -> InverseOutcome:
    report = recognize(f, sig)
    if not report.recognized:
        return InverseOutcome(verdict="not-recognized", report=report)
    vss = to_vss(report, sig)
    rewrites = crypto_rewrite(vss.ineq, sig, all_witnesses=all_witnesses, leaf_order=leaf_order)
    if rewrites:
        return InverseOutcome(
            verdict="inductive", report=report, vss=vss, rewrite=rewrites[0]
        )
    return InverseOutcome(verdict="vss-only", report=report, vss=vss)
