"""Reduction of refined inductive inequalities to pure quantified form.

The pipeline: decompose the inequality into skeleton and PIA parts, introduce
a nominal (conominal) for every positive (negative) cut, compute the adjoint
bounds of the critical variables by peeling PIA parts one residual at a time,
and eliminate all proposition variables in dependency order by the Ackermann
rule.  The output is a quantified implication whose antecedent collects the
bounds of the gamma/delta parts (with minimal valuations substituted) and
whose consequent is the skeleton inequality over the fresh (co)nominals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .classify import (
    Cut,
    Decomposition,
    DependencyOrder,
    NotInductiveError,
    _var_order,
    decompose,
    find_witness,
)
from .signature import Signature
from .syntax import (
    BOT,
    TOP,
    Atom,
    Inequality,
    Join,
    Meet,
    MetaFormula,
    MetaImplies,
    Term,
    conj,
    forall,
    is_pure,
    substitute,
)


def _peel_step(
    t: Term, coord: int, seed: Term, sig: Signature, right: bool
) -> tuple[Term, Term, int]:
    """One residuation step: replace the coord-th argument of t's head by seed
    and apply the residual in that coordinate. Returns (new seed, argument
    descended into, order-type sign of the coordinate)."""
    head = sig.term_head(t)
    if head is None:
        raise NotInductiveError("cannot peel a non-composite term by residuation")
    if isinstance(t, (Meet, Join)):
        if not sig.lattice_member(head):
            raise NotInductiveError(
                f"lattice {head} has no residuals in this signature; not a PIA path"
            )
        args: list[Term] = [t.left, t.right]
        ot = (1, 1)
        family = sig.lattice_family[head]
    else:
        args = list(t.args)
        d = sig.decl(head)
        ot = d.order_type
        family = d.family
    # right adjoints (G) must sit on the greater side, left adjoints (F) on
    # the smaller side of the running inequality
    if (family == "G") != right:
        raise NotInductiveError(
            f"{head} occurs on the wrong side of the order for residuation; not a PIA path"
        )
    res = sig.residual_of(head, coord + 1)
    newargs = list(args)
    newargs[coord] = seed
    return sig.apply(res, newargs), args[coord], ot[coord]


def adjoint_solve(
    t: Term, path: tuple[int, ...], seed: Term, sig: Signature, term_on_right: bool = True
) -> tuple[Term, bool]:
    """Solve seed <= t (or t <= seed when term_on_right is False) for the
    subterm of t at path, by residuation along the path.  Returns the bound
    and whether the subterm ends up on the right of the inequality."""
    cur = seed
    right = term_on_right
    for coord in path:
        cur, t, sign = _peel_step(t, coord, cur, sig, right)
        if sign == -1:
            right = not right
    return cur, right


def _var_path(t: Term, x: str) -> tuple[int, ...]:
    from .syntax import PropVar, children

    paths: list[tuple[int, ...]] = []

    def walk(s: Term, p: tuple[int, ...]) -> None:
        if isinstance(s, PropVar) and s.name == x:
            paths.append(p)
        for i, c in enumerate(children(s)):
            walk(c, p + (i,))

    walk(t, ())
    if len(paths) != 1:
        raise NotInductiveError(f"{x} must occur exactly once, found {len(paths)} occurrences")
    return paths[0]


def la(phi: Term, x: str | tuple[int, ...], u: Term, sig: Signature) -> Term:
    """Left adjoint of a positive PIA formula with respect to the (unique)
    occurrence of x: u <= phi is equivalent to la(phi, x, u) standing on the
    epsilon-side of x."""
    path = _var_path(phi, x) if isinstance(x, str) else x
    return adjoint_solve(phi, path, u, sig, term_on_right=True)[0]


def ra(psi: Term, x: str | tuple[int, ...], u: Term, sig: Signature) -> Term:
    """Right adjoint of a negative PIA formula with respect to the (unique)
    occurrence of x: psi <= u is equivalent to ra(psi, x, u) bounding x."""
    path = _var_path(psi, x) if isinstance(x, str) else x
    return adjoint_solve(psi, path, u, sig, term_on_right=False)[0]


@dataclass
class MvEntry:
    var: str
    hole: Term
    member: Term
    raw: Term  # adjoint bound before substitution
    substituted: Term | None = None


@dataclass
class AlbaOutput:
    sig: Signature
    eps: dict[str, int]
    omega: DependencyOrder
    decomposition: Decomposition
    holes: list[Term]
    antecedent: list[Inequality]
    consequent: Inequality
    entries: list[MvEntry]
    values: dict[str, Term]  # eliminated variable -> pure value
    order: list[str]
    trace: list[str] = field(default_factory=list)

    def formula(self) -> MetaFormula:
        body: MetaFormula = Atom(self.consequent)
        if self.antecedent:
            body = MetaImplies(conj([Atom(i) for i in self.antecedent]), body)
        return forall(self.holes, body)

    def json(self) -> dict:
        from .printing import ineq_json, meta_json, print_ineq, print_meta, print_term

        return {
            "epsilon": {v: ("1" if s == 1 else "d") for v, s in self.eps.items()},
            "omega": [list(p) for p in self.omega.pairs()],
            "order": self.order,
            "holes": [print_term(h, self.sig) for h in self.holes],
            "antecedent": [print_ineq(i, self.sig) for i in self.antecedent],
            "consequent": print_ineq(self.consequent, self.sig),
            "formula": print_meta(self.formula(), self.sig),
            "values": {v: print_term(t, self.sig) for v, t in self.values.items()},
            "ast": meta_json(self.formula(), self.sig),
        }


def first_approximation(d: Decomposition) -> MetaFormula:
    """The quantified implication introducing one fresh (co)nominal per cut,
    before any Ackermann elimination."""
    bounds = [Atom(i) for i in _cut_bounds(d)]
    body: MetaFormula = Atom(d.consequent())
    if bounds:
        body = MetaImplies(conj(bounds), body)
    return forall(d.holes(), body)


def _cut_bounds(d: Decomposition) -> list[Inequality]:
    out = []
    for cut in d.cuts:
        for m in cut.members:
            if cut.sign == 1:
                out.append(Inequality(cut.hole, m.term))
            else:
                out.append(Inequality(m.term, cut.hole))
    return out


def minimal_valuations(d: Decomposition, sig: Signature) -> list[MvEntry]:
    """Adjoint bounds of the critical variables: one entry per alpha/beta
    part, solving hole <= alpha (alpha <= hole) for its critical leaf."""
    entries: list[MvEntry] = []
    for cut in d.cuts:
        for m in cut.members:
            if m.kind == "alpha":
                bound, right = adjoint_solve(m.term, m.crit_path, cut.hole, sig, True)
            elif m.kind == "beta":
                bound, right = adjoint_solve(m.term, m.crit_path, cut.hole, sig, False)
            else:
                continue
            expected_right = d.eps[m.crit_var] == 1
            if right != expected_right:
                raise NotInductiveError(
                    f"adjoint bound of {m.crit_var} lands on the wrong side of the order"
                )
            entries.append(MvEntry(m.crit_var, cut.hole, m.term, bound))
    return entries


def ackermann_eliminate(
    d: Decomposition, entries: list[MvEntry], sig: Signature
) -> tuple[dict[str, Term], list[str]]:
    """Eliminate every proposition variable in ascending dependency order.
    A variable with order-type 1 becomes the join of its minimal-valuation
    entries, one with order-type d the meet; entries and later values are
    substituted as elimination proceeds."""
    names = d.omega.topological(_var_order(d.ineq))
    values: dict[str, Term] = {}
    for v in names:
        own = [e for e in entries if e.var == v]
        for e in own:
            e.substituted = substitute(e.raw, values)
        terms = [e.substituted for e in own]
        if d.eps[v] == 1:
            val = _njoin(terms)
        else:
            val = _nmeet(terms)
        if not is_pure(val):
            raise NotInductiveError(
                f"minimal valuation of {v} is not pure; dependency order is inconsistent"
            )
        values[v] = val
    return values, names


def _njoin(ts: list[Term]) -> Term:
    if not ts:
        return BOT
    out = ts[-1]
    for t in reversed(ts[:-1]):
        out = Join(t, out)
    return out


def _nmeet(ts: list[Term]) -> Term:
    if not ts:
        return TOP
    out = ts[-1]
    for t in reversed(ts[:-1]):
        out = Meet(t, out)
    return out


def alba_run(
    ineq: Inequality,
    sig: Signature,
    eps: dict[str, int] | None = None,
    omega: DependencyOrder | None = None,
) -> AlbaOutput:
    from .printing import print_ineq, print_meta, print_term

    if eps is None:
        witness = find_witness(ineq, sig)
        if witness is None:
            raise NotInductiveError(
                "the inequality is not refined inductive for any order-type"
            )
        eps, omega = witness
    if omega is None:
        omega = DependencyOrder()
    d = decompose(ineq, eps, omega, sig)
    trace = [
        "input: " + print_ineq(ineq, sig),
        "epsilon: " + ", ".join(f"{v}:{'1' if s == 1 else 'd'}" for v, s in eps.items()),
        "omega: " + (", ".join(f"{a} < {b}" for a, b in omega.pairs()) or "(empty)"),
        "first approximation: " + print_meta(first_approximation(d), sig),
    ]
    entries = minimal_valuations(d, sig)
    for e in entries:
        trace.append(
            f"adjoint bound for {e.var} from {print_ineq(_bound_of(e, d), sig)}: "
            + print_term(e.raw, sig)
        )
    values, order = ackermann_eliminate(d, entries, sig)
    for v in order:
        trace.append(f"ackermann: {v} := {print_term(values[v], sig)}")
    antecedent = []
    for cut in d.cuts:
        for m in cut.members:
            if m.kind == "gamma":
                antecedent.append(Inequality(cut.hole, substitute(m.term, values)))
            elif m.kind == "delta":
                antecedent.append(Inequality(substitute(m.term, values), cut.hole))
    consequent = d.consequent()
    for i in antecedent + [consequent]:
        if not (is_pure(i.lhs) and is_pure(i.rhs)):
            raise NotInductiveError("output is not pure; elimination incomplete")
    out = AlbaOutput(
        sig, eps, omega, d, d.holes(), antecedent, consequent, entries, values, order, trace
    )
    trace.append("output: " + print_meta(out.formula(), sig))
    return out


def _bound_of(e: MvEntry, d: Decomposition) -> Inequality:
    for cut in d.cuts:
        for m in cut.members:
            if m.term is e.member and cut.hole is e.hole:
                if cut.sign == 1:
                    return Inequality(cut.hole, e.member)
                return Inequality(e.member, cut.hole)
    return Inequality(e.hole, e.member)
