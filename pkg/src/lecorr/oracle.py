"""Brute-force semantic backend over small finite models.

Three model classes: finite lattice expansions (``FiniteLE``), Kripke frames,
and polarity frames.  The lattice side evaluates terms, inequalities, and
quantified meta-formulas (nominals over join-irreducibles, conominals over
meet-irreducibles); the frame side evaluates first-order frame conditions and
the complex-algebra validity of inequalities.  ``certify_equivalence`` runs a
pipeline input and output against every catalog model with every normal
operation assignment and reports any mismatch.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from .fol import (
    FEAT,
    OBJ,
    WORLD,
    FOAnd,
    FOAtom,
    FOEq,
    FOExists,
    FOForall,
    FOFormula,
    FOImplies,
    FONot,
    FOOr,
    FrameCondition,
)
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
    free_pure_vars,
    prop_vars,
)


class OracleError(ValueError):
    pass


Table = dict[tuple[int, ...], int]


class FiniteLE:
    """A finite bounded lattice with operation tables.

    Finiteness makes every normal operation completely residuated, so these
    structures support every manipulation the pipeline performs on perfect
    lattice expansions.
    """

    def __init__(self, name: str, leq: tuple[tuple[bool, ...], ...], ops: dict[str, Table] | None = None):
        self.name = name
        self.n = len(leq)
        self.leq = leq
        self.ops: dict[str, Table] = dict(ops or {})
        self._validate_order()
        self.meet_t, self.join_t = self._lattice_tables()
        self.bot = next(a for a in range(self.n) if all(self.le(a, b) for b in range(self.n)))
        self.top = next(a for a in range(self.n) if all(self.le(b, a) for b in range(self.n)))
        self.jirr = tuple(a for a in range(self.n) if self._join_irreducible(a))
        self.mirr = tuple(a for a in range(self.n) if self._meet_irreducible(a))
        self._check_generation()

    # -- structure ---------------------------------------------------------

    def le(self, a: int, b: int) -> bool:
        return self.leq[a][b]

    def meet(self, a: int, b: int) -> int:
        return self.meet_t[a][b]

    def join(self, a: int, b: int) -> int:
        return self.join_t[a][b]

    def joins(self, xs) -> int:
        out = self.bot
        for x in xs:
            out = self.join(out, x)
        return out

    def meets(self, xs) -> int:
        out = self.top
        for x in xs:
            out = self.meet(out, x)
        return out

    def _validate_order(self) -> None:
        n, le = self.n, self.leq
        for a in range(n):
            if not le[a][a]:
                raise OracleError(f"{self.name}: order not reflexive at {a}")
            for b in range(n):
                if le[a][b] and le[b][a] and a != b:
                    raise OracleError(f"{self.name}: order not antisymmetric at {a},{b}")
                for c in range(n):
                    if le[a][b] and le[b][c] and not le[a][c]:
                        raise OracleError(f"{self.name}: order not transitive at {a},{b},{c}")

    def _bound(self, a: int, b: int, lower: bool) -> int:
        if lower:
            cands = [c for c in range(self.n) if self.le(c, a) and self.le(c, b)]
        else:
            cands = [c for c in range(self.n) if self.le(a, c) and self.le(b, c)]
        if lower:
            best = [c for c in cands if all(self.le(d, c) for d in cands)]
        else:
            best = [c for c in cands if all(self.le(c, d) for d in cands)]
        if len(best) != 1:
            raise OracleError(f"{self.name}: {'meet' if lower else 'join'} of {a},{b} missing")
        return best[0]

    def _lattice_tables(self):
        n = self.n
        meet = tuple(tuple(self._bound(a, b, True) for b in range(n)) for a in range(n))
        join = tuple(tuple(self._bound(a, b, False) for b in range(n)) for a in range(n))
        return meet, join

    def _join_irreducible(self, a: int) -> bool:
        if a == self.bot:
            return False
        lower = [b for b in range(self.n) if self.le(b, a) and b != a]
        return self.joins(lower) != a

    def _meet_irreducible(self, a: int) -> bool:
        if a == self.top:
            return False
        upper = [b for b in range(self.n) if self.le(a, b) and b != a]
        return self.meets(upper) != a

    def _check_generation(self) -> None:
        for a in range(self.n):
            if self.joins(j for j in self.jirr if self.le(j, a)) != a:
                raise OracleError(f"{self.name}: join-irreducibles do not generate {a}")
            if self.meets(m for m in self.mirr if self.le(a, m)) != a:
                raise OracleError(f"{self.name}: meet-irreducibles do not generate {a}")

    def is_distributive(self) -> bool:
        rng = range(self.n)
        return all(
            self.meet(a, self.join(b, c)) == self.join(self.meet(a, b), self.meet(a, c))
            for a in rng
            for b in rng
            for c in rng
        )

    def with_ops(self, ops: dict[str, Table]) -> "FiniteLE":
        out = FiniteLE.__new__(FiniteLE)
        out.__dict__.update(self.__dict__)
        out.ops = {**self.ops, **ops}
        return out

    # -- operation resolution ---------------------------------------------

    def _native_table(self, which: str) -> Table:
        fn = self.meet if which == "meet" else self.join
        return {(a, b): fn(a, b) for a in range(self.n) for b in range(self.n)}

    def op_table(self, name: str, sig: Signature) -> Table:
        if name in self.ops:
            return self.ops[name]
        if name in ("meet", "join"):
            t = self._native_table(name)
            self.ops[name] = t
            return t
        d = sig.decl(name)
        if d.origin is not None:
            t = self._derive_residual(d.origin[0], d.origin[1], sig)
            self.ops[name] = t
            return t
        raise OracleError(f"{self.name}: no operation table for {name}")

    def _derive_residual(self, parent: str, i: int, sig: Signature) -> Table:
        ptab = self.op_table(parent, sig)
        pd = sig.decl(parent)
        family, ot, arity = pd.family, pd.order_type, pd.arity
        k = i - 1
        rng = range(self.n)
        table: Table = {}
        for args in itertools.product(rng, repeat=arity):
            seed = args[k]

            def value(c: int) -> int:
                full = list(args)
                full[k] = c
                return ptab[tuple(full)]

            if family == "F":
                good = [c for c in rng if self.le(value(c), seed)]
                res = self.joins(good) if ot[k] == 1 else self.meets(good)
            else:
                good = [c for c in rng if self.le(seed, value(c))]
                res = self.meets(good) if ot[k] == 1 else self.joins(good)
            table[args] = res
        self._verify_adjunction(ptab, table, family, ot, k)
        return table

    def _verify_adjunction(self, ptab: Table, rtab: Table, family: str, ot: tuple[int, ...], k: int) -> None:
        rng = range(self.n)
        for args in itertools.product(rng, repeat=len(ot)):
            for u in rng:
                rargs = list(args)
                rargs[k] = u
                res = rtab[tuple(rargs)]
                if family == "F":
                    lhs = self.le(ptab[args], u)
                    rhs = self.le(args[k], res) if ot[k] == 1 else self.le(res, args[k])
                else:
                    lhs = self.le(u, ptab[args])
                    rhs = self.le(res, args[k]) if ot[k] == 1 else self.le(args[k], res)
                if lhs != rhs:
                    raise OracleError(
                        f"{self.name}: operation has no residual in coordinate {k + 1}"
                    )


# --------------------------------------------------------------------------
# catalog


def _chain(k: int) -> FiniteLE:
    leq = tuple(tuple(a <= b for b in range(k)) for a in range(k))
    return FiniteLE(f"C{k}", leq)


def _boolean(k: int) -> FiniteLE:
    n = 1 << k
    leq = tuple(tuple((a & b) == a for b in range(n)) for a in range(n))
    return FiniteLE(f"2^{k}", leq)


def _from_pairs(name: str, n: int, strict_pairs: set[tuple[int, int]]) -> FiniteLE:
    closure = set(strict_pairs)
    changed = True
    while changed:
        changed = False
        for a, b in list(closure):
            for c, d in list(closure):
                if b == c and (a, d) not in closure:
                    closure.add((a, d))
                    changed = True
    leq = tuple(tuple(a == b or (a, b) in closure for b in range(n)) for a in range(n))
    return FiniteLE(name, leq)


def _m3() -> FiniteLE:
    return _from_pairs("M3", 5, {(0, 1), (0, 2), (0, 3), (1, 4), (2, 4), (3, 4)})


def _n5() -> FiniteLE:
    return _from_pairs("N5", 5, {(0, 1), (1, 2), (2, 4), (0, 3), (3, 4)})


MAX_CATALOG_SIZE = 8


def catalog(max_size: int = 6) -> list[FiniteLE]:
    """The fixed model library: chains C2..C5, Boolean algebras 2^2 and 2^3,
    the diamond M3 and the pentagon N5, filtered by carrier size."""
    if max_size > MAX_CATALOG_SIZE:
        raise OracleError(f"catalog capped at size {MAX_CATALOG_SIZE}")
    lib = [_chain(2), _chain(3), _chain(4), _chain(5), _boolean(2), _boolean(3), _m3(), _n5()]
    return [m for m in lib if m.n <= max_size]


# --------------------------------------------------------------------------
# operation enumeration


def enumerate_ops(
    lat: FiniteLE,
    family: str,
    order_type: tuple[int, ...],
    budget: int = 4096,
    seed: int = 0,
) -> list[Table]:
    """All normal operations of the given family/order-type on lat, produced
    by assigning values on (join- or meet-) irreducible generator tuples,
    extending by joins (meets), and filtering by the pointwise normality
    equations.  Deterministically sampled when the assignment space exceeds
    the budget."""
    if family == "F":
        gens = [lat.jirr if e == 1 else lat.mirr for e in order_type]
    else:
        gens = [lat.mirr if e == 1 else lat.jirr for e in order_type]
    gen_tuples = list(itertools.product(*gens))
    total = lat.n ** len(gen_tuples)
    if total <= budget:
        assignments = itertools.product(range(lat.n), repeat=len(gen_tuples))
    else:
        rng = random.Random(seed)
        assignments = (
            tuple(rng.randrange(lat.n) for _ in gen_tuples) for _ in range(budget)
        )
    out: list[Table] = []
    seen: set[tuple[int, ...]] = set()
    for vals in assignments:
        val = dict(zip(gen_tuples, vals))
        table = _extend(lat, family, order_type, gen_tuples, val)
        key = tuple(table[a] for a in sorted(table))
        if key in seen:
            continue
        if _is_normal(lat, family, order_type, table):
            seen.add(key)
            out.append(table)
    return out


def _extend(lat, family, order_type, gen_tuples, val) -> Table:
    rng = range(lat.n)
    table: Table = {}
    for args in itertools.product(rng, repeat=len(order_type)):
        # F extends by joining values on generator tuples below the argument
        # (above, in flipped coordinates); G dually by meets
        chosen = [
            val[g]
            for g in gen_tuples
            if all(
                (lat.le(g[i], args[i]) if (e == 1) == (family == "F") else lat.le(args[i], g[i]))
                for i, e in enumerate(order_type)
            )
        ]
        table[args] = lat.joins(chosen) if family == "F" else lat.meets(chosen)
    return table


def _is_normal(lat: FiniteLE, family: str, order_type: tuple[int, ...], table: Table) -> bool:
    rng = range(lat.n)
    arity = len(order_type)
    for i, e in enumerate(order_type):
        others = itertools.product(rng, repeat=arity - 1)
        for rest in others:
            def at(c: int) -> int:
                args = rest[:i] + (c,) + rest[i:]
                return table[args]

            if family == "F":
                unit = lat.bot if e == 1 else lat.top
                if at(unit) != lat.bot:
                    return False
                for a in rng:
                    for b in rng:
                        comb = lat.join(a, b) if e == 1 else lat.meet(a, b)
                        if at(comb) != lat.join(at(a), at(b)):
                            return False
            else:
                unit = lat.top if e == 1 else lat.bot
                if at(unit) != lat.top:
                    return False
                for a in rng:
                    for b in rng:
                        comb = lat.meet(a, b) if e == 1 else lat.join(a, b)
                        if at(comb) != lat.meet(at(a), at(b)):
                            return False
    return True


# --------------------------------------------------------------------------
# evaluation


def eval_term(lat: FiniteLE, assignment: dict[str, int], t: Term, sig: Signature) -> int:
    if isinstance(t, (PropVar, Nominal, Conominal)):
        if t.name not in assignment:
            raise OracleError(f"unassigned variable {t.name}")
        return assignment[t.name]
    if isinstance(t, Top):
        return lat.top
    if isinstance(t, Bottom):
        return lat.bot
    if isinstance(t, Meet):
        return lat.meet(eval_term(lat, assignment, t.left, sig), eval_term(lat, assignment, t.right, sig))
    if isinstance(t, Join):
        return lat.join(eval_term(lat, assignment, t.left, sig), eval_term(lat, assignment, t.right, sig))
    assert isinstance(t, App)
    table = lat.op_table(t.conn, sig)
    args = tuple(eval_term(lat, assignment, a, sig) for a in t.args)
    return table[args]


def check_ineq(
    lat: FiniteLE, ineq: Inequality, sig: Signature, assignment: dict[str, int] | None = None
) -> bool:
    """Validity of a (prop-variable) inequality: universally over the carrier
    unless an explicit assignment is given."""
    if assignment is not None:
        l = eval_term(lat, assignment, ineq.lhs, sig)
        r = eval_term(lat, assignment, ineq.rhs, sig)
        return lat.le(l, r) != ineq.negated
    names = sorted(set(prop_vars(ineq.lhs)) | set(prop_vars(ineq.rhs)))
    for combo in itertools.product(range(lat.n), repeat=len(names)):
        if not check_ineq(lat, ineq, sig, dict(zip(names, combo))):
            return False
    return True


def check_meta(
    lat: FiniteLE, f: MetaFormula, sig: Signature, assignment: dict[str, int] | None = None
) -> bool:
    """Quantified meta-formulas: nominals range over join-irreducibles,
    conominals over meet-irreducibles, free proposition variables are
    quantified universally over the whole carrier."""
    if assignment is None:
        return _check_meta_closed(lat, f, sig)

    def ev(g: MetaFormula, env: dict[str, int]) -> bool:
        if isinstance(g, Atom):
            return check_ineq(lat, g.ineq, sig, env)
        if isinstance(g, MetaAnd):
            return all(ev(p, env) for p in g.parts)
        if isinstance(g, MetaOr):
            return any(ev(p, env) for p in g.parts)
        if isinstance(g, MetaNot):
            return not ev(g.body, env)
        if isinstance(g, MetaImplies):
            return (not ev(g.antecedent, env)) or ev(g.consequent, env)
        if isinstance(g, (ForallNom, ExistsNom, ForallConom, ExistsConom)):
            dom = lat.jirr if isinstance(g, (ForallNom, ExistsNom)) else lat.mirr
            results = (ev(g.body, {**env, g.var: d}) for d in dom)
            return all(results) if isinstance(g, (ForallNom, ForallConom)) else any(results)
        raise TypeError(f"not a meta formula: {g!r}")

    return ev(f, dict(assignment))


def _free_prop_vars(f: MetaFormula) -> set[str]:
    from .syntax import meta_atoms

    out: set[str] = set()
    for a in meta_atoms(f):
        out |= set(prop_vars(a.ineq.lhs)) | set(prop_vars(a.ineq.rhs))
    return out


def _check_meta_closed(lat: FiniteLE, f: MetaFormula, sig: Signature) -> bool:
    from .parsing import classify_var

    doms: list[tuple[int, ...]] = []
    names: list[str] = []
    for v in sorted(free_pure_vars(f)):
        names.append(v)
        doms.append(lat.jirr if isinstance(classify_var(v), Nominal) else lat.mirr)
    for v in sorted(_free_prop_vars(f)):
        names.append(v)
        doms.append(tuple(range(lat.n)))
    for combo in itertools.product(*doms):
        if not check_meta(lat, f, sig, dict(zip(names, combo))):
            return False
    return True


# --------------------------------------------------------------------------
# certification


@dataclass
class CertReport:
    ok: bool
    models: int = 0
    checks: int = 0
    skipped: list[str] = field(default_factory=list)
    countermodel: dict | None = None

    def json(self) -> dict:
        return {
            "ok": self.ok,
            "models": self.models,
            "checks": self.checks,
            "skipped": self.skipped,
            "countermodel": self.countermodel,
        }


def _validity(lat: FiniteLE, stage, sig: Signature) -> bool:
    if isinstance(stage, Inequality):
        return check_ineq(lat, stage, sig)
    return check_meta(lat, stage, sig)


def certify_equivalence(
    stage_a,
    stage_b,
    sig: Signature,
    max_size: int = 4,
    op_budget: int = 4096,
    combo_budget: int = 512,
    seed: int = 0,
) -> CertReport:
    """Check that two pipeline stages (inequalities or meta-formulas) are
    valid on exactly the same catalog models, over every (budgeted) choice of
    normal operations for the base connectives."""
    report = CertReport(ok=True)
    enumerable = [
        d for d in sig.base_connectives() if d.origin is None and d.name not in ("meet", "join")
    ]
    for lat in catalog(max_size):
        lists = []
        try:
            for d in enumerable:
                tabs = enumerate_ops(lat, d.family, d.order_type, op_budget, seed)
                lists.append(tabs)
        except OracleError as e:  # pragma: no cover - defensive
            report.skipped.append(f"{lat.name}: {e}")
            continue
        total = 1
        for l in lists:
            total *= max(len(l), 1)
        if total > combo_budget:
            rng = random.Random(seed)
            combos = (
                tuple(rng.choice(l) for l in lists) for _ in range(combo_budget)
            )
        else:
            combos = itertools.product(*lists)
        model_used = False
        for combo in combos:
            ops = {d.name: tab for d, tab in zip(enumerable, combo)}
            m = lat.with_ops(ops)
            try:
                va = _validity(m, stage_a, sig)
                vb = _validity(m, stage_b, sig)
            except OracleError as e:
                report.skipped.append(f"{lat.name}: {e}")
                model_used = False
                break
            model_used = True
            report.checks += 1
            if va != vb:
                report.ok = False
                report.countermodel = {
                    "model": lat.name,
                    "stage_a_valid": va,
                    "stage_b_valid": vb,
                    "ops": {k: sorted(v.items()) for k, v in ops.items()},
                }
                return report
        if model_used:
            report.models += 1
    return report


# --------------------------------------------------------------------------
# Kripke frames


@dataclass
class KripkeFrame:
    n: int
    rels: dict[str, frozenset[tuple[int, ...]]]

    def worlds(self):
        return range(self.n)


def eval_kripke(
    fr: KripkeFrame, assignment: dict[str, frozenset[int]], t: Term, sig: Signature
) -> frozenset[int]:
    full = frozenset(fr.worlds())
    if isinstance(t, PropVar):
        return assignment[t.name]
    if isinstance(t, Nominal):
        return assignment[t.name]
    if isinstance(t, Conominal):
        return assignment[t.name]
    if isinstance(t, Top):
        return full
    if isinstance(t, Bottom):
        return frozenset()
    if isinstance(t, Meet):
        return eval_kripke(fr, assignment, t.left, sig) & eval_kripke(fr, assignment, t.right, sig)
    if isinstance(t, Join):
        return eval_kripke(fr, assignment, t.left, sig) | eval_kripke(fr, assignment, t.right, sig)
    assert isinstance(t, App)
    d = sig.decl(t.conn)
    vals = [eval_kripke(fr, assignment, a, sig) for a in t.args]
    rel = fr.rels.get(t.conn)
    if rel is None:
        raise OracleError(f"frame has no relation for {t.conn}")
    if d.family == "F":
        sets = [v if e == 1 else (full - v) for v, e in zip(vals, d.order_type)]
        return frozenset(
            x for x in fr.worlds()
            if any(tup[0] == x and all(tup[i + 1] in sets[i] for i in range(d.arity)) for tup in rel)
        )
    # g: complement of R^{-1} applied to epsilon-flipped coordinates
    sets = [(full - v) if e == 1 else v for v, e in zip(vals, d.order_type)]
    bad = frozenset(
        x for x in fr.worlds()
        if any(tup[0] == x and all(tup[i + 1] in sets[i] for i in range(d.arity)) for tup in rel)
    )
    return full - bad


def complex_check(fr, ineq: Inequality, sig: Signature, var_budget: int = 2**18) -> bool:
    """Validity in the complex algebra: over all valuations of the proposition
    variables (powerset algebra for Kripke frames, concept lattice for
    polarity frames)."""
    names = sorted(set(prop_vars(ineq.lhs)) | set(prop_vars(ineq.rhs)))
    if isinstance(fr, KripkeFrame):
        if (2 ** fr.n) ** len(names) > var_budget:
            raise OracleError("valuation space over budget")
        subsets = [frozenset(s) for s in _powerset(range(fr.n))]
        for combo in itertools.product(subsets, repeat=len(names)):
            env = dict(zip(names, combo))
            l = eval_kripke(fr, env, ineq.lhs, sig)
            r = eval_kripke(fr, env, ineq.rhs, sig)
            if (l <= r) == ineq.negated:
                return False
        return True
    assert isinstance(fr, PolarityFrame)
    concepts = fr.concepts()
    if len(concepts) ** len(names) > var_budget:
        raise OracleError("valuation space over budget")
    for combo in itertools.product(concepts, repeat=len(names)):
        env = dict(zip(names, combo))
        l = eval_polarity(fr, env, ineq.lhs, sig)
        r = eval_polarity(fr, env, ineq.rhs, sig)
        if (l[0] <= r[0]) == ineq.negated:
            return False
    return True


def _powerset(xs):
    xs = list(xs)
    for mask in range(1 << len(xs)):
        yield {x for i, x in enumerate(xs) if mask >> i & 1}


# --------------------------------------------------------------------------
# polarity frames


@dataclass
class PolarityFrame:
    nA: int
    nX: int
    I: frozenset[tuple[int, int]]
    rels: dict[str, frozenset[tuple[int, ...]]]

    def up(self, B) -> frozenset[int]:
        return frozenset(x for x in range(self.nX) if all((a, x) in self.I for a in B))

    def down(self, Y) -> frozenset[int]:
        return frozenset(a for a in range(self.nA) if all((a, x) in self.I for x in Y))

    def concepts(self) -> list[tuple[frozenset[int], frozenset[int]]]:
        out = []
        for B in _powerset(range(self.nA)):
            B = frozenset(B)
            if self.down(self.up(B)) == B:
                out.append((B, self.up(B)))
        return out

    def object_concept(self, a: int):
        B = self.down(self.up({a}))
        return (B, self.up(B))

    def feature_concept(self, x: int):
        Y = self.up(self.down({x}))
        return (self.down(Y), Y)


def eval_polarity(fr: PolarityFrame, assignment, t: Term, sig: Signature):
    """Concept (extent, intent) of a term under a concept-valued assignment."""
    if isinstance(t, (PropVar, Nominal, Conominal)):
        return assignment[t.name]
    if isinstance(t, Top):
        A = frozenset(range(fr.nA))
        return (A, fr.up(A))
    if isinstance(t, Bottom):
        X = frozenset(range(fr.nX))
        return (fr.down(X), X)
    if isinstance(t, Meet):
        l = eval_polarity(fr, assignment, t.left, sig)
        r = eval_polarity(fr, assignment, t.right, sig)
        E = l[0] & r[0]
        return (E, fr.up(E))
    if isinstance(t, Join):
        l = eval_polarity(fr, assignment, t.left, sig)
        r = eval_polarity(fr, assignment, t.right, sig)
        Y = l[1] & r[1]
        return (fr.down(Y), Y)
    assert isinstance(t, App)
    d = sig.decl(t.conn)
    vals = [eval_polarity(fr, assignment, a, sig) for a in t.args]
    rel = fr.rels.get(t.conn)
    if rel is None:
        raise OracleError(f"frame has no relation for {t.conn}")
    if d.family == "F":
        coords = [v[0] if e == 1 else v[1] for v, e in zip(vals, d.order_type)]
        intent = frozenset(
            x
            for x in range(fr.nX)
            if all((x,) + tup in rel for tup in itertools.product(*coords))
        )
        return (fr.down(intent), intent)
    coords = [v[1] if e == 1 else v[0] for v, e in zip(vals, d.order_type)]
    extent = frozenset(
        a
        for a in range(fr.nA)
        if all((a,) + tup in rel for tup in itertools.product(*coords))
    )
    return (extent, fr.up(extent))


def i_compatible(fr: PolarityFrame, sig: Signature) -> bool:
    """All frame relations pass the Galois-stability requirements."""
    for name, rel in fr.rels.items():
        d = sig.decl(name)
        sorts = _rel_sorts(d)
        doms = [range(fr.nA) if s == OBJ else range(fr.nX) for s in sorts[1:]]
        # zeroth sections
        for tup in itertools.product(*doms):
            sec = frozenset(h for h in (range(fr.nX) if sorts[0] == FEAT else range(fr.nA)) if (h,) + tup in rel)
            if not _stable(fr, sec, sorts[0]):
                return False
        # i-th sections
        for i in range(1, len(sorts)):
            rest = [range(fr.nA) if s == OBJ else range(fr.nX) for j, s in enumerate(sorts) if j != i]
            for tup in itertools.product(*rest):
                sec = frozenset(
                    c
                    for c in (range(fr.nA) if sorts[i] == OBJ else range(fr.nX))
                    if tuple(tup[:i]) + (c,) + tuple(tup[i:]) in rel
                )
                if not _stable(fr, sec, sorts[i]):
                    return False
    return True


def _stable(fr: PolarityFrame, s: frozenset[int], sort: str) -> bool:
    if sort == OBJ:
        return fr.down(fr.up(s)) == s
    return fr.up(fr.down(s)) == s


def _rel_sorts(d) -> list[str]:
    """Sorts of R_h's coordinates: f-relations live in X x A^eps, g-relations
    in A x X^eps."""
    if d.family == "F":
        return [FEAT] + [OBJ if e == 1 else FEAT for e in d.order_type]
    return [OBJ] + [FEAT if e == 1 else OBJ for e in d.order_type]


# --------------------------------------------------------------------------
# first-order frame conditions


def check_frame(fr, cond: FrameCondition) -> bool:
    if isinstance(fr, KripkeFrame) and cond.setting != "kripke":
        raise OracleError("frame condition is not in the Kripke language")
    if isinstance(fr, PolarityFrame) and cond.setting != "polarity":
        raise OracleError("frame condition is not in the polarity language")

    def dom(sort: str):
        if isinstance(fr, KripkeFrame):
            return range(fr.n)
        return range(fr.nA) if sort == OBJ else range(fr.nX)

    def atom(rel: str, args: tuple[int, ...]) -> bool:
        if isinstance(fr, PolarityFrame) and rel == "I":
            return tuple(args) in fr.I
        table = fr.rels.get(rel)
        if table is None:
            raise OracleError(f"frame has no relation {rel}")
        return tuple(args) in table

    def ev(g: FOFormula, env: dict[str, int]) -> bool:
        if isinstance(g, FOAtom):
            return atom(g.rel, tuple(env[a] for a in g.args))
        if isinstance(g, FOEq):
            return env[g.left] == env[g.right]
        if isinstance(g, FONot):
            return not ev(g.body, env)
        if isinstance(g, FOAnd):
            return all(ev(p, env) for p in g.parts)
        if isinstance(g, FOOr):
            return any(ev(p, env) for p in g.parts)
        if isinstance(g, FOImplies):
            return (not ev(g.antecedent, env)) or ev(g.consequent, env)
        if isinstance(g, FOForall):
            return all(ev(g.body, {**env, g.var: d}) for d in dom(g.sort))
        if isinstance(g, FOExists):
            return any(ev(g.body, {**env, g.var: d}) for d in dom(g.sort))
        raise TypeError(f"not a first-order formula: {g!r}")

    return ev(cond.closed(), {})
