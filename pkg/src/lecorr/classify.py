"""Inductive classification of lattice-expansion inequalities.

The classifier builds the signed trees +lhs / -rhs, checks every critical
branch for the refined good shape (definite PIA, then soft PIA, then definite
skeleton, read from the leaf), and checks the SRR condition: every SRR node on
a critical branch dominates exactly one critical leaf, and every other
variable in its scope lies strictly below that leaf's variable in the
dependency order.

It also performs the skeleton/PIA decomposition used by the reduction
pipeline: each side is split at the boundary of its maximal definite-skeleton
prefix, soft PIA layers at the boundary are split into their members, and
members are sorted into alpha/beta (contain the critical leaf) versus
gamma/delta (no critical leaf) parts.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .signature import Signature
from .syntax import (
    App,
    Conominal,
    Inequality,
    Join,
    Meet,
    Nominal,
    PropVar,
    Term,
    replace_at,
    substitute,
)
from .trees import (
    CONSTANT,
    DEFINITE_SKELETON,
    SOFT_PIA,
    SignedNode,
    branch_profile,
    build_signed_tree,
    critical_leaves,
    is_critical,
    path_to_root,
    subtree_prop_vars,
)


class NotInductiveError(ValueError):
    """The inequality is outside the requested fragment."""


class DependencyOrder:
    """A strict partial order on proposition variables, closed transitively."""

    def __init__(self, pairs: list[tuple[str, str]] | None = None):
        self._below: dict[str, set[str]] = {}
        for lo, hi in pairs or []:
            self.add(lo, hi)

    def add(self, lo: str, hi: str) -> None:
        self._below.setdefault(hi, set()).add(lo)
        self._close()

    def _close(self) -> None:
        changed = True
        while changed:
            changed = False
            for hi, los in list(self._below.items()):
                extra = set()
                for lo in los:
                    extra |= self._below.get(lo, set())
                if not extra <= los:
                    self._below[hi] = los | extra
                    changed = True

    def less(self, lo: str, hi: str) -> bool:
        return lo in self._below.get(hi, set())

    def is_strict(self) -> bool:
        return all(hi not in los for hi, los in self._below.items())

    def pairs(self) -> list[tuple[str, str]]:
        return sorted((lo, hi) for hi, los in self._below.items() for lo in los)

    def topological(self, names: list[str]) -> list[str]:
        """names, reordered so that Omega-smaller variables come first; ties
        keep the given order."""
        out: list[str] = []
        remaining = list(names)
        while remaining:
            for v in remaining:
                if not any(self.less(u, v) for u in remaining if u != v):
                    out.append(v)
                    remaining.remove(v)
                    break
            else:  # cycle; surface deterministically
                out.extend(remaining)
                break
        return out

    def __repr__(self) -> str:
        inner = ", ".join(f"{a} < {b}" for a, b in self.pairs())
        return f"DependencyOrder({inner})"


def signed_trees(ineq: Inequality, sig: Signature) -> tuple[SignedNode, SignedNode]:
    return (
        build_signed_tree(ineq.lhs, 1, sig),
        build_signed_tree(ineq.rhs, -1, sig),
    )


def _srr_constraints(
    trees: tuple[SignedNode, SignedNode], eps: dict[str, int]
) -> list[tuple[str, str]] | None:
    """Collect q < p constraints from SRR nodes on critical branches; None when
    some SRR node dominates more than one critical leaf."""
    pairs: list[tuple[str, str]] = []
    for tree in trees:
        crits = critical_leaves(tree, eps)
        crit_paths = {l.path for l in crits}
        seen: set[tuple[int, ...]] = set()
        for leaf in crits:
            for node in path_to_root(tree, leaf.path):
                if not node.srr or node.path in seen:
                    continue
                seen.add(node.path)
                dominated = [l for l in node.leaves() if l.path in crit_paths]
                if len(dominated) != 1:
                    return None
                p = dominated[0].term.name
                for q in subtree_prop_vars(node):
                    if q != p and (q, p) not in pairs:
                        pairs.append((q, p))
    return pairs


@dataclass
class ClassificationReport:
    ineq: Inequality
    eps: dict[str, int] | None
    omega: DependencyOrder | None
    inductive: bool
    sahlqvist: bool
    vss: bool
    scattered: bool
    uniform_vars: dict[str, int]
    reason: str = ""

    def json(self) -> dict:
        return {
            "inductive": self.inductive,
            "sahlqvist": self.sahlqvist,
            "vss": self.vss,
            "scattered": self.scattered,
            "epsilon": None
            if self.eps is None
            else {v: ("1" if s == 1 else "d") for v, s in self.eps.items()},
            "omega": None if self.omega is None else [list(p) for p in self.omega.pairs()],
            "uniform": {v: ("+" if s == 1 else "-") for v, s in self.uniform_vars.items()},
            "reason": self.reason,
        }


def check_refined_inductive(
    ineq: Inequality,
    eps: dict[str, int],
    omega: DependencyOrder,
    sig: Signature,
) -> tuple[bool, str]:
    trees = signed_trees(ineq, sig)
    for tree in trees:
        for leaf in critical_leaves(tree, eps):
            if branch_profile(tree, leaf.path) is None:
                side = "left" if tree is trees[0] else "right"
                return False, f"critical branch to {leaf.term.name} on the {side} side is not refined good"
    pairs = _srr_constraints(trees, eps)
    if pairs is None:
        return False, "an SRR node on a critical branch dominates more than one critical leaf"
    for q, p in pairs:
        if not omega.less(q, p):
            return False, f"SRR scope requires {q} < {p} in the dependency order"
    if not omega.is_strict():
        return False, "dependency order is not strict"
    return True, ""


def is_refined_inductive(
    ineq: Inequality, eps: dict[str, int], omega: DependencyOrder, sig: Signature
) -> bool:
    return check_refined_inductive(ineq, eps, omega, sig)[0]


def _has_critical_srr(trees: tuple[SignedNode, SignedNode], eps: dict[str, int]) -> bool:
    for tree in trees:
        for leaf in critical_leaves(tree, eps):
            if any(n.srr for n in path_to_root(tree, leaf.path)):
                return True
    return False


VAR_CAP = 16


def find_witness(
    ineq: Inequality, sig: Signature, cap: int = VAR_CAP
) -> tuple[dict[str, int], DependencyOrder] | None:
    """First order-type (1 before d, variables in first-occurrence order) for
    which the inequality is refined inductive, together with the dependency
    order generated by its SRR constraints."""
    names = _var_order(ineq)
    if len(names) > cap:
        raise NotInductiveError(f"witness search capped at {cap} variables, got {len(names)}")
    for combo in itertools.product((1, -1), repeat=len(names)):
        eps = dict(zip(names, combo))
        trees = signed_trees(ineq, sig)
        if any(
            branch_profile(tree, leaf.path) is None
            for tree in trees
            for leaf in critical_leaves(tree, eps)
        ):
            continue
        pairs = _srr_constraints(trees, eps)
        if pairs is None:
            continue
        omega = DependencyOrder(pairs)
        if not omega.is_strict():
            continue
        return eps, omega
    return None


def _var_order(ineq: Inequality) -> list[str]:
    names: list[str] = []
    for t in (ineq.lhs, ineq.rhs):
        for v in _term_vars(t):
            if v not in names:
                names.append(v)
    return names


def _term_vars(t: Term) -> list[str]:
    out: list[str] = []

    def walk(s: Term) -> None:
        if isinstance(s, PropVar):
            if s.name not in out:
                out.append(s.name)
        elif isinstance(s, (Meet, Join)):
            walk(s.left)
            walk(s.right)
        elif isinstance(s, App):
            for a in s.args:
                walk(a)

    walk(t)
    return out


def _polarities(ineq: Inequality, sig: Signature) -> dict[str, set[int]]:
    occ: dict[str, set[int]] = {}
    for tree in signed_trees(ineq, sig):
        for leaf in tree.leaves():
            if isinstance(leaf.term, PropVar):
                occ.setdefault(leaf.term.name, set()).add(leaf.sign)
    return occ


def uniform_variables(ineq: Inequality, sig: Signature) -> dict[str, int]:
    """Variables occurring in one polarity only, mapped to that polarity."""
    return {v: next(iter(s)) for v, s in _polarities(ineq, sig).items() if len(s) == 1}


def is_scattered(ineq: Inequality, sig: Signature) -> bool:
    """At most one occurrence of each variable in each polarity."""
    counts: dict[tuple[str, int], int] = {}
    for tree in signed_trees(ineq, sig):
        for leaf in tree.leaves():
            if isinstance(leaf.term, PropVar):
                key = (leaf.term.name, leaf.sign)
                counts[key] = counts.get(key, 0) + 1
    return all(n <= 1 for n in counts.values())


def classify(ineq: Inequality, sig: Signature) -> ClassificationReport:
    uniform = uniform_variables(ineq, sig)
    scattered = is_scattered(ineq, sig)
    witness = find_witness(ineq, sig)
    if witness is None:
        return ClassificationReport(
            ineq, None, None, False, False, False, scattered, uniform,
            reason="no order-type makes every critical branch refined good with a strict dependency order",
        )
    eps, omega = witness
    sahlqvist = _sahlqvist_witness(ineq, sig) is not None
    vss = _vss_witness(ineq, sig) is not None
    return ClassificationReport(ineq, eps, omega, True, sahlqvist, vss, scattered, uniform)


def _sahlqvist_witness(ineq: Inequality, sig: Signature) -> dict[str, int] | None:
    names = _var_order(ineq)
    for combo in itertools.product((1, -1), repeat=len(names)):
        eps = dict(zip(names, combo))
        trees = signed_trees(ineq, sig)
        if any(
            branch_profile(tree, leaf.path) is None
            for tree in trees
            for leaf in critical_leaves(tree, eps)
        ):
            continue
        if _has_critical_srr(trees, eps):
            continue
        return eps
    return None


def _vss_witness(ineq: Inequality, sig: Signature) -> dict[str, int] | None:
    for combo_eps in _sahlqvist_witnesses(ineq, sig):
        try:
            d = decompose(ineq, combo_eps, DependencyOrder(), sig)
        except NotInductiveError:
            continue
        if all(
            isinstance(m.term, PropVar)
            for cut in d.cuts
            for m in cut.members
            if m.kind in ("alpha", "beta") or len(cut.members) > 1
        ):
            return combo_eps
    return None


def _sahlqvist_witnesses(ineq: Inequality, sig: Signature):
    names = _var_order(ineq)
    for combo in itertools.product((1, -1), repeat=len(names)):
        eps = dict(zip(names, combo))
        trees = signed_trees(ineq, sig)
        if any(
            branch_profile(tree, leaf.path) is None
            for tree in trees
            for leaf in critical_leaves(tree, eps)
        ):
            continue
        if _has_critical_srr(trees, eps):
            continue
        yield eps


def is_sahlqvist(ineq: Inequality, sig: Signature) -> bool:
    return _sahlqvist_witness(ineq, sig) is not None


def is_vss(ineq: Inequality, sig: Signature) -> bool:
    return _vss_witness(ineq, sig) is not None


# --------------------------------------------------------------------------
# refine: uniform-variable elimination and normality-driven splitting


REFINE_BUDGET = 10**5


def refine(ineq: Inequality, sig: Signature, budget: int = REFINE_BUDGET) -> list[Inequality]:
    """Equivalent family of inequalities with uniform variables replaced by
    lattice constants and joins (meets) distributed out of the left (right)
    side through coordinatewise normal connectives."""
    from .syntax import BOT, TOP

    uniform = uniform_variables(ineq, sig)
    repl = {v: (TOP if s == 1 else BOT) for v, s in uniform.items()}
    lhs = substitute(ineq.lhs, repl)
    rhs = substitute(ineq.rhs, repl)
    lefts = _split(lhs, 1, sig)
    rights = _split(rhs, -1, sig)
    if len(lefts) * len(rights) > budget:
        raise NotInductiveError(
            f"refinement produces {len(lefts) * len(rights)} inequalities, over the budget of {budget}"
        )
    return [Inequality(l, r) for l in lefts for r in rights]


def _split(t: Term, sign: int, sig: Signature) -> list[Term]:
    """Disjuncts (sign +) or conjuncts (sign -) of t modulo coordinatewise
    normality of skeleton connectives."""
    if isinstance(t, Join):
        if sign == 1:
            return _split(t.left, 1, sig) + _split(t.right, 1, sig)
        return [Join(a, b) for a in _split(t.left, -1, sig) for b in _split(t.right, -1, sig)] if sig.distributive else [t]
    if isinstance(t, Meet):
        if sign == -1:
            return _split(t.left, -1, sig) + _split(t.right, -1, sig)
        return [Meet(a, b) for a in _split(t.left, 1, sig) for b in _split(t.right, 1, sig)] if sig.distributive else [t]
    if isinstance(t, App):
        d = sig.decl(t.conn)
        if (sign, d.family) in ((1, "F"), (-1, "G")):
            parts_per_coord = [
                _split(a, sign * d.order_type[i], sig) for i, a in enumerate(t.args)
            ]
            return [App(t.conn, combo) for combo in itertools.product(*parts_per_coord)]
    return [t]


# --------------------------------------------------------------------------
# skeleton/PIA decomposition


@dataclass
class Member:
    kind: str  # alpha | beta | gamma | delta
    term: Term
    crit_var: str | None = None
    crit_path: tuple[int, ...] = ()  # position of the critical leaf inside term


@dataclass
class Cut:
    side: str  # "L" | "R"
    path: tuple[int, ...]
    sign: int  # +1: nominal hole, -1: conominal hole
    hole: Term
    subtree: Term
    members: list[Member] = field(default_factory=list)


@dataclass
class Decomposition:
    ineq: Inequality
    eps: dict[str, int]
    omega: DependencyOrder
    skeleton_lhs: Term
    skeleton_rhs: Term
    cuts: list[Cut]

    def consequent(self) -> Inequality:
        return Inequality(self.skeleton_lhs, self.skeleton_rhs)

    def holes(self) -> list[Term]:
        return [c.hole for c in self.cuts]

    def resubstituted(self) -> Inequality:
        lhs, rhs = self.skeleton_lhs, self.skeleton_rhs
        for cut in self.cuts:
            if cut.side == "L":
                lhs = replace_at(lhs, cut.path, cut.subtree)
            else:
                rhs = replace_at(rhs, cut.path, cut.subtree)
        return Inequality(lhs, rhs)


def _soft_members(node: SignedNode, splittable: str) -> list[SignedNode]:
    """Members of the maximal soft layer of the given class at this node."""
    if node.node_class == splittable:
        out: list[SignedNode] = []
        for c in node.children:
            out.extend(_soft_members(c, splittable))
        return out
    return [node]


def decompose(
    ineq: Inequality,
    eps: dict[str, int],
    omega: DependencyOrder,
    sig: Signature,
) -> Decomposition:
    ok, why = check_refined_inductive(ineq, eps, omega, sig)
    if not ok:
        raise NotInductiveError(why)
    ltree, rtree = signed_trees(ineq, sig)
    counters = {"j": 0, "m": 0}

    def fresh(sign: int) -> Term:
        if sign == 1:
            counters["j"] += 1
            return Nominal(f"j{counters['j']}")
        counters["m"] += 1
        return Conominal(f"m{counters['m']}")

    def cut_points(node: SignedNode) -> list[SignedNode]:
        if node.node_class in (DEFINITE_SKELETON, CONSTANT):
            out: list[SignedNode] = []
            for c in node.children:
                out.extend(cut_points(c))
            return out
        return [node]

    def make_member(m: SignedNode, cut_sign: int) -> Member:
        crits = critical_leaves(m, eps)
        if len(crits) > 1:
            raise NotInductiveError(
                f"a PIA part contains {len(crits)} critical leaves; expected at most one"
            )
        if crits:
            kind = "alpha" if cut_sign == 1 else "beta"
            rel = crits[0].path[len(m.path):]
            return Member(kind, m.term, crits[0].term.name, rel)
        return Member("gamma" if cut_sign == 1 else "delta", m.term)

    cuts: list[Cut] = []

    def process(tree: SignedNode, side: str) -> Term:
        skeleton = tree.term
        for node in cut_points(tree):
            hole = fresh(node.sign)
            members = [make_member(m, node.sign) for m in _soft_members(node, SOFT_PIA)]
            cuts.append(Cut(side, node.path, node.sign, hole, node.term, members))
            skeleton = replace_at(skeleton, node.path, hole)
        return skeleton

    skeleton_lhs = process(ltree, "L")
    skeleton_rhs = process(rtree, "R")
    return Decomposition(ineq, dict(eps), omega, skeleton_lhs, skeleton_rhs, cuts)
