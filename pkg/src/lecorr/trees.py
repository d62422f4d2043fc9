"""Signed generation trees with node classification.

Sign propagation: meet/join propagate the sign to both children; a declared
connective propagates the sign through coordinates of order-type 1 and flips
it through coordinates of order-type d.

Node classes over {sign} x {family}:

  +f, -g   definite skeleton
  +v, -^   soft skeleton        (lattice join under +, meet under -)
  -f, +g   definite PIA
  +^, -v   soft PIA             (lattice meet under +, join under -)

Lattice meet/join declared as F/G members classify by their declared family
instead of the soft classes. SRR (syntactically right residual) nodes are the
non-unary +g / -f nodes; they are the source of dependency-order constraints.
"""

from __future__ import annotations

from dataclasses import dataclass

from .signature import Signature
from .syntax import (
    App,
    Bottom,
    Conominal,
    Join,
    Meet,
    Nominal,
    PropVar,
    Term,
    Top,
)

DEFINITE_SKELETON = "definite-skeleton"
SOFT_SKELETON = "soft-skeleton"
DEFINITE_PIA = "definite-PIA"
SOFT_PIA = "soft-PIA"
LEAF = "leaf"
CONSTANT = "lattice-constant"

SKELETON_CLASSES = (DEFINITE_SKELETON, SOFT_SKELETON)
PIA_CLASSES = (DEFINITE_PIA, SOFT_PIA)


@dataclass(frozen=True)
class SignedNode:
    term: Term
    sign: int  # +1 | -1
    node_class: str
    srr: bool
    path: tuple[int, ...]
    children: tuple["SignedNode", ...]

    def leaves(self) -> list["SignedNode"]:
        if not self.children:
            return [self]
        out: list[SignedNode] = []
        for c in self.children:
            out.extend(c.leaves())
        return out

    def nodes(self) -> list["SignedNode"]:
        out = [self]
        for c in self.children:
            out.extend(c.nodes())
        return out

    def at(self, path: tuple[int, ...]) -> "SignedNode":
        node = self
        for i in path[len(self.path):]:
            node = node.children[i]
        return node


def _classify(sign: int, family: str) -> str:
    if (sign, family) in ((1, "F"), (-1, "G")):
        return DEFINITE_SKELETON
    return DEFINITE_PIA


def build_signed_tree(t: Term, sign: int, sig: Signature, path: tuple[int, ...] = ()) -> SignedNode:
    if isinstance(t, (PropVar, Nominal, Conominal)):
        return SignedNode(t, sign, LEAF, False, path, ())
    if isinstance(t, (Top, Bottom)):
        return SignedNode(t, sign, CONSTANT, False, path, ())
    if isinstance(t, (Meet, Join)):
        which = "meet" if isinstance(t, Meet) else "join"
        if sig.lattice_member(which):
            family = sig.lattice_family[which]
            cls = _classify(sign, family)
            srr = (sign, family) in ((1, "G"), (-1, "F"))
        else:
            if isinstance(t, Meet):
                cls = SOFT_PIA if sign == 1 else SOFT_SKELETON
            else:
                cls = SOFT_SKELETON if sign == 1 else SOFT_PIA
            srr = False
        kids = tuple(
            build_signed_tree(c, sign, sig, path + (i,))
            for i, c in enumerate((t.left, t.right))
        )
        return SignedNode(t, sign, cls, srr, path, kids)
    assert isinstance(t, App)
    d = sig.decl(t.conn)
    cls = _classify(sign, d.family)
    srr = d.arity > 1 and (sign, d.family) in ((1, "G"), (-1, "F"))
    kids = tuple(
        build_signed_tree(a, sign * d.order_type[i], sig, path + (i,))
        for i, a in enumerate(t.args)
    )
    return SignedNode(t, sign, cls, srr, path, kids)


def is_critical(leaf: SignedNode, eps: dict[str, int]) -> bool:
    """An eps-critical leaf: +p with eps(p)=1 or -p with eps(p)=d."""
    if not isinstance(leaf.term, PropVar):
        return False
    return leaf.sign == eps[leaf.term.name]


def critical_leaves(tree: SignedNode, eps: dict[str, int]) -> list[SignedNode]:
    return [l for l in tree.leaves() if is_critical(l, eps)]


def path_to_root(tree: SignedNode, leaf_path: tuple[int, ...]) -> list[SignedNode]:
    """Nodes from the leaf (exclusive) up to the root (inclusive)."""
    nodes = []
    node = tree
    for i in leaf_path:
        nodes.append(node)
        node = node.children[i]
    nodes.reverse()
    return nodes


def branch_profile(
    tree: SignedNode, leaf_path: tuple[int, ...]
) -> tuple[list[SignedNode], list[SignedNode], list[SignedNode]] | None:
    """Split the leaf-to-root path into P1 (definite PIA), P2 (soft PIA),
    P3 (definite skeleton), scanning from the leaf; None when the path does
    not decompose this way (the branch is not refined good)."""
    p1: list[SignedNode] = []
    p2: list[SignedNode] = []
    p3: list[SignedNode] = []
    stage = 1
    for node in path_to_root(tree, leaf_path):
        if node.node_class == DEFINITE_PIA and stage == 1:
            p1.append(node)
        elif node.node_class == SOFT_PIA and stage <= 2:
            p2.append(node)
            stage = 2
        elif node.node_class == DEFINITE_SKELETON:
            p3.append(node)
            stage = 3
        else:
            return None
    return p1, p2, p3


def is_refined_good(tree: SignedNode, leaf_path: tuple[int, ...]) -> bool:
    return branch_profile(tree, leaf_path) is not None


def subtree_prop_vars(node: SignedNode) -> list[str]:
    out: list[str] = []
    for l in node.leaves():
        if isinstance(l.term, PropVar) and l.term.name not in out:
            out.append(l.term.name)
    return out


def dump_tree(node: SignedNode, sig: Signature, indent: int = 0) -> str:
    from .printing import print_term

    sign = "+" if node.sign == 1 else "-"
    head = sig.term_head(node.term)
    label = head if head is not None else print_term(node.term, sig)
    srr = " srr" if node.srr else ""
    lines = [f"{'  ' * indent}{sign}{label} [{node.node_class}{srr}]"]
    for c in node.children:
        lines.append(dump_tree(c, sig, indent + 1))
    return "\n".join(lines)


def tree_json(node: SignedNode, sig: Signature) -> dict:
    from .printing import print_term

    return {
        "term": print_term(node.term, sig),
        "sign": "+" if node.sign == 1 else "-",
        "class": node.node_class,
        "srr": node.srr,
        "children": [tree_json(c, sig) for c in node.children],
    }
