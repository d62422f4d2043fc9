"""LE signatures: connective declarations, residual expansion, adjunction data.

A signature declares two families of normal connectives: F-members preserve
joins coordinatewise per their order-type, G-members preserve meets. The
residual-expanded signature adds, for each base connective and coordinate,
the residual in that coordinate, with family and order-type derived from the
residuation laws:

  for h of order-type e, coordinate i:
    e(i) = 1: the residual lives in the opposite family; its order-type is
              1 at i and flipped elsewhere;
    e(i) = d: the residual stays in the same family; its order-type is d at
              i and unchanged elsewhere.

Lattice meet/join may be declared as F/G members (latt lines), and a declared
connective may be registered as the residual of another (or of a lattice
connective, the Heyting-style linked case) via residual-of.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .syntax import App, Meet, Join, Term


class SignatureError(ValueError):
    pass


@dataclass(frozen=True)
class ConnectiveDecl:
    name: str
    family: str  # "F" | "G"
    arity: int
    order_type: tuple[int, ...]  # entries 1 (monotone) or -1 (antitone)
    origin: tuple[str, int] | None = None  # (parent name, 1-based coordinate)
    base: bool = True
    infix: str | None = None
    prec: int = 0

    def __post_init__(self) -> None:
        if self.family not in ("F", "G"):
            raise SignatureError(f"{self.name}: family must be F or G")
        if len(self.order_type) != self.arity:
            raise SignatureError(
                f"{self.name}: order-type length {len(self.order_type)} != arity {self.arity}"
            )
        if any(e not in (1, -1) for e in self.order_type):
            raise SignatureError(f"{self.name}: order-type entries must be 1 or d")


LATTICE_NAMES = ("meet", "join", "top", "bottom", "bot")

LATTICE_OT = {"meet": (1, 1), "join": (1, 1)}
# For residuation purposes meet acts as an operator (left adjoint in each
# coordinate) and join as a dual operator, whatever family they are declared in.
LATTICE_DEFAULT_FAMILY = {"meet": "F", "join": "G"}


def residual_profile(family: str, ot: tuple[int, ...], i: int) -> tuple[str, tuple[int, ...]]:
    """Family and order-type of the i-th residual (1-based) of a connective."""
    e = ot[i - 1]
    if e == 1:
        fam = "G" if family == "F" else "F"
        new_ot = tuple(1 if k == i - 1 else -v for k, v in enumerate(ot))
    else:
        fam = family
        new_ot = tuple(-1 if k == i - 1 else v for k, v in enumerate(ot))
    return fam, new_ot


@dataclass
class Signature:
    name: str
    connectives: dict[str, ConnectiveDecl] = field(default_factory=dict)
    distributive: bool = False
    # family assignment for lattice meet/join when declared as F/G members
    lattice_family: dict[str, str] = field(default_factory=dict)
    expanded: bool = False

    # -- declaration ------------------------------------------------------

    def declare(self, decl: ConnectiveDecl) -> None:
        if decl.name in self.connectives:
            raise SignatureError(f"duplicate connective {decl.name}")
        if decl.name in LATTICE_NAMES:
            raise SignatureError(f"{decl.name} is a reserved lattice symbol")
        self.connectives[decl.name] = decl

    def declare_lattice(self, which: str, family: str) -> None:
        if which not in ("meet", "join"):
            raise SignatureError(f"latt expects meet or join, got {which}")
        if family not in ("F", "G"):
            raise SignatureError("latt family must be F or G")
        self.lattice_family[which] = family

    # -- lookups ----------------------------------------------------------

    def __contains__(self, name: str) -> bool:
        return name in self.connectives

    def decl(self, name: str) -> ConnectiveDecl:
        if name in ("meet", "join"):
            fam = self.lattice_family.get(name, LATTICE_DEFAULT_FAMILY[name])
            return ConnectiveDecl(name=name, family=fam, arity=2, order_type=(1, 1))
        try:
            return self.connectives[name]
        except KeyError:
            raise SignatureError(f"unknown connective {name}") from None

    def family(self, name: str) -> str:
        return self.decl(name).family

    def order_type(self, name: str) -> tuple[int, ...]:
        return self.decl(name).order_type

    def arity(self, name: str) -> int:
        return self.decl(name).arity

    def is_base(self, name: str) -> bool:
        """True when the connective belongs to the base language (F or G as
        declared, or a lattice connective)."""
        if name in ("meet", "join"):
            return True
        return self.decl(name).base

    def lattice_member(self, which: str) -> bool:
        """True when lattice meet/join was declared an F/G member."""
        return which in self.lattice_family

    def base_connectives(self) -> list[ConnectiveDecl]:
        return [d for d in self.connectives.values() if d.base]

    def infix_decls(self) -> list[ConnectiveDecl]:
        return [d for d in self.connectives.values() if d.infix]

    # -- residual expansion -------------------------------------------------

    def expand_residuals(self) -> "Signature":
        """Return the fully residuated signature L*: every base connective
        (including declared lattice members) gains a residual in every
        coordinate, unless one was already declared via residual-of.
        Idempotent."""
        if self.expanded:
            return self
        sig = Signature(
            name=self.name,
            connectives=dict(self.connectives),
            distributive=self.distributive,
            lattice_family=dict(self.lattice_family),
            expanded=True,
        )
        declared_res: dict[tuple[str, int], str] = {}
        for d in self.connectives.values():
            if d.origin is not None:
                declared_res[d.origin] = d.name
                # residuation is involutive in the same coordinate, so the
                # parent already has a residual there: the child's parent
                declared_res[(d.name, d.origin[1])] = d.origin[0]

        parents: list[ConnectiveDecl] = [d for d in self.connectives.values() if d.base]
        for which in self.lattice_family:
            parents.append(self.decl(which))

        for parent in parents:
            for i in range(1, parent.arity + 1):
                if (parent.name, i) in declared_res:
                    continue
                fam, ot = residual_profile(parent.family, parent.order_type, i)
                rname = f"{parent.name}_r{i}"
                if rname in sig.connectives:  # pragma: no cover - defensive
                    raise SignatureError(f"residual name clash: {rname}")
                sig.connectives[rname] = ConnectiveDecl(
                    name=rname,
                    family=fam,
                    arity=parent.arity,
                    order_type=ot,
                    origin=(parent.name, i),
                    base=False,
                )
        return sig

    def residual_name(self, parent: str, i: int) -> str:
        """Name of the i-th residual of parent in the expanded signature."""
        for d in self.connectives.values():
            if d.origin == (parent, i):
                return d.name
        raise SignatureError(f"no residual of {parent} in coordinate {i} (expand first?)")

    def residual_of(self, name: str, i: int) -> str:
        """The i-th residual of any connective: by inversion when this
        connective is itself the i-residual of its parent, by declaration or
        expansion otherwise, generated on demand for second-level residuals.
        Lattice meet/join are valid results (linked residuals)."""
        d = self.decl(name)
        if d.origin is not None and d.origin[1] == i:
            return d.origin[0]
        for dd in self.connectives.values():
            if dd.origin == (name, i):
                return dd.name
        fam, ot = residual_profile(d.family, d.order_type, i)
        rname = f"{name}_r{i}"
        while rname in self.connectives:  # pragma: no cover - defensive
            rname += "x"
        self.connectives[rname] = ConnectiveDecl(
            name=rname, family=fam, arity=d.arity, order_type=ot, origin=(name, i), base=False
        )
        return rname

    def apply(self, name: str, args: list[Term]) -> Term:
        """Build an application term, mapping lattice names to Meet/Join."""
        if name == "meet":
            return Meet(args[0], args[1])
        if name == "join":
            return Join(args[0], args[1])
        d = self.decl(name)
        if len(args) != d.arity:
            raise SignatureError(f"{name} expects {d.arity} arguments, got {len(args)}")
        return App(name, tuple(args))

    def term_head(self, t: Term) -> str | None:
        """Connective name heading a term (meet/join for lattice nodes)."""
        if isinstance(t, Meet):
            return "meet"
        if isinstance(t, Join):
            return "join"
        if isinstance(t, App):
            return t.conn
        return None


def adjunction_instance(
    sig: Signature, parent: str, i: int
) -> tuple[str, tuple[int, ...], str]:
    """(family, order_type, residual name) bookkeeping for oracle checks."""
    d = sig.decl(parent)
    return d.family, d.order_type, sig.residual_of(parent, i)
