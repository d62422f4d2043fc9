"""Parsers for signature files, terms, inequalities, and meta-formulas.

Surface syntax (ASCII only):

  terms        p, q (proposition variables); j1, i2, h3 (nominals);
               m, n1, o2 (conominals); top, bot; a /\\ b, a \\/ b;
               conn(t1, ..., tn) or declared infix symbols.
  inequalities t <= t, t !<= t
  meta         &, |, ~, =>, forall v1, v2. body, exists v. body, parentheses.

Signature files are line-oriented:

  signature <name> [distributive]
  conn <name> <F|G> <arity> (<1|d>, ...) [infix <symbol> <prec>]
                                         [residual-of <parent|meet|join> <coord>]
                                         [base]
  latt <meet|join> <F|G>
  resname <parent> <coord> <name> [infix <symbol> <prec>]

`residual-of`/`resname` register a declared name as the residual of another
connective in a coordinate (family and order-type are derived and checked);
`residual-of meet 2` is the Heyting-style linked implication. `latt meet F`
declares lattice meet as an F-family member. A `residual-of` connective is
treated as proper-language (base) exactly when its parent is lattice meet or
join; the trailing `base` keyword overrides this, declaring a base connective
that happens to be the residual of a non-base parent.
"""

from __future__ import annotations

import re

from .signature import ConnectiveDecl, Signature, SignatureError, residual_profile
from .syntax import (
    App,
    Atom,
    BOT,
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
    TOP,
    Term,
)

NOMINAL_PREFIXES = ("j", "i", "h")
CONOMINAL_PREFIXES = ("m", "n", "o")


class ParseError(ValueError):
    pass


def classify_var(name: str) -> Term:
    if name[0] in NOMINAL_PREFIXES:
        return Nominal(name)
    if name[0] in CONOMINAL_PREFIXES:
        return Conominal(name)
    return PropVar(name)


# ---------------------------------------------------------------------------
# Lexer

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_FIXED = ["!<=", "<=", "=>", "/\\", "\\/", "&", "|", "~", "(", ")", ",", "."]


class Lexer:
    def __init__(self, text: str, extra_ops: list[str]):
        self.text = text
        # longest match first; extra_ops are declared infix symbols
        self.ops = sorted(set(_FIXED) | set(extra_ops), key=len, reverse=True)
        self.pos = 0
        self.toks: list[tuple[str, str]] = []
        self._lex()
        self.idx = 0

    def _lex(self) -> None:
        t, n = self.text, len(self.text)
        i = 0
        while i < n:
            c = t[i]
            if c.isspace():
                i += 1
                continue
            m = _IDENT.match(t, i)
            if m:
                self.toks.append(("ident", m.group()))
                i = m.end()
                continue
            for op in self.ops:
                if t.startswith(op, i):
                    self.toks.append(("op", op))
                    i += len(op)
                    break
            else:
                raise ParseError(f"unexpected character {c!r} at position {i}")
        self.toks.append(("eof", ""))

    def peek(self) -> tuple[str, str]:
        return self.toks[self.idx]

    def next(self) -> tuple[str, str]:
        tok = self.toks[self.idx]
        self.idx += 1
        return tok

    def expect(self, value: str) -> None:
        kind, val = self.next()
        if val != value:
            raise ParseError(f"expected {value!r}, found {val or kind!r}")

    def at(self, value: str) -> bool:
        return self.peek()[1] == value

    def accept(self, value: str) -> bool:
        if self.at(value):
            self.next()
            return True
        return False


# ---------------------------------------------------------------------------
# Term parser

MEET_PREC = 40
JOIN_PREC = 35
_KEYWORDS = {"top", "bot", "forall", "exists", "meet", "join"}


class _TermParser:
    def __init__(self, lx: Lexer, sig: Signature):
        self.lx = lx
        self.sig = sig
        self.infix: dict[str, tuple[str, int]] = {"/\\": ("meet", MEET_PREC), "\\/": ("join", JOIN_PREC)}
        for d in sig.infix_decls():
            self.infix[d.infix] = (d.name, d.prec)

    def term(self, min_prec: int = 0) -> Term:
        lhs = self.atom()
        while True:
            kind, val = self.lx.peek()
            if kind != "op" or val not in self.infix:
                return lhs
            name, prec = self.infix[val]
            if prec < min_prec:
                return lhs
            self.lx.next()
            rhs = self.term(prec)  # right-associative
            if name == "meet":
                lhs = Meet(lhs, rhs)
            elif name == "join":
                lhs = Join(lhs, rhs)
            else:
                lhs = App(name, (lhs, rhs))

    def atom(self) -> Term:
        kind, val = self.lx.peek()
        if val == "(":
            self.lx.next()
            t = self.term(0)
            self.lx.expect(")")
            return t
        if kind != "ident":
            raise ParseError(f"expected a term, found {val!r}")
        self.lx.next()
        if val == "top":
            return TOP
        if val == "bot":
            return BOT
        if val in ("meet", "join") or val in self.sig.connectives:
            args: list[Term] = []
            self.lx.expect("(")
            if not self.lx.at(")"):
                args.append(self.term(0))
                while self.lx.accept(","):
                    args.append(self.term(0))
            self.lx.expect(")")
            return self.sig.apply(val, args)
        if val in _KEYWORDS:
            raise ParseError(f"{val!r} is a reserved word")
        return classify_var(val)


def _make_lexer(text: str, sig: Signature) -> Lexer:
    return Lexer(text, [d.infix for d in sig.infix_decls() if d.infix])


def parse_term(text: str, sig: Signature) -> Term:
    lx = _make_lexer(text, sig)
    t = _TermParser(lx, sig).term()
    if lx.peek()[0] != "eof":
        raise ParseError(f"trailing input at {lx.peek()[1]!r}")
    return t


def parse_ineq(text: str, sig: Signature) -> Inequality:
    lx = _make_lexer(text, sig)
    tp = _TermParser(lx, sig)
    lhs = tp.term()
    if lx.accept("<="):
        negated = False
    elif lx.accept("!<="):
        negated = True
    else:
        raise ParseError(f"expected <= or !<=, found {lx.peek()[1]!r}")
    rhs = tp.term()
    if lx.peek()[0] != "eof":
        raise ParseError(f"trailing input at {lx.peek()[1]!r}")
    return Inequality(lhs, rhs, negated)


# ---------------------------------------------------------------------------
# Meta parser

IMPLIES_PREC = 10
OR_PREC = 20
AND_PREC = 25


class _MetaParser:
    def __init__(self, lx: Lexer, sig: Signature):
        self.lx = lx
        self.tp = _TermParser(lx, sig)

    def formula(self, min_prec: int = 0) -> MetaFormula:
        lhs = self.unary()
        while True:
            _, val = self.lx.peek()
            if val == "=>" and IMPLIES_PREC >= min_prec:
                self.lx.next()
                rhs = self.formula(IMPLIES_PREC)  # right-associative
                lhs = MetaImplies(lhs, rhs)
            elif val == "|" and OR_PREC >= min_prec:
                self.lx.next()
                rhs = self.formula(OR_PREC + 1)
                parts = list(lhs.parts) if isinstance(lhs, MetaOr) else [lhs]
                parts.append(rhs)
                lhs = MetaOr(tuple(parts))
            elif val == "&" and AND_PREC >= min_prec:
                self.lx.next()
                rhs = self.formula(AND_PREC + 1)
                parts = list(lhs.parts) if isinstance(lhs, MetaAnd) else [lhs]
                parts.append(rhs)
                lhs = MetaAnd(tuple(parts))
            else:
                return lhs

    def unary(self) -> MetaFormula:
        kind, val = self.lx.peek()
        if val == "~":
            self.lx.next()
            return MetaNot(self.unary())
        if val in ("forall", "exists"):
            self.lx.next()
            names: list[str] = []
            while True:
                k, v = self.lx.next()
                if k != "ident":
                    raise ParseError(f"expected a variable after {val}, found {v!r}")
                names.append(v)
                if not self.lx.accept(","):
                    break
            self.lx.expect(".")
            body = self.formula(0)
            for name in reversed(names):
                v = classify_var(name)
                if isinstance(v, Nominal):
                    body = (ForallNom if val == "forall" else ExistsNom)(name, body)
                elif isinstance(v, Conominal):
                    body = (ForallConom if val == "forall" else ExistsConom)(name, body)
                else:
                    raise ParseError(
                        f"{name!r} is not a nominal/conominal (prefixes "
                        f"{NOMINAL_PREFIXES}/{CONOMINAL_PREFIXES})"
                    )
            return body
        if val == "(":
            # could be a parenthesized formula or a parenthesized term in an atom;
            # try formula first, fall back to atom
            save = self.lx.idx
            self.lx.next()
            try:
                f = self.formula(0)
                self.lx.expect(")")
            except ParseError:
                self.lx.idx = save
                return self.atom()
            # a parenthesized formula may still be the lhs of nothing; but if the
            # next token is <=, the parentheses belonged to a term after all
            if self.lx.peek()[1] in ("<=", "!<="):
                self.lx.idx = save
                return self.atom()
            return f
        return self.atom()

    def atom(self) -> MetaFormula:
        lhs = self.tp.term()
        if self.lx.accept("<="):
            negated = False
        elif self.lx.accept("!<="):
            negated = True
        else:
            raise ParseError(f"expected <= or !<=, found {self.lx.peek()[1]!r}")
        rhs = self.tp.term()
        return Atom(Inequality(lhs, rhs, negated))


def parse_meta(text: str, sig: Signature) -> MetaFormula:
    lx = _make_lexer(text, sig)
    f = _MetaParser(lx, sig).formula()
    if lx.peek()[0] != "eof":
        raise ParseError(f"trailing input at {lx.peek()[1]!r}")
    return f


# ---------------------------------------------------------------------------
# Signature files


def parse_signature(text: str) -> Signature:
    sig: Signature | None = None
    pending_residuals: list[tuple[int, str, str, int]] = []  # line, child, parent, coord

    def ot_of(tok: str, lineno: int) -> tuple[int, ...]:
        tok = tok.strip()
        if not (tok.startswith("(") and tok.endswith(")")):
            raise SignatureError(f"line {lineno}: order-type must be parenthesized")
        inner = tok[1:-1].strip()
        if not inner:
            return ()
        out = []
        for piece in inner.split(","):
            piece = piece.strip()
            if piece == "1":
                out.append(1)
            elif piece == "d":
                out.append(-1)
            else:
                raise SignatureError(f"line {lineno}: order-type entry must be 1 or d, got {piece!r}")
        return tuple(out)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("//")[0].strip()
        if not line:
            continue
        parts = line.split()
        head = parts[0]
        if head == "signature":
            if len(parts) < 2:
                raise SignatureError(f"line {lineno}: signature needs a name")
            sig = Signature(name=parts[1], distributive="distributive" in parts[2:])
        elif head == "conn":
            if sig is None:
                raise SignatureError(f"line {lineno}: conn before signature header")
            if len(parts) < 5:
                raise SignatureError(f"line {lineno}: conn <name> <F|G> <arity> (<ot>)")
            name, family, arity_s = parts[1], parts[2], parts[3]
            # order-type may contain spaces; re-find it in the raw line
            m = re.search(r"\(([^)]*)\)", line)
            if not m:
                raise SignatureError(f"line {lineno}: missing order-type")
            try:
                arity = int(arity_s)
            except ValueError:
                raise SignatureError(f"line {lineno}: arity must be an integer") from None
            ot = ot_of(m.group(), lineno)
            rest = line[m.end():].split()
            infix_sym, prec = None, 0
            origin: tuple[str, int] | None = None
            base_flag: bool | None = None
            k = 0
            while k < len(rest):
                if rest[k] == "infix":
                    infix_sym, prec = rest[k + 1], int(rest[k + 2])
                    k += 3
                elif rest[k] == "residual-of":
                    origin = (rest[k + 1], int(rest[k + 2]))
                    k += 3
                elif rest[k] == "base":
                    base_flag = True
                    k += 1
                else:
                    raise SignatureError(f"line {lineno}: unknown annotation {rest[k]!r}")
            if family not in ("F", "G"):
                raise SignatureError(f"line {lineno}: family must be F or G, got {family!r}")
            if base_flag is None:
                base_flag = origin is None or origin[0] in ("meet", "join")
            try:
                decl = ConnectiveDecl(
                    name=name, family=family, arity=arity, order_type=ot,
                    origin=origin, base=base_flag,
                    infix=infix_sym, prec=prec,
                )
                sig.declare(decl)
            except SignatureError as e:
                raise SignatureError(f"line {lineno}: {e}") from None
            if origin is not None:
                pending_residuals.append((lineno, name, origin[0], origin[1]))
        elif head == "latt":
            if sig is None:
                raise SignatureError(f"line {lineno}: latt before signature header")
            if len(parts) != 3:
                raise SignatureError(f"line {lineno}: latt <meet|join> <F|G>")
            sig.declare_lattice(parts[1], parts[2])
        elif head == "resname":
            if sig is None:
                raise SignatureError(f"line {lineno}: resname before signature header")
            if len(parts) < 4:
                raise SignatureError(f"line {lineno}: resname <parent> <coord> <name> [...]")
            parent, coord_s, name = parts[1], parts[2], parts[3]
            coord = int(coord_s)
            infix_sym, prec = None, 0
            if len(parts) > 4:
                if parts[4] != "infix" or len(parts) < 7:
                    raise SignatureError(f"line {lineno}: expected infix <symbol> <prec>")
                infix_sym, prec = parts[5], int(parts[6])
            pdecl = sig.decl(parent)
            fam, ot = residual_profile(pdecl.family, pdecl.order_type, coord)
            try:
                sig.declare(
                    ConnectiveDecl(
                        name=name, family=fam, arity=pdecl.arity, order_type=ot,
                        origin=(parent, coord), base=False, infix=infix_sym, prec=prec,
                    )
                )
            except SignatureError as e:
                raise SignatureError(f"line {lineno}: {e}") from None
        else:
            raise SignatureError(f"line {lineno}: unknown directive {head!r}")

    if sig is None:
        raise SignatureError("empty signature file (missing `signature` header)")

    # validate residual-of declarations against the derived profiles
    for lineno, child, parent, coord in pending_residuals:
        if parent in ("meet", "join"):
            pfam = sig.lattice_family.get(parent, {"meet": "F", "join": "G"}[parent])
            pot: tuple[int, ...] = (1, 1)
        else:
            pdecl = sig.decl(parent)
            pfam, pot = pdecl.family, pdecl.order_type
        try:
            fam, ot = residual_profile(pfam, pot, coord)
        except IndexError:
            raise SignatureError(f"line {lineno}: coordinate {coord} out of range for {parent}") from None
        cdecl = sig.decl(child)
        if (cdecl.family, cdecl.order_type) != (fam, ot):
            raise SignatureError(
                f"line {lineno}: {child} declared {cdecl.family}{cdecl.order_type} but the "
                f"{coord}-residual of {parent} is {fam}{ot}"
            )
    return sig
