"""Parsing, printing, and normalization of single-variable sentences.

The surface syntax is s-expressions (grammar in the README).  `normalize`
rewrites a sentence into a disjunction of constraint systems of the shape
the solvers consume: exactly one lower bound, positive/negative power and
polynomial atoms with positive x-coefficients, modular constraints folded
into an affine substitution x = +-(M*y + r).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from ._ast import (
    And,
    Cmp,
    ConstraintSystem,
    Formula,
    LinTerm,
    ModAtomNode,
    Not,
    Or,
    ParseError,
    PolyAtom,
    PowAtomNode,
    PowerAtom,
    PredAtomNode,
    PredicateDecl,
    Quant,
    Verdict,
)
from .numtheory import ResidueClass, crt_extended, integer_roots, kth_root

__all__ = [
    "ParseError",
    "Formula",
    "PredicateDecl",
    "LinTerm",
    "Cmp",
    "ModAtomNode",
    "PowAtomNode",
    "PredAtomNode",
    "Not",
    "And",
    "Or",
    "Quant",
    "ConstraintSystem",
    "NormalForm",
    "parse",
    "format_formula",
    "normalize",
    "read_sexprs",
]


# ---------------------------------------------------------------------------
# S-expression reading.


@dataclass(frozen=True)
class SToken:
    text: str
    line: int
    col: int


def _tokenize(text: str):
    line, col = 1, 1
    i = 0
    out = []
    while i < len(text):
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
        elif ch in " \t\r":
            col += 1
            i += 1
        elif ch == ";":
            while i < len(text) and text[i] != "\n":
                i += 1
        elif ch in "()":
            out.append(SToken(ch, line, col))
            col += 1
            i += 1
        else:
            j = i
            while j < len(text) and text[j] not in " \t\r\n();":
                j += 1
            out.append(SToken(text[i:j], line, col))
            col += j - i
            i = j
    return out


def read_sexprs(text: str) -> list:
    """All top-level s-expressions; nested lists of SToken leaves."""
    tokens = _tokenize(text)
    pos = 0

    def read_one():
        nonlocal pos
        if pos >= len(tokens):
            raise ParseError("unexpected end of input")
        tok = tokens[pos]
        pos += 1
        if tok.text == "(":
            items = []
            while True:
                if pos >= len(tokens):
                    raise ParseError("unclosed '('", tok.line, tok.col)
                if tokens[pos].text == ")":
                    pos += 1
                    return items
                items.append(read_one())
        if tok.text == ")":
            raise ParseError("unexpected ')'", tok.line, tok.col)
        return tok

    exprs = []
    while pos < len(tokens):
        exprs.append(read_one())
    return exprs


def _pos(node) -> tuple[int | None, int | None]:
    while isinstance(node, list):
        if not node:
            return None, None
        node = node[0]
    return node.line, node.col


def _expect_symbol(node, what: str) -> str:
    if not isinstance(node, SToken):
        raise ParseError(f"expected {what}", *_pos(node))
    return node.text


def _parse_int(node) -> int:
    s = _expect_symbol(node, "an integer")
    try:
        return int(s)
    except ValueError:
        raise ParseError(f"expected an integer, got '{s}'", node.line, node.col) from None


def _parse_rational(node) -> Fraction:
    s = _expect_symbol(node, "a rational")
    try:
        if "/" in s:
            num, den = s.split("/")
            return Fraction(int(num), int(den))
        return Fraction(int(s))
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"expected a rational, got '{s}'", node.line, node.col) from None


# ---------------------------------------------------------------------------
# Parsing to the AST.


def _parse_term(node, var: str) -> LinTerm:
    if isinstance(node, SToken):
        if node.text == var:
            return LinTerm(1, 0)
        try:
            return LinTerm(0, int(node.text))
        except ValueError:
            raise ParseError(
                f"unknown symbol '{node.text}' in term (the bound variable is '{var}')",
                node.line,
                node.col,
            ) from None
    if not node:
        raise ParseError("empty term")
    head = _expect_symbol(node[0], "a term operator")
    args = node[1:]
    if head == "+":
        if not args:
            raise ParseError("(+) needs arguments", node[0].line, node[0].col)
        acc = LinTerm(0, 0)
        for a in args:
            acc = acc + _parse_term(a, var)
        return acc
    if head == "-":
        if len(args) == 1:
            return -_parse_term(args[0], var)
        if len(args) == 2:
            return _parse_term(args[0], var) - _parse_term(args[1], var)
        raise ParseError("(-) takes one or two arguments", node[0].line, node[0].col)
    if head == "*":
        if len(args) != 2:
            raise ParseError("(*) takes an integer and a term", node[0].line, node[0].col)
        c = _parse_int(args[0])
        return _parse_term(args[1], var).scale(c)
    raise ParseError(f"unknown term operator '{head}'", node[0].line, node[0].col)


def _parse_body(node, var: str, decls: dict[str, PredicateDecl]):
    if isinstance(node, SToken):
        raise ParseError(f"expected a formula, got '{node.text}'", node.line, node.col)
    if not node:
        raise ParseError("empty formula")
    head = _expect_symbol(node[0], "a connective or atom")
    args = node[1:]
    if head in ("and", "or"):
        if not args:
            raise ParseError(f"({head}) needs arguments", node[0].line, node[0].col)
        parts = tuple(_parse_body(a, var, decls) for a in args)
        return And(parts) if head == "and" else Or(parts)
    if head == "not":
        if len(args) != 1:
            raise ParseError("(not) takes one argument", node[0].line, node[0].col)
        return Not(_parse_body(args[0], var, decls))
    if head in ("=", "<", ">"):
        if len(args) != 2:
            raise ParseError(f"({head}) takes two terms", node[0].line, node[0].col)
        return Cmp(head, _parse_term(args[0], var), _parse_term(args[1], var))
    if head == "mod":
        if len(args) != 3:
            raise ParseError("(mod) takes a term, a modulus, and a residue", node[0].line, node[0].col)
        term = _parse_term(args[0], var)
        m = _parse_int(args[1])
        r = _parse_int(args[2])
        if m < 2:
            raise ParseError(f"modulus must be >= 2, got {m}", *_pos(args[1]))
        return ModAtomNode(term, m, r % m)
    if head == "pow":
        if len(args) != 2:
            raise ParseError("(pow) takes an exponent and a term", node[0].line, node[0].col)
        k = _parse_int(args[0])
        if k < 2:
            raise ParseError(f"power exponent must be >= 2, got {k}", *_pos(args[0]))
        return PowAtomNode(k, _parse_term(args[1], var))
    if head == "pred":
        if len(args) != 2:
            raise ParseError("(pred) takes a name and a term", node[0].line, node[0].col)
        name = _expect_symbol(args[0], "a predicate name")
        if name not in decls:
            raise ParseError(f"unknown predicate '{name}'", args[0].line, args[0].col)
        return PredAtomNode(name, _parse_term(args[1], var))
    raise ParseError(f"unknown form '{head}'", node[0].line, node[0].col)


def parse(text: str) -> Formula:
    """Parse declarations plus one sentence (several with trailing sentences)."""
    exprs = read_sexprs(text)
    if not exprs:
        raise ParseError("no sentence found")
    decls: dict[str, PredicateDecl] = {}
    i = 0
    while i < len(exprs):
        e = exprs[i]
        if isinstance(e, list) and e and isinstance(e[0], SToken) and e[0].text == "declare-pred":
            if len(e) != 3:
                raise ParseError("(declare-pred NAME (coeffs ...))", e[0].line, e[0].col)
            name = _expect_symbol(e[1], "a predicate name")
            spec = e[2]
            if (
                not isinstance(spec, list)
                or not spec
                or _expect_symbol(spec[0], "coeffs") != "coeffs"
                or len(spec) < 2
            ):
                raise ParseError("expected (coeffs c_d ... c_0)", *_pos(e[2]))
            coeffs = tuple(_parse_rational(c) for c in spec[1:])
            decls[name] = PredicateDecl(name, coeffs)
            i += 1
        else:
            break
    sentences = exprs[i:]
    if not sentences:
        raise ParseError("no sentence found after declarations")
    if len(sentences) > 1:
        raise ParseError("more than one sentence; use --multi for batches", *_pos(sentences[1]))
    return Formula(tuple(decls.values()), _parse_sentence(sentences[0], decls))


def parse_multi(text: str) -> list[Formula]:
    """Declarations followed by any number of sentences."""
    exprs = read_sexprs(text)
    decls: dict[str, PredicateDecl] = {}
    out = []
    for e in exprs:
        if isinstance(e, list) and e and isinstance(e[0], SToken) and e[0].text == "declare-pred":
            name = _expect_symbol(e[1], "a predicate name") if len(e) == 3 else None
            if name is None:
                raise ParseError("(declare-pred NAME (coeffs ...))", e[0].line, e[0].col)
            spec = e[2]
            if not isinstance(spec, list) or len(spec) < 2 or _expect_symbol(spec[0], "coeffs") != "coeffs":
                raise ParseError("expected (coeffs c_d ... c_0)", *_pos(e[2]))
            decls[name] = PredicateDecl(name, tuple(_parse_rational(c) for c in spec[1:]))
        else:
            out.append(Formula(tuple(decls.values()), _parse_sentence(e, decls)))
    if not out:
        raise ParseError("no sentence found")
    return out


def _parse_sentence(node, decls) -> Quant:
    if isinstance(node, SToken):
        raise ParseError("expected (exists x ...) or (forall x ...)", node.line, node.col)
    if len(node) != 3:
        raise ParseError("a sentence is (exists VAR BODY) or (forall VAR BODY)", *_pos(node))
    kind = _expect_symbol(node[0], "a quantifier")
    if kind not in ("exists", "forall"):
        raise ParseError(f"expected exists/forall, got '{kind}'", node[0].line, node[0].col)
    var = _expect_symbol(node[1], "a variable name")
    body = _parse_body(node[2], var, decls)
    return Quant(kind, var, body)


# ---------------------------------------------------------------------------
# Printing (canonical; print . parse is the identity on parsed trees).


def _format_term(t: LinTerm, var: str) -> str:
    if t.a == 0:
        return str(t.b)
    ax = var if t.a == 1 else f"(* {t.a} {var})"
    if t.b == 0:
        return ax
    return f"(+ {ax} {t.b})"


def _format_body(node, var: str) -> str:
    if isinstance(node, And):
        return "(and " + " ".join(_format_body(a, var) for a in node.args) + ")"
    if isinstance(node, Or):
        return "(or " + " ".join(_format_body(a, var) for a in node.args) + ")"
    if isinstance(node, Not):
        return f"(not {_format_body(node.arg, var)})"
    if isinstance(node, Cmp):
        return f"({node.op} {_format_term(node.lhs, var)} {_format_term(node.rhs, var)})"
    if isinstance(node, ModAtomNode):
        return f"(mod {_format_term(node.term, var)} {node.modulus} {node.residue})"
    if isinstance(node, PowAtomNode):
        return f"(pow {node.k} {_format_term(node.term, var)})"
    if isinstance(node, PredAtomNode):
        return f"(pred {node.name} {_format_term(node.term, var)})"
    raise TypeError(f"not a formula node: {node!r}")


def format_formula(f: Formula) -> str:
    lines = []
    for d in f.decls:
        cs = " ".join(str(c) for c in d.coeffs)
        lines.append(f"(declare-pred {d.name} (coeffs {cs}))")
    q = f.root
    lines.append(f"({q.kind} {q.var} {_format_body(q.body, q.var)})")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Normalization.


@dataclass
class NormalForm:
    """Disjuncts whose joint satisfiability decides the sentence.

    For forall sentences the body was negated first: the sentence is true
    iff no system is satisfiable (`negated` records this).
    """

    negated: bool
    systems: list

    def __iter__(self):
        return iter(self.systems)


_TRUE = ("true",)
_FALSE = ("false",)


def _ceil_div(p: int, q: int) -> int:
    return -((-p) // q)


def _const(flag: bool):
    return [[_TRUE]] if flag else [[_FALSE]]


def _lower_eq(a: int, b: int, positive: bool):
    # a*y + b = 0
    if a == 0:
        return _const((b == 0) == positive)
    if (-b) % a != 0:
        return _const(not positive)
    c = (-b) // a
    if positive:
        return [[("eq", c)]]
    return [[("lt", c)], [("gt", c)]]


def _lower_gt(a: int, b: int):
    # a*y + b > 0, a != 0
    if a > 0:
        return [[("gt", _ceil_div(1 - b, a) - 1)]]
    return [[("lt", (b - 1) // (-a) + 1)]]


def _lower_cmp(op: str, diff: LinTerm, positive: bool):
    a, b = diff.a, diff.b
    if op == "=":
        return _lower_eq(a, b, positive)
    if op == "<":
        a, b = -a, -b
        op = ">"
    # now op == ">": positive: a*y+b > 0; negative: -(a*y+b) + 1 > 0
    if not positive:
        a, b = -a, -b + 1
    if a == 0:
        return _const(b > 0)
    return _lower_gt(a, b)


def _lower_mod(term: LinTerm, m: int, r: int, positive: bool):
    a, b = term.a, term.b
    if a == 0:
        return _const(((b - r) % m == 0) == positive)
    c = (r - b) % m
    if a < 0:
        a, c = -a, (-c) % m
    g = math.gcd(a, m)
    if c % g != 0:
        return _const(not positive)
    m2 = m // g
    if m2 == 1:
        return _const(positive)
    y0 = (c // g * pow(a // g, -1, m2)) % m2
    if positive:
        return [[("mod", m2, y0)]]
    return [[("mod", m2, (y0 + s) % m2)] for s in range(1, m2)]


def _flip_cubic(asc: tuple[Fraction, ...]) -> tuple[Fraction, ...]:
    # u -> -u: same value set for odd degree; fixes a negative leading coefficient
    return tuple(c if i % 2 == 0 else -c for i, c in enumerate(asc))


def _lower_pred(decl: PredicateDecl, term: LinTerm, positive: bool):
    asc = decl.ascending()
    d = decl.degree
    if d == 0:
        f0 = asc[0]
        return _lower_cmp("=", LinTerm(term.a, term.b - int(f0)), positive)
    if d == 1:
        c1, c0 = int(asc[1]), int(asc[0])
        if abs(c1) == 1:
            return _const(positive)
        return _lower_mod(term, abs(c1), c0 % abs(c1), positive)
    a, b = term.a, term.b
    if asc[-1] < 0:
        if d == 3:
            asc = _flip_cubic(asc)
        else:
            asc = tuple(-c for c in asc)
            a, b = -a, -b
    if a == 0:
        return _const(_scaled_value_set_contains(asc, b) == positive)
    sign = 1 if positive else -1
    return [[("pred", sign, asc, a, b, decl.name)]]


def _scaled_value_set_contains(asc: tuple[Fraction, ...], v: int) -> bool:
    cs = list(asc)
    cs[0] -= v
    return bool(integer_roots(cs))


def _lower_atom(node, positive: bool, decls):
    if isinstance(node, Cmp):
        return _lower_cmp(node.op, node.lhs - node.rhs, positive)
    if isinstance(node, ModAtomNode):
        return _lower_mod(node.term, node.modulus, node.residue, positive)
    if isinstance(node, PowAtomNode):
        a, b = node.term.a, node.term.b
        if a == 0:
            return _const((kth_root(b, node.k) is not None) == positive)
        return [[("pow", 1 if positive else -1, node.k, a, b)]]
    if isinstance(node, PredAtomNode):
        return _lower_pred(decls[node.name], node.term, positive)
    raise TypeError(f"not an atom: {node!r}")


_DNF_CAP = 50_000


def _to_dnf(node, positive: bool, decls):
    if isinstance(node, Not):
        return _to_dnf(node.arg, not positive, decls)
    if isinstance(node, (And, Or)):
        conjunctive = isinstance(node, And) == positive
        parts = [_to_dnf(a, positive, decls) for a in node.args]
        if not conjunctive:
            return [c for p in parts for c in p]
        acc = [[]]
        for p in parts:
            nxt = []
            for left in acc:
                for right in p:
                    if _FALSE in left or _FALSE in right:
                        continue
                    nxt.append(left + right)
                    if len(nxt) > _DNF_CAP:
                        raise ValueError("formula exceeds the disjunct expansion cap")
            acc = nxt
        return acc
    return _lower_atom(node, positive, decls)


# --- direct evaluation of canonical literals (for eager finite checks) ---


def _lit_holds(lit, y: int) -> bool:
    tag = lit[0]
    if tag == "true":
        return True
    if tag == "false":
        return False
    if tag == "eq":
        return y == lit[1]
    if tag == "lt":
        return y < lit[1]
    if tag == "gt":
        return y > lit[1]
    if tag == "mod":
        return y % lit[1] == lit[2]
    if tag == "pow":
        _, sign, k, a, b = lit
        return (kth_root(a * y + b, k) is not None) == (sign > 0)
    if tag == "pred":
        _, sign, asc, a, b, _name = lit
        return _scaled_value_set_contains(asc, a * y + b) == (sign > 0)
    raise ValueError(f"unknown literal {lit!r}")


def _best_witness(sys: ConstraintSystem, ys) -> Verdict | None:
    best = None
    for y in ys:
        x = sys.to_original(y)
        key = (abs(x), x)
        if best is None or key < best[0]:
            best = (key, x)
    return Verdict.sat(best[1]) if best else None


class _Dropped(Exception):
    """The conjunct is unsatisfiable; contribute nothing."""


def _substitute_lits(lits, M: int, r0: int):
    out = []
    for lit in lits:
        tag = lit[0]
        if tag in ("true", "false"):
            out.append(lit)
        elif tag == "eq":
            c = lit[1]
            if (c - r0) % M != 0:
                raise _Dropped
            out.append(("eq", (c - r0) // M))
        elif tag == "gt":
            out.append(("gt", (lit[1] - r0) // M))
        elif tag == "lt":
            # y' < (c - r0)/M  <=>  y' < ceil((c - r0)/M) adjusted for integrality
            c = lit[1]
            out.append(("lt", _ceil_div(c - r0, M)))
        elif tag == "pow":
            _, sign, k, a, b = lit
            out.append(("pow", sign, k, a * M, a * r0 + b))
        elif tag == "pred":
            _, sign, asc, a, b, name = lit
            out.append(("pred", sign, asc, a * M, a * r0 + b, name))
        else:  # pragma: no cover
            raise AssertionError(f"unexpected literal {lit!r} after CRT stage")
    return out


def _flip_lits(lits):
    out = []
    for lit in lits:
        tag = lit[0]
        if tag == "gt":
            out.append(("lt", -lit[1]))
        elif tag == "lt":
            out.append(("gt", -lit[1]))
        elif tag == "eq":
            out.append(("eq", -lit[1]))
        elif tag == "pow":
            _, sign, k, a, b = lit
            out.append(("pow", sign, k, -a, b))
        elif tag == "pred":
            _, sign, asc, a, b, name = lit
            out.append(("pred", sign, asc, -a, b, name))
        else:
            out.append(lit)
    return out


def _quad_min_value(asc: tuple[Fraction, ...]) -> Fraction:
    # Minimum of c2 u^2 + c1 u + c0 (c2 > 0) over the integers.
    c0, c1, c2 = asc
    vertex = Fraction(-c1, 2 * c2)
    lo = math.floor(vertex)
    candidates = (lo, lo + 1)
    return min(c2 * u * u + c1 * u + c0 for u in candidates)


def _finite_check(sys: ConstraintSystem, lits, lo: int, hi: int, enum_bound: int):
    """Resolve a bounded conjunct lo < y < hi by exhaustive evaluation."""
    if hi - lo <= 1:
        raise _Dropped
    if hi - lo - 1 > enum_bound:
        sys.resolved = Verdict.unknown("bounded interval wider than the enumeration bound", enum_bound)
        sys.log("interval:too-wide")
        return sys
    sat_ys = [y for y in range(lo + 1, hi) if all(_lit_holds(l, y) for l in lits)]
    verdict = _best_witness(sys, sat_ys)
    if verdict is None:
        raise _Dropped
    sys.resolved = verdict
    sys.resolved_points = tuple(sat_ys)
    sys.log("interval:enumerated")
    return sys


def _build_systems(conj, decls, enum_bound: int) -> list[ConstraintSystem]:
    from . import poly_solver, power_solver

    sys = ConstraintSystem()
    lits = [l for l in conj if l[0] != "true"]
    if any(l[0] == "false" for l in lits):
        return []

    # Fold modular constraints into the substitution x = M*y + r.
    mods = [ResidueClass(l[1], l[2]) for l in lits if l[0] == "mod"]
    lits = [l for l in lits if l[0] != "mod"]
    if mods:
        merged = crt_extended(mods)
        if merged is None:
            return []
        M, r0 = merged.modulus, merged.residue
        sys.substitution = (M, r0)
        sys.log(f"crt:{M}+{r0}")
        try:
            lits = _substitute_lits(lits, M, r0)
        except _Dropped:
            return []

    try:
        # Equality pins the variable: evaluate everything at the point.
        eqs = [l[1] for l in lits if l[0] == "eq"]
        if eqs:
            if len(set(eqs)) > 1:
                raise _Dropped
            y = eqs[0]
            rest = [l for l in lits if l[0] != "eq"]
            if all(_lit_holds(l, y) for l in rest):
                sys.resolved = Verdict.sat(sys.to_original(y))
                sys.resolved_points = (y,)
                sys.log("equality:substituted")
                return [sys]
            raise _Dropped

        gts = [l[1] for l in lits if l[0] == "gt"]
        lts = [l[1] for l in lits if l[0] == "lt"]
        atoms = [l for l in lits if l[0] in ("pow", "pred")]

        if gts and lts:
            return [_finite_check(sys, atoms, max(gts), min(lts), enum_bound)]
        if lts and not gts:
            sys.sign_flipped = True
            sys.substitution = (sys.substitution[0], -sys.substitution[1])
            sys.log("sign-flip")
            lits = _flip_lits(lits)
            gts = [l[1] for l in lits if l[0] == "gt"]
            atoms = [l for l in lits if l[0] in ("pow", "pred")]

        if not gts:
            if not atoms:
                # Pure congruence talk: satisfiable everywhere it parses.
                sys.resolved = _best_witness(sys, range(-1, 2))
                sys.resolved_all = True
                sys.log("unconstrained")
                return [sys]
            # No inequality at all: split y < 0, y = 0, y > 0.
            out = []
            zero = sys.clone()
            if all(_lit_holds(l, 0) for l in atoms):
                zero.resolved = Verdict.sat(zero.to_original(0))
                zero.resolved_points = (0,)
                zero.log("case-split:zero")
                out.append(zero)
            pos = sys.clone()
            pos.log("case-split:positive")
            try:
                out.extend(_assemble(pos, 0, atoms, decls, enum_bound, power_solver, poly_solver))
            except _Dropped:
                pass
            neg = sys.clone()
            neg.sign_flipped = not neg.sign_flipped
            neg.substitution = (neg.substitution[0], -neg.substitution[1])
            neg.log("case-split:negative")
            try:
                out.extend(
                    _assemble(neg, 0, _flip_lits(atoms), decls, enum_bound, power_solver, poly_solver)
                )
            except _Dropped:
                pass
            return out

        return _assemble(sys, max(gts), atoms, decls, enum_bound, power_solver, poly_solver)
    except _Dropped:
        return []


def _assemble(sys: ConstraintSystem, lower: int, atoms, decls, enum_bound, power_solver, poly_solver):
    """Sign handling, depression, and redundancy processing under one lower bound."""
    sys.lower = lower

    # Fix coefficient signs atom by atom; collect upper bounds and thresholds.
    uppers: list[int] = []
    thresholds: list[tuple[int, tuple]] = []  # (threshold, literal) for disposable negatives
    kept = []
    for lit in atoms:
        if lit[0] == "pow":
            _, sign, k, a, b = lit
            if a > 0:
                kept.append(lit)
                continue
            if k % 2 == 1:
                kept.append(("pow", sign, k, -a, -b))
                continue
            if sign > 0:
                uppers.append(b // (-a))  # need a*y + b >= 0
                kept.append(lit)
            else:
                thresholds.append((b // (-a), lit))
        else:
            _, sign, asc, a, b, name = lit
            deg = len(asc) - 1
            if a > 0:
                kept.append(lit)
                continue
            if deg == 3:
                kept.append(("pred", sign, _flip_cubic(tuple(-c for c in asc)), -a, -b, name))
                continue
            vmin = _quad_min_value(asc)
            bound = math.floor(Fraction(vmin - b, a))  # a < 0: value floor turns into an upper bound
            if sign > 0:
                uppers.append(bound)
                kept.append(lit)
            else:
                thresholds.append((bound, lit))

    if uppers:
        all_lits = kept + [l for _, l in thresholds]
        return [_finite_check(sys, all_lits, sys.lower, min(uppers) + 1, enum_bound)]

    out = []
    if thresholds:
        T = max(t for t, _ in thresholds)
        if T > sys.lower:
            head = sys.clone()
            head.log("negative-tail:bounded-part")
            all_lits = kept + [l for _, l in thresholds]
            try:
                out.append(_finite_check(head, all_lits, sys.lower, T + 1, enum_bound))
            except _Dropped:
                pass
            sys.lower = T
        sys.log("negative-tail:discharged")

    # Depress polynomial atoms and build the solver-facing atom lists.
    for lit in kept:
        if lit[0] == "pow":
            _, sign, k, a, b = lit
            atom = PowerAtom(k, a, b)
        else:
            _, sign, asc, a, b, name = lit
            atom = poly_solver.depress_ascending(asc, a, b)
            sys.log(f"depress:{name}")
        (sys.positives if sign > 0 else sys.negatives).append(atom)

    processed = power_solver.preprocess(sys)
    final = []
    for s in processed:
        if s.resolved is not None or not _has_poly(s):
            final.append(s)
        else:
            final.extend(poly_solver.preprocess_poly(s))
    out.extend(final)
    return out


def _has_poly(sys: ConstraintSystem) -> bool:
    return any(isinstance(a, PolyAtom) for a in sys.positives + sys.negatives)


def normalize(f: Formula, enum_bound: int = 10**6) -> NormalForm:
    """Rewrite a sentence into solver-ready disjuncts.

    Performs, in order: forall-to-exists negation, literal rewriting and
    disjunctive normal form, modular coalescing by the extended CRT,
    equality substitution and bounded-interval finite checks, sign
    normalization (including the x -> -x flip and the three-way case split
    when no inequality appears), depression of degree-2/3 predicates, and
    redundancy/similarity processing.
    """
    decls = f.decl_map()
    q = f.root
    negated = q.kind == "forall"
    body = Not(q.body) if negated else q.body
    systems = []
    for conj in _to_dnf(body, True, decls):
        systems.extend(_build_systems(conj, decls, enum_bound))
    return NormalForm(negated, systems)
