"""Decision procedure for degree-2/3 polynomial-predicate systems.

Atoms are held in depressed monic form: exists u = offset (mod stride)
with u^2 = a*x + b or u^3 + lin*u = a*x + b.  Pairs of positive atoms are
checked for redundancy (a failure of absolute irreducibility of the
attendant curve) and merged; the positive solution set is computed by a
case analysis over the pair/triple degree patterns, falling back to
bounded curve enumeration with an honest Unknown where only Baker-style
effective bounds exist.  Negative constraints are filtered pointwise,
except for the one genuinely dense interaction (a Pell-parametrized
quadratic pair against a cubic negative), which is removed exactly as
arithmetic progressions of sequence indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from ._ast import ConstraintSystem, PolyAtom, PowerAtom, PredicateDecl, Verdict, system_holds
from .lrbs import IndexSet, Lrbs, filter_congruence
from .numtheory import crt_extended, ResidueClass, divisor_pairs, integer_roots
from .pell import QuadNum, fundamental, solve_generalized, squarefree_kernel, unit_exponent
from .power_solver import (
    AllSolutions,
    DEFAULT_OPTIONS,
    EmptySolutions,
    FiniteSolutions,
    ImagePoly,
    LrbsEntry,
    LrbsUnion,
    PolyImages,
    PolyValueMap,
    PowerValueMap,
    SolutionSet,
    SolveOptions,
    _combine,
    _filter_by_atoms,
    members,
    preprocess as power_preprocess,
)

__all__ = [
    "DepressedPred",
    "RedundancyData",
    "CurveCaseData",
    "depress",
    "depress_ascending",
    "poly_redundant",
    "preprocess_poly",
    "solve_positive_poly",
    "subtract_discarded",
    "decide_poly",
]


# ---------------------------------------------------------------------------
# Small exact polynomial toolkit (ascending Fraction coefficients).


def _trim(p):
    p = list(p)
    while p and p[-1] == 0:
        p.pop()
    return p


def _padd(p, q):
    n = max(len(p), len(q))
    return _trim([(p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n)])


def _pmul(p, q):
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return _trim(out)


def _pscale(p, c):
    return _trim([a * c for a in p])


def _pcompose(p, q):
    """p(q(t))."""
    out = [Fraction(0)]
    for c in reversed(p):
        out = _padd(_pmul(out, q), [Fraction(c)])
    return out


def _pderiv(p):
    return _trim([i * p[i] for i in range(1, len(p))])


def _peval(p, x):
    v = Fraction(0)
    for c in reversed(p):
        v = v * x + c
    return v


def _pdivmod(p, q):
    p = [Fraction(c) for c in _trim(p)]
    q = [Fraction(c) for c in _trim(q)]
    if not q:
        raise ZeroDivisionError("polynomial division by zero")
    quot = [Fraction(0)] * max(len(p) - len(q) + 1, 1)
    while p and len(p) >= len(q):
        shift = len(p) - len(q)
        c = p[-1] / q[-1]
        quot[shift] = c
        for i, qc in enumerate(q):
            p[shift + i] -= c * qc
        p = _trim(p)
    return _trim(quot), p


def _pgcd(p, q):
    a, b = _trim([Fraction(c) for c in p]), _trim([Fraction(c) for c in q])
    while b:
        _, r = _pdivmod(a, b)
        a, b = b, _trim(r)
    if a:
        a = _pscale(a, 1 / a[-1])
    return a


# ---------------------------------------------------------------------------
# Depression (complete the square / the cube).


@dataclass(frozen=True)
class DepressedPred:
    """Depressed monic normal form of R(a*x + b) with its provenance."""

    atom: PolyAtom
    source: PredicateDecl
    source_a: int
    source_b: int

    def equivalent_at(self, x: int) -> bool:
        return self.atom.holds(x)


def _reduce_atom(degree: int, lin: int, a: int, b: int, q: int, r: int) -> PolyAtom:
    # Divide out a common factor g of the witness lattice q*t + r when the
    # scaled coefficients allow it; keeps golden outputs small.
    while True:
        g = math.gcd(q, r)
        if g <= 1:
            break
        gd = g**degree
        if a % gd or b % gd:
            break
        if degree == 3 and lin % (g * g):
            break
        a //= gd
        b //= gd
        if degree == 3:
            lin //= g * g
        q //= g
        r //= g
    return PolyAtom(degree, lin, a, b, q, r % q)


def depress_ascending(asc, a: int, b: int) -> PolyAtom:
    """Normalize f(u) = a*x + b (f by ascending rational coeffs, lead > 0, a > 0)."""
    asc = [Fraction(c) for c in asc]
    degree = len(asc) - 1
    if degree not in (2, 3):
        raise ValueError(f"degree must be 2 or 3, got {degree}")
    if asc[-1] <= 0 or a <= 0:
        raise ValueError("need a positive leading coefficient and a > 0")
    lcm = 1
    for c in asc:
        lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
    F = [int(c * lcm) for c in asc]
    A, B = lcm * a, lcm * b
    if degree == 2:
        c0, c1, c2 = F
        at = 4 * A * c2
        bt = 4 * B * c2 - 4 * c0 * c2 + c1 * c1
        q = 2 * c2
        return _reduce_atom(2, 0, at, bt, q, c1 % q)
    c0, c1, c2, c3 = F
    q = 3 * c3
    lin = 9 * c1 * c3 - 3 * c2 * c2
    at = 27 * A * c3 * c3
    bt = 27 * B * c3 * c3 - 27 * c0 * c3 * c3 + 9 * c1 * c2 * c3 - 2 * c2**3
    return _reduce_atom(3, lin, at, bt, q, c2 % q)


def depress(pred: PredicateDecl, a: int, b: int) -> DepressedPred:
    """Depressed monic form of the predicate constraint R(a*x + b).

    Degree 2 or 3 only; a != 0.  Negative leading coefficients and (for
    cubics) negative a are folded away by value-set-preserving flips.
    """
    if pred.degree not in (2, 3):
        raise ValueError(f"depress needs degree 2 or 3, got {pred.degree}")
    if a == 0:
        raise ValueError("need a != 0")
    asc = list(pred.ascending())
    if asc[-1] < 0:
        if pred.degree == 3:
            asc = [c if i % 2 == 0 else -c for i, c in enumerate(asc)]
        else:
            asc = [-c for c in asc]
            a, b = -a, -b
    if a < 0 and pred.degree == 3:
        asc = [-c if i % 2 == 0 else c for i, c in enumerate(asc)]
        a, b = -a, -b
    if a < 0:
        # A downward-facing image window; callers resolve it by finite
        # inspection before depressing.  Normalize the polynomial side only.
        atom = depress_ascending([-c for c in asc], -a, -b)
        atom = PolyAtom(atom.degree, atom.lin, -atom.a, -atom.b, atom.stride, atom.offset)
        return DepressedPred(atom, pred, a, b)
    return DepressedPred(depress_ascending(asc, a, b), pred, a, b)


# ---------------------------------------------------------------------------
# Redundancy of polynomial constraints.


def _rational_sqrt(f: Fraction) -> Fraction | None:
    if f < 0:
        return None
    ns = math.isqrt(f.numerator)
    ds = math.isqrt(f.denominator)
    if ns * ns == f.numerator and ds * ds == f.denominator:
        return Fraction(ns, ds)
    return None


def _rational_cbrt(f: Fraction) -> Fraction | None:
    def icbrt(n: int) -> int | None:
        if n < 0:
            r = icbrt(-n)
            return None if r is None else -r
        r = round(n ** (1 / 3)) if n < 2**40 else int(n ** (1 / 3))
        for c in (r - 2, r - 1, r, r + 1, r + 2):
            if c >= 0 and c**3 == n:
                return c
        return None

    nc, dc = icbrt(f.numerator), icbrt(f.denominator)
    if nc is None or dc is None:
        return None
    return Fraction(nc, dc)


@dataclass(frozen=True)
class RedundancyData:
    """How two redundant constraints correlate their witnesses.

    kind "line": u1 = +-slope * u2 (quadratics; both signs).
    kind "line+conic": u1 = -slope * u2 plus finitely many conic points.
    kind "point": the only common witnesses are the listed points.
    """

    kind: str
    slope: Fraction | None
    points: tuple[tuple[int, int], ...]


def _ellipse_points(m: Fraction, const: int) -> tuple[tuple[int, int], ...]:
    """Integer points of u1^2 - m*u1*u2 + m^2*u2^2 + const = 0."""
    if const > 0:
        return ()
    if const == 0:
        return ((0, 0),)
    # 3/4 m^2 u2^2 <= -const bounds the search box exactly.
    bound2 = math.isqrt(int(Fraction(-4 * const) / (3 * m * m))) + 1
    pts = []
    for u2 in range(-bound2, bound2 + 1):
        disc = Fraction(-3) * m * m * u2 * u2 - 4 * const
        s = _rational_sqrt(disc)
        if s is None:
            continue
        for sign in (1, -1) if s != 0 else (1,):
            u1 = (m * u2 + sign * s) / 2
            if u1.denominator == 1:
                pts.append((int(u1), u2))
    return tuple(sorted(set(pts)))


def poly_redundant(p1: PolyAtom, p2: PolyAtom) -> RedundancyData | None:
    """Redundancy of p1 with respect to p2 (same degree, scaled curve reducible).

    Returns the witness correlation, or None when the curve
    a2*f1(u1) - a1*f2(u2) - a2*b1 + a1*b2 is absolutely irreducible.
    """
    if p1.degree != p2.degree:
        return None
    if p1.a * p2.b != p2.a * p1.b:
        return None
    a1, a2 = p1.a, p2.a
    if p1.degree == 2:
        m = _rational_sqrt(Fraction(a1, a2))
        if m is not None:
            return RedundancyData("line", m, ())
        return RedundancyData("point", None, ((0, 0),))
    D1, D2 = p1.lin, p2.lin
    if D1 != 0 and D2 != 0:
        m = Fraction(-a1 * D2, a2 * D1)
        if m**3 == Fraction(-a1, a2):
            return RedundancyData("line+conic", -m, _ellipse_points(m, D1))
        return None
    if D1 == 0 and D2 == 0:
        c = _rational_cbrt(Fraction(a1, a2))
        if c is not None:
            return RedundancyData("line+conic", c, ((0, 0),))
        return RedundancyData("point", None, ((0, 0),))
    return None


# ---------------------------------------------------------------------------
# Preprocessing: merge redundant positive pairs, catch contradictions.


def _lin_congruence(a: int, c: int, m: int):
    """Solutions t of a*t = c (mod m) as (t0, step), or None."""
    a, c = a % m, c % m
    g = math.gcd(a, m)
    if c % g:
        return None
    m2 = m // g
    if m2 == 1:
        return 0, 1
    t0 = (c // g * pow(a // g, -1, m2)) % m2
    return t0, m2


def _merge_line_branch(P: PolyAtom, Q: PolyAtom, num: int, den: int) -> PolyAtom | None:
    """Atom equivalent to P & Q along the branch u1 = (num/den) u2, u2 = den*v."""
    c1 = _lin_congruence(num, P.offset, P.stride)
    c2 = _lin_congruence(den, Q.offset, Q.stride)
    if c1 is None or c2 is None:
        return None
    merged = crt_extended([ResidueClass(c1[1], c1[0]), ResidueClass(c2[1], c2[0])])
    if merged is None:
        return None
    vq, v0 = merged.modulus, merged.residue
    # f1(num*v) = a1*x + b1 over v = v0 (mod vq)
    if P.degree == 2:
        w_stride = abs(num) * vq
        w_off = (num * v0) % w_stride
        return _reduce_atom(2, 0, P.a, P.b, w_stride, w_off)
    g = [Fraction(0), Fraction(P.lin * num), Fraction(0), Fraction(num**3)]
    comp = _pcompose(g, [Fraction(v0), Fraction(vq)])
    if comp[-1] < 0:
        comp = [c if i % 2 == 0 else -c for i, c in enumerate(comp)]
    return depress_ascending(comp, P.a, P.b)


def _redundant_pair_systems(system: ConstraintSystem, P: PolyAtom, Q: PolyAtom, data: RedundancyData):
    """Split the system on the witness correlation of two positive atoms."""
    out = []
    base = system.clone()
    base.positives = [a for a in system.positives if a is not P and a is not Q]
    slopes = []
    if data.kind == "line":
        slopes = [data.slope, -data.slope]
    elif data.kind == "line+conic":
        slopes = [-data.slope]
    for m in slopes:
        branch = base.clone()
        atom = _merge_line_branch(P, Q, m.numerator, m.denominator)
        if atom is None:
            continue
        branch.positives.append(atom)
        branch.log(f"poly-redundant:merge:{P.degree}")
        out.append(branch)
    for u1, u2 in data.points:
        if u1 % P.stride != P.offset or u2 % Q.stride != Q.offset:
            continue
        v1 = u1**P.degree + P.lin * u1
        if (v1 - P.b) % P.a:
            continue
        x = (v1 - P.b) // P.a
        if (u2**Q.degree + Q.lin * u2) != Q.a * x + Q.b:
            continue
        cand = base.clone()
        if system_holds(cand, x):
            cand.resolved = Verdict.sat(cand.to_original(x))
            cand.log("poly-redundant:conic-point")
            out.append(cand)
    return out


def _branch_residues(P: PolyAtom, Q: PolyAtom, data: RedundancyData):
    """u1-residue classes (mod L) covered by the correlation branches."""
    slopes = [data.slope, -data.slope] if data.kind == "line" else [-data.slope]
    classes = []
    for m in slopes:
        num, den = m.numerator, m.denominator
        c1 = _lin_congruence(num, P.offset, P.stride)
        c2 = _lin_congruence(den, Q.offset, Q.stride)
        if c1 is None or c2 is None:
            continue
        merged = crt_extended([ResidueClass(c1[1], c1[0]), ResidueClass(c2[1], c2[0])])
        if merged is None:
            continue
        vq, v0 = merged.modulus, merged.residue
        classes.append(((num * v0), abs(num) * vq))
    return classes


def preprocess_poly(system: ConstraintSystem) -> list[ConstraintSystem]:
    """Convert small power atoms, then merge redundant positive pairs.

    Negative atoms redundant with a positive one are left for pointwise
    filtering unless the correlation provably covers the positive's whole
    witness lattice, in which case the system collapses to finitely many
    candidate points (or to nothing).
    """
    if system.resolved is not None:
        return [system]

    def convert(atom):
        if isinstance(atom, PowerAtom) and atom.k in (2, 3):
            return PolyAtom(atom.k, 0, atom.a, atom.b, 1, 0)
        return atom

    system.positives = [convert(a) for a in system.positives]
    system.negatives = [convert(a) for a in system.negatives]

    for neg in system.negatives:
        if neg in system.positives:
            system.log("poly:direct-contradiction")
            return []

    poly_pos = [a for a in system.positives if isinstance(a, PolyAtom)]
    for i, P in enumerate(poly_pos):
        for Q in poly_pos[i + 1 :]:
            data = poly_redundant(P, Q)
            if data is None:
                continue
            if data.kind == "point":
                base = system.clone()
                base.positives = [a for a in system.positives if a is not P and a is not Q]
                out = []
                for u1, u2 in data.points:
                    if u1 % P.stride != P.offset or u2 % Q.stride != Q.offset:
                        continue
                    v1 = u1**P.degree + P.lin * u1
                    if (v1 - P.b) % P.a:
                        continue
                    x = (v1 - P.b) // P.a
                    if (u2**Q.degree + Q.lin * u2) != Q.a * x + Q.b:
                        continue
                    cand = base.clone()
                    if system_holds(cand, x):
                        cand.resolved = Verdict.sat(cand.to_original(x))
                        cand.resolved_points = (x,)
                        cand.log("poly-redundant:point-only")
                        out.append(cand)
                return out
            branches = _redundant_pair_systems(system, P, Q, data)
            result = []
            for b in branches:
                result.extend(preprocess_poly(b))
            return result

    # Positive-vs-negative redundancy: detect full coverage (contradiction
    # up to finitely many points); otherwise pointwise filtering suffices.
    for P in poly_pos:
        for Qn in [a for a in system.negatives if isinstance(a, PolyAtom)]:
            data = poly_redundant(P, Qn)
            if data is None or data.kind == "point":
                continue
            classes = _branch_residues(P, Qn, data)
            if not classes:
                continue
            L = P.stride
            for off, mod in classes:
                L = L * mod // math.gcd(L, mod)
            p_res = set(range(P.offset % P.stride, L, P.stride))
            covered = set()
            for off, mod in classes:
                covered.update(range(off % mod, L, mod))
            if p_res <= covered:
                # The negative rules out every branch witness; only the
                # conic points may survive, and they satisfy the inner
                # predicate, so they are excluded as well.
                system.log("poly-redundant:negative-covers-positive")
                return []
    return [system]


# ---------------------------------------------------------------------------
# Positive solution sets.


def _atom_poly(atom: PolyAtom):
    if atom.degree == 2:
        return [Fraction(0), Fraction(0), Fraction(1)]
    return [Fraction(0), Fraction(atom.lin), Fraction(0), Fraction(1)]


def _atom_value(atom: PolyAtom, u: int) -> int:
    return u**atom.degree + atom.lin * u


def _atom_residues_empty(atom: PolyAtom) -> bool:
    a = atom.a
    comp = _pcompose(_atom_poly(atom), [Fraction(atom.offset), Fraction(atom.stride)])
    vals = {int(_peval(comp, u)) % a for u in range(a)}
    return atom.b % a not in vals


def _single_poly_images(atom: PolyAtom, lower, case: str) -> SolutionSet:
    a, b = atom.a, atom.b
    F = _pcompose(_atom_poly(atom), [Fraction(atom.offset), Fraction(atom.stride)])
    residues = [u for u in range(a) if int(_peval(F, u)) % a == b % a]
    if not residues:
        return EmptySolutions(lower, case + ":empty-residues", True)
    polys = []
    for u in residues:
        comp = _pcompose(F, [Fraction(u), Fraction(a)])
        comp[0] -= b
        comp = _pscale(comp, Fraction(1, a))
        polys.append(ImagePoly(tuple(comp)))
    return PolyImages(lower, case + ":images", True, polys=tuple(polys))


def _quad_residue_classes(atom: PolyAtom) -> list[tuple[int, int]]:
    """Classes (offset, modulus) of witnesses u with u^2 = b (mod a) and the stride."""
    out = []
    for s in range(atom.a):
        if (s * s - atom.b) % atom.a:
            continue
        merged = crt_extended([ResidueClass(atom.a, s), ResidueClass(atom.stride, atom.offset)])
        if merged is not None:
            out.append((merged.residue, merged.modulus))
    return sorted(set(out))


def _quad_pair_solution(first: PolyAtom, second: PolyAtom, lower, options, label: str) -> SolutionSet:
    """Two quadratic atoms: divisor factorization or Pell orbits."""
    a1, b1, a2, b2 = first.a, first.b, second.a, second.b
    n = a1 * a2
    E = math.isqrt(n)
    N = a2 * (a2 * b1 - a1 * b2)
    if E * E == n:
        vals = set()
        if N == 0:
            if b2 % a2 == 0 and a1 * (-b2 // a2) + b1 == 0:
                x = -b2 // a2
                if first.holds(x) and second.holds(x):
                    vals.add(x)
        else:
            for d1, d2 in divisor_pairs(N):
                if (d1 + d2) % 2 or (d2 - d1) % (2 * E):
                    continue
                z = (d2 - d1) // (2 * E)
                if (z * z - b2) % a2:
                    continue
                x = (z * z - b2) // a2
                if first.holds(x) and second.holds(x):
                    vals.add(x)
        return FiniteSolutions(lower, label + ":divisor", True, values=tuple(sorted(vals)))
    if N == 0:
        vals = set()
        if b2 % a2 == 0 and a1 * (-b2 // a2) + b1 == 0:
            x = -b2 // a2
            if first.holds(x) and second.holds(x):
                vals.add(x)
        return FiniteSolutions(lower, label + ":proportional-point", True, values=tuple(sorted(vals)))
    c1 = _quad_residue_classes(first)
    c2 = _quad_residue_classes(second)
    if not c1 or not c2:
        return EmptySolutions(lower, label + ":empty-residues", True)
    sols = solve_generalized(n, N)
    if not sols.classes:
        return EmptySolutions(lower, label + ":pell-empty", True)
    entries = []
    for cls in sols.classes:
        w0, z0 = cls.fundamental
        w_i, z_i = cls.rep
        wseq = Lrbs((2 * w0, -1), (w_i, w_i * w0 + n * z_i * z0))
        zseq = Lrbs((2 * w0, -1), (z_i, z_i * w0 + w_i * z0))
        idx_w = IndexSet.nothing()
        for off, mod in c1:
            for sgn in (1, -1):
                idx_w = idx_w.union(filter_congruence(wseq, a2 * mod, (sgn * a2 * off) % (a2 * mod)))
        idx_z = IndexSet.nothing()
        for off, mod in c2:
            for sgn in (1, -1):
                idx_z = idx_z.union(filter_congruence(zseq, mod, (sgn * off) % mod))
        idx = idx_w.intersect(idx_z)
        if idx.is_empty():
            continue
        entries.append(
            LrbsEntry(zseq, wseq, idx, PowerValueMap(2, a2, b2), pell_class=cls, component="z")
        )
    if not entries:
        return EmptySolutions(lower, label + ":pell-filtered-empty", True)
    return LrbsUnion(lower, label + ":pell", True, entries=tuple(entries))


@dataclass(frozen=True)
class CurveCaseData:
    """Derived data for a quadratic/cubic interaction.

    The scaled curve aq*g = (alpha*u + beta)^2 * (gamma*u + delta) gives
    v = ac*u_quad / (alpha*u_cub + beta) with v^2 = ac*(gamma*u_cub + delta);
    x is a degree-6 image of v.  For a second quadratic the same data pairs
    into the Pell equation gamma3*v1^2 - gamma1*v3^2 = ac*(gamma3*delta1 -
    gamma1*delta3).
    """

    split: tuple[int, int, int, int]
    image: tuple[Fraction, ...]       # x as a polynomial in v
    witness: tuple[Fraction, ...]     # u_quad as a polynomial in v
    modulus: int
    residues: tuple[int, ...]
    quad: PolyAtom
    cubic: PolyAtom


def _square_split(P) -> tuple[int, int, int, int] | None:
    """Integer split P = (alpha*u + beta)^2 (gamma*u + delta), or None."""
    Pq = [Fraction(c) for c in P]
    d = _pgcd(Pq, _pderiv(Pq))
    if len(d) <= 1:
        return None
    if len(d) == 2:
        rho = -d[0] / d[1]
    else:
        # Triple root: the gcd is a square of a linear factor.
        dd = _pgcd(d, _pderiv(d))
        rho = -dd[0] / dd[1]
    alpha, beta = rho.denominator, -rho.numerator
    sq = [Fraction(beta * beta), Fraction(2 * alpha * beta), Fraction(alpha * alpha)]
    quot, rem = _pdivmod(Pq, sq)
    if rem or len(quot) != 2:
        return None
    gamma, delta = quot[1], quot[0]
    if gamma.denominator != 1 or delta.denominator != 1:
        return None
    gamma, delta = int(gamma), int(delta)
    if gamma <= 0:
        # Positive leading coefficients force gamma > 0; anything else
        # means the double-root structure is absent.
        return None
    check = _pmul(sq, [Fraction(delta), Fraction(gamma)])
    if _trim(_padd(check, _pscale(Pq, -1))):
        return None
    return alpha, beta, gamma, delta


def _derive_curve_case(quad: PolyAtom, cubic: PolyAtom, cap: int = 200_000) -> CurveCaseData | None:
    """Double-root data for the pair (quadratic, cubic), or None (squarefree/oversized)."""
    aq, bq = quad.a, quad.b
    ac, bc = cubic.a, cubic.b
    P = [Fraction(ac * bq - aq * bc), Fraction(aq * cubic.lin), Fraction(0), Fraction(aq)]
    split = _square_split(P)
    if split is None:
        return None
    alpha, beta, gamma, delta = split
    u2_of_v = [Fraction(-delta, gamma), Fraction(0), Fraction(1, ac * gamma)]
    image = _pcompose(_atom_poly(cubic), u2_of_v)
    image[0] -= bc
    image = _pscale(image, Fraction(1, ac))
    witness = _pscale(
        [Fraction(0), Fraction(ac * (beta * gamma - alpha * delta)), Fraction(0), Fraction(alpha)],
        Fraction(1, ac * ac * gamma),
    )
    m1 = ac * gamma * cubic.stride
    m2 = ac * ac * gamma * quad.stride
    m3 = aq * ac * ac * gamma
    modulus = m1
    for m in (m2, m3):
        modulus = modulus * m // math.gcd(modulus, m)
    if modulus > cap:
        return None
    residues = []
    for rho in range(modulus):
        t1 = rho * rho - ac * delta
        if t1 % (ac * gamma):
            continue
        u2 = t1 // (ac * gamma)
        if u2 % cubic.stride != cubic.offset:
            continue
        t2 = alpha * rho**3 + ac * (beta * gamma - alpha * delta) * rho
        if t2 % (ac * ac * gamma):
            continue
        u1 = t2 // (ac * ac * gamma)
        if u1 % quad.stride != quad.offset:
            continue
        if (u1 * u1 - bq) % aq:
            continue
        residues.append(rho)
    return CurveCaseData(split, tuple(image), tuple(witness), modulus, tuple(residues), quad, cubic)


def _curve_extra_points(data: CurveCaseData) -> tuple[int, ...]:
    """Solutions at the pinch point alpha*u + beta = 0, outside the v-chart."""
    alpha, beta, gamma, delta = data.split
    if (-beta) % alpha:
        return ()
    u2 = -beta // alpha
    if u2 % data.cubic.stride != data.cubic.offset:
        return ()
    v = _atom_value(data.cubic, u2)
    if (v - data.cubic.b) % data.cubic.a:
        return ()
    x = (v - data.cubic.b) // data.cubic.a
    return (x,) if data.quad.holds(x) else ()


def _bounded_curve(
    primary: PolyAtom, rest, lower, options: SolveOptions, label: str
) -> FiniteSolutions:
    """Enumerate the primary atom's parameter up to the bound; exact filter."""
    H = options.enum_bound
    vals = set()
    u = primary.offset
    while u <= H:
        for uu in (u, primary.offset - primary.stride - (u - primary.offset)):
            if abs(uu) > H:
                continue
            v = _atom_value(primary, uu)
            if (v - primary.b) % primary.a == 0:
                x = (v - primary.b) // primary.a
                if all(at.holds(x) for at in rest):
                    vals.add(x)
        u += primary.stride
    return FiniteSolutions(lower, label, False, values=tuple(sorted(vals)))


def _pair_mixed(quad: PolyAtom, cubic: PolyAtom, lower, options, label: str) -> SolutionSet:
    data = _derive_curve_case(quad, cubic)
    if data is None:
        return _bounded_curve(cubic, [quad], lower, options, label + ":elliptic:bounded")
    extras = _curve_extra_points(data)
    polys = []
    for rho in data.residues:
        comp = _pcompose(list(data.image), [Fraction(rho), Fraction(data.modulus)])
        polys.append(ImagePoly(tuple(comp)))
    if not polys and not extras:
        return EmptySolutions(lower, label + ":double-root:empty", True)
    return PolyImages(
        lower, label + ":double-root-images", True, polys=tuple(polys), extra_values=extras
    )


def _triple_4c(
    quad1: PolyAtom, cubic: PolyAtom, quad3: PolyAtom, lower, options, label: str
) -> SolutionSet | None:
    """One cubic against two quadratics: the derived Pell structure, or None."""
    d1 = _derive_curve_case(quad1, cubic)
    d3 = _derive_curve_case(quad3, cubic)
    if d1 is None or d3 is None:
        return None
    ac = cubic.a
    _, _, g1, dl1 = d1.split
    _, _, g3, dl3 = d3.split
    C = ac * (g3 * dl1 - g1 * dl3)
    if C == 0:
        return None
    n4 = g1 * g3
    E = math.isqrt(n4)
    if E * E == n4:
        vals = set(_curve_extra_points(d1)) | set(_curve_extra_points(d3))
        for a, b in divisor_pairs(g3 * C):
            if (a + b) % 2 or (b - a) % (2 * E):
                continue
            Wp = (a + b) // 2
            if Wp % g3:
                continue
            v1 = Wp // g3
            x = _peval(list(d1.image), v1)
            if x.denominator != 1:
                continue
            x = int(x)
            if quad1.holds(x) and quad3.holds(x) and cubic.holds(x):
                vals.add(x)
        vals = {x for x in vals if quad1.holds(x) and quad3.holds(x) and cubic.holds(x)}
        return FiniteSolutions(lower, label + ":4c-divisor", True, values=tuple(sorted(vals)))
    sols = solve_generalized(n4, g3 * C)
    extras = tuple(
        x
        for x in sorted(set(_curve_extra_points(d1)) | set(_curve_extra_points(d3)))
        if quad1.holds(x) and quad3.holds(x) and cubic.holds(x)
    )
    if not sols.classes:
        if extras:
            return FiniteSolutions(lower, label + ":4c-extras", True, values=extras)
        return EmptySolutions(lower, label + ":4c-empty", True)
    # W' = g3*v1 must land on residues where v1 passes the pair-1 checks and
    # Z' = v3 on residues passing the pair-3 checks.
    MW = g3 * d1.modulus
    w_res = sorted({(s * g3 * rho) % MW for rho in d1.residues for s in (1, -1)})
    MZ = d3.modulus
    z_res = sorted({(s * rho) % MZ for rho in d3.residues for s in (1, -1)})
    if not w_res or not z_res:
        if extras:
            return FiniteSolutions(lower, label + ":4c-extras", True, values=extras)
        return EmptySolutions(lower, label + ":4c-empty", True)
    entries = []
    for cls in sols.classes:
        w0, z0 = cls.fundamental
        w_i, z_i = cls.rep
        wseq = Lrbs((2 * w0, -1), (w_i, w_i * w0 + n4 * z_i * z0))
        zseq = Lrbs((2 * w0, -1), (z_i, z_i * w0 + w_i * z0))
        idx_w = IndexSet.nothing()
        for r in w_res:
            idx_w = idx_w.union(filter_congruence(wseq, MW, r))
        idx_z = IndexSet.nothing()
        for r in z_res:
            idx_z = idx_z.union(filter_congruence(zseq, MZ, r))
        idx = idx_w.intersect(idx_z)
        if idx.is_empty():
            continue
        entries.append(
            LrbsEntry(
                wseq,
                zseq,
                idx,
                PolyValueMap(ImagePoly(d1.image), g3),
                pell_class=cls,
                component="w",
            )
        )
    if not entries:
        if extras:
            return FiniteSolutions(lower, label + ":4c-extras", True, values=extras)
        return EmptySolutions(lower, label + ":4c-filtered-empty", True)
    return LrbsUnion(lower, label + ":4c-pell", True, entries=tuple(entries), extra_values=extras)


def solve_positive_poly(
    positives, lower: int | None = None, options: SolveOptions = DEFAULT_OPTIONS
) -> SolutionSet:
    """Exact structure of the integers satisfying all positive atoms.

    Atoms are depressed PolyAtoms (plus possibly power atoms of exponent
    >= 4, which are handled by a bounded pairing).  Preconditions mirror
    the power case: pairwise non-redundant, a > 0.
    """
    polys = sorted(a for a in positives if isinstance(a, PolyAtom))
    powers = sorted(a for a in positives if isinstance(a, PowerAtom))
    if any(a.a <= 0 for a in positives):
        raise ValueError("positive atoms must have a > 0 after normalization")
    for atom in polys:
        if _atom_residues_empty(atom):
            return EmptySolutions(lower, "poly:empty-residues", True)
    for atom in powers:
        if not any(pow(u, atom.k, atom.a) == atom.b % atom.a for u in range(atom.a)):
            return EmptySolutions(lower, "poly:empty-residues", True)
    if powers:
        if not polys:
            raise ValueError("pure power systems belong to the power solver")
        primary = polys[0]
        rest = polys[1:] + powers
        return _bounded_curve(primary, rest, lower, options, "poly:mixed-power:bounded")
    l = len(polys)
    if l == 0:
        return AllSolutions(lower, "poly:none", True)
    if l == 1:
        return _single_poly_images(polys[0], lower, "poly:single")
    degs = tuple(a.degree for a in polys)
    if l == 2:
        if degs == (2, 2):
            return _quad_pair_solution(polys[0], polys[1], lower, options, "poly:pair")
        if degs == (2, 3):
            return _pair_mixed(polys[0], polys[1], lower, options, "poly:pair")
        return _bounded_curve(polys[1], [polys[0]], lower, options, "poly:pair:cubic-curve:bounded")
    if l == 3 and degs == (2, 2, 3):
        sol = _triple_4c(polys[0], polys[2], polys[1], lower, options, "poly:triple")
        if sol is not None:
            return sol
        # Prefer the quadratic whose pairing with the cubic is squarefree
        # (a genuinely bounded elliptic enumeration).
        quad = polys[0] if _derive_curve_case(polys[0], polys[2]) is None else polys[1]
        other = polys[1] if quad is polys[0] else polys[0]
        mixed = _pair_mixed(quad, polys[2], lower, options, "poly:triple")
        return _filter_by_atoms(mixed, [other], options, mixed.case + ":filtered")
    if l >= 3 and degs[: 2] == (2, 2):
        base = _quad_pair_solution(polys[0], polys[1], lower, options, "poly:multi")
        return _filter_by_atoms(base, polys[2:], options, base.case + ":filtered")
    # At least two cubics: bound the last cubic's parameter and filter.
    primary = polys[-1]
    rest = [a for a in polys if a is not primary]
    return _bounded_curve(primary, rest, lower, options, "poly:multi:bounded")


# ---------------------------------------------------------------------------
# The exceptional negative case: removing Pell indices in progressions.


def _phi_coeffs(data: CurveCaseData):
    """u_quad = phi(v) with phi odd cubic: returns (c3, c1, denom) integers."""
    alpha, beta, gamma, delta = data.split
    ac = data.cubic.a
    return alpha, ac * (beta * gamma - alpha * delta), ac * ac * gamma


def _phi_eval(data: CurveCaseData, v: int) -> Fraction:
    c3, c1, den = _phi_coeffs(data)
    return Fraction(c3 * v**3 + c1 * v, den)


def _closed_form_unit(cls) -> tuple[QuadNum, QuadNum, QuadNum]:
    """(eps, Bz1, Bz2) over the squarefree kernel, for the z-component."""
    _, _, B1, B2 = cls.closed_form()
    w0, z0 = cls.fundamental
    eps = QuadNum(Fraction(w0), Fraction(z0), cls.n)
    return eps.reduce_radicand(), B1.reduce_radicand(), B2.reduce_radicand()


def _match_batch(
    s_entry: LrbsEntry,
    sp_entry: LrbsEntry,
    data: CurveCaseData,
) -> IndexSet:
    """Indices k of the S-sequence matched by the discard parametrization."""
    matched = IndexSet.nothing()
    s_cls, sp_cls = s_entry.pell_class, sp_entry.pell_class
    if s_cls is None or sp_cls is None:
        return matched
    dS, _ = squarefree_kernel(s_cls.n)
    d4, _ = squarefree_kernel(sp_cls.n)
    if dS != d4 or dS == 1:
        return matched
    w0, z0 = fundamental(dS)
    epsD = QuadNum(Fraction(w0), Fraction(z0), dS)
    epsS, B1, B2 = _closed_form_unit(s_cls)
    eps4, Bp1, Bp2 = _closed_form_unit(sp_cls)
    eS = unit_exponent(epsS, epsD)
    e4 = unit_exponent(eps4, epsD)
    if not eS or not e4 or eS < 0 or e4 < 0:
        return matched
    c3, c1, den = _phi_coeffs(data)
    # phi(v3_m) = C3 eps^{3m} + C1 eps^{m} + C-1 eps^{-m} + C-3 eps^{-3m}
    C3 = Bp1 * Bp1 * Bp1 * Fraction(c3, den)
    if C3.is_zero():
        return matched
    zseq = s_entry.value_seq
    vseq = sp_entry.value_seq if sp_entry.component == "z" else sp_entry.partner_seq
    for sign in (1, -1):
        for orientation in (1, -1):
            target = C3 * sign
            base = B1 if orientation > 0 else B2
            if base.is_zero():
                continue
            ratio = target * base.inverse()
            c0 = unit_exponent(ratio, epsD)
            if c0 is None:
                continue
            # orientation +: eS*k = 3*e4*m + c0; orientation -: -eS*k = 3*e4*m + c0
            A = eS * orientation
            B = 3 * e4
            g = math.gcd(abs(A), B)
            if c0 % g:
                continue
            sol = _lin_congruence(A, c0, B)
            if sol is None:
                continue
            k0, kstep = sol
            kstep = B // g
            k0 = k0 % kstep
            m0 = (A * k0 - c0) // B
            mstep = A // g
            ok = True
            for t in range(-3, 5):
                k = k0 + kstep * t
                m = m0 + mstep * t
                lhs = Fraction(zseq.eval(k))
                rhs = sign * _phi_eval(data, vseq.eval(m))
                if lhs != rhs:
                    ok = False
                    break
            if not ok:
                continue
            # Restrict to m-values allowed by the discard set's own filters.
            if sp_entry.indices.is_empty():
                continue
            if sp_entry.indices.added or sp_entry.indices.removed:
                # Index sets with point corrections never arise from the
                # congruence filters; skip rather than risk over-removal.
                continue
            tset = IndexSet.nothing()
            L = sp_entry.indices._lcm()
            for res in sp_entry.indices._residues(L):
                sol_t = _lin_congruence(mstep, res - m0, L)
                if sol_t is not None:
                    tset = tset.union(IndexSet.from_residues(sol_t[1], [sol_t[0]]))
            matched = matched.union(tset.map_affine(kstep, k0))
    return matched


def subtract_discarded(S: LrbsUnion, discards) -> LrbsUnion:
    """Remove from S the index progressions matched by each discard dataset.

    `discards` holds (LrbsUnion, CurveCaseData) pairs describing the
    solutions of S's pair of quadratics joined with a cubic negative.
    Matches are verified exactly (consecutive-sample identity) before any
    index is removed, so the subtraction never over-approximates.
    """
    new_entries = []
    for entry in S.entries:
        idx = entry.indices
        for sp_set, data in discards:
            for sp_entry in sp_set.entries:
                matched = _match_batch(entry, sp_entry, data)
                if not matched.is_empty():
                    idx = idx.subtract(matched)
        new_entries.append(
            LrbsEntry(
                entry.value_seq,
                entry.partner_seq,
                idx,
                entry.vmap,
                pell_class=entry.pell_class,
                component=entry.component,
            )
        )
    return LrbsUnion(
        S.lower, S.case + ":discard-subtracted", S.complete,
        entries=tuple(new_entries), extra_values=S.extra_values,
    )


def _try_discard_sets(system: ConstraintSystem, quads, options):
    """(LrbsUnion, CurveCaseData) pairs for cubic negatives forming Pell discards."""
    out = []
    for neg in system.negatives:
        if not isinstance(neg, PolyAtom) or neg.degree != 3:
            continue
        sol = _triple_4c(quads[0], neg, quads[1], None, options, "discard")
        if isinstance(sol, LrbsUnion):
            # The S entries are parametrized by the second quadratic's
            # witness sequence, so the matcher needs that side's data.
            d3 = _derive_curve_case(quads[1], neg)
            if d3 is not None:
                out.append((sol, d3))
    return out


# ---------------------------------------------------------------------------
# Full decision procedure.


def _negatives_pass(system: ConstraintSystem, x: int) -> bool:
    return not any(atom.holds(x) for atom in system.negatives)


def _decide_one_poly(system: ConstraintSystem, options: SolveOptions) -> Verdict:
    if system.resolved is not None:
        return system.resolved
    sol = solve_positive_poly(system.positives, system.lower, options)
    system.log(sol.case)
    if isinstance(sol, EmptySolutions):
        return Verdict.unsat() if sol.complete else Verdict.unknown(sol.case, options.enum_bound)
    if isinstance(sol, AllSolutions):
        from .power_solver import _search_all

        return _search_all(system, options, system.trace)
    if isinstance(sol, FiniteSolutions):
        survivors = [
            x
            for x in sol.values
            if (system.lower is None or x > system.lower)
            and x not in system.excluded
            and _negatives_pass(system, x)
        ]
        if survivors:
            system.log("finite:witness")
            x = min(survivors, key=lambda v: (abs(v), v))
            return Verdict.sat(system.to_original(x))
        if sol.complete:
            system.log("finite:exhausted")
            return Verdict.unsat()
        return Verdict.unknown(f"bounded enumeration ({sol.case}) found no witness", options.enum_bound)
    if isinstance(sol, LrbsUnion) and system.negatives:
        quads = [a for a in system.positives if isinstance(a, PolyAtom) and a.degree == 2]
        if len(quads) == 2:
            discards = _try_discard_sets(system, sorted(quads), options)
            if discards:
                sol = subtract_discarded(sol, discards)
                system.log("discard:index-progressions")
                survivors_exist = any(not e.indices.is_empty() for e in sol.entries)
                extras = [
                    x
                    for x in sol.extra_values
                    if (system.lower is None or x > system.lower)
                    and x not in system.excluded
                    and _negatives_pass(system, x)
                ]
                if extras:
                    x = min(extras, key=lambda v: (abs(v), v))
                    return Verdict.sat(system.to_original(x))
                if not survivors_exist:
                    system.log("discard:all-indices-removed")
                    return Verdict.unsat()
    from .power_solver import _search_stream

    return _search_stream(system, sol, options, system.trace)


def decide_poly(system: ConstraintSystem, options: SolveOptions = DEFAULT_OPTIONS) -> Verdict:
    """Three-valued satisfiability of a normalized system with polynomial atoms."""
    work = system.clone()
    verdicts = []
    reported = False
    for power_sub in power_preprocess(work):
        subs = preprocess_poly(power_sub)
        for sub in subs:
            v = _decide_one_poly(sub, options)
            system.trace.extend(sub.trace)
            verdicts.append(v)
            reported = True
        if not subs:
            system.trace.extend(power_sub.trace)
            reported = True
    if not reported:
        system.trace.extend(work.trace)
    final = _combine(verdicts)
    if final.is_sat:
        _verify_poly_witness(system, final.witness)
    return final


def _verify_poly_witness(system: ConstraintSystem, x: int) -> None:
    m, r = system.substitution
    v = -x if system.sign_flipped else x
    if (v - r) % m:
        raise AssertionError(f"witness {x} does not live on the substitution lattice")
    work = system.clone()
    work.positives = [
        PolyAtom(a.k, 0, a.a, a.b, 1, 0) if isinstance(a, PowerAtom) and a.k in (2, 3) else a
        for a in work.positives
    ]
    if not system_holds(work, (v - r) // m):
        raise AssertionError(f"witness {x} fails direct evaluation")
