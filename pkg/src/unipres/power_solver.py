"""Decision procedure for systems of perfect-power constraints.

A normalized system holds one lower bound x > c and positive/negative
atoms "a*x + b is a k-th power" with a > 0.  Preprocessing discards
redundant atoms and coalesces similar positive ones; the positive
solution set is then computed exactly by case analysis on the number of
constraints (everything, polynomial images, Pell orbits, divisor
factorizations, or a bounded enumeration), and negative atoms are
filtered pointwise along a deterministic witness scan.

Verdicts are three-valued.  Paths whose finiteness rests on effective but
astronomically-large bounds in the literature enumerate an auxiliary
unknown up to a configurable bound and answer Unknown instead of an
uncertified Unsat; Pell-based, divisor-based, and residue-emptiness paths
are certified complete.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from ._ast import ConstraintSystem, PolyAtom, PowerAtom, Verdict, system_holds
from .lrbs import IndexSet, Lrbs, filter_congruence, growth_rank
from .numtheory import (
    crt_extended,
    ResidueClass,
    divisor_pairs,
    factor,
    floor_root,
    integer_roots,
    is_kth_power,
    kth_power_residues,
    kth_root,
)
from .pell import PellClass, solve_generalized

__all__ = [
    "Verdict",
    "SolveOptions",
    "ImagePoly",
    "LrbsEntry",
    "PowerValueMap",
    "PolyValueMap",
    "SolutionSet",
    "AllSolutions",
    "PolyImages",
    "LrbsUnion",
    "FiniteSolutions",
    "EmptySolutions",
    "is_redundant",
    "coalesce_similar",
    "preprocess",
    "solve_positive",
    "decide",
]


@dataclass(frozen=True)
class SolveOptions:
    """Bounds for the honest three-valued paths.

    enum_bound: range of the auxiliary unknown in bounded curve enumerations.
    scan_cap: candidates examined during a witness scan before giving up.
    value_bits: bit-size ceiling for exponentially growing candidates.
    """

    enum_bound: int = 10**6
    scan_cap: int = 10**6
    value_bits: int = 20_000

    def __post_init__(self) -> None:
        if self.enum_bound < 1 or self.scan_cap < 1 or self.value_bits < 8:
            raise ValueError("bounds must be positive")


DEFAULT_OPTIONS = SolveOptions()


# ---------------------------------------------------------------------------
# Redundancy and similarity (power atoms).


def is_redundant(c1: PowerAtom, c2: PowerAtom) -> bool | None:
    """Truth value of c1 forced by the positive truth of c2, or None.

    c1 = Z^k(c x + d) is redundant with respect to c2 = Z^j(a x + b) when
    k | j and a*d == b*c; the forced value is whether a*c^(k-1) is itself
    a perfect k-th power.  (At the single point where both terms vanish
    the atom is trivially true; callers patch that point separately.)
    """
    k, c, d = c1.k, c1.a, c1.b
    j, a, b = c2.k, c2.a, c2.b
    if j % k != 0 or a * d != b * c:
        return None
    return is_kth_power(a * c ** (k - 1), k)


def similar(c1: PowerAtom, c2: PowerAtom) -> bool:
    return c1.a * c2.b == c1.b * c2.a


def coalesce_similar(atoms: list[PowerAtom]) -> PowerAtom | None:
    """Single atom equivalent to a conjunction of similar positive atoms.

    Returns None when the valuation congruences clash, i.e. the atoms are
    never simultaneously satisfiable away from their common zero point.
    """
    if not atoms:
        raise ValueError("need at least one atom")
    if len(atoms) == 1:
        return atoms[0]
    for other in atoms[1:]:
        if not similar(atoms[0], other):
            raise ValueError("atoms must be pairwise similar")
    g = math.gcd(atoms[0].a, atoms[0].b)
    a, b = atoms[0].a // g, atoms[0].b // g
    K = 1
    for atom in atoms:
        K = K * atom.k // math.gcd(K, atom.k)
    interesting: set[int] = set()
    for atom in atoms:
        interesting.update(p for p, _ in factor(atom.a).factors)
    multiplier = 1
    for p in sorted(interesting):
        classes = []
        vp_a = _val(p, a)
        for atom in atoms:
            classes.append(ResidueClass(atom.k, vp_a - _val(p, atom.a)))
        merged = crt_extended(classes)
        if merged is None:
            return None
        r_p = (-merged.residue) % K
        multiplier *= p**r_p
    return PowerAtom(K, a * multiplier, b * multiplier)


def _val(p: int, n: int) -> int:
    e = 0
    n = abs(n)
    while n % p == 0 and n:
        n //= p
        e += 1
    return e


# ---------------------------------------------------------------------------
# System preprocessing: dedup, discard redundant, coalesce, discard again.


def _zero_point(atom: PowerAtom) -> int | None:
    return -atom.b // atom.a if atom.b % atom.a == 0 else None


def _resolve_at_point(system: ConstraintSystem, y0: int | None, note: str) -> list[ConstraintSystem]:
    """The system collapses to the single candidate y0; check it exactly."""
    system.log(note)
    if y0 is not None and system_holds(system, y0):
        system.resolved = Verdict.sat(system.to_original(y0))
        system.resolved_points = (y0,)
        return [system]
    return []


def preprocess(system: ConstraintSystem) -> list[ConstraintSystem]:
    """Discard redundant atoms, coalesce similar positives, discard again.

    Operates on power atoms only (polynomial atoms pass through untouched;
    `poly_solver.preprocess_poly` handles their redundancy).  May resolve
    the system outright; returns the surviving disjuncts.
    """
    if system.resolved is not None:
        return [system]
    for atoms in (system.positives, system.negatives):
        seen = set()
        atoms[:] = [a for a in atoms if not (a in seen or seen.add(a))]

    changed = True
    while changed:
        changed = False
        power_pos = [a for a in system.positives if isinstance(a, PowerAtom)]
        # Discard atoms whose truth is forced by some positive atom.
        for ref in power_pos:
            for target in list(system.positives):
                if target is ref or not isinstance(target, PowerAtom):
                    continue
                forced = is_redundant(target, ref)
                if forced is None:
                    continue
                if forced:
                    system.positives.remove(target)
                    system.log(f"redundant:drop-positive:{target.k}:{target.a}:{target.b}")
                else:
                    return _resolve_at_point(system, _zero_point(ref), "redundant:forced-false-positive")
                changed = True
            for target in list(system.negatives):
                if not isinstance(target, PowerAtom):
                    continue
                forced = is_redundant(target, ref)
                if forced is None:
                    continue
                if forced:
                    system.log("redundant:negative-contradiction")
                    return []
                system.negatives.remove(target)
                y0 = _zero_point(ref)
                if y0 is not None:
                    system.excluded.append(y0)
                system.log(f"redundant:drop-negative:{target.k}:{target.a}:{target.b}")
                changed = True
            if changed:
                break
        if changed:
            continue
        # Coalesce groups of similar positive atoms.
        groups: dict[Fraction, list[PowerAtom]] = {}
        for atom in power_pos:
            groups.setdefault(Fraction(atom.b, atom.a), []).append(atom)
        for ratio, group in sorted(groups.items()):
            if len(group) < 2:
                continue
            merged = coalesce_similar(group)
            for atom in group:
                system.positives.remove(atom)
            if merged is None:
                y0 = -ratio if ratio.denominator == 1 else None
                return _resolve_at_point(
                    system, int(y0) if y0 is not None else None, "coalesce:incompatible"
                )
            system.positives.append(merged)
            system.log(f"coalesce:Z^{merged.k}({merged.a}x+{merged.b})")
            changed = True
            break
    return [system]


# ---------------------------------------------------------------------------
# Solution-set representations.


@dataclass(frozen=True)
class ImagePoly:
    """Integer-valued polynomial given by ascending rational coefficients."""

    coeffs: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeffs", tuple(Fraction(c) for c in self.coeffs))
        if len(self.coeffs) < 3 or self.coeffs[-1] <= 0:
            raise ValueError("image polynomials have degree >= 2 and positive leading coefficient")
        for t in range(self.degree + 1):
            if self.eval_exact(t).denominator != 1:
                raise ValueError("polynomial is not integer-valued")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def eval_exact(self, t: int) -> Fraction:
        v = Fraction(0)
        for c in reversed(self.coeffs):
            v = v * t + c
        return v

    def eval(self, t: int) -> int:
        v = self.eval_exact(t)
        if v.denominator != 1:
            raise ArithmeticError(f"non-integer image at t={t}")
        return int(v)

    def contains(self, x: int) -> bool:
        cs = list(self.coeffs)
        cs[0] -= x
        return bool(integer_roots(cs))

    def turn_bound(self) -> int:
        """|f| is strictly increasing in |t| at integers beyond this radius."""
        lcm = 1
        for c in self.coeffs:
            lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
        ints = [int(c * lcm) for c in self.coeffs]
        deriv = [i * ints[i] for i in range(1, len(ints))]

        def cauchy(cs):
            while cs and cs[-1] == 0:
                cs = cs[:-1]
            if len(cs) <= 1:
                return 1
            return 2 + max(abs(c) for c in cs[:-1]) // abs(cs[-1])

        return max(cauchy(ints), cauchy(deriv))


@dataclass(frozen=True)
class PowerValueMap:
    """x = (v**k - b) / a along a solution sequence v."""

    k: int
    a: int
    b: int

    def apply(self, v: int) -> int | None:
        num = v**self.k - self.b
        return num // self.a if num % self.a == 0 else None

    def turn(self) -> int:
        return floor_root(abs(self.b), self.k) + 2

    def floor_abs(self, v_abs: int) -> int:
        if v_abs < self.turn():
            return 0
        return max(0, (v_abs**self.k - abs(self.b)) // self.a)


@dataclass(frozen=True)
class PolyValueMap:
    """x = h(v / divisor) along a solution sequence v."""

    poly: ImagePoly
    divisor: int

    def apply(self, v: int) -> int | None:
        if v % self.divisor != 0:
            return None
        val = self.poly.eval_exact(v // self.divisor)
        return int(val) if val.denominator == 1 else None

    def turn(self) -> int:
        return self.poly.turn_bound() * self.divisor + self.divisor

    def floor_abs(self, v_abs: int) -> int:
        t = v_abs // self.divisor
        if t <= self.poly.turn_bound():
            return 0
        lo = min(abs(self.poly.eval_exact(t)), abs(self.poly.eval_exact(-t)))
        return max(0, math.floor(lo))


@dataclass(frozen=True)
class LrbsEntry:
    """One Pell class contributing x = map(value_seq) over filtered indices."""

    value_seq: Lrbs
    partner_seq: Lrbs | None
    indices: IndexSet
    vmap: PowerValueMap | PolyValueMap
    pell_class: PellClass | None = None
    component: str = "z"

    def member_at(self, n: int) -> int | None:
        if n not in self.indices:
            return None
        return self.vmap.apply(self.value_seq.eval(n))


@dataclass(frozen=True)
class SolutionSet:
    """Base class: integers satisfying the positive constraints."""

    lower: int | None
    case: str
    complete: bool

    def is_infinite(self) -> bool:
        raise NotImplementedError

    def contains(self, x: int) -> bool:
        raise NotImplementedError


@dataclass(frozen=True)
class AllSolutions(SolutionSet):
    substitution: tuple[int, int] = (1, 0)

    def is_infinite(self) -> bool:
        return True

    def contains(self, x: int) -> bool:
        return self.lower is None or x > self.lower


@dataclass(frozen=True)
class PolyImages(SolutionSet):
    polys: tuple[ImagePoly, ...] = ()
    extra_values: tuple[int, ...] = ()

    def is_infinite(self) -> bool:
        return True

    def contains(self, x: int) -> bool:
        return x in self.extra_values or any(p.contains(x) for p in self.polys)


@dataclass(frozen=True)
class LrbsUnion(SolutionSet):
    entries: tuple[LrbsEntry, ...] = ()
    extra_values: tuple[int, ...] = ()

    def is_infinite(self) -> bool:
        return any(not e.indices.is_empty() for e in self.entries)

    def contains(self, x: int, index_radius: int = 64) -> bool:
        if x in self.extra_values:
            return True
        for e in self.entries:
            for n in _outward(index_radius):
                if n in e.indices and e.vmap.apply(e.value_seq.eval(n)) == x:
                    return True
        return False


@dataclass(frozen=True)
class FiniteSolutions(SolutionSet):
    values: tuple[int, ...] = ()

    def is_infinite(self) -> bool:
        return False

    def contains(self, x: int) -> bool:
        return x in self.values


@dataclass(frozen=True)
class EmptySolutions(SolutionSet):
    def is_infinite(self) -> bool:
        return False

    def contains(self, x: int) -> bool:
        return False


def _outward(radius: int):
    yield 0
    for i in range(1, radius + 1):
        yield i
        yield -i


# ---------------------------------------------------------------------------
# Ordered member streams with certified magnitude floors.


class _PolySource:
    def __init__(self, poly: ImagePoly, value_bits: int):
        self.poly = poly
        self.radius = 0
        self.next_radius = max(poly.turn_bound(), 4)
        self.value_bits = value_bits
        self.capped = False
        self.done = False

    def advance(self) -> list[int]:
        if self.done:
            return []
        lo, hi = self.radius, self.next_radius
        batch = []
        for t in range(-hi, hi + 1):
            if abs(t) <= lo and lo > 0:
                continue
            batch.append(self.poly.eval(t))
        self.radius = hi
        self.next_radius = hi * 2
        return batch

    def floor_abs(self) -> int | None:
        if self.done:
            return None
        lo = min(abs(self.poly.eval(self.radius + 1)), abs(self.poly.eval(-self.radius - 1)))
        if lo.bit_length() > self.value_bits:
            self.done = True
            self.capped = True
            return None
        return lo


class _LrbsSource:
    def __init__(self, entry: LrbsEntry, value_bits: int):
        self.entry = entry
        g = growth_rank(entry.value_seq)
        start = max(abs(g.mono_fwd or 0), abs(g.mono_bwd or 0), 4)
        seq = entry.value_seq
        turn = entry.vmap.turn()
        while max(abs(seq.eval(start)), abs(seq.eval(-start))) < turn and start < 10_000:
            start *= 2
        self.radius = 0
        self.next_radius = start
        self.value_bits = value_bits
        self.capped = False
        self.done = False
        if entry.indices.is_empty():
            self.done = True

    def advance(self) -> list[int]:
        if self.done:
            return []
        lo, hi = self.radius, self.next_radius
        batch = []
        seq, entry = self.entry.value_seq, self.entry
        for n, v in zip(range(-hi, hi + 1), seq.values(-hi, hi)):
            if abs(n) <= lo and lo > 0:
                continue
            if n not in entry.indices:
                continue
            x = entry.vmap.apply(v)
            if x is not None:
                batch.append(x)
        self.radius = hi
        self.next_radius = hi * 2
        return batch

    def floor_abs(self) -> int | None:
        if self.done:
            return None
        seq = self.entry.value_seq
        v_lo = min(abs(seq.eval(self.radius + 1)), abs(seq.eval(-self.radius - 1)))
        if v_lo.bit_length() > self.value_bits:
            self.done = True
            self.capped = True
            return None
        return self.entry.vmap.floor_abs(v_lo)


class _FiniteSource:
    def __init__(self, values):
        self.values = list(values)
        self.capped = False
        self.done = False

    def advance(self) -> list[int]:
        if self.done:
            return []
        self.done = True
        return self.values

    def floor_abs(self) -> int | None:
        return None


class MemberStream:
    """Merged members ordered by (|x|, x), with honesty bookkeeping.

    `capped` is set when some source stopped at the bit-size cap, meaning
    the emitted prefix may be incomplete.
    """

    def __init__(self, sources):
        self.sources = list(sources)
        self.capped = False

    def __iter__(self):
        buffered: list[int] = []
        seen: set[int] = set()
        while True:
            live = [s for s in self.sources if not s.done]
            for s in live:
                for x in s.advance():
                    if x not in seen:
                        seen.add(x)
                        buffered.append(x)
            floors = [f for s in self.sources if (f := s.floor_abs()) is not None]
            self.capped = self.capped or any(getattr(s, "capped", False) for s in self.sources)
            if not floors:
                for x in sorted(buffered, key=lambda v: (abs(v), v)):
                    yield x
                return
            floor = min(floors)
            ready = [x for x in buffered if abs(x) < floor]
            buffered = [x for x in buffered if abs(x) >= floor]
            for x in sorted(ready, key=lambda v: (abs(v), v)):
                yield x


def members(solution_set: SolutionSet, options: SolveOptions = DEFAULT_OPTIONS) -> MemberStream:
    """Stream of members ordered by (|x|, x) (not defined for AllSolutions)."""
    if isinstance(solution_set, PolyImages):
        sources = [_PolySource(p, options.value_bits) for p in solution_set.polys]
        sources.append(_FiniteSource(solution_set.extra_values))
        return MemberStream(sources)
    if isinstance(solution_set, LrbsUnion):
        sources = [_LrbsSource(e, options.value_bits) for e in solution_set.entries]
        sources.append(_FiniteSource(solution_set.extra_values))
        return MemberStream(sources)
    if isinstance(solution_set, FiniteSolutions):
        return MemberStream([_FiniteSource(solution_set.values)])
    if isinstance(solution_set, EmptySolutions):
        return MemberStream([])
    raise TypeError(f"no member stream for {type(solution_set).__name__}")


# ---------------------------------------------------------------------------
# Positive-constraint solution sets.


def _single_power_images(atom: PowerAtom, lower: int | None) -> SolutionSet:
    k, a, b = atom.k, atom.a, atom.b
    residues = [u for u in range(a) if pow(u, k, a) == b % a]
    if not residues:
        return EmptySolutions(lower, "power:single:empty-residues", True)
    polys = []
    for u in residues:
        coeffs = [Fraction(u**k - b, a)]
        for i in range(1, k + 1):
            coeffs.append(Fraction(math.comb(k, i) * u ** (k - i) * a ** (i - 1)))
        polys.append(ImagePoly(tuple(coeffs)))
    return PolyImages(lower, "power:single:images", True, polys=tuple(polys))


def _divisor_pair_solutions(a1: int, b1: int, a2: int, b2: int, E: int) -> list[int]:
    """x with a1*x+b1 and a2*x+b2 both squares, via (w-Ez)(w+Ez) = N; complete."""
    N = a2 * (a2 * b1 - a1 * b2)
    out = set()
    if N == 0:
        # Degenerate proportional pair: only the common zero of both terms.
        if b2 % a2 == 0 and (-b2 // a2) * a1 + b1 == 0:
            x = -b2 // a2
            if is_kth_power(a1 * x + b1, 2) and is_kth_power(a2 * x + b2, 2):
                out.add(x)
        return sorted(out)
    for d1, d2 in divisor_pairs(N):
        if (d1 + d2) % 2 != 0 or (d2 - d1) % (2 * E) != 0:
            continue
        z = (d2 - d1) // (2 * E)
        num = z * z - b2
        if num % a2 != 0:
            continue
        x = num // a2
        if is_kth_power(a1 * x + b1, 2) and is_kth_power(a2 * x + b2, 2):
            out.add(x)
    return sorted(out)


def _pell_pair_entries(a1: int, b1: int, a2: int, b2: int) -> tuple[list[LrbsEntry], str]:
    """LRBS entries for the system a1x+b1 = y1^2, a2x+b2 = y2^2 (a1*a2 non-square)."""
    n = a1 * a2
    N = a2 * (a2 * b1 - a1 * b2)
    r1s = sorted({r for r in range(a1) if pow(r, 2, a1) == b1 % a1})
    r2s = sorted({r for r in range(a2) if pow(r, 2, a2) == b2 % a2})
    if not r1s or not r2s:
        return [], "power:pair:empty-residues"
    sols = solve_generalized(n, N)
    if not sols.classes:
        return [], "power:pair:pell-empty"
    M_w = a1 * a2
    w_res = sorted({(s * a2 * r) % M_w for r in r1s for s in (1, -1)})
    z_res = sorted({(s * r) % a2 for r in r2s for s in (1, -1)})
    entries = []
    for cls in sols.classes:
        w0, z0 = cls.fundamental
        w_i, z_i = cls.rep
        w1 = w_i * w0 + n * z_i * z0
        z1 = z_i * w0 + w_i * z0
        wseq = Lrbs((2 * w0, -1), (w_i, w1))
        zseq = Lrbs((2 * w0, -1), (z_i, z1))
        idx_w = IndexSet.nothing()
        for r in w_res:
            idx_w = idx_w.union(filter_congruence(wseq, M_w, r))
        idx_z = IndexSet.nothing()
        for r in z_res:
            idx_z = idx_z.union(filter_congruence(zseq, a2, r))
        idx = idx_w.intersect(idx_z)
        if idx.is_empty():
            continue
        entries.append(
            LrbsEntry(zseq, wseq, idx, PowerValueMap(2, a2, b2), pell_class=cls, component="z")
        )
    return entries, ("power:pair:pell" if entries else "power:pair:pell-filtered-empty")


def _bounded_hyperelliptic(a1, b1, k1, a2, b2, k2, lower, options: SolveOptions) -> SolutionSet:
    """Candidates of y1^k1 = a1x+b1, y2^k2 = a2x+b2 for |y2| <= enum_bound."""
    H = options.enum_bound
    values = set()
    z_range = range(H + 1) if k2 % 2 == 0 else range(-H, H + 1)
    for z in z_range:
        num = z**k2 - b2
        if num % a2 != 0:
            continue
        x = num // a2
        if kth_root(a1 * x + b1, k1) is not None:
            values.add(x)
    return FiniteSolutions(
        lower, "power:pair:hyperelliptic:bounded", False, values=tuple(sorted(values))
    )


def _filter_by_atoms(base: SolutionSet, extra, options: SolveOptions, label: str) -> SolutionSet:
    """Pointwise-filter a base set by further atoms; keeps exactness flags honest."""
    if isinstance(base, EmptySolutions):
        return EmptySolutions(base.lower, label + ":empty", base.complete)
    if isinstance(base, FiniteSolutions):
        vals = tuple(x for x in base.values if all(at.holds(x) for at in extra))
        return FiniteSolutions(base.lower, label, base.complete, values=vals)
    stream = members(base, options)
    found = []
    for i, x in enumerate(stream):
        if i >= options.scan_cap:
            break
        if all(at.holds(x) for at in extra):
            found.append(x)
            if len(found) >= 10_000:
                break
    return FiniteSolutions(base.lower, label + ":bounded", False, values=tuple(sorted(set(found))))


def solve_positive(
    positives,
    lower: int | None = None,
    options: SolveOptions = DEFAULT_OPTIONS,
    substitution: tuple[int, int] = (1, 0),
) -> SolutionSet:
    """Exact structure of the integers satisfying all positive power atoms.

    Preconditions: atoms pairwise non-similar, none redundant, a > 0.
    """
    atoms = sorted(positives)
    for atom in atoms:
        if atom.a <= 0:
            raise ValueError("positive atoms must have a > 0 after normalization")
    if len(atoms) == 0:
        return AllSolutions(lower, "power:none", True, substitution=substitution)
    # Cheap certified emptiness: the value-set residues must admit b mod a.
    for atom in atoms:
        if not any(pow(u, atom.k, atom.a) == atom.b % atom.a for u in range(atom.a)):
            return EmptySolutions(lower, "power:empty-residues", True)
    if len(atoms) == 1:
        return _single_power_images(atoms[0], lower)
    if len(atoms) == 2:
        (A1, A2) = atoms
        if A2.k < A1.k:
            A1, A2 = A2, A1
        if A1.a * A2.b == A1.b * A2.a:
            raise ValueError("similar atoms must be coalesced before solving")
        if A2.k == 2:
            n = A1.a * A2.a
            E = math.isqrt(n)
            if E * E == n:
                vals = _divisor_pair_solutions(A1.a, A1.b, A2.a, A2.b, E)
                return FiniteSolutions(lower, "power:pair:divisor", True, values=tuple(vals))
            entries, label = _pell_pair_entries(A1.a, A1.b, A2.a, A2.b)
            if not entries:
                return EmptySolutions(lower, label, True)
            return LrbsUnion(lower, label, True, entries=tuple(entries))
        return _bounded_hyperelliptic(A1.a, A1.b, A1.k, A2.a, A2.b, A2.k, lower, options)
    # Three or more atoms.
    squares = [a for a in atoms if a.k == 2]
    for i in range(len(squares)):
        for j in range(i + 1, len(squares)):
            Ai, Aj = squares[i], squares[j]
            n = Ai.a * Aj.a
            E = math.isqrt(n)
            if E * E == n:
                vals = _divisor_pair_solutions(Ai.a, Ai.b, Aj.a, Aj.b, E)
                rest = [a for a in atoms if a is not Ai and a is not Aj]
                base = FiniteSolutions(lower, "power:multi:divisor", True, values=tuple(vals))
                return _filter_by_atoms(base, rest, options, "power:multi:divisor")
    if all(a.k == 2 for a in atoms):
        entries, label = _pell_pair_entries(atoms[0].a, atoms[0].b, atoms[1].a, atoms[1].b)
        rest = atoms[2:]
        if not entries:
            return EmptySolutions(lower, label, True)
        base = LrbsUnion(lower, label, True, entries=tuple(entries))
        return _filter_by_atoms(base, rest, options, "power:multi:pell-filter")
    # Mixed exponents: bound the pair with the largest exponent, then filter.
    A2 = atoms[-1]
    A1 = atoms[0]
    base = _bounded_hyperelliptic(A1.a, A1.b, A1.k, A2.a, A2.b, A2.k, lower, options)
    rest = [a for a in atoms if a is not A1 and a is not A2]
    filtered = _filter_by_atoms(base, rest, options, "power:multi")
    return FiniteSolutions(lower, "power:multi:bounded", False, values=filtered.values)


# ---------------------------------------------------------------------------
# Full decision procedure for one normalized system.


def _combine(verdicts) -> Verdict:
    sats = [v for v in verdicts if v.is_sat]
    if sats:
        return min(sats, key=lambda v: (abs(v.witness), v.witness))
    unknowns = [v for v in verdicts if v.is_unknown]
    if unknowns:
        return unknowns[0]
    return Verdict.unsat()


def _negatives_pass(system: ConstraintSystem, y: int) -> bool:
    return not any(atom.holds(y) for atom in system.negatives)


def _search_all(system: ConstraintSystem, options: SolveOptions, trace) -> Verdict:
    y = (system.lower if system.lower is not None else -1) + 1
    for _ in range(options.scan_cap):
        if y not in system.excluded and _negatives_pass(system, y):
            trace.append("witness-scan:hit")
            return Verdict.sat(system.to_original(y))
        y += 1
    trace.append("witness-scan:capped")
    return Verdict.unknown("witness scan cap reached", options.scan_cap)


def _search_stream(system: ConstraintSystem, sol: SolutionSet, options: SolveOptions, trace) -> Verdict:
    stream = members(sol, options)
    count = 0
    for x in stream:
        if count >= options.scan_cap:
            trace.append("witness-scan:capped")
            return Verdict.unknown("witness scan cap reached", options.scan_cap)
        count += 1
        if system.lower is not None and x <= system.lower:
            continue
        if x in system.excluded:
            continue
        if _negatives_pass(system, x):
            trace.append("witness-scan:hit")
            return Verdict.sat(system.to_original(x))
    if stream.capped:
        trace.append("witness-scan:value-cap")
        return Verdict.unknown("candidate values exceeded the size cap", options.value_bits)
    trace.append("witness-scan:exhausted")
    return Verdict.unsat()


def _decide_one(system: ConstraintSystem, options: SolveOptions) -> Verdict:
    if system.resolved is not None:
        return system.resolved
    sol = solve_positive(
        system.positives, system.lower, options, substitution=system.substitution
    )
    system.log(sol.case)
    if isinstance(sol, EmptySolutions):
        return Verdict.unsat() if sol.complete else Verdict.unknown(sol.case, options.enum_bound)
    if isinstance(sol, AllSolutions):
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
    return _search_stream(system, sol, options, system.trace)


def decide(system: ConstraintSystem, options: SolveOptions = DEFAULT_OPTIONS) -> Verdict:
    """Three-valued satisfiability of one normalized power system.

    Sat witnesses are returned in original coordinates and re-verified by
    direct evaluation before being reported.
    """
    if any(isinstance(a, PolyAtom) for a in system.positives + system.negatives):
        from .poly_solver import decide_poly

        return decide_poly(system, options)
    work = system.clone()
    subs = preprocess(work)
    verdicts = []
    for sub in subs:
        v = _decide_one(sub, options)
        system.trace.extend(sub.trace)
        verdicts.append(v)
    if not subs:
        system.trace.extend(work.trace)
    final = _combine(verdicts)
    if final.is_sat:
        _verify_witness(system, final.witness)
    return final


def _verify_witness(system: ConstraintSystem, x: int) -> None:
    m, r = system.substitution
    v = -x if system.sign_flipped else x
    if (v - r) % m != 0:
        raise AssertionError(f"witness {x} does not live on the substitution lattice")
    y = (v - r) // m
    if not system_holds(system, y):
        raise AssertionError(f"witness {x} fails direct evaluation")
