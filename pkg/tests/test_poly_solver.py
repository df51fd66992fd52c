import random
from fractions import Fraction

import pytest

from unipres._ast import ConstraintSystem, PolyAtom, PowerAtom, PredicateDecl
from unipres.power_solver import (
    EmptySolutions,
    FiniteSolutions,
    LrbsUnion,
    PolyImages,
    SolveOptions,
    members,
)
from unipres.poly_solver import (
    RedundancyData,
    _derive_curve_case,
    _try_discard_sets,
    decide_poly,
    depress,
    depress_ascending,
    poly_redundant,
    preprocess_poly,
    solve_positive_poly,
    subtract_discarded,
)
from unipres import oracle

from conftest import (
    brute_first_witness,
    eval_system_directly,
    random_int_valued_pred,
    random_poly_system,
)

OPTS = SolveOptions(enum_bound=2000, scan_cap=20_000, value_bits=4000)

TRIANGULAR = PredicateDecl("T", (Fraction(1, 2), Fraction(1, 2), Fraction(0)))
GESSEL_CUBIC = PredicateDecl("G", (Fraction(1), Fraction(0), Fraction(-3), Fraction(0)))


class TestDepress:
    def test_identity_square(self):
        d = depress(PredicateDecl("S", (Fraction(1), Fraction(0), Fraction(0))), 1, 0)
        assert d.atom == PolyAtom(2, 0, 1, 0, 1, 0)

    def test_triangular(self):
        d = depress(TRIANGULAR, 1, 0)
        assert d.atom == PolyAtom(2, 0, 8, 1, 2, 1)

    def test_shifted_cube(self):
        pred = PredicateDecl("C", (Fraction(1), Fraction(3), Fraction(3), Fraction(1)))
        d = depress(pred, 1, 0)
        assert d.atom == PolyAtom(3, 0, 1, 0, 1, 0)

    def test_pointwise_equivalence_random(self, rng):
        for _ in range(100):
            deg = rng.choice((2, 3))
            pred = random_int_valued_pred(rng, "P", deg)
            a, b = rng.randint(1, 9), rng.randint(-9, 9)
            atom = depress(pred, a, b).atom
            for x in range(-100, 101):
                direct = oracle.value_set_member(pred, a * x + b)[0]
                assert atom.holds(x) == direct, (pred.coeffs, a, b, x)

    def test_rejects_wrong_degree(self):
        with pytest.raises(ValueError):
            depress(PredicateDecl("L", (Fraction(2), Fraction(1))), 1, 0)


class TestPolyRedundant:
    def test_quadratic_square_ratio(self):
        data = poly_redundant(PolyAtom(2, 0, 1, 0, 1, 0), PolyAtom(2, 0, 4, 0, 1, 0))
        assert data is not None and data.kind == "line"
        assert data.slope == Fraction(1, 2)

    def test_degree_mismatch(self):
        assert poly_redundant(PolyAtom(2, 0, 1, 0, 1, 0), PolyAtom(3, 0, 1, 0, 1, 0)) is None

    def test_necessary_condition(self):
        assert poly_redundant(PolyAtom(3, 1, 1, 0, 1, 0), PolyAtom(3, 1, 1, 1, 1, 0)) is None

    def test_quadratic_point_only(self):
        data = poly_redundant(PolyAtom(2, 0, 1, 0, 1, 0), PolyAtom(2, 0, 3, 0, 1, 0))
        assert data is not None and data.kind == "point" and data.points == ((0, 0),)

    def test_cubic_line_and_conic(self):
        # f1 = f2 = u^3 - 4u, scaled pair (1,0) and (1,0) shifted: use a2=1.
        p1 = PolyAtom(3, -4, 1, 0, 1, 0)
        p2 = PolyAtom(3, -4, 1, 0, 1, 0)
        data = poly_redundant(p1, p2)
        assert data is not None and data.kind == "line+conic"
        assert data.slope == Fraction(-1)  # u1 = u2 line (factor u1 - u2)
        # conic points satisfy a2 f1(u1) = a1 f2(u2)
        for u1, u2 in data.points:
            assert u1**3 - 4 * u1 == u2**3 - 4 * u2
        assert (0, 2) in data.points or (2, 0) in data.points  # both roots of u^3-4u


class TestSolvePositive:
    def test_triangular_images(self):
        atom = depress(TRIANGULAR, 1, 0).atom
        s = solve_positive_poly([atom], options=OPTS)
        assert isinstance(s, PolyImages)
        first = sorted(x for _, x in zip(range(8), members(s, OPTS)))
        assert first == [0, 1, 3, 6, 10, 15, 21, 28]

    def test_fermat_elliptic(self):
        atoms = [depress(TRIANGULAR, 1, 0).atom, PolyAtom(3, 0, 1, 0, 1, 0)]
        s = solve_positive_poly(atoms, options=OPTS)
        assert isinstance(s, FiniteSolutions) and not s.complete
        assert s.values == (0, 1)

    def test_empty(self):
        s = solve_positive_poly([], options=OPTS)
        assert s.case == "poly:none"

    def test_quad_pair_matches_scan(self):
        atoms = [PolyAtom(2, 0, 1, 0, 1, 0), PolyAtom(2, 0, 2, 8, 1, 0)]
        s = solve_positive_poly(atoms, options=OPTS)
        assert isinstance(s, LrbsUnion)
        got = [x for _, x in zip(range(4), members(s, OPTS))]
        scan = [x for x in range(0, 10**6) if all(oracle.atom_eval(a, x) for a in atoms)]
        assert got == scan[: len(got)] == [4, 196, 6724, 228484]

    def test_double_root_images(self):
        # T(x) & G(x+2) with G = {u^3 - 3u}: the scaled curve acquires a
        # double root, so x is parametrized by degree-6 images.
        quad = depress(TRIANGULAR, 1, 0).atom
        cub = depress(GESSEL_CUBIC, 1, 2).atom
        s = solve_positive_poly([quad, cub], options=OPTS)
        scan = [x for x in range(-50, 4 * 10**6) if quad.holds(x) and cub.holds(x)]
        if isinstance(s, PolyImages):
            sample = sorted(x for _, x in zip(range(60), members(s, OPTS)))
            for x in scan:
                assert s.contains(x), x
            for x in sample[:10]:
                assert quad.holds(x) and cub.holds(x)
        else:
            for x in scan:
                assert s.contains(x)

    def test_mixed_power_poly(self):
        atoms = [depress(TRIANGULAR, 1, 0).atom, PowerAtom(4, 1, 0)]
        s = solve_positive_poly(atoms, options=OPTS)
        assert isinstance(s, FiniteSolutions)
        scan = [x for x in range(0, 2000) if all(oracle.atom_eval(a, x) for a in atoms)]
        for x in scan:
            assert x in s.values


class TestPreprocess:
    def test_direct_contradiction(self):
        atom = depress(TRIANGULAR, 1, 0).atom
        sys_ = ConstraintSystem(lower=0, positives=[atom], negatives=[atom])
        assert preprocess_poly(sys_) == []

    def test_redundant_positive_pair_merges(self):
        # T(x) and T(9x+1) encode the same witnesses through u2 = 3u1.
        a1 = depress(TRIANGULAR, 1, 0).atom
        a2 = depress(TRIANGULAR, 9, 1).atom
        sys_ = ConstraintSystem(lower=-1, positives=[a1, a2])
        subs = preprocess_poly(sys_)
        assert subs
        scan = [x for x in range(0, 3000) if oracle.atom_eval(a1, x) and oracle.atom_eval(a2, x)]
        for x in scan:
            assert any(
                s.resolved is None and all(a.holds(x) for a in s.positives) or
                (s.resolved is not None and s.resolved_points and x in s.resolved_points)
                for s in subs
            ), x


class Test4c:
    def setup_method(self):
        self.q1 = PolyAtom(2, 0, 1, 0, 1, 0)
        self.q3 = PolyAtom(2, 0, 2, 8, 1, 0)
        self.neg = depress(GESSEL_CUBIC, 1, 2).atom

    def test_curve_case_split(self):
        d1 = _derive_curve_case(self.q1, self.neg)
        d3 = _derive_curve_case(self.q3, self.neg)
        assert d1.split == (1, 1, 1, -2)
        assert d3.split == (1, -1, 2, 4)

    def test_split_reassembly(self):
        # (alpha u + beta)^2 (gamma u + delta) must reproduce the scaled curve.
        for quad, cub in ((self.q1, self.neg), (self.q3, self.neg)):
            d = _derive_curve_case(quad, cub)
            alpha, beta, gamma, delta = d.split
            for u in range(-10, 11):
                lhs = (alpha * u + beta) ** 2 * (gamma * u + delta)
                rhs = quad.a * (u**3 + cub.lin * u) + (cub.a * quad.b - quad.a * cub.b)
                assert lhs == rhs, (d.split, u)

    def test_triple_4c_members(self):
        s = solve_positive_poly([self.q1, self.q3, self.neg], options=OPTS)
        assert isinstance(s, LrbsUnion) and "4c" in s.case
        got = [x for _, x in zip(range(3), members(s, OPTS))]
        for x in got:
            assert self.q1.holds(x) and self.q3.holds(x) and self.neg.holds(x), x
        assert got[0] == 196

    def test_subtract_discarded_residual(self):
        S = solve_positive_poly([self.q1, self.q3], options=OPTS)
        sys_ = ConstraintSystem(lower=4, positives=[self.q1, self.q3], negatives=[self.neg])
        discards = _try_discard_sets(sys_, sorted([self.q1, self.q3]), OPTS)
        assert discards
        S2 = subtract_discarded(S, discards)
        for old, new in zip(S.entries, S2.entries):
            for k in range(-50, 51):
                if k not in old.indices:
                    assert k not in new.indices
                    continue
                x = old.vmap.apply(old.value_seq.eval(k))
                discarded = self.neg.holds(x)
                assert (k in new.indices) == (not discarded), (k, x)

    def test_decide_sat_on_residual(self):
        sys_ = ConstraintSystem(lower=4, positives=[self.q1, self.q3], negatives=[self.neg])
        v = decide_poly(sys_, OPTS)
        assert v.is_sat and v.witness == 6724
        assert "discard:index-progressions" in sys_.trace

    def test_decide_unsat_when_fully_discarded(self):
        # Restrict the second witness to 0 mod 5: exactly the discarded
        # progression survives the stride, so the negative empties S.
        q3s = PolyAtom(2, 0, 2, 8, 5, 0)
        sys_ = ConstraintSystem(lower=0, positives=[self.q1, q3s], negatives=[self.neg])
        v = decide_poly(sys_, OPTS)
        assert v.is_unsat
        assert "discard:all-indices-removed" in sys_.trace

    def test_irrational_radicand_is_vacuous(self):
        # A negative whose curve data does not split leaves the set alone.
        other_neg = PolyAtom(3, 0, 1, 5, 1, 0)
        S = solve_positive_poly([self.q1, self.q3], options=OPTS)
        sys_ = ConstraintSystem(lower=4, positives=[self.q1, self.q3], negatives=[other_neg])
        discards = _try_discard_sets(sys_, sorted([self.q1, self.q3]), OPTS)
        S2 = subtract_discarded(S, discards)
        for old, new in zip(S.entries, S2.entries):
            assert old.indices.aps == new.indices.aps


class TestDecidePoly:
    def test_forced_contradiction(self):
        atom = depress(TRIANGULAR, 1, 0).atom
        sys_ = ConstraintSystem(lower=0, positives=[atom], negatives=[atom])
        assert decide_poly(sys_, OPTS).is_unsat

    def test_fermat_never_sat(self):
        atoms = [depress(TRIANGULAR, 1, 0).atom, PolyAtom(3, 0, 1, 0, 1, 0)]
        sys_ = ConstraintSystem(lower=1, positives=atoms)
        v = decide_poly(sys_, OPTS)
        assert v.is_unknown

    def test_triangular_cube_below_threshold(self):
        atoms = [depress(TRIANGULAR, 1, 0).atom, PolyAtom(3, 0, 1, 0, 1, 0)]
        sys_ = ConstraintSystem(lower=0, positives=list(atoms))
        v = decide_poly(sys_, OPTS)
        assert v.is_sat and v.witness == 1


@pytest.mark.slow
def test_differential_poly_suite_slow():
    rng = random.Random(4321)
    check_poly_differential(rng, 60, bound=4000)


def check_poly_differential(rng, count, bound):
    opts = SolveOptions(enum_bound=1200, scan_cap=4000, value_bits=2500)
    for i in range(count):
        sys_ = random_poly_system(rng)
        v = decide_poly(sys_.clone(), opts)
        if v.is_sat:
            x = v.witness
            if sys_.sign_flipped:
                x = -x
            m, r = sys_.substitution
            assert (x - r) % m == 0
            assert eval_system_directly(sys_, (x - r) // m), (i, sys_, v)
        witness = brute_first_witness(sys_, bound)
        if witness is not None:
            assert not v.is_unsat, (i, sys_, v, witness)
        if v.is_unsat:
            assert witness is None, (i, sys_, v)


def test_differential_poly_smoke(rng):
    check_poly_differential(rng, 20, bound=1500)
