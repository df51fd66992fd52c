import random

import pytest

from unipres.lrbs import GrowthRank, IndexSet, Lrbs, filter_congruence, growth_rank, period_mod
from unipres.pell import QuadNum


PELL = Lrbs((6, -1), (1, 3))      # 1, 3, 17, 99, ...
FIB = Lrbs((1, 1), (0, 1))


def test_eval_examples():
    assert PELL.eval(2) == 17
    assert PELL.eval(0) == 1
    assert PELL.eval(-1) == 3          # backward recurrence
    assert FIB.eval(10) == 55
    assert FIB.eval(-6) == -8


def test_eval_forward_backward_consistency():
    rng = random.Random(3)
    for _ in range(50):
        seq = Lrbs((rng.randint(-5, 5), rng.choice((1, -1))), (rng.randint(-9, 9), rng.randint(-9, 9)))
        vals = seq.values(-30, 30)
        assert vals == [seq.eval(n) for n in range(-30, 31)]
        # u_{n+2} = a1 u_{n+1} + a2 u_n across the whole window
        a1, a2 = seq.coeffs
        for i in range(len(vals) - 2):
            assert vals[i + 2] == a1 * vals[i + 1] + a2 * vals[i]


def test_reversibility_rejected():
    with pytest.raises(ValueError):
        Lrbs((3, 2), (0, 1))


def test_period_mod_examples():
    assert period_mod(Lrbs((1,), (7,)), 12)[0] == 1      # constant sequence
    assert period_mod(FIB, 10)[0] == 60                  # Pisano period
    period, table = period_mod(PELL, 8)
    scan = [PELL.eval(n) % 8 for n in range(3 * period)]
    assert all(scan[n] == scan[n + period] for n in range(2 * period))
    assert tuple(scan[:period]) == table


def test_period_is_minimal():
    for seq, M in ((FIB, 10), (PELL, 8), (PELL, 5)):
        period, _ = period_mod(seq, M)
        vals = [seq.eval(n) % M for n in range(2 * period)]
        for cand in range(1, period):
            if period % cand:
                continue
            if all(vals[n + cand] == vals[n] for n in range(period)):
                pytest.fail(f"period {period} not minimal; {cand} works for {seq} mod {M}")


def test_filter_congruence_matches_scan():
    for seq, M, r in ((PELL, 3, 0), (PELL, 3, 2), (FIB, 5, 0), (FIB, 4, 1)):
        got = filter_congruence(seq, M, r)
        period, _ = period_mod(seq, M)
        for n in range(-3 * period, 3 * period + 1):
            assert (n in got) == (seq.eval(n) % M == r), (seq, M, r, n)


def test_filter_congruence_everything_and_nothing():
    const = Lrbs((1,), (4,))
    assert 17 in filter_congruence(const, 5, 4)
    assert filter_congruence(const, 5, 1).is_empty()


def test_growth_rank_pell():
    g = growth_rank(PELL)
    assert g.growing and isinstance(g.rate, QuadNum)
    # 3 + 2*sqrt(2), possibly expressed over a non-reduced radicand
    reduced = g.rate.reduce_radicand()
    assert (reduced.a, reduced.b, reduced.n) == (3, 2, 2)
    n0, n1 = g.mono_fwd, g.mono_bwd
    vals = PELL.values(n1 - 5, n0 + 40)
    offset = -(n1 - 5)
    for n in range(n0, n0 + 35):
        assert abs(vals[n + offset + 1]) > abs(vals[n + offset])
    for n in range(n1 - 3, n1 + 1):
        assert abs(vals[n + offset - 1]) > abs(vals[n + offset])


def test_growth_rank_non_growing():
    assert not growth_rank(Lrbs((1,), (5,))).growing
    assert not growth_rank(Lrbs((1, -1), (1, 1))).growing  # sixth roots of unity
    assert not growth_rank(Lrbs((0, 1), (1, 2))).growing   # roots +-1


def test_growth_rank_generic_quadratic():
    for w0 in (2, 3, 5, 9):
        seq = Lrbs((2 * w0, -1), (1, w0))
        g = growth_rank(seq)
        # rate = w0 + sqrt(w0^2 - 1), held exactly
        assert g.rate.a == w0 and g.rate.b * g.rate.b * g.rate.n == w0 * w0 - 1


def test_growth_rank_rejects_higher_order():
    with pytest.raises(NotImplementedError):
        growth_rank(Lrbs((1, 1, 1), (0, 0, 1)))


def test_fatou_integrality_window():
    rng = random.Random(9)
    for _ in range(100):
        seq = Lrbs((rng.randint(-4, 4), rng.choice((1, -1))), (rng.randint(-9, 9), rng.randint(-9, 9)))
        vals = seq.values(-50, 50)
        assert all(isinstance(v, int) for v in vals)


def test_index_set_algebra():
    a = IndexSet.from_residues(3, [1])
    b = IndexSet.from_residues(2, [0])
    inter = a.intersect(b)
    for n in range(-30, 31):
        assert (n in inter) == (n % 3 == 1 and n % 2 == 0)
    diff = a.subtract(b)
    for n in range(-30, 31):
        assert (n in diff) == (n % 3 == 1 and n % 2 == 1)
    comp = a.complement()
    for n in range(-30, 31):
        assert (n in comp) == (n % 3 != 1)
    union = a.union(b)
    for n in range(-30, 31):
        assert (n in union) == (n % 3 == 1 or n % 2 == 0)


def test_index_set_map_affine_exact():
    a = IndexSet.from_residues(3, [1])
    mapped = a.map_affine(2, 5)
    members = {2 * n + 5 for n in range(-100, 101) if n in a}
    for n in range(-60, 61):
        assert (n in mapped) == (n in members)
