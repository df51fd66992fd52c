import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from unipres.numtheory import (
    ResidueClass,
    crt_extended,
    divisor_pairs,
    divisors,
    factor,
    floor_root,
    integer_roots,
    is_kth_power,
    is_prime,
    kth_power_residues,
    kth_root,
    valuation,
)


def brute_crt(classes):
    lcm = 1
    for c in classes:
        lcm = lcm * c.modulus // math.gcd(lcm, c.modulus)
    assert lcm <= 10**4, "keep the brute oracle within its contract"
    return [r for r in range(lcm) if all(r in c for c in classes)]


def test_crt_examples():
    assert crt_extended([ResidueClass(4, 1), ResidueClass(6, 5)]) == ResidueClass(12, 5)
    assert crt_extended([ResidueClass(4, 1), ResidueClass(6, 2)]) is None
    assert crt_extended([ResidueClass(5, 3)]) == ResidueClass(5, 3)


@given(st.lists(st.tuples(st.integers(1, 12), st.integers(0, 200)), min_size=1, max_size=3))
@settings(max_examples=300, deadline=None)
def test_crt_matches_scan(pairs):
    classes = [ResidueClass(m, r) for m, r in pairs]
    merged = crt_extended(classes)
    hits = brute_crt(classes)
    if merged is None:
        assert hits == []
    else:
        assert hits and hits[0] == merged.residue
        assert all(h in merged for h in hits)


def test_valuation_examples():
    assert valuation(2, 20) == 2
    assert valuation(3, 1) == 0
    assert valuation(5, -250) == 3
    with pytest.raises(ValueError):
        valuation(2, 0)
    with pytest.raises(ValueError):
        valuation(4, 8)


@given(st.integers(-10**6, 10**6).filter(bool), st.integers(-10**6, 10**6).filter(bool))
@settings(max_examples=200, deadline=None)
def test_valuation_additive(a, b):
    for p in (2, 3, 5, 7):
        assert valuation(p, a * b) == valuation(p, a) + valuation(p, b)


def binary_search_root(n, k):
    # Independent float-free oracle for the k-th root.
    if n < 0:
        if k % 2 == 0:
            return None
        r = binary_search_root(-n, k)
        return None if r is None else -r
    lo, hi = 0, 1
    while hi**k < n:
        hi *= 2
    while lo < hi:
        mid = (lo + hi) // 2
        if mid**k < n:
            lo = mid + 1
        else:
            hi = mid
    return lo if lo**k == n else None


def test_kth_root_examples():
    assert kth_root(16, 4) == 2
    assert kth_root(-27, 3) == -3
    assert kth_root(2, 2) is None
    assert kth_root(0, 5) == 0
    assert kth_root(1, 9) == 1


@given(st.integers(-(10**18), 10**18), st.integers(2, 7))
@settings(max_examples=300, deadline=None)
def test_kth_root_matches_binary_search(n, k):
    assert kth_root(n, k) == binary_search_root(n, k)


@given(st.integers(0, 10**12), st.integers(2, 6))
@settings(max_examples=200, deadline=None)
def test_floor_root(n, k):
    r = floor_root(n, k)
    assert r**k <= n < (r + 1) ** k


def test_kth_power_residues():
    assert kth_power_residues(2, 4) == {0, 1}
    assert kth_power_residues(2, 1) == {0}
    assert kth_power_residues(3, 9) == {0, 1, 8}


def test_factor_examples():
    assert factor(500).factors == ((2, 2), (5, 3))
    assert factor(1).factors == ()
    f = factor(-97)
    assert f.sign == -1 and f.factors == ((97, 1),)


@given(st.integers(-(10**9), 10**9).filter(bool))
@settings(max_examples=200, deadline=None)
def test_factor_roundtrip(n):
    f = factor(n)
    assert f.value == n
    for p, e in f.factors:
        assert is_prime(p) and e >= 1


def test_factor_large_semiprime():
    n = 1_000_003 * 999_983
    assert factor(n).factors == ((999_983, 1), (1_000_003, 1))


def test_divisor_pairs():
    assert set(divisor_pairs(4)) == {(1, 4), (2, 2), (4, 1), (-1, -4), (-2, -2), (-4, -1)}
    assert set(divisor_pairs(1)) == {(1, 1), (-1, -1)}
    assert len(divisor_pairs(6)) == 8
    assert all(d * e == -4 for d, e in divisor_pairs(-4))


def test_divisors():
    assert divisors(12) == [1, 2, 3, 4, 6, 12]


def test_integer_roots():
    assert integer_roots([-8, 0, 0, 1]) == [2]          # t^3 = 8
    assert integer_roots([0, -4, 0, 1]) == [-2, 0, 2]   # t^3 - 4t
    assert integer_roots([-6, 0, 0, 1]) == []           # t^3 = 6
    assert integer_roots([2, 3, 1]) == [-2, -1]         # (t+1)(t+2)


def test_integer_roots_random(rng):
    for _ in range(200):
        roots = sorted({rng.randint(-30, 30) for _ in range(rng.randint(0, 3))})
        lead = rng.choice([1, -1, 2, 3])
        coeffs = [lead]
        for r in roots:
            # multiply by (x - r)
            nxt = [0] * (len(coeffs) + 1)
            for i, c in enumerate(coeffs):
                nxt[i] += c
                nxt[i + 1] -= c * r
            coeffs = nxt
        asc = list(reversed(coeffs))
        if len(asc) == 1:
            continue
        assert integer_roots(asc) == roots


def test_integer_roots_misses_nothing_nearby(rng):
    for _ in range(100):
        asc = [rng.randint(-50, 50) for _ in range(rng.randint(2, 7))]
        if all(c == 0 for c in asc[1:]):
            continue
        found = set(integer_roots(asc))
        for t in range(-60, 61):
            v = sum(c * t**i for i, c in enumerate(asc))
            assert (v == 0) == (t in found)
