"""Exact integer and rational kernels: CRT, valuations, roots, factoring.

Everything here operates on Python ints and Fractions; no floating point
is used anywhere in the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

__all__ = [
    "ResidueClass",
    "Factorization",
    "crt_extended",
    "valuation",
    "kth_root",
    "is_kth_power",
    "kth_power_residues",
    "is_prime",
    "factor",
    "divisors",
    "divisor_pairs",
    "integer_roots",
]


@dataclass(frozen=True)
class ResidueClass:
    """The set {residue + modulus*t : t in Z}, stored with 0 <= residue < modulus."""

    modulus: int
    residue: int

    def __post_init__(self) -> None:
        if self.modulus < 1:
            raise ValueError(f"modulus must be >= 1, got {self.modulus}")
        object.__setattr__(self, "residue", self.residue % self.modulus)

    def __contains__(self, n: int) -> bool:
        return n % self.modulus == self.residue


def crt_extended(classes: Iterable[ResidueClass]) -> ResidueClass | None:
    """Intersect residue classes with arbitrary (not necessarily coprime) moduli.

    Returns the class modulo the lcm of the moduli containing the
    intersection, or None when the intersection is empty.
    """
    m, r = 1, 0
    for c in classes:
        g = math.gcd(m, c.modulus)
        if (c.residue - r) % g != 0:
            return None
        lcm = m // g * c.modulus
        m2 = c.modulus // g
        if m2 > 1:
            t = ((c.residue - r) // g * pow(m // g, -1, m2)) % m2
        else:
            t = 0
        r = (r + m * t) % lcm
        m = lcm
    return ResidueClass(m, r)


def valuation(p: int, n: int) -> int:
    """Largest e with p**e dividing n.  n == 0 is rejected; callers branch first."""
    if n == 0:
        raise ValueError("valuation of 0 is undefined here; handle zero before calling")
    if p < 2 or not is_prime(p):
        raise ValueError(f"p must be prime, got {p}")
    n = abs(n)
    e = 0
    while n % p == 0:
        n //= p
        e += 1
    return e


def kth_root(n: int, k: int) -> int | None:
    """Return u with u**k == n, or None.  For even k the nonnegative root."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k == 1:
        return n
    if n < 0:
        if k % 2 == 0:
            return None
        r = kth_root(-n, k)
        return None if r is None else -r
    if n in (0, 1):
        return n
    if k == 2:
        r = math.isqrt(n)
        return r if r * r == n else None
    # Newton iteration on integers, seeded from the bit length.
    x = 1 << (-(-n.bit_length() // k))
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            break
        x = y
    return x if x**k == n else None


def is_kth_power(n: int, k: int) -> bool:
    return kth_root(n, k) is not None


def floor_root(n: int, k: int) -> int:
    """Largest u with u**k <= n (n >= 0, k >= 1)."""
    if n < 0 or k < 1:
        raise ValueError("need n >= 0 and k >= 1")
    if k == 1 or n in (0, 1):
        return n
    if k == 2:
        return math.isqrt(n)
    x = 1 << (-(-n.bit_length() // k))
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            break
        x = y
    return x


def kth_power_residues(k: int, m: int) -> frozenset[int]:
    """{u**k mod m : 0 <= u < m}."""
    if k < 1 or m < 1:
        raise ValueError("need k >= 1 and m >= 1")
    return frozenset(pow(u, k, m) for u in range(m))


_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin (exact for all n < 3.3e24)."""
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _SMALL_PRIMES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _pollard_rho(n: int) -> int:
    """A nontrivial factor of composite odd n."""
    if n % 2 == 0:
        return 2
    for c in range(1, 100):
        x = y = 2
        d = 1
        while d == 1:
            x = (x * x + c) % n
            y = (y * y + c) % n
            y = (y * y + c) % n
            d = math.gcd(abs(x - y), n)
        if d != n:
            return d
    raise ArithmeticError(f"rho failed on {n}")  # pragma: no cover


@dataclass(frozen=True)
class Factorization:
    """sign * prod(p**e); primes strictly increasing, exponents >= 1."""

    sign: int
    factors: tuple[tuple[int, int], ...]

    @property
    def value(self) -> int:
        v = self.sign
        for p, e in self.factors:
            v *= p**e
        return v


def factor(n: int) -> Factorization:
    """Complete prime factorization by trial division plus Pollard rho."""
    if n == 0:
        raise ValueError("cannot factor 0")
    sign = 1 if n > 0 else -1
    n = abs(n)
    counts: dict[int, int] = {}
    for p in _SMALL_PRIMES:
        while n % p == 0:
            counts[p] = counts.get(p, 0) + 1
            n //= p
    p = 41
    while p * p <= n and p < 100_000:
        while n % p == 0:
            counts[p] = counts.get(p, 0) + 1
            n //= p
        p += 2
    stack = [n] if n > 1 else []
    while stack:
        m = stack.pop()
        if m == 1:
            continue
        if is_prime(m):
            counts[m] = counts.get(m, 0) + 1
            continue
        d = _pollard_rho(m)
        stack.append(d)
        stack.append(m // d)
    return Factorization(sign, tuple(sorted(counts.items())))


def divisors(n: int) -> list[int]:
    """Positive divisors of n, ascending."""
    if n == 0:
        raise ValueError("0 has infinitely many divisors")
    ds = [1]
    for p, e in factor(n).factors:
        ds = [d * p**i for d in ds for i in range(e + 1)]
    return sorted(ds)


def divisor_pairs(n: int) -> list[tuple[int, int]]:
    """All ordered signed factorizations (d, n/d) of nonzero n."""
    out = []
    for d in divisors(n):
        out.append((d, n // d))
        out.append((-d, n // -d))
    return out


# ---------------------------------------------------------------------------
# Exact integer roots of rational-coefficient polynomials.


def _int_coeffs(coeffs: Sequence[Fraction | int]) -> list[int]:
    fracs = [Fraction(c) for c in coeffs]
    lcm = 1
    for c in fracs:
        lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
    return [int(c * lcm) for c in fracs]


def _poly_eval(coeffs: Sequence[int], x: int) -> int:
    v = 0
    for c in reversed(coeffs):
        v = v * x + c
    return v


def _cauchy_bound(coeffs: Sequence[int]) -> int:
    # All real roots lie in |x| <= 1 + max |c_i / c_d|.
    lead = coeffs[-1]
    m = max(abs(c) for c in coeffs[:-1]) if len(coeffs) > 1 else 0
    return 1 + m // abs(lead) + 1


def _sign_breakpoints(coeffs: list[int]) -> list[int]:
    """Integers bracketing every real root of the polynomial, ascending.

    Between consecutive returned points the polynomial has constant sign at
    integer arguments, which is what the binary searches below rely on.
    """
    deg = len(coeffs) - 1
    if deg <= 0:
        return []
    if deg == 1:
        c0, c1 = coeffs
        q = -c0 // c1
        return [q - 1, q, q + 1]
    deriv = [i * coeffs[i] for i in range(1, len(coeffs))]
    pts = _sign_breakpoints(deriv)
    bound = _cauchy_bound(coeffs)
    grid = sorted(set(pts + [-bound, bound]))
    out = set(grid)
    # Monotone stretches between grid points: bisect for sign changes.
    for lo, hi in zip(grid, grid[1:]):
        flo, fhi = _poly_eval(coeffs, lo), _poly_eval(coeffs, hi)
        if flo == 0 or fhi == 0 or (flo > 0) == (fhi > 0):
            continue
        a, b = lo, hi
        while b - a > 1:
            mid = (a + b) // 2
            fm = _poly_eval(coeffs, mid)
            if fm == 0 or (fm > 0) != (flo > 0):
                b = mid
            else:
                a = mid
        out.add(a)
        out.add(b)
    return sorted(out)


def integer_roots(coeffs: Sequence[Fraction | int]) -> list[int]:
    """All integer roots of the polynomial sum(coeffs[i] * x**i), ascending.

    Exact: isolates monotone stretches via recursive derivative breakpoints,
    then bisects with integer arithmetic only.
    """
    cs = _int_coeffs(coeffs)
    while cs and cs[-1] == 0:
        cs.pop()
    if not cs:
        raise ValueError("the zero polynomial has every integer as a root")
    if len(cs) == 1:
        return []
    roots = set()
    # Factor out x**v so breakpoint logic sees a nonzero constant term.
    v = 0
    while cs[v] == 0:
        v += 1
    if v:
        roots.add(0)
        cs = cs[v:]
        if len(cs) == 1:
            return sorted(roots)
    pts = _sign_breakpoints(cs)
    bound = _cauchy_bound(cs)
    grid = sorted(set(pts + [-bound, bound]))
    for x in grid:
        if _poly_eval(cs, x) == 0:
            roots.add(x)
    for lo, hi in zip(grid, grid[1:]):
        flo, fhi = _poly_eval(cs, lo), _poly_eval(cs, hi)
        if flo == 0 or fhi == 0 or (flo > 0) == (fhi > 0):
            continue
        a, b = lo, hi
        while b - a > 1:
            mid = (a + b) // 2
            fm = _poly_eval(cs, mid)
            if fm == 0:
                roots.add(mid)
                break
            if (fm > 0) != (flo > 0):
                b = mid
            else:
                a = mid
    return sorted(roots)
