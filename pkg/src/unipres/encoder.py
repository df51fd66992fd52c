"""Encoding Diophantine equations into the square-predicate fragment.

h(x1..xn) = 0 is rewritten over the signature <0, 1, +, -, Z^2> using at
most four bound variables, all existential: monomials are peeled off one
at a time (alternating two accumulator variables), products are reduced
by 4xy = (x+y)^2 - (x-y)^2 (alternating the other pair), and squaring
itself is asserted through the five-square chain
Z^2(w) & Z^2(w + 2T + 1) & ... & Z^2(w + 8T + 16), which pins w = T^2.

The chain length is the Buchi constant M = 5 (conjectured by Buchi,
proof announced by Xiao); it is exposed as a parameter so a skeptic can
raise it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from ._ast import ParseError
from .formula import SToken, read_sexprs

__all__ = [
    "MultiPoly",
    "SLin",
    "SEq",
    "SSquare",
    "SAnd",
    "SExists",
    "SquareFormula",
    "EquivReport",
    "encode",
    "check_equiv",
    "eval_square_formula",
    "parse_poly",
    "format_square_formula",
    "bound_variables",
]

BUCHI_CHAIN = 5


@dataclass(frozen=True)
class MultiPoly:
    """Integer polynomial in x1..xn as {exponent vector: coefficient}."""

    nvars: int
    monomials: tuple[tuple[tuple[int, ...], int], ...]

    @staticmethod
    def from_dict(nvars: int, d: dict) -> "MultiPoly":
        items = tuple(sorted(((e, c) for e, c in d.items() if c != 0), key=_grlex_key))
        return MultiPoly(nvars, items)

    def eval(self, point) -> int:
        total = 0
        for expo, c in self.monomials:
            term = c
            for v, e in zip(point, expo):
                term *= v**e
            total += term
        return total

    @property
    def degree(self) -> int:
        return max((sum(e) for e, _ in self.monomials), default=0)


def _grlex_key(item):
    expo, _ = item
    return (-sum(expo), tuple(-e for e in expo))


# --- formula AST over <0,1,+,-,Z^2> ---------------------------------------


@dataclass(frozen=True)
class SLin:
    """Linear combination sum(coeff * var) + const."""

    coeffs: tuple[tuple[str, int], ...]
    const: int = 0

    @staticmethod
    def of(const: int = 0, **vars_) -> "SLin":
        return SLin(tuple(sorted((v, c) for v, c in vars_.items() if c)), const)

    def __add__(self, other: "SLin") -> "SLin":
        d = dict(self.coeffs)
        for v, c in other.coeffs:
            d[v] = d.get(v, 0) + c
        return SLin(tuple(sorted((v, c) for v, c in d.items() if c)), self.const + other.const)

    def __neg__(self) -> "SLin":
        return SLin(tuple((v, -c) for v, c in self.coeffs), -self.const)

    def __sub__(self, other: "SLin") -> "SLin":
        return self + (-other)

    def scale(self, k: int) -> "SLin":
        if k == 0:
            return SLin((), 0)
        return SLin(tuple((v, k * c) for v, c in self.coeffs), k * self.const)

    def eval(self, env: dict) -> int:
        return self.const + sum(c * env[v] for v, c in self.coeffs)

    def free_vars(self):
        return {v for v, _ in self.coeffs}


@dataclass(frozen=True)
class SEq:
    lhs: SLin  # asserts lhs = 0


@dataclass(frozen=True)
class SSquare:
    arg: SLin  # asserts Z^2(arg)


@dataclass(frozen=True)
class SAnd:
    args: tuple


@dataclass(frozen=True)
class SExists:
    var: str
    body: object


SquareFormula = object  # any of SEq / SSquare / SAnd / SExists


def bound_variables(f) -> set[str]:
    out = set()
    stack = [f]
    while stack:
        node = stack.pop()
        if isinstance(node, SExists):
            out.add(node.var)
            stack.append(node.body)
        elif isinstance(node, SAnd):
            stack.extend(node.args)
    return out


# --- encoding ---------------------------------------------------------------


def _chain(w: SLin, t: SLin, chain_len: int) -> list:
    """Atoms pinning w = t^2 via squares in second-difference-2 progression."""
    return [SSquare(w + t.scale(2 * i) + SLin.of(i * i)) for i in range(chain_len)]


def _square_def(target: str, head_sign: int, head_var: str, inner, chain_len: int):
    """Formula asserting target = (head_sign*head_var + inner)^2.

    inner is an SLin or a nonlinear monomial (coeff, vars) to be reduced
    first with the complementary variable pair.
    """
    w = SLin.of(0, **{target: 1})
    if isinstance(inner, SLin):
        t = SLin.of(0, **{head_var: head_sign}) + inner
        return SAnd(tuple(_chain(w, t, chain_len)))
    coeff, vs = inner
    pool = ("t0", "t1") if target in ("t2", "t3") else ("t2", "t3")
    u, v = pool
    sub = _reduce_monomial(u, v, coeff, vs, chain_len)
    t = SLin.of(0, **{head_var: head_sign}) + SLin.of(0, **{u: 1}) + SLin.of(0, **{v: -1})
    body = SAnd(tuple(_chain(w, t, chain_len)) + sub)
    return SExists(u, SExists(v, body))


def _reduce_monomial(u: str, v: str, coeff: int, vs: tuple, chain_len: int):
    """Conjuncts making u - v equal the monomial coeff * prod(vs).

    coeff must carry the 4^(len(vs)-1) scaling so that u = (x + g)^2 and
    v = (-x + g)^2 with g = (coeff/4) * rest stay integral.
    """
    head, rest = vs[0], vs[1:]
    c4 = coeff // 4
    if len(rest) == 1:
        g = SLin.of(0, **{rest[0]: c4})
        return (
            _square_def(u, 1, head, g, chain_len),
            _square_def(v, -1, head, g, chain_len),
        )
    return (
        _square_def(u, 1, head, (c4, rest), chain_len),
        _square_def(v, -1, head, (c4, rest), chain_len),
    )


def encode(h: MultiPoly, chain_len: int = BUCHI_CHAIN) -> SquareFormula:
    """Formula over <0,1,+,-,Z^2> equivalent to h(x1..xn) = 0.

    Uses at most 4 bound variables t0..t3, all existentially quantified.
    """
    deg = h.degree
    scale = 4 ** max(deg - 1, 0)
    linear = SLin.of(0)
    monos = []
    for expo, c in h.monomials:
        d = sum(expo)
        if d <= 1:
            sc = c * scale
            if d == 0:
                linear += SLin.of(sc)
            else:
                var = f"x{expo.index(max(expo)) + 1}"
                linear += SLin.of(0, **{var: sc})
        else:
            vs = []
            for i, e in enumerate(expo):
                vs.extend([f"x{i + 1}"] * e)
            monos.append((c * scale, tuple(vs)))
    if not monos:
        return SEq(linear)

    def rule1_name(r: int) -> str:
        return "t0" if r % 2 == 1 else "t1"

    p = len(monos)
    # Innermost conjunct: T_p = linear tail.
    acc = SEq(SLin.of(0, **{rule1_name(p): 1}) - linear)
    for r in range(p, 0, -1):
        cur = rule1_name(r)
        # Equation at level r: for r = 1:  g_1 + T_1 = 0
        # for r >= 2:          T_{r-1} = g_r + T_r, i.e. g_r + T_r - T_{r-1} = 0
        eq_lin = SLin.of(0, **{cur: 1})
        if r >= 2:
            eq_lin = eq_lin - SLin.of(0, **{rule1_name(r - 1): 1})
        coeff, vs = monos[r - 1]
        u, v = "t2", "t3"
        sub = _reduce_monomial(u, v, coeff, vs, chain_len)
        eq = SEq(eq_lin + SLin.of(0, **{u: 1}) + SLin.of(0, **{v: -1}))
        level = SExists(u, SExists(v, SAnd((eq,) + sub)))
        acc = SExists(cur, SAnd((level, acc)))
    return acc


# --- exact evaluation and the equivalence checker ---------------------------


def _is_square(n: int) -> bool:
    if n < 0:
        return False
    r = math.isqrt(n)
    return r * r == n


@dataclass(frozen=True)
class _Plan:
    """Flattened evaluation plan for a purely existential conjunction.

    The formula is equivalent to exists(all bound vars). AND(atoms); each
    bound variable is pinned by a defining conjunct (a linear equation or
    an adjacent pair of square-chain atoms), giving a static resolution
    order.  `checks[i]` lists the atoms that become fully known after
    step i (step -1 holds the atoms over free variables only).
    """

    steps: tuple            # (var, (recipes...)) in resolution order
    atoms: tuple            # ("eq" | "sq", SLin) with uniquely renamed vars
    checks: tuple           # per-step tuples of atom indices
    unresolved: tuple       # bound vars with no recipe (formula is then false)


def _flatten(f):
    order: list[str] = []
    atoms: list[tuple[str, SLin]] = []
    counter = [0]

    def rename(sl: SLin, scope) -> SLin:
        return SLin(tuple(sorted((scope.get(v, v), c) for v, c in sl.coeffs)), sl.const)

    def walk(node, scope):
        if isinstance(node, SExists):
            fresh = f"b{counter[0]}"
            counter[0] += 1
            order.append(fresh)
            walk(node.body, {**scope, node.var: fresh})
        elif isinstance(node, SAnd):
            for a in node.args:
                walk(a, scope)
        elif isinstance(node, SEq):
            atoms.append(("eq", rename(node.lhs, scope)))
        elif isinstance(node, SSquare):
            atoms.append(("sq", rename(node.arg, scope)))
        else:
            raise TypeError(f"not a square formula: {node!r}")

    walk(f, {})
    return order, atoms


def _build_plan(f) -> _Plan:
    order, atoms = _flatten(f)
    bound = set(order)
    known = {v for _, sl in atoms for v in sl.free_vars() if v not in bound}
    steps = []
    remaining = list(order)
    sq_atoms = [(i, sl) for i, (kind, sl) in enumerate(atoms) if kind == "sq"]
    while True:
        placed = False
        for var in remaining:
            recipes = []
            for kind, sl in atoms:
                if kind != "eq":
                    continue
                d = dict(sl.coeffs)
                cv = d.pop(var, 0)
                if cv and all(v in known for v in d):
                    recipes.append(("eq", cv, SLin(tuple(sorted(d.items())), sl.const)))
            for (i0, a0), (i1, a1) in zip(sq_atoms, sq_atoms[1:]):
                if i1 != i0 + 1:
                    continue
                cv = dict(a0.coeffs).get(var, 0)
                if cv == 0:
                    continue
                diff = a1 - a0
                if dict(diff.coeffs).get(var, 0) != 0:
                    continue
                rest = dict(a0.coeffs)
                rest.pop(var)
                if all(v in known for v in diff.free_vars()) and all(v in known for v in rest):
                    recipes.append(
                        ("chain", cv, SLin(tuple(sorted(rest.items())), a0.const), diff)
                    )
            if recipes:
                steps.append((var, tuple(recipes)))
                known.add(var)
                remaining.remove(var)
                placed = True
                break
        if not placed:
            break
    # Atom check schedule: after which step does each atom become known?
    checks: list[list[int]] = [[] for _ in range(len(steps) + 1)]
    stage_of = {var: i for i, (var, _) in enumerate(steps)}
    for idx, (_, sl) in enumerate(atoms):
        stage = -1
        dead = False
        for v in sl.free_vars():
            if v in stage_of:
                stage = max(stage, stage_of[v])
            elif v in bound:
                dead = True
        if not dead:
            checks[stage + 1].append(idx)
    return _Plan(
        tuple(steps),
        tuple(atoms),
        tuple(tuple(c) for c in checks),
        tuple(v for v in remaining),
    )


_PLAN_CACHE: dict = {}


def _plan_for(f) -> _Plan:
    # Formulas are immutable, hashable trees; hash once, reuse the plan.
    plan = _PLAN_CACHE.get(f)
    if plan is None:
        plan = _build_plan(f)
        if len(_PLAN_CACHE) > 512:
            _PLAN_CACHE.clear()
        _PLAN_CACHE[f] = plan
    return plan


def _recipe_value(recipe, env) -> int | None:
    if recipe[0] == "eq":
        _, cv, rest = recipe
        num = -rest.eval(env)
        return num // cv if num % cv == 0 else None
    _, cv, rest, diff = recipe
    num = diff.eval(env) - 1
    if num % 2:
        return None
    t = num // 2
    num2 = t * t - rest.eval(env)
    return num2 // cv if num2 % cv == 0 else None


def eval_square_formula(f, env: dict) -> bool:
    """Exact truth of a formula at an assignment of its free variables.

    Bound variables are searched over their determined values only: each
    is pinned by a defining equation or a pair of adjacent chain atoms,
    which yields a computable window of candidates.
    """
    plan = _plan_for(f)
    if plan.unresolved:
        return False

    def atom_ok(idx, env2) -> bool:
        kind, sl = plan.atoms[idx]
        v = sl.eval(env2)
        return v == 0 if kind == "eq" else _is_square(v)

    def run(step: int, env2) -> bool:
        for idx in plan.checks[step]:
            if not atom_ok(idx, env2):
                return False
        if step == len(plan.steps):
            return True
        var, recipes = plan.steps[step]
        tried = set()
        for r in recipes:
            val = _recipe_value(r, env2)
            if val is None or val in tried:
                continue
            tried.add(val)
            if run(step + 1, {**env2, var: val}):
                return True
        return False

    return run(0, dict(env))


def _magnitude_bound(f, grid: int) -> int:
    """Largest |value| any evaluation step can see on the grid (intervals)."""
    plan = _plan_for(f)
    iv = {}
    for _, sl in plan.atoms:
        for v in sl.free_vars():
            if v.startswith("x"):
                iv[v] = (-grid, grid)

    def lin_iv(sl: SLin):
        lo = hi = sl.const
        for v, c in sl.coeffs:
            vlo, vhi = iv.get(v, (0, 0))
            a, b = c * vlo, c * vhi
            lo += min(a, b)
            hi += max(a, b)
        return lo, hi

    worst = grid
    for var, recipes in plan.steps:
        lo, hi = 0, 0
        for r in recipes:
            if r[0] == "eq":
                _, cv, rest = r
                rlo, rhi = lin_iv(rest)
                m = max(abs(rlo), abs(rhi)) // abs(cv) + 1
                lo, hi = min(lo, -m), max(hi, m)
            else:
                _, cv, rest, diff = r
                dlo, dhi = lin_iv(diff)
                t = max(abs(dlo), abs(dhi)) // 2 + 1
                rlo, rhi = lin_iv(rest)
                m = (t * t + max(abs(rlo), abs(rhi))) // abs(cv) + 1
                lo, hi = min(lo, -m), max(hi, m)
        iv[var] = (lo, hi)
        worst = max(worst, -lo, hi)
    for _, sl in plan.atoms:
        alo, ahi = lin_iv(sl)
        worst = max(worst, abs(alo), abs(ahi))
    return worst


@dataclass(frozen=True)
class EquivReport:
    passed: bool
    counterexample: tuple | None
    checked: int


def _eval_vec(f, env, np):
    """Vectorized plan evaluation; env maps free vars to int64 arrays."""
    plan = _plan_for(f)
    size = next(iter(env.values())).shape
    if plan.unresolved:
        return np.zeros(size, dtype=bool)

    def lin_vec(sl, env2):
        total = np.full(size, sl.const, dtype=np.int64)
        for v, c in sl.coeffs:
            total = total + c * env2[v]
        return total

    def atom_ok(idx, env2):
        kind, sl = plan.atoms[idx]
        vals = lin_vec(sl, env2)
        if kind == "eq":
            return vals == 0
        nonneg = vals >= 0
        r = np.sqrt(np.maximum(vals, 0).astype(np.float64)).astype(np.int64)
        hit = np.zeros(size, dtype=bool)
        for d in (-1, 0, 1):
            hit |= (r + d) * (r + d) == vals
        return nonneg & hit

    def run(step, env2, mask):
        for idx in plan.checks[step]:
            mask = mask & atom_ok(idx, env2)
            if not mask.any():
                return mask
        if step == len(plan.steps):
            return mask
        var, recipes = plan.steps[step]
        acc = np.zeros(size, dtype=bool)
        seen: list = []
        for r in recipes:
            if r[0] == "eq":
                _, cv, rest = r
                num = -lin_vec(rest, env2)
                ok = num % cv == 0
                val = num // cv
            else:
                _, cv, rest, diff = r
                num = lin_vec(diff, env2) - 1
                ok = num % 2 == 0
                t = num // 2
                num2 = t * t - lin_vec(rest, env2)
                ok = ok & (num2 % cv == 0)
                val = num2 // cv
            # Recipes mostly agree pointwise; only genuinely new values
            # warrant another descent.
            novel = ok.copy()
            for ok_j, val_j in seen:
                novel &= ~(ok_j & (val_j == val))
            seen.append((ok, val))
            sub = mask & novel & ~acc
            if not sub.any():
                continue
            acc = acc | run(step + 1, {**env2, var: val}, sub)
        return acc

    return run(0, dict(env), np.ones(size, dtype=bool))


def check_equiv(h: MultiPoly, f, grid: int) -> EquivReport:
    """h = 0 iff f, on every assignment with all |x_i| <= grid.

    A vectorized path handles the bulk; it falls back to exact big-int
    evaluation when intermediate values might not fit machine words.
    """
    if grid < 1:
        raise ValueError("need grid >= 1")
    n = h.nvars
    try:
        import numpy as np
    except ImportError:  # pragma: no cover
        np = None
    if np is not None and _magnitude_bound(f, grid) < 2**50:
        axes = [np.arange(-grid, grid + 1, dtype=np.int64) for _ in range(n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        env = {f"x{i + 1}": m.ravel() for i, m in enumerate(mesh)}
        want = np.zeros_like(env["x1"])
        for expo, c in h.monomials:
            term = np.full_like(env["x1"], c)
            for i, e in enumerate(expo):
                for _ in range(e):
                    term = term * env[f"x{i + 1}"]
            want = want + term
        want0 = want == 0
        got = _eval_vec(f, env, np)
        mism = want0 != got
        if mism.any():
            idx = int(np.argmax(mism))
            point = tuple(int(env[f"x{i + 1}"][idx]) for i in range(n))
            return EquivReport(False, point, idx + 1)
        return EquivReport(True, None, int(want0.size))
    point = [-grid] * n
    checked = 0
    while True:
        env = {f"x{i + 1}": point[i] for i in range(n)}
        want = h.eval(point) == 0
        got = eval_square_formula(f, env)
        checked += 1
        if want != got:
            return EquivReport(False, tuple(point), checked)
        i = 0
        while i < n and point[i] == grid:
            point[i] = -grid
            i += 1
        if i == n:
            return EquivReport(True, None, checked)
        point[i] += 1


# --- surface syntax ----------------------------------------------------------


def parse_poly(text: str) -> MultiPoly:
    """Polynomial from the term grammar extended with variables and products.

    TERM := xK | INT | (+ TERM+) | (- TERM TERM) | (- TERM) | (* TERM TERM+)
    """
    exprs = read_sexprs(text)
    if len(exprs) != 1:
        raise ParseError("expected exactly one polynomial term")

    def walk(node) -> dict:
        # Keys are sorted tuples of variable indices (with multiplicity).
        if isinstance(node, SToken):
            s = node.text
            if s.startswith("x") and s[1:].isdigit() and int(s[1:]) >= 1:
                return {(int(s[1:]),): 1}
            try:
                return {(): int(s)} if int(s) else {}
            except ValueError:
                raise ParseError(f"unknown symbol '{s}'", node.line, node.col) from None
        if not node:
            raise ParseError("empty term")
        head = node[0].text if isinstance(node[0], SToken) else None
        args = node[1:]
        if head == "+":
            out: dict = {}
            for a in args:
                for k, v in walk(a).items():
                    out[k] = out.get(k, 0) + v
            return out
        if head == "-":
            if len(args) == 1:
                return {k: -v for k, v in walk(args[0]).items()}
            if len(args) == 2:
                out = dict(walk(args[0]))
                for k, v in walk(args[1]).items():
                    out[k] = out.get(k, 0) - v
                return out
            raise ParseError("(-) takes one or two arguments", *_tok_pos(node))
        if head == "*":
            out = {(): 1}
            for a in args:
                nxt: dict = {}
                for k1, v1 in out.items():
                    for k2, v2 in walk(a).items():
                        k = _mul_keys(k1, k2)
                        nxt[k] = nxt.get(k, 0) + v1 * v2
                out = nxt
            return out
        raise ParseError(f"unknown operator '{head}'", *_tok_pos(node))

    raw = walk(exprs[0])
    nvars = max((max(k) for k in raw if k), default=1)
    out: dict = {}
    for idx, c in raw.items():
        expo = [0] * nvars
        for i in idx:
            expo[i - 1] += 1
        key = tuple(expo)
        out[key] = out.get(key, 0) + c
    return MultiPoly.from_dict(nvars, out)


def _mul_keys(k1, k2):
    return tuple(sorted(k1 + k2))


def _tok_pos(node):
    t = node[0]
    return (t.line, t.col) if isinstance(t, SToken) else (None, None)


def format_square_formula(f) -> str:
    def lin(sl: SLin) -> str:
        parts = []
        for v, c in sl.coeffs:
            parts.append(v if c == 1 else f"(* {c} {v})")
        if sl.const or not parts:
            parts.append(str(sl.const))
        if len(parts) == 1:
            return parts[0]
        return "(+ " + " ".join(parts) + ")"

    if isinstance(f, SEq):
        return f"(= {lin(f.lhs)} 0)"
    if isinstance(f, SSquare):
        return f"(pow 2 {lin(f.arg)})"
    if isinstance(f, SAnd):
        return "(and " + " ".join(format_square_formula(a) for a in f.args) + ")"
    if isinstance(f, SExists):
        return f"(exists {f.var} {format_square_formula(f.body)})"
    raise TypeError(f"not a square formula: {f!r}")
