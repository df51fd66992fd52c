import random
from fractions import Fraction

import pytest

from unipres import ParseError, PolyAtom, PowerAtom, Verdict, format_formula, normalize, parse
from unipres._ast import Cmp, LinTerm, PredAtomNode, Quant
from unipres import oracle
from unipres.formula import parse_multi


def test_parse_power_sentence():
    f = parse("(exists x (and (> x 8) (pow 2 x) (pow 3 (+ x 1))))")
    assert f.root.kind == "exists"
    body = f.root.body
    assert body.args[0] == Cmp(">", LinTerm(1, 0), LinTerm(0, 8))
    assert body.args[1].k == 2 and body.args[1].term == LinTerm(1, 0)
    assert body.args[2].k == 3 and body.args[2].term == LinTerm(1, 1)


def test_parse_pred_atom():
    f = parse("(declare-pred T (coeffs 1/2 1/2 0)) (exists x (pred T (+ (* 2 x) 1)))")
    assert f.decls[0].coeffs == (Fraction(1, 2), Fraction(1, 2), Fraction(0))
    node = f.root.body
    assert isinstance(node, PredAtomNode) and node.term == LinTerm(2, 1)


def test_parse_errors():
    with pytest.raises(ParseError, match="power exponent"):
        parse("(exists x (pow 1 x))")
    with pytest.raises(ParseError, match="unknown predicate"):
        parse("(exists x (pred T x))")
    with pytest.raises(ParseError, match="unknown symbol"):
        parse("(exists x (> x y))")
    with pytest.raises(ParseError, match="integer-valued"):
        parse("(declare-pred B (coeffs 1/3 0 0)) (exists x (pred B x))")
    with pytest.raises(ParseError, match="degree"):
        parse("(declare-pred B (coeffs 1 0 0 0 0)) (exists x (pred B x))")
    with pytest.raises(ParseError):
        parse("(exists x (> x 0)")  # unclosed


def test_parse_error_positions():
    try:
        parse("(exists x\n  (pow 1 x))")
    except ParseError as exc:
        assert exc.line == 2 and exc.col == 8
    else:
        pytest.fail("expected a ParseError")


def test_round_trip():
    texts = [
        "(exists x (and (> x 8) (pow 2 x) (pow 3 (+ x 1))))",
        "(forall x (not (pow 2 (- (* 3 x) 5))))",
        "(declare-pred T (coeffs 1/2 1/2 0))\n(exists x (or (pred T x) (mod x 7 3)))",
        "(exists x (= (* 2 x) (+ x 5)))",
    ]
    for t in texts:
        f = parse(t)
        assert parse(format_formula(f)) == f


def test_normalize_crt_example():
    nf = normalize(parse("(exists x (and (mod x 4 1) (mod x 6 5)))"))
    assert not nf.negated
    assert len(nf.systems) == 1
    s = nf.systems[0]
    assert s.substitution == (12, 5)
    assert not s.positives and not s.pending_mods
    assert s.resolved is not None and s.resolved.is_sat
    assert s.resolved.witness % 12 == 5 and s.resolved.witness % 4 == 1 and s.resolved.witness % 6 == 5


def test_normalize_infeasible_crt():
    nf = normalize(parse("(exists x (and (mod x 4 1) (mod x 6 2)))"))
    assert nf.systems == []


def test_normalize_interval():
    nf = normalize(parse("(exists x (and (> x 0) (< x 5) (pow 2 x)))"))
    sats = [s.resolved for s in nf.systems if s.resolved is not None]
    assert len(sats) == 1 and sats[0].is_sat
    assert sats[0].witness in (1, 4)


def test_normalize_interval_unsat_drops():
    nf = normalize(parse("(exists x (and (> x 4) (< x 9) (pow 2 x)))"))
    assert nf.systems == []


def test_normalize_forall():
    nf = normalize(parse("(forall x (not (pow 2 x)))"))
    assert nf.negated
    # The negated body is exists Z^2(x): case-split systems carry Z^2 atoms.
    atoms = [a for s in nf.systems for a in s.positives]
    assert any(isinstance(a, PowerAtom) and a.k == 2 for a in atoms)


def test_normalize_negative_power_coefficient_tail():
    # not Z^2(-2x + 30): beyond x = 15 the term is negative, so the
    # negation holds for free; below it a finite check decides.
    nf = normalize(parse("(exists x (and (> x 0) (pow 3 x) (not (pow 2 (+ (* -2 x) 30)))))"))
    assert nf.systems
    for s in nf.systems:
        for atom in s.positives + s.negatives:
            assert atom.a > 0


def test_normalize_positive_atoms_positive_coefficient():
    rngtexts = [
        "(exists x (and (> x -20) (pow 2 (- 5 x))))",
        "(exists x (and (< x 20) (pow 3 (- 5 (* 2 x)))))",
        "(exists x (pow 2 (- (* -3 x) 7)))",
    ]
    for t in rngtexts:
        for s in normalize(parse(t)).systems:
            for atom in s.positives + s.negatives:
                assert atom.a > 0
            assert s.lower is not None or s.resolved is not None


def test_normalize_pairwise_non_similar():
    nf = normalize(parse("(exists x (and (> x 0) (pow 2 (* 5 x)) (pow 3 (* 4 x))))"))
    for s in nf.systems:
        pows = [a for a in s.positives if isinstance(a, PowerAtom)]
        for i, a in enumerate(pows):
            for b in pows[i + 1 :]:
                assert a.a * b.b != a.b * b.a


def test_degree_one_pred_becomes_congruence():
    # f(u) = 3u + 1: value set is 1 mod 3
    nf = normalize(parse("(declare-pred L (coeffs 3 1)) (exists x (and (pred L x) (> x 0)))"))
    assert len(nf.systems) == 1
    s = nf.systems[0]
    assert s.substitution == (3, 1) and not s.positives


def test_degree_zero_pred_becomes_equality():
    nf = normalize(parse("(declare-pred Z (coeffs 7)) (exists x (pred Z (+ x 2)))"))
    sats = [s for s in nf.systems if s.resolved is not None and s.resolved.is_sat]
    assert len(sats) == 1 and sats[0].resolved.witness == 5


def _random_formula(rng: random.Random):
    decls = {
        "T": (Fraction(1, 2), Fraction(1, 2), Fraction(0)),
        "Q": (Fraction(1), Fraction(0), Fraction(-2)),
        "C": (Fraction(1), Fraction(0), Fraction(-3), Fraction(0)),
        "L": (Fraction(4), Fraction(1)),
    }

    def term():
        return f"(+ (* {rng.randint(-4, 4)} x) {rng.randint(-20, 20)})"

    def atom():
        roll = rng.random()
        if roll < 0.2:
            return f"({rng.choice(['<', '>', '='])} {term()} {term()})"
        if roll < 0.4:
            return f"(mod {term()} {rng.randint(2, 9)} {rng.randint(0, 8)})"
        if roll < 0.75:
            return f"(pow {rng.randint(2, 4)} {term()})"
        return f"(pred {rng.choice(list(decls))} {term()})"

    def body(depth):
        if depth == 0 or rng.random() < 0.4:
            return atom()
        op = rng.choice(["and", "or", "not"])
        if op == "not":
            return f"(not {body(depth - 1)})"
        parts = " ".join(body(depth - 1) for _ in range(rng.randint(2, 3)))
        return f"({op} {parts})"

    header = "".join(
        f"(declare-pred {n} (coeffs {' '.join(str(c) for c in cs)}))" for n, cs in decls.items()
    )
    return header + f"(exists x {body(2)})"


def _system_satisfied_at(system, x: int) -> bool:
    if system.sign_flipped:
        x = -x
    m, r = system.substitution
    if (x - r) % m:
        return False
    y = (x - r) // m
    if system.resolved is not None:
        if not system.resolved.is_sat:
            return False
        if system.resolved_all:
            return True
        return system.resolved_points is not None and y in system.resolved_points
    if system.lower is not None and y <= system.lower:
        return False
    if y in system.excluded:
        return False
    if not all(oracle.atom_eval(a, y) for a in system.positives):
        return False
    return not any(oracle.atom_eval(a, y) for a in system.negatives)


@pytest.mark.slow
def test_semantic_preservation_500():
    rng = random.Random(20240817)
    checked = 0
    for _ in range(500):
        text = _random_formula(rng)
        f = parse(text)
        nf = normalize(f)
        for x in range(-200, 201):
            direct = oracle.eval_at(f, x)
            covered = any(_system_satisfied_at(s, x) for s in nf.systems)
            assert covered == direct, (text, x)
        checked += 1
    assert checked == 500


def test_semantic_preservation_smoke():
    rng = random.Random(7)
    for _ in range(40):
        text = _random_formula(rng)
        f = parse(text)
        nf = normalize(f)
        for x in range(-60, 61):
            direct = oracle.eval_at(f, x)
            covered = any(_system_satisfied_at(s, x) for s in nf.systems)
            assert covered == direct, (text, x)


def test_parse_multi():
    fs = parse_multi("(declare-pred T (coeffs 1/2 1/2 0)) (exists x (pred T x)) (forall x (> x 0))")
    assert len(fs) == 2
    assert fs[0].decls and fs[1].root.kind == "forall"
