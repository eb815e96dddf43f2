"""Unit tests for the exact blocked-polynomial core."""
from __future__ import annotations

import random
from fractions import Fraction

import pytest

from cylcert.errors import ShapeMismatchError
from cylcert.poly import (
    BlockShape,
    BlockedPoly,
    block_sum_of_squares,
    coeff_abs_sum,
    homogenize_block,
    multinomial,
    simplex_sum,
    substitute,
    weighted_norm,
)


def P(shape: BlockShape, terms: dict) -> BlockedPoly:
    return BlockedPoly(shape, {k: Fraction(v) for k, v in terms.items()})


def random_poly(rng: random.Random, shape: BlockShape, max_terms: int = 5, max_deg: int = 3) -> BlockedPoly:
    terms = {}
    for _ in range(rng.randint(0, max_terms)):
        exp = tuple(rng.randint(0, max_deg) for _ in range(shape.width))
        terms[exp] = Fraction(rng.randint(-9, 9), rng.randint(1, 9))
    return BlockedPoly(shape, terms)


# ---------------------------------------------------------------------------
# multiplication
# ---------------------------------------------------------------------------

def test_multiply_binomial_square():
    # (X1 + Y)^2 = X1^2 + 2 X1 Y + Y^2
    sh = BlockShape(n=1, r1=1)
    p = P(sh, {(1, 0): 1, (0, 1): 1})
    assert (p * p).terms == {(2, 0): 1, (1, 1): 2, (0, 2): 1}


def test_multiply_identity():
    sh = BlockShape(n=2, r1=1)
    rng = random.Random(7)
    for _ in range(20):
        p = random_poly(rng, sh)
        assert p * BlockedPoly.constant(sh, 1) == p


def test_multiply_difference_of_squares():
    sh = BlockShape(n=2, r1=0)
    x1 = BlockedPoly.variable(sh, 0)
    x2 = BlockedPoly.variable(sh, 1)
    assert (x1 - x2) * (x1 + x2) == x1 * x1 - x2 * x2


def test_multiply_shape_mismatch():
    a = BlockedPoly.constant(BlockShape(1, 1), 1)
    b = BlockedPoly.constant(BlockShape(2, 1), 1)
    with pytest.raises(ShapeMismatchError):
        _ = a * b


def test_ring_axioms_random():
    rng = random.Random(2024)
    sh = BlockShape(n=2, r1=1, homs=("Z",))
    for _ in range(40):
        a = random_poly(rng, sh)
        b = random_poly(rng, sh)
        c = random_poly(rng, sh)
        assert a * b == b * a
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert a + b == b + a
        assert (a - b) + b == a


# ---------------------------------------------------------------------------
# substitution
# ---------------------------------------------------------------------------

def test_substitute_x0_affine():
    # X0^2 with X0 -> 1 - X1 gives 1 - 2 X1 + X1^2
    sh = BlockShape(n=1, r1=0, homs=("X0",))
    x0 = sh.hom_index("X0")
    p = BlockedPoly.monomial(sh, (0, 2))
    repl = BlockedPoly.constant(sh, 1) - BlockedPoly.variable(sh, 0)
    q = substitute(p, {x0: repl})
    assert q.terms == {(0, 0): 1, (1, 0): -2, (2, 0): 1}


def test_substitute_z_to_one():
    sh = BlockShape(n=0, r1=1, homs=("Z",))
    p = P(sh, {(2, 0): 1, (0, 2): 1})  # Y^2 + Z^2
    q = substitute(p, {sh.hom_index("Z"): BlockedPoly.constant(sh, 1)})
    assert q.terms == {(2, 0): 1, (0, 0): 1}


def test_substitute_unknown_variable():
    sh = BlockShape(n=1, r1=0)
    p = BlockedPoly.variable(sh, 0)
    with pytest.raises(IndexError):
        substitute(p, {3: p})


def test_substitute_composes_with_eval():
    rng = random.Random(11)
    sh = BlockShape(n=2, r1=1)
    for _ in range(15):
        p = random_poly(rng, sh, max_terms=4, max_deg=2)
        r = random_poly(rng, sh, max_terms=3, max_deg=2)
        pt = [Fraction(rng.randint(-3, 3), rng.randint(1, 3)) for _ in range(sh.width)]
        composed = substitute(p, {0: r})
        direct_pt = list(pt)
        direct_pt[0] = r.eval_at(pt)
        assert composed.eval_at(pt) == p.eval_at(direct_pt)


# ---------------------------------------------------------------------------
# block homogenization
# ---------------------------------------------------------------------------

def test_homogenize_simple():
    # Y^2 + X1, pad Y-block to degree 2 with Z: Y^2 + X1 Z^2
    sh = BlockShape(n=1, r1=1)
    p = P(sh, {(0, 2): 1, (1, 0): 1})
    q = homogenize_block(p, "y1", 2, "Z")
    assert q.shape.homs == ("Z",)
    assert q.terms == {(0, 2, 0): 1, (1, 0, 2): 1}
    assert q.is_block_homogeneous("y1", "Z")


def test_homogenize_already_homogeneous():
    sh = BlockShape(n=1, r1=2)
    p = P(sh, {(0, 2, 0): 1, (1, 1, 1): -3})
    q = homogenize_block(p, "y1", 2, "Z")
    z = q.shape.hom_index("Z")
    assert all(exp[z] == 0 for exp in q.terms)


def test_bihomogenize_split_case():
    # Y1*W1^2 + 1, first block to degree 1 with Z1, second to 2 with Z2:
    # result Y1*W1^2 + Z1*Z2^2
    sh = BlockShape(n=0, r1=1, r2=1)
    p = P(sh, {(1, 2): 1, (0, 0): 1})
    q = homogenize_block(homogenize_block(p, "y1", 1, "Z1"), "y2", 2, "Z2")
    assert q.shape.homs == ("Z1", "Z2")
    assert q.terms == {(1, 2, 0, 0): 1, (0, 0, 1, 2): 1}
    assert q.is_block_homogeneous("y1", "Z1")
    assert q.is_block_homogeneous("y2", "Z2")


def test_homogenize_degree_too_small():
    sh = BlockShape(n=0, r1=1)
    p = P(sh, {(3,): 1})
    with pytest.raises(ValueError):
        homogenize_block(p, "y1", 2, "Z")


def test_homogenize_then_dehomogenize_is_identity():
    rng = random.Random(5)
    sh = BlockShape(n=2, r1=2)
    for _ in range(25):
        p = random_poly(rng, sh, max_terms=6, max_deg=3)
        m = p.block_degree("y1") + rng.randint(0, 2)
        q = homogenize_block(p, "y1", m, "Z")
        back = substitute(q, {q.shape.hom_index("Z"): BlockedPoly.constant(q.shape, 1)})
        assert back == p.embed(q.shape)


# ---------------------------------------------------------------------------
# weighted norm
# ---------------------------------------------------------------------------

def test_norm_cross_term_weight():
    # X1*X2 has weight binom(2;1,1) = 2, so the norm is 1/2
    sh = BlockShape(n=2, r1=0)
    p = P(sh, {(1, 1): 1})
    assert weighted_norm(p) == Fraction(1, 2)


def test_norm_mixed_unbounded():
    # X1^2 + X1*Y^2: both X-weights are 1 (Y carries no weight)
    sh = BlockShape(n=1, r1=1)
    p = P(sh, {(2, 0): 1, (1, 2): 1})
    assert weighted_norm(p) == 1


def test_norm_constant():
    sh = BlockShape(n=2, r1=1)
    assert weighted_norm(BlockedPoly.constant(sh, 3)) == 3


def test_norm_counts_x0_in_weight():
    # X0*X1 with active X0: weight binom(2;1,1) = 2
    sh = BlockShape(n=1, r1=0, homs=("X0",))
    p = P(sh, {(1, 1): 1})
    assert weighted_norm(p) == Fraction(1, 2)


def test_norm_homogeneity_and_subadditivity():
    rng = random.Random(99)
    sh = BlockShape(n=3, r1=1)
    for _ in range(30):
        p = random_poly(rng, sh)
        q = random_poly(rng, sh)
        c = Fraction(rng.randint(-7, 7), rng.randint(1, 5))
        assert weighted_norm(p.scale(c)) == abs(c) * weighted_norm(p)
        assert weighted_norm(p + q) <= weighted_norm(p) + weighted_norm(q)


def test_norm_degree_hint_validated():
    sh = BlockShape(n=1, r1=0)
    p = P(sh, {(3,): 1})
    assert weighted_norm(p, degree_hint=5) == 1
    with pytest.raises(ValueError):
        weighted_norm(p, degree_hint=2)


# ---------------------------------------------------------------------------
# degrees and misc helpers
# ---------------------------------------------------------------------------

def test_block_degree():
    sh = BlockShape(n=1, r1=1)
    p = P(sh, {(2, 1): 1, (0, 3): 1})  # X1^2 Y + Y^3
    assert p.block_degree("y1") == 3
    assert p.block_degree("x") == 2
    assert BlockedPoly.zero(sh).block_degree("x") == 0
    assert BlockedPoly.zero(sh).block_degree("y1") == 0


def test_multinomial_values():
    assert multinomial((1, 1)) == 2
    assert multinomial((2, 0)) == 1
    assert multinomial((2, 1, 1)) == 12
    assert multinomial(()) == 1


def test_power_matches_repeated_multiplication():
    rng = random.Random(3)
    sh = BlockShape(n=2, r1=1)
    for _ in range(10):
        p = random_poly(rng, sh, max_terms=3, max_deg=2)
        assert p**0 == BlockedPoly.constant(sh, 1)
        assert p**1 == p
        assert p**3 == p * p * p


def test_eval_exact():
    sh = BlockShape(n=1, r1=1)
    p = P(sh, {(1, 2): 3, (0, 0): -1})  # 3 X1 Y^2 - 1
    assert p.eval_at([Fraction(1, 2), Fraction(2)]) == Fraction(5)


def test_block_sum_of_squares_and_simplex_sum():
    sh = BlockShape(n=2, r1=2, homs=("X0", "Z"))
    q = block_sum_of_squares(sh, "y1", "Z")
    pt = [Fraction(0), Fraction(0), Fraction(2), Fraction(3), Fraction(0), Fraction(5)]
    assert q.eval_at(pt) == 4 + 9 + 25
    s = simplex_sum(sh)
    pt2 = [Fraction(1, 4), Fraction(1, 4), Fraction(0), Fraction(0), Fraction(1, 2), Fraction(0)]
    assert s.eval_at(pt2) == 1


def test_coeff_abs_sum():
    sh = BlockShape(n=1, r1=0)
    p = P(sh, {(0,): Fraction(-3, 2), (2,): 2})
    assert coeff_abs_sum(p) == Fraction(7, 2)


def test_zero_coefficients_dropped():
    sh = BlockShape(n=1, r1=0)
    p = BlockedPoly(sh, {(1,): Fraction(0), (2,): Fraction(1)})
    assert (1,) not in p.terms
    q = P(sh, {(2,): 1})
    assert (p - q) == BlockedPoly.zero(sh)
    assert not (p - q)


def test_embed_and_drop_homogenizers():
    sh = BlockShape(n=1, r1=1)
    p = P(sh, {(1, 1): 2})
    wide = p.embed(sh.with_homogenizers("Z", "X0"))
    assert wide.shape.homs == ("X0", "Z")
    assert wide.terms == {(1, 1, 0, 0): 2}
    assert wide.drop_unused_homogenizers() == p
