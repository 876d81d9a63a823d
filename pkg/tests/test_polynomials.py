"""Polynomial layer: ordering, arithmetic vs pointwise oracle, linear reduction."""

import math
import random
from fractions import Fraction

import pytest

from spectracert.polynomials import (
    EXACT,
    FLOAT,
    Combination,
    ModeError,
    MonomialBasis,
    Polynomial,
    PolynomialParseError,
    Unit,
    basis_size,
    format_polynomial,
    mono_key,
    monomials_upto,
    parse_polynomial,
    reduce_mod_linear,
)


def rand_poly(rng, nvars, degree, mode=EXACT, terms=6):
    monos = monomials_upto(nvars, degree)
    chosen = {}
    for _ in range(terms):
        m = rng.choice(monos)
        c = Fraction(rng.randint(-9, 9), rng.randint(1, 7))
        chosen[m] = chosen.get(m, Fraction(0)) + c
    p = Polynomial(nvars, chosen, EXACT)
    return p.promote() if mode == FLOAT else p


class TestBasisOrder:
    def test_sizes_match_binomials(self):
        for n in range(7):
            for d in range(7):
                assert len(monomials_upto(n, d)) == math.comb(n + d, n)
                assert basis_size(n, d) == math.comb(n + d, n)

    def test_examples_from_layout(self):
        assert monomials_upto(1, 2) == [(0,), (1,), (2,)]          # 1, x1, x1^2
        assert monomials_upto(2, 1) == [(0, 0), (1, 0), (0, 1)]    # 1, x1, x2
        assert len(MonomialBasis(3, 2)) == 10

    def test_degree_two_block_order(self):
        # within a degree, x1-heavy monomials come first
        upto = monomials_upto(2, 2)
        assert upto == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]

    def test_order_is_total_and_sorted(self):
        monos = monomials_upto(3, 4)
        keys = [mono_key(m) for m in monos]
        assert keys == sorted(keys)
        assert len(set(keys)) == len(keys)


class TestArithmetic:
    def test_mul_example(self):
        x = Polynomial.variable(0, 1)
        one = Polynomial.constant(1, 1)
        assert (x + one) * (x - one) == x * x - one

    def test_add_zero_identity(self):
        rng = random.Random(7)
        for _ in range(20):
            p = rand_poly(rng, 2, 3)
            assert p + Polynomial.zero(2) == p

    def test_no_zero_coefficients_stored(self):
        p = Polynomial(2, {(1, 0): 1, (0, 1): -1}, EXACT)
        q = Polynomial(2, {(1, 0): -1, (0, 1): 1}, EXACT)
        assert (p + q).terms == {}

    def test_mixed_mode_rejected(self):
        p = Polynomial.variable(0, 1, EXACT)
        q = Polynomial.variable(0, 1, FLOAT)
        with pytest.raises(ModeError):
            p + q
        assert p.promote() + q == q.scale(2)

    def test_agreement_with_pointwise_oracle_exact(self):
        rng = random.Random(11)
        for _ in range(50):
            f = rand_poly(rng, 3, 3)
            g = rand_poly(rng, 3, 3)
            for _ in range(5):
                pt = [Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(3)]
                assert (f * g).evaluate(pt) == f.evaluate(pt) * g.evaluate(pt)
                assert (f + g).evaluate(pt) == f.evaluate(pt) + g.evaluate(pt)
                assert (f - g).evaluate(pt) == f.evaluate(pt) - g.evaluate(pt)

    def test_agreement_with_pointwise_oracle_float(self):
        rng = random.Random(13)
        for _ in range(50):
            f = rand_poly(rng, 3, 3, mode=FLOAT)
            g = rand_poly(rng, 3, 3, mode=FLOAT)
            for _ in range(4):
                pt = [rng.uniform(-2, 2) for _ in range(3)]
                want = f.evaluate(pt) * g.evaluate(pt)
                got = (f * g).evaluate(pt)
                assert abs(got - want) <= 1e-12 * max(1.0, abs(want))

    def test_degree_and_coeff(self):
        p = parse_polynomial("-1/2*x1^2 + x2")
        assert p.degree() == 2
        assert p.coeff((2, 0)) == Fraction(-1, 2)
        assert p.coeff((0, 1)) == 1
        assert Polynomial.zero(2).degree() == -1


class TestTextFormat:
    def test_parse_canonical_example(self):
        p = parse_polynomial("-1/2*x1^2 + x2")
        assert p.terms == {(2, 0): Fraction(-1, 2), (0, 1): Fraction(1)}

    def test_whitespace_insensitive(self):
        a = parse_polynomial(" - 1/2 * x1 ^ 2+x2 ")
        b = parse_polynomial("-1/2*x1^2 + x2")
        assert a == b

    def test_round_trip(self):
        rng = random.Random(3)
        for _ in range(40):
            p = rand_poly(rng, 3, 3)
            assert parse_polynomial(format_polynomial(p), nvars=3) == p

    def test_parse_errors_are_reported(self):
        with pytest.raises(PolynomialParseError):
            parse_polynomial("x1 + @bad")
        with pytest.raises(PolynomialParseError):
            parse_polynomial("")
        with pytest.raises(PolynomialParseError):
            parse_polynomial("x3", nvars=2)

    def test_float_mode_parse(self):
        p = parse_polynomial("0.5*x1 - 2", mode=FLOAT)
        assert p.mode == FLOAT
        assert p.evaluate([2.0]) == -1.0


class TestReduceModLinear:
    def test_square_reduces_to_zero(self):
        x1 = Polynomial.variable(0, 2)
        f = x1 * x1
        res = reduce_mod_linear(f, [x1])
        assert isinstance(res, Combination)
        assert res.remainder.is_zero()
        assert res.cofactors[0] == x1

    def test_unit_detection(self):
        x1 = Polynomial.variable(0, 2)
        one = Polynomial.constant(1, 2)
        res = reduce_mod_linear(x1 * x1, [x1, one - x1])
        assert isinstance(res, Unit)
        lam = res.lambdas
        recon = Polynomial.zero(2)
        for c, ell in zip(lam, [x1, one - x1]):
            recon = recon + ell.scale(c)
        assert recon == one

    def test_empty_ideal(self):
        f = parse_polynomial("x1^2 + x2", nvars=2)
        res = reduce_mod_linear(f, [])
        assert isinstance(res, Combination)
        assert res.remainder == f

    def test_reconstruction_random_members_exact(self):
        # oracle: build f = sum p_i ell_i + r from random parts, reduce, rebuild
        rng = random.Random(41)
        for trial in range(100):
            n = rng.randint(1, 4)
            t = rng.randint(1, min(3, n))
            linears = []
            for _ in range(t):
                terms = {tuple([0] * n): Fraction(rng.randint(-3, 3))}
                for i in range(n):
                    mono = tuple(1 if j == i else 0 for j in range(n))
                    terms[mono] = Fraction(rng.randint(-3, 3))
                linears.append(Polynomial(n, terms, EXACT))
            f = Polynomial.zero(n)
            for ell in linears:
                f = f + rand_poly(rng, n, 2, terms=3) * ell
            res = reduce_mod_linear(f, linears)
            if isinstance(res, Unit):
                recon = Polynomial.zero(n)
                for c, ell in zip(res.lambdas, linears):
                    recon = recon + ell.scale(c)
                assert recon == Polynomial.constant(1, n)
                continue
            recon = res.remainder
            for p, ell in zip(res.cofactors, linears):
                recon = recon + p * ell
            assert recon == f, f"trial {trial}: reconstruction failed"
            # f was built inside the ideal, so the remainder must vanish
            assert res.remainder.is_zero()

    def test_reconstruction_nonmembers(self):
        rng = random.Random(42)
        for _ in range(50):
            n = rng.randint(2, 4)
            linears = [Polynomial.variable(0, n) + Polynomial.constant(
                Fraction(rng.randint(-2, 2)), n)]
            f = rand_poly(rng, n, 3)
            res = reduce_mod_linear(f, linears)
            assert isinstance(res, Combination)
            recon = res.remainder
            for p, ell in zip(res.cofactors, linears):
                recon = recon + p * ell
            assert recon == f
            # remainder avoids the solved variables
            for mono in res.remainder.terms:
                assert all(mono[v] == 0 for v in res.solved_vars)

    def test_cofactor_degree_bound(self):
        rng = random.Random(43)
        for _ in range(50):
            n = rng.randint(1, 3)
            linears = []
            for i in range(min(2, n)):
                terms = {tuple([0] * n): Fraction(rng.randint(-2, 2))}
                for j in range(n):
                    mono = tuple(1 if k == j else 0 for k in range(n))
                    terms[mono] = Fraction(rng.randint(-2, 2))
                linears.append(Polynomial(n, terms, EXACT))
            f = rand_poly(rng, n, 3)
            res = reduce_mod_linear(f, linears)
            if isinstance(res, Combination):
                for p in res.cofactors:
                    if not p.is_zero():
                        assert p.degree() <= max(f.degree() - 1, 0)

    def test_float_mode_pivoting(self):
        x1 = Polynomial.variable(0, 2, FLOAT)
        x2 = Polynomial.variable(1, 2, FLOAT)
        ell = x1.scale(1e-8) + x2  # pivot must pick the x2 column entry
        f = (x1 + x2) * ell
        res = reduce_mod_linear(f, [ell])
        assert isinstance(res, Combination)
        recon = res.remainder
        for p, e in zip(res.cofactors, [ell]):
            recon = recon + p * e
        diff = recon - f
        assert float(diff.max_abs_coeff()) <= 1e-9
