"""Gram assembly tests: expansion round-trips, row builders, membership."""

from fractions import Fraction

import numpy as np
import pytest

from spectracert import gram, sdp
from spectracert.pencil import LinearPencil, trace_pair
from spectracert.polynomials import (
    EXACT,
    FLOAT,
    Polynomial,
    basis_size,
    monomials_upto,
)

from conftest import (
    halfline_pencil,
    weakly_infeasible_2x2,
    weakly_infeasible_3x3,
)


def random_pencil(rng, nvars, alpha):
    coeffs = []
    for _ in range(nvars + 1):
        M = rng.standard_normal((alpha, alpha))
        coeffs.append((M + M.T) / 2)
    return LinearPencil(coeffs, FLOAT)


def test_product_pairs_by_hand():
    basis = monomials_upto(1, 1)          # [1, x]
    pairs = gram.product_pairs(basis, basis)
    assert pairs[(0,)] == [(0, 0)]
    assert sorted(pairs[(1,)]) == [(0, 1), (1, 0)]
    assert pairs[(2,)] == [(1, 1)]


def test_sos_rows_match_expansion():
    rng = np.random.default_rng(11)
    for _ in range(20):
        nvars = int(rng.integers(1, 4))
        k = int(rng.integers(0, 3))
        basis = monomials_upto(nvars, k)
        N = len(basis)
        B = rng.standard_normal((N, N))
        Q = B @ B.T
        poly = gram.expand_sos(Q, basis, nvars, FLOAT)
        rows = gram.sos_rows(basis, nvars, 2 * k + 1)
        for w in monomials_upto(nvars, 2 * k + 1):
            assert abs(float(np.sum(rows[w] * Q)) - float(poly.coeff(w))) < 1e-10


def test_sos_matrix_rows_match_trace_pair():
    # the row builder and the symbolic trace expansion are independent
    # code paths; they must agree coefficient by coefficient
    rng = np.random.default_rng(12)
    for _ in range(20):
        nvars = int(rng.integers(1, 3))
        alpha = int(rng.integers(1, 4))
        k = int(rng.integers(0, 3))
        pencil = random_pencil(rng, nvars, alpha)
        basis = monomials_upto(nvars, k)
        N = len(basis)
        B = rng.standard_normal((N * alpha, N * alpha))
        Q = B @ B.T
        S = gram.expand_sos_matrix(Q, basis, alpha, nvars, FLOAT)
        tp = trace_pair(pencil, S)
        rows = gram.sos_matrix_rows(pencil, basis, 2 * k + 1)
        scale = max(1.0, float(np.max(np.abs(Q))))
        for w in monomials_upto(nvars, 2 * k + 1):
            got = float(np.sum(rows[w] * Q))
            want = float(tp.coeff(w))
            assert abs(got - want) < 1e-9 * scale


def test_expand_sos_matrix_pointwise():
    # S(x) must equal (m(x) kron I)^T Q (m(x) kron I) at sample points
    rng = np.random.default_rng(13)
    for _ in range(20):
        nvars, alpha, k = 2, 3, 1
        basis = monomials_upto(nvars, k)
        N = len(basis)
        B = rng.standard_normal((N * alpha, N * alpha))
        Q = B @ B.T
        S = gram.expand_sos_matrix(Q, basis, alpha, nvars, FLOAT)
        x = rng.standard_normal(nvars)
        mvec = np.array([np.prod(x ** np.array(u)) for u in basis])
        K = np.kron(mvec, np.eye(alpha))      # K[r, u*alpha+s] = m_u d_rs
        want = K @ Q @ K.T
        got = S.evaluate(x)
        assert np.max(np.abs(got - want)) < 1e-10 * max(1, np.max(np.abs(want)))


def test_expand_sos_matrix_is_symmetric_object():
    rng = np.random.default_rng(14)
    basis = monomials_upto(2, 1)
    N = len(basis)
    B = rng.standard_normal((3 * N, 3 * N))
    S = gram.expand_sos_matrix(B @ B.T, basis, 3, 2, FLOAT)
    for r in range(3):
        for s in range(3):
            assert S.entries[r][s] == S.entries[s][r]


def test_expand_exact_mode():
    basis = monomials_upto(1, 1)
    Q = [[Fraction(1), Fraction(1, 2)], [Fraction(1, 2), Fraction(2)]]
    p = gram.expand_sos(Q, basis, 1, EXACT)
    # (1) + (1/2 + 1/2) x + 2 x^2
    assert p.coeff((0,)) == 1
    assert p.coeff((1,)) == 1
    assert p.coeff((2,)) == 2
    assert p.mode == EXACT


def test_assemble_membership_shape():
    pencil = weakly_infeasible_2x2()
    target = Polynomial.constant(-1, 1, EXACT)
    problem, layout = gram.assemble_membership(pencil, target, 1)
    N = basis_size(1, 1)
    assert problem.block_sizes == [N, N * 2]
    assert problem.m == basis_size(1, 3)
    assert layout.level == 1 and layout.alpha == 2


def test_assemble_membership_validation():
    pencil = weakly_infeasible_2x2()
    with pytest.raises(ValueError):
        gram.assemble_membership(pencil, Polynomial.constant(1, 2, EXACT), 0)
    with pytest.raises(ValueError):
        gram.assemble_membership(
            pencil, Polynomial.variable(0, 1, EXACT) ** 4, 1)
    with pytest.raises(ValueError):
        gram.assemble_membership(pencil, Polynomial.constant(1, 1, EXACT), -1)


def check_reconstruction(pencil, result, target, tol=1e-6):
    nvars, alpha = pencil.nvars, pencil.size
    s = gram.expand_sos(result.Q_scalar, result.layout.basis, nvars, FLOAT)
    S = gram.expand_sos_matrix(result.Q_matrix, result.layout.basis, alpha,
                               nvars, FLOAT)
    diff = s + trace_pair(pencil.to_float(), S) - target
    assert float(diff.max_abs_coeff()) < tol
    assert np.linalg.eigvalsh(np.asarray(result.Q_scalar))[0] > -1e-8
    assert np.linalg.eigvalsh(np.asarray(result.Q_matrix))[0] > -1e-8


def test_membership_feasible_shifted_target():
    # for [[1, x], [x, 0]] the function x + eps is a level-0 member:
    # with v = (sqrt(eps), 1/(2 sqrt(eps))), v^T A(x) v = eps + x
    pencil = LinearPencil([[[1, 0], [0, 0]], [[0, 1], [1, 0]]], EXACT)
    target = Polynomial(1, {(1,): 1.0, (0,): 0.1}, FLOAT)
    r = gram.solve_membership(pencil, target, 0)
    assert r.found
    check_reconstruction(pencil, r, target)


def test_membership_weakly_infeasible_2x2_levels():
    pencil = weakly_infeasible_2x2()
    minus1 = Polynomial.constant(-1.0, 1, FLOAT)
    r0 = gram.solve_membership(pencil, minus1, 0)
    assert r0.status == sdp.PRIMAL_INFEASIBLE
    assert not r0.found
    r1 = gram.solve_membership(pencil, minus1, 1)
    assert r1.found
    check_reconstruction(pencil, r1, minus1)


def test_membership_weakly_infeasible_3x3_levels():
    pencil = weakly_infeasible_3x3()
    minus1 = Polynomial.constant(-1.0, 2, FLOAT)
    assert gram.solve_membership(pencil, minus1, 0).status == \
        sdp.PRIMAL_INFEASIBLE
    assert gram.solve_membership(pencil, minus1, 1).status == \
        sdp.PRIMAL_INFEASIBLE
    r2 = gram.solve_membership(pencil, minus1, 2)
    assert r2.found
    check_reconstruction(pencil, r2, minus1)


def test_membership_feasible_pencil_never_refuted():
    # x >= 0 is nonempty, so -1 stays outside every level
    pencil = halfline_pencil()
    minus1 = Polynomial.constant(-1.0, 1, FLOAT)
    for k in (0, 1, 2):
        r = gram.solve_membership(pencil, minus1, k)
        assert not r.found


def test_membership_strongly_infeasible_level_zero():
    # diag(x, -1-x): constants v = (1, 1) give v^T A v = -1 directly
    pencil = LinearPencil([[[0, 0], [0, -1]], [[1, 0], [0, -1]]], EXACT)
    minus1 = Polynomial.constant(-1.0, 1, FLOAT)
    r = gram.solve_membership(pencil, minus1, 0)
    assert r.found
    check_reconstruction(pencil, r, minus1)
