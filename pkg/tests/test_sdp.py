"""Solver tests: analytic optima, Farkas rays, presolve, random cross-checks."""

import math

import numpy as np
import pytest

from spectracert import sdp
from spectracert.sdp import (
    DUAL_INFEASIBLE,
    INACCURATE,
    OPTIMAL,
    PRIMAL_INFEASIBLE,
    SdpProblem,
    add_compactification,
    caps_active,
    psd_factor,
    restrict_solution,
    solve,
    solve_robust,
)


def entrywise_rows(problem, block, A0, As, nfree_extra=0):
    """Rows X_ij - sum_k x_k (A_k)_ij = (A0)_ij on the given block."""
    d = A0.shape[0]
    n = len(As)
    for i in range(d):
        for j in range(i, d):
            M = np.zeros((d, d))
            M[i, j] = M[j, i] = 1.0 if i == j else 0.5
            fv = [-As[k][i, j] for k in range(n)] + [0.0] * nfree_extra
            problem.add_constraint({block: M}, free=fv, rhs=A0[i, j])


# ---------------------------------------------------------------------------
# analytic instances


def test_scalar_bound():
    # min X11 with X11 - s = 1 and both scalars PSD: optimum 1
    p = SdpProblem([1, 1])
    p.add_constraint({0: np.array([[1.0]]), 1: np.array([[-1.0]])}, rhs=1.0)
    p.set_objective({0: np.array([[1.0]])})
    s = solve(p)
    assert s.status == OPTIMAL
    assert abs(s.objective_value - 1.0) < 1e-7
    assert s.max_residual() < 1e-7


def test_smallest_eigenvalue():
    # min tr(C X) over tr X = 1 is the smallest eigenvalue of C
    p = SdpProblem([2])
    p.add_constraint({0: np.eye(2)}, rhs=1.0)
    p.set_objective({0: np.diag([1.0, 2.0])})
    s = solve(p)
    assert s.status == OPTIMAL
    assert abs(s.objective_value - 1.0) < 1e-7


def test_max_sense():
    p = SdpProblem([2], sense="max")
    p.add_constraint({0: np.eye(2)}, rhs=1.0)
    p.set_objective({0: np.diag([1.0, 2.0])})
    s = solve(p)
    assert s.status == OPTIMAL
    assert abs(s.objective_value - 2.0) < 1e-7


def test_objective_constant():
    p = SdpProblem([1])
    p.add_constraint({0: np.array([[1.0]])}, rhs=2.0)
    p.set_objective({0: np.array([[3.0]])}, constant=-5.0)
    s = solve(p)
    assert s.status == OPTIMAL
    assert abs(s.objective_value - 1.0) < 1e-6


def test_primal_infeasible_with_ray():
    # tr X = -1 has no PSD solution; the ray must verify by hand
    p = SdpProblem([2])
    p.add_constraint({0: np.eye(2)}, rhs=-1.0)
    p.set_objective({0: np.eye(2)})
    s = solve(p)
    assert s.status == PRIMAL_INFEASIBLE
    assert s.ray is not None
    y = s.ray["y"]
    assert float(np.array([-1.0]) @ y) > 0.5   # b^T y = 1 after normalization
    Zr = -y[0] * np.eye(2)
    assert np.linalg.eigvalsh(Zr)[0] > -1e-7


def test_dual_infeasible_with_ray():
    # unconstrained min of -tr X is unbounded below
    p = SdpProblem([2])
    p.set_objective({0: -np.eye(2)})
    s = solve(p)
    assert s.status == DUAL_INFEASIBLE
    assert s.ray is not None
    Xr = s.ray["X"][0]
    assert np.linalg.eigvalsh(Xr)[0] > -1e-9
    assert np.sum(-np.eye(2) * Xr) < -1e-3


def test_free_variable_bound():
    # min u with u - s = 1, s PSD scalar: optimum 1 at u = 1
    p = SdpProblem([1], nfree=1)
    p.add_constraint({0: np.array([[-1.0]])}, free=[1.0], rhs=1.0)
    p.set_objective(free=[1.0])
    s = solve(p)
    assert s.status == OPTIMAL
    assert abs(s.objective_value - 1.0) < 1e-7
    assert abs(s.free[0] - 1.0) < 1e-6


def test_free_variable_unbounded_ray():
    p = SdpProblem([1], nfree=1)
    p.add_constraint({0: np.array([[-1.0]])}, free=[1.0], rhs=1.0)
    p.set_objective(free=[-1.0])
    s = solve(p)
    assert s.status == DUAL_INFEASIBLE
    assert s.ray is not None
    u = s.ray["free"]
    X = s.ray["X"][0]
    # along the ray: A(X) + F u stays 0 and the objective decreases
    assert abs(-X[0, 0] + u[0]) < 1e-9
    assert -u[0] < -1e-9


def test_unused_free_variable_unbounded():
    # a free variable absent from all rows but present in the objective
    p = SdpProblem([1], nfree=1)
    p.add_constraint({0: np.array([[1.0]])}, free=[0.0], rhs=1.0)
    p.set_objective(free=[1.0])
    s = solve(p)
    assert s.status == DUAL_INFEASIBLE
    assert abs(s.ray["free"][0] + 1.0) < 1e-12


def test_two_blocks_coupled():
    # min tr X + tr Y with tr X + tr Y = 3 split across blocks
    p = SdpProblem([2, 3])
    p.add_constraint({0: np.eye(2), 1: np.eye(3)}, rhs=3.0)
    p.set_objective({0: np.eye(2), 1: np.eye(3)})
    s = solve(p)
    assert s.status == OPTIMAL
    assert abs(s.objective_value - 3.0) < 1e-6


# ---------------------------------------------------------------------------
# presolve: zero rows, facial reduction, exact infeasibility


def test_zero_row_consistent_is_dropped():
    p = SdpProblem([1])
    p.add_constraint({0: np.zeros((1, 1))}, rhs=0.0)
    p.add_constraint({0: np.array([[1.0]])}, rhs=2.0)
    p.set_objective({0: np.array([[1.0]])})
    s = solve(p)
    assert s.status == OPTIMAL
    assert abs(s.objective_value - 2.0) < 1e-7


def test_zero_row_inconsistent_is_infeasible():
    p = SdpProblem([1])
    p.add_constraint({0: np.zeros((1, 1))}, rhs=1.0)
    p.set_objective({0: np.array([[1.0]])})
    s = solve(p)
    assert s.status == PRIMAL_INFEASIBLE
    assert s.ray is not None
    assert s.ray["residual"] < 1e-12


def test_facial_reduction_gap_dual():
    # tr(E22 S) = 0 forces the middle row and column of S to vanish,
    # after which S11 + 2 S23 = 1 pins S11 = 1; for the objective
    # alpha * S11 the optimum is exactly alpha
    for alpha in (1.0, 0.5, 2.0):
        A0 = np.diag([alpha, 0.0, 0.0])
        A1 = np.zeros((3, 3))
        A1[1, 1] = 1.0
        A2 = np.zeros((3, 3))
        A2[0, 0] = 1.0
        A2[1, 2] = A2[2, 1] = 1.0
        p = SdpProblem([3], sense="max")
        p.add_constraint({0: A1}, rhs=0.0)
        p.add_constraint({0: A2}, rhs=1.0)
        p.set_objective({0: -A0})
        s = solve(p)
        assert s.status == OPTIMAL
        assert abs(s.objective_value - (-alpha)) < 1e-8
        assert any("facial" in n for n in s.notes)
        S = s.X[0]
        assert abs(S[0, 0] - 1.0) < 1e-7
        assert abs(S[1, 1]) < 1e-9 and abs(S[1, 2]) < 1e-9


def test_facial_reduction_exposes_infeasibility():
    # S11 = 0 forces S12 = 0, so 4 S12 = -1 becomes 0 = -1
    p = SdpProblem([2])
    p.add_constraint({0: np.diag([1.0, 0.0])}, rhs=0.0)
    p.add_constraint({0: np.array([[0.0, 2.0], [2.0, 0.0]])}, rhs=-1.0)
    s = solve(p)
    assert s.status == PRIMAL_INFEASIBLE
    assert any("facial" in n for n in s.notes)


def test_facial_reduction_nsd_row():
    # the same face found through an all-NSD row
    p = SdpProblem([2])
    p.add_constraint({0: np.diag([-1.0, 0.0])}, rhs=0.0)
    p.add_constraint({0: np.diag([0.0, 1.0])}, rhs=5.0)
    p.set_objective({0: np.eye(2)})
    s = solve(p)
    assert s.status == OPTIMAL
    assert abs(s.objective_value - 5.0) < 1e-7
    assert abs(s.X[0][0, 0]) < 1e-9


# ---------------------------------------------------------------------------
# random instances with planted strictly feasible pairs


def planted_problem(rng, with_free=True):
    nb = int(rng.integers(1, 3))
    sizes = [int(rng.integers(1, 5)) for _ in range(nb)]
    nf = int(rng.integers(0, 3)) if with_free else 0
    m = int(rng.integers(1, 7))
    p = SdpProblem(sizes, nfree=nf)
    X0 = []
    for s in sizes:
        B = rng.standard_normal((s, s))
        X0.append(np.eye(s) + B @ B.T)
    u0 = rng.standard_normal(nf)
    rows = []
    for _ in range(m):
        blocks = {}
        for bi in range(nb):
            M = rng.standard_normal((sizes[bi], sizes[bi]))
            blocks[bi] = (M + M.T) / 2
        fv = rng.standard_normal(nf) if nf else None
        rhs = sum(float(np.sum(blocks[bi] * X0[bi])) for bi in blocks)
        if nf:
            rhs += float(fv @ u0)
        rows.append((blocks, fv, rhs))
        p.add_constraint(blocks, fv, rhs)
    y0 = rng.standard_normal(m)
    C = [sum(y0[i] * rows[i][0][bi] for i in range(m)) + np.eye(sizes[bi])
         for bi in range(nb)]
    g = sum(y0[i] * rows[i][1] for i in range(m)) if nf else None
    p.set_objective({bi: C[bi] for bi in range(nb)}, g)
    return p, rows, C, g


def test_random_strictly_feasible():
    rng = np.random.default_rng(20240811)
    for _ in range(50):
        p, rows, C, g = planted_problem(rng)
        s = solve(p)
        assert s.status == OPTIMAL
        assert s.max_residual() < 1e-7
        # primal feasibility of the returned point
        for blocks, fv, rhs in rows:
            lhs = sum(float(np.sum(blocks[bi] * s.X[bi])) for bi in blocks)
            if fv is not None:
                lhs += float(fv @ s.free)
            assert abs(lhs - rhs) < 1e-5 * (1 + abs(rhs))
        for Xb in s.X:
            assert np.linalg.eigvalsh(Xb)[0] > -1e-7
        # dual feasibility and matching objective
        m = p.m
        for bi, Cb in enumerate(C):
            Zb = Cb - sum(s.y[i] * rows[i][0][bi] for i in range(m))
            assert np.linalg.eigvalsh(Zb)[0] > -1e-6
        if g is not None:
            Fty = sum(s.y[i] * rows[i][1] for i in range(m))
            assert np.max(np.abs(Fty - g)) < 1e-6
        dval = float(p.rhs_vector() @ s.y)
        assert abs(s.objective_value - dval) < 1e-6 * (
            1 + abs(s.objective_value))


def test_random_weak_duality():
    # for feasible instances every dual value stays below the primal value
    rng = np.random.default_rng(99)
    for _ in range(20):
        p, rows, C, g = planted_problem(rng, with_free=False)
        s = solve(p)
        assert s.status == OPTIMAL
        dval = float(p.rhs_vector() @ s.y)
        assert dval <= s.objective_value + 1e-6 * (1 + abs(dval))


def test_diagonal_matches_linprog():
    scipy_opt = pytest.importorskip("scipy.optimize")
    rng = np.random.default_rng(5)
    for _ in range(15):
        n = int(rng.integers(2, 6))
        m = int(rng.integers(1, n + 1))
        x0 = rng.uniform(0.5, 2.0, size=n)
        Arows = rng.standard_normal((m, n))
        brhs = Arows @ x0
        c = rng.standard_normal(n) + 2.0
        res = scipy_opt.linprog(c, A_eq=Arows, b_eq=brhs,
                                bounds=[(0, None)] * n, method="highs")
        p = SdpProblem([n])
        for i in range(m):
            p.add_constraint({0: np.diag(Arows[i])}, rhs=brhs[i])
        p.set_objective({0: np.diag(c)})
        s = solve(p)
        if res.status == 0:
            assert s.status == OPTIMAL
            assert abs(s.objective_value - res.fun) < 1e-5 * (1 + abs(res.fun))
        elif res.status == 3:
            assert s.status == DUAL_INFEASIBLE
        elif res.status == 2:
            assert s.status == PRIMAL_INFEASIBLE


# ---------------------------------------------------------------------------
# psd_factor


def test_psd_factor_identity():
    W = psd_factor(np.eye(2))
    assert W.shape == (2, 2)
    assert np.allclose(W.T @ W, np.eye(2), atol=1e-12)


def test_psd_factor_zero():
    W = psd_factor(np.zeros((3, 3)))
    assert W.shape == (0, 3)


def test_psd_factor_rank_one():
    v = np.array([1.0, 2.0, -1.0])
    W = psd_factor(np.outer(v, v))
    assert W.shape == (1, 3)
    assert np.max(np.abs(W.T @ W - np.outer(v, v))) < 1e-12


def test_psd_factor_random_roundtrip():
    rng = np.random.default_rng(3)
    for _ in range(100):
        n = int(rng.integers(1, 7))
        r = int(rng.integers(0, n + 1))
        B = rng.standard_normal((r, n))
        U = B.T @ B
        W = psd_factor(U)
        assert np.max(np.abs(W.T @ W - U)) < 1e-10 * max(
            1.0, float(np.max(np.abs(U))))


def test_psd_factor_rejects_indefinite():
    with pytest.raises(ValueError):
        psd_factor(np.diag([1.0, -1.0]))


# ---------------------------------------------------------------------------
# compactified solves


def test_compactification_roundtrip():
    # bounded instance: caps must stay inactive and the optimum unchanged
    p = SdpProblem([2], nfree=1)
    p.add_constraint({0: np.eye(2)}, free=[1.0], rhs=4.0)
    p.set_objective({0: np.eye(2)}, free=[0.5])
    aug, info = add_compactification(p, box=10.0, trace_cap=100.0)
    s = solve(aug)
    assert s.status == OPTIMAL
    assert abs(s.objective_value - 2.0) < 1e-6
    r = restrict_solution(s, info)
    assert len(r.X) == 1 and r.y.shape == (1,)
    assert not caps_active(s, info)


def test_compactification_cap_binds_on_unbounded():
    # same rows but a slope that pushes u to the box wall
    p = SdpProblem([2], nfree=1)
    p.add_constraint({0: np.eye(2)}, free=[1.0], rhs=4.0)
    p.set_objective({0: np.eye(2)}, free=[2.0])
    aug, info = add_compactification(p, box=10.0, trace_cap=100.0)
    s = solve(aug)
    assert s.status == OPTIMAL
    assert caps_active(s, info)
    assert abs(s.free[0] + 10.0) < 1e-5


def test_solve_robust_plain_passthrough():
    p = SdpProblem([2])
    p.add_constraint({0: np.eye(2)}, rhs=1.0)
    p.set_objective({0: np.diag([1.0, 2.0])})
    s, meta = solve_robust(p)
    assert s.status == OPTIMAL
    assert meta["method"] == "plain"
    assert abs(s.objective_value - 1.0) < 1e-7


def test_solve_robust_infeasible_passthrough():
    p = SdpProblem([2])
    p.add_constraint({0: np.eye(2)}, rhs=-1.0)
    s, meta = solve_robust(p)
    assert s.status == PRIMAL_INFEASIBLE
    assert meta["method"] == "plain"


# ---------------------------------------------------------------------------
# input validation


def test_rejects_bad_block_shape():
    p = SdpProblem([2])
    with pytest.raises(ValueError):
        p.add_constraint({0: np.eye(3)}, rhs=0.0)


def test_rejects_bad_sense():
    with pytest.raises(ValueError):
        SdpProblem([1], sense="maximize")


def test_rejects_bad_free_length():
    p = SdpProblem([1], nfree=2)
    with pytest.raises(ValueError):
        p.add_constraint({0: np.eye(1)}, free=[1.0], rhs=0.0)
