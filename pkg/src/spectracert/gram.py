"""Gram-matrix machinery for sums of squares and sos matrix polynomials.

A scalar sos polynomial of degree <= 2k is vec_k(x)^T Q vec_k(x) with Q PSD
over the monomial basis vec_k.  An sos matrix polynomial of size alpha is
S(x) = P(x)^T P(x) for a polynomial matrix P; in Gram form S(x)_{rs} =
sum_{u,v} Q[(u,r),(v,s)] x^u x^v with Q PSD over basis-monomial/row pairs,
laid out monomial-major: pair (u, r) sits at index u * alpha + r.

The row builders here turn "coefficient of x^w on both sides" into SDP
equality rows; the expanders turn Gram matrices back into Polynomial and
MatrixPolynomial objects for independent verification.  The two directions
are implemented separately on purpose: tests compare the assembled rows
against symbolic expansion, so a bug in one side cannot hide in the other.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .pencil import LinearPencil, MatrixPolynomial
from .polynomials import (
    FLOAT,
    Polynomial,
    mono_mul,
    monomials_upto,
)
from . import sdp


def product_pairs(basis_a, basis_b):
    """Map each product monomial to its list of (i, j) ordered index pairs."""
    out = {}
    for i, u in enumerate(basis_a):
        for j, v in enumerate(basis_b):
            out.setdefault(mono_mul(u, v), []).append((i, j))
    return out


def sos_rows(basis, nvars: int, cap: int):
    """Coefficient-extraction matrices for a scalar Gram form.

    Returns {w: M_w} over all monomials w of degree <= cap, such that the
    coefficient of x^w in vec^T Q vec equals tr(M_w Q).
    """
    N = len(basis)
    pairs = product_pairs(basis, basis)
    rows = {}
    for w in monomials_upto(nvars, cap):
        M = np.zeros((N, N))
        for i, j in pairs.get(w, ()):
            M[i, j] += 1.0
        rows[w] = M
    return rows


def sos_matrix_rows(pencil: LinearPencil, basis, cap: int):
    """Coefficient-extraction matrices for tr(A(x) S(x)) in Gram form.

    Returns {w: N_w} over monomials w of degree <= cap with
    coeff_w(tr(A S)) = tr(N_w Q) for the monomial-major Gram matrix Q of S.
    """
    nvars = pencil.nvars
    alpha = pencil.size
    N = len(basis)
    coeffs = [np.asarray(M, dtype=float) for M in pencil.coeffs]
    pairs = product_pairs(basis, basis)
    rows = {}
    for w in monomials_upto(nvars, cap):
        M = np.zeros((N * alpha, N * alpha))
        for z in range(nvars + 1):
            if z == 0:
                p = w
            else:
                if w[z - 1] == 0:
                    continue
                p = tuple(e - 1 if t == z - 1 else e for t, e in enumerate(w))
            Az = coeffs[z]
            for i, j in pairs.get(p, ()):
                M[i * alpha:(i + 1) * alpha, j * alpha:(j + 1) * alpha] += Az
        rows[w] = M
    return rows


def _symmetrized(Q, size: int, mode: str):
    """Average Q with its transpose; float Grams carry last-ulp asymmetry."""
    if mode == FLOAT:
        Qa = np.asarray(Q, dtype=float)
        return (Qa + Qa.T) / 2.0
    half = Fraction(1, 2)
    return [[(Fraction(Q[a][b]) + Fraction(Q[b][a])) * half
             for b in range(size)] for a in range(size)]


def expand_sos(Q, basis, nvars: int, mode: str = FLOAT) -> Polynomial:
    """Expand vec^T Q vec symbolically."""
    Q = _symmetrized(Q, len(basis), mode)
    terms = {}
    for i, u in enumerate(basis):
        for j, v in enumerate(basis):
            c = Q[i][j]
            if c == 0:
                continue
            w = mono_mul(u, v)
            terms[w] = terms.get(w, 0) + c
    return Polynomial(nvars, terms, mode)


def expand_sos_matrix(Q, basis, alpha: int, nvars: int,
                      mode: str = FLOAT) -> MatrixPolynomial:
    """Expand a monomial-major Gram matrix into the matrix polynomial S(x)."""
    N = len(basis)
    Q = _symmetrized(Q, N * alpha, mode)
    # build the upper triangle and mirror it, so float summation order
    # cannot break exact symmetry of the result
    grids = [[{} for _ in range(alpha)] for _ in range(alpha)]
    for i, u in enumerate(basis):
        for j, v in enumerate(basis):
            w = mono_mul(u, v)
            for r in range(alpha):
                for s in range(r, alpha):
                    c = Q[i * alpha + r][j * alpha + s]
                    if c == 0:
                        continue
                    t = grids[r][s]
                    t[w] = t.get(w, 0) + c
    entries = [[None] * alpha for _ in range(alpha)]
    for r in range(alpha):
        for s in range(r, alpha):
            p = Polynomial(nvars, grids[r][s], mode)
            entries[r][s] = p
            entries[s][r] = p
    return MatrixPolynomial(entries)


# ---------------------------------------------------------------------------
# membership in the truncated quadratic module


@dataclass
class MembershipLayout:
    """Block layout of an assembled membership SDP."""
    basis: list
    nvars: int
    alpha: int
    level: int
    scalar_block: int = 0
    matrix_block: int = 1


class MembershipResult:
    """Raw outcome of a membership solve; claiming requires verification."""

    def __init__(self, status, layout, Q_scalar=None, Q_matrix=None,
                 solution=None, meta=None):
        self.status = status
        self.layout = layout
        self.Q_scalar = Q_scalar
        self.Q_matrix = Q_matrix
        self.solution = solution
        self.meta = meta or {}

    @property
    def found(self) -> bool:
        return self.Q_scalar is not None

    def __repr__(self):
        return (f"MembershipResult(status={self.status!r}, "
                f"level={self.layout.level})")


def assemble_membership(pencil: LinearPencil, target: Polynomial, level: int):
    """SDP for target(x) = s(x) + tr(A(x) S(x)), s sos and S sos of level k.

    Level k allows degree 2k in s and in S, so degree 2k+1 overall.  One
    equality row per monomial of degree <= 2k+1 compares coefficients;
    the objective minimizes total Gram trace to keep the solve bounded
    and the recovered certificate small.
    """
    if target.nvars != pencil.nvars:
        raise ValueError("target and pencil disagree on the variable count")
    if level < 0:
        raise ValueError("level must be >= 0")
    cap = 2 * level + 1
    if target.degree() > cap:
        raise ValueError(
            f"target degree {target.degree()} exceeds level-{level} cap {cap}")
    nvars, alpha = pencil.nvars, pencil.size
    basis = monomials_upto(nvars, level)
    N = len(basis)
    layout = MembershipLayout(basis=basis, nvars=nvars, alpha=alpha,
                              level=level)
    problem = sdp.SdpProblem([N, N * alpha])
    srows = sos_rows(basis, nvars, cap)
    mrows = sos_matrix_rows(pencil, basis, cap)
    for w in monomials_upto(nvars, cap):
        rhs = float(target.coeff(w))
        problem.add_constraint({0: srows[w], 1: mrows[w]}, rhs=rhs)
    problem.set_objective({0: np.eye(N), 1: np.eye(N * alpha)})
    return problem, layout


def refine_membership(pencil: LinearPencil, target: Polynomial, level: int,
                      Q_scalar, Q_matrix,
                      cuts=(0.0, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1),
                      gn_iters: int = 60, row_tol: float = 1e-8):
    """Low-rank refit of a candidate Gram pair onto the identity rows.

    A stalled solve lands near the certificate face: eigenvalues split
    into signal and noise, but the range is tilted by the residual, so
    plain least-squares polishing leaves the PSD cone.  Writing each Gram
    as B B^T and running Gauss-Newton on the coefficient rows fixes the
    tilt with the cone constraint free of charge.  Tries the full-rank
    factors first, then truncations at several rank cuts (relative to
    the joint scale, which help when noise eigenvalues drown the
    Jacobian), and returns the first (Q_scalar, Q_matrix) pair whose
    rows land within row_tol, or None when no attempt converges.
    """
    nvars, alpha = pencil.nvars, pencil.size
    basis = monomials_upto(nvars, level)
    cap = 2 * level + 1
    srows = sos_rows(basis, nvars, cap)
    mrows = sos_matrix_rows(pencil, basis, cap)
    monos = monomials_upto(nvars, cap)
    Ms = [srows[w] for w in monos]
    MM = [mrows[w] for w in monos]
    b = np.array([float(target.coeff(w)) for w in monos])
    Qs = np.asarray(Q_scalar, dtype=float)
    QS = np.asarray(Q_matrix, dtype=float)
    ws, Vs = np.linalg.eigh((Qs + Qs.T) / 2)
    wS, VS = np.linalg.eigh((QS + QS.T) / 2)
    joint = max(1.0, ws[-1] if ws.size else 0.0, wS[-1] if wS.size else 0.0)

    def rows_of(Bs, BS):
        vals = np.array([np.sum(M * (Bs @ Bs.T)) for M in Ms])
        vals += np.array([np.sum(M * (BS @ BS.T)) for M in MM])
        return vals

    tried = set()
    for cut in cuts:
        thr = cut * joint
        ks = ws > thr
        kS = wS > thr
        ranks = (int(ks.sum()), int(kS.sum()))
        if ranks in tried or ranks == (0, 0):
            continue
        tried.add(ranks)
        Bs = Vs[:, ks] * np.sqrt(ws[ks])
        BS = VS[:, kS] * np.sqrt(wS[kS])
        converged = False
        for _ in range(gn_iters):
            r = b - rows_of(Bs, BS)
            if np.abs(r).max() < row_tol:
                converged = True
                break
            J = np.stack([np.concatenate([(2.0 * M @ Bs).ravel(),
                                          (2.0 * Mm @ BS).ravel()])
                          for M, Mm in zip(Ms, MM)])
            d, *_ = np.linalg.lstsq(J, r, rcond=None)
            base = np.linalg.norm(r)
            step = 1.0
            for _ in range(20):
                Bs2 = Bs + step * d[:Bs.size].reshape(Bs.shape)
                BS2 = BS + step * d[Bs.size:].reshape(BS.shape)
                if np.linalg.norm(b - rows_of(Bs2, BS2)) < base:
                    break
                step /= 2
            else:
                break
            Bs, BS = Bs2, BS2
        if converged:
            return Bs @ Bs.T, BS @ BS.T
    return None


def solve_membership(pencil: LinearPencil, target: Polynomial, level: int,
                     tol: float = 1e-8) -> MembershipResult:
    problem, layout = assemble_membership(pencil, target, level)
    sol, meta = sdp.solve_robust(problem, tol=tol)
    # a stalled iterate with tiny residuals is still a candidate Gram
    # pair; callers must verify it independently before claiming
    if sdp.near_optimal(sol) and sol.X is not None:
        return MembershipResult(sol.status, layout, Q_scalar=sol.X[0],
                                Q_matrix=sol.X[1], solution=sol, meta=meta)
    return MembershipResult(sol.status, layout, solution=sol, meta=meta)


def solve_membership_interior(pencil: LinearPencil, target: Polynomial,
                              level: int, caps=(10.0, 100.0),
                              tol: float = 1e-8) -> MembershipResult:
    """Membership candidate from the fat side of the certificate face.

    Minimizing trace parks the iterate on the boundary of the face,
    where stalls leave noisy Grams.  Maximizing total trace under a
    trace cap lands in the relative interior instead, with a clean
    signal/noise split that refinement can work with.  Optimality is
    irrelevant for membership, so a solution with active caps is just
    as good a candidate.
    """
    problem, layout = assemble_membership(pencil, target, level)
    N = len(layout.basis)
    problem.set_objective({0: -np.eye(N), 1: -np.eye(N * layout.alpha)})
    sol = None
    for cap in caps:
        aug, info = sdp.add_compactification(problem, box=cap,
                                             trace_cap=cap)
        sol = sdp.solve(aug, tol=tol)
        if sdp.near_optimal(sol) and sol.X is not None:
            inner = sdp.restrict_solution(sol, info)
            return MembershipResult(sol.status, layout,
                                    Q_scalar=inner.X[0],
                                    Q_matrix=inner.X[1], solution=inner,
                                    meta={"method": "interior", "cap": cap})
    return MembershipResult(sol.status if sol else sdp.INACCURATE, layout,
                            solution=sol, meta={"method": "interior",
                                                "cap": None})
