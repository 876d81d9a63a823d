"""Primal/dual builders for linear objectives over spectrahedra.

The primal program minimizes a linear polynomial l(x) subject to A(x) PSD.
Its standard semidefinite dual maximizes a subject to l - a = tr(A S) with
a constant PSD matrix S; when the feasible set has empty interior the two
optima can differ by a finite gap, and the dual may not attain its value.

The structured dual built by build_sos_dual closes that gap.  It augments
the standard dual with n rounds of auxiliary data: quadratic sos-matrices
S_i whose traces against A produce nonpositive quadratics on the feasible
set, symmetric matrices U_i capturing those quadratics over the degree-one
monomial vector vec1, and rectangular matrices W_i (dominated by U_i in the
sense U_i >= W_i^T W_i) whose bilinear forms vec2^T W_i vec1 are cubics
vanishing on the feasible set.  Each round's identity

    vec1^T U_i vec1 + vec2^T W_{i-1} vec1 + tr(A S_i) = 0    (W_0 = 0)

certifies the next batch of vanishing polynomials, and the final identity

    l - a + vec2^T W_n vec1 - tr(A S) = 0

is the standard dual constraint relaxed modulo those certified cubics.
The resulting program always attains the primal optimum.  The dominance
conditions are modeled as Schur blocks [[I, W_i], [W_i^T, U_i]] PSD with
the identity corner pinned by equality rows.

gap_report solves all three programs, extracts the structured dual point,
and re-verifies it symbolically.  functional_positivity decides whether a
linear functional given on a basis of symmetric matrices is nonnegative on
the cone they generate, returning either the structured dual point as a
certificate or an explicit cone member on which the functional is negative.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import sdp
from .gram import expand_sos, expand_sos_matrix, sos_rows, sos_matrix_rows
from .pencil import LinearPencil, trace_pair
from .polynomials import (
    EXACT,
    FLOAT,
    Polynomial,
    format_polynomial,
    mono_mul,
    monomials_upto,
    parse_polynomial,
)
from .verify import VerificationReport, psd_check

DEFAULT_TOL = 1e-8
PSD_MARGIN = 1e-7


@dataclass(frozen=True)
class SdpInstance:
    """A pencil plus a linear objective: minimize objective over A(x) PSD."""
    pencil: LinearPencil
    objective: Polynomial

    def __post_init__(self):
        if self.objective.nvars != self.pencil.nvars:
            raise ValueError("objective and pencil have different variables")
        if self.objective.degree() > 1:
            raise ValueError("objective must have degree <= 1")

    def objective_coeffs(self):
        """(constant, [c_1..c_n]) as floats."""
        n = self.pencil.nvars
        ell = self.objective.promote()
        const = float(ell.coeff(tuple([0] * n)))
        lin = [float(ell.coeff(tuple(1 if t == k else 0 for t in range(n))))
               for k in range(n)]
        return const, lin


def _entry_picker(i: int, j: int, size: int) -> np.ndarray:
    """Symmetric E with tr(E X) = X[i, j] for symmetric X."""
    E = np.zeros((size, size))
    if i == j:
        E[i, i] = 1.0
    else:
        E[i, j] = E[j, i] = 0.5
    return E


def build_primal(inst: SdpInstance) -> sdp.SdpProblem:
    """min l(x) s.t. A(x) PSD, as one PSD block X = A(x) plus free x."""
    pencil = inst.pencil.to_float()
    n, alpha = pencil.nvars, pencil.size
    const, lin = inst.objective_coeffs()
    prob = sdp.SdpProblem([alpha], nfree=n, sense="min")
    for i in range(alpha):
        for j in range(i, alpha):
            free = np.array([-float(pencil.coeffs[k + 1][i, j])
                             for k in range(n)])
            prob.add_constraint({0: _entry_picker(i, j, alpha)}, free=free,
                                rhs=float(pencil.coeffs[0][i, j]))
    prob.set_objective(free=np.array(lin), constant=const)
    return prob


def build_standard_dual(inst: SdpInstance) -> sdp.SdpProblem:
    """max a s.t. l - a = tr(A S), S PSD, via coefficient comparison."""
    pencil = inst.pencil.to_float()
    n = pencil.nvars
    const, lin = inst.objective_coeffs()
    prob = sdp.SdpProblem([pencil.size], sense="max")
    for k in range(n):
        prob.add_constraint({0: np.asarray(pencil.coeffs[k + 1], float)},
                            rhs=lin[k])
    prob.set_objective({0: -np.asarray(pencil.coeffs[0], float)},
                       constant=const)
    return prob


# ---------------------------------------------------------------------------
# the structured (gap-closing) dual


@dataclass
class SosDualLayout:
    """Block indices of an assembled structured dual."""
    nvars: int
    alpha: int
    s1: int
    s2: int
    vec1: list
    vec2: list
    block_S: int = 0
    # blocks 1..n are the sos-matrix Grams, n+1..2n the Schur blocks

    def gram_block(self, i: int) -> int:
        return 1 + (i - 1)

    def schur_block(self, i: int) -> int:
        return 1 + self.nvars + (i - 1)


def _w_picker(r: int, p: int, s2: int, s1: int) -> np.ndarray:
    """Symmetric C on the Schur block with tr(C Z) = W[r, p]."""
    C = np.zeros((s2 + s1, s2 + s1))
    C[r, s2 + p] = C[s2 + p, r] = 0.5
    return C


def _u_embed(M: np.ndarray, s2: int) -> np.ndarray:
    """Embed a vec1-pair coefficient matrix into the Schur block corner."""
    s1 = M.shape[0]
    C = np.zeros((s2 + s1, s2 + s1))
    C[s2:, s2:] = M
    return C


def build_sos_dual(inst: SdpInstance):
    """Assemble the structured dual; returns (problem, layout).

    Blocks: 0 holds the constant matrix S; 1..n the sos-matrix Grams of the
    S_i; n+1..2n the Schur blocks [[I, W_i], [W_i^T, U_i]].  One free
    variable carries a.  For n = 0 the program collapses to the standard
    dual with a as an explicit free variable.
    """
    pencil = inst.pencil.to_float()
    n, alpha = pencil.nvars, pencil.size
    vec1 = monomials_upto(n, 1)
    vec2 = monomials_upto(n, 2)
    s1, s2 = len(vec1), len(vec2)
    layout = SosDualLayout(n, alpha, s1, s2, vec1, vec2)

    sizes = [alpha] + [s1 * alpha] * n + [s2 + s1] * n
    prob = sdp.SdpProblem(sizes, nfree=1, sense="max")

    monos3 = monomials_upto(n, 3)
    u_rows = sos_rows(vec1, n, 3)
    trace_rows = sos_matrix_rows(pencil, vec1, 3)
    w_pairs = {}
    for r, wu in enumerate(vec2):
        for p, wv in enumerate(vec1):
            w_pairs.setdefault(mono_mul(wu, wv), []).append((r, p))

    def w_term_matrix(w) -> np.ndarray | None:
        pairs = w_pairs.get(w)
        if not pairs:
            return None
        C = np.zeros((s2 + s1, s2 + s1))
        for r, p in pairs:
            C[r, s2 + p] += 0.5
            C[s2 + p, r] += 0.5
        return C

    # pin the identity corner of every Schur block
    for i in range(1, n + 1):
        z = layout.schur_block(i)
        for k in range(s2):
            for l in range(k, s2):
                C = np.zeros((s2 + s1, s2 + s1))
                if k == l:
                    C[k, k] = 1.0
                else:
                    C[k, l] = C[l, k] = 0.5
                prob.add_constraint({z: C}, rhs=1.0 if k == l else 0.0)

    # round identities: vec1^T U_i vec1 + vec2^T W_{i-1} vec1 + tr(A S_i) = 0
    for i in range(1, n + 1):
        for w in monos3:
            blocks = {}
            Mu = u_rows.get(w)
            if Mu is not None and Mu.any():
                blocks[layout.schur_block(i)] = _u_embed(Mu, s2)
            Nw = trace_rows[w]
            if Nw.any():
                blocks[layout.gram_block(i)] = Nw
            if i >= 2:
                Cw = w_term_matrix(w)
                if Cw is not None:
                    blocks[layout.schur_block(i - 1)] = Cw
            if blocks:
                prob.add_constraint(blocks, rhs=0.0)

    # final identity: l - a + vec2^T W_n vec1 - tr(A S) = 0
    const, lin = inst.objective_coeffs()
    zero = tuple([0] * n)
    for w in monos3:
        blocks = {}
        if n >= 1:
            Cw = w_term_matrix(w)
            if Cw is not None:
                blocks[layout.schur_block(n)] = Cw
        deg = sum(w)
        if deg == 0:
            blocks[layout.block_S] = -np.asarray(pencil.coeffs[0], float)
        elif deg == 1:
            k = w.index(1)
            blocks[layout.block_S] = -np.asarray(pencil.coeffs[k + 1], float)
        free = np.array([-1.0]) if w == zero else np.zeros(1)
        ell_w = const if w == zero else (lin[w.index(1)] if deg == 1 else 0.0)
        if blocks or free.any() or ell_w:
            prob.add_constraint(blocks, free=free, rhs=-ell_w)

    prob.set_objective(free=np.array([1.0]))
    return prob, layout


@dataclass
class SosDualSolution:
    """Extracted point of the structured dual, re-verifiable on its own."""
    nvars: int
    size: int
    objective: Polynomial
    a: float
    S: list
    S_grams: list
    U: list
    W: list
    mode: str = FLOAT
    kind: str = field(default="sos-dual", init=False)

    def verify(self, pencil: LinearPencil,
               tol: float = 1e-6) -> VerificationReport:
        """Re-check every identity and PSD side condition symbolically."""
        report = VerificationReport(passed=True, mode=self.mode)
        n, alpha = pencil.nvars, pencil.size
        if (n, alpha) != (self.nvars, self.size):
            report.add("shape", False, "pencil does not match solution")
            return report
        pf = pencil.to_float()
        vec1 = monomials_upto(n, 1)
        ok, detail = psd_check(self.S, FLOAT, PSD_MARGIN)
        report.add("S psd", ok, detail)
        for i in range(1, n + 1):
            ok, detail = psd_check(self.S_grams[i - 1], FLOAT, PSD_MARGIN)
            report.add(f"S_{i} gram psd", ok, detail)
            Wi = np.asarray(self.W[i - 1], float)
            Ui = np.asarray(self.U[i - 1], float)
            schur = np.block([[np.eye(Wi.shape[0]), Wi], [Wi.T, Ui]])
            ok, detail = psd_check(schur, FLOAT, PSD_MARGIN)
            report.add(f"U_{i} dominates W_{i}", ok, detail)
        for i in range(1, n + 1):
            resid = expand_sos(self.U[i - 1], vec1, n, FLOAT)
            Si = expand_sos_matrix(self.S_grams[i - 1], vec1, alpha, n, FLOAT)
            resid = resid + trace_pair(pf, Si)
            if i >= 2:
                resid = resid + _w_poly(self.W[i - 2], n)
            r = float(resid.max_abs_coeff())
            report.add(f"round {i} identity", r <= tol,
                       f"max coefficient residual {r:.3e}")
        final = self.objective.promote() \
            + Polynomial.constant(-float(self.a), n, FLOAT) \
            - _trace_const(pf, self.S)
        if n >= 1:
            final = final + _w_poly(self.W[n - 1], n)
        r = float(final.max_abs_coeff())
        report.add("final identity", r <= tol,
                   f"max coefficient residual {r:.3e}")
        return report

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "nvars": self.nvars,
            "size": self.size,
            "mode": self.mode,
            "objective": format_polynomial(self.objective),
            "a": float(self.a),
            "S": [[float(v) for v in row] for row in self.S],
            "S_grams": [[[float(v) for v in row] for row in G]
                        for G in self.S_grams],
            "U": [[[float(v) for v in row] for row in M] for M in self.U],
            "W": [[[float(v) for v in row] for row in M] for M in self.W],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "SosDualSolution":
        obj = parse_polynomial(data["objective"], nvars=data["nvars"],
                               mode=data.get("mode", FLOAT))
        return cls(nvars=data["nvars"], size=data["size"], objective=obj,
                   a=data["a"], S=data["S"], S_grams=data["S_grams"],
                   U=data["U"], W=data["W"], mode=data.get("mode", FLOAT))


def _w_poly(W, nvars: int) -> Polynomial:
    """vec2^T W vec1 as a polynomial."""
    vec1 = monomials_upto(nvars, 1)
    vec2 = monomials_upto(nvars, 2)
    Wa = np.asarray(W, dtype=float)
    terms = {}
    for r, wu in enumerate(vec2):
        for p, wv in enumerate(vec1):
            c = float(Wa[r, p])
            if c == 0.0:
                continue
            w = mono_mul(wu, wv)
            terms[w] = terms.get(w, 0.0) + c
    return Polynomial(nvars, terms, FLOAT)


def _trace_const(pencil: LinearPencil, S) -> Polynomial:
    """tr(A(x) S) for a constant matrix S."""
    Sa = np.asarray(S, dtype=float)
    n = pencil.nvars
    terms = {}
    zero = tuple([0] * n)
    c0 = float(np.sum(np.asarray(pencil.coeffs[0], float) * Sa))
    if c0:
        terms[zero] = c0
    for k in range(n):
        ck = float(np.sum(np.asarray(pencil.coeffs[k + 1], float) * Sa))
        if ck:
            terms[tuple(1 if t == k else 0 for t in range(n))] = ck
    return Polynomial(n, terms, FLOAT)


def extract_sos_solution(inst: SdpInstance, solution: sdp.SdpSolution,
                         layout: SosDualLayout) -> SosDualSolution:
    """Read (a, S, S_i, U_i, W_i) off a solved structured dual."""
    n = layout.nvars
    s2 = layout.s2
    S = solution.X[layout.block_S]
    grams, U, W = [], [], []
    for i in range(1, n + 1):
        grams.append(np.asarray(solution.X[layout.gram_block(i)]))
        Z = np.asarray(solution.X[layout.schur_block(i)])
        W.append(Z[:s2, s2:])
        U.append(Z[s2:, s2:])
    return SosDualSolution(nvars=n, size=layout.alpha,
                           objective=inst.objective,
                           a=float(solution.free[0]),
                           S=np.asarray(S),
                           S_grams=grams, U=U, W=W, mode=FLOAT)


# ---------------------------------------------------------------------------
# gap report


@dataclass
class GapReport:
    """Optima and statuses of the primal, standard dual, and structured dual.

    ``solution`` carries the extracted structured-dual point when that solve
    succeeded, and ``verification`` its independent symbolic re-check.
    """
    primal_value: float | None
    primal_status: str
    dual_value: float | None
    dual_status: str
    sos_value: float | None
    sos_status: str
    solution: SosDualSolution | None = None
    verification: VerificationReport | None = None

    def gap(self) -> float | None:
        if self.primal_value is None or self.dual_value is None:
            return None
        return self.primal_value - self.dual_value

    def closed(self, tol: float = 1e-5) -> bool:
        if self.primal_value is None or self.sos_value is None:
            return False
        return abs(self.primal_value - self.sos_value) <= tol

    def summary(self) -> str:
        def fmt(v, s):
            return f"{v:.9g} ({s})" if v is not None else s
        lines = [
            f"primal optimum   P*    = {fmt(self.primal_value, self.primal_status)}",
            f"standard dual    D*    = {fmt(self.dual_value, self.dual_status)}",
            f"structured dual  Dsos* = {fmt(self.sos_value, self.sos_status)}",
        ]
        g = self.gap()
        if g is not None:
            lines.append(f"duality gap P* - D*    = {g:.9g}")
        if self.sos_value is not None:
            lines.append("gap closed by structured dual: "
                         + ("yes" if self.closed() else "no"))
        if self.verification is not None:
            lines.append("structured dual point verified: "
                         + ("pass" if self.verification.passed else "FAIL"))
        return "\n".join(lines)


def _value_status(solution: sdp.SdpSolution):
    if sdp.near_optimal(solution):
        return float(solution.objective_value), solution.status
    return None, solution.status


def gap_report(inst: SdpInstance, tol: float = DEFAULT_TOL) -> GapReport:
    """Solve primal, standard dual, and structured dual; verify the latter."""
    psol, _ = sdp.solve_robust(build_primal(inst), tol=tol)
    pval, pstat = _value_status(psol)
    dsol, _ = sdp.solve_robust(build_standard_dual(inst), tol=tol)
    dval, dstat = _value_status(dsol)
    prob, layout = build_sos_dual(inst)
    ssol, _ = sdp.solve_robust(prob, tol=tol)
    sval, sstat = _value_status(ssol)
    extracted = None
    verification = None
    if sval is not None and ssol.X is not None:
        extracted = extract_sos_solution(inst, ssol, layout)
        verification = extracted.verify(inst.pencil)
    return GapReport(pval, pstat, dval, dstat, sval, sstat,
                     extracted, verification)


# ---------------------------------------------------------------------------
# positivity of linear functionals on matrix cones


@dataclass
class FunctionalPositivity:
    """Outcome of a functional-positivity query.

    When positive, ``certificate`` holds the structured dual point proving
    nonnegativity.  Otherwise ``witness_matrix`` is a cone member R with
    functional value f(R) < 0 (``witness_point`` gives its coordinates).
    """
    positive: bool
    report: GapReport
    certificate: SosDualSolution | None = None
    witness_point: np.ndarray | None = None
    witness_matrix: np.ndarray | None = None
    witness_value: float | None = None


def functional_positivity(basis, values,
                          tol: float = DEFAULT_TOL) -> FunctionalPositivity:
    """Decide whether f(sum x_i A_i) = sum x_i values_i is nonnegative
    whenever sum x_i A_i is PSD.

    The basis matrices must be linearly independent so coordinates are
    well defined.  Positivity is decided by the structured dual of
    min f over the cone; a negative answer comes with an explicit cone
    member found by minimizing f over the trace-one slice.
    """
    mats = [np.asarray(M, dtype=float) for M in basis]
    if not mats:
        raise ValueError("basis must be nonempty")
    alpha = mats[0].shape[0]
    if any(M.shape != (alpha, alpha) for M in mats):
        raise ValueError("basis matrices must share one square shape")
    if len(values) != len(mats):
        raise ValueError("values must match the basis length")
    stack = np.stack([((M + M.T) / 2).ravel() for M in mats])
    if np.linalg.matrix_rank(stack, tol=1e-9) < len(mats):
        raise ValueError("basis matrices are linearly dependent")

    n = len(mats)
    pencil = LinearPencil([np.zeros((alpha, alpha))] + mats, FLOAT)
    terms = {}
    for k, v in enumerate(values):
        if float(v) != 0.0:
            terms[tuple(1 if t == k else 0 for t in range(n))] = float(v)
    ell = Polynomial(n, terms, FLOAT)
    inst = SdpInstance(pencil, ell)
    report = gap_report(inst, tol=tol)

    positive = (report.sos_value is not None
                and report.sos_value >= -PSD_MARGIN
                and report.verification is not None
                and report.verification.passed)
    if positive:
        return FunctionalPositivity(True, report,
                                    certificate=report.solution)

    # witness search on the trace-one slice of the cone
    prob = build_primal(inst)
    trace_row = np.zeros((alpha, alpha))
    np.fill_diagonal(trace_row, 1.0)
    prob.add_constraint({0: trace_row}, rhs=1.0)
    wsol, _ = sdp.solve_robust(prob, tol=tol)
    witness_point = None
    witness_matrix = None
    witness_value = None
    if sdp.near_optimal(wsol) and wsol.free is not None:
        x = np.asarray(wsol.free, dtype=float)
        R = pencil.evaluate(x)
        val = float(sum(float(v) * x[k] for k, v in enumerate(values)))
        if val < 0:
            witness_point, witness_matrix, witness_value = x, R, val
    return FunctionalPositivity(False, report,
                                witness_point=witness_point,
                                witness_matrix=witness_matrix,
                                witness_value=witness_value)
