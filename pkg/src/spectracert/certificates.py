"""Feasibility taxonomy of linear matrix inequalities, with certificates.

A pencil A(x) falls into one of four classes: strongly feasible (some
A(x) is positive definite), weakly feasible (feasible but never strictly),
strongly infeasible (-1 is a constant-Gram combination c + sum u^T A u),
or weakly infeasible (empty but only refutable with polynomial squares of
positive degree).  The refutation hierarchy asks whether -1 = s + tr(A S)
for an sos polynomial s and sos matrix polynomial S of level k; level 0
uses constants only and characterizes strong infeasibility, and a level
bound of 2^min(alpha-1, n) - 1 suffices for any infeasible pencil.

Certificates produced here are claimed only when the independent verifier
accepts them; a solver "optimal" alone is never enough.  Searches that
come up empty report which levels were tried and how each solve ended, so
"not found" stays distinguishable from "proved absent".
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import sdp
from .gram import (
    expand_sos,
    expand_sos_matrix,
    refine_membership,
    solve_membership,
    solve_membership_interior,
    sos_matrix_rows,
    sos_rows,
)
from .pencil import (
    LinearPencil,
    _scalar_from_json,
    _scalar_to_json,
    trace_pair,
)
from .polynomials import (
    EXACT,
    FLOAT,
    Polynomial,
    format_polynomial,
    monomials_upto,
    parse_polynomial,
)
from .verify import VerificationReport, check_membership, psd_check

STRONG_FEASIBILITY_MARGIN = 1e-7
DEFAULT_BOXES = (1.0, 1e3, 1e6)
EPS_PROBES = (1e-2, 1e-4, 1e-6)


def default_level_bound(pencil: LinearPencil) -> int:
    """Hierarchy depth that suffices for any infeasible pencil."""
    return 2 ** min(pencil.size - 1, pencil.nvars) - 1


def _grams_to_json(G):
    return [[_scalar_to_json(v) for v in row] for row in G]


def _grams_from_json(data, mode):
    return [[_scalar_from_json(v, mode) for v in row] for row in data]


def _gram_rows_as_lists(Q):
    if isinstance(Q, np.ndarray):
        return Q.tolist()
    return Q


# ---------------------------------------------------------------------------
# certificate types


@dataclass
class MembershipCertificate:
    """target = s + tr(A S) at the stored level, s and S sos."""
    nvars: int
    size: int
    level: int
    target: Polynomial
    Q_scalar: object
    Q_matrix: object
    mode: str = FLOAT

    kind = "membership"

    def verify(self, pencil: LinearPencil,
               tol: float = 1e-6) -> VerificationReport:
        basis = monomials_upto(self.nvars, self.level)
        target = (self.target.to_exact() if self.mode == EXACT
                  else self.target.promote())
        return check_membership(pencil, target, self.Q_scalar, self.Q_matrix,
                                basis, self.mode, tol)

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "mode": self.mode,
            "nvars": self.nvars,
            "size": self.size,
            "level": self.level,
            "target": format_polynomial(self.target),
            "scalar_gram": _grams_to_json(_gram_rows_as_lists(self.Q_scalar)),
            "matrix_gram": _grams_to_json(_gram_rows_as_lists(self.Q_matrix)),
        }


class InfeasibilityCertificate(MembershipCertificate):
    """-1 = s + tr(A S) at the stored level: S_A is empty."""

    kind = "infeasibility"

    def __init__(self, nvars, size, level, Q_scalar, Q_matrix,
                 mode: str = FLOAT):
        minus1 = Polynomial.constant(
            Fraction(-1) if mode == EXACT else -1.0, nvars, mode)
        super().__init__(nvars=nvars, size=size, level=level, target=minus1,
                         Q_scalar=Q_scalar, Q_matrix=Q_matrix, mode=mode)


@dataclass
class LowDimCertificate:
    """-f^2 = s + tr(A S) with linear f != 0: S_A lies inside {f = 0}."""
    nvars: int
    size: int
    linear: Polynomial
    Q_scalar: object
    Q_matrix: object
    mode: str = FLOAT

    def verify(self, pencil: LinearPencil,
               tol: float = 1e-6) -> VerificationReport:
        report = VerificationReport(passed=True, mode=self.mode)
        if self.linear.degree() > 1 or self.linear.is_zero():
            report.add("linear form", False,
                       "f must be nonzero of degree at most one")
            return report
        report.add("linear form", True,
                   f"f = {format_polynomial(self.linear)}")
        nvars, alpha = self.nvars, self.size
        basis = monomials_upto(nvars, 1)
        if self.mode == FLOAT:
            pencil = pencil.to_float()
            f = self.linear.promote()
        else:
            if pencil.mode != EXACT or self.linear.mode != EXACT:
                report.add("modes", False,
                           "exact check needs exact pencil and linear form")
                return report
            f = self.linear
        s = expand_sos(self.Q_scalar, basis, nvars, self.mode)
        S = expand_sos_matrix(self.Q_matrix, basis, alpha, nvars, self.mode)
        resid = f * f + s + trace_pair(pencil, S)
        if self.mode == EXACT:
            report.add("identity", resid.is_zero(),
                       "residual is exactly zero" if resid.is_zero()
                       else "nonzero residual")
        else:
            r = float(resid.max_abs_coeff())
            report.add("identity", r <= tol,
                       f"max coefficient residual {r:.3e}")
        ok, detail = psd_check(self.Q_scalar, self.mode, tol)
        report.add("scalar gram psd", ok, detail)
        ok, detail = psd_check(self.Q_matrix, self.mode, tol)
        report.add("matrix gram psd", ok, detail)
        return report

    def to_json_dict(self) -> dict:
        return {
            "kind": "lowdim",
            "mode": self.mode,
            "nvars": self.nvars,
            "size": self.size,
            "linear": format_polynomial(self.linear),
            "scalar_gram": _grams_to_json(_gram_rows_as_lists(self.Q_scalar)),
            "matrix_gram": _grams_to_json(_gram_rows_as_lists(self.Q_matrix)),
        }


@dataclass
class BoundednessCertificate:
    """N +- x_i = s + tr(A S) for every coordinate: S_A is bounded.

    pairs[i] = (Q_scalar_minus, Q_matrix_minus, Q_scalar_plus,
    Q_matrix_plus) certifying N - x_i and N + x_i at the stored level.
    """
    nvars: int
    size: int
    bound: float
    level: int
    pairs: list
    mode: str = FLOAT

    def verify(self, pencil: LinearPencil,
               tol: float = 1e-6) -> VerificationReport:
        report = VerificationReport(passed=True, mode=self.mode)
        if len(self.pairs) != self.nvars:
            report.add("shape", False, "one Gram pair needed per variable")
            return report
        basis = monomials_upto(self.nvars, self.level)
        for i, (Qsm, QSm, Qsp, QSp) in enumerate(self.pairs):
            for sign, Qs, QS in (("-", Qsm, QSm), ("+", Qsp, QSp)):
                coeff = -1 if sign == "-" else 1
                if self.mode == EXACT:
                    target = Polynomial(
                        self.nvars,
                        {tuple([0] * self.nvars): Fraction(self.bound),
                         tuple(1 if j == i else 0
                               for j in range(self.nvars)): coeff},
                        EXACT)
                else:
                    target = Polynomial(
                        self.nvars,
                        {tuple([0] * self.nvars): float(self.bound),
                         tuple(1 if j == i else 0
                               for j in range(self.nvars)): float(coeff)},
                        FLOAT)
                sub = check_membership(pencil, target, Qs, QS, basis,
                                       self.mode, tol)
                report.add(f"N {sign} x{i + 1}", sub.passed,
                           "; ".join(d for _, okk, d in sub.checks
                                     if not okk) or "ok")
        return report

    def to_json_dict(self) -> dict:
        return {
            "kind": "boundedness",
            "mode": self.mode,
            "nvars": self.nvars,
            "size": self.size,
            "bound": _scalar_to_json(self.bound),
            "level": self.level,
            "pairs": [
                [_grams_to_json(_gram_rows_as_lists(G)) for G in pair]
                for pair in self.pairs
            ],
        }


@dataclass
class NotFoundUpToLevel:
    """Search marker: no certificate up to and including ``level``."""
    level: int
    detail: str = ""

    def __bool__(self):
        return False


def certificate_from_json_dict(data: dict):
    mode = data.get("mode", FLOAT)
    kind = data["kind"]
    if kind == "infeasibility":
        return InfeasibilityCertificate(
            nvars=int(data["nvars"]), size=int(data["size"]),
            level=int(data["level"]),
            Q_scalar=_grams_from_json(data["scalar_gram"], mode),
            Q_matrix=_grams_from_json(data["matrix_gram"], mode),
            mode=mode)
    if kind == "membership":
        return MembershipCertificate(
            nvars=int(data["nvars"]), size=int(data["size"]),
            level=int(data["level"]),
            target=parse_polynomial(data["target"], nvars=int(data["nvars"]),
                                    mode=mode),
            Q_scalar=_grams_from_json(data["scalar_gram"], mode),
            Q_matrix=_grams_from_json(data["matrix_gram"], mode),
            mode=mode)
    if kind == "lowdim":
        return LowDimCertificate(
            nvars=int(data["nvars"]), size=int(data["size"]),
            linear=parse_polynomial(data["linear"], nvars=int(data["nvars"]),
                                    mode=mode),
            Q_scalar=_grams_from_json(data["scalar_gram"], mode),
            Q_matrix=_grams_from_json(data["matrix_gram"], mode),
            mode=mode)
    if kind == "boundedness":
        return BoundednessCertificate(
            nvars=int(data["nvars"]), size=int(data["size"]),
            bound=float(_scalar_from_json(data["bound"], FLOAT)),
            level=int(data["level"]),
            pairs=[tuple(_grams_from_json(G, mode) for G in pair)
                   for pair in data["pairs"]],
            mode=mode)
    if kind == "sos-dual":
        from .duals import SosDualSolution
        return SosDualSolution.from_json_dict(data)
    raise ValueError(f"unknown certificate kind {kind!r}")


def save_certificate(cert, path) -> None:
    with open(path, "w") as fh:
        json.dump(cert.to_json_dict(), fh, indent=1)
        fh.write("\n")


def load_certificate(path):
    with open(path) as fh:
        return certificate_from_json_dict(json.load(fh))


# ---------------------------------------------------------------------------
# membership searches


@dataclass
class LevelSearch:
    """Result of walking the refutation hierarchy."""
    found: bool
    level: int | None
    certificate: InfeasibilityCertificate | None
    statuses: dict = field(default_factory=dict)


def _claim_membership(pencil: LinearPencil, target: Polynomial, level: int,
                      tol: float):
    """Solve one membership SDP and gate the claim on verification.

    Returns ((Q_scalar, Q_matrix), status): grams are None unless the
    solver reported optimal AND independent re-expansion verified the
    identity, in which case status is "optimal"; a solve that looked
    optimal but failed verification comes back as "unverified".
    """
    pf = pencil.to_float()
    tf = target.promote()
    basis = monomials_upto(pencil.nvars, level)

    def gate(Q_s, Q_S):
        report = check_membership(pencil, target, Q_s, Q_S, basis, FLOAT,
                                  tol)
        return report.passed

    def attempt(result, tag):
        if not result.found:
            return None
        Q_s = np.asarray(result.Q_scalar).tolist()
        Q_S = np.asarray(result.Q_matrix).tolist()
        if gate(Q_s, Q_S):
            return (Q_s, Q_S), result.status + tag
        # near the certificate face but not on it: refit the signal-rank
        # factors onto the rows and let the verifier re-decide
        refined = refine_membership(pf, tf, level, result.Q_scalar,
                                    result.Q_matrix)
        if refined is not None:
            Q_s, Q_S = refined[0].tolist(), refined[1].tolist()
            if gate(Q_s, Q_S):
                return (Q_s, Q_S), result.status + tag + ":refined"
        return None

    result = solve_membership(pf, tf, level)
    if not result.found:
        return None, result.status
    claimed = attempt(result, "")
    if claimed is not None:
        return claimed
    # boundary stall: retry from the relative interior of the face
    claimed = attempt(solve_membership_interior(pf, tf, level), ":interior")
    if claimed is not None:
        return claimed
    return None, "unverified"


def check_strong_infeasibility(pencil: LinearPencil, tol: float = 1e-6):
    """Level-0 refutation: -1 as c + sum u^T A(x) u with constants."""
    minus1 = Polynomial.constant(-1, pencil.nvars, pencil.mode)
    grams, status = _claim_membership(pencil, minus1, 0, tol)
    if grams is None:
        return None
    return InfeasibilityCertificate(
        nvars=pencil.nvars, size=pencil.size, level=0,
        Q_scalar=grams[0], Q_matrix=grams[1], mode=FLOAT)


def infeasibility_level(pencil: LinearPencil, max_level: int | None = None,
                        tol: float = 1e-6) -> LevelSearch:
    """Smallest k with a verified refutation -1 = s + tr(A S) at level k."""
    bound = default_level_bound(pencil) if max_level is None else max_level
    minus1 = Polynomial.constant(-1, pencil.nvars, pencil.mode)
    statuses = {}
    for k in range(bound + 1):
        grams, status = _claim_membership(pencil, minus1, k, tol)
        statuses[k] = status
        if grams is not None:
            cert = InfeasibilityCertificate(
                nvars=pencil.nvars, size=pencil.size, level=k,
                Q_scalar=grams[0], Q_matrix=grams[1], mode=FLOAT)
            return LevelSearch(True, k, cert, statuses)
    return LevelSearch(False, None, None, statuses)


@dataclass
class EpsMembershipResult:
    member: bool
    level: int | None
    eps: float
    certificate: MembershipCertificate | None
    statuses: dict = field(default_factory=dict)


def check_eps_membership(pencil: LinearPencil, f: Polynomial, eps,
                         max_level: int = 2,
                         tol: float = 1e-6) -> EpsMembershipResult:
    """Is f + eps in the level-k quadratic module for some k <= max_level?

    Membership for every eps > 0 but not eps = 0 witnesses functionals
    attaining a bad-projection value; the returned certificate carries
    the target f + eps it proves.
    """
    if f.nvars != pencil.nvars:
        raise ValueError("f and pencil disagree on the variable count")
    target = f + Polynomial.constant(eps, f.nvars, f.mode)
    statuses = {}
    for k in range(max_level + 1):
        grams, status = _claim_membership(pencil, target, k, tol)
        statuses[k] = status
        if grams is not None:
            cert = MembershipCertificate(
                nvars=pencil.nvars, size=pencil.size, level=k,
                target=target.promote(), Q_scalar=grams[0],
                Q_matrix=grams[1], mode=FLOAT)
            return EpsMembershipResult(True, k, float(eps), cert, statuses)
    return EpsMembershipResult(False, None, float(eps), None, statuses)


# ---------------------------------------------------------------------------
# low-dimensionality


def lowdim_certificate(pencil: LinearPencil, tol: float = 1e-6):
    """Search for linear f != 0 with -f^2 = s + tr(A S), S quadratic.

    Such an f proves the spectrahedron has empty interior (it lies in the
    hyperplane f = 0).  Returns a verified LowDimCertificate, or a
    NotFoundUpToLevel marker carrying the final solve status.
    """
    pf = pencil.to_float()
    nvars, alpha = pf.nvars, pf.size
    basis = monomials_upto(nvars, 1)
    N = len(basis)
    srows = sos_rows(basis, nvars, 3)
    mrows = sos_matrix_rows(pf, basis, 3)
    # blocks: 0 = Gram of f (plus foldable remainder), 1 = s, 2 = S
    problem = sdp.SdpProblem([N, N, N * alpha])
    for w in monomials_upto(nvars, 3):
        problem.add_constraint({0: srows[w], 1: srows[w], 2: mrows[w]},
                               rhs=0.0)
    problem.add_constraint({0: np.eye(N)}, rhs=1.0)   # tr U = 1: f != 0
    problem.set_objective({1: np.eye(N), 2: np.eye(N * alpha)})
    sol, meta = sdp.solve_robust(problem, tol=1e-8)
    if not sdp.near_optimal(sol) or sol.X is None:
        return NotFoundUpToLevel(1, detail=f"solver status {sol.status}")
    U = np.asarray(sol.X[0])
    w, V = np.linalg.eigh((U + U.T) / 2)
    lam, vec = float(w[-1]), V[:, -1]
    coeffs = np.sqrt(max(lam, 0.0)) * vec
    f = Polynomial(nvars, {m: float(c) for m, c in zip(basis, coeffs)},
                   FLOAT)
    # the non-top eigenvalue mass of U stays a valid sos part of s
    rest = U - lam * np.outer(vec, vec)
    Q_s = np.asarray(sol.X[1]) + (rest + rest.T) / 2
    cert = LowDimCertificate(
        nvars=nvars, size=alpha, linear=f,
        Q_scalar=Q_s.tolist(), Q_matrix=np.asarray(sol.X[2]).tolist(),
        mode=FLOAT)
    report = cert.verify(pencil, tol)
    if report.passed:
        return cert
    return NotFoundUpToLevel(1, detail="candidate failed verification")


# ---------------------------------------------------------------------------
# boundedness


def boundedness_certificate(pencil: LinearPencil, max_level: int = 3,
                            bounds=(1.0, 10.0, 100.0, 1e3, 1e4),
                            tol: float = 1e-6):
    """Archimedean witness: N +- x_i in the level-k module for all i.

    Tries levels then bounds in increasing order and returns the first
    fully verified certificate, else NotFoundUpToLevel(max_level).
    """
    pf = pencil.to_float()
    nvars = pf.nvars
    for k in range(max_level + 1):
        for N in bounds:
            pairs = []
            ok = True
            for i in range(nvars):
                xi = Polynomial.variable(i, nvars, FLOAT)
                Nconst = Polynomial.constant(float(N), nvars, FLOAT)
                minus, _ = _claim_membership(pf, Nconst - xi, k, tol)
                if minus is None:
                    ok = False
                    break
                plus, _ = _claim_membership(pf, Nconst + xi, k, tol)
                if plus is None:
                    ok = False
                    break
                pairs.append((minus[0], minus[1], plus[0], plus[1]))
            if ok:
                return BoundednessCertificate(
                    nvars=nvars, size=pf.size, bound=float(N), level=k,
                    pairs=pairs, mode=FLOAT)
    return NotFoundUpToLevel(max_level)


# ---------------------------------------------------------------------------
# strong feasibility probe and classification


def _entrywise_slack_rows(problem, pencil_coeffs, alpha, nfree_total):
    """Rows X_ij - sum_k x_k (A_k)_ij = (A0)_ij on block 0."""
    n = len(pencil_coeffs) - 1
    for i in range(alpha):
        for j in range(i, alpha):
            M = np.zeros((alpha, alpha))
            M[i, j] = M[j, i] = 1.0 if i == j else 0.5
            fv = [-pencil_coeffs[k + 1][i, j] for k in range(n)]
            fv += [0.0] * (nfree_total - n)
            problem.add_constraint({0: M}, free=fv,
                                   rhs=pencil_coeffs[0][i, j])


def strong_feasibility_probe(pencil: LinearPencil, boxes=DEFAULT_BOXES,
                             margin: float = STRONG_FEASIBILITY_MARGIN):
    """max lambda over A(x) >= lambda I, |x_i| <= box, escalating boxes.

    Returns (witness_or_None, lam, details).  A witness is only returned
    when it passes an out-of-band eigenvalue recheck on the pencil itself.
    """
    pf = pencil.to_float()
    n, alpha = pf.nvars, pf.size
    coeffs = [np.asarray(M, dtype=float) for M in pf.coeffs]
    details = {}
    lam_best = -np.inf
    for box in boxes:
        # X = A(x) - lam*I with free x and lam, lam maximized, |x_k| <= box
        problem = sdp.SdpProblem([alpha] + [1] * (2 * n), nfree=n + 1,
                                 sense="max")
        for i in range(alpha):
            for j in range(i, alpha):
                M = np.zeros((alpha, alpha))
                M[i, j] = M[j, i] = 1.0 if i == j else 0.5
                fv = [-coeffs[k + 1][i, j] for k in range(n)]
                fv.append(1.0 if i == j else 0.0)
                problem.add_constraint({0: M}, free=fv, rhs=coeffs[0][i, j])
        one = np.ones((1, 1))
        for k in range(n):
            ek = np.zeros(n + 1)
            ek[k] = 1.0
            problem.add_constraint({1 + 2 * k: one}, free=ek, rhs=box)
            problem.add_constraint({2 + 2 * k: one}, free=-ek, rhs=box)
        obj = np.zeros(n + 1)
        obj[n] = 1.0
        problem.set_objective(free=obj)
        sol = sdp.solve(problem)
        details[box] = (sol.status, sol.objective_value)
        if sol.status != sdp.OPTIMAL:
            continue
        lam = float(sol.objective_value)
        lam_best = max(lam_best, lam)
        if lam > margin:
            x_hat = np.array(sol.free[:n])
            w = np.linalg.eigvalsh(pf.evaluate(x_hat))
            if w[0] > 0:
                return x_hat, lam, details
    return None, lam_best, details


def feasibility_probe(pencil: LinearPencil):
    """min tr(X) over X = A(x), X PSD; optimal means S_A is nonempty."""
    pf = pencil.to_float()
    alpha, n = pf.size, pf.nvars
    coeffs = [np.asarray(M, dtype=float) for M in pf.coeffs]
    problem = sdp.SdpProblem([alpha], nfree=n)
    _entrywise_slack_rows(problem, coeffs, alpha, n)
    problem.set_objective({0: np.eye(alpha)})
    sol, meta = sdp.solve_robust(problem)
    return sol


def pd_in_span(mats, tol: float = 1e-7):
    """Combination x with sum_i x_i M_i positive definite, or None.

    Maximizes lambda subject to sum_i x_i M_i >= lambda I and
    |x_i| <= 1.  The span is closed under scaling, so the unit box
    just fixes a scale; the optimum is positive exactly when the span
    meets the positive definite cone.  A witness is returned only when
    lambda clears tol and an out-of-band eigenvalue check on the
    combination agrees.  A trace obstruction (some B >= 0, B != 0 with
    tr(M_i B) = 0 for all i) forces lambda <= 0 and yields None.
    """
    coeffs = [np.asarray(M, dtype=float) for M in mats]
    if not coeffs:
        raise ValueError("need at least one matrix")
    alpha = coeffs[0].shape[0]
    for M in coeffs:
        if M.shape != (alpha, alpha):
            raise ValueError("matrices must share a common square shape")
        if not np.allclose(M, M.T, atol=1e-12):
            raise ValueError("matrices must be symmetric")
    n = len(coeffs)
    problem = sdp.SdpProblem([alpha] + [1] * (2 * n), nfree=n + 1,
                             sense="max")
    for i in range(alpha):
        for j in range(i, alpha):
            E = np.zeros((alpha, alpha))
            E[i, j] = E[j, i] = 1.0 if i == j else 0.5
            fv = [-coeffs[k][i, j] for k in range(n)]
            fv.append(1.0 if i == j else 0.0)
            problem.add_constraint({0: E}, free=fv, rhs=0.0)
    one = np.ones((1, 1))
    for k in range(n):
        ek = np.zeros(n + 1)
        ek[k] = 1.0
        problem.add_constraint({1 + 2 * k: one}, free=ek, rhs=1.0)
        problem.add_constraint({2 + 2 * k: one}, free=-ek, rhs=1.0)
    obj = np.zeros(n + 1)
    obj[n] = 1.0
    problem.set_objective(free=obj)
    sol, _ = sdp.solve_robust(problem)
    if not sdp.near_optimal(sol):
        raise RuntimeError(f"span probe did not converge: {sol.status}")
    if float(sol.objective_value) <= tol:
        return None
    x = np.array(sol.free[:n])
    combo = sum(xk * M for xk, M in zip(x, coeffs))
    if np.linalg.eigvalsh(combo)[0] <= 0:
        return None
    return x


@dataclass
class FeasibilityClass:
    """classify() output: label plus the evidence behind it.

    label is one of strongly_feasible, weakly_feasible,
    strongly_infeasible, weakly_infeasible, unknown.  certificate is set
    for the infeasible labels (a verified refutation); witness is set for
    the feasible ones (a point passing the eigenvalue recheck).
    """
    label: str
    certificate: InfeasibilityCertificate | None = None
    witness: object = None
    evidence: dict = field(default_factory=dict)


def classify(pencil: LinearPencil, max_level: int | None = None,
             tol: float = 1e-6) -> FeasibilityClass:
    """Decide the feasibility class, preferring certificate-backed claims.

    Order: strict-feasibility probe (escalating boxes), refutation
    hierarchy up to the dimension bound, then a feasibility solve to
    separate weak feasibility from the unresolved cases.  Labels backed
    only by solver evidence (weakly_feasible, unknown) say so in the
    evidence dict.
    """
    evidence = {}
    witness, lam, probe_details = strong_feasibility_probe(pencil)
    evidence["strict_probe"] = {"lambda": lam, "boxes": probe_details}
    if witness is not None:
        evidence["witness_min_eig"] = float(
            np.linalg.eigvalsh(pencil.to_float().evaluate(witness))[0])
        return FeasibilityClass("strongly_feasible", witness=witness,
                                evidence=evidence)
    search = infeasibility_level(pencil, max_level=max_level, tol=tol)
    evidence["hierarchy"] = search.statuses
    if search.found:
        label = ("strongly_infeasible" if search.level == 0
                 else "weakly_infeasible")
        return FeasibilityClass(label, certificate=search.certificate,
                                evidence=evidence)
    feas = feasibility_probe(pencil)
    evidence["feasibility_probe"] = feas.status
    if feas.status == sdp.OPTIMAL:
        x_hat = np.array(feas.free)
        w = np.linalg.eigvalsh(pencil.to_float().evaluate(x_hat))
        evidence["feasible_point_min_eig"] = float(w[0])
        if w[0] > -tol:
            evidence["basis_of_claim"] = (
                "solver evidence: feasible point found, strict probe "
                "stayed at zero")
            return FeasibilityClass("weakly_feasible", witness=x_hat,
                                    evidence=evidence)
    if feas.status == sdp.PRIMAL_INFEASIBLE:
        evidence["basis_of_claim"] = (
            "feasibility SDP infeasible but no refutation certificate "
            "found up to the level bound")
    else:
        shifts = {}
        for eps in EPS_PROBES:
            shifted = pencil.shifted(eps)
            s_sol = feasibility_probe(shifted)
            shifts[eps] = s_sol.status
        evidence["eps_probes"] = shifts
    return FeasibilityClass("unknown", evidence=evidence)


# ---------------------------------------------------------------------------
# seeded generators with known ground truth


def _random_fraction(rng, denom=4, span=2):
    return Fraction(int(rng.integers(-span * denom, span * denom + 1)), denom)


def _random_unimodular(rng, n: int, steps: int = 4):
    """Integer matrix with determinant +-1 (products of shear rows).

    Shears are kept at unit magnitude: wilder congruences produce pencils
    whose membership relaxations stall short of verification tolerance, so
    the generator stays inside the regime the numerical pipeline certifies
    reliably.
    """
    M = [[Fraction(1 if i == j else 0) for j in range(n)] for i in range(n)]
    for _ in range(steps):
        i, j = rng.integers(0, n, size=2)
        if i == j:
            continue
        c = Fraction(int(rng.integers(0, 2)) * 2 - 1)
        for t in range(n):
            M[i][t] += c * M[j][t]
    return M


def random_strongly_infeasible(rng, nvars: int, alpha: int) -> LinearPencil:
    """Exact pencil with u^T A(x) u = -1 for a planted constant vector u.

    Random symmetric rational coefficients are corrected along u u^T so
    the planted identity holds exactly; level-0 refutation is guaranteed.
    """
    def rand_sym():
        M = [[_random_fraction(rng) for _ in range(alpha)]
             for _ in range(alpha)]
        return [[(M[i][j] + M[j][i]) / 2 for j in range(alpha)]
                for i in range(alpha)]

    while True:
        u = [Fraction(int(rng.integers(-2, 3))) for _ in range(alpha)]
        nrm = sum(v * v for v in u)
        if nrm != 0:
            break
    coeffs = [rand_sym() for _ in range(nvars + 1)]
    E = [[u[i] * u[j] / (nrm * nrm) for j in range(alpha)]
         for i in range(alpha)]

    def plant(M, want):
        have = sum(u[i] * M[i][j] * u[j]
                   for i in range(alpha) for j in range(alpha))
        fix = want - have
        return [[M[i][j] + fix * E[i][j] for j in range(alpha)]
                for i in range(alpha)]

    coeffs[0] = plant(coeffs[0], Fraction(-1))
    for k in range(1, nvars + 1):
        coeffs[k] = plant(coeffs[k], Fraction(0))
    return LinearPencil(coeffs, EXACT)


def random_weakly_infeasible(rng, base: LinearPencil) -> LinearPencil:
    """Congruence + affine disguise of a known weakly infeasible pencil.

    Both transforms are invertible and exact, so the refutation level of
    the output equals that of the base: certificates map through
    u -> Q^-T u and the degree-preserving substitution x -> T x + b.
    """
    Q = _random_unimodular(rng, base.size)
    T = _random_unimodular(rng, base.nvars)
    b = [_random_fraction(rng, denom=2, span=1) for _ in range(base.nvars)]
    return base.congruence(Q).affine_change(T, b)
