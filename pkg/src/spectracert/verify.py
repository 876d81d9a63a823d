"""Independent certificate checking.

Verification never trusts solver state: a certificate is re-expanded
symbolically (Gram matrices -> polynomials via gram.expand_*, traces via
pencil.trace_pair) and compared against the claimed identity coefficient
by coefficient, and PSD-ness of every Gram block is established separately
- in float mode through eigenvalue bounds, in exact mode through a
rational LDL^T decomposition with no floating point at all.

rationalize_membership upgrades a float certificate to an exact one:
round the Gram entries to rationals, project them back onto the affine
subspace defined by the coefficient identities (exact least squares), and
re-check PSD-ness exactly.  Rank-deficient optima are handled by first
restricting each Gram to a rational basis of its numerical range, since a
raw projection would push boundary eigenvalues slightly negative.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .gram import expand_sos, expand_sos_matrix
from .pencil import LinearPencil, trace_pair
from .polynomials import EXACT, FLOAT, Polynomial, monomials_upto

DEFAULT_FLOAT_TOL = 1e-6


@dataclass
class VerificationReport:
    """Outcome of one certificate check; ``checks`` lists (name, ok, detail)."""
    passed: bool
    mode: str
    checks: list = field(default_factory=list)

    def add(self, name: str, ok: bool, detail: str = "") -> None:
        self.checks.append((name, bool(ok), detail))
        if not ok:
            self.passed = False

    def failures(self):
        return [c for c in self.checks if not c[1]]


# ---------------------------------------------------------------------------
# PSD checks


def ldl_psd_exact(Q) -> bool:
    """Rational LDL^T test: Q PSD iff all pivots >= 0 and every zero pivot
    has a fully zero trailing row.

    Each step eliminates with the current Schur-complement row and updates
    only the trailing submatrix, which stays exactly symmetric; touching
    row k during its own elimination would corrupt later updates."""
    n = len(Q)
    A = [[Fraction(Q[i][j]) for j in range(n)] for i in range(n)]
    for k in range(n):
        piv = A[k][k]
        if piv < 0:
            return False
        if piv == 0:
            if any(A[k][j] != 0 for j in range(k + 1, n)):
                return False
            continue
        for i in range(k + 1, n):
            f = A[i][k] / piv
            if f == 0:
                continue
            for j in range(k + 1, n):
                A[i][j] -= f * A[k][j]
    return True


def psd_check(Q, mode: str, tol: float = DEFAULT_FLOAT_TOL):
    """Returns (ok, detail)."""
    if mode == EXACT:
        ok = ldl_psd_exact(Q)
        return ok, "rational LDL " + ("passed" if ok else "failed")
    Qa = np.asarray(Q, dtype=float)
    if Qa.size == 0:
        return True, "empty block"
    w = np.linalg.eigvalsh((Qa + Qa.T) / 2)
    scale = max(1.0, float(abs(w[-1])))
    ok = w[0] >= -tol * scale
    return ok, f"min eigenvalue {float(w[0]):.3e}"


# ---------------------------------------------------------------------------
# membership identity: target = s + tr(A S)


def check_membership(pencil: LinearPencil, target: Polynomial, Q_scalar,
                     Q_matrix, basis, mode: str,
                     tol: float = DEFAULT_FLOAT_TOL) -> VerificationReport:
    """Check target(x) = s(x) + tr(A(x) S(x)) with both Grams PSD."""
    report = VerificationReport(passed=True, mode=mode)
    nvars, alpha = pencil.nvars, pencil.size
    if mode == FLOAT:
        pencil = pencil.to_float()
        target = target.promote()
    elif pencil.mode != EXACT or target.mode != EXACT:
        report.add("modes", False, "exact check needs exact pencil and target")
        return report
    s = expand_sos(Q_scalar, basis, nvars, mode)
    S = expand_sos_matrix(Q_matrix, basis, alpha, nvars, mode)
    resid = s + trace_pair(pencil, S) - target
    if mode == EXACT:
        report.add("identity", resid.is_zero(),
                   "residual is exactly zero" if resid.is_zero()
                   else f"nonzero residual {resid!r}")
    else:
        r = float(resid.max_abs_coeff())
        report.add("identity", r <= tol, f"max coefficient residual {r:.3e}")
    ok, detail = psd_check(Q_scalar, mode, tol)
    report.add("scalar gram psd", ok, detail)
    ok, detail = psd_check(Q_matrix, mode, tol)
    report.add("matrix gram psd", ok, detail)
    return report


# ---------------------------------------------------------------------------
# exact rationalization of float certificates


def _dyadic(x: float, bits: int) -> Fraction:
    """Round to the grid with denominator 2**bits.

    Dyadic rounding keeps every rationalized entry on a common power-of-two
    denominator, so downstream exact sums and eliminations never suffer the
    lcm blowup that per-entry continued-fraction rounding causes.
    """
    return Fraction(round(float(x) * (1 << bits)), 1 << bits)


def _range_basis(Qa: np.ndarray, cut: float, bits: int):
    """Rational approximation of the numerical range of a PSD-ish matrix.

    Returns a full-column-rank list-of-lists P (n x r) or None when the
    rationalized columns lose rank.
    """
    n = Qa.shape[0]
    if n == 0:
        return []
    w, V = np.linalg.eigh((Qa + Qa.T) / 2)
    scale = max(1.0, float(abs(w[-1])))
    cols = [V[:, i] for i in range(n) if w[i] > cut * scale]
    if not cols:
        return [[] for _ in range(n)]
    P = [[_dyadic(c[i], bits) for c in cols] for i in range(n)]
    Pf = np.array([[float(x) for x in row] for row in P])
    if np.linalg.matrix_rank(Pf) < len(cols):
        return None
    return P


def _mat_mul(A, B):
    n, k = len(A), len(B[0]) if B else 0
    mid = len(B)
    return [[sum(A[i][t] * B[t][j] for t in range(mid)) for j in range(k)]
            for i in range(n)]


def _mat_T(A):
    return [list(row) for row in zip(*A)] if A and A[0] else \
        [[] for _ in range(len(A[0]))] if A else []


def _sandwich(P, M):
    """P^T M P for rational list matrices."""
    if not P or not P[0]:
        return []
    PT = [list(col) for col in zip(*P)]
    return _mat_mul(_mat_mul(PT, M), P)


def _solve_exact(A, b):
    """Gaussian elimination over the rationals; None if inconsistent,
    free variables pinned to zero."""
    m = len(A)
    n = len(A[0]) if m else 0
    M = [row[:] + [b[i]] for i, row in enumerate(A)]
    piv_cols = []
    r = 0
    for c in range(n):
        p = None
        for i in range(r, m):
            if M[i][c] != 0:
                p = i
                break
        if p is None:
            continue
        M[r], M[p] = M[p], M[r]
        f = M[r][c]
        M[r] = [v / f for v in M[r]]
        for i in range(m):
            if i != r and M[i][c] != 0:
                g = M[i][c]
                M[i] = [vi - g * vr for vi, vr in zip(M[i], M[r])]
        piv_cols.append(c)
        r += 1
        if r == m:
            break
    for i in range(r, m):
        if M[i][n] != 0:
            return None
    x = [Fraction(0)] * n
    for k, c in enumerate(piv_cols):
        x[c] = M[k][n]
    return x


def _exact_coeff_rows(pencil: LinearPencil, basis, level: int):
    """Exact coefficient matrices (M_w, N_w) per monomial w, |w| <= 2k+1.

    Built directly from symbolic products, separately from gram.sos_rows,
    so the rationalization path shares no float code with assembly.
    """
    from .polynomials import mono_mul
    nvars, alpha = pencil.nvars, pencil.size
    N = len(basis)
    cap = 2 * level + 1
    rows = {}
    for w in monomials_upto(nvars, cap):
        Mw = [[Fraction(0)] * N for _ in range(N)]
        Nw = [[Fraction(0)] * (N * alpha) for _ in range(N * alpha)]
        rows[w] = (Mw, Nw)
    for i, u in enumerate(basis):
        for j, v in enumerate(basis):
            p = mono_mul(u, v)
            if p in rows:
                rows[p][0][i][j] += 1
            for z in range(nvars + 1):
                if z == 0:
                    w = p
                else:
                    w = tuple(e + 1 if t == z - 1 else e
                              for t, e in enumerate(p))
                if w not in rows:
                    continue
                Az = pencil.coeffs[z]
                Nw = rows[w][1]
                for r in range(alpha):
                    for s in range(alpha):
                        c = Fraction(Az[r, s])
                        if c:
                            Nw[i * alpha + r][j * alpha + s] += c
    return rows


def rationalize_membership(pencil: LinearPencil, target: Polynomial,
                           level: int, Q_scalar, Q_matrix,
                           bits: int = 20,
                           range_cut: float = 1e-7):
    """Try to turn a float membership certificate into an exact one.

    Returns (Q_scalar_exact, Q_matrix_exact) as rational list matrices
    satisfying the identity exactly with both blocks PSD, or None.

    Succeeds when the certificate face near the input has enough rational
    structure: fat faces (rational points dense in the restricted affine
    set) and rational vertices rationalize; an irrational extreme point
    does not, because no nearby dyadic subspace meets the identity
    equations exactly.  Callers should treat None as "fall back to float
    verification", not as a refutation.
    """
    if pencil.mode != EXACT:
        pencil = pencil.to_exact()
    if target.mode != EXACT:
        target = target.to_exact()
    nvars, alpha = pencil.nvars, pencil.size
    basis = monomials_upto(nvars, level)
    N = len(basis)
    Qs = np.asarray(Q_scalar, dtype=float)
    QS = np.asarray(Q_matrix, dtype=float)
    rows = _exact_coeff_rows(pencil, basis, level)
    monos = monomials_upto(nvars, 2 * level + 1)

    for cut in (range_cut, 0.0):
        Ps = _range_basis(Qs, cut, bits) if cut > 0 else \
            [[Fraction(1 if i == j else 0) for j in range(N)]
             for i in range(N)]
        PS = _range_basis(QS, cut, bits) if cut > 0 else \
            [[Fraction(1 if i == j else 0) for j in range(N * alpha)]
             for i in range(N * alpha)]
        if Ps is None or PS is None:
            continue
        rs = len(Ps[0]) if Ps and Ps[0] else 0
        rS = len(PS[0]) if PS and PS[0] else 0
        dim = rs * rs + rS * rS

        # reduced rows: coeff_w = <Ps^T M_w Ps, Qs~> + <PS^T N_w PS, QS~>
        Amat, rhs = [], []
        for w in monos:
            Mw, Nw = rows[w]
            red_M = _sandwich(Ps, Mw) if rs else []
            red_N = _sandwich(PS, Nw) if rS else []
            row = []
            for i in range(rs):
                row.extend(red_M[i])
            for i in range(rS):
                row.extend(red_N[i])
            Amat.append(row)
            rhs.append(Fraction(target.coeff(w)))

        # initial guess: least squares restriction of the float Grams
        def restrict(P, rdim, Qa):
            if rdim == 0:
                return np.zeros((0, 0))
            Pf = np.array([[float(x) for x in r] for r in P])
            G = np.linalg.pinv(Pf) @ Qa @ np.linalg.pinv(Pf).T
            return (G + G.T) / 2

        q0 = []
        Gs0 = restrict(Ps, rs, Qs)
        GS0 = restrict(PS, rS, QS)
        for i in range(rs):
            q0.extend(_dyadic(Gs0[i, j], bits) for j in range(rs))
        for i in range(rS):
            q0.extend(_dyadic(GS0[i, j], bits) for j in range(rS))

        # exact projection: q = q0 + A^T t with (A A^T) t = rhs - A q0
        if dim == 0:
            if any(r != 0 for r in rhs):
                continue
            q = []
        else:
            Aq0 = [sum(Amat[i][j] * q0[j] for j in range(dim))
                   for i in range(len(Amat))]
            gap = [rhs[i] - Aq0[i] for i in range(len(rhs))]
            AAT = [[sum(Amat[i][t] * Amat[j][t] for t in range(dim))
                    for j in range(len(Amat))] for i in range(len(Amat))]
            tvec = _solve_exact(AAT, gap)
            if tvec is None:
                continue
            q = [q0[j] + sum(Amat[i][j] * tvec[i]
                             for i in range(len(Amat)))
                 for j in range(dim)]
            resid = [sum(Amat[i][j] * q[j] for j in range(dim)) - rhs[i]
                     for i in range(len(Amat))]
            if any(r != 0 for r in resid):
                continue

        def unvec(qflat, off, rdim):
            G = [[qflat[off + i * rdim + j] for j in range(rdim)]
                 for i in range(rdim)]
            return [[(G[i][j] + G[j][i]) / 2 for j in range(rdim)]
                    for i in range(rdim)]

        Gs = unvec(q, 0, rs)
        GS = unvec(q, rs * rs, rS)
        if not ldl_psd_exact(Gs) or not ldl_psd_exact(GS):
            continue

        def lift(P, G, full):
            if not G:
                return [[Fraction(0)] * full for _ in range(full)]
            PT = [list(col) for col in zip(*P)]
            return _mat_mul(_mat_mul(P, G), PT)

        Qs_exact = lift(Ps, Gs, N)
        QS_exact = lift(PS, GS, N * alpha)
        return Qs_exact, QS_exact
    return None


def verify_or_rationalize(pencil: LinearPencil, target: Polynomial,
                          level: int, Q_scalar, Q_matrix,
                          tol: float = DEFAULT_FLOAT_TOL):
    """Exact verification when rationalization lands, float otherwise.

    Returns (report, exact_grams_or_None); the report's mode records which
    route succeeded.
    """
    basis = monomials_upto(pencil.nvars, level)
    exact = rationalize_membership(pencil, target, level, Q_scalar, Q_matrix)
    if exact is not None:
        report = check_membership(pencil.to_exact(), target.to_exact(),
                                  exact[0], exact[1], basis, EXACT)
        if report.passed:
            return report, exact
    report = check_membership(pencil, target, Q_scalar, Q_matrix, basis,
                              FLOAT, tol)
    return report, None


def verify_certificate(pencil: LinearPencil, certificate,
                       tol: float = DEFAULT_FLOAT_TOL) -> VerificationReport:
    """Re-check any certificate kind against a pencil.

    Single entry point over the per-kind symbolic rechecks; the
    dispatch never consults the solver, so a corrupted solve cannot
    leak through here.  Raises TypeError for objects that do not carry
    a recheck.
    """
    recheck = getattr(certificate, "verify", None)
    if not callable(recheck):
        raise TypeError(f"{type(certificate).__name__} is not a "
                        "verifiable certificate")
    return recheck(pencil, tol=tol)


def rationalize_certificate(pencil: LinearPencil, certificate,
                            bits: int = 20):
    """Exact-arithmetic upgrade of a float certificate, or None.

    Rounds the Gram pair to denominators bounded by 2**bits, projects
    onto the identity constraints, and re-checks PSD exactly; on
    success the returned certificate is a machine-checkable proof with
    residual exactly zero.  Only certificates built around one
    membership identity upgrade this way; other kinds return None, and
    an already-exact certificate comes back unchanged.
    """
    from .certificates import InfeasibilityCertificate, MembershipCertificate
    if not isinstance(certificate, MembershipCertificate):
        return None
    if certificate.mode == EXACT:
        return certificate
    exact = rationalize_membership(pencil, certificate.target,
                                   certificate.level, certificate.Q_scalar,
                                   certificate.Q_matrix, bits=bits)
    if exact is None:
        return None
    if isinstance(certificate, InfeasibilityCertificate):
        return InfeasibilityCertificate(
            nvars=certificate.nvars, size=certificate.size,
            level=certificate.level, Q_scalar=exact[0], Q_matrix=exact[1],
            mode=EXACT)
    return MembershipCertificate(
        nvars=certificate.nvars, size=certificate.size,
        level=certificate.level, target=certificate.target.to_exact(),
        Q_scalar=exact[0], Q_matrix=exact[1], mode=EXACT)
