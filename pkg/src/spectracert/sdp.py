"""Dense SDP solver: homogeneous self-dual interior point with presolve.

Standard form handled here:

    minimize    sum_b <C_b, X_b> + g^T u + const
    subject to  sum_b <A_ib, X_b> + (F u)_i = b_i     (i = 1..m)
                X_b PSD for every block b, u free.

Maximization is mirrored through negation.  The presolve eliminates free
variables by Gauss-Jordan pivoting (with exact recovery of their values and
of the original dual vector), prunes zero rows, and applies facial
reduction: an equality row with zero right hand side whose coefficient
matrices are all PSD (or all NSD) forces every block onto the null space of
its matrix.  The reduced problem is then solved by a Nesterov-Todd scaled
predictor-corrector method on the homogeneous self-dual embedding, so
primal or dual infeasibility is detected through the tau/kappa ratio and
reported with a Farkas-type improving ray.

Conventions: solutions report the residuals actually achieved, and callers
gate on status plus residuals rather than trusting a returned point
blindly.  For sense "max" the objective value is reported in the original
sense while the dual vector y refers to the internal minimization form.
After a facial reduction step, dual certificates (y, Z) are valid on the
reduced face only; solutions carry a note when that happens.
"""

from __future__ import annotations

import math

import numpy as np

OPTIMAL = "optimal"
PRIMAL_INFEASIBLE = "primal_infeasible"
DUAL_INFEASIBLE = "dual_infeasible"
INACCURATE = "inaccurate"
ITERATION_LIMIT = "iteration_limit"

_ZERO_ROW = 1e-13
_PSD_ROW = 1e-11
_PIVOT = 1e-11


def _sym(M):
    return (M + M.T) / 2


class SdpProblem:
    """Block SDP with optional free scalar variables."""

    def __init__(self, block_sizes, nfree: int = 0, sense: str = "min"):
        if sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        sizes = [int(s) for s in block_sizes]
        if any(s < 1 for s in sizes):
            raise ValueError("block sizes must be positive")
        self.block_sizes = sizes
        self.nfree = int(nfree)
        self.sense = sense
        self.constraints = []  # (dict block->matrix, free vector or None, rhs)
        self.objective_blocks = {}
        self.objective_free = np.zeros(self.nfree)
        self.objective_const = 0.0

    @property
    def m(self) -> int:
        return len(self.constraints)

    def _check_blocks(self, blocks) -> dict:
        out = {}
        for idx, M in blocks.items():
            if not 0 <= idx < len(self.block_sizes):
                raise ValueError(f"no block {idx}")
            M = np.asarray(M, dtype=float)
            s = self.block_sizes[idx]
            if M.shape != (s, s):
                raise ValueError(f"block {idx} matrix must be {s}x{s}")
            out[idx] = _sym(M)
        return out

    def add_constraint(self, blocks, free=None, rhs: float = 0.0) -> None:
        """Add sum_b <blocks[b], X_b> + free . u = rhs."""
        fv = None
        if free is not None:
            fv = np.asarray(free, dtype=float)
            if fv.shape != (self.nfree,):
                raise ValueError("free coefficient vector has wrong length")
        self.constraints.append((self._check_blocks(blocks), fv, float(rhs)))

    def set_objective(self, blocks=None, free=None, constant: float = 0.0) -> None:
        self.objective_blocks = self._check_blocks(blocks or {})
        if free is not None:
            fv = np.asarray(free, dtype=float)
            if fv.shape != (self.nfree,):
                raise ValueError("free objective vector has wrong length")
            self.objective_free = fv
        else:
            self.objective_free = np.zeros(self.nfree)
        self.objective_const = float(constant)

    def rhs_vector(self) -> np.ndarray:
        return np.array([rhs for (_, _, rhs) in self.constraints])


class SdpSolution:
    """Solver outcome: status, points, rays, and achieved residuals."""

    def __init__(self, status, X, y, Z, free, objective_value, residuals,
                 iterations, ray=None, notes=()):
        self.status = status
        self.X = X
        self.y = y
        self.Z = Z
        self.free = free
        self.objective_value = objective_value
        self.residuals = residuals
        self.iterations = iterations
        self.ray = ray
        self.notes = tuple(notes)

    def max_residual(self) -> float:
        r = self.residuals
        return max(r.get("primal", math.inf), r.get("dual", math.inf),
                   r.get("gap", math.inf))

    def __repr__(self):
        return (f"SdpSolution(status={self.status!r}, "
                f"objective={self.objective_value!r}, iters={self.iterations})")


NEAR_OPTIMAL_RESIDUAL = 3e-7


def near_optimal(sol: SdpSolution,
                 accept: float = NEAR_OPTIMAL_RESIDUAL) -> bool:
    """Optimal, or stalled with residuals already inside ``accept``.

    Stalls happen on problems whose optimal face is degenerate; the
    iterate is still a usable candidate whenever a downstream check
    validates it independently.
    """
    if sol.status == OPTIMAL:
        return True
    return sol.status == INACCURATE and sol.max_residual() <= accept


# ---------------------------------------------------------------------------
# dense stacking and the constraint map


def _stack(problem: SdpProblem):
    m = problem.m
    sizes = problem.block_sizes
    A = [np.zeros((m, s, s)) for s in sizes]
    F = np.zeros((m, problem.nfree))
    b = np.zeros(m)
    for i, (blocks, fv, rhs) in enumerate(problem.constraints):
        for idx, M in blocks.items():
            A[idx][i] = M
        if fv is not None:
            F[i] = fv
        b[i] = rhs
    C = [np.zeros((s, s)) for s in sizes]
    for idx, M in problem.objective_blocks.items():
        C[idx] = M.copy()
    return A, F, b, C, problem.objective_free.copy()


def _op_A(A, X):
    """Apply the constraint map: i -> sum_b <A_ib, X_b>."""
    m = A[0].shape[0] if A else 0
    out = np.zeros(m)
    for Ab, Xb in zip(A, X):
        if Xb.size:
            out += Ab.reshape(m, -1) @ Xb.ravel()
    return out


def _op_At(A, y):
    """Adjoint: per-block sum_i y_i A_ib."""
    return [np.einsum("i,ijk->jk", y, Ab) for Ab in A]


def _min_eig(M):
    return float(np.linalg.eigvalsh(_sym(M))[0]) if M.size else 0.0


# ---------------------------------------------------------------------------
# presolve bookkeeping


class _Presolve:
    def __init__(self):
        self.T = None            # row-op matrix from free elimination
        self.r = 0               # number of pivot rows
        self.pivot_cols = []
        self.nonpiv = []
        self.R_nonpiv = None     # RREF rows restricted to non-pivot columns
        self.pivot_TA = None     # per block, the r pivot rows of T A
        self.pivot_Tb = None
        self.g_piv = np.zeros(0)
        self.kept = []           # post-elimination row indices that survive
        self.faces = None        # per block cumulative column basis
        self.facial_steps = 0
        self.infeasible_row = None
        self.obj_const = 0.0


def _free_eliminate(A, F, b, C, g, pre):
    """Gauss-Jordan elimination of the free variables, tracking row ops."""
    m, f = F.shape
    T = np.eye(m)
    R = F.copy()
    row = 0
    pivot_cols = []
    colscale = max(1.0, float(np.max(np.abs(F)) if F.size else 0.0))
    for col in range(f):
        if row >= m:
            break
        sub = np.abs(R[row:, col])
        imax = int(np.argmax(sub)) + row
        if abs(R[imax, col]) <= _PIVOT * colscale:
            continue
        if imax != row:
            R[[row, imax]] = R[[imax, row]]
            T[[row, imax]] = T[[imax, row]]
        piv = R[row, col]
        R[row] /= piv
        T[row] /= piv
        for i in range(m):
            if i != row and R[i, col] != 0.0:
                c = R[i, col]
                R[i] -= c * R[row]
                T[i] -= c * T[row]
        pivot_cols.append(col)
        row += 1
    r = row
    TA = [np.einsum("ij,jkl->ikl", T, Ab) for Ab in A]
    Tb = T @ b
    g_piv = np.array([g[c] for c in pivot_cols])
    nonpiv = [c for c in range(f) if c not in pivot_cols]
    slope = np.array([g[c] - float(R[:r, c] @ g_piv) for c in nonpiv])
    Cred = [Cb.copy() for Cb in C]
    for k in range(r):
        for bi in range(len(A)):
            Cred[bi] -= g_piv[k] * TA[bi][k]
        pre.obj_const += g_piv[k] * Tb[k]
    pre.T = T
    pre.r = r
    pre.pivot_cols = pivot_cols
    pre.nonpiv = nonpiv
    pre.R_nonpiv = R[:r][:, nonpiv] if nonpiv else np.zeros((r, 0))
    pre.pivot_TA = [Ab[:r] for Ab in TA]
    pre.pivot_Tb = Tb[:r]
    pre.g_piv = g_piv
    return [Ab[r:] for Ab in TA], Tb[r:], Cred, slope


def _facial_pass(A, b, C, pre):
    """Zero-row pruning and PSD/NSD-row facial reduction, to a fixpoint."""
    nb = len(A)
    faces = [np.eye(Ab.shape[2]) for Ab in A]
    kept = list(range(len(b)))
    bscale = 1.0 + float(np.max(np.abs(b)) if b.size else 0.0)

    def row_norm(i):
        return max((float(np.max(np.abs(Ab[i]))) if Ab[i].size else 0.0)
                   for Ab in A) if nb else 0.0

    infeasible = False
    changed = True
    while changed and not infeasible:
        changed = False
        drop = []
        for i in range(len(b)):
            if row_norm(i) <= _ZERO_ROW:
                if abs(b[i]) > 1e-9 * bscale:
                    infeasible = True
                    pre.infeasible_row = kept[i]
                    break
                drop.append(i)
        if infeasible:
            break
        if drop:
            keep = [i for i in range(len(b)) if i not in drop]
            kept = [kept[i] for i in keep]
            A = [Ab[keep] for Ab in A]
            b = b[keep]
            changed = True
            continue
        for i in range(len(b)):
            if abs(b[i]) > 1e-11 * bscale:
                continue
            rn = row_norm(i)
            if rn <= _ZERO_ROW:
                continue
            mins, maxs = [], []
            for Ab in A:
                if Ab.shape[2] == 0:
                    continue
                w = np.linalg.eigvalsh(_sym(Ab[i]))
                mins.append(float(w[0]))
                maxs.append(float(w[-1]))
            tolr = _PSD_ROW * rn
            if mins and min(mins) >= -tolr:
                sign = 1.0
            elif maxs and max(maxs) <= tolr:
                sign = -1.0
            else:
                continue
            for bi in range(nb):
                if A[bi].shape[2] == 0:
                    continue
                M = _sym(sign * A[bi][i])
                w, V = np.linalg.eigh(M)
                null = V[:, w <= 1e-8 * rn]
                A[bi] = np.einsum("pj,ijk,kq->ipq", null.T, A[bi], null)
                C[bi] = null.T @ C[bi] @ null
                faces[bi] = faces[bi] @ null
            keep = [j for j in range(len(b)) if j != i]
            kept = [kept[j] for j in keep]
            A = [Ab[keep] for Ab in A]
            b = b[keep]
            pre.facial_steps += 1
            changed = True
            break

    pre.faces = faces
    pre.kept = kept
    return A, b, C, (PRIMAL_INFEASIBLE if infeasible else None)


# ---------------------------------------------------------------------------
# HSD core


def _chol_jitter(M):
    s = M.shape[0]
    if s == 0:
        return np.zeros((0, 0))
    base = max(float(np.trace(M)) / s, 1e-300)
    jit = 0.0
    for _ in range(8):
        try:
            return np.linalg.cholesky(M + jit * np.eye(s))
        except np.linalg.LinAlgError:
            jit = max(jit * 100.0, 1e-15 * base)
    return None


def _hsd(A, b, C, tol, max_iter, ray_tol):
    """min <C,X> s.t. A(X)=b, X PSD, via the self-dual embedding.

    Returns (status, X, y, Z, tau, kappa, residuals, iterations, ray).
    X, y, Z are the raw embedding variables (divide by tau for the point).
    """
    m = len(b)
    sizes = [Cb.shape[0] for Cb in C]
    nu = sum(sizes)
    X = [np.eye(s) for s in sizes]
    Z = [np.eye(s) for s in sizes]
    y = np.zeros(m)
    tau, kappa = 1.0, 1.0
    bnorm = 1.0 + float(np.linalg.norm(b))
    Cnorm = 1.0 + math.sqrt(sum(float(np.sum(Cb * Cb)) for Cb in C))

    def residuals():
        rp = float(np.linalg.norm(_op_A(A, X) / tau - b)) / bnorm
        rd = math.sqrt(sum(
            float(np.sum((At / tau + Zb / tau - Cb) ** 2))
            for At, Zb, Cb in zip(_op_At(A, y), Z, C))) / Cnorm
        pobj = sum(float(np.sum(Cb * Xb)) for Cb, Xb in zip(C, X)) / tau
        dobj = float(b @ y) / tau
        rg = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        return rp, rd, rg

    def try_rays():
        by = float(b @ y)
        ynorm = float(np.linalg.norm(y)) + 1e-300
        if by > 1e-12 * ynorm * bnorm:
            yr = y / by
            Zr = [-M for M in _op_At(A, yr)]
            viol = max([0.0] + [-_min_eig(M) for M in Zr])
            rscale = 1.0 + float(np.linalg.norm(yr))
            if viol <= ray_tol * rscale:
                return PRIMAL_INFEASIBLE, {"y": yr, "Z": Zr,
                                           "residual": viol / rscale}
        cX = sum(float(np.sum(Cb * Xb)) for Cb, Xb in zip(C, X))
        xnorm = math.sqrt(sum(float(np.sum(Xb * Xb)) for Xb in X)) + 1e-300
        if cX < -1e-12 * xnorm * Cnorm:
            Xr = [Xb / (-cX) for Xb in X]
            viol = float(np.linalg.norm(_op_A(A, Xr)))
            rscale = 1.0 + math.sqrt(sum(float(np.sum(M * M)) for M in Xr))
            if viol <= ray_tol * rscale:
                return DUAL_INFEASIBLE, {"X": Xr, "residual": viol / rscale}
        return None, None

    mu0 = (sum(float(np.sum(Xb * Zb)) for Xb, Zb in zip(X, Z)) + tau * kappa) \
        / (nu + 1)
    best = None
    stall = 0
    status = ITERATION_LIMIT
    it = 0

    for it in range(1, max_iter + 1):
        rp, rd, rg = residuals()
        worst = max(rp, rd, rg)
        snap = ([Xb.copy() for Xb in X], y.copy(), [Zb.copy() for Zb in Z],
                tau, kappa, {"primal": rp, "dual": rd, "gap": rg})
        if best is None or worst < best[0]:
            best = (worst, snap)
        if worst <= tol:
            return OPTIMAL, X, y, Z, tau, kappa, snap[5], it, None
        mu = (sum(float(np.sum(Xb * Zb)) for Xb, Zb in zip(X, Z))
              + tau * kappa) / (nu + 1)
        if kappa / tau > 1e6 or tau < 1e-10:
            st, ray = try_rays()
            if st is not None:
                return st, X, y, Z, tau, kappa, snap[5], it, ray
            status = INACCURATE
            break
        if mu < 1e-14 * mu0 and tau < 1e-5 and kappa < 1e-5:
            st, ray = try_rays()
            if st is not None:
                return st, X, y, Z, tau, kappa, snap[5], it, ray
            status = INACCURATE
            break

        # Nesterov-Todd scaling per block: G with G^T Z G = G^-1 X G^-T
        Gs, lams = [], []
        failed = False
        for Xb, Zb in zip(X, Z):
            s = Xb.shape[0]
            if s == 0:
                Gs.append(np.zeros((0, 0)))
                lams.append(np.zeros(0))
                continue
            Lx = _chol_jitter(_sym(Xb))
            Lz = _chol_jitter(_sym(Zb))
            if Lx is None or Lz is None:
                failed = True
                break
            _, sv, Vt = np.linalg.svd(Lz.T @ Lx)
            sv = np.maximum(sv, 1e-150)
            Gs.append(Lx @ Vt.T @ np.diag(sv ** -0.5))
            lams.append(sv)
        if failed:
            status = INACCURATE
            break

        # Schur matrix M_ij = <A_i, T A_j T> with T = G G^T, via B = G^T A G
        Bfl = []
        for Ab, G in zip(A, Gs):
            if G.size == 0:
                Bfl.append(np.zeros((m, 0)))
                continue
            Bb = np.einsum("pj,ijk,kq->ipq", G.T, Ab, G)
            Bfl.append(Bb.reshape(m, -1))
        Chat = [G.T @ Cb @ G for G, Cb in zip(Gs, C)]
        M = np.zeros((m, m))
        for Bf in Bfl:
            M += Bf @ Bf.T
        cA = np.zeros(m)
        for Bf, Ch in zip(Bfl, Chat):
            if Ch.size:
                cA += Bf @ Ch.ravel()
        CTCT = sum(float(np.sum(Ch * Ch)) for Ch in Chat)
        reg = 1e-13 * max(1.0, float(np.max(np.diag(M))) if m else 1.0)
        L = None
        for _ in range(4):
            try:
                L = np.linalg.cholesky(M + reg * np.eye(m))
                break
            except np.linalg.LinAlgError:
                reg *= 1e3
        if L is None:
            status = INACCURATE
            break

        def msolve(rhs):
            x = np.linalg.solve(L.T, np.linalg.solve(L, rhs))
            res = rhs - M @ x
            return x + np.linalg.solve(L.T, np.linalg.solve(L, res))

        u_vec = b + cA
        v = msolve(u_vec)
        denom = float((2 * b - u_vec) @ v) + CTCT + kappa / tau

        p_res = _op_A(A, X) - tau * b
        d_res = [tau * Cb - At - Zb
                 for Cb, At, Zb in zip(C, _op_At(A, y), Z)]
        g_res = float(b @ y) - sum(float(np.sum(Cb * Xb))
                                   for Cb, Xb in zip(C, X)) - kappa

        def direction(Rc, r4, eta):
            # sym(dX' L + L dZ') = R  <=>  dX' + dZ' = 2 R_ij / (l_i + l_j)
            Ls = []
            for lam, Rb in zip(lams, Rc):
                if lam.size == 0:
                    Ls.append(Rb)
                    continue
                Ls.append(2.0 * Rb / (lam[:, None] + lam[None, :]))
            H = [G @ Rb @ G.T if G.size else np.zeros((0, 0))
                 for G, Rb in zip(Gs, Ls)]
            TdT = [G @ (G.T @ db @ G) @ G.T if G.size else db
                   for G, db in zip(Gs, d_res)]
            r1 = -eta * p_res - _op_A(A, H) + eta * _op_A(A, TdT)
            CH = sum(float(np.sum(Cb * Hb)) for Cb, Hb in zip(C, H))
            CTdT = sum(float(np.sum(Cb * Mb)) for Cb, Mb in zip(C, TdT))
            rhat2 = -eta * g_res + r4 / tau + CH - eta * CTdT
            w = msolve(r1)
            dtau = (rhat2 - float((2 * b - u_vec) @ w)) / denom
            dy = dtau * v + w
            dZ = [dtau * Cb - At + eta * db
                  for Cb, At, db in zip(C, _op_At(A, dy), d_res)]
            dZs = [G.T @ dZb @ G if G.size else dZb
                   for G, dZb in zip(Gs, dZ)]
            dXs = [Rb - dZb for Rb, dZb in zip(Ls, dZs)]
            dX = [G @ dXb @ G.T if G.size else dXb
                  for G, dXb in zip(Gs, dXs)]
            dkappa = (r4 - kappa * dtau) / tau
            return dX, dy, dZ, dtau, dkappa, dXs, dZs

        def step_len(dXs, dZs, dtau, dkappa):
            alpha = math.inf
            for lam, dXb, dZb in zip(lams, dXs, dZs):
                if lam.size == 0:
                    continue
                d = 1.0 / np.sqrt(lam)
                for Mb in (dXb, dZb):
                    E = d[:, None] * Mb * d[None, :]
                    wmin = float(np.linalg.eigvalsh(_sym(E))[0])
                    if wmin < 0:
                        alpha = min(alpha, -1.0 / wmin)
            if dtau < 0:
                alpha = min(alpha, -tau / dtau)
            if dkappa < 0:
                alpha = min(alpha, -kappa / dkappa)
            return alpha

        Rc_aff = [-np.diag(lam ** 2) if lam.size else np.zeros((0, 0))
                  for lam in lams]
        dXa, dya, dZa, dtaua, dkappaa, dXsa, dZsa = direction(
            Rc_aff, -tau * kappa, 1.0)
        alpha_aff = min(step_len(dXsa, dZsa, dtaua, dkappaa), 1.0)
        xz_aff = sum(
            float(np.sum((Xb + alpha_aff * dXb) * (Zb + alpha_aff * dZb)))
            for Xb, dXb, Zb, dZb in zip(X, dXa, Z, dZa))
        mu_aff = (xz_aff + (tau + alpha_aff * dtaua) *
                  (kappa + alpha_aff * dkappaa)) / (nu + 1)
        sigma = min(max((mu_aff / mu) ** 3, 1e-8), 0.999)

        Rc = []
        for lam, dXb, dZb in zip(lams, dXsa, dZsa):
            if lam.size == 0:
                Rc.append(np.zeros((0, 0)))
                continue
            Rc.append(sigma * mu * np.eye(lam.size) - np.diag(lam ** 2)
                      - _sym(dXb @ dZb))
        r4 = sigma * mu - tau * kappa - dtaua * dkappaa
        dX, dy, dZ, dtau, dkappa, dXs, dZs = direction(Rc, r4, 1.0 - sigma)
        alpha = min(0.99 * step_len(dXs, dZs, dtau, dkappa), 1.0)
        if alpha < 1e-4:
            stall += 1
            if stall >= 4:
                status = INACCURATE
                break
        else:
            stall = 0
        X = [_sym(Xb + alpha * dXb) for Xb, dXb in zip(X, dX)]
        Z = [_sym(Zb + alpha * dZb) for Zb, dZb in zip(Z, dZ)]
        y = y + alpha * dy
        tau += alpha * dtau
        kappa += alpha * dkappa

    # stalled or hit the iteration cap: report the best iterate seen
    _, snap = best
    X, y, Z, tau, kappa, res = snap
    st, ray = try_rays()
    if st is not None:
        return st, X, y, Z, tau, kappa, res, it, ray
    return status, X, y, Z, tau, kappa, res, it, None


def _solve_reduced(A, b, C, tol, max_iter, ray_tol):
    """Dispatch trivial reduced problems, else run the HSD core."""
    mred = len(b)
    sizes = [Cb.shape[0] for Cb in C]
    if mred == 0 or not any(s > 0 for s in sizes):
        for bi, Cb in enumerate(C):
            if Cb.size == 0:
                continue
            w, V = np.linalg.eigh(_sym(Cb))
            if w[0] < -1e-12 * max(1.0, float(abs(w[-1]))):
                if mred == 0:
                    Xray = [np.zeros((s, s)) for s in sizes]
                    v = V[:, 0]
                    Xray[bi] = np.outer(v, v) / float(-w[0])
                    return (DUAL_INFEASIBLE, None, None, None, 1.0, 0.0,
                            {"primal": 0.0, "dual": 0.0, "gap": 0.0}, 0,
                            {"X": Xray, "residual": 0.0})
        Xz = [np.zeros((s, s)) for s in sizes]
        return (OPTIMAL, Xz, np.zeros(mred), [Cb.copy() for Cb in C],
                1.0, 0.0, {"primal": 0.0, "dual": 0.0, "gap": 0.0}, 0, None)
    return _hsd(A, b, C, tol, max_iter, ray_tol)


# ---------------------------------------------------------------------------
# public solve


def solve(problem: SdpProblem, tol: float = 1e-8, max_iter: int = 200,
          ray_tol: float = 1e-8) -> SdpSolution:
    A0, F0, b0, C0, g0 = _stack(problem)
    m0 = problem.m
    nb = len(problem.block_sizes)
    sign = -1.0 if problem.sense == "max" else 1.0
    C_int = [sign * Cb for Cb in C0]
    g_int = sign * g0
    pre = _Presolve()
    pre.obj_const = sign * problem.objective_const

    A, b, C = A0, b0, C_int
    slope = np.zeros(0)
    if problem.nfree:
        A, b, C, slope = _free_eliminate(A0, F0, b0, C_int, g_int, pre)
    else:
        pre.r = 0
    A, b, C, early = _facial_pass([Ab.copy() for Ab in A], b.copy(),
                                  [Cb.copy() for Cb in C], pre)

    notes = []
    if pre.facial_steps:
        notes.append(f"facial reduction: {pre.facial_steps} step(s)")
    zero_res = {"primal": 0.0, "dual": 0.0, "gap": 0.0}
    zero_X = [np.zeros((s, s)) for s in problem.block_sizes]

    def lift_down_y(y_kept_post, with_pivots=False):
        """Map a dual vector on post-elimination rows back to all m0 rows.

        Optimal duals carry the pivot objective coefficients in the first
        r slots (so F^T y = g holds); Farkas rays keep zeros (F^T y = 0).
        """
        if problem.nfree and pre.T is not None:
            yhat = np.zeros(m0)
            if with_pivots:
                yhat[:pre.r] = pre.g_piv
            yhat[pre.r:] = y_kept_post
            return pre.T.T @ yhat
        return y_kept_post.copy()

    def scatter_kept(y_vals):
        out = np.zeros(m0 - pre.r)
        for j, i_post in enumerate(pre.kept):
            out[i_post] = y_vals[j]
        return out

    if early == PRIMAL_INFEASIBLE:
        ray = None
        if pre.facial_steps == 0 and pre.infeasible_row is not None:
            post = np.zeros(m0 - pre.r)
            post[pre.infeasible_row] = 1.0
            y_ray = lift_down_y(post)
            bval = float(b0 @ y_ray)
            if abs(bval) > 1e-300:
                y_ray = y_ray / bval
                Zray = [-M for M in _op_At(A0, y_ray)]
                viol = max([0.0] + [-_min_eig(M) for M in Zray])
                ray = {"y": y_ray, "Z": Zray,
                       "residual": viol / (1 + float(np.linalg.norm(y_ray)))}
        else:
            notes.append("infeasibility exposed during facial reduction")
        return SdpSolution(PRIMAL_INFEASIBLE, zero_X, np.zeros(m0),
                           zero_X, np.zeros(problem.nfree), None, zero_res,
                           0, ray=ray, notes=notes)

    if slope.size and float(np.max(np.abs(slope))) > 1e-9:
        # unconstrained free direction with nonzero objective slope
        st_sub = _solve_reduced(A, b, [np.zeros_like(Cb) for Cb in C],
                                tol, max_iter, ray_tol)[0]
        if st_sub == PRIMAL_INFEASIBLE:
            return SdpSolution(PRIMAL_INFEASIBLE, zero_X, np.zeros(m0),
                               zero_X, np.zeros(problem.nfree), None,
                               zero_res, 0,
                               notes=notes + ["conic part infeasible"])
        uray = np.zeros(problem.nfree)
        for j, col in enumerate(pre.nonpiv):
            uray[col] = -slope[j]
        if pre.pivot_cols:
            corr = pre.R_nonpiv @ slope
            for k, col in enumerate(pre.pivot_cols):
                uray[col] = corr[k]
        ray = {"X": zero_X, "free": uray, "residual": 0.0}
        return SdpSolution(DUAL_INFEASIBLE, zero_X, np.zeros(m0), zero_X,
                           np.zeros(problem.nfree), None, zero_res, 0,
                           ray=ray, notes=notes)

    mred = len(b)
    scale = np.ones(mred)
    for i in range(mred):
        rn = max((float(np.max(np.abs(Ab[i]))) if Ab[i].size else 0.0)
                 for Ab in A) if A else 0.0
        scale[i] = max(rn, 1e-8)
    A = [Ab / scale[:, None, None] for Ab in A]
    b = b / scale

    st, Xr, yr, Zr, tau, kappa, res, iters, ray_red = _solve_reduced(
        A, b, C, tol, max_iter, ray_tol)

    if st == PRIMAL_INFEASIBLE:
        yfull = lift_down_y(scatter_kept(ray_red["y"] / scale))
        by = float(b0 @ yfull)
        ray = None
        if by > 1e-300:
            yfull = yfull / by
            Zray = [-M for M in _op_At(A0, yfull)]
            viol = max([0.0] + [-_min_eig(M) for M in Zray])
            rres = viol / (1 + float(np.linalg.norm(yfull)))
            if rres <= 10 * ray_tol:
                ray = {"y": yfull, "Z": Zray, "residual": rres}
            else:
                notes.append("improving ray lost accuracy in presolve undo")
        return SdpSolution(PRIMAL_INFEASIBLE, zero_X, np.zeros(m0), zero_X,
                           np.zeros(problem.nfree), None, res, iters,
                           ray=ray, notes=notes)

    if st == DUAL_INFEASIBLE:
        Xl = [pre.faces[bi] @ ray_red["X"][bi] @ pre.faces[bi].T
              for bi in range(nb)]
        ufree = np.zeros(problem.nfree)
        if problem.nfree and pre.pivot_cols:
            for k, col in enumerate(pre.pivot_cols):
                val = 0.0
                for bi in range(nb):
                    val -= float(np.sum(pre.pivot_TA[bi][k] * Xl[bi]))
                ufree[col] = val
        ray = {"X": Xl, "free": ufree,
               "residual": ray_red.get("residual", 0.0)}
        return SdpSolution(DUAL_INFEASIBLE, zero_X, np.zeros(m0), zero_X,
                           np.zeros(problem.nfree), None, res, iters,
                           ray=ray, notes=notes)

    # optimal / inaccurate / iteration limit: lift the point
    if pre.facial_steps:
        notes.append("dual certificate restricted to the reduced face")
    t = tau if tau and tau > 0 else 1.0
    Xl = [pre.faces[bi] @ (Xr[bi] / t) @ pre.faces[bi].T for bi in range(nb)]
    Zl = [pre.faces[bi] @ (Zr[bi] / t) @ pre.faces[bi].T for bi in range(nb)]
    yfull = lift_down_y(scatter_kept(yr / (t * scale)), with_pivots=True)
    if problem.nfree and pre.pivot_cols:
        u = np.zeros(problem.nfree)
        for k, col in enumerate(pre.pivot_cols):
            val = pre.pivot_Tb[k]
            for bi in range(nb):
                val -= float(np.sum(pre.pivot_TA[bi][k] * Xl[bi]))
            u[col] = val
    else:
        u = np.zeros(problem.nfree)
    value = sum(float(np.sum(Cb * Xb)) for Cb, Xb in zip(C0, Xl))
    value += float(g0 @ u) + problem.objective_const
    res = dict(res)
    res.update({"tau": tau, "kappa": kappa})
    return SdpSolution(st, Xl, yfull, Zl, u, value, res, iters, notes=notes)


# ---------------------------------------------------------------------------
# PSD factorization


def psd_factor(U, tol: float = 1e-9) -> np.ndarray:
    """Factor U ~= W^T W, keeping eigenvalues > tol; rows of W = num. rank.

    Raises ValueError when U has an eigenvalue below -tol * scale.
    """
    U = np.asarray(U, dtype=float)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ValueError("psd_factor expects a square matrix")
    if U.shape[0] == 0:
        return np.zeros((0, 0))
    w, V = np.linalg.eigh(_sym(U))
    scale = max(1.0, float(abs(w[-1])))
    if w[0] < -tol * scale:
        raise ValueError(f"matrix is not PSD: min eigenvalue {w[0]:.3e}")
    keep = w > tol * scale
    return np.sqrt(w[keep])[:, None] * V[:, keep].T


# ---------------------------------------------------------------------------
# compactified ("trust region") solves


def add_compactification(problem: SdpProblem, box: float, trace_cap: float):
    """Augment with |u_j| <= box rows and tr(X_b) <= trace_cap rows.

    Returns (augmented problem, info); info lets callers strip the added
    slack blocks and detect active caps.
    """
    nb = len(problem.block_sizes)
    nf = problem.nfree
    aug = SdpProblem(problem.block_sizes + [1] * (2 * nf + nb), nfree=nf,
                     sense=problem.sense)
    for blocks, fv, rhs in problem.constraints:
        aug.add_constraint(dict(blocks), fv, rhs)
    one = np.ones((1, 1))
    slacks = []
    for j in range(nf):
        ej = np.zeros(nf)
        ej[j] = 1.0
        aug.add_constraint({nb + 2 * j: one}, ej, box)
        aug.add_constraint({nb + 2 * j + 1: one}, -ej, box)
        slacks.append((nb + 2 * j, box))
        slacks.append((nb + 2 * j + 1, box))
    for bi, s in enumerate(problem.block_sizes):
        aug.add_constraint({bi: np.eye(s), nb + 2 * nf + bi: one}, None,
                           trace_cap)
        slacks.append((nb + 2 * nf + bi, trace_cap))
    aug.set_objective(dict(problem.objective_blocks),
                      problem.objective_free, problem.objective_const)
    return aug, {"nblocks": nb, "m": problem.m, "slacks": slacks}


def caps_active(solution: SdpSolution, info, rel: float = 1e-5) -> bool:
    return any(float(solution.X[bi][0, 0]) <= rel * cap
               for bi, cap in info["slacks"])


def restrict_solution(solution: SdpSolution, info) -> SdpSolution:
    nb, m = info["nblocks"], info["m"]
    return SdpSolution(solution.status, solution.X[:nb], solution.y[:m],
                       solution.Z[:nb], solution.free,
                       solution.objective_value, solution.residuals,
                       solution.iterations, ray=None, notes=solution.notes)


def solve_robust(problem: SdpProblem, tol: float = 1e-8, max_iter: int = 200,
                 caps=(10.0, 1e2, 1e3, 1e4, 1e5, 1e6),
                 accept_inaccurate: float = 3e-7):
    """Plain solve with a compactified-escalation fallback.

    Returns (solution, meta).  meta["method"] is "plain" or "capped" with
    the accepted cap.  A capped solve is accepted when its status is
    optimal (or inaccurate with residuals below accept_inaccurate) and no
    cap is active; an active cap escalates by a factor of ten.
    """
    plain = solve(problem, tol=tol, max_iter=max_iter)
    if plain.status in (OPTIMAL, PRIMAL_INFEASIBLE, DUAL_INFEASIBLE):
        return plain, {"method": "plain", "cap": None}
    if near_optimal(plain, accept_inaccurate):
        return plain, {"method": "plain", "cap": None,
                       "accepted_inaccurate": True}
    last = None
    for cap in caps:
        aug, info = add_compactification(problem, box=cap, trace_cap=cap)
        sol = solve(aug, tol=tol, max_iter=max_iter)
        decent = near_optimal(sol, accept_inaccurate)
        if decent and not caps_active(sol, info):
            return restrict_solution(sol, info), {"method": "capped",
                                                  "cap": cap}
        if decent:
            last = (sol, info, cap)
        if sol.status == DUAL_INFEASIBLE:
            break
    if last is not None:
        sol, info, cap = last
        return restrict_solution(sol, info), {"method": "capped", "cap": cap,
                                              "cap_active": True}
    return plain, {"method": "plain", "cap": None, "fallback": True}
