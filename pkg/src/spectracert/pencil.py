"""Linear pencils A(x) = A0 + x1 A1 + ... + xn An and matrix polynomials.

A pencil stores dense symmetric coefficient matrices, either float64 numpy
arrays or object arrays of Fractions (exact mode).  File formats: a JSON
schema with optional "p/q" rational entries, and an SDPA sparse import that
maps a problem's constraint data to the pencil -F0 + sum yi Fi with all
blocks direct-summed.
"""

from __future__ import annotations

import json
import warnings
from fractions import Fraction

import numpy as np

from .polynomials import EXACT, FLOAT, ModeError, Polynomial

SYMMETRY_WARN = 1e-9


def _frac_array(rows):
    arr = np.empty((len(rows), len(rows[0])), dtype=object)
    for i, row in enumerate(rows):
        for j, v in enumerate(row):
            arr[i, j] = Fraction(v)
    return arr


def _as_matrix(mat, mode: str) -> np.ndarray:
    if mode == EXACT:
        if isinstance(mat, np.ndarray) and mat.dtype == object:
            return _frac_array(mat.tolist())
        return _frac_array([list(r) for r in mat])
    return np.asarray(mat, dtype=float)


class LinearPencil:
    """Symmetric linear matrix pencil; coeffs[0] is the constant matrix."""

    __slots__ = ("nvars", "size", "mode", "coeffs")

    def __init__(self, coeffs, mode: str = FLOAT):
        if len(coeffs) < 1:
            raise ValueError("need at least the constant coefficient matrix")
        mats = [_as_matrix(m, mode) for m in coeffs]
        size = mats[0].shape[0]
        if size < 1:
            raise ValueError("pencil size must be >= 1")
        for m in mats:
            if m.shape != (size, size):
                raise ValueError("coefficient matrices must share one square shape")
        fixed = []
        worst = 0.0
        for m in mats:
            sym = (m + m.T) / (Fraction(2) if mode == EXACT else 2.0)
            gap = abs(m - sym)
            worst = max(worst, float(max(gap.flat, default=0)))
            fixed.append(sym)
        if worst > SYMMETRY_WARN:
            warnings.warn(f"symmetrized pencil input (max correction {worst:.3e})",
                          stacklevel=2)
        self.nvars = len(mats) - 1
        self.size = size
        self.mode = mode
        self.coeffs = fixed

    # -- evaluation and entry access ----------------------------------------
    def evaluate(self, point) -> np.ndarray:
        if len(point) != self.nvars:
            raise ValueError("point has wrong dimension")
        if self.mode == EXACT and all(isinstance(v, (int, Fraction)) for v in point):
            acc = self.coeffs[0].copy()
            for xi, mat in zip(point, self.coeffs[1:]):
                acc = acc + mat * Fraction(xi)
            return acc
        acc = np.array(self.coeffs[0], dtype=float).copy()
        for xi, mat in zip(point, self.coeffs[1:]):
            acc += float(xi) * np.asarray(mat, dtype=float)
        return acc

    def entry_poly(self, i: int, j: int) -> Polynomial:
        terms = {}
        zero = tuple([0] * self.nvars)
        terms[zero] = self.coeffs[0][i, j]
        for k in range(self.nvars):
            mono = tuple(1 if t == k else 0 for t in range(self.nvars))
            terms[mono] = self.coeffs[k + 1][i, j]
        return Polynomial(self.nvars, terms, self.mode)

    def matrix_polynomial(self) -> "MatrixPolynomial":
        entries = [[self.entry_poly(i, j) for j in range(self.size)]
                   for i in range(self.size)]
        return MatrixPolynomial(entries)

    # -- transformations ------------------------------------------------------
    def congruence(self, Q) -> "LinearPencil":
        """Pencil Q^T A(x) Q for an invertible Q."""
        Qf = np.asarray(Q, dtype=float)
        if Qf.shape != (self.size, self.size):
            raise ValueError("congruence matrix has wrong shape")
        if abs(np.linalg.det(Qf)) < 1e-10:
            raise ValueError("congruence matrix is numerically singular")
        Qm = _as_matrix(Q, self.mode)
        return LinearPencil([Qm.T @ m @ Qm for m in self.coeffs], self.mode)

    def affine_change(self, T, b) -> "LinearPencil":
        """Pencil B(y) = A(Ty + b); T is nvars x new_nvars, b length nvars."""
        Tm = _as_matrix(T, self.mode) if len(T) else np.zeros((0, 0))
        bv = list(b)
        if len(bv) != self.nvars or (self.nvars and Tm.shape[0] != self.nvars):
            raise ValueError("affine change has wrong shape")
        new_n = Tm.shape[1] if self.nvars else 0
        conv = (lambda v: Fraction(v)) if self.mode == EXACT else float
        B0 = self.coeffs[0].copy()
        for i in range(self.nvars):
            B0 = B0 + self.coeffs[i + 1] * conv(bv[i])
        out = [B0]
        for j in range(new_n):
            Bj = self.coeffs[1] * conv(Tm[0, j])
            for i in range(1, self.nvars):
                Bj = Bj + self.coeffs[i + 1] * conv(Tm[i, j])
            out.append(Bj)
        return LinearPencil(out, self.mode)

    def to_float(self) -> "LinearPencil":
        if self.mode == FLOAT:
            return self
        return LinearPencil([np.asarray(m, dtype=float) for m in self.coeffs], FLOAT)

    def to_exact(self, denom_bound: int | None = None) -> "LinearPencil":
        if self.mode == EXACT:
            return self

        def conv(v):
            f = Fraction(float(v))
            return f.limit_denominator(denom_bound) if denom_bound else f

        mats = [[[conv(m[i, j]) for j in range(self.size)]
                 for i in range(self.size)] for m in self.coeffs]
        return LinearPencil(mats, EXACT)

    def shifted(self, eps: float) -> "LinearPencil":
        """A(x) + eps*I, in float mode."""
        p = self.to_float()
        coeffs = [m.copy() for m in p.coeffs]
        coeffs[0] = coeffs[0] + eps * np.eye(self.size)
        return LinearPencil(coeffs, FLOAT)

    def __eq__(self, other):
        if not isinstance(other, LinearPencil):
            return NotImplemented
        if (self.nvars, self.size, self.mode) != (other.nvars, other.size, other.mode):
            return False
        return all(np.array_equal(a, b) for a, b in zip(self.coeffs, other.coeffs))

    def __repr__(self):
        return f"LinearPencil(size={self.size}, nvars={self.nvars}, mode={self.mode})"


class MatrixPolynomial:
    """Symmetric matrix with Polynomial entries (all sharing nvars and mode)."""

    __slots__ = ("size", "nvars", "mode", "entries")

    def __init__(self, entries):
        size = len(entries)
        if size < 1 or any(len(row) != size for row in entries):
            raise ValueError("entries must be a square grid of polynomials")
        first = entries[0][0]
        for row in entries:
            for p in row:
                if p.nvars != first.nvars or p.mode != first.mode:
                    raise ValueError("entries must share nvars and mode")
        for i in range(size):
            for j in range(i):
                if entries[i][j] != entries[j][i]:
                    raise ValueError("matrix polynomial must be symmetric")
        self.size = size
        self.nvars = first.nvars
        self.mode = first.mode
        self.entries = [list(row) for row in entries]

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def evaluate(self, point) -> np.ndarray:
        vals = [[self.entries[i][j].evaluate(point) for j in range(self.size)]
                for i in range(self.size)]
        if self.mode == FLOAT or any(isinstance(v, float) for row in vals for v in row):
            return np.array(vals, dtype=float)
        return _frac_array(vals)

    def promote(self) -> "MatrixPolynomial":
        if self.mode == FLOAT:
            return self
        return MatrixPolynomial([[p.promote() for p in row] for row in self.entries])

    def max_degree(self) -> int:
        return max(p.degree() for row in self.entries for p in row)


def vector_outer(vec) -> MatrixPolynomial:
    """Rank-one matrix polynomial v v^T from a list of polynomials."""
    return MatrixPolynomial([[a * b for b in vec] for a in vec])


def trace_pair(pencil: LinearPencil, S: MatrixPolynomial) -> Polynomial:
    """tr(A(x) S(x)) as a polynomial."""
    if S.size != pencil.size:
        raise ValueError("size mismatch in trace_pair")
    if S.nvars != pencil.nvars:
        raise ValueError("variable count mismatch in trace_pair")
    if S.mode != pencil.mode:
        raise ModeError("trace_pair needs matching scalar modes")
    acc = Polynomial.zero(pencil.nvars, pencil.mode)
    for i in range(pencil.size):
        for j in range(pencil.size):
            acc = acc + pencil.entry_poly(i, j) * S.entries[j][i]
    return acc


# ---------------------------------------------------------------------------
# JSON pencil format


def _scalar_to_json(v):
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    f = float(v)
    return int(f) if f.is_integer() and abs(f) < 2 ** 53 else f


def _scalar_from_json(v, mode):
    if mode == EXACT:
        if isinstance(v, str):
            return Fraction(v)
        if isinstance(v, int):
            return Fraction(v)
        if isinstance(v, float):
            raise ModeError("exact-mode pencil cannot load float entries")
        raise ValueError(f"bad scalar {v!r}")
    return float(Fraction(v)) if isinstance(v, str) else float(v)


def pencil_to_json_dict(p: LinearPencil) -> dict:
    return {
        "nvars": p.nvars,
        "size": p.size,
        "matrices": [[[_scalar_to_json(m[i, j]) for j in range(p.size)]
                      for i in range(p.size)] for m in p.coeffs],
    }


def pencil_from_json_dict(data: dict, mode: str | None = None) -> LinearPencil:
    try:
        nvars, size = int(data["nvars"]), int(data["size"])
        mats = data["matrices"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"pencil JSON missing field: {exc}") from exc
    if len(mats) != nvars + 1:
        raise ValueError(f"expected {nvars + 1} matrices, found {len(mats)}")
    if mode is None:
        flat = [v for m in mats for row in m for v in row]
        mode = FLOAT if any(isinstance(v, float) for v in flat) else EXACT
    coeffs = []
    for m in mats:
        if len(m) != size or any(len(r) != size for r in m):
            raise ValueError("pencil JSON matrix has wrong shape")
        coeffs.append([[_scalar_from_json(v, mode) for v in row] for row in m])
    return LinearPencil(coeffs, mode)


def save_pencil(p: LinearPencil, path) -> None:
    with open(path, "w") as fh:
        json.dump(pencil_to_json_dict(p), fh, indent=1)
        fh.write("\n")


def load_pencil(path, mode: str | None = None) -> LinearPencil:
    with open(path) as fh:
        return pencil_from_json_dict(json.load(fh), mode)


# ---------------------------------------------------------------------------
# SDPA sparse import


class SdpaParseError(ValueError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


def load_sdpa(path) -> LinearPencil:
    """Read an SDPA sparse file (.dat-s) as the pencil -F0 + sum yi Fi.

    Blocks are direct-summed; negative block sizes denote diagonal blocks.
    The objective vector is ignored (only the constraint data defines the
    pencil).
    """
    with open(path) as fh:
        lines = fh.readlines()
    tokens = []  # (value, line_number)
    for lineno, line in enumerate(lines, 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("*") or stripped.startswith('"'):
            continue
        for tok in stripped.replace(",", " ").replace("{", " ").replace("}", " ") \
                           .replace("(", " ").replace(")", " ").split():
            tokens.append((tok, lineno))
    pos = 0

    def next_int(what):
        nonlocal pos
        if pos >= len(tokens):
            raise SdpaParseError(f"unexpected end of file reading {what}")
        tok, line = tokens[pos]
        pos += 1
        try:
            return int(float(tok))
        except ValueError:
            raise SdpaParseError(f"expected integer for {what}, got {tok!r}", line)

    def next_float(what):
        nonlocal pos
        if pos >= len(tokens):
            raise SdpaParseError(f"unexpected end of file reading {what}")
        tok, line = tokens[pos]
        pos += 1
        try:
            return float(tok)
        except ValueError:
            raise SdpaParseError(f"expected number for {what}, got {tok!r}", line)

    m = next_int("constraint count")
    nblocks = next_int("block count")
    sizes = [next_int("block size") for _ in range(nblocks)]
    for _ in range(m):
        next_float("objective entry")
    widths = [abs(s) for s in sizes]
    total = sum(widths)
    offsets = [sum(widths[:i]) for i in range(nblocks)]
    coeffs = [np.zeros((total, total)) for _ in range(m + 1)]
    while pos < len(tokens):
        tok, line = tokens[pos]
        matno = next_int("matrix index")
        blk = next_int("block index")
        i = next_int("row index")
        j = next_int("column index")
        val = next_float("entry value")
        if not 0 <= matno <= m:
            raise SdpaParseError(f"matrix index {matno} out of range 0..{m}", line)
        if not 1 <= blk <= nblocks:
            raise SdpaParseError(f"block index {blk} out of range", line)
        w = widths[blk - 1]
        if not (1 <= i <= w and 1 <= j <= w):
            raise SdpaParseError(f"entry ({i},{j}) outside block of size {w}", line)
        if sizes[blk - 1] < 0 and i != j:
            raise SdpaParseError("off-diagonal entry in a diagonal block", line)
        r, c = offsets[blk - 1] + i - 1, offsets[blk - 1] + j - 1
        coeffs[matno][r, c] = val
        coeffs[matno][c, r] = val
    coeffs[0] = -coeffs[0]  # pencil is -F0 + sum yi Fi
    return LinearPencil(coeffs, FLOAT)
