"""Sparse multivariate polynomials over exact rationals or binary floats.

Monomials are exponent tuples ordered by total degree first and then
lexicographically with x1 heaviest, so the degree-d basis vector reads
[1, x1, ..., xn, x1^2, x1*x2, ..., xn^d].  Every Gram matrix in the package
is laid out against this order.

A polynomial carries a scalar mode, ``"exact"`` (Fraction coefficients) or
``"float"``.  Arithmetic between different modes is rejected; callers promote
explicitly with :meth:`Polynomial.promote`.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction

EXACT = "exact"
FLOAT = "float"

Mono = tuple  # exponent tuple, one entry per variable


class ModeError(TypeError):
    """Raised when exact and float scalars are mixed without promotion."""


def mono_degree(mono: Mono) -> int:
    return sum(mono)

def mono_mul(a: Mono, b: Mono) -> Mono:
    return tuple(x + y for x, y in zip(a, b))

def mono_key(mono: Mono):
    """Sort key: total degree, then descending lexicographic on exponents."""
    return (sum(mono), tuple(-e for e in mono))


def monomials_upto(nvars: int, degree: int) -> list:
    """All monomials of degree <= degree in canonical order."""
    if nvars < 0 or degree < 0:
        raise ValueError("nvars and degree must be nonnegative")
    out = []
    def fill(prefix, remaining, slots):
        if slots == 1:
            out.append(prefix + (remaining,))
            return
        for e in range(remaining, -1, -1):
            fill(prefix + (e,), remaining - e, slots - 1)
    for d in range(degree + 1):
        if nvars == 0:
            if d == 0:
                out.append(())
            continue
        fill((), d, nvars)
    return out


def basis_size(nvars: int, degree: int) -> int:
    """Dimension of polynomials of degree <= degree, C(nvars+degree, nvars)."""
    return math.comb(nvars + degree, nvars)


class MonomialBasis:
    """The canonical monomial vector of all monomials of degree <= degree."""

    __slots__ = ("nvars", "degree", "monomials", "index")

    def __init__(self, nvars: int, degree: int):
        self.nvars = nvars
        self.degree = degree
        self.monomials = tuple(monomials_upto(nvars, degree))
        self.index = {m: i for i, m in enumerate(self.monomials)}

    def __len__(self):
        return len(self.monomials)

    def __iter__(self):
        return iter(self.monomials)

    def __eq__(self, other):
        return (isinstance(other, MonomialBasis)
                and self.nvars == other.nvars and self.degree == other.degree)

    def __repr__(self):
        return f"MonomialBasis(nvars={self.nvars}, degree={self.degree})"


def _coerce(value, mode):
    if mode == EXACT:
        if isinstance(value, Fraction):
            return value
        if isinstance(value, int):
            return Fraction(value)
        if isinstance(value, str):
            return Fraction(value)
        raise ModeError(f"exact mode needs int/Fraction coefficients, got {type(value).__name__}")
    return float(value)


class Polynomial:
    """Immutable sparse polynomial; ``terms`` maps exponent tuple -> coefficient."""

    __slots__ = ("nvars", "mode", "terms")

    def __init__(self, nvars: int, terms: dict, mode: str):
        if mode not in (EXACT, FLOAT):
            raise ValueError(f"unknown mode {mode!r}")
        clean = {}
        for mono, coeff in terms.items():
            mono = tuple(int(e) for e in mono)
            if len(mono) != nvars or any(e < 0 for e in mono):
                raise ValueError(f"bad exponent tuple {mono} for nvars={nvars}")
            c = _coerce(coeff, mode)
            if c != 0:
                clean[mono] = clean.get(mono, _coerce(0, mode)) + c
        object.__setattr__(self, "nvars", nvars)
        object.__setattr__(self, "mode", mode)
        object.__setattr__(self, "terms", {m: c for m, c in clean.items() if c != 0})

    def __setattr__(self, *a):
        raise AttributeError("Polynomial is immutable")

    # -- constructors ------------------------------------------------------
    @classmethod
    def zero(cls, nvars: int, mode: str = EXACT) -> "Polynomial":
        return cls(nvars, {}, mode)

    @classmethod
    def constant(cls, value, nvars: int, mode: str = EXACT) -> "Polynomial":
        return cls(nvars, {tuple([0] * nvars): value}, mode)

    @classmethod
    def variable(cls, i: int, nvars: int, mode: str = EXACT) -> "Polynomial":
        if not 0 <= i < nvars:
            raise ValueError(f"variable index {i} out of range for nvars={nvars}")
        mono = tuple(1 if j == i else 0 for j in range(nvars))
        return cls(nvars, {mono: 1}, mode)

    # -- basic queries -----------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(m) for m in self.terms), default=-1)

    def coeff(self, mono: Mono):
        return self.terms.get(tuple(mono), _coerce(0, self.mode))

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: mono_key(kv[0]))

    def max_abs_coeff(self):
        return max((abs(c) for c in self.terms.values()), default=_coerce(0, self.mode))

    # -- arithmetic --------------------------------------------------------
    def _check(self, other: "Polynomial"):
        if not isinstance(other, Polynomial):
            raise TypeError("expected Polynomial")
        if other.nvars != self.nvars:
            raise ValueError("variable count mismatch")
        if other.mode != self.mode:
            raise ModeError("mixed exact/float arithmetic; call promote() first")

    def __add__(self, other):
        self._check(other)
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms.get(m, 0) + c
        return Polynomial(self.nvars, terms, self.mode)

    def __sub__(self, other):
        self._check(other)
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms.get(m, 0) - c
        return Polynomial(self.nvars, terms, self.mode)

    def __neg__(self):
        return Polynomial(self.nvars, {m: -c for m, c in self.terms.items()}, self.mode)

    def __mul__(self, other):
        self._check(other)
        terms = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = mono_mul(m1, m2)
                terms[m] = terms.get(m, 0) + c1 * c2
        return Polynomial(self.nvars, terms, self.mode)

    def scale(self, scalar) -> "Polynomial":
        s = _coerce(scalar, self.mode)
        return Polynomial(self.nvars, {m: c * s for m, c in self.terms.items()}, self.mode)

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        out = Polynomial.constant(1, self.nvars, self.mode)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        return (isinstance(other, Polynomial) and self.nvars == other.nvars
                and self.mode == other.mode and self.terms == other.terms)

    def evaluate(self, point):
        """Evaluate at a point (sequence of scalars)."""
        if len(point) != self.nvars:
            raise ValueError("point has wrong dimension")
        if self.mode == FLOAT or any(isinstance(v, float) for v in point):
            total = 0.0
            for m, c in self.terms.items():
                v = float(c)
                for e, xi in zip(m, point):
                    v *= float(xi) ** e
                total += v
            return total
        total = Fraction(0)
        for m, c in self.terms.items():
            v = c
            for e, xi in zip(m, point):
                v *= Fraction(xi) ** e
            total += v
        return total

    # -- mode changes ------------------------------------------------------
    def promote(self) -> "Polynomial":
        """Float copy of the polynomial (identity on float mode)."""
        if self.mode == FLOAT:
            return self
        return Polynomial(self.nvars, {m: float(c) for m, c in self.terms.items()}, FLOAT)

    def to_exact(self, denom_bound: int | None = None) -> "Polynomial":
        if self.mode == EXACT:
            return self
        conv = {}
        for m, c in self.terms.items():
            f = Fraction(c)
            if denom_bound is not None:
                f = f.limit_denominator(denom_bound)
            conv[m] = f
        return Polynomial(self.nvars, conv, EXACT)

    def __repr__(self):
        return f"Polynomial({format_polynomial(self)!r})"


# ---------------------------------------------------------------------------
# text format


def format_scalar(c) -> str:
    if isinstance(c, Fraction):
        return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
    return repr(float(c))


def format_polynomial(p: Polynomial) -> str:
    """Canonical text form, e.g. ``-1/2*x1^2 + x2``."""
    if p.is_zero():
        return "0"
    parts = []
    for mono, coeff in p.sorted_terms():
        factors = [f"x{i + 1}" + (f"^{e}" if e > 1 else "")
                   for i, e in enumerate(mono) if e > 0]
        neg = coeff < 0
        mag = -coeff if neg else coeff
        body = format_scalar(mag)
        if factors and mag == 1:
            body = "*".join(factors)
        elif factors:
            body = "*".join([body] + factors)
        if not parts:
            parts.append(("-" if neg else "") + body)
        else:
            parts.append(("- " if neg else "+ ") + body)
    return " ".join(parts)


_TERM_SPLIT = re.compile(r"(?=[+-])")
_FACTOR = re.compile(r"^(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?(?:/\d+)?)|x(?P<var>\d+)(?:\^(?P<exp>\d+))?)$")


class PolynomialParseError(ValueError):
    def __init__(self, message, position=None):
        self.position = position
        super().__init__(message if position is None
                         else f"{message} (at character {position})")


def parse_polynomial(text: str, nvars: int | None = None, mode: str = EXACT) -> Polynomial:
    """Parse ``c*x1^a*x2^b + ...``; rationals as ``p/q``; whitespace ignored.

    When ``nvars`` is None the variable count is inferred from the largest
    index present (at least 1).
    """
    compact = "".join(text.split())
    if not compact:
        raise PolynomialParseError("empty polynomial text")
    raw_terms = []  # (coeff-string or None, [(var, exp), ...])
    maxvar = 0
    for chunk in filter(None, _TERM_SPLIT.split(compact)):
        sign = 1
        while chunk and chunk[0] in "+-":
            if chunk[0] == "-":
                sign = -sign
            chunk = chunk[1:]
        if not chunk:
            raise PolynomialParseError("dangling sign", text.find("+-"))
        coeff_txt = None
        factors = []
        for factor in chunk.split("*"):
            m = _FACTOR.match(factor)
            if m is None:
                raise PolynomialParseError(f"cannot parse factor {factor!r}",
                                           compact.find(factor))
            if m.group("num") is not None:
                if coeff_txt is not None:
                    raise PolynomialParseError(f"two numeric factors in term {chunk!r}")
                coeff_txt = m.group("num")
            else:
                var = int(m.group("var"))
                if var < 1:
                    raise PolynomialParseError(f"variable index must be >= 1 in {factor!r}")
                exp = int(m.group("exp") or 1)
                factors.append((var, exp))
                maxvar = max(maxvar, var)
        raw_terms.append((sign, coeff_txt, factors))
    n = nvars if nvars is not None else max(maxvar, 1)
    if maxvar > n:
        raise PolynomialParseError(f"variable x{maxvar} exceeds nvars={n}")
    terms = {}
    for sign, coeff_txt, factors in raw_terms:
        if coeff_txt is None:
            coeff = Fraction(1) if mode == EXACT else 1.0
        elif mode == EXACT:
            if "." in coeff_txt or "e" in coeff_txt or "E" in coeff_txt:
                coeff = Fraction(float(coeff_txt)).limit_denominator(10 ** 12)
            else:
                coeff = Fraction(coeff_txt)
        else:
            coeff = float(Fraction(coeff_txt)) if "/" in coeff_txt else float(coeff_txt)
        mono = [0] * n
        for var, exp in factors:
            mono[var - 1] += exp
        key = tuple(mono)
        terms[key] = terms.get(key, 0) + sign * coeff
    return Polynomial(n, terms, mode)


# ---------------------------------------------------------------------------
# division with remainder modulo an ideal of linear polynomials


@dataclass
class Combination:
    """f = sum(cofactors[i] * linears[i]) + remainder, deg cofactor <= deg f - 1.

    ``solved_vars`` lists the variable indices eliminated by the reduction;
    the remainder involves only the remaining variables.
    """
    cofactors: list
    remainder: Polynomial
    solved_vars: list


@dataclass
class Unit:
    """sum(lambdas[i] * linears[i]) = 1: the linear forms generate (1)."""
    lambdas: list


def _linear_row(p: Polynomial):
    """[c0, c1..cn] for an affine polynomial."""
    if p.degree() > 1:
        raise ValueError("reduce_mod_linear needs degree <= 1 generators")
    row = [p.coeff(tuple([0] * p.nvars))]
    for i in range(p.nvars):
        mono = tuple(1 if j == i else 0 for j in range(p.nvars))
        row.append(p.coeff(mono))
    return row


def _substitute_with_cofactor(f: Polynomial, var: int, repl: Polynomial):
    """Replace x_var by repl; return (g, q) with f = q*(x_var - repl) + g."""
    n, mode = f.nvars, f.mode
    by_power = {}
    for mono, coeff in f.terms.items():
        t = mono[var]
        rest = mono[:var] + (0,) + mono[var + 1:]
        by_power.setdefault(t, {})[rest] = coeff
    tmax = max(by_power, default=0)
    xv = Polynomial.variable(var, n, mode)
    repl_pows = [Polynomial.constant(1, n, mode)]
    xv_pows = [Polynomial.constant(1, n, mode)]
    for _ in range(tmax):
        repl_pows.append(repl_pows[-1] * repl)
        xv_pows.append(xv_pows[-1] * xv)
    g = Polynomial.zero(n, mode)
    q = Polynomial.zero(n, mode)
    for t, coeffs in by_power.items():
        c_t = Polynomial(n, coeffs, mode)
        g = g + c_t * repl_pows[t]
        # x^t - r^t = (x - r) * sum_{s<t} x^s r^(t-1-s)
        for s in range(t):
            q = q + c_t * xv_pows[s] * repl_pows[t - 1 - s]
    return g, q


def reduce_mod_linear(f: Polynomial, linears: list):
    """Divide f by an ideal of affine-linear polynomials.

    Returns :class:`Unit` when some combination of the generators equals 1,
    otherwise :class:`Combination` with exact cofactors and a remainder in
    the non-eliminated variables.  Exact over Fractions in exact mode; float
    mode uses partial pivoting with a relative threshold.
    """
    for ell in linears:
        if ell.nvars != f.nvars:
            raise ValueError("variable count mismatch")
        if ell.mode != f.mode:
            raise ModeError("mixed exact/float in reduce_mod_linear")
    n, mode = f.nvars, f.mode
    t = len(linears)
    if t == 0:
        return Combination(cofactors=[], remainder=f, solved_vars=[])
    rows = [_linear_row(p) for p in linears]       # t x (n+1), col 0 = constant
    exact = mode == EXACT
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    # combo[i][k]: current row i = sum_k combo[i][k] * linears[k]
    combo = [[one if k == i else zero for k in range(t)] for i in range(t)]
    scale = max((max(abs(v) for v in row) for row in rows), default=one) or one
    tol = 0 if exact else 1e-13 * float(scale)

    pivots = []  # (row, var) with var in 1..n column space
    used_rows = set()
    open_cols = list(range(1, n + 1))
    while open_cols:
        best, best_row, best_col = None, None, None
        for col in open_cols:
            for i in range(t):
                if i in used_rows:
                    continue
                v = abs(rows[i][col])
                if v > tol and (best is None or v > best):
                    best, best_row, best_col = v, i, col
            if exact and best_row is not None:
                break  # first nonzero column in exact mode
        if best_row is None:
            break
        i, col = best_row, best_col
        used_rows.add(i)
        open_cols.remove(col)
        pivots.append((i, col))
        piv = rows[i][col]
        rows[i] = [v / piv for v in rows[i]]
        combo[i] = [v / piv for v in combo[i]]
        for j in range(t):
            if j != i and (rows[j][col] != 0 if exact else abs(rows[j][col]) > tol):
                factor = rows[j][col]
                rows[j] = [a - factor * b for a, b in zip(rows[j], rows[i])]
                combo[j] = [a - factor * b for a, b in zip(combo[j], combo[i])]
    # unit detection: a fully reduced row with nonzero constant only
    for i in range(t):
        if i in used_rows:
            continue
        const = rows[i][0]
        if (const != 0) if exact else (abs(const) > tol):
            lam = [v / const for v in combo[i]]
            return Unit(lambdas=lam)

    # substitution pass: pivot row i solves x_col = -(row without the x_col term)
    g = f
    cofactors = [Polynomial.zero(n, mode) for _ in range(t)]
    solved = []
    for i, col in pivots:
        var = col - 1
        repl_terms = {tuple([0] * n): -rows[i][0]}
        for c in range(1, n + 1):
            if c != col and rows[i][c] != 0:
                mono = tuple(1 if j == c - 1 else 0 for j in range(n))
                repl_terms[mono] = -rows[i][c]
        repl = Polynomial(n, repl_terms, mode)
        g, q = _substitute_with_cofactor(g, var, repl)
        solved.append(var)
        # generator i equals sum_k combo[i][k] * linears[k]
        for k in range(t):
            if combo[i][k] != 0:
                cofactors[k] = cofactors[k] + q.scale(combo[i][k])
    return Combination(cofactors=cofactors, remainder=g, solved_vars=solved)
