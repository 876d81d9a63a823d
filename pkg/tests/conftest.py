"""Shared pencil builders for the test suite.

Each helper returns a small exact-mode pencil with known behaviour; tests
import these instead of repeating coefficient matrices.
"""

from fractions import Fraction

from spectracert import EXACT
from spectracert.pencil import LinearPencil


def weakly_infeasible_2x2() -> LinearPencil:
    """[[x, 1], [1, 0]]: empty, no linear refutation, level-1 refutation."""
    return LinearPencil([[[0, 1], [1, 0]], [[1, 0], [0, 0]]], EXACT)


def weakly_infeasible_3x3() -> LinearPencil:
    """[[0,x1,0],[x1,x2,1],[0,1,x1]]: empty, refutation needs level 2."""
    A0 = [[0, 0, 0], [0, 0, 1], [0, 1, 0]]
    A1 = [[0, 1, 0], [1, 0, 0], [0, 0, 1]]
    A2 = [[0, 0, 0], [0, 1, 0], [0, 0, 0]]
    return LinearPencil([A0, A1, A2], EXACT)


def ray_pencil() -> LinearPencil:
    """[[0,x1,0],[x1,x2,x3],[0,x3,x1]]: solution set is the ray x2 >= 0."""
    A0 = [[0, 0, 0], [0, 0, 0], [0, 0, 0]]
    A1 = [[0, 1, 0], [1, 0, 0], [0, 0, 1]]
    A2 = [[0, 0, 0], [0, 1, 0], [0, 0, 0]]
    A3 = [[0, 0, 0], [0, 0, 1], [0, 1, 0]]
    return LinearPencil([A0, A1, A2, A3], EXACT)


def finite_gap_pencil(alpha=1) -> LinearPencil:
    """diag-ish [[a+x2,0,0],[0,x1,x2],[0,x2,0]]: min x2 has a duality gap a."""
    a = Fraction(alpha)
    A0 = [[a, 0, 0], [0, 0, 0], [0, 0, 0]]
    A1 = [[0, 0, 0], [0, 1, 0], [0, 0, 0]]
    A2 = [[1, 0, 0], [0, 0, 1], [0, 1, 0]]
    return LinearPencil([A0, A1, A2], EXACT)


def single_point_pencil() -> LinearPencil:
    """[[1, x], [x, 0]]: solution set is the origin."""
    return LinearPencil([[[1, 0], [0, 0]], [[0, 1], [1, 0]]], EXACT)


def sign_pair_pencil() -> LinearPencil:
    """diag(x, -x): solution set is the origin, nontrivial kernel direction."""
    return LinearPencil([[[0, 0], [0, 0]], [[1, 0], [0, -1]]], EXACT)


def box_pencil(n: int = 2) -> LinearPencil:
    """diag(1 - x1, 1 + x1, ..., 1 - xn, 1 + xn): the unit sup-norm box."""
    size = 2 * n
    A0 = [[1 if i == j else 0 for j in range(size)] for i in range(size)]
    coeffs = [A0]
    for k in range(n):
        M = [[0] * size for _ in range(size)]
        M[2 * k][2 * k] = -1
        M[2 * k + 1][2 * k + 1] = 1
        coeffs.append(M)
    return LinearPencil(coeffs, EXACT)


def halfline_pencil() -> LinearPencil:
    """1x1 pencil [x]: solution set is the unbounded half line x >= 0."""
    return LinearPencil([[[0]], [[1]]], EXACT)
