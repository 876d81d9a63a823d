"""Regenerate the shipped pencil and certificate JSON files in data/.

The two refutation certificates are hand-derived rank-one Gram matrices.
For the 2x2 pencil [[x, 1], [1, 0]] the vector u(x) = (1, -1 - x/2) gives
u^T A(x) u = -2, so Q = w w^T / 2 over the monomial-major coordinates
(1, x) x rows certifies -1.  For the 3x3 pencil with rows
(0, x1, 0), (x1, x2, 1), (0, 1, x1) the vector
u(x) = (1/2 + x2/2 + x2^2/8, -1, 1 + x2/2) gives u^T A(x) u = -2; its
Gram coordinates run over the degree-2 basis (1, x1, x2, x1^2, x1*x2,
x2^2) times the three rows.  Both certificates verify with residual exactly
zero in rational arithmetic; this script refuses to write anything that
does not.
"""

import pathlib
import sys
from fractions import Fraction

sys.path.insert(0, str(pathlib.Path(__file__).parent.parent / "tests"))

from conftest import (  # noqa: E402
    box_pencil,
    finite_gap_pencil,
    halfline_pencil,
    ray_pencil,
    sign_pair_pencil,
    single_point_pencil,
    weakly_infeasible_2x2,
    weakly_infeasible_3x3,
)
from spectracert.certificates import (  # noqa: E402
    InfeasibilityCertificate,
    save_certificate,
)
from spectracert.pencil import save_pencil  # noqa: E402
from spectracert.polynomials import EXACT  # noqa: E402

ROOT = pathlib.Path(__file__).parent.parent
PENCILS = ROOT / "data" / "pencils"
CERTS = ROOT / "data" / "certs"


def rank_one_half(w):
    w = [Fraction(v) for v in w]
    return [[wi * wj / 2 for wj in w] for wi in w]


def zeros(n):
    return [[Fraction(0)] * n for _ in range(n)]


def main() -> int:
    PENCILS.mkdir(parents=True, exist_ok=True)
    CERTS.mkdir(parents=True, exist_ok=True)

    pencils = {
        "weakly-infeasible-2x2": weakly_infeasible_2x2(),
        "weakly-infeasible-3x3": weakly_infeasible_3x3(),
        "ray": ray_pencil(),
        "finite-gap": finite_gap_pencil(1),
        "single-point": single_point_pencil(),
        "sign-pair": sign_pair_pencil(),
        "box-2": box_pencil(2),
        "halfline": halfline_pencil(),
    }
    for name, pencil in pencils.items():
        save_pencil(pencil, PENCILS / f"{name}.json")
        print(f"wrote {PENCILS / (name + '.json')}")

    # level-1 refutation of the 2x2 pencil
    w2 = [1, -1, 0, Fraction(-1, 2)]
    cert2 = InfeasibilityCertificate(
        nvars=1, size=2, level=1,
        Q_scalar=zeros(2), Q_matrix=rank_one_half(w2), mode=EXACT)
    report = cert2.verify(weakly_infeasible_2x2())
    assert report.passed, report.failures()
    save_certificate(cert2, CERTS / "weakly-infeasible-2x2.level1.json")
    print(f"wrote {CERTS / 'weakly-infeasible-2x2.level1.json'} (verified)")

    # level-2 refutation of the 3x3 pencil:
    # u(x) = (1/2 + x2/2 + x2^2/8, -1, 1 + x2/2), monomial-major over
    # [1, x1, x2, x1^2, x1*x2, x2^2] times three rows
    w3 = [Fraction(0)] * 18
    w3[0] = Fraction(1, 2)
    w3[1] = Fraction(-1)
    w3[2] = Fraction(1)
    w3[6] = Fraction(1, 2)
    w3[8] = Fraction(1, 2)
    w3[15] = Fraction(1, 8)
    cert3 = InfeasibilityCertificate(
        nvars=2, size=3, level=2,
        Q_scalar=zeros(6), Q_matrix=rank_one_half(w3), mode=EXACT)
    report = cert3.verify(weakly_infeasible_3x3())
    assert report.passed, report.failures()
    save_certificate(cert3, CERTS / "weakly-infeasible-3x3.level2.json")
    print(f"wrote {CERTS / 'weakly-infeasible-3x3.level2.json'} (verified)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
