"""spectracert: certificates for linear matrix inequalities.

Infeasibility, low-dimensionality, and boundedness certificates for
spectrahedra, plus a sums-of-squares dual program that closes SDP duality
gaps, with independent verification of every emitted certificate.
"""

__version__ = "0.1.0"

from .polynomials import (  # noqa: F401
    EXACT,
    FLOAT,
    Combination,
    ModeError,
    MonomialBasis,
    Polynomial,
    Unit,
    basis_size,
    format_polynomial,
    parse_polynomial,
    reduce_mod_linear,
)
from .pencil import (  # noqa: F401
    LinearPencil,
    MatrixPolynomial,
    SdpaParseError,
    load_pencil,
    load_sdpa,
    save_pencil,
    trace_pair,
    vector_outer,
)
from .sdp import (  # noqa: F401
    SdpProblem,
    SdpSolution,
    solve,
    solve_robust,
)
from .gram import (  # noqa: F401
    MembershipResult,
    solve_membership,
)
from .verify import (  # noqa: F401
    VerificationReport,
    check_membership,
    psd_check,
    rationalize_certificate,
    rationalize_membership,
    verify_certificate,
    verify_or_rationalize,
)
from .certificates import (  # noqa: F401
    BoundednessCertificate,
    EpsMembershipResult,
    FeasibilityClass,
    InfeasibilityCertificate,
    LevelSearch,
    LowDimCertificate,
    MembershipCertificate,
    NotFoundUpToLevel,
    boundedness_certificate,
    check_eps_membership,
    check_strong_infeasibility,
    classify,
    default_level_bound,
    infeasibility_level,
    load_certificate,
    lowdim_certificate,
    pd_in_span,
    random_strongly_infeasible,
    random_weakly_infeasible,
    save_certificate,
)
from .duals import (  # noqa: F401
    FunctionalPositivity,
    GapReport,
    SdpInstance,
    SosDualSolution,
    build_primal,
    build_sos_dual,
    build_standard_dual,
    extract_sos_solution,
    functional_positivity,
    gap_report,
)
