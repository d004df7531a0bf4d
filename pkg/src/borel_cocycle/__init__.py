"""Numerical evaluation of a cocycle representing the Borel class on
3-simplices and integral chains of invertible complex matrices."""

from .chains import (
    GroupChain,
    PhiConfig,
    PhiReport,
    TermResult,
    bar_to_homogeneous,
    borel_normalize,
    build_testcase1,
    build_testcase2,
    phi_chain,
)
from .errors import (
    BudgetExceeded,
    CocycleError,
    DepthExceeded,
    NoConvergence,
    NotConvergent,
    NotHermitian,
    ParseError,
    Singular,
)
from .linalg import HermitianEig, hermitian_eig, log_abs_det, pdh_reduce, spectral_norm
from .oracle import QuadratureResult, quadrature_phi3
from .series import (
    SERIES_PREFACTOR,
    SeriesEvaluation,
    TupleState,
    monomial_integral,
    phi_n1,
    phi_series_n3,
    tail_bound,
)
from .simplex import (
    HermitianSimplex,
    SimplexBounds,
    UTriple,
    barycentric_subdivide,
    bounds,
    diameter,
    make_simplex,
    refine_until,
    u_matrices,
)

__version__ = "0.1.0"
