"""Signed simplices of positive definite hermitian matrices.

A simplex is an ordered tuple of PDH matrices X_0..X_n with a sign.  The
value of the cocycle only depends on the Gram matrices G_i = X_i*X_i = X_i^2,
and the integrand is built from the straight segment between Gram matrices.
Barycentric subdivision is therefore done on Gram matrices by default: each
new vertex is the square root of an average of G_i, so the children tile the
parent's integration domain exactly and per-simplex values add up.  Plain
averaging of the X_i is available as ``coordinates="pdh"``.
"""

from dataclasses import dataclass, field
from itertools import permutations
import math

import numpy as np

from . import linalg
from .errors import DepthExceeded, Singular

DEFAULT_THETA = 0.40
DEFAULT_MAX_DEPTH = 8
DEFAULT_SIMPLEX_BUDGET = 10**6
COORDINATES = ("gram", "pdh")


def permutation_sign(p):
    sign = 1
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                sign = -sign
    return sign


def ordered_permutations(k):
    """Permutations of range(k) in lexicographic order with their signs."""
    return [(p, permutation_sign(p)) for p in permutations(range(k))]


@dataclass(frozen=True, eq=False)
class HermitianSimplex:
    vertices: tuple
    sign: int = 1
    depth: int = 0
    grams: tuple = field(default=None, repr=False)

    def __post_init__(self):
        verts = tuple(linalg.as_cmatrix(X, "vertex") for X in self.vertices)
        if len(verts) < 1:
            raise ValueError("a simplex needs at least one vertex")
        if len({X.shape for X in verts}) != 1:
            raise ValueError("all vertices must share one dimension")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if self.depth < 0:
            raise ValueError("depth must be nonnegative")
        object.__setattr__(self, "vertices", verts)
        if self.grams is None:
            object.__setattr__(self, "grams", tuple(linalg.hermitian_part(X @ X) for X in verts))

    @property
    def n(self):
        return len(self.vertices) - 1

    @property
    def dim(self):
        return self.vertices[0].shape[0]

    def validate(self, tol=1e-12):
        """Check that every vertex is hermitian and positive definite."""
        for X in self.vertices:
            if not linalg.is_hermitian(X, tol):
                raise linalg.NotHermitian("simplex vertex is not hermitian")
            lo, hi = linalg.extreme_eigenvalues(X)
            if lo <= tol * max(hi, 0.0):
                raise Singular("simplex vertex is not positive definite")
        return self


def make_simplex(vertices, sign=1, depth=0):
    """Build and validate a simplex from PDH matrices."""
    return HermitianSimplex(tuple(vertices), sign, depth).validate()


@dataclass(frozen=True)
class UTriple:
    U0: np.ndarray
    U1: np.ndarray
    U2: np.ndarray
    norms: tuple

    @classmethod
    def from_matrices(cls, U0, U1, U2):
        Us = tuple(np.asarray(U, dtype=complex) for U in (U0, U1, U2))
        return cls(*Us, tuple(linalg.spectral_norm(U) for U in Us))

    @property
    def matrices(self):
        return (self.U0, self.U1, self.U2)

    @property
    def dim(self):
        return self.U0.shape[0]

    @property
    def max_norm(self):
        return max(self.norms)

    def A(self, s1, s2):
        return self.U0 + s1 * self.U1 + s2 * self.U2


@dataclass(frozen=True)
class SimplexBounds:
    d: float
    M: float
    m: float
    a_priori: float
    # Same bound measured on Gram matrices: max ||U_i|| <= gram_d * m^2.
    gram_d: float = float("nan")
    gram_bound: float = float("nan")


def _pairwise_differences(Ms):
    return [Ms[i] - Ms[j] for i in range(len(Ms)) for j in range(i + 1, len(Ms))]


def diameter(S):
    """max over vertex pairs of ||X_i - X_j||."""
    return float(linalg.spectral_norms(_pairwise_differences(S.vertices)).max())


def gram_diameter(S):
    return float(linalg.spectral_norms(_pairwise_differences(S.grams)).max())


def bounds(S):
    """Diameter, vertex norm bounds and the a priori bound 4 d M m^2."""
    w = linalg.eigvalsh_batch(S.vertices)
    if np.any(w[:, 0] <= 0.0):
        raise Singular("simplex vertex is not positive definite")
    M = float(w[:, -1].max())
    m = float((1.0 / w[:, 0]).max())
    # vertex and Gram differences share one batched eigen solve
    norms = linalg.spectral_norms(
        _pairwise_differences(S.vertices) + _pairwise_differences(S.grams)
    )
    half = len(norms) // 2
    d = float(norms[:half].max())
    gd = float(norms[half:].max())
    return SimplexBounds(d=d, M=M, m=m, a_priori=4.0 * d * M * m * m, gram_d=gd, gram_bound=gd * m * m)


def barycentric_subdivide(S, coordinates="gram"):
    """The (n+1)! signed children of S, permutations in lexicographic order.

    Child sigma has vertices b(sigma_0), b(sigma_0 sigma_1), ..., where b(I)
    is the barycenter of the vertices indexed by I and sign sign(S)*sgn(sigma).
    Barycenters are computed once per vertex subset, always summing in
    ascending index order, so children that differ only by swapping equal
    vertices are bitwise identical.
    """
    if coordinates not in COORDINATES:
        raise ValueError(f"coordinates must be one of {COORDINATES}")
    k = len(S.vertices)
    cache = {}

    def barycenter(idx):
        key = tuple(sorted(idx))
        if key not in cache:
            if coordinates == "pdh":
                X = S.vertices[key[0]]
                for i in key[1:]:
                    X = X + S.vertices[i]
                X = X / len(key)
                cache[key] = (X, linalg.hermitian_part(X @ X))
            else:
                G = S.grams[key[0]]
                for i in key[1:]:
                    G = G + S.grams[i]
                G = G / len(key)
                cache[key] = (linalg.pdh_sqrt(G), G)
        return cache[key]

    children = []
    for p, sgn in ordered_permutations(k):
        pts = [barycenter(p[: j + 1]) for j in range(k)]
        children.append(
            HermitianSimplex(
                tuple(x for x, _ in pts),
                S.sign * sgn,
                S.depth + 1,
                tuple(g for _, g in pts),
            )
        )
    return children


def u_matrices(S):
    """U0, U1, U2 with A(s1, s2) = U0 + s1 U1 + s2 U2 for a 3-simplex.

    With W_j = X_3^{-1} G_j X_3^{-1}: U0 = W_0 - I and U_j = W_j - W_0.
    """
    if S.n != 3:
        raise ValueError("u_matrices needs a 3-simplex")
    X3inv = linalg.pdh_inverse(S.vertices[3])
    W = [linalg.hermitian_part(X3inv @ G @ X3inv) for G in S.grams[:3]]
    I = np.eye(S.dim)
    return UTriple.from_matrices(W[0] - I, W[1] - W[0], W[2] - W[0])


def refine_until(
    S,
    theta=DEFAULT_THETA,
    max_depth=DEFAULT_MAX_DEPTH,
    budget=DEFAULT_SIMPLEX_BUDGET,
    coordinates="gram",
    min_depth=0,
    force=False,
):
    """Subdivide S until every piece has max ||U_i|| <= theta.

    Returns the signed leaves in depth-first, lexicographic order.  Depths
    are counted relative to S.  Pieces shallower than ``min_depth`` are
    always subdivided.  A piece that still fails at ``max_depth`` raises
    DepthExceeded, unless ``force`` is set, in which case it is returned as
    a leaf and left to the series evaluator to flag.  ``budget`` caps the
    number of simplices visited.
    """
    if not theta > 0:
        raise ValueError("theta must be positive")
    if max_depth < 0 or min_depth < 0:
        raise ValueError("depths must be nonnegative")
    if min_depth > max_depth:
        raise ValueError("min_depth cannot exceed max_depth")
    root_depth = S.depth
    leaves = []
    visited = 0

    def accepted(T):
        b = bounds(T)
        if b.a_priori <= theta or b.gram_bound <= theta:
            return True, 0.0
        norm = u_matrices(T).max_norm
        return norm <= theta, norm

    def visit(T):
        nonlocal visited
        visited += 1
        if visited > budget:
            raise DepthExceeded(
                f"simplex budget of {budget} exhausted", float("nan"), T.depth - root_depth, visited
            )
        level = T.depth - root_depth
        if level < min_depth:
            ok, norm = False, float("nan")
        else:
            ok, norm = accepted(T)
        if ok:
            leaves.append(T)
            return
        if level >= max_depth:
            if force:
                leaves.append(T)
                return
            raise DepthExceeded(
                f"max_depth {max_depth} reached with max ||U_i|| = {norm:.4g} > theta = {theta}",
                norm,
                level,
                visited,
            )
        for child in barycentric_subdivide(T, coordinates):
            visit(child)

    visit(S)
    return leaves


def required_depth(bound, theta):
    """Smallest k with (3/4)^k * bound <= theta."""
    if bound <= theta:
        return 0
    return math.ceil(math.log(bound / theta) / math.log(4.0 / 3.0))
