"""Direct quadrature of Tr((nu^{-1} d nu)^d) over the standard simplex.

nu(y) = G_0 + sum_j y_j (G_j - G_0) with G_i = X_i* X_i.  The d-form is
expanded as sum over permutations sigma of sgn(sigma) Tr(C_s1 ... C_sd)
dy_1...dy_d with C_j = nu^{-1} B_j, B_j = G_j - G_0.

The simplex is mapped to {0 <= z_1 <= ... <= z_d <= 1} by z_i = y_1+...+y_i
(unit Jacobian) and cut into the Kuhn simplices of a uniform n^d grid that
lie in that region.  Each piece is sampled at its centroid.  Two grids (n and
2n) give a discrepancy estimate and a Richardson value.

This routine never touches the series machinery, so agreement between the
two is a genuine cross-check.
"""

from dataclasses import dataclass
from itertools import permutations
import math

import numpy as np

from . import linalg
from .simplex import permutation_sign

DEFAULT_SUBDIVISIONS = 24
_NODE_BLOCK = 4096


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    grid_points: int
    richardson_estimate: complex
    discrepancy: float
    coarse_value: complex = 0j


def simplex_nodes(d, n):
    """Centroids (in y coordinates) of the Kuhn pieces of the standard d-simplex.

    All pieces have volume 1/(d! n^d).
    """
    if n < 1:
        raise ValueError("need at least one subdivision per axis")
    grid = np.indices((n,) * d).reshape(d, -1).T
    pts = []
    for p in permutations(range(d)):
        pos = np.empty(d, dtype=int)
        pos[list(p)] = np.arange(d)
        ok = np.ones(len(grid), dtype=bool)
        for i in range(d - 1):
            ok &= (grid[:, i] < grid[:, i + 1]) | (
                (grid[:, i] == grid[:, i + 1]) & (pos[i + 1] < pos[i])
            )
        offset = np.empty(d)
        offset[list(p)] = (d - np.arange(d)) / (d + 1)
        z = (grid[ok] + offset) / n
        pts.append(np.diff(z, axis=1, prepend=0.0))
    return np.concatenate(pts)


def _form_values(P0, B, y, perms):
    nu = P0[None] + np.einsum("pj,jab->pab", y, B)
    C = np.linalg.solve(nu[:, None], B[None])  # (points, d, N, N)
    if not np.all(np.isfinite(C)):
        raise linalg.Singular("nu is singular at a quadrature node")
    total = np.zeros(len(y), dtype=complex)
    for p, sgn in perms:
        if len(p) == 1:
            total += sgn * np.einsum("paa->p", C[:, p[0]])
            continue
        M = C[:, p[0]]
        for j in p[1:-1]:
            M = M @ C[:, j]
        total += sgn * np.einsum("pab,pba->p", M, C[:, p[-1]])
    return total


def _integrate(P0, B, d, n):
    y = simplex_nodes(d, n)
    perms = [(p, permutation_sign(p)) for p in permutations(range(d))]
    acc = 0j
    for s in range(0, len(y), _NODE_BLOCK):
        acc += np.sum(_form_values(P0, B, y[s : s + _NODE_BLOCK], perms))
    return acc / (math.factorial(d) * n**d), len(y)


def quadrature_phi(vertices, subdivisions_per_axis=DEFAULT_SUBDIVISIONS):
    """Quadrature of the d-form for d + 1 invertible vertices (any d >= 1)."""
    X = [linalg.as_cmatrix(V, "vertex") for V in vertices]
    if len(X) < 2:
        raise ValueError("need at least two vertices")
    if subdivisions_per_axis < 2:
        raise ValueError("subdivisions_per_axis must be at least 2")
    for V in X:
        linalg.check_invertible(V)
    d = len(X) - 1
    G = [linalg.hermitian_part(V.conj().T @ V) for V in X]
    B = np.array([G[j] - G[0] for j in range(1, d + 1)])
    n = subdivisions_per_axis
    coarse, _ = _integrate(G[0], B, d, n)
    fine, pts = _integrate(G[0], B, d, 2 * n)
    return QuadratureResult(
        value=complex(fine),
        grid_points=pts,
        richardson_estimate=complex(fine + (fine - coarse) / 3.0),
        discrepancy=float(abs(fine - coarse)),
        coarse_value=complex(coarse),
    )


def quadrature_phi3(vertices, subdivisions_per_axis=DEFAULT_SUBDIVISIONS):
    """Quadrature of the cocycle integral on a 3-simplex of invertible matrices."""
    if len(vertices) != 4:
        raise ValueError("quadrature_phi3 needs four vertices")
    return quadrature_phi(vertices, subdivisions_per_axis)
