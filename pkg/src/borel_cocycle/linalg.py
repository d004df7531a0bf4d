"""Dense complex matrix helpers: hermitian eigensolver, norms, PDH reduction.

Everything here works on plain ``numpy`` complex arrays.  The eigensolver is
a cyclic Jacobi iteration for hermitian matrices; a LAPACK backend is kept
as an option for cross-checks and for speed on larger matrices.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NoConvergence, NotHermitian, Singular

EIG_TOL = 1e-13
MAX_SWEEPS = 60
INVERTIBILITY_THRESHOLD = 1e-10


@dataclass(frozen=True)
class HermitianEig:
    eigenvalues: np.ndarray  # ascending, real
    eigenvectors: np.ndarray  # columns orthonormal


def as_cmatrix(X, name="matrix"):
    """Return ``X`` as a finite square complex array, or raise ValueError."""
    A = np.asarray(X, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValueError(f"{name} must be a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def hermitian_part(H):
    return 0.5 * (H + H.conj().T)


@lru_cache(maxsize=64)
def _round_robin(n):
    """Rounds of disjoint (p, q) pairs covering every pair exactly once.

    Each round also carries the flat indices of pp, pq, qp, qq in an n x n
    matrix, so rotations can be scattered in one assignment.
    """
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(p, q) for p, q in pairs if p < n and q < n]
        ps = np.array([p for p, _ in pairs])
        qs = np.array([q for _, q in pairs])
        flat = np.concatenate([ps * (n + 1), ps * n + qs, qs * n + ps, qs * (n + 1)])
        rounds.append((ps, qs, flat))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def _jacobi(A, tol, max_sweeps, vectors=True):
    """Cyclic Jacobi with round-robin ordering.

    Each round applies up to n/2 disjoint plane rotations at once, as one
    unitary J with A <- J* A J.  The rotation on (p, q) is
    diag(1, ph) @ [[cs, sn], [-sn, cs]] with ph = conj(a_pq)/|a_pq|.
    """
    n = A.shape[0]
    eye = np.eye(n, dtype=complex)
    V = eye.copy() if vectors else None
    scale = np.linalg.norm(A)
    if scale == 0.0 or n == 1:
        return np.real(np.diag(A)).copy(), V
    threshold = tol * scale
    # entries this small are left alone; if all of them are, off <= threshold
    skip = 0.1 * threshold / n
    offdiag = ~np.eye(n, dtype=bool)
    polish = False
    for _ in range(max_sweeps + 1):
        off = np.sqrt(np.sum(np.abs(A[offdiag]) ** 2))
        if off <= threshold:
            # eigenvalues are already within off of the diagonal (Weyl); for
            # vectors one extra sweep takes the residual down to round-off
            if polish or off == 0.0 or not vectors:
                return np.real(np.diag(A)).copy(), V
            polish = True
        for ps, qs, flat in _round_robin(n):
            apq = A[ps, qs]
            r = np.abs(apq)
            active = r > skip
            if not active.all():
                if not active.any():
                    continue
                k = len(ps)
                ps, qs, apq, r = ps[active], qs[active], apq[active], r[active]
                flat = flat.reshape(4, k)[:, active].reshape(-1)
            ph = apq.conj() / r
            # only the real part of the diagonal is read, so round-off in its
            # imaginary part never needs cleaning
            tau = (A[qs, qs].real - A[ps, ps].real) / (2.0 * r)
            # hypot avoids overflow of tau**2 for tiny off-diagonal entries
            t = np.copysign(1.0, tau) / (np.abs(tau) + np.hypot(1.0, tau))
            cs = 1.0 / np.sqrt(1.0 + t * t)
            sn = t * cs
            J = eye.copy()
            J.flat[flat] = np.concatenate([cs, sn, -sn * ph, cs * ph])
            A = J.conj().T @ A @ J
            A.flat[flat[len(ps):3 * len(ps)]] = 0.0
            if vectors:
                V = V @ J
    raise NoConvergence(f"Jacobi iteration did not converge in {max_sweeps} sweeps")


def _jacobi_values_batch(A, tol, max_sweeps):
    """Eigenvalue-only Jacobi on a stack of hermitian matrices, shape (b, n, n).

    Same rotations and stopping rule as ``_jacobi``, applied to every matrix
    of the stack at once.  Pairs below a matrix's own skip level get the
    identity rotation, which leaves that matrix exactly unchanged.
    """
    b, n, _ = A.shape
    scale = np.linalg.norm(A, axis=(1, 2))
    if n == 1 or not np.any(scale):
        return np.real(np.diagonal(A, axis1=1, axis2=2)).copy()
    threshold = tol * scale
    skip = (0.1 * threshold / n)[:, None]
    offdiag = ~np.eye(n, dtype=bool)
    eye = np.eye(n, dtype=complex)
    for _ in range(max_sweeps + 1):
        off = np.sqrt(np.sum(np.abs(A[:, offdiag]) ** 2, axis=1))
        if np.all(off <= threshold):
            return np.real(np.diagonal(A, axis1=1, axis2=2)).copy()
        for ps, qs, flat in _round_robin(n):
            apq = A[:, ps, qs]
            r = np.abs(apq)
            active = r > skip
            if not active.any():
                continue
            r_safe = np.where(active, r, 1.0)
            ph = np.where(active, apq.conj() / r_safe, 1.0)
            tau = (A[:, qs, qs].real - A[:, ps, ps].real) / (2.0 * r_safe)
            t = np.where(active, np.copysign(1.0, tau) / (np.abs(tau) + np.hypot(1.0, tau)), 0.0)
            cs = 1.0 / np.sqrt(1.0 + t * t)
            sn = t * cs
            J = np.broadcast_to(eye, (b, n, n)).reshape(b, n * n).copy()
            J[:, flat] = np.concatenate([cs, sn, -sn * ph, cs * ph], axis=1)
            J = J.reshape(b, n, n)
            A = np.swapaxes(J.conj(), 1, 2) @ A @ J
            A[:, ps, qs] = np.where(active, 0.0, A[:, ps, qs])
            A[:, qs, ps] = np.where(active, 0.0, A[:, qs, ps])
    raise NoConvergence(f"Jacobi iteration did not converge in {max_sweeps} sweeps")


def _as_cstack(Xs):
    A = np.asarray(Xs, dtype=complex)
    if A.ndim != 3 or A.shape[1] != A.shape[2] or A.shape[1] < 1 or A.shape[0] < 1:
        raise ValueError(f"expected a non-empty stack of square matrices, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix stack has non-finite entries")
    return A


def _hermitian_stack_part(A):
    return 0.5 * (A + np.swapaxes(A.conj(), 1, 2))


def _antihermitian_ratio(A):
    num = np.linalg.norm(A - np.swapaxes(A.conj(), 1, 2), axis=(1, 2))
    den = np.linalg.norm(A, axis=(1, 2))
    return num, den


def eigvalsh_batch(Hs, tol=EIG_TOL, method="jacobi", max_sweeps=MAX_SWEEPS):
    """Ascending eigenvalues of each matrix in a stack of hermitian matrices."""
    A = _as_cstack(Hs)
    num, den = _antihermitian_ratio(A)
    if np.any(num > tol * den):
        raise NotHermitian("matrix is not hermitian within tolerance")
    A = _hermitian_stack_part(A)
    if method == "jacobi":
        w = _jacobi_values_batch(A, tol, max_sweeps)
    elif method == "lapack":
        w = np.linalg.eigvalsh(A)
    else:
        raise ValueError(f"unknown eigensolver method {method!r}")
    return np.sort(w, axis=1, kind="stable")


def spectral_norms(Xs, method="jacobi"):
    """Spectral norm of each matrix in a stack of equal-size matrices.

    Matches ``spectral_norm`` matrix by matrix: hermitian entries use
    max |eigenvalue|, the rest go through X*X.
    """
    A = _as_cstack(Xs)
    out = np.zeros(len(A))
    num, den = _antihermitian_ratio(A)
    herm = (num <= 1e-14 * den) & (den > 0)
    other = (num > 1e-14 * den) & (den > 0)
    if herm.any():
        w = eigvalsh_batch(A[herm], method=method)
        out[herm] = np.maximum(np.abs(w[:, 0]), np.abs(w[:, -1]))
    if other.any():
        B = A[other]
        w = eigvalsh_batch(np.swapaxes(B.conj(), 1, 2) @ B, method=method)
        out[other] = np.sqrt(np.maximum(w[:, -1], 0.0))
    return out


def _checked_hermitian(H, tol):
    H = as_cmatrix(H)
    norm = np.linalg.norm(H)
    if np.linalg.norm(H - H.conj().T) > tol * norm:
        raise NotHermitian("matrix is not hermitian within tolerance")
    return hermitian_part(H)


def hermitian_eig(H, tol=EIG_TOL, method="jacobi", max_sweeps=MAX_SWEEPS):
    """Full eigendecomposition of a hermitian matrix, eigenvalues ascending.

    The input is symmetrized as (H + H*)/2 after checking that its
    antihermitian part is below ``tol`` relative to ``||H||``.
    """
    A = _checked_hermitian(H, tol)
    if method == "jacobi":
        w, V = _jacobi(A, tol, max_sweeps)
    elif method == "lapack":
        w, V = np.linalg.eigh(A)
    else:
        raise ValueError(f"unknown eigensolver method {method!r}")
    order = np.argsort(w, kind="stable")
    return HermitianEig(w[order], V[:, order])


def eigvalsh(H, tol=EIG_TOL, method="jacobi", max_sweeps=MAX_SWEEPS):
    """Eigenvalues only, ascending; skips accumulating the rotations."""
    A = _checked_hermitian(H, tol)
    if method == "jacobi":
        w, _ = _jacobi(A, tol, max_sweeps, vectors=False)
    elif method == "lapack":
        w = np.linalg.eigvalsh(A)
    else:
        raise ValueError(f"unknown eigensolver method {method!r}")
    return np.sort(w, kind="stable")


def is_hermitian(X, rtol=0.0):
    return np.linalg.norm(X - X.conj().T) <= rtol * np.linalg.norm(X)


def spectral_norm(X, method="jacobi"):
    """Largest singular value of ``X``.

    Hermitian inputs use max |eigenvalue| directly, which avoids squaring
    the condition number; everything else goes through X*X.
    """
    X = as_cmatrix(X)
    if not np.any(X):
        return 0.0
    if is_hermitian(X, 1e-14):
        w = eigvalsh(X, method=method)
        return float(max(abs(w[0]), abs(w[-1])))
    w = eigvalsh(X.conj().T @ X, method=method)
    return float(np.sqrt(max(w[-1], 0.0)))


def min_singular_value(Y, method="jacobi"):
    Y = as_cmatrix(Y)
    w = eigvalsh(Y.conj().T @ Y, method=method)
    return float(np.sqrt(max(w[0], 0.0)))


def check_invertible(Y, threshold=INVERTIBILITY_THRESHOLD, method="jacobi"):
    """Raise Singular unless sigma_min(Y) >= threshold * ||Y||."""
    Y = as_cmatrix(Y)
    w = eigvalsh(Y.conj().T @ Y, method=method)
    smax = np.sqrt(max(w[-1], 0.0))
    smin = np.sqrt(max(w[0], 0.0))
    if smax == 0.0 or smin < threshold * smax:
        raise Singular(f"matrix is singular: sigma_min={smin:.3e}, sigma_max={smax:.3e}")
    return smin


def pdh_reduce(Y, threshold=INVERTIBILITY_THRESHOLD, method="jacobi"):
    """Positive definite hermitian P with P*P = Y*Y, i.e. P = sqrt(Y*Y).

    This is the positive factor of the polar decomposition Y = UP.
    """
    Y = as_cmatrix(Y)
    eig = hermitian_eig(hermitian_part(Y.conj().T @ Y), method=method)
    w, V = eig.eigenvalues, eig.eigenvectors
    if w[-1] <= 0.0 or np.sqrt(max(w[0], 0.0)) < threshold * np.sqrt(w[-1]):
        raise Singular("pdh_reduce: matrix is singular within threshold")
    P = (V * np.sqrt(w)) @ V.conj().T
    return hermitian_part(P)


def lu_factor(X):
    """LU with partial pivoting.  Returns (LU packed, pivot rows, permutation sign)."""
    A = as_cmatrix(X).copy()
    n = A.shape[0]
    piv = np.arange(n)
    sign = 1
    for k in range(n):
        p = k + int(np.argmax(np.abs(A[k:, k])))
        if A[p, k] == 0:
            raise Singular("zero pivot in LU factorization")
        if p != k:
            A[[k, p]] = A[[p, k]]
            piv[[k, p]] = piv[[p, k]]
            sign = -sign
        A[k + 1:, k] /= A[k, k]
        A[k + 1:, k + 1:] -= np.outer(A[k + 1:, k], A[k, k + 1:])
    return A, piv, sign


def log_abs_det(X):
    """ln |det X| from the LU pivots."""
    LU, _, _ = lu_factor(X)
    d = np.abs(np.diag(LU))
    if not np.all(np.isfinite(d)) or np.any(d == 0):
        raise Singular("log_abs_det: singular matrix")
    return float(np.sum(np.log(d)))


def extreme_eigenvalues(H, method="jacobi"):
    """(lambda_min, lambda_max) of a hermitian matrix."""
    w = eigvalsh(H, method=method)
    return float(w[0]), float(w[-1])


def pdh_sqrt(G, method="jacobi"):
    """Positive square root of a positive definite hermitian matrix."""
    eig = hermitian_eig(hermitian_part(as_cmatrix(G)), method=method)
    w = eig.eigenvalues
    if w[0] <= 0.0:
        raise Singular("pdh_sqrt: matrix is not positive definite")
    V = eig.eigenvectors
    return hermitian_part((V * np.sqrt(w)) @ V.conj().T)


def pdh_inverse(X, threshold=INVERTIBILITY_THRESHOLD, method="jacobi"):
    """Inverse of a positive definite hermitian matrix via its eigendecomposition."""
    eig = hermitian_eig(X, method=method)
    w = eig.eigenvalues
    if w[-1] <= 0.0 or w[0] < threshold * w[-1]:
        raise Singular("matrix is not positive definite within threshold")
    V = eig.eigenvectors
    return hermitian_part((V / w) @ V.conj().T)
