"""Random matrix generators shared by the tests."""

import numpy as np


def random_complex(rng, n):
    return rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))


def random_hermitian(rng, n, norm=None):
    A = random_complex(rng, n)
    H = 0.5 * (A + A.conj().T)
    if norm is not None:
        H = H * (norm / np.linalg.norm(H, 2))
    return H


def random_unitary(rng, n):
    Q, R = np.linalg.qr(random_complex(rng, n))
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_invertible(rng, n, cond=5.0):
    """U diag(s) V with singular values in [1, cond]."""
    s = np.exp(rng.uniform(0.0, np.log(cond), size=n))
    return random_unitary(rng, n) @ np.diag(s) @ random_unitary(rng, n)


def expm_hermitian(H):
    w, V = np.linalg.eigh(H)
    return (V * np.exp(w)) @ V.conj().T


def random_pdh(rng, n, spread=1.0):
    """exp(H) with ||H|| = spread: eigenvalues in [e^-spread, e^spread]."""
    return expm_hermitian(random_hermitian(rng, n, norm=spread))


def near_identity_vertices(rng, n, eps, count=4):
    """I + eps H_i with ||H_i|| = 1."""
    return [np.eye(n) + eps * random_hermitian(rng, n, norm=1.0) for _ in range(count)]


def random_utriple_matrices(rng, n, max_norm):
    """Three hermitian matrices with spectral norms in (0, max_norm]."""
    return [random_hermitian(rng, n, norm=rng.uniform(0.3, 1.0) * max_norm) for _ in range(3)]
