"""Small numerical helpers shared by the theories and the checks."""
from __future__ import annotations

import numpy as np

RANK_RTOL = 1e-8
RANK_ATOL = 1e-12


def numerical_rank(m, rtol: float = RANK_RTOL, atol: float = RANK_ATOL) -> int:
    """Count singular values above ``max(rtol * s_max, atol)``."""
    m = np.atleast_2d(np.asarray(m))
    if m.size == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    return int(np.sum(s > max(rtol * s[0], atol)))


def orthonormal_span(m, rtol: float = RANK_RTOL, atol: float = RANK_ATOL) -> np.ndarray:
    """Orthonormal basis (columns) for the column space of ``m``."""
    m = np.atleast_2d(np.asarray(m))
    if m.size == 0:
        return np.zeros((m.shape[0], 0))
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    r = int(np.sum(s > max(rtol * s[0], atol)))
    return u[:, :r]


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def haar_vector(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


def haar_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    z = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def permutation_matrix(perm) -> np.ndarray:
    """Matrix sending basis vector ``n`` to basis vector ``perm[n]``."""
    n = len(perm)
    p = np.zeros((n, n))
    for i, j in enumerate(perm):
        p[j, i] = 1.0
    return p
