"""Real coordinates for complex Hermitian matrices.

An ``M x M`` Hermitian ``X`` is stored as ``M**2`` reals: the diagonal, then
the real parts of the strict upper triangle, then the imaginary parts (both
in ``numpy.triu_indices(M, 1)`` order). PSD-ness is imposed through the real
symmetric embedding ``[[Re X, -Im X], [Im X, Re X]]``, which is PSD exactly
when ``X`` is.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .ipm import svec


def nparams(M: int) -> int:
    return M * M


@lru_cache(maxsize=64)
def _upper(M: int):
    return np.triu_indices(M, 1)


def trace_coeffs(A: np.ndarray) -> np.ndarray:
    """Vector ``a`` with ``tr(A X) = a @ x`` for Hermitian ``A``."""
    M = A.shape[0]
    iu = _upper(M)
    return np.concatenate([np.real(np.diag(A)), 2.0 * np.real(A[iu]), 2.0 * np.imag(A[iu])])


def identity_coeffs(M: int) -> np.ndarray:
    return np.concatenate([np.ones(M), np.zeros(M * (M - 1))])


def to_matrix(x: np.ndarray, M: int) -> np.ndarray:
    iu = _upper(M)
    k = len(iu[0])
    X = np.diag(x[:M].astype(complex))
    upper = x[M : M + k] + 1j * x[M + k : M + 2 * k]
    X[iu] = upper
    X[(iu[1], iu[0])] = upper.conj()
    return X


def from_matrix(X: np.ndarray) -> np.ndarray:
    M = X.shape[0]
    iu = _upper(M)
    return np.concatenate([np.real(np.diag(X)), np.real(X[iu]), np.imag(X[iu])])


@lru_cache(maxsize=64)
def frobenius_weights(M: int) -> np.ndarray:
    """``||X||_F = ||frobenius_weights(M) * x||``."""
    k = M * (M - 1) // 2
    return np.concatenate([np.ones(M), np.full(2 * k, math.sqrt(2.0))])


@lru_cache(maxsize=64)
def embedding_matrix(M: int) -> np.ndarray:
    """Linear map ``x -> svec([[Re X, -Im X], [Im X, Re X]])``."""
    n = nparams(M)
    cols = []
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        X = to_matrix(e, M)
        E = np.block([[X.real, -X.imag], [X.imag, X.real]])
        cols.append(svec(E))
    out = np.array(cols).T
    out.setflags(write=False)
    return out
