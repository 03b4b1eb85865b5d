"""Dense Hermitian linear-algebra kernels and scalar special functions.

Matrices and vectors are plain complex ``numpy`` arrays. The helpers here
validate them at the boundary, so downstream optimizers can assume
Hermitian, finite inputs.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy import special
from scipy.linalg import solve_triangular

from .errors import DomainError, ValidationError
from .settings import NumericSettings, resolve


class EigenPair(NamedTuple):
    value: float
    vector: np.ndarray


def as_vector(x, name: str = "vector") -> np.ndarray:
    v = np.asarray(x, dtype=complex)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1 or v.size == 0:
        raise ValidationError(f"{name} must be a nonempty 1-D array, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"{name} contains non-finite entries")
    return v


def as_hermitian(A, name: str = "matrix", settings: NumericSettings | None = None) -> np.ndarray:
    """Validate ``A`` as Hermitian and return the exactly symmetrized copy."""
    s = resolve(settings)
    a = np.asarray(A, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValidationError(f"{name} must be a nonempty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} contains non-finite entries")
    skew = np.max(np.abs(a - a.conj().T))
    # absolute 1e-12 for O(1) entries; scaled for large ones
    if skew > s.hermitian_atol * max(1.0, np.max(np.abs(a))):
        raise ValidationError(f"{name} is not Hermitian (max asymmetry {skew:.3e})")
    return 0.5 * (a + a.conj().T)


def fix_phase(v: np.ndarray) -> np.ndarray:
    """Rotate ``v`` so its largest-magnitude entry is real and nonnegative.

    Ties go to the lowest index.
    """
    v = np.asarray(v, dtype=complex)
    if v.size == 0:
        return v
    k = int(np.argmax(np.abs(v)))
    if v[k] == 0:
        return v.copy()
    return v * (abs(v[k]) / v[k])


def hermitian_eig(A, settings: NumericSettings | None = None) -> list[EigenPair]:
    """Eigenpairs of a Hermitian matrix, sorted by descending eigenvalue."""
    a = as_hermitian(A, "A", settings)
    vals, vecs = np.linalg.eigh(a)
    order = np.argsort(vals)[::-1]
    return [EigenPair(float(vals[i]), fix_phase(vecs[:, i])) for i in order]


def generalized_eig_max(A, B, settings: NumericSettings | None = None) -> EigenPair:
    """Largest generalized eigenpair of the pencil ``(A, B)`` with ``B`` positive definite.

    Uses the Cholesky reduction ``B = L L^H`` and an ordinary Hermitian
    eigensolve of ``L^{-1} A L^{-H}``. The returned vector has unit
    Euclidean norm.
    """
    s = resolve(settings)
    a = as_hermitian(A, "A", settings)
    b = as_hermitian(B, "B", settings)
    if a.shape != b.shape:
        raise ValidationError(f"pencil shapes differ: {a.shape} vs {b.shape}")
    bvals = np.linalg.eigvalsh(b)
    if bvals[0] <= s.pd_rtol * max(abs(bvals[-1]), 1e-300):
        raise DomainError(f"B is not positive definite (min eigenvalue {bvals[0]:.3e})")
    L = np.linalg.cholesky(b)
    Linv_a = solve_triangular(L, a, lower=True)
    c = solve_triangular(L, Linv_a.conj().T, lower=True).conj().T
    c = 0.5 * (c + c.conj().T)
    vals, vecs = np.linalg.eigh(c)
    y = vecs[:, -1]
    u = solve_triangular(L.conj().T, y, lower=False)
    u = fix_phase(u / np.linalg.norm(u))
    # Rayleigh quotient is more accurate than the reduced eigenvalue
    lam = float(np.real(u.conj() @ a @ u) / np.real(u.conj() @ b @ u))
    return EigenPair(lam, u)


def null_space_projector(z) -> np.ndarray:
    """Orthonormal basis (``dim x (dim-1)``) of the null space of ``z^H``."""
    v = as_vector(z, "z")
    if v.size < 2:
        raise DomainError("null space of a nonzero scalar functional is trivial (dim must be >= 2)")
    if not np.any(v):
        raise DomainError("z must be nonzero")
    q, _ = np.linalg.qr(v.reshape(-1, 1), mode="complete")
    C = q[:, 1:]
    # one re-orthogonalization pass keeps z^H C at roundoff for tiny/huge z
    u = v / np.linalg.norm(v)
    C = C - np.outer(u, u.conj() @ C)
    C, _ = np.linalg.qr(C)
    return C


def inv_erf(x: float) -> float:
    """Inverse error function on the open interval (-1, 1)."""
    x = float(x)
    if not abs(x) < 1.0:
        raise DomainError(f"inv_erf needs |x| < 1, got {x}")
    y = float(special.erfinv(x))
    # Newton polish against math.erf
    for _ in range(2):
        err = math.erf(y) - x
        if err == 0.0:
            break
        y -= err / (2.0 / math.sqrt(math.pi) * math.exp(-y * y))
    return y


def principal_rank_one(X, settings: NumericSettings | None = None) -> tuple[np.ndarray, float]:
    """Best rank-one factor ``w`` of a PSD matrix and the ratio ``lambda_2 / lambda_1``."""
    s = resolve(settings)
    x = as_hermitian(X, "X", settings)
    vals, vecs = np.linalg.eigh(x)
    scale = max(abs(vals[0]), abs(vals[-1]))
    if vals[0] < -s.psd_rtol * max(scale, 1e-300):
        raise DomainError(f"X is not positive semidefinite (min eigenvalue {vals[0]:.3e})")
    lam1 = max(float(vals[-1]), 0.0)
    if lam1 == 0.0:
        return np.zeros(x.shape[0], dtype=complex), 0.0
    w = fix_phase(math.sqrt(lam1) * vecs[:, -1])
    ratio = max(float(vals[-2]), 0.0) / lam1 if x.shape[0] > 1 else 0.0
    return w, ratio


def project_psd(X) -> np.ndarray:
    """Nearest PSD matrix in Frobenius norm (eigenvalue clipping)."""
    x = 0.5 * (np.asarray(X, dtype=complex) + np.asarray(X, dtype=complex).conj().T)
    vals, vecs = np.linalg.eigh(x)
    return (vecs * np.clip(vals, 0.0, None)) @ vecs.conj().T
