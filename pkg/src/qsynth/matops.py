"""Structured constant matrices and small dense linear-algebra kernels.

Every quantity in the package is a plain ``numpy.ndarray``; the helpers here
build the fixed matrices used throughout (``J``, ``P_m``, ``M``, ``Gamma``)
and wrap the eigen/definiteness/Lyapunov computations with the tolerances
the rest of the package relies on.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .errors import (
    DimensionError,
    NotHermitianError,
    NotPositiveSemidefiniteError,
    SingularSylvesterError,
)

STRUCT_TOL = 1e-9
RESIDUAL_TOL = 1e-8
RANK_TOL = 1e-10

J = np.array([[0.0, 1.0], [-1.0, 0.0]])
M = 0.5 * np.array([[1.0, 1.0j], [1.0, -1.0j]])


def diag_j(m: int) -> np.ndarray:
    """Block diagonal of ``m`` copies of ``J`` (a ``2m x 2m`` matrix)."""
    if m < 0:
        raise DimensionError(f"block count must be >= 0, got {m}")
    if m == 0:
        return np.zeros((0, 0))
    return np.kron(np.eye(m), J)


def block_diag(*blocks) -> np.ndarray:
    """Block diagonal assembly that keeps empty (0 x k) blocks' shapes."""
    blocks = [np.asarray(b) for b in blocks]
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    dtype = np.result_type(*blocks) if blocks else float
    out = np.zeros((rows, cols), dtype=dtype)
    r = c = 0
    for b in blocks:
        out[r:r + b.shape[0], c:c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out


def permutation_matrix(m: int) -> np.ndarray:
    """The ``2m x 2m`` permutation sending ``(a1, a2, ..., a2m)`` to
    ``(a1, a3, ..., a2m-1, a2, a4, ..., a2m)``."""
    if m < 1:
        raise DimensionError(f"permutation_matrix needs m >= 1, got {m}")
    P = np.zeros((2 * m, 2 * m))
    for k in range(m):
        P[k, 2 * k] = 1.0
        P[m + k, 2 * k + 1] = 1.0
    return P


def gamma_matrix(n_w_pairs: int) -> np.ndarray:
    """``Gamma = P_N diag_N(M)`` for ``N = n_w_pairs`` quadrature pairs."""
    if n_w_pairs < 1:
        raise DimensionError(f"gamma_matrix needs N_w >= 1, got {n_w_pairs}")
    return permutation_matrix(n_w_pairs) @ np.kron(np.eye(n_w_pairs), M)


def _as_square(S) -> np.ndarray:
    S = np.atleast_2d(np.asarray(S))
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {S.shape}")
    return S


def hermitian_part(S, tol: float = STRUCT_TOL) -> np.ndarray:
    """Return ``(S + S^H)/2`` after checking ``S`` is Hermitian within ``tol``.

    The check is relative: ``||S - S^H|| <= tol * (1 + ||S||)``.
    """
    S = _as_square(S)
    skew = np.linalg.norm(S - S.conj().T, 2) if S.size else 0.0
    scale = 1.0 + (np.linalg.norm(S, 2) if S.size else 0.0)
    if skew > tol * scale:
        raise NotHermitianError(f"matrix is not Hermitian: ||S - S^H|| = {skew:.3e}")
    return 0.5 * (S + S.conj().T)


def classify_definiteness(S, tol: float = STRUCT_TOL) -> str:
    """Classify a Hermitian matrix by the signs of its eigenvalues.

    Returns one of ``"positive_definite"``, ``"psd"``, ``"negative_definite"``,
    ``"nsd"`` or ``"indefinite"``. The zero matrix is reported as ``"psd"``.
    """
    H = hermitian_part(S, tol)
    if H.size == 0:
        return "psd"
    w = np.linalg.eigvalsh(H)
    lo, hi = w[0], w[-1]
    if lo > tol:
        return "positive_definite"
    if lo >= -tol:
        return "psd"
    if hi < -tol:
        return "negative_definite"
    if hi <= tol:
        return "nsd"
    return "indefinite"


def is_psd(S, tol: float = STRUCT_TOL) -> bool:
    return classify_definiteness(S, tol) in ("positive_definite", "psd")


def is_nsd(S, tol: float = STRUCT_TOL) -> bool:
    H = hermitian_part(S, tol)
    return H.size == 0 or np.linalg.eigvalsh(H)[-1] <= tol


def psd_factor(S, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Factor a Hermitian PSD matrix as ``L^H L``.

    ``L`` has one row per eigenvalue of ``S`` above ``rank_tol`` (at least one
    row: the zero matrix gives a single zero row).
    """
    H = hermitian_part(S, max(rank_tol, STRUCT_TOL))
    n = H.shape[0]
    w, V = np.linalg.eigh(H)
    if n and w[0] < -rank_tol:
        raise NotPositiveSemidefiniteError(f"smallest eigenvalue {w[0]:.3e} < -{rank_tol:g}")
    keep = w > rank_tol
    if not np.any(keep):
        return np.zeros((1, n), dtype=complex)
    # rows in decreasing eigenvalue order
    idx = np.flatnonzero(keep)[::-1]
    return np.sqrt(w[idx])[:, None] * V[:, idx].conj().T


def eigenvalues(A) -> np.ndarray:
    """Eigenvalues sorted lexicographically by (real, imag) for determinism."""
    A = _as_square(A)
    if A.size == 0:
        return np.zeros(0, dtype=complex)
    w = np.linalg.eigvals(A).astype(complex)
    order = np.lexsort((np.round(w.imag, 12), np.round(w.real, 12)))
    return w[order]


def spectral_radius(A) -> float:
    w = eigenvalues(A)
    return float(np.max(np.abs(w))) if w.size else 0.0


def is_hurwitz(A, tol: float = 0.0) -> bool:
    """True iff every eigenvalue has real part ``< -tol``."""
    w = eigenvalues(A)
    return bool(np.all(w.real < -tol)) if w.size else True


def solve_lyapunov(A, Q) -> np.ndarray:
    """Solve ``A^T P + P A + Q = 0`` for symmetric ``P``."""
    A = _as_square(A).astype(float)
    Q = _as_square(Q).astype(float)
    if A.shape != Q.shape:
        raise DimensionError(f"A {A.shape} and Q {Q.shape} differ in shape")
    w = np.linalg.eigvals(A)
    # Sylvester operator P -> A^T P + P A has eigenvalues w_i + w_j
    gap = np.min(np.abs(w[:, None] + w[None, :]))
    if gap <= 1e-12 * (1.0 + np.max(np.abs(w))):
        raise SingularSylvesterError(f"A and -A^T share an eigenvalue (gap {gap:.2e})")
    P = sla.solve_continuous_lyapunov(A.T, -Q)
    return 0.5 * (P + P.T)


def sym(X) -> np.ndarray:
    X = np.asarray(X)
    return 0.5 * (X + X.T)


def norm2(X) -> float:
    """Spectral norm; 0 for empty arrays."""
    X = np.asarray(X)
    return float(np.linalg.norm(X, 2)) if X.size else 0.0
