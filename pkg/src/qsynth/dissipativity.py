"""Supply rates, dissipation certificates and bounded-real tests.

A system ``dx = (A x + B beta_w) dt + G dv`` is dissipative with quadratic
supply rate ``r(x, beta_w)`` when a storage ``V(x) = x^T X x`` satisfies

    [[A^T X + X A + R11, R12 + X B], [B^T X + R12^T, R22]] <= 0,

in which case the noise enters only through the constant
``lambda0 = trace([B G]^T X [B G] F)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matops
from .errors import (
    DimensionError,
    ImaginaryAxisEigenvalue,
    NotPositiveSemidefiniteError,
    SingularSylvesterError,
    SubspaceExtractionFailure,
)
from .qsde import ItoMatrix
from .riccati import CareProblem, solve_care


@dataclass(frozen=True)
class SupplyRate:
    """``r(x, b) = x^T R11 x + 2 x^T R12 b + b^T R22 b``."""

    R11: np.ndarray
    R12: np.ndarray
    R22: np.ndarray

    def __post_init__(self):
        R11 = np.atleast_2d(np.asarray(self.R11, dtype=float))
        R22 = np.atleast_2d(np.asarray(self.R22, dtype=float))
        R12 = np.asarray(self.R12, dtype=float).reshape(R11.shape[0], R22.shape[0])
        object.__setattr__(self, "R11", matops.sym(R11))
        object.__setattr__(self, "R12", R12)
        object.__setattr__(self, "R22", matops.sym(R22))

    def matrix(self) -> np.ndarray:
        return np.block([[self.R11, self.R12], [self.R12.T, self.R22]])

    def negated(self) -> "SupplyRate":
        return SupplyRate(-self.R11, -self.R12, -self.R22)


@dataclass(frozen=True)
class DissipationCertificate:
    """Storage matrix ``X`` with the noise constant ``lambda0``.

    ``epsilon`` is the strictness margin ``-max eig(LMI)`` (0 if not strict).
    """

    X: np.ndarray
    lambda0: float
    strict: bool
    epsilon: float


@dataclass(frozen=True)
class DissipationCheck:
    ok: bool
    lmi_max_eig: float
    lambda0: float

    def __bool__(self):
        return self.ok


@dataclass(frozen=True)
class BoundedRealCheck:
    """Outcome of the strict bounded-real test.

    ``X`` is the stabilizing Riccati solution; ``X_strict`` a positive
    definite storage for which the dissipation LMI holds strictly, with
    margin ``margin``. ``reason`` is empty on success, otherwise one of
    ``"unstable_A"``, ``"feedthrough_too_large"``, ``"no_stabilizing_solution"``.
    """

    holds: bool
    X: np.ndarray | None = None
    X_strict: np.ndarray | None = None
    margin: float = 0.0
    reason: str = ""

    def __bool__(self):
        return self.holds


def dissipation_lmi(A, B, supply: SupplyRate, X) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if supply.R11.shape != A.shape or supply.R22.shape[0] != B.shape[1]:
        raise DimensionError("supply rate does not match (A, B)")
    top = np.hstack([A.T @ X + X @ A + supply.R11, supply.R12 + X @ B])
    bottom = np.hstack([B.T @ X + supply.R12.T, supply.R22])
    return matops.sym(np.vstack([top, bottom]))


def compute_lambda0(X, B, G, F) -> float:
    """``Re trace([B G]^T X [B G] F)`` for the Ito matrix ``F`` of ``(w, v)``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    B = np.asarray(B, dtype=float).reshape(n, -1)
    G = np.asarray(G, dtype=float).reshape(n, -1)
    F = F.F if isinstance(F, ItoMatrix) else np.atleast_2d(np.asarray(F, dtype=complex))
    BG = np.hstack([B, G])
    if F.shape != (BG.shape[1], BG.shape[1]):
        raise DimensionError(f"F is {F.shape}, expected {(BG.shape[1],) * 2}")
    val = np.trace(BG.T @ X @ BG @ F)
    if abs(val.imag) > 1e-10 * (1.0 + abs(val.real)):
        raise DimensionError(f"lambda0 has imaginary part {val.imag:.2e}; is X symmetric?")
    return float(val.real)


def verify_dissipation(A, B, G, supply: SupplyRate, X, strict: bool = False, F=None) -> DissipationCheck:
    """Check a caller-provided storage ``X`` against the dissipation LMI.

    ``X`` must be positive semidefinite. ``F`` is the Ito matrix of the
    combined noise ``(w, v)``; when omitted, canonical vacuum noise is
    assumed for every column of ``[B G]``.
    """
    X = matops.sym(np.atleast_2d(np.asarray(X, dtype=float)))
    if not matops.is_psd(X):
        raise NotPositiveSemidefiniteError("storage matrix X must be positive semidefinite")
    L = dissipation_lmi(A, B, supply, X)
    top = float(np.linalg.eigvalsh(L)[-1])
    scale = 1.0 + matops.norm2(L)
    ok = top < -matops.STRUCT_TOL * scale if strict else top <= matops.STRUCT_TOL * scale
    n = X.shape[0]
    Bm = np.asarray(B, dtype=float).reshape(n, -1)
    Gm = np.asarray(G, dtype=float).reshape(n, -1)
    m = Bm.shape[1] + Gm.shape[1]
    if F is None:
        F = _vacuum(m)
    lam = compute_lambda0(X, Bm, Gm, F)
    return DissipationCheck(bool(ok), top, lam)


def _vacuum(m: int) -> np.ndarray:
    F = np.eye(m, dtype=complex)
    F[: 2 * (m // 2), : 2 * (m // 2)] += 1j * matops.diag_j(m // 2)
    return F


def bounded_real_supply(C, D, g: float) -> SupplyRate:
    """Supply ``|z|^2 - g^2 |beta_w|^2`` for ``z = C x + D beta_w``."""
    if g <= 0:
        raise ValueError("g must be positive")
    C = np.atleast_2d(np.asarray(C, dtype=float))
    D = np.asarray(D, dtype=float).reshape(C.shape[0], -1)
    return SupplyRate(C.T @ C, C.T @ D, D.T @ D - g**2 * np.eye(D.shape[1]))


def _bounded_real_care(A, B, C, D, g, extra: float = 0.0) -> CareProblem:
    R = g**2 * np.eye(B.shape[1]) - D.T @ D
    Rinv = np.linalg.inv(R)
    drift = A + B @ Rinv @ D.T @ C
    Mq = B @ Rinv @ B.T
    Q = C.T @ (np.eye(C.shape[0]) + D @ Rinv @ D.T) @ C + extra * np.eye(A.shape[0])
    return CareProblem(drift, matops.sym(Mq), matops.sym(Q))


def strict_bounded_real_check(A, B, C, D, g: float) -> BoundedRealCheck:
    """Is ``C (sI - A)^{-1} B + D`` stable with norm strictly below ``g``?

    Decided through the Riccati equation

        A^T X + X A + C^T C + (X B + C^T D)(g^2 I - D^T D)^{-1}(B^T X + D^T C) = 0,

    which must have a stabilizing solution ``X >= 0``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    B = np.asarray(B, dtype=float).reshape(n, -1)
    C = np.asarray(C, dtype=float).reshape(-1, n)
    D = np.asarray(D, dtype=float).reshape(C.shape[0], B.shape[1]) if np.size(D) else np.zeros((C.shape[0], B.shape[1]))
    if not matops.is_hurwitz(A):
        return BoundedRealCheck(False, reason="unstable_A")
    R = g**2 * np.eye(B.shape[1]) - D.T @ D
    if B.shape[1] and matops.classify_definiteness(R, 1e-9) != "positive_definite":
        return BoundedRealCheck(False, reason="feedthrough_too_large")
    try:
        sol = solve_care(_bounded_real_care(A, B, C, D, g))
    except (ImaginaryAxisEigenvalue, SubspaceExtractionFailure):
        return BoundedRealCheck(False, reason="no_stabilizing_solution")
    X = sol.X
    if not matops.is_psd(X, 1e-9 * (1 + matops.norm2(X))):
        return BoundedRealCheck(False, X=X, reason="no_stabilizing_solution")
    X_strict, margin = _strict_witness(A, B, C, D, g, X)
    return BoundedRealCheck(True, X=X, X_strict=X_strict, margin=margin)


def _strict_witness(A, B, C, D, g, X):
    """Perturb the constant term to get a storage with a strictly negative LMI."""
    supply = bounded_real_supply(C, D, g)
    scale = 1.0 + matops.norm2(supply.R11)
    delta = 1e-3 * scale
    for _ in range(30):
        try:
            Xs = solve_care(_bounded_real_care(A, B, C, D, g, extra=delta)).X
        except (ImaginaryAxisEigenvalue, SubspaceExtractionFailure):
            delta *= 0.1
            continue
        top = float(np.linalg.eigvalsh(dissipation_lmi(A, B, supply, Xs))[-1])
        if top < 0 and matops.classify_definiteness(Xs, 0.0) == "positive_definite":
            return Xs, -top
        delta *= 0.1
    return X, 0.0


@dataclass(frozen=True)
class MeanSquareStability:
    stable: bool
    X: np.ndarray | None = None

    def __bool__(self):
        return self.stable


def mean_square_stable(Abar) -> MeanSquareStability:
    """Second moments stay bounded iff ``Abar`` is Hurwitz.

    The witness ``X`` solves ``Abar^T X + X Abar + I = 0``.
    """
    Abar = np.atleast_2d(np.asarray(Abar, dtype=float))
    if not matops.is_hurwitz(Abar):
        return MeanSquareStability(False)
    try:
        X = matops.solve_lyapunov(Abar, np.eye(Abar.shape[0]))
    except SingularSylvesterError:
        return MeanSquareStability(False)
    return MeanSquareStability(True, X)
