"""Physical realizability of linear QSDEs as open quantum harmonic oscillators.

A system with canonical ``Theta`` is realizable exactly when

    A Theta + Theta A^T + B Tim B^T = 0,
    B[:, :n_y] = Theta C^T diag(J, ..., J),
    D = [I 0],

and in that case the Hamiltonian matrix ``R`` and coupling matrix ``Lambda``
are unique. Systems with classical variables (degenerate ``Theta``) are
embedded in a larger system whose commutation matrix is canonical up to a
permutation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matops
from .errors import ConventionError, DimensionError, QsynthError
from .qsde import (
    CommutationMatrix,
    LinearQsde,
    commutation_residual_matrix,
    default_tolerance,
)

IMAG_TOL = 1e-10


@dataclass(frozen=True)
class OscillatorParams:
    """Hamiltonian matrix ``R`` (real symmetric) and coupling ``Lambda`` (complex)."""

    R: np.ndarray
    Lam: np.ndarray

    def __post_init__(self):
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        Lam = np.atleast_2d(np.asarray(self.Lam, dtype=complex))
        if R.shape[0] != R.shape[1] or Lam.shape[1] != R.shape[0]:
            raise DimensionError(f"R {R.shape} and Lambda {Lam.shape} are incompatible")
        if matops.norm2(R - R.T) > matops.STRUCT_TOL * (1 + matops.norm2(R)):
            raise DimensionError("R must be symmetric")
        object.__setattr__(self, "R", matops.sym(R))
        object.__setattr__(self, "Lam", Lam)

    @property
    def n(self) -> int:
        return self.R.shape[0]

    @property
    def n_w_pairs(self) -> int:
        return self.Lam.shape[0]


@dataclass(frozen=True)
class AugmentedSystem:
    """A degenerate system embedded in a larger, canonical-up-to-permutation one.

    ``sys`` has state ``(x, x_aux)``; ``embed`` lists the positions of the
    original variables; ``P`` is the permutation matrix with
    ``P Theta~ P^T = diag(J, ..., J)``.
    """

    sys: LinearQsde
    embed: np.ndarray
    P: np.ndarray

    @property
    def perm(self) -> np.ndarray:
        return np.argmax(self.P, axis=1)

    def canonical_system(self) -> LinearQsde:
        """The augmentation in permuted coordinates, where Theta is canonical."""
        p = self.perm
        s = self.sys
        return LinearQsde(
            s.A[np.ix_(p, p)], s.B[p], s.C[:, p], s.D,
            CommutationMatrix.canonical(s.n), s.ito, s.output_channel_offset,
        )

    def project(self) -> LinearQsde:
        """Delete the auxiliary variables again."""
        e = self.embed
        s = self.sys
        theta = CommutationMatrix(s.theta.matrix[np.ix_(e, e)])
        return LinearQsde(s.A[np.ix_(e, e)], s.B[e], s.C[:, e], s.D, theta, s.ito, s.output_channel_offset)


@dataclass(frozen=True)
class RealizabilityReport:
    realizable: bool
    residual_A: float
    residual_B: float
    d_conforms: bool
    tol: float
    params: OscillatorParams | None = None
    augmentation: AugmentedSystem | None = None

    def __bool__(self):
        return self.realizable


def _selector(n_y: int, n_w: int) -> np.ndarray:
    return np.hstack([np.eye(n_y), np.zeros((n_y, n_w - n_y))])


def realizability_residuals(sys: LinearQsde) -> tuple[float, float, float]:
    """``(residual_A, residual_B, D-deviation)`` after moving the output window first."""
    s = sys.output_first()
    theta = s.theta.matrix
    res_a = matops.norm2(commutation_residual_matrix(s.A, s.B, theta, s.ito.Tim))
    n_y = s.n_y
    if n_y:
        target = theta @ s.C.T @ matops.diag_j(n_y // 2)
        res_b = matops.norm2(s.B[:, :n_y] - target)
    else:
        res_b = 0.0
    d_dev = matops.norm2(s.D - _selector(n_y, s.n_w))
    return res_a, res_b, d_dev


def check_physical_realizability(sys: LinearQsde, tol: float | None = None) -> RealizabilityReport:
    """Decide whether ``sys`` is an open quantum harmonic oscillator.

    Parameters
    ----------
    sys : LinearQsde
        System satisfying the standard conventions. The noise columns
        feeding the output are located through ``output_channel_offset``.
    tol : float, optional
        Residual tolerance, default ``1e-8 (1 + ||A|| + ||B||^2)``.

    Returns
    -------
    RealizabilityReport
        ``params`` is filled in when the system is realizable and ``Theta``
        canonical; ``augmentation`` when it is realizable and degenerate.
    """
    if tol is None:
        tol = default_tolerance(sys.A, sys.B)
    res_a, res_b, d_dev = realizability_residuals(sys)
    d_ok = d_dev <= matops.STRUCT_TOL
    ok = res_a <= tol and res_b <= tol and d_ok
    params = aug = None
    if ok:
        kind = sys.theta.kind
        if kind == "canonical":
            params = extract_hamiltonian_coupling(sys)
        elif kind == "degenerate":
            aug = augment_degenerate(sys)
    return RealizabilityReport(bool(ok), res_a, res_b, bool(d_ok), float(tol), params, aug)


def extract_hamiltonian_coupling(sys: LinearQsde, check_tol: float = IMAG_TOL) -> OscillatorParams:
    """Recover ``R`` and ``Lambda`` from a realizable system with canonical Theta.

    ``R = (-Theta A + A^T Theta)/4`` and
    ``Lambda = -i/2 [0 I] (Gamma^{-1})^T B^T Theta``. The rows of ``Lambda``
    follow the noise pairs in output-first order. The discarded top block
    must equal ``-conj(Lambda)``; a mismatch means ``B`` is not of
    oscillator form.
    """
    if sys.theta.kind != "canonical":
        raise ConventionError("extraction needs a canonical Theta; augment degenerate systems first")
    s = sys.output_first()
    theta = s.theta.matrix
    R = 0.25 * (-theta @ s.A + s.A.T @ theta)
    N = s.n_w // 2
    if N == 0:
        return OscillatorParams(R, np.zeros((1, s.n), dtype=complex))
    G = matops.gamma_matrix(N)
    W = -0.5j * np.linalg.solve(G, np.eye(2 * N)).T @ s.B.T @ theta
    top, Lam = W[:N], W[N:]
    mismatch = matops.norm2(top + Lam.conj())
    if mismatch > check_tol * (1.0 + matops.norm2(s.B)):
        raise QsynthError(f"B is not of oscillator form (block mismatch {mismatch:.2e})")
    return OscillatorParams(R, Lam)


def build_oscillator(params: OscillatorParams, n_y: int, theta: CommutationMatrix | None = None) -> LinearQsde:
    """Assemble the QSDE generated by a quadratic Hamiltonian and linear coupling.

    Returns the system with ``A = 2 Theta (R + Im(Lambda^H Lambda))``,
    ``B = 2i Theta [-Lambda^H, Lambda^T] Gamma``, ``C`` made of the real and
    imaginary parts of the first ``n_y/2`` coupling rows, and ``D = [I 0]``.
    """
    n = params.n
    if theta is None:
        theta = CommutationMatrix.canonical(n)
    if theta.kind != "canonical" or theta.n != n:
        raise ConventionError("build_oscillator needs a canonical Theta of matching size")
    if n_y % 2:
        raise ConventionError(f"n_y must be even, got {n_y}")
    Lam = params.Lam
    N = Lam.shape[0]
    if 2 * N < n_y:
        raise DimensionError(f"Lambda has {N} rows; need at least n_y/2 = {n_y // 2}")
    T = theta.matrix
    A = 2.0 * T @ (params.R + (Lam.conj().T @ Lam).imag)
    Bc = 2j * T @ np.hstack([-Lam.conj().T, Lam.T]) @ matops.gamma_matrix(N)
    if np.max(np.abs(Bc.imag), initial=0.0) > IMAG_TOL * (1.0 + np.max(np.abs(Bc))):
        raise QsynthError("internal error: oscillator B has an imaginary residue")
    Ny = n_y // 2
    if Ny:
        Ly = Lam[:Ny]
        C = matops.permutation_matrix(Ny).T @ np.vstack([2.0 * Ly.real, 2.0 * Ly.imag])
    else:
        C = np.zeros((0, n))
    D = _selector(n_y, 2 * N)
    return LinearQsde(A, Bc.real, C, D, theta)


def augmentation_permutation(n: int, nprime: int) -> np.ndarray:
    """Index order pairing each classical variable with its auxiliary partner."""
    order = []
    for k in range(nprime):
        order += [k, n + k]
    order += list(range(nprime, n))
    return np.array(order, dtype=int)


def augment_degenerate(sys: LinearQsde) -> AugmentedSystem:
    """Embed a system with classical variables into a quantum one.

    With ``Theta = diag(0_{n'}, theta)`` one auxiliary variable is added per
    classical variable, ``Theta~ = [[0, 0, I], [0, theta, 0], [-I, 0, 0]]``,
    and the augmented dynamics

        A~ = [[A, 0], [A1', A2', A'']],   B~ = [B; B1' 0],   C~ = [C 0]

    are chosen so that the commutation condition holds for ``Theta~``
    whenever it holds for the original system. The original state evolves
    exactly as before.
    """
    if sys.theta.kind != "degenerate":
        raise ConventionError("augment_degenerate needs a degenerate canonical Theta")
    s = sys.output_first()
    n, k = s.n, sys.theta.nprime
    theta = s.theta.matrix[k:, k:]
    n_y, n_w = s.n_y, s.n_w
    Tim = s.ito.Tim
    C1 = s.C[:, :k]
    B1p = -C1.T @ matops.diag_j(n_y // 2) if n_y else np.zeros((k, 0))
    B3 = np.hstack([B1p, np.zeros((k, n_w - n_y))])
    A1p = -0.5 * B3 @ Tim @ B3.T
    rhs = -s.A[:, :k].T + B3 @ Tim @ s.B.T
    App = rhs[:, :k]
    A2p = rhs[:, k:] @ theta
    At = np.block([[s.A, np.zeros((n, k))], [A1p, A2p, App]])
    Bt = np.vstack([s.B, B3])
    Ct = np.hstack([s.C, np.zeros((n_y, k))])
    Tt = np.zeros((n + k, n + k))
    Tt[:k, n:] = np.eye(k)
    Tt[n:, :k] = -np.eye(k)
    Tt[k:n, k:n] = theta
    aug = LinearQsde(At, Bt, Ct, s.D, CommutationMatrix(Tt), s.ito, 0)
    perm = augmentation_permutation(n, k)
    P = np.eye(n + k)[perm]
    return AugmentedSystem(aug, np.arange(n), P)
