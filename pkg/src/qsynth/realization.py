"""Physical realization of synthesized controllers.

A controller triple ``(A_K, B_K, C_K)`` fixes only how the controller reacts
to the measurement. To build it as a physical system, extra noise inputs
``v_K`` are added, ``dxi = A_K xi dt + B_K1 dv_K + B_K dy`` and
``du = C_K xi dt + B_K0 dv_K``, with ``B_K1``, ``B_K0`` chosen so that the
result is an open quantum harmonic oscillator (quantum controller), a
classical system driven by fresh noise (classical controller), or a mix.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matops
from .errors import ConventionError, QsynthError
from .qsde import CommutationMatrix, ItoMatrix, LinearQsde, canonical_ito
from .realizability import (
    IMAG_TOL,
    AugmentedSystem,
    OscillatorParams,
    augment_degenerate,
    check_physical_realizability,
)
from .synthesis import ControllerTriple


@dataclass(frozen=True)
class RealizationChoice:
    """``xi_shift`` is the extra margin added to the smallest admissible
    diagonal shift; ``n_vK`` (filled in by the realization) counts controller
    noise quadrature pairs."""

    xi_shift: float = 0.0
    n_vK: int | None = None


@dataclass(frozen=True)
class FullController:
    A_K: np.ndarray
    B_K: np.ndarray
    C_K: np.ndarray
    B_K0: np.ndarray
    B_K1: np.ndarray
    theta_K: CommutationMatrix
    F_vK: ItoMatrix
    oscillator: OscillatorParams | None = None
    augmentation: AugmentedSystem | None = None
    kind: str = "quantum"
    xi_shift: float = 0.0

    @property
    def triple(self) -> ControllerTriple:
        return ControllerTriple(self.A_K, self.B_K, self.C_K)

    @property
    def n_vK(self) -> int:
        return self.B_K1.shape[1]

    def as_qsde(self) -> LinearQsde:
        """The controller as a QSDE with inputs ``(v_K, y)`` and output ``u``."""
        n_y = self.B_K.shape[1]
        B = np.hstack([self.B_K1, self.B_K])
        D = np.hstack([self.B_K0, np.zeros((self.B_K0.shape[0], n_y))])
        F = matops.block_diag(self.F_vK.F, canonical_ito(n_y).F) if n_y else self.F_vK.F
        return LinearQsde(self.A_K, B, self.C_K, D, self.theta_K, ItoMatrix(F), 0)


def _check_even(triple: ControllerTriple, n_y_needed: bool = True):
    for name, k in (("n_K", triple.n_K), ("n_u", triple.n_u), ("n_y", triple.n_y)):
        if k % 2 and (n_y_needed or name != "n_y"):
            raise ConventionError(f"{name} = {k} must be even (see pad_to_convention)")


def _selector(n_u: int, n_v: int) -> np.ndarray:
    return np.hstack([np.eye(n_u), np.zeros((n_u, n_v - n_u))])


def realize_quantum_controller(triple: ControllerTriple, choice: RealizationChoice | None = None) -> FullController:
    """Quantum realization with canonical ``Theta_K``.

    Steps: the coupling rows ``Lambda_b2`` reproducing ``B_K``; a shift
    ``alpha`` making ``Xi = alpha I + i H`` positive semidefinite; a factor
    ``Lambda_b1`` of ``Xi``; and the noise matrices ``B_K1 = [B_K1,1, B_K1,2]``.
    The number of extra noise pairs equals the rank of ``Xi``.
    """
    choice = choice or RealizationChoice()
    _check_even(triple)
    A_K, B_K, C_K = triple.A_K, triple.B_K, triple.C_K
    nK, n_u, n_y = triple.n_K, triple.n_u, triple.n_y
    theta = CommutationMatrix.canonical(nK)
    T = theta.matrix
    Ju = matops.diag_j(n_u // 2)

    Z = -0.5 * T @ A_K
    if n_y:
        Ny = n_y // 2
        W = matops.permutation_matrix(Ny) @ np.kron(np.eye(Ny), matops.M) @ B_K.T @ T
        Lam_b2 = -1j * W[:Ny]
    else:
        Lam_b2 = np.zeros((0, nK), dtype=complex)
    H = 0.5 * (Z - Z.T) - (0.25 * C_K.T @ Ju @ C_K if n_u else 0.0) - (Lam_b2.conj().T @ Lam_b2).imag
    iH = 1j * H
    lam_min = float(np.linalg.eigvalsh(iH)[0]) if nK else 0.0
    alpha = max(0.0, -lam_min) + choice.xi_shift
    Xi = alpha * np.eye(nK) + iH
    Lam_b1 = matops.psd_factor(Xi)
    r = Lam_b1.shape[0]

    B11 = T @ C_K.T @ Ju if n_u else np.zeros((nK, 0))
    G_r = matops.permutation_matrix(r) @ np.kron(np.eye(r), matops.M)
    B12c = 2j * T @ np.hstack([-Lam_b1.conj().T, Lam_b1.T]) @ G_r
    if np.max(np.abs(B12c.imag), initial=0.0) > IMAG_TOL * (1.0 + np.max(np.abs(B12c), initial=0.0)):
        raise QsynthError("internal error: B_K1 has an imaginary residue")
    B_K1 = np.hstack([B11, B12c.real])
    n_vK = n_u + 2 * r
    B_K0 = _selector(n_u, n_vK)
    if n_u:
        Lam_u = 0.5 * np.hstack([np.eye(n_u // 2), 1j * np.eye(n_u // 2)]) @ matops.permutation_matrix(n_u // 2) @ C_K
    else:
        Lam_u = np.zeros((0, nK), dtype=complex)
    osc = OscillatorParams(0.5 * (Z + Z.T), np.vstack([Lam_u, Lam_b1, Lam_b2]))
    return FullController(A_K, B_K, C_K, B_K0, B_K1, theta, canonical_ito(n_vK), osc, None, "quantum", alpha)


def _pair_swap(m: int) -> np.ndarray:
    P = np.zeros((m, m))
    for k in range(0, m, 2):
        P[k, k + 1] = P[k + 1, k] = 1.0
    return P


def realize_classical_controller(triple: ControllerTriple) -> FullController:
    """Classical realization: ``Theta_K = 0``.

    ``B_K1 = [0, B_K Pi]`` where ``Pi`` swaps the two columns of every
    quadrature pair, so ``B_K1 diag(J) B_K1^T = -B_K diag(J) B_K^T`` and the
    commutation terms cancel exactly. ``B_K0 = [I 0]`` passes a fresh
    canonical noise to ``u``.
    """
    if triple.n_y % 2:
        raise ConventionError(f"n_y = {triple.n_y} must be even (see pad_to_convention)")
    if triple.n_u % 2:
        raise ConventionError(f"n_u = {triple.n_u} must be even")
    nK, n_u, n_y = triple.n_K, triple.n_u, triple.n_y
    B_K1 = np.hstack([np.zeros((nK, n_u)), triple.B_K @ _pair_swap(n_y)])
    n_vK = n_u + n_y
    B_K0 = _selector(n_u, n_vK)
    theta = CommutationMatrix(np.zeros((nK, nK)))
    return FullController(triple.A_K, triple.B_K, triple.C_K, B_K0, B_K1, theta,
                          canonical_ito(n_vK), None, None, "classical", 0.0)


def realize_mixed_controller(triple: ControllerTriple, theta_K: CommutationMatrix,
                             choice: RealizationChoice | None = None) -> FullController:
    """Realization with some classical and some quantum controller variables.

    ``theta_K`` may list its quantum pairs and classical variables in any
    block order (e.g. ``diag(J, 0)``). The triple is permuted so the
    classical variables come first, embedded in a canonical-up-to-permutation
    augmentation, realized as a quantum controller, and projected back.
    """
    if not isinstance(theta_K, CommutationMatrix):
        theta_K = CommutationMatrix(theta_K)
    _check_even(triple)
    perm, theta_d = theta_K.to_degenerate_form()
    k = theta_d.nprime
    nK = triple.n_K
    if theta_K.n != nK:
        raise ConventionError("theta_K does not match the controller order")
    if k == 0:
        return realize_quantum_controller(triple, choice)
    if k == nK:
        ctrl = realize_classical_controller(triple)
        return _with_theta(ctrl, theta_K, "mixed")
    A_p = triple.A_K[np.ix_(perm, perm)]
    B_p = triple.B_K[perm]
    C_p = triple.C_K[:, perm]
    n_u, n_y = triple.n_u, triple.n_y
    Ju = matops.diag_j(n_u // 2)
    B_win = theta_d.matrix @ C_p.T @ Ju
    seed = LinearQsde(A_p, np.hstack([B_win, B_p]), C_p, _selector(n_u, n_u + n_y), theta_d,
                      canonical_ito(n_u + n_y), 0)
    aug = augment_degenerate(seed)
    p = aug.perm
    At = aug.sys.A[np.ix_(p, p)]
    Bt = aug.sys.B[p][:, n_u:]
    Ct = aug.sys.C[:, p]
    q = realize_quantum_controller(ControllerTriple(At, Bt, Ct), choice)
    inv_p = np.argsort(p)
    B_K1_aug = q.B_K1[inv_p]
    B_K1_p = B_K1_aug[:nK]
    inv = np.argsort(perm)
    B_K1 = B_K1_p[inv]
    aug_ctrl = LinearQsde(aug.sys.A, np.hstack([B_K1_aug, aug.sys.B[:, n_u:]]), aug.sys.C,
                          np.hstack([q.B_K0, np.zeros((n_u, n_y))]), aug.sys.theta,
                          ItoMatrix(matops.block_diag(q.F_vK.F, canonical_ito(n_y).F)), 0)
    embed = np.array([int(np.flatnonzero(perm == i)[0]) for i in range(nK)])
    augmentation = AugmentedSystem(aug_ctrl, embed, aug.P)
    return FullController(triple.A_K, triple.B_K, triple.C_K, q.B_K0, B_K1, theta_K, q.F_vK,
                          None, augmentation, "mixed", q.xi_shift)


def _with_theta(ctrl: FullController, theta: CommutationMatrix, kind: str) -> FullController:
    return FullController(ctrl.A_K, ctrl.B_K, ctrl.C_K, ctrl.B_K0, ctrl.B_K1, theta, ctrl.F_vK,
                          ctrl.oscillator, ctrl.augmentation, kind, ctrl.xi_shift)


def realize(triple: ControllerTriple, mode: str, choice: RealizationChoice | None = None) -> FullController:
    """Dispatch on ``"quantum"``, ``"classical"`` or ``"mixed:<nprime>"``.

    For ``mixed:<nprime>`` the last ``nprime`` controller variables are
    classical and the rest form canonical pairs.
    """
    if mode == "quantum":
        return realize_quantum_controller(triple, choice)
    if mode == "classical":
        return realize_classical_controller(triple)
    if mode.startswith("mixed:"):
        k = int(mode.split(":", 1)[1])
        nK = triple.n_K
        if not 0 <= k <= nK or (nK - k) % 2:
            raise ConventionError(f"mixed:{k} is incompatible with n_K = {nK}")
        theta = CommutationMatrix(matops.block_diag(matops.diag_j((nK - k) // 2), np.zeros((k, k))))
        return realize_mixed_controller(triple, theta, choice)
    raise ValueError(f"unknown realization mode {mode!r}")


def check_compatibility(ctrl: FullController, tol: float = 1e-12) -> bool:
    """Is ``F_u = B_K0 F_vK B_K0^T`` the canonical Ito matrix?"""
    Fu = ctrl.B_K0 @ ctrl.F_vK.F @ ctrl.B_K0.T
    n_u = Fu.shape[0]
    if n_u % 2:
        return False
    return bool(np.max(np.abs(Fu - canonical_ito(n_u).F), initial=0.0) <= tol) if n_u else True


@dataclass(frozen=True)
class RealizationCheck:
    realizable: bool
    residual_A: float
    residual_B: float
    no_feedthrough: bool
    compatible: bool
    augmentation_residual: float | None = None

    def __bool__(self):
        return self.realizable and self.no_feedthrough and self.compatible


def verify_realization(ctrl: FullController, tol: float | None = None) -> RealizationCheck:
    """Realizability, no ``y -> u`` feedthrough, and noise compatibility.

    For controllers with classical variables the stored augmentation is also
    checked against its canonical-up-to-permutation commutation matrix.
    """
    sys = ctrl.as_qsde()
    rep = check_physical_realizability(sys, tol)
    n_y = ctrl.B_K.shape[1]
    D = sys.D
    no_ft = bool(np.all(D[:, D.shape[1] - n_y:] == 0))
    aug_res = None
    ok = rep.realizable
    if ctrl.augmentation is not None:
        arep = check_physical_realizability(ctrl.augmentation.canonical_system(), tol)
        aug_res = max(arep.residual_A, arep.residual_B)
        ok = ok and arep.realizable
    return RealizationCheck(bool(ok), rep.residual_A, rep.residual_B, no_ft, check_compatibility(ctrl), aug_res)
