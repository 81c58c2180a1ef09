"""Robust mean-square stability under norm-bounded drift uncertainty.

A plant whose drift is only known up to ``A + (mu/2) S Delta S^{-1}`` with
``||Delta|| <= 1`` is handled by absorbing the uncertainty into an extra
disturbance/error pair. The small-gain theorem then turns stability for all
admissible ``Delta`` into a norm bound on one closed-loop channel.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import matops
from .dissipativity import mean_square_stable, strict_bounded_real_check
from .errors import DimensionError
from .qsde import ItoMatrix
from .synthesis import ClosedLoop, Plant, UncertaintyChannel


def overbound_uncertainty(plant: Plant, mu: float, S, g: float) -> Plant:
    """Plant with the uncertainty channel appended to ``w`` and ``z``.

    ``B1 <- [B1, (mu/2) S]``, ``C1 <- [C1; g S^{-1}]``, ``D12 <- [D12; 0]``,
    ``D21 <- [D21, 0]``. The extra disturbance columns carry classical unit
    noise in the Ito matrix (they model a deterministic signal).
    """
    if not mu > 0:
        raise ValueError("mu must be positive")
    S = np.atleast_2d(np.asarray(S, dtype=float))
    n = plant.n
    if S.shape != (n, n):
        raise DimensionError(f"S must be {n}x{n}")
    if np.linalg.cond(S) > 1e12:
        raise DimensionError("S is singular")
    Sinv = np.linalg.inv(S)
    Bd = 0.5 * mu * S
    F_w = ItoMatrix(matops.block_diag(plant.F_w.F, _delta_ito(n)))
    return plant.with_(
        B1=np.hstack([plant.B1, Bd]),
        C1=np.vstack([plant.C1, g * Sinv]),
        D12=np.vstack([plant.D12, np.zeros((n, plant.B2.shape[1]))]),
        D21=np.hstack([plant.D21, np.zeros((plant.C2.shape[0], n))]),
        F_w=F_w,
        uncertainty=UncertaintyChannel(Bd, Sinv, float(mu), S, float(g)),
    )


def _delta_ito(n: int) -> np.ndarray:
    if n % 2 == 0:
        return np.eye(n) + 1j * matops.diag_j(n // 2)
    return np.eye(n, dtype=complex)


def perturbed_drift(cl: ClosedLoop, Delta, g: float = 1.0) -> np.ndarray:
    """``Abar = Atil + Bu Delta Cu`` on the closed loop's uncertainty channel.

    Warns when ``Delta`` exceeds the admissible bound (1 for an explicit
    channel, ``1/g`` otherwise).
    """
    Bu, Cu, bound = cl.uncertainty_channel(g)
    Delta = np.atleast_2d(np.asarray(Delta, dtype=float))
    if Delta.shape != (Bu.shape[1], Cu.shape[0]):
        raise DimensionError(f"Delta must be {Bu.shape[1]}x{Cu.shape[0]}, got {Delta.shape}")
    if matops.norm2(Delta) > bound * (1 + 1e-9):
        warnings.warn(f"||Delta|| = {matops.norm2(Delta):.4g} exceeds the admissible bound {bound:.4g}")
    return cl.Atil + Bu @ Delta @ Cu


@dataclass(frozen=True)
class RobustnessReport:
    """``certified`` is the small-gain certificate; the sample data corroborate it.

    ``grid`` lists ``(s, rightmost real part)`` for ``Delta = s * bound * E``
    along the structured direction ``E``.
    """

    certified: bool
    channel_norm_bound: float
    worst_margin: float
    grid: tuple
    all_samples_stable: bool

    def __bool__(self):
        return self.certified


def _structured_direction(k_in: int, k_out: int) -> np.ndarray:
    E = np.zeros((k_in, k_out))
    np.fill_diagonal(E, 1.0)
    return E


def robust_stability_check(cl: ClosedLoop, g: float, grid: int = 11, n_random: int = 100,
                           seed: int = 0) -> RobustnessReport:
    """Certify mean-square stability for every admissible ``Delta``.

    The certificate is the strict bounded-real test of the ``Delta``
    channel at attenuation ``1/bound``. The ``grid`` structured samples
    ``Delta = s * bound * I`` (``s`` in ``[-1, 1]``) and ``n_random`` random
    admissible samples are evaluated as a diagnostic.
    """
    Bu, Cu, bound = cl.uncertainty_channel(g)
    D0 = np.zeros((Cu.shape[0], Bu.shape[1]))
    chk = strict_bounded_real_check(cl.Atil, Bu, Cu, D0, 1.0 / bound)
    E = _structured_direction(Bu.shape[1], Cu.shape[0])
    rows = []
    worst = -np.inf
    stable = True
    for s in np.linspace(-1.0, 1.0, grid) if grid > 1 else [0.0]:
        Abar = cl.Atil + Bu @ (s * bound * E) @ Cu
        top = float(np.max(matops.eigenvalues(Abar).real))
        rows.append((float(s), top))
        worst = max(worst, top)
        stable &= bool(mean_square_stable(Abar))
    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        Dl = rng.standard_normal(E.shape)
        Dl *= bound * rng.uniform() / max(matops.norm2(Dl), 1e-300)
        Abar = cl.Atil + Bu @ Dl @ Cu
        top = float(np.max(matops.eigenvalues(Abar).real))
        worst = max(worst, top)
        stable &= top < 0
    return RobustnessReport(bool(chk.holds), 1.0 / bound, worst, tuple(rows), stable)
