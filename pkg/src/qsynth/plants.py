"""Reference plants: a driven optical cavity and its variants.

The cavity has decay rates ``kappa1`` (unmodelled loss channel ``v``),
``kappa2`` (disturbance/measurement port ``w``) and ``kappa3`` (control port
``u``). All blocks act on the (q, p) quadratures.
"""
from __future__ import annotations

from importlib import resources

import numpy as np

from . import matops
from .qsde import ItoMatrix
from .synthesis import Plant

I2 = np.eye(2)
Z2 = np.zeros((2, 2))


def cavity_plant(kappa1: float = 2.6, kappa2: float = 0.2, kappa3: float = 0.2) -> Plant:
    gamma = kappa1 + kappa2 + kappa3
    return Plant(
        A=-0.5 * gamma * I2,
        B0=-np.sqrt(kappa1) * I2,
        B1=-np.sqrt(kappa2) * I2,
        B2=-np.sqrt(kappa3) * I2,
        C1=np.sqrt(kappa3) * I2,
        D12=I2,
        C2=np.sqrt(kappa2) * I2,
        D20=Z2,
        D21=I2,
    )


def measured_cavity_plant(kappa1: float = 2.6, kappa2: float = 0.2, kappa3: float = 0.2) -> Plant:
    """Cavity whose output is measured in the amplitude quadrature only (``n_y = 1``)."""
    p = cavity_plant(kappa1, kappa2, kappa3)
    sel = np.array([[1.0, 0.0]])
    return p.with_(C2=np.sqrt(kappa2) * sel, D20=np.zeros((1, 2)), D21=sel)


def true_cavity_drift(delta: float, kappa1: float = 2.6, kappa2: float = 0.2, kappa3: float = 0.2) -> np.ndarray:
    """Drift of the cavity when the loss rate is ``kappa1 + delta``."""
    return -0.5 * (kappa1 + kappa2 + kappa3 + delta) * I2


def amplifier_cavity_plant(kappa1=2.6, kappa2=0.2, kappa3=0.2, alpha=1.0, beta=0.5, N=0.5) -> Plant:
    """Cavity fed through an optical amplifier with an inverted heat bath ``h``.

    The heat bath has Ito matrix ``(2N + 1) I + iJ``.
    """
    gamma = kappa1 + kappa2 + kappa3
    A = np.block([[-0.5 * gamma * I2, -np.sqrt(kappa3 * alpha) * I2], [Z2, -0.5 * (alpha - beta) * I2]])
    B0 = matops.block_diag(-np.sqrt(kappa1) * I2, np.sqrt(beta) * I2)
    F_v = ItoMatrix(matops.block_diag(I2 + 1j * matops.J, (2 * N + 1) * I2 + 1j * matops.J))
    return Plant(
        A=A,
        B0=B0,
        B1=np.vstack([-np.sqrt(kappa2) * I2, Z2]),
        B2=np.vstack([-np.sqrt(kappa3) * I2, -np.sqrt(alpha) * I2]),
        C1=np.hstack([np.sqrt(kappa3) * I2, Z2]),
        D12=I2,
        C2=np.hstack([np.sqrt(kappa2) * I2, Z2]),
        D20=np.zeros((2, 4)),
        D21=I2,
        F_v=F_v,
    )


FIXTURES = {
    "cavity": {"g": 0.1, "realize": "quantum"},
    "cavity_uncertain": {"g": 0.1, "realize": "quantum"},
    "cavity_measured": {"g": 0.134, "realize": "classical"},
    "amplifier_cavity": {"g": 0.1, "realize": "mixed:2"},
}


def fixture_path(name: str, expected: bool = False):
    """Filesystem path of a bundled fixture (``expected=True`` for its golden report)."""
    base = resources.files("qsynth") / "fixtures"
    if expected:
        base = base / "expected"
    return base / f"{name}.json"
