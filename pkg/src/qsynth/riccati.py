"""Continuous algebraic Riccati equations, H-infinity norms and axis-zero tests.

The generic equation solved here is

    A^T X + X A + X Mq X + Q = 0

with an arbitrary (possibly indefinite) symmetric quadratic coefficient
``Mq``. The stabilizing solution makes ``A + Mq X`` Hurwitz and is read off
the stable invariant subspace of the Hamiltonian ``[[A, Mq], [-Q, -A^T]]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import matops
from .errors import (
    DimensionError,
    ImaginaryAxisEigenvalue,
    SubspaceExtractionFailure,
    UnstableA,
)

AXIS_TOL = 1e-7


@dataclass(frozen=True)
class CareProblem:
    A: np.ndarray
    Mq: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        Mq = np.atleast_2d(np.asarray(self.Mq, dtype=float))
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        n = A.shape[0]
        for name, m in (("A", A), ("Mq", Mq), ("Q", Q)):
            if m.shape != (n, n):
                raise DimensionError(f"{name} has shape {m.shape}, expected {(n, n)}")
        for name, m in (("Mq", Mq), ("Q", Q)):
            if matops.norm2(m - m.T) > matops.STRUCT_TOL * (1 + matops.norm2(m)):
                raise DimensionError(f"{name} is not symmetric")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Mq", matops.sym(Mq))
        object.__setattr__(self, "Q", matops.sym(Q))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def hamiltonian(self) -> np.ndarray:
        return np.block([[self.A, self.Mq], [-self.Q, -self.A.T]])

    def residual(self, X) -> float:
        R = self.A.T @ X + X @ self.A + X @ self.Mq @ X + self.Q
        return matops.norm2(R)


@dataclass(frozen=True)
class CareSolution:
    X: np.ndarray
    residual: float
    closed_loop_eigs: np.ndarray
    stabilizing: bool
    method: str = "schur"


def _from_subspace(U1, U2):
    cond = np.linalg.cond(U1)
    if not np.isfinite(cond) or cond > 1e12:
        raise SubspaceExtractionFailure(f"U1 is ill-conditioned (cond {cond:.2e})")
    X = np.linalg.solve(U1.T, U2.T).T
    return matops.sym(X)


def _schur_solve(p: CareProblem) -> np.ndarray:
    n = p.n
    T, U, sdim = sla.schur(p.hamiltonian(), output="real", sort="lhp")
    if sdim != n:
        raise SubspaceExtractionFailure(f"stable subspace has dimension {sdim}, expected {n}")
    return _from_subspace(U[:n, :n], U[n:, :n])


def _sign_solve(p: CareProblem, maxiter: int = 100, tol: float = 1e-13) -> np.ndarray:
    n = p.n
    W = p.hamiltonian()
    for _ in range(maxiter):
        Winv = np.linalg.inv(W)
        # determinant scaling accelerates the Newton iteration
        c = abs(np.linalg.det(W)) ** (-1.0 / (2 * n))
        if not np.isfinite(c) or c == 0:
            c = 1.0
        W_next = 0.5 * (c * W + Winv / c)
        done = np.linalg.norm(W_next - W, 1) <= tol * np.linalg.norm(W_next, 1)
        W = W_next
        if done:
            break
    else:
        raise SubspaceExtractionFailure("matrix sign iteration did not converge")
    I = np.eye(n)
    lhs = np.vstack([W[:n, n:], W[n:, n:] + I])
    rhs = -np.vstack([W[:n, :n] + I, W[n:, :n]])
    X, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    return matops.sym(X)


def solve_care(p: CareProblem, method: str = "auto", axis_tol: float = AXIS_TOL) -> CareSolution:
    """Stabilizing solution of ``A^T X + X A + X Mq X + Q = 0``.

    ``method`` is ``"schur"``, ``"sign"`` or ``"auto"`` (Schur first, sign
    iteration if the Schur route fails or leaves a large residual).

    Raises
    ------
    ImaginaryAxisEigenvalue
        The Hamiltonian has an eigenvalue within ``axis_tol`` of the
        imaginary axis, so no stabilizing solution exists.
    SubspaceExtractionFailure
        Neither route produced an accurate stabilizing solution.
    """
    H = p.hamiltonian()
    w = np.linalg.eigvals(H)
    if np.any(np.abs(w.real) <= axis_tol):
        close = w[np.argmin(np.abs(w.real))]
        raise ImaginaryAxisEigenvalue(f"Hamiltonian eigenvalue {close:.3e} on the imaginary axis")

    bound = matops.RESIDUAL_TOL * (1.0 + matops.norm2(p.Q))
    routes = {"schur": [_schur_solve], "sign": [_sign_solve], "auto": [_schur_solve, _sign_solve]}
    if method not in routes:
        raise ValueError(f"unknown method {method!r}")
    errors = []
    for route in routes[method]:
        try:
            X = route(p)
        except (SubspaceExtractionFailure, np.linalg.LinAlgError) as exc:
            errors.append(f"{route.__name__}: {exc}")
            continue
        res = p.residual(X)
        eigs = matops.eigenvalues(p.A + p.Mq @ X)
        stab = bool(np.all(eigs.real < 0))
        if res <= bound and stab:
            name = "schur" if route is _schur_solve else "sign"
            return CareSolution(X=X, residual=res, closed_loop_eigs=eigs, stabilizing=True, method=name)
        errors.append(f"{route.__name__}: residual {res:.2e}, stabilizing={stab}")
    raise SubspaceExtractionFailure("; ".join(errors))


def _transfer(A, B, C, D, s):
    n = A.shape[0]
    return C @ np.linalg.solve(s * np.eye(n) - A, B) + D


def _axis_crossing(A, B, C, D, gamma, axis_tol) -> bool:
    """True iff the gamma-Hamiltonian has an eigenvalue on the imaginary axis,
    i.e. some frequency has a singular value equal to gamma."""
    m = B.shape[1]
    R = gamma**2 * np.eye(m) - D.T @ D
    Ri = np.linalg.inv(R)
    F = A + B @ Ri @ D.T @ C
    H = np.block([
        [F, B @ Ri @ B.T],
        [-C.T @ (np.eye(C.shape[0]) + D @ Ri @ D.T) @ C, -F.T],
    ])
    w = np.linalg.eigvals(H)
    scale = 1.0 + np.max(np.abs(w))
    return bool(np.any(np.abs(w.real) <= axis_tol * scale))


def _strictly_proper_part_vanishes(A, B, C, rtol: float = 1e-12) -> bool:
    # C (sI - A)^{-1} B == 0 iff all Markov parameters C A^k B, k < n, vanish.
    # The gamma-Hamiltonian is numerically useless near gamma = 0, so this
    # case is settled before bisecting.
    scale_a = max(1.0, matops.norm2(A))
    scale = matops.norm2(C) * matops.norm2(B)
    if scale == 0.0:
        return True
    K = B.copy()
    for k in range(A.shape[0]):
        if matops.norm2(C @ K) > rtol * scale * scale_a**k:
            return False
        K = A @ K
    return True


def hinf_norm(A, B, C, D=None, tol: float = 1e-10, axis_tol: float = 1e-9) -> float:
    """H-infinity norm of ``C (sI - A)^{-1} B + D`` by bisection on gamma.

    ``A`` must be Hurwitz. The returned value is within ``tol`` of the norm.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    D = np.zeros((C.shape[0], B.shape[1])) if D is None else np.atleast_2d(np.asarray(D, dtype=float))
    if not matops.is_hurwitz(A):
        raise UnstableA("hinf_norm needs a Hurwitz A")
    if B.size == 0 or C.size == 0:
        return matops.norm2(D)

    sd = matops.norm2(D)
    if _strictly_proper_part_vanishes(A, B, C):
        return sd
    lo = max(sd, matops.norm2(_transfer(A, B, C, D, 0.0)))
    hi = max(2.0 * lo, sd + matops.norm2(C) * matops.norm2(B), 1e-12)
    while _axis_crossing(A, B, C, D, hi, axis_tol):
        lo, hi = hi, 2.0 * hi
    if lo == 0.0 and not _axis_crossing(A, B, C, D, tol, axis_tol):
        return 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= sd or _axis_crossing(A, B, C, D, mid, axis_tol):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def frequency_sweep_norm(A, B, C, D=None, omegas=None) -> float:
    """Max singular value over a frequency grid (lower bound on the norm)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    D = np.zeros((C.shape[0], B.shape[1])) if D is None else np.atleast_2d(np.asarray(D, dtype=float))
    if omegas is None:
        omegas = np.logspace(-3, 3, 10_000)
    best = matops.norm2(D)
    for w in omegas:
        best = max(best, np.linalg.svd(_transfer(A, B, C, D, 1j * w), compute_uv=False)[0])
    return float(best)


@dataclass(frozen=True)
class PencilRank:
    full_rank: bool
    axis_zeros: tuple = ()
    diagnostic: str = ""

    def __bool__(self):
        return self.full_rank


def pencil_full_rank_on_axis(A, B, C, D, mode: str = "column", tol: float = 1e-9, seed: int = 0) -> PencilRank:
    """Does ``[[A - jwI, B], [C, D]]`` keep full column (or row) rank for all w >= 0?

    Rank can only drop at invariant zeros. Candidates are the finite
    generalized eigenvalues of a random square compression of the pencil
    (a superset of the true zeros); each candidate near the imaginary axis is
    then checked against the original pencil with an SVD.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    D = np.atleast_2d(np.asarray(D, dtype=float))
    if mode == "row":
        A, B, C, D = A.T, C.T, B.T, D.T
    elif mode != "column":
        raise ValueError("mode must be 'column' or 'row'")
    n, m, p = A.shape[0], B.shape[1], C.shape[0]
    if B.shape[0] != n or C.shape[1] != n or D.shape != (p, m):
        raise DimensionError("incompatible pencil blocks")
    if n + p < n + m:
        return PencilRank(False, (), f"pencil has fewer rows ({n + p}) than columns ({n + m})")

    big = np.block([[A, B], [C, D]])
    E = matops.block_diag(np.eye(n), np.zeros((p, m)))
    scale = 1.0 + np.linalg.norm(big, 2)

    def smin(s):
        P = big - s * E
        return np.linalg.svd(P, compute_uv=False)[-1]

    rng = np.random.default_rng(seed)
    probe = rng.standard_normal() + 1j * rng.standard_normal()
    if smin(probe) <= tol * scale:
        return PencilRank(False, (), "pencil is identically rank deficient (normal rank too low)")

    if n + p == n + m:
        Wl = np.eye(n + m)
    else:
        Wl = rng.standard_normal((n + m, n + p))
    a, b = Wl @ big, Wl @ E
    w = sla.eigvals(a, b, homogeneous_eigvals=False)
    w = w[np.isfinite(w)]
    zeros = []
    for s in w:
        if abs(s.real) <= max(1e-7, 1e-7 * abs(s)):
            jw = 1j * abs(s.imag)
            if smin(jw) <= max(tol, 1e-8) * scale:
                zeros.append(complex(jw))
    if zeros:
        return PencilRank(False, tuple(zeros), f"rank drops at s = {zeros[0]:.4g}")
    return PencilRank(True, (), "")
