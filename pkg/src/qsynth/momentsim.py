"""Gaussian moment propagation and trajectory-level dissipation checks.

For ``d eta = (A eta + B beta) dt + [B G] d(noise)`` the mean and the
symmetrized covariance obey

    mu'    = A mu + B beta
    Sigma' = A Sigma + Sigma A^T + [B G] S_F [B G]^T

with ``S_F`` the real part of the noise Ito matrix. Alongside, the running
integrals of ``<eta eta^T>``, ``mu beta^T`` and ``beta beta^T`` are kept so
that time integrals of any quadratic supply rate are exact traces.
"""
from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass

import numpy as np

from . import matops
from .dissipativity import SupplyRate
from .errors import DimensionError
from .qsde import ItoMatrix


@dataclass(frozen=True)
class GaussianState:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if cov.shape != (mean.size, mean.size):
            raise DimensionError("covariance does not match the mean")
        if not matops.is_psd(cov, 1e-9):
            raise DimensionError("covariance must be positive semidefinite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", matops.sym(cov))

    @classmethod
    def zero(cls, n: int) -> "GaussianState":
        return cls(np.zeros(n), np.zeros((n, n)))

    def second_moment(self) -> np.ndarray:
        return self.cov + np.outer(self.mean, self.mean)


@dataclass(frozen=True)
class InputSignal:
    """Piecewise-constant ``beta_w``: ``values[k]`` holds on ``[times[k], times[k+1])``.

    ``times[0]`` must be 0; the last value holds until ``horizon``.
    """

    times: np.ndarray
    values: np.ndarray
    horizon: float

    def __post_init__(self):
        t = np.atleast_1d(np.asarray(self.times, dtype=float))
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if t.size == 0 or t[0] != 0.0 or np.any(np.diff(t) <= 0) or v.shape[0] != t.size:
            raise ValueError("times must start at 0, increase strictly and match values")
        if self.horizon <= t[-1] and t.size > 1:
            raise ValueError("horizon must exceed the last breakpoint")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "horizon", float(self.horizon))

    @classmethod
    def constant(cls, value, horizon: float) -> "InputSignal":
        return cls([0.0], [np.atleast_1d(np.asarray(value, dtype=float))], horizon)

    @classmethod
    def step(cls, amplitude, t_on: float, horizon: float) -> "InputSignal":
        a = np.atleast_1d(np.asarray(amplitude, dtype=float))
        return cls([0.0, t_on], [np.zeros_like(a), a], horizon)

    @classmethod
    def square_wave(cls, amplitude, period: float, horizon: float) -> "InputSignal":
        """Alternating ``+a`` / ``-a`` half periods."""
        a = np.atleast_1d(np.asarray(amplitude, dtype=float))
        times = np.arange(0.0, horizon, 0.5 * period)
        values = [a if k % 2 == 0 else -a for k in range(times.size)]
        return cls(times, values, horizon)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def segments(self):
        ends = np.append(self.times[1:], self.horizon)
        for t0, t1, v in zip(self.times, ends, self.values):
            yield float(t0), float(t1), v


@dataclass(frozen=True)
class Trajectory:
    """Moments on a time grid plus running integrals.

    ``M`` is ``int_0^t <eta eta^T>``, ``P`` is ``int_0^t mu beta^T`` and
    ``W`` is ``int_0^t beta beta^T``. ``C`` is the performance output
    matrix used for ``z`` (optional).
    """

    times: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    M: np.ndarray
    P: np.ndarray
    W: np.ndarray
    C: np.ndarray | None = None

    def second_moments(self) -> np.ndarray:
        return self.covs + np.einsum("ti,tj->tij", self.means, self.means)

    def expected_quadratic(self, Q) -> np.ndarray:
        """``<eta^T Q eta>`` at every time."""
        return np.einsum("ij,tji->t", np.asarray(Q), self.second_moments())

    def integral_quadratic(self, Q) -> np.ndarray:
        """``int_0^t <eta^T Q eta>`` at every time."""
        return np.einsum("ij,tji->t", np.asarray(Q), self.M)

    def integral_xx(self) -> np.ndarray:
        return np.einsum("tii->t", self.M)

    def integral_zz(self, C=None) -> np.ndarray:
        C = self.C if C is None else np.asarray(C)
        if C is None:
            raise ValueError("no output matrix C available for z")
        return self.integral_quadratic(C.T @ C)

    def integral_ww(self) -> np.ndarray:
        return np.einsum("tii->t", self.W)

    def integral_supply(self, supply: SupplyRate) -> np.ndarray:
        return (self.integral_quadratic(supply.R11)
                + 2.0 * np.einsum("ij,tij->t", supply.R12, self.P)
                + np.einsum("ij,tji->t", supply.R22, self.W))

    def to_csv(self, path_or_buf=None) -> str:
        """Columns: time, means, covariance upper triangle, running integrals."""
        n = self.means.shape[1]
        iu = np.triu_indices(n)
        header = ["t"] + [f"mean_{i}" for i in range(n)] + [f"cov_{i}_{j}" for i, j in zip(*iu)]
        header += ["int_xx", "int_ww"] + (["int_zz"] if self.C is not None else [])
        cols = [self.times[:, None], self.means, self.covs[:, iu[0], iu[1]],
                self.integral_xx()[:, None], self.integral_ww()[:, None]]
        if self.C is not None:
            cols.append(self.integral_zz()[:, None])
        data = np.hstack(cols)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in data:
            w.writerow([f"{x:.12g}" for x in row])
        text = buf.getvalue()
        if path_or_buf is not None:
            if hasattr(path_or_buf, "write"):
                path_or_buf.write(text)
            else:
                with open(path_or_buf, "w", encoding="utf-8") as fh:
                    fh.write(text)
        return text


def default_dt(A) -> float:
    return min(0.01, 0.1 / max(matops.norm2(A), 1e-12))


def propagate_moments(Atil, Bbeta, Gnoise, F, state0: GaussianState, u: InputSignal,
                      dt: float | None = None, C=None) -> Trajectory:
    """RK4 integration of the first and second moments.

    Parameters
    ----------
    Atil : (n, n) array
    Bbeta : (n, m) array
        Matrix multiplying ``dw = beta dt + dw~``; it also carries the
        noise ``w~``.
    Gnoise : (n, k) array
        Pure-noise input matrix.
    F : ItoMatrix or array
        Ito matrix of ``(w~, v)``, size ``m + k``.
    state0 : GaussianState
    u : InputSignal
        Piecewise-constant ``beta``; steps are aligned to its breakpoints.
    dt : float, optional
        Step size, default ``min(0.01, 0.1/||A||)``.
    C : array, optional
        Output matrix stored for ``z`` integrals.
    """
    A = np.atleast_2d(np.asarray(Atil, dtype=float))
    n = A.shape[0]
    B = np.asarray(Bbeta, dtype=float).reshape(n, -1)
    G = np.asarray(Gnoise, dtype=float).reshape(n, -1)
    Fm = F.F if isinstance(F, ItoMatrix) else np.atleast_2d(np.asarray(F, dtype=complex))
    BG = np.hstack([B, G])
    if Fm.shape != (BG.shape[1], BG.shape[1]):
        raise DimensionError(f"F is {Fm.shape}, expected {(BG.shape[1],) * 2}")
    if u.dim != B.shape[1]:
        raise DimensionError(f"input signal has {u.dim} components, B has {B.shape[1]} columns")
    if state0.mean.size != n:
        raise DimensionError("initial state does not match Atil")
    Qn = matops.sym(BG @ Fm.real @ BG.T)
    if dt is None:
        dt = default_dt(A)
    if dt <= 0:
        raise ValueError("dt must be positive")
    if matops.norm2(A) * dt > 0.1:
        warnings.warn(f"step size dt = {dt:g} is large for ||A|| = {matops.norm2(A):.3g}")
    m = B.shape[1]

    def rhs(mu, Sig, beta):
        dmu = A @ mu + B @ beta
        dS = A @ Sig + Sig @ A.T + Qn
        return dmu, dS, Sig + np.outer(mu, mu), np.outer(mu, beta)

    mu, Sig = state0.mean.copy(), state0.cov.copy()
    Mi, Pi, Wi = np.zeros((n, n)), np.zeros((n, m)), np.zeros((m, m))
    ts, mus, covs, Ms, Ps, Ws = [0.0], [mu.copy()], [Sig.copy()], [Mi.copy()], [Pi.copy()], [Wi.copy()]
    for t0, t1, beta in u.segments():
        steps = max(1, int(np.ceil((t1 - t0) / dt - 1e-9)))
        h = (t1 - t0) / steps
        bb = np.outer(beta, beta)
        for k in range(steps):
            k1 = rhs(mu, Sig, beta)
            k2 = rhs(mu + 0.5 * h * k1[0], Sig + 0.5 * h * k1[1], beta)
            k3 = rhs(mu + 0.5 * h * k2[0], Sig + 0.5 * h * k2[1], beta)
            k4 = rhs(mu + h * k3[0], Sig + h * k3[1], beta)
            incr = [(h / 6.0) * (a + 2 * b + 2 * c + d) for a, b, c, d in zip(k1, k2, k3, k4)]
            mu = mu + incr[0]
            Sig = matops.sym(Sig + incr[1])
            Mi = Mi + incr[2]
            Pi = Pi + incr[3]
            Wi = Wi + h * bb
            ts.append(t0 + (k + 1) * h)
            mus.append(mu.copy())
            covs.append(Sig.copy())
            Ms.append(matops.sym(Mi))
            Ps.append(Pi.copy())
            Ws.append(Wi.copy())
    Cm = None if C is None else np.asarray(C, dtype=float).reshape(-1, n)
    return Trajectory(np.array(ts), np.array(mus), np.array(covs), np.array(Ms), np.array(Ps), np.array(Ws), Cm)


def dissipation_slack(traj: Trajectory, X, supply: SupplyRate, lam: float) -> np.ndarray:
    """``<V(0)> + lam t - <V(t)> - int <r>`` on the trajectory grid."""
    V = traj.expected_quadratic(X)
    return V[0] + lam * traj.times - V - traj.integral_supply(supply)


def verify_dissipation_empirically(traj: Trajectory, X, supply: SupplyRate, lam: float) -> float:
    """Smallest slack of the dissipation inequality over the trajectory."""
    return float(np.min(dissipation_slack(traj, X, supply, lam)))


def hinf_objective_slack(traj: Trajectory, g, eps, mu1, mu2, C=None) -> np.ndarray:
    rhs = (g**2 - eps**2) * traj.integral_ww() + mu1 + mu2 * traj.times
    return rhs - traj.integral_zz(C) - eps * traj.integral_xx()


def verify_hinf_objective(traj: Trajectory, g, eps, mu1, mu2, C=None, tol: float = 1e-9) -> bool:
    """``int|z|^2 + eps int|eta|^2 <= (g^2 - eps^2) int|beta|^2 + mu1 + mu2 t`` on the grid."""
    slack = hinf_objective_slack(traj, g, eps, mu1, mu2, C)
    scale = 1.0 + np.max(np.abs(traj.integral_zz(C)))
    return bool(np.min(slack) >= -tol * scale)
