"""Linear quantum stochastic differential equations.

A :class:`LinearQsde` holds the real matrices of

    dx = A x dt + B dw,    dy = C x dt + D dw

together with the commutation matrix ``Theta`` of the system variables
(``[x_j, x_k] = 2i Theta_jk``) and the Ito matrix ``F`` of the noise
(``dw dw^T = F dt``). All commutation algebra is done in real arithmetic:
the antisymmetric part of ``F`` is stored as ``Tim`` with ``T = i Tim``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import matops
from .errors import ConventionError, DimensionError, NotHermitianError


@dataclass(frozen=True)
class CommutationMatrix:
    """Real antisymmetric ``Theta`` with its classification.

    ``kind`` is ``"canonical"`` (``diag(J, ..., J)``), ``"degenerate"``
    (``diag(0_{n'}, J, ..., J)`` with ``n' > 0``) or ``"general"`` for any
    other antisymmetric matrix (e.g. canonical only up to a permutation).
    """

    matrix: np.ndarray

    def __post_init__(self):
        T = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if T.shape[0] != T.shape[1]:
            raise DimensionError(f"Theta must be square, got {T.shape}")
        if T.size and np.max(np.abs(T + T.T)) > 1e-12:
            raise ConventionError("Theta must be antisymmetric")
        T = T.copy()
        T.flags.writeable = False
        object.__setattr__(self, "matrix", T)

    @classmethod
    def canonical(cls, n: int) -> "CommutationMatrix":
        if n % 2:
            raise ConventionError(f"canonical Theta needs even n, got {n}")
        return cls(matops.diag_j(n // 2))

    @classmethod
    def degenerate(cls, n: int, nprime: int) -> "CommutationMatrix":
        if not 0 < nprime <= n or (n - nprime) % 2:
            raise ConventionError(f"degenerate Theta needs 0 < n' <= n and n - n' even (n={n}, n'={nprime})")
        return cls(matops.block_diag(np.zeros((nprime, nprime)), matops.diag_j((n - nprime) // 2)))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def classical_indices(self) -> list[int]:
        """Indices of variables commuting with everything (zero rows)."""
        return [i for i in range(self.n) if not np.any(self.matrix[i])]

    @property
    def nprime(self) -> int:
        return len(self.classical_indices)

    @property
    def kind(self) -> str:
        n = self.n
        if n % 2 == 0 and np.array_equal(self.matrix, matops.diag_j(n // 2)):
            return "canonical"
        k = self.nprime
        if k and (n - k) % 2 == 0 and np.array_equal(
            self.matrix, matops.block_diag(np.zeros((k, k)), matops.diag_j((n - k) // 2))
        ):
            return "degenerate"
        return "general"

    def to_degenerate_form(self) -> tuple[np.ndarray, "CommutationMatrix"]:
        """Permutation ``Pi`` (as an index array) with ``Theta[Pi][:, Pi]`` in
        canonical or degenerate canonical form.

        Works for any Theta whose quantum variables come in consecutive
        ``J``-pairs, e.g. ``diag(J, 0)``.
        """
        classical = self.classical_indices
        rest = [i for i in range(self.n) if i not in classical]
        perm = np.array(classical + rest, dtype=int)
        Tp = self.matrix[np.ix_(perm, perm)]
        out = CommutationMatrix(Tp)
        if out.kind == "general":
            raise ConventionError("Theta is not block-canonical up to moving classical variables first")
        return perm, out


@dataclass(frozen=True)
class ItoMatrix:
    """Nonnegative Hermitian Ito matrix ``F = S + i Tim``."""

    F: np.ndarray

    def __post_init__(self):
        F = np.atleast_2d(np.asarray(self.F, dtype=complex))
        F = matops.hermitian_part(F, 1e-12) if F.size else F.reshape(0, 0)
        F.flags.writeable = False
        object.__setattr__(self, "F", F)

    @classmethod
    def from_parts(cls, S, Tim) -> "ItoMatrix":
        return cls(np.asarray(S, dtype=float) + 1j * np.asarray(Tim, dtype=float))

    @property
    def n_w(self) -> int:
        return self.F.shape[0]

    @property
    def S(self) -> np.ndarray:
        return self.F.real.copy()

    @property
    def Tim(self) -> np.ndarray:
        return self.F.imag.copy()

    def is_psd(self, tol: float = 1e-12) -> bool:
        return matops.is_psd(self.F, tol)

    def is_canonical(self, tol: float = 1e-12) -> bool:
        n = self.n_w
        if n % 2:
            return False
        return bool(np.max(np.abs(self.F - canonical_ito(n).F), initial=0.0) <= tol)

    def permuted(self, perm) -> "ItoMatrix":
        perm = np.asarray(perm, dtype=int)
        return ItoMatrix(self.F[np.ix_(perm, perm)])


def canonical_ito(n_w: int) -> ItoMatrix:
    """``F = I + i diag(J, ..., J)`` for ``n_w/2`` canonical noise pairs."""
    if n_w < 2 or n_w % 2:
        raise ConventionError(f"canonical Ito matrix needs even n_w >= 2, got {n_w}")
    return ItoMatrix(np.eye(n_w) + 1j * matops.diag_j(n_w // 2))


def ito_decompose(F) -> tuple[np.ndarray, np.ndarray]:
    """Split a Hermitian ``F`` into ``S = (F + F^T)/2`` and ``Tim`` with
    ``(F - F^T)/2 = i Tim``."""
    F = np.atleast_2d(np.asarray(F, dtype=complex))
    try:
        H = matops.hermitian_part(F, matops.STRUCT_TOL)
    except NotHermitianError:
        raise
    S = 0.5 * (H + H.T)
    T = 0.5 * (H - H.T)
    return S.real.copy(), (T / 1j).real.copy()


@dataclass(frozen=True)
class LinearQsde:
    """``dx = A x dt + B dw``, ``dy = C x dt + D dw`` with commutation data.

    ``output_channel_offset`` is the first noise column feeding the output
    (the realizability conditions assume the output-feeding block comes
    first; :meth:`output_first` reorders the columns accordingly).
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    theta: CommutationMatrix
    ito: ItoMatrix = None
    output_channel_offset: int = 0
    check_conventions: bool = field(default=True, compare=False)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionError(f"A must be square, got {A.shape}")
        B = np.asarray(self.B, dtype=float)
        if B.size and (B.ndim != 2 or B.shape[0] != n):
            raise DimensionError(f"B has shape {B.shape}, expected {n} rows")
        B = B if B.size else np.zeros((n, 0))
        C = np.asarray(self.C, dtype=float)
        C = np.atleast_2d(C) if C.size else np.zeros((0, n))
        D = np.asarray(self.D, dtype=float)
        D = np.atleast_2d(D) if D.size else np.zeros((C.shape[0], B.shape[1]))
        if C.shape[1] != n:
            raise DimensionError(f"C has shape {C.shape}, expected {n} columns")
        if D.shape != (C.shape[0], B.shape[1]):
            raise DimensionError(f"D has shape {D.shape}, expected {(C.shape[0], B.shape[1])}")
        theta = self.theta if isinstance(self.theta, CommutationMatrix) else CommutationMatrix(self.theta)
        if theta.n != n:
            raise DimensionError(f"Theta is {theta.n}x{theta.n}, expected {n}x{n}")
        ito = self.ito
        if ito is None:
            ito = canonical_ito(B.shape[1]) if B.shape[1] and B.shape[1] % 2 == 0 else ItoMatrix(np.eye(B.shape[1]))
        elif not isinstance(ito, ItoMatrix):
            ito = ItoMatrix(ito)
        if ito.n_w != B.shape[1]:
            raise DimensionError(f"Ito matrix is {ito.n_w}x{ito.n_w} but B has {B.shape[1]} columns")
        n_y, n_w = C.shape[0], B.shape[1]
        off = int(self.output_channel_offset)
        if self.check_conventions:
            if n_y % 2:
                raise ConventionError(f"n_y must be even, got {n_y} (see pad_to_convention)")
            if n_w < n_y:
                raise ConventionError(f"n_w ({n_w}) must be >= n_y ({n_y})")
            if n_w % 2:
                raise ConventionError(f"n_w must be even, got {n_w}")
            if off < 0 or off + n_y > n_w or off % 2:
                raise ConventionError(f"output window [{off}, {off + n_y}) does not fit {n_w} even-aligned columns")
        for name, val in (("A", A), ("B", B), ("C", C), ("D", D)):
            if not np.all(np.isfinite(val)):
                raise DimensionError(f"{name} has non-finite entries")
            val.flags.writeable = False
            object.__setattr__(self, name, val)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "ito", ito)
        object.__setattr__(self, "output_channel_offset", off)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def n_w(self) -> int:
        return self.B.shape[1]

    @property
    def n_y(self) -> int:
        return self.C.shape[0]

    def output_column_order(self) -> np.ndarray:
        off, n_y = self.output_channel_offset, self.n_y
        window = list(range(off, off + n_y))
        return np.array(window + [j for j in range(self.n_w) if j not in window], dtype=int)

    def output_first(self) -> "LinearQsde":
        """Same system with the output-feeding noise columns moved to the front."""
        perm = self.output_column_order()
        return LinearQsde(
            self.A, self.B[:, perm], self.C, self.D[:, perm], self.theta,
            self.ito.permuted(perm), 0, self.check_conventions,
        )

    def with_(self, **changes) -> "LinearQsde":
        fields = dict(
            A=self.A, B=self.B, C=self.C, D=self.D, theta=self.theta, ito=self.ito,
            output_channel_offset=self.output_channel_offset, check_conventions=self.check_conventions,
        )
        fields.update(changes)
        return LinearQsde(**fields)


def pad_to_convention(sys: LinearQsde) -> LinearQsde:
    """Append dummy outputs / noises until ``n_y`` is even and ``n_w >= n_y``, ``n_w`` even.

    Dummy noise columns get zero columns in ``B``/``D``; a dummy pair gets a
    canonical Ito block, a single dummy column a classical unit entry.
    """
    n_y, n_w = sys.C.shape[0], sys.B.shape[1]
    ny2 = n_y + (n_y % 2)
    nw2 = max(n_w, ny2)
    nw2 += nw2 % 2
    C = np.vstack([sys.C, np.zeros((ny2 - n_y, sys.n))])
    extra = nw2 - n_w
    B = np.hstack([sys.B, np.zeros((sys.n, extra))])
    D = np.zeros((ny2, nw2))
    D[:n_y, :n_w] = sys.D
    blocks = [sys.ito.F]
    if extra % 2:
        blocks.append(np.ones((1, 1)))
    if extra // 2:
        blocks.append(canonical_ito(2 * (extra // 2)).F)
    F = matops.block_diag(*blocks) if extra else sys.ito.F
    return LinearQsde(sys.A, B, C, D, sys.theta, ItoMatrix(F), sys.output_channel_offset)


@dataclass(frozen=True)
class CommutationCheck:
    holds: bool
    residual: float

    def __bool__(self):
        return self.holds


def default_tolerance(A, B) -> float:
    return matops.RESIDUAL_TOL * (1.0 + matops.norm2(A) + matops.norm2(B) ** 2)


def commutation_residual_matrix(A, B, theta, Tim) -> np.ndarray:
    """``A Theta + Theta A^T + B Tim B^T`` (the real form of the CCR condition)."""
    return A @ theta + theta @ A.T + B @ Tim @ B.T


def preserves_commutation(sys: LinearQsde, tol: float | None = None) -> CommutationCheck:
    """Do the dynamics preserve ``[x_j, x_k] = 2i Theta_jk`` for all time?"""
    R = commutation_residual_matrix(sys.A, sys.B, sys.theta.matrix, sys.ito.Tim)
    res = matops.norm2(R)
    if tol is None:
        tol = default_tolerance(sys.A, sys.B)
    return CommutationCheck(res <= tol, res)


def commutation_ode_oracle(sys: LinearQsde, horizon: float, steps: int | None = None) -> float:
    """Integrate the commutator dynamics and report the largest drift.

    Integrates ``dC/dt = A C + C A^T + 2 B Tim B^T`` from ``C(0) = 2 Theta``
    with fixed-step RK4 and returns ``max_t ||C(t) - 2 Theta||``.
    """
    if steps is None:
        steps = max(1000, int(np.ceil(horizon * 100)))
    if steps < 10:
        raise ValueError("steps must be >= 10")
    A = sys.A
    forcing = 2.0 * sys.B @ sys.ito.Tim @ sys.B.T
    C0 = 2.0 * sys.theta.matrix

    def f(C):
        return A @ C + C @ A.T + forcing

    h = horizon / steps
    C = C0.copy()
    worst = 0.0
    for _ in range(steps):
        k1 = f(C)
        k2 = f(C + 0.5 * h * k1)
        k3 = f(C + 0.5 * h * k2)
        k4 = f(C + h * k3)
        C = C + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        worst = max(worst, matops.norm2(C - C0))
    return worst
