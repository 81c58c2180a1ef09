"""Two-Riccati H-infinity synthesis for linear quantum plants.

The plant is

    dx = A x dt + B0 dv + B1 dw + B2 du
    dz = C1 x dt + D12 du
    dy = C2 x dt + D20 dv + D21 dw

and the controller ``dxi = A_K xi dt + B_K1 dv_K + B_K dy``,
``du = C_K xi dt + B_K0 dv_K``. For a given attenuation ``g`` the pipeline
checks the rank assumptions, solves the ``X`` and ``Y`` Riccati equations,
forms the controller and certifies the closed loop as strictly bounded real.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import matops
from .dissipativity import (
    DissipationCertificate,
    compute_lambda0,
    strict_bounded_real_check,
)
from .errors import (
    DimensionError,
    ImaginaryAxisEigenvalue,
    SubspaceExtractionFailure,
    SynthesisFailure,
)
from .qsde import CommutationMatrix, ItoMatrix, LinearQsde, canonical_ito
from .riccati import CareProblem, CareSolution, pencil_full_rank_on_axis, solve_care

FAILURE_CODES = (
    "A1_E1",
    "A1_E2",
    "A1_PENCIL_12",
    "A1_PENCIL_21",
    "G_TOO_SMALL",
    "NEGATIVE_SOLUTION",
    "A2_X_UNSTABLE",
    "A2_Y_UNSTABLE",
    "SPECTRAL_RADIUS_GE_ONE",
    "NOT_BOUNDED_REAL",
)


def _ito(F, m) -> ItoMatrix:
    if F is None:
        return canonical_ito(m) if m and m % 2 == 0 else ItoMatrix(np.eye(m))
    return F if isinstance(F, ItoMatrix) else ItoMatrix(F)


@dataclass(frozen=True)
class UncertaintyChannel:
    """Norm-bounded uncertainty ``A -> A + Bd Delta Cd`` with ``||Delta|| <= 1``.

    The channel occupies the last ``n_delta`` columns of ``B1`` and rows of
    ``C1`` in the overbounded plant; ``Bd = (mu/2) S`` and ``Cd = S^{-1}``.
    """

    Bd: np.ndarray
    Cd: np.ndarray
    mu: float
    S: np.ndarray
    g: float

    @property
    def n_delta(self) -> int:
        return self.Bd.shape[1]


@dataclass(frozen=True)
class Plant:
    A: np.ndarray
    B0: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    C1: np.ndarray
    D12: np.ndarray
    C2: np.ndarray
    D20: np.ndarray
    D21: np.ndarray
    F_v: ItoMatrix | None = None
    F_w: ItoMatrix | None = None
    theta_P: CommutationMatrix | None = None
    uncertainty: UncertaintyChannel | None = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionError(f"A must be square, got {A.shape}")

        def cols(M, name):
            M = np.asarray(M, dtype=float)
            if M.size == 0:
                return np.zeros((n, 0))
            if M.ndim != 2 or M.shape[0] != n:
                raise DimensionError(f"{name} must have {n} rows, got shape {M.shape}")
            return M

        def rows(M, name):
            M = np.asarray(M, dtype=float)
            if M.size == 0:
                return np.zeros((0, n))
            if M.ndim != 2 or M.shape[1] != n:
                raise DimensionError(f"{name} must have {n} columns, got shape {M.shape}")
            return M

        B0, B1, B2 = cols(self.B0, "B0"), cols(self.B1, "B1"), cols(self.B2, "B2")
        C1, C2 = rows(self.C1, "C1"), rows(self.C2, "C2")

        def feed(M, r, c, name):
            M = np.asarray(M, dtype=float)
            if M.size == 0 and r * c == 0:
                return np.zeros((r, c))
            if M.shape != (r, c):
                raise DimensionError(f"{name} must be {r}x{c}, got shape {M.shape}")
            return M

        D12 = feed(self.D12, C1.shape[0], B2.shape[1], "D12")
        D20 = feed(self.D20, C2.shape[0], B0.shape[1], "D20")
        D21 = feed(self.D21, C2.shape[0], B1.shape[1], "D21")
        F_v = _ito(self.F_v, B0.shape[1])
        F_w = _ito(self.F_w, B1.shape[1])
        if F_v.n_w != B0.shape[1] or F_w.n_w != B1.shape[1]:
            raise DimensionError("Ito matrices do not match the noise dimensions")
        theta = self.theta_P
        if theta is None:
            theta = CommutationMatrix.canonical(n) if n % 2 == 0 else CommutationMatrix(np.zeros((n, n)))
        elif not isinstance(theta, CommutationMatrix):
            theta = CommutationMatrix(theta)
        for name, val in (("A", A), ("B0", B0), ("B1", B1), ("B2", B2), ("C1", C1), ("D12", D12),
                          ("C2", C2), ("D20", D20), ("D21", D21)):
            object.__setattr__(self, name, val)
        object.__setattr__(self, "F_v", F_v)
        object.__setattr__(self, "F_w", F_w)
        object.__setattr__(self, "theta_P", theta)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def dims(self) -> dict:
        return dict(n=self.n, n_v=self.B0.shape[1], n_w=self.B1.shape[1], n_u=self.B2.shape[1],
                    n_z=self.C1.shape[0], n_y=self.C2.shape[0])

    @property
    def E1(self) -> np.ndarray:
        return self.D12.T @ self.D12

    @property
    def E2(self) -> np.ndarray:
        return self.D21 @ self.D21.T

    def with_(self, **changes) -> "Plant":
        fields_ = {k: getattr(self, k) for k in (
            "A", "B0", "B1", "B2", "C1", "D12", "C2", "D20", "D21", "F_v", "F_w", "theta_P", "uncertainty")}
        fields_.update(changes)
        return Plant(**fields_)

    def as_qsde(self) -> LinearQsde:
        """The plant seen from its measurement: inputs ``(v, w, u)``, output ``y``.

        The output window is placed on the first even-aligned block of
        noise columns where ``D`` is the identity (the ``w`` block for the
        usual plants), falling back to column 0.
        """
        d = self.dims
        n_u = d["n_u"]
        F_u = _ito(None, n_u)
        B = np.hstack([self.B0, self.B1, self.B2])
        D = np.hstack([self.D20, self.D21, np.zeros((d["n_y"], n_u))])
        F = matops.block_diag(self.F_v.F, self.F_w.F, F_u.F)
        n_y = d["n_y"]
        offset = 0
        for off in range(0, B.shape[1] - n_y + 1, 2):
            if np.allclose(D[:, off:off + n_y], np.eye(n_y)):
                offset = off
                break
        return LinearQsde(self.A, B, self.C2, D, self.theta_P, ItoMatrix(F), offset, check_conventions=False)


@dataclass(frozen=True)
class ControllerTriple:
    A_K: np.ndarray
    B_K: np.ndarray
    C_K: np.ndarray

    def __post_init__(self):
        A_K = np.atleast_2d(np.asarray(self.A_K, dtype=float))
        n = A_K.shape[0]
        B_K = np.asarray(self.B_K, dtype=float).reshape(n, -1)
        C_K = np.asarray(self.C_K, dtype=float).reshape(-1, n)
        object.__setattr__(self, "A_K", A_K)
        object.__setattr__(self, "B_K", B_K)
        object.__setattr__(self, "C_K", C_K)

    @property
    def n_K(self) -> int:
        return self.A_K.shape[0]

    @property
    def n_y(self) -> int:
        return self.B_K.shape[1]

    @property
    def n_u(self) -> int:
        return self.C_K.shape[0]


@dataclass(frozen=True)
class ClosedLoop:
    """Closed loop in ``eta = (x, xi)``.

    ``d eta = Atil eta dt + Btil dw + Gtil dv~`` and
    ``dz = Ctil eta dt + Htil dv~`` with ``v~ = (v, v_K)``. ``F_combined`` is
    the Ito matrix of ``(w, v, v_K)``. ``Bu``/``Cu`` hold the uncertainty
    channel (normalized to ``||Delta|| <= 1``) when the plant carries one.
    """

    Atil: np.ndarray
    Btil: np.ndarray
    Gtil: np.ndarray
    Ctil: np.ndarray
    Htil: np.ndarray
    F_combined: ItoMatrix
    Bu: np.ndarray | None = None
    Cu: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.Atil.shape[0]

    def uncertainty_channel(self, g: float) -> tuple[np.ndarray, np.ndarray, float]:
        """``(Bu, Cu, bound)``: admissible ``Delta`` satisfy ``||Delta|| <= bound``.

        Without an explicit channel the whole ``w -> z`` loop is used with
        ``||Delta|| <= 1/g``.
        """
        if self.Bu is not None:
            return self.Bu, self.Cu, 1.0
        return self.Btil, self.Ctil, 1.0 / g


@dataclass(frozen=True)
class AssumptionA1:
    e1: bool
    e2: bool
    pencil_12: bool
    pencil_21: bool
    diagnostics: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.e1 and self.e2 and self.pencil_12 and self.pencil_21

    def first_failure(self) -> str | None:
        for flag, code in ((self.e1, "A1_E1"), (self.e2, "A1_E2"),
                           (self.pencil_12, "A1_PENCIL_12"), (self.pencil_21, "A1_PENCIL_21")):
            if not flag:
                return code
        return None


@dataclass(frozen=True)
class AssumptionA2:
    x_stabilizing: bool
    y_stabilizing: bool
    spectral_radius_ok: bool
    rho: float

    @property
    def ok(self) -> bool:
        return self.x_stabilizing and self.y_stabilizing and self.spectral_radius_ok


@dataclass(frozen=True)
class SynthesisResult:
    X: np.ndarray
    Y: np.ndarray
    triple: ControllerTriple
    g: float
    certificate: DissipationCertificate
    assumption_report: dict
    closed_loop: ClosedLoop
    X_riccati_cl: np.ndarray
    sol_X: CareSolution
    sol_Y: CareSolution


def _pd(M) -> bool:
    return M.size > 0 and matops.classify_definiteness(M) == "positive_definite"


def check_assumption_a1(plant: Plant) -> AssumptionA1:
    """``E1 > 0``, ``E2 > 0`` and the two pencils keep full rank on the imaginary axis."""
    e1, e2 = _pd(plant.E1), _pd(plant.E2)
    p12 = pencil_full_rank_on_axis(plant.A, plant.B2, plant.C1, plant.D12, mode="column")
    p21 = pencil_full_rank_on_axis(plant.A, plant.B1, plant.C2, plant.D21, mode="row")
    diag = {"pencil_12": p12.diagnostic, "pencil_21": p21.diagnostic}
    return AssumptionA1(e1, e2, bool(p12), bool(p21), diag)


def riccati_x_problem(plant: Plant, g: float) -> CareProblem:
    E1inv = np.linalg.inv(plant.E1)
    B2, C1, D12 = plant.B2, plant.C1, plant.D12
    drift = plant.A - B2 @ E1inv @ D12.T @ C1
    Mq = plant.B1 @ plant.B1.T - g**2 * B2 @ E1inv @ B2.T
    Q = g**-2 * C1.T @ (np.eye(C1.shape[0]) - D12 @ E1inv @ D12.T) @ C1
    return CareProblem(drift, matops.sym(Mq), matops.sym(Q))


def riccati_y_problem(plant: Plant, g: float) -> CareProblem:
    """The ``Y`` equation, transposed into the generic ``A^T X + X A`` form."""
    E2inv = np.linalg.inv(plant.E2)
    B1, C2, D21 = plant.B1, plant.C2, plant.D21
    drift = plant.A - B1 @ D21.T @ E2inv @ C2
    Mq = g**-2 * plant.C1.T @ plant.C1 - C2.T @ E2inv @ C2
    Q = B1 @ (np.eye(B1.shape[1]) - D21.T @ E2inv @ D21) @ B1.T
    return CareProblem(drift.T, matops.sym(Mq), matops.sym(Q))


def _solve_nonneg(p: CareProblem, name: str) -> CareSolution:
    sol = solve_care(p)
    X = sol.X
    tol = 1e-9 * (1.0 + matops.norm2(X))
    if X.size and np.linalg.eigvalsh(X)[0] < -tol:
        raise SynthesisFailure("NEGATIVE_SOLUTION", f"riccati_{name}",
                               f"min eigenvalue {np.linalg.eigvalsh(X)[0]:.3e}")
    return sol


def solve_riccati_X(plant: Plant, g: float) -> CareSolution:
    """Stabilizing ``X >= 0`` of the state-feedback Riccati equation."""
    return _solve_nonneg(riccati_x_problem(plant, g), "X")


def solve_riccati_Y(plant: Plant, g: float) -> CareSolution:
    """Stabilizing ``Y >= 0`` of the filtering Riccati equation."""
    return _solve_nonneg(riccati_y_problem(plant, g), "Y")


def check_assumption_a2(plant: Plant, g: float, X, Y) -> AssumptionA2:
    px, py = riccati_x_problem(plant, g), riccati_y_problem(plant, g)
    xs = matops.is_hurwitz(px.A + px.Mq @ X)
    ys = matops.is_hurwitz(py.A + py.Mq @ Y)
    rho = matops.spectral_radius(np.asarray(X) @ np.asarray(Y))
    return AssumptionA2(xs, ys, rho < 1.0, rho)


def controller_triple(plant: Plant, g: float, X, Y) -> ControllerTriple:
    """Central controller built from the two Riccati solutions."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    E1inv = np.linalg.inv(plant.E1)
    E2inv = np.linalg.inv(plant.E2)
    I = np.eye(plant.n)
    M = I - Y @ X
    if np.linalg.cond(M) > 1e12:
        raise SynthesisFailure("SPECTRAL_RADIUS_GE_ONE", "controller_triple", "I - YX is singular")
    C_K = -E1inv @ (g**2 * plant.B2.T @ X + plant.D12.T @ plant.C1)
    B_K = np.linalg.solve(M, Y @ plant.C2.T + plant.B1 @ plant.D21.T) @ E2inv
    A_K = (plant.A + plant.B2 @ C_K - B_K @ plant.C2
           + (plant.B1 - B_K @ plant.D21) @ plant.B1.T @ X)
    return ControllerTriple(A_K, B_K, C_K)


def close_loop(plant: Plant, ctrl) -> ClosedLoop:
    """Interconnect the plant with a controller triple or a realized controller.

    A bare :class:`ControllerTriple` contributes no controller noise.
    """
    A_K, B_K, C_K = ctrl.A_K, ctrl.B_K, ctrl.C_K
    _n, nK = plant.n, A_K.shape[0]
    d = plant.dims
    if B_K.shape != (nK, d["n_y"]) or C_K.shape != (d["n_u"], nK):
        raise DimensionError("controller dimensions do not match the plant")
    B_K0 = getattr(ctrl, "B_K0", None)
    B_K1 = getattr(ctrl, "B_K1", None)
    F_vK = getattr(ctrl, "F_vK", None)
    if B_K0 is None:
        B_K0 = np.zeros((d["n_u"], 0))
        B_K1 = np.zeros((nK, 0))
        F_vK = ItoMatrix(np.zeros((0, 0)))
    Atil = np.block([[plant.A, plant.B2 @ C_K], [B_K @ plant.C2, A_K]])
    Btil = np.vstack([plant.B1, B_K @ plant.D21])
    Gtil = np.block([[plant.B0, plant.B2 @ B_K0], [B_K @ plant.D20, B_K1]])
    Ctil = np.hstack([plant.C1, plant.D12 @ C_K])
    Htil = np.hstack([np.zeros((d["n_z"], d["n_v"])), plant.D12 @ B_K0])
    F = ItoMatrix(matops.block_diag(plant.F_w.F, plant.F_v.F, F_vK.F))
    Bu = Cu = None
    unc = plant.uncertainty
    if unc is not None:
        k = unc.n_delta
        Bu = np.vstack([unc.Bd, np.zeros((nK, k))])
        Cu = np.hstack([unc.Cd, np.zeros((k, nK))])
    return ClosedLoop(Atil, Btil, Gtil, Ctil, Htil, F, Bu, Cu)


def closed_loop_certificate(cl: ClosedLoop, g: float):
    """Strict bounded-real check of ``w -> z`` plus the dissipation certificate."""
    chk = strict_bounded_real_check(cl.Atil, cl.Btil, cl.Ctil, np.zeros((cl.Ctil.shape[0], cl.Btil.shape[1])), g)
    if not chk.holds:
        return chk, None
    lam = compute_lambda0(chk.X_strict, cl.Btil, cl.Gtil, cl.F_combined)
    return chk, DissipationCertificate(chk.X_strict, lam, chk.margin > 0, chk.margin)


def synthesize(plant: Plant, g: float, realization=None) -> SynthesisResult:
    """Run the full pipeline at attenuation ``g``.

    Parameters
    ----------
    plant : Plant
    g : float
        Disturbance attenuation, ``g > 0``.
    realization : FullController, optional
        When given, the certificate's ``lambda0`` also counts the
        controller noise of this realization.

    Raises
    ------
    SynthesisFailure
        With one of :data:`FAILURE_CODES` and the failing stage.
    """
    if not g > 0:
        raise ValueError("g must be positive")
    a1 = check_assumption_a1(plant)
    code = a1.first_failure()
    if code:
        raise SynthesisFailure(code, "assumption_a1", str(a1.diagnostics))
    sols = {}
    for name, solver in (("X", solve_riccati_X), ("Y", solve_riccati_Y)):
        try:
            sols[name] = solver(plant, g)
        except (ImaginaryAxisEigenvalue, SubspaceExtractionFailure) as exc:
            raise SynthesisFailure("G_TOO_SMALL", f"riccati_{name}", str(exc)) from exc
    X, Y = sols["X"].X, sols["Y"].X
    a2 = check_assumption_a2(plant, g, X, Y)
    if not a2.x_stabilizing:
        raise SynthesisFailure("A2_X_UNSTABLE", "assumption_a2")
    if not a2.y_stabilizing:
        raise SynthesisFailure("A2_Y_UNSTABLE", "assumption_a2")
    if not a2.spectral_radius_ok:
        raise SynthesisFailure("SPECTRAL_RADIUS_GE_ONE", "assumption_a2", f"rho(XY) = {a2.rho:.6g}")
    triple = controller_triple(plant, g, X, Y)
    cl = close_loop(plant, realization if realization is not None else triple)
    chk, cert = closed_loop_certificate(cl, g)
    if cert is None:
        raise SynthesisFailure("NOT_BOUNDED_REAL", "certificate", chk.reason)
    report = {
        "a1": {"e1": a1.e1, "e2": a1.e2, "pencil_12": a1.pencil_12, "pencil_21": a1.pencil_21},
        "a2": {"x_stabilizing": a2.x_stabilizing, "y_stabilizing": a2.y_stabilizing,
               "spectral_radius_ok": a2.spectral_radius_ok, "rho": a2.rho},
    }
    return SynthesisResult(X, Y, triple, float(g), cert, report, cl, chk.X, sols["X"], sols["Y"])


@dataclass(frozen=True)
class ObjectiveBound:
    """Constants of ``int |z|^2 + eps int |eta|^2 <= (g^2 - eps^2) int |beta|^2 + mu1 + mu2 t``.

    ``mu1`` depends on the initial state; use :meth:`mu1` with its second
    moment matrix.
    """

    epsilon: float
    mu2: float
    X: np.ndarray

    def mu1(self, second_moment) -> float:
        return float(np.trace(self.X @ np.asarray(second_moment)))


def verify_hinf_objective_bound(result: SynthesisResult) -> ObjectiveBound:
    """Translate the strict LMI margin ``m`` into ``eps = min(m, sqrt(m))`` and ``mu2 = lambda0``."""
    m = max(result.certificate.epsilon, 0.0)
    eps = min(m, np.sqrt(m))
    return ObjectiveBound(float(eps), result.certificate.lambda0, result.certificate.X)


def feasibility_frontier(plant: Plant, g_lo: float, g_hi: float, sig: int = 3) -> float:
    """Smallest feasible ``g`` in ``[g_lo, g_hi]`` to ``sig`` significant figures.

    Assumes feasibility is monotone in ``g`` and that ``g_hi`` is feasible.
    """
    def ok(g):
        try:
            synthesize(plant, g)
            return True
        except SynthesisFailure:
            return False

    if not ok(g_hi):
        raise SynthesisFailure("G_TOO_SMALL", "frontier", f"g_hi = {g_hi} is infeasible")
    if ok(g_lo):
        return g_lo
    quantum = 10 ** (np.floor(np.log10(g_hi)) - sig + 1)
    while g_hi - g_lo > 0.5 * quantum:
        mid = 0.5 * (g_lo + g_hi)
        if ok(mid):
            g_hi = mid
        else:
            g_lo = mid
    # round up so the reported value stays feasible
    return float(f"{np.ceil(g_hi / quantum) * quantum:.{sig}g}")
