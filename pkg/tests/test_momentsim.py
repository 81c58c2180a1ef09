import numpy as np
import pytest

from qsynth import matops
from qsynth.dissipativity import bounded_real_supply, compute_lambda0, strict_bounded_real_check
from qsynth.errors import DimensionError
from qsynth.momentsim import (
    GaussianState,
    InputSignal,
    dissipation_slack,
    propagate_moments,
    verify_dissipation_empirically,
    verify_hinf_objective,
)
from qsynth.qsde import canonical_ito
from qsynth.riccati import frequency_sweep_norm
from qsynth.synthesis import verify_hinf_objective_bound


def _loop(result):
    cl = result.closed_loop
    return cl, bounded_real_supply(cl.Ctil, np.zeros((cl.Ctil.shape[0], cl.Btil.shape[1])), result.g)


def test_scalar_decay():
    u = InputSignal.constant(np.zeros(2), 3.0)
    tr = propagate_moments(-np.eye(2), np.zeros((2, 2)), np.zeros((2, 0)), np.zeros((2, 2)),
                           GaussianState([1.0, 0.0], np.zeros((2, 2))), u, dt=0.01)
    assert np.max(np.abs(tr.means[:, 0] - np.exp(-tr.times))) <= 1e-8
    assert not tr.means[:, 1].any()


def test_decoupled_2d_with_input_and_noise():
    A = np.diag([-1.0, -3.0])
    B = np.eye(2)
    beta = np.array([0.5, -1.0])
    u = InputSignal.constant(beta, 4.0)
    s0 = GaussianState([1.0, 2.0], np.diag([0.2, 0.1]))
    tr = propagate_moments(A, B, np.zeros((2, 0)), canonical_ito(2), s0, u, dt=0.005)
    a = np.diag(A)
    t = tr.times[:, None]
    mean = s0.mean * np.exp(a * t) + beta / -a * (1 - np.exp(a * t))
    var = np.diag(s0.cov) * np.exp(2 * a * t) + 1.0 / (-2 * a) * (1 - np.exp(2 * a * t))
    assert np.max(np.abs(tr.means - mean)) <= 1e-8
    assert np.max(np.abs(np.diagonal(tr.covs, axis1=1, axis2=2) - var)) <= 1e-8


def test_steady_state_matches_lyapunov(cavity_result):
    cl = cavity_result.closed_loop
    n = cl.n
    F = cl.F_combined
    tr = propagate_moments(cl.Atil, cl.Btil, cl.Gtil, F, GaussianState.zero(n),
                           InputSignal.constant(np.zeros(cl.Btil.shape[1]), 20.0))
    BG = np.hstack([cl.Btil, cl.Gtil])
    P = matops.solve_lyapunov(cl.Atil.T, BG @ F.S @ BG.T)
    assert np.max(np.abs(tr.covs[-1] - P)) <= 1e-6


def test_covariance_psd_and_symmetric(cavity_result):
    cl = cavity_result.closed_loop
    tr = propagate_moments(cl.Atil, cl.Btil, cl.Gtil, cl.F_combined, GaussianState.zero(cl.n),
                           InputSignal.constant(np.zeros(2), 10.0), dt=0.01)
    assert len(tr.times) >= 1000
    for S in tr.covs:
        assert np.max(np.abs(S - S.T)) <= 1e-12
        assert np.linalg.eigvalsh(S)[0] >= -1e-12
    assert np.all(np.diff(tr.integral_xx()) >= 0)


def test_energy_balance(cavity_result):
    cl, supply = _loop(cavity_result)
    X = cavity_result.certificate.X
    u = InputSignal.constant(np.array([1.0, -0.5]), 2.0)
    s0 = GaussianState(np.ones(cl.n), np.eye(cl.n))
    tr = propagate_moments(cl.Atil, cl.Btil, cl.Gtil, cl.F_combined, s0, u, dt=1e-3)
    V = tr.expected_quadratic(X)
    dV = np.gradient(V, tr.times)[1:-1]
    lam = compute_lambda0(X, cl.Btil, cl.Gtil, cl.F_combined)
    beta = np.array([1.0, -0.5])
    sm = tr.second_moments()[1:-1]
    rhs = (np.einsum("ij,tji->t", X @ cl.Atil + cl.Atil.T @ X, sm)
           + 2 * tr.means[1:-1] @ X @ cl.Btil @ beta + lam)
    assert np.max(np.abs(dV - rhs)) <= 1e-5


def test_empirical_dissipation(cavity_result):
    cl, supply = _loop(cavity_result)
    X = cavity_result.X_riccati_cl
    lam = compute_lambda0(X, cl.Btil, cl.Gtil, cl.F_combined)
    u = InputSignal.step(np.ones(2), 1.0, 10.0)
    tr = propagate_moments(cl.Atil, cl.Btil, cl.Gtil, cl.F_combined, GaussianState.zero(cl.n), u)
    assert verify_dissipation_empirically(tr, X, supply, lam) >= -1e-6
    s0 = dissipation_slack(tr, X, supply, lam)
    s1 = dissipation_slack(tr, X, supply, lam + 1.0)
    assert np.allclose(s1 - s0, tr.times)


def test_negated_supply_fails(cavity_result):
    cl, supply = _loop(cavity_result)
    X = cavity_result.certificate.X
    lam = cavity_result.certificate.lambda0
    u = InputSignal.constant(10 * np.ones(2), 5.0)
    tr = propagate_moments(cl.Atil, cl.Btil, cl.Gtil, cl.F_combined, GaussianState.zero(cl.n), u)
    assert verify_dissipation_empirically(tr, X, supply.negated(), lam) < 0


def test_hinf_objective_holds(cavity_result):
    cl, _ = _loop(cavity_result)
    b = verify_hinf_objective_bound(cavity_result)
    u = InputSignal.square_wave(np.ones(2), 2 * np.pi, 50.0)
    s0 = GaussianState.zero(cl.n)
    tr = propagate_moments(cl.Atil, cl.Btil, cl.Gtil, cl.F_combined, s0, u, C=cl.Ctil)
    assert verify_hinf_objective(tr, 0.1, b.epsilon, b.mu1(s0.second_moment()), b.mu2)


def test_hinf_objective_noise_only(cavity_result):
    cl, _ = _loop(cavity_result)
    b = verify_hinf_objective_bound(cavity_result)
    s0 = GaussianState(np.ones(cl.n), 0.5 * np.eye(cl.n))
    tr = propagate_moments(cl.Atil, cl.Btil, cl.Gtil, cl.F_combined, s0,
                           InputSignal.constant(np.zeros(2), 10.0), C=cl.Ctil)
    assert verify_hinf_objective(tr, 0.1, b.epsilon, b.mu1(s0.second_moment()), b.mu2)


def test_hinf_objective_fails_at_resonance():
    A, B, C = np.array([[-1.0]]), np.array([[1.0]]), np.array([[1.0]])
    omegas = np.linspace(0.0, 5.0, 501)
    gains = [frequency_sweep_norm(A, B, C, omegas=[w]) for w in omegas]
    peak = max(gains)
    assert omegas[int(np.argmax(gains))] == 0.0
    assert not strict_bounded_real_check(A, B, C, [[0.0]], 0.5)
    # the peak sits at zero frequency, so a constant drive is resonant
    tr = propagate_moments(A, B, np.zeros((1, 0)), [[1.0]], GaussianState.zero(1),
                           InputSignal.constant([1.0], 20.0), C=C)
    assert peak == pytest.approx(1.0)
    assert not verify_hinf_objective(tr, 0.5, 0.0, 0.0, 1.0)


def test_csv_export(cavity_result, tmp_path):
    cl, _ = _loop(cavity_result)
    tr = propagate_moments(cl.Atil, cl.Btil, cl.Gtil, cl.F_combined, GaussianState.zero(cl.n),
                           InputSignal.constant(np.zeros(2), 0.1), dt=0.01, C=cl.Ctil)
    text = tr.to_csv(tmp_path / "t.csv")
    lines = text.splitlines()
    assert lines[0].startswith("t,mean_0") and lines[0].endswith("int_zz")
    assert len(lines) == len(tr.times) + 1
    assert (tmp_path / "t.csv").read_text() == text


def test_input_validation():
    with pytest.raises(ValueError):
        InputSignal([0.5], [[1.0]], 1.0)
    with pytest.raises(DimensionError):
        GaussianState([0.0, 0.0], -np.eye(2))
    with pytest.raises(DimensionError):
        propagate_moments(-np.eye(2), np.eye(2), np.zeros((2, 0)), canonical_ito(2), GaussianState.zero(2),
                          InputSignal.constant([1.0], 1.0))
    with pytest.warns(UserWarning):
        propagate_moments(-100 * np.eye(2), np.zeros((2, 0)), np.zeros((2, 0)), np.zeros((0, 0)),
                          GaussianState.zero(2), InputSignal([0.0], np.zeros((1, 0)), 0.1), dt=0.01)
