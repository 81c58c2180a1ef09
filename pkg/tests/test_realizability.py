import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsynth import matops
from qsynth.errors import ConventionError
from qsynth.momentsim import GaussianState, InputSignal, propagate_moments
from qsynth.qsde import CommutationMatrix, LinearQsde, canonical_ito, preserves_commutation
from qsynth.realizability import (
    OscillatorParams,
    augment_degenerate,
    build_oscillator,
    check_physical_realizability,
    extract_hamiltonian_coupling,
)

I2 = np.eye(2)
Z2 = np.zeros((2, 2))


def cavity_controller(b11=-np.sqrt(0.2), b12=-np.sqrt(1.8), bk=-np.sqrt(0.2)):
    B = np.hstack([b11 * I2, b12 * I2, bk * I2])
    D = np.hstack([I2, Z2, Z2])
    return LinearQsde(-1.1 * I2, B, -b11 * I2, D, CommutationMatrix.canonical(2), canonical_ito(6))


def test_plant_measurement_port_is_realizable(cavity):
    rep = check_physical_realizability(cavity.as_qsde().with_(check_conventions=True))
    assert rep.realizable
    assert rep.residual_A <= 1e-14 and rep.residual_B <= 1e-14


def test_reference_cavity_controller_is_realizable():
    rep = check_physical_realizability(cavity_controller())
    assert rep.realizable
    assert rep.residual_A <= 1e-9 and rep.residual_B <= 1e-9
    assert np.allclose(rep.params.R, 0, atol=1e-10)


def test_zero_system_is_realizable():
    s = LinearQsde(Z2, Z2, Z2, I2, CommutationMatrix.canonical(2))
    rep = check_physical_realizability(s)
    assert rep.realizable
    assert not rep.params.R.any() and not rep.params.Lam.any()


def test_d_must_be_selector():
    s = LinearQsde(Z2, Z2, Z2, 2 * I2, CommutationMatrix.canonical(2))
    rep = check_physical_realizability(s)
    assert not rep.d_conforms and not rep.realizable


def test_detuned_cavity_hamiltonian():
    delta, gamma = 0.7, 1.3
    A = delta * matops.J - 0.5 * gamma * I2
    B = -np.sqrt(gamma) * I2
    s = LinearQsde(A, B, np.sqrt(gamma) * I2, I2, CommutationMatrix.canonical(2))
    p = extract_hamiltonian_coupling(s)
    assert np.allclose(p.R, 0.5 * delta * I2)


def test_extraction_needs_canonical_theta():
    s = LinearQsde(Z2, Z2, Z2, I2, CommutationMatrix(Z2))
    with pytest.raises(ConventionError):
        extract_hamiltonian_coupling(s)


def test_single_coupling_builds_damped_cavity():
    kappa = 2.2
    s = build_oscillator(OscillatorParams(Z2, np.sqrt(kappa) / 2 * np.array([[1.0, 1j]])), 2)
    assert np.allclose(s.A, -kappa / 2 * I2)
    assert np.allclose(s.B, -np.sqrt(kappa) * I2)
    assert np.allclose(s.C, np.sqrt(kappa) * I2)


def test_zero_params_build_zero_system():
    s = build_oscillator(OscillatorParams(Z2, np.zeros((1, 2))), 2)
    assert not s.A.any() and not s.B.any() and not s.C.any()
    assert np.array_equal(s.D, I2)


def test_round_trip_cavity_controller():
    s = cavity_controller()
    p = extract_hamiltonian_coupling(s)
    back = build_oscillator(p, 2)
    for k in "ABCD":
        assert np.allclose(getattr(back, k), getattr(s, k), atol=1e-10)


def _random_params(rng, n_pairs, w_pairs):
    n = 2 * n_pairs
    R = rng.standard_normal((n, n))
    L = rng.standard_normal((w_pairs, n)) + 1j * rng.standard_normal((w_pairs, n))
    return OscillatorParams(R + R.T, L)


params_strategy = st.tuples(st.integers(1, 3), st.integers(1, 3), st.integers(0, 2**31 - 1))


@settings(max_examples=100, deadline=None)
@given(params_strategy)
def test_build_then_extract_is_identity(args):
    n_pairs, w_pairs, seed = args
    rng = np.random.default_rng(seed)
    p = _random_params(rng, n_pairs, w_pairs)
    n_y = 2 * rng.integers(0, w_pairs + 1)
    s = build_oscillator(p, int(n_y))
    rep = check_physical_realizability(s)
    assert rep.realizable and rep.residual_A <= 1e-10 * (1 + np.linalg.norm(s.B) ** 2)
    q = extract_hamiltonian_coupling(s)
    assert np.max(np.abs(q.R - p.R)) <= 1e-10 * (1 + np.abs(p.R).max())
    assert np.max(np.abs(q.Lam - p.Lam)) <= 1e-10 * (1 + np.abs(p.Lam).max())


@settings(max_examples=100, deadline=None)
@given(params_strategy)
def test_extract_then_build_is_identity(args):
    n_pairs, w_pairs, seed = args
    rng = np.random.default_rng(seed)
    s = build_oscillator(_random_params(rng, n_pairs, w_pairs), 2)
    back = build_oscillator(extract_hamiltonian_coupling(s), 2)
    for k in "ABCD":
        assert np.max(np.abs(getattr(back, k) - getattr(s, k))) <= 1e-10 * (1 + np.abs(getattr(s, k)).max())


@settings(max_examples=30, deadline=None)
@given(params_strategy)
def test_perturbing_c_only_shows_in_residual_b(args):
    n_pairs, w_pairs, seed = args
    rng = np.random.default_rng(seed)
    s = build_oscillator(_random_params(rng, n_pairs, w_pairs), 2)
    bad = s.with_(C=s.C + 0.1 * rng.standard_normal(s.C.shape))
    rep = check_physical_realizability(bad)
    assert rep.residual_A <= 1e-10 * (1 + np.linalg.norm(s.B) ** 2)
    assert rep.residual_B > 1e-3 and not rep.realizable


def classical_controller_system():
    # classical controller with noise columns [v_K (u window), extra v_K, y]
    A = np.diag([-1.1, -1.3])
    BK = np.array([[-np.sqrt(0.2), 0.0], [0.0, 0.0]])
    swap = np.array([[0.0, 1.0], [1.0, 0.0]])
    B = np.hstack([Z2, BK @ swap, BK])
    D = np.hstack([I2, Z2, Z2])
    return LinearQsde(A, B, -np.sqrt(0.2) * I2, D, CommutationMatrix(Z2), canonical_ito(6))


def _eq_aux_residual(aug):
    s = aug.sys
    T = s.theta.matrix
    return np.linalg.norm(s.A @ T + T @ s.A.T + s.B @ s.ito.Tim @ s.B.T, 2)


def test_classical_system_augmentation():
    s = classical_controller_system()
    assert preserves_commutation(s)
    aug = augment_degenerate(s)
    assert aug.sys.n == 4
    assert _eq_aux_residual(aug) <= 1e-10
    P = aug.P
    assert np.array_equal(P @ aug.sys.theta.matrix @ P.T, matops.diag_j(2))
    proj = aug.project()
    for k in "ABCD":
        assert np.allclose(getattr(proj, k), getattr(s, k))


def test_augmented_system_is_an_oscillator():
    aug = augment_degenerate(classical_controller_system())
    rep = check_physical_realizability(aug.canonical_system())
    assert rep.realizable and rep.params is not None


def _degenerate_mixed_system(seed):
    from qsynth.realization import realize
    from qsynth.synthesis import ControllerTriple

    rng = np.random.default_rng(seed)
    A = rng.standard_normal((4, 4)) - 3 * np.eye(4)
    triple = ControllerTriple(A, rng.standard_normal((4, 2)), rng.standard_normal((2, 4)))
    q = realize(triple, "mixed:2").as_qsde()
    perm, theta = q.theta.to_degenerate_form()
    return LinearQsde(q.A[np.ix_(perm, perm)], q.B[perm], q.C[:, perm], q.D, theta, q.ito,
                      q.output_channel_offset)


@pytest.mark.parametrize("seed", range(5))
def test_mixed_augmentation_keeps_quantum_block(seed):
    s = _degenerate_mixed_system(seed)
    assert s.theta.kind == "degenerate" and s.theta.nprime == 2
    assert preserves_commutation(s)
    aug = augment_degenerate(s)
    assert aug.sys.n == 6
    assert np.array_equal(aug.sys.theta.matrix[2:4, 2:4], matops.J)
    assert _eq_aux_residual(aug) <= 1e-10
    assert preserves_commutation(aug.sys)


def test_augment_requires_degenerate():
    s = LinearQsde(Z2, Z2, Z2, I2, CommutationMatrix.canonical(2))
    with pytest.raises(ConventionError):
        augment_degenerate(s)


def test_augmentation_preserves_original_moments():
    s = classical_controller_system()
    aug = augment_degenerate(s)
    u = InputSignal.step(np.ones(6), 0.5, 3.0)
    st0 = GaussianState(np.array([1.0, -1.0]), 0.5 * I2)
    t0 = propagate_moments(s.A, s.B, np.zeros((2, 0)), s.ito, st0, u, dt=0.01)
    st1 = GaussianState(np.array([1.0, -1.0, 0.3, 0.2]), matops.block_diag(0.5 * I2, I2))
    t1 = propagate_moments(aug.sys.A, aug.sys.B, np.zeros((4, 0)), aug.sys.ito, st1, u, dt=0.01)
    assert np.max(np.abs(t1.means[:, :2] - t0.means)) <= 1e-8
    assert np.max(np.abs(t1.covs[:, :2, :2] - t0.covs)) <= 1e-8
