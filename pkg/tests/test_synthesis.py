import numpy as np
import pytest

from conftest import random_stable
from qsynth import matops, plants
from qsynth.dissipativity import strict_bounded_real_check
from qsynth.errors import DimensionError, SynthesisFailure
from qsynth.realization import realize
from qsynth.riccati import hinf_norm
from qsynth.synthesis import (
    FAILURE_CODES,
    ControllerTriple,
    Plant,
    check_assumption_a1,
    check_assumption_a2,
    close_loop,
    feasibility_frontier,
    solve_riccati_X,
    solve_riccati_Y,
    synthesize,
    verify_hinf_objective_bound,
)

I2 = np.eye(2)


def _scalar_plant(**kw):
    base = dict(A=[[-1.0]], B0=np.zeros((1, 0)), B1=[[1.0]], B2=[[1.0]], C1=[[1.0]], D12=[[1.0]],
                C2=[[1.0]], D20=np.zeros((1, 0)), D21=[[1.0]])
    base.update(kw)
    return Plant(**base)


def test_a1_cavity_passes(cavity):
    a1 = check_assumption_a1(cavity)
    assert a1.ok and a1.first_failure() is None


def test_a1_e1_fails_without_control_feedthrough(cavity):
    a1 = check_assumption_a1(cavity.with_(D12=np.zeros((2, 2))))
    assert not a1.e1 and a1.first_failure() == "A1_E1"
    with pytest.raises(SynthesisFailure) as exc:
        synthesize(cavity.with_(D12=np.zeros((2, 2))), 0.1)
    assert exc.value.code == "A1_E1" and exc.value.stage == "assumption_a1"


def test_a1_row_pencil_fails_for_integrator():
    # integrator with a disturbance that reaches the measurement but not the state
    a1 = check_assumption_a1(_scalar_plant(A=[[0.0]], B1=[[0.0]]))
    assert a1.e1 and a1.e2 and a1.pencil_12
    assert not a1.pencil_21 and a1.first_failure() == "A1_PENCIL_21"


def test_a1_column_pencil_fails_for_integrator():
    a1 = check_assumption_a1(_scalar_plant(A=[[0.0]], B2=[[0.0]]))
    assert not a1.pencil_12 and a1.first_failure() == "A1_PENCIL_12"


def test_riccati_cavity_family(cavity, cavity_result):
    assert np.allclose(cavity_result.X, 0, atol=1e-12)
    assert np.allclose(cavity_result.Y, 0, atol=1e-12)
    assert solve_riccati_X(cavity, 0.1).stabilizing


def test_riccati_uncertain_cavity(uncertain_result):
    assert np.allclose(uncertain_result.X, 0.1733 * I2, atol=1e-3)
    assert np.allclose(uncertain_result.Y, 0.0022 * I2, atol=1e-4)


def test_riccati_measured_cavity(measured_cavity):
    assert np.allclose(solve_riccati_X(measured_cavity, 0.134).X, 0, atol=1e-12)
    assert np.allclose(solve_riccati_Y(measured_cavity, 0.134).X, np.diag([0, 0.121]), atol=1e-3)


def test_a2_flags(cavity, uncertain_cavity, uncertain_result):
    a2 = check_assumption_a2(cavity, 0.1, np.zeros((2, 2)), np.zeros((2, 2)))
    assert a2.ok and a2.rho == 0
    a2 = check_assumption_a2(uncertain_cavity, 0.1, uncertain_result.X, uncertain_result.Y)
    assert a2.ok and a2.rho == pytest.approx(0.1733 * 0.0022, rel=2e-2)
    a2 = check_assumption_a2(cavity, 0.1, 2 * I2, 2 * I2)
    assert not a2.spectral_radius_ok and a2.rho == pytest.approx(4.0)


def test_controller_triples(cavity_result, uncertain_result, measured_cavity):
    t = cavity_result.triple
    assert np.allclose(t.A_K, -1.1 * I2, atol=1e-3)
    assert np.allclose(t.B_K, -0.447 * I2, atol=1e-3)
    assert np.allclose(t.C_K, -0.447 * I2, atol=1e-3)
    t = uncertain_result.triple
    assert np.allclose(t.A_K, -1.0997 * I2, atol=1e-3)
    assert np.allclose(t.B_K, -0.4464 * I2, atol=1e-3)
    assert np.allclose(t.C_K, -0.4464 * I2, atol=1e-3)
    t = synthesize(measured_cavity, 0.134).triple
    assert np.allclose(t.A_K, np.diag([-1.1, -1.3]), atol=1e-3)
    assert np.allclose(t.B_K, [[-0.447], [0.0]], atol=1e-3)
    assert np.allclose(t.C_K, -0.447 * I2, atol=1e-3)


@pytest.mark.parametrize("which", ["cavity", "uncertain_cavity", "measured_cavity", "amplifier_cavity"])
def test_controller_formula_regression(which, request):
    plant = request.getfixturevalue(which)
    g = 0.134 if which == "measured_cavity" else 0.1
    res = synthesize(plant, g)
    X, Y, t = res.X, res.Y, res.triple
    C_K = -np.linalg.inv(plant.E1) @ (g**2 * plant.B2.T @ X + plant.D12.T @ plant.C1)
    A_K = plant.A + plant.B2 @ C_K - t.B_K @ plant.C2 + (plant.B1 - t.B_K @ plant.D21) @ plant.B1.T @ X
    assert np.array_equal(C_K, t.C_K)
    assert np.array_equal(A_K, t.A_K)
    lhs = (np.eye(plant.n) - Y @ X) @ t.B_K @ plant.E2
    assert np.allclose(lhs, Y @ plant.C2.T + plant.B1 @ plant.D21.T, atol=1e-12)


def test_amplifier_cavity_triple(amplifier_cavity):
    res = synthesize(amplifier_cavity, 0.1)
    assert np.allclose(res.X, 0, atol=1e-12) and np.allclose(res.Y, 0, atol=1e-12)
    s = np.sqrt(0.2)
    expected = np.block([[-1.1 * I2, -s * I2], [s * I2, -0.25 * I2]])
    assert np.allclose(res.triple.A_K, expected, atol=1e-4)


def test_g_too_small():
    with pytest.raises(SynthesisFailure) as exc:
        synthesize(plants.measured_cavity_plant(), 0.1)
    assert exc.value.code == "G_TOO_SMALL"
    assert exc.value.stage.startswith("riccati")
    assert exc.value.code in FAILURE_CODES


def test_g_must_be_positive(cavity):
    with pytest.raises(ValueError):
        synthesize(cavity, 0.0)


def test_feasibility_frontier(measured_cavity):
    g = feasibility_frontier(measured_cavity, 0.1, 0.2)
    assert g == pytest.approx(0.134, abs=1e-3)
    synthesize(measured_cavity, g)


def _closed_loop_norm(cl):
    return hinf_norm(cl.Atil, cl.Btil, cl.Ctil)


FIXTURE_OF = {"cavity": "cavity", "uncertain_cavity": "cavity_uncertain",
              "measured_cavity": "cavity_measured", "amplifier_cavity": "amplifier_cavity"}


@pytest.mark.parametrize("which", list(FIXTURE_OF))
def test_sufficiency_on_fixtures(which, request):
    plant = request.getfixturevalue(which)
    spec = plants.FIXTURES[FIXTURE_OF[which]]
    res = synthesize(plant, spec["g"])
    cl = res.closed_loop
    D0 = np.zeros((cl.Ctil.shape[0], cl.Btil.shape[1]))
    assert strict_bounded_real_check(cl.Atil, cl.Btil, cl.Ctil, D0, spec["g"])
    assert _closed_loop_norm(cl) < spec["g"]


def _random_plant(rng):
    n = 2
    return Plant(A=random_stable(rng, n, 0.3), B0=np.zeros((n, 0)), B1=rng.standard_normal((n, 2)),
                 B2=rng.standard_normal((n, 2)), C1=rng.standard_normal((2, n)), D12=I2,
                 C2=rng.standard_normal((2, n)), D20=np.zeros((2, 0)), D21=I2)


def test_sufficiency_on_random_plants():
    rng = np.random.default_rng(7)
    successes = 0
    while successes < 20:
        plant = _random_plant(rng)
        for g in (0.5, 1.0, 2.0, 5.0, 20.0):
            try:
                res = synthesize(plant, g)
            except SynthesisFailure:
                continue
            cl = res.closed_loop
            assert _closed_loop_norm(cl) < g
            assert matops.is_hurwitz(cl.Atil)
            successes += 1
            break


def test_necessity_spot_check(measured_cavity):
    g = 0.13
    with pytest.raises(SynthesisFailure):
        synthesize(measured_cavity, g)
    rng = np.random.default_rng(0)
    tried = 0
    while tried < 100:
        t = ControllerTriple(random_stable(rng, 2, 0.1), rng.standard_normal((2, 1)), rng.standard_normal((2, 2)))
        cl = close_loop(measured_cavity, t)
        if not matops.is_hurwitz(cl.Atil):
            continue
        tried += 1
        assert _closed_loop_norm(cl) >= g


def test_objective_bound(cavity):
    eps = [verify_hinf_objective_bound(synthesize(cavity, g)).epsilon for g in (0.1, 0.15, 0.2)]
    assert all(e > 0 for e in eps)
    assert eps[0] < eps[1] < eps[2]
    b = verify_hinf_objective_bound(synthesize(cavity, 0.1))
    assert b.mu2 == pytest.approx(synthesize(cavity, 0.1).certificate.lambda0)
    assert b.mu1(np.zeros((4, 4))) == 0


def test_close_loop_shapes(cavity, cavity_result):
    cl = cavity_result.closed_loop
    assert cl.Atil.shape == (4, 4) and cl.Ctil.shape == (2, 4)
    assert cl.Btil.shape == (4, 2) and cl.Gtil.shape == (4, 2)
    ctrl = realize(cavity_result.triple, "quantum")
    cl = close_loop(cavity, ctrl)
    assert cl.Gtil.shape[1] == 2 + ctrl.B_K1.shape[1]
    assert cl.F_combined.n_w == 2 + 2 + ctrl.B_K1.shape[1]
    assert np.all(np.linalg.eigvals(cl.Atil).real < 0)


def test_close_loop_zero():
    Z = np.zeros((2, 2))
    p = Plant(A=Z, B0=Z, B1=Z, B2=Z, C1=Z, D12=Z, C2=Z, D20=Z, D21=Z)
    cl = close_loop(p, ControllerTriple(Z, Z, Z))
    for M in (cl.Atil, cl.Btil, cl.Gtil, cl.Ctil, cl.Htil):
        assert not M.any()


def test_close_loop_dimension_mismatch(cavity):
    with pytest.raises(DimensionError):
        close_loop(cavity, ControllerTriple(-np.eye(2), np.zeros((2, 3)), np.zeros((2, 2))))


def test_plant_dimension_errors():
    with pytest.raises(DimensionError):
        _scalar_plant(B1=np.zeros((2, 1)))
    with pytest.raises(DimensionError):
        _scalar_plant(D12=np.zeros((2, 2)))
