import numpy as np
import pytest
from hypothesis import given, strategies as st

from greenbundles import catalog
from greenbundles.errors import ConfigurationError, EscapeError, NotPeriodicError
from greenbundles.flow import (
    PhasePoint,
    TangentSplitting,
    canonical_J,
    horizontal_start,
    integrate_jacobi_frame,
    integrate_orbit,
    monodromy,
    omega,
    suspend,
    symplectic_defect,
    vertical_frame,
    vertical_start,
    wronskian,
)
from greenbundles.lagrangian import CallablePotential, ConfigSpace, mechanical_pair


def test_free_particle_wraps(free1):
    orb = integrate_orbit(free1.hamiltonian, PhasePoint([0.0], [1.0]), 2 * np.pi)
    end = orb.point(2 * np.pi)
    assert min(end.x[0], 2 * np.pi - end.x[0]) < 1e-8
    assert end.p[0] == pytest.approx(1.0)
    assert orb.energy_drift < 1e-12


def test_equilibrium_orbit_is_constant(pendulum):
    orb = integrate_orbit(pendulum.hamiltonian, PhasePoint([0.0], [0.0]), 10.0)
    x, p = orb.state(7.3)
    assert abs(x[0]) < 1e-14 and abs(p[0]) < 1e-14


def test_harmonic_quarter_turn(harmonic):
    orb = integrate_orbit(harmonic.hamiltonian, PhasePoint([1.0], [0.0]), np.pi / 2)
    x, p = orb.state(np.pi / 2)
    assert abs(x[0]) < 1e-9 and abs(p[0] + 1.0) < 1e-9
    ts = np.linspace(0, np.pi / 2, 7)
    assert orb.hamilton_residual(ts) < 1e-8
    assert orb.energy_drift < 1e-9


def test_backward_and_two_sided_span(harmonic):
    orb = integrate_orbit(harmonic.hamiltonian, PhasePoint([1.0], [0.0]), (-1.0, 2.0))
    for t in (-1.0, -0.3, 0.0, 1.7):
        x, p = orb.state(t)
        assert np.allclose([x[0], p[0]], [np.cos(t), -np.sin(t)], atol=1e-9)
    with pytest.raises(ConfigurationError):
        integrate_orbit(harmonic.hamiltonian, PhasePoint([1.0], [0.0]), (1.0, 2.0))


def test_flow_property(pendulum, rng):
    ham = pendulum.hamiltonian
    start = PhasePoint([0.4], [0.9])
    full = integrate_orbit(ham, start, 6.0)
    a = 2.5
    first = integrate_orbit(ham, start, a)
    second = integrate_orbit(ham, first.lifted_point(a), 6.0 - a)
    assert np.allclose(np.concatenate(second.state(6.0)), np.concatenate(full.state(6.0)), atol=1e-8)


def test_escape_error_reports_last_good_time():
    pot = CallablePotential(lambda x, t: -x[0] ** 4, lambda x, t: -4 * x ** 3,
                            lambda x, t: -12 * np.diag(x ** 2))
    _, ham = mechanical_pair(ConfigSpace.line(1), pot)
    with pytest.raises(EscapeError) as info:
        integrate_orbit(ham, PhasePoint([1.0], [0.0]), 10.0)
    assert 0.0 < info.value.last_good_time < 10.0


def test_frames_closed_forms(free1, pendulum, harmonic):
    orb = integrate_orbit(free1.hamiltonian, PhasePoint([0.0], [1.0]), 5.0)
    fr = integrate_jacobi_frame(orb, vertical_start(1))
    Hm, Vm = fr.at(3.0)
    assert Hm[0, 0] == pytest.approx(3.0) and Vm[0, 0] == pytest.approx(1.0)
    orb = integrate_orbit(pendulum.hamiltonian, PhasePoint([0.0], [0.0]), 3.0)
    fr = integrate_jacobi_frame(orb, vertical_start(1))
    for t in (0.5, 2.0, 3.0):
        Hm, Vm = fr.at(t)
        assert Hm[0, 0] == pytest.approx(np.sinh(t), rel=1e-9)
        assert Vm[0, 0] == pytest.approx(np.cosh(t), rel=1e-9)
    assert fr.jacobi_residual(np.linspace(0.0, 3.0, 5)) < 1e-8
    assert vertical_frame(orb, 0.0, 2.0)[0, 0] == pytest.approx(3.6268604078, rel=1e-9)
    orb = integrate_orbit(harmonic.hamiltonian, PhasePoint([0.0], [0.0]), np.pi)
    assert abs(vertical_frame(orb, 0.0, np.pi)[0, 0]) < 1e-9


def test_vertical_frame_free_particle_torus2():
    e = catalog.get("free_particle(2)")
    orb = integrate_orbit(e.hamiltonian, e.orbit_start, 4.0)
    assert np.allclose(vertical_frame(orb, 0.0, 4.0), 4.0 * np.eye(2), atol=1e-9)


@pytest.mark.parametrize("name", ["pendulum", "mathieu", "rotor_pendulum", "double_well"])
def test_symplecticity_and_lagrangian_frames(name):
    e = catalog.get(name)
    ham = e.hamiltonian
    d = e.dim
    start = PhasePoint(e.orbit_start.x + 0.3, e.orbit_start.p + 0.2)
    orb = integrate_orbit(ham, start, 20.0)
    init = (np.hstack([np.eye(d), np.zeros((d, d))]), np.hstack([np.zeros((d, d)), np.eye(d)]))
    fr = integrate_jacobi_frame(orb, init, 1e-11)
    for t in (5.0, 12.0, 20.0):
        assert symplectic_defect(fr.stacked(t)) < 1e-7
    vf = integrate_jacobi_frame(orb, vertical_start(d))
    for t in (3.0, 11.0):
        assert vf.lagrangian_defect(t) < 1e-8


def test_wronskian_constant(pendulum):
    orb = integrate_orbit(pendulum.hamiltonian, PhasePoint([0.5], [0.3]), 8.0)
    f1 = integrate_jacobi_frame(orb, vertical_start(1))
    f2 = integrate_jacobi_frame(orb, horizontal_start(1))
    K0 = wronskian(*f1.at(0.0), *f2.at(0.0))
    for t in (2.0, 5.0, 8.0):
        K = wronskian(*f1.at(t), *f2.at(t))
        assert np.allclose(K, K0, atol=1e-8 * max(1.0, np.linalg.norm(f1.stacked(t)) * np.linalg.norm(f2.stacked(t))))


@given(st.lists(st.floats(-2, 2, allow_nan=False), min_size=4, max_size=4),
       st.lists(st.floats(-2, 2, allow_nan=False), min_size=4, max_size=4))
def test_omega_antisymmetric(a, b):
    a, b = np.array(a), np.array(b)
    assert omega(a, b) == pytest.approx(-omega(b, a))
    assert omega(a, b) == pytest.approx(a @ canonical_J(2) @ b, abs=1e-12)


def test_tangent_splitting_is_lagrangian():
    ts = TangentSplitting(PhasePoint([0.0, 1.0], [0.0, 0.0]))
    for B in (ts.horizontal, ts.vertical):
        for i in range(2):
            for j in range(2):
                assert omega(B[:, i], B[:, j]) == 0.0


def test_monodromy_examples(pendulum, harmonic, free1):
    P = monodromy(pendulum.hamiltonian, PhasePoint([0.0], [0.0]), 2 * np.pi)
    w = np.sort(np.abs(np.linalg.eigvals(P)))
    assert w[1] == pytest.approx(np.exp(2 * np.pi), rel=1e-7)
    assert w[0] == pytest.approx(np.exp(-2 * np.pi), rel=1e-5)
    P = monodromy(harmonic.hamiltonian, PhasePoint([0.0], [0.0]), 2 * np.pi)
    assert np.allclose(P, np.eye(2), atol=1e-8)
    P = monodromy(free1.hamiltonian, PhasePoint([0.0], [0.0]), 3.0)
    assert np.allclose(P, [[1, 3], [0, 1]], atol=1e-9)
    with pytest.raises(NotPeriodicError) as info:
        monodromy(harmonic.hamiltonian, PhasePoint([1.0], [0.0]), 1.0)
    assert info.value.to_dict()["gap"] > 0.1


def test_monodromy_rejects_non_multiple_of_forcing(pendulum):
    ham = suspend(pendulum.hamiltonian, 1.0)
    with pytest.raises(NotPeriodicError):
        monodromy(ham, PhasePoint([0.0], [0.0]), 2.5)
    assert monodromy(ham, PhasePoint([0.0], [0.0]), 2.0).shape == (2, 2)


def test_growth_of_Y_on_disconjugate_orbits(pendulum, free1):
    orb = integrate_orbit(pendulum.hamiltonian, PhasePoint([0.0], [0.0]), 5.0)
    assert vertical_frame(orb, 0.0, 5.0)[0, 0] > 10.0
    orb = integrate_orbit(free1.hamiltonian, PhasePoint([0.0], [1.0]), 11.0)
    assert vertical_frame(orb, 0.0, 11.0)[0, 0] > 10.0


def test_phase_point_reduction():
    sp = ConfigSpace.torus(1)
    pt = PhasePoint([7.0], [1.0], 2.0).reduced(sp)
    assert pt.x[0] == pytest.approx(7.0 - 2 * np.pi)
    assert pt.to_dict()["clock"] == 2.0
