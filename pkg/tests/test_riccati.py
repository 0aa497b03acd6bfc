import numpy as np
import pytest
from hypothesis import given, strategies as st

from greenbundles import catalog
from greenbundles.errors import InsufficientWindowError, PoleError
from greenbundles.flow import PhasePoint, integrate_jacobi_frame, integrate_orbit, vertical_start
from greenbundles.lagrangian import Box, certify_bounded
from greenbundles.riccati import (
    R_FLOOR,
    RiccatiBound,
    comparison_w,
    comparison_w_dot,
    orbit_region,
    riccati_bound,
    riccati_bound_from_constants,
    solve_riccati,
    verify_bound,
)


def vertical_solution(entry, start, T, t0=0.0):
    ham = entry.hamiltonian
    orb = integrate_orbit(ham, start, (t0, t0 + T))
    fr = integrate_jacobi_frame(orb, vertical_start(entry.dim), t_start=t0)
    return solve_riccati(fr)


def test_pendulum_slope_is_coth(pendulum):
    sol = vertical_solution(pendulum, PhasePoint([0.0], [0.0]), 10.0)
    for t in (0.5, 1.0, 4.0, 9.5):
        assert sol.S(t)[0, 0] == pytest.approx(1.0 / np.tanh(t), rel=1e-9)
    assert sol.blowup_times == [0.0]
    assert np.isnan(sol.S(0.0)).all()


def test_free_particle_slope(free1):
    sol = vertical_solution(free1, PhasePoint([0.0], [1.0]), 10.0)
    for t in (0.5, 3.0, 10.0):
        assert sol.S(t)[0, 0] == pytest.approx(1.0 / t, rel=1e-9)


def test_harmonic_cot_and_blowups(harmonic):
    sol = vertical_solution(harmonic, PhasePoint([0.0], [0.0]), 10.0)
    assert np.allclose(sol.blowup_times, [0.0, np.pi, 2 * np.pi, 3 * np.pi], atol=1e-10)
    for t in (1.0, 2.0, 4.0, 8.0):
        assert sol.S(t)[0, 0] == pytest.approx(1.0 / np.tan(t), rel=1e-7)
    assert sol.interval_of(4.0) == pytest.approx((np.pi, 2 * np.pi))


@pytest.mark.parametrize("name", ["pendulum", "mathieu", "rotor_pendulum", "double_well"])
def test_residual_and_symmetry_random_lagrangian_frames(name, rng):
    e = catalog.get(name)
    d = e.dim
    start = PhasePoint(e.orbit_start.x + 0.2, e.orbit_start.p - 0.1)
    orb = integrate_orbit(e.hamiltonian, start, 6.0)
    for _ in range(3):
        A = rng.normal(size=(d, d))
        S0 = A + A.T
        fr = integrate_jacobi_frame(orb, (np.eye(d), S0))
        sol = solve_riccati(fr)
        for t in np.linspace(0.3, 5.7, 7):
            if sol.interval_of(t) is None or np.isnan(sol.norm(t)):
                continue
            if min(abs(t - b) for b in sol.blowup_times or [1e9]) < 0.05:
                continue
            assert sol.residual(t) < 1e-6
            assert sol.symmetry_defect(t) < 1e-8


def test_comparison_function():
    assert comparison_w(1.0, 0.0, 40.0) == pytest.approx(1.0)
    assert comparison_w(1.0, 0.0, -0.7) == pytest.approx(-comparison_w(1.0, 0.0, 0.7))
    assert comparison_w(2.0, 0.0, 1.0) == pytest.approx(2.0746, abs=1e-4)
    with pytest.raises(PoleError):
        comparison_w(2.0, 1.0, 0.5)
    with pytest.raises(ZeroDivisionError):
        comparison_w_dot(1.0, 0.0, 0.0)


@given(st.floats(0.1, 3.0), st.floats(-2.0, 2.0), st.floats(-3.0, 3.0))
def test_comparison_identity(R, d, t):
    if abs(R * t - d) < 1e-2:
        return
    w = comparison_w(R, d, t)
    assert comparison_w_dot(R, d, t) + w * w - R * R == pytest.approx(0.0, abs=1e-12 * max(1.0, w * w))


def test_pendulum_bound_is_coth_one(pendulum):
    cert = certify_bounded(pendulum.hamiltonian, Box([(-np.pi, np.pi)], [(-2, 2)]), 9)
    b = riccati_bound(cert)
    assert b.C_norm == pytest.approx(0.0, abs=1e-9)
    assert b.M == pytest.approx(1.0) and b.R == pytest.approx(1.0, abs=1e-6)
    assert b.A_raw == pytest.approx(1.0 / np.tanh(1.0), rel=1e-6)
    assert b.A == pytest.approx(1.1 * b.A_raw)


def test_free_particle_bound_floors_R(free1):
    cert = certify_bounded(free1.hamiltonian, Box([(0, 1)], [(-1, 1)]), 5)
    b = riccati_bound(cert)
    assert b.R == R_FLOOR
    assert b.A_raw == pytest.approx(1.0, rel=1e-9)


def test_bound_monotone_in_constants():
    base = riccati_bound_from_constants(2.0, 0.5)
    assert riccati_bound_from_constants(3.0, 0.5).A >= base.A
    assert riccati_bound_from_constants(2.0, 0.4).A >= base.A


@given(st.floats(0.5, 5.0), st.floats(0.5, 5.0), st.floats(0.1, 0.9), st.floats(0.1, 0.9))
def test_bound_monotone_property(b1, db, b2, f):
    a = riccati_bound_from_constants(b1, b2).A
    assert riccati_bound_from_constants(b1 + db, b2).A >= a - 1e-12
    assert riccati_bound_from_constants(b1, b2 * f).A >= a - 1e-12


def test_verify_bound_passes_and_fails(pendulum, free1, harmonic):
    sol = vertical_solution(pendulum, PhasePoint([0.0], [0.0]), 10.0)
    cert = certify_bounded(pendulum.hamiltonian, orbit_region(sol.frame.orbit), 5)
    rep = verify_bound(sol, riccati_bound(cert))
    assert rep.passed and rep.windows[0]["max_norm"] == pytest.approx(1.0 / np.tanh(1.005), rel=1e-6)
    sol = vertical_solution(free1, PhasePoint([0.0], [1.0]), 10.0)
    cert = certify_bounded(free1.hamiltonian, orbit_region(sol.frame.orbit), 5)
    assert verify_bound(sol, riccati_bound(cert)).passed
    # constants certified for the free particle do not cover the pendulum
    sol = vertical_solution(pendulum, PhasePoint([0.0], [0.0]), 10.0)
    rep = verify_bound(sol, riccati_bound(cert))
    assert not rep.passed and rep.windows[0]["argmax_t"] == pytest.approx(1.0, abs=0.01)


def test_harmonic_bound_per_interval(harmonic):
    sol = vertical_solution(harmonic, PhasePoint([0.0], [0.0]), 10.0)
    cert = certify_bounded(harmonic.hamiltonian, orbit_region(sol.frame.orbit), 5)
    rep = verify_bound(sol, riccati_bound(cert))
    assert rep.passed and rep.extended_per_interval
    assert all(w["max_norm"] <= 1.0 / np.tan(1.0) + 1e-6 for w in rep.windows)


def test_short_window_rejected(pendulum):
    sol = vertical_solution(pendulum, PhasePoint([0.0], [0.0]), 1.5)
    with pytest.raises(InsufficientWindowError):
        verify_bound(sol, riccati_bound_from_constants(2.0, 1.0))


def test_bound_report_serializes(pendulum):
    b = riccati_bound_from_constants(2.0, 1.0)
    assert isinstance(b, RiccatiBound) and set(b.to_dict()) >= {"A", "A_raw", "M", "R"}
