import numpy as np
import pytest

from greenbundles import catalog
from greenbundles.conjugate import find_conjugate_points, green_bundles
from greenbundles.errors import ConfigurationError, UnknownSystemError
from greenbundles.flow import integrate_orbit, monodromy

ALL = ["free_particle", "free_particle(2)", "harmonic", "pendulum", "mathieu", "mathieu(0.2, 3)",
       "double_well", "rotor_pendulum"]


@pytest.mark.parametrize("name", ALL)
def test_known_facts(name):
    e = catalog.get(name)
    assert all(e.check_facts(1e-10).values())
    s = e.summary()
    assert s["dim"] == e.dim and s["framework"] in ("autonomous", "time_dependent")


@pytest.mark.parametrize("name", ALL)
def test_reference_orbit_integrates(name):
    e = catalog.get(name)
    orb = integrate_orbit(e.analysis_hamiltonian(), e.orbit_start, 5.0)
    assert orb.hamilton_residual([1.0, 2.5, 4.0]) < 1e-6


def test_harmonic_facts_match_numerics():
    e = catalog.get("harmonic")
    orb = integrate_orbit(e.hamiltonian, e.orbit_start, 10 * np.pi + 0.5)
    got = [t for t, _ in find_conjugate_points(orb).conjugate_times]
    assert np.allclose(got, e.known_facts["conjugate_times"].value, atol=1e-6)


def test_pendulum_facts_match_numerics():
    e = catalog.get("pendulum")
    g = green_bundles(e.analysis_hamiltonian(), e.orbit_start, 10.0)
    assert g.S_limit[0, 0] == pytest.approx(e.known_facts["S_limit"].value, abs=1e-8)
    assert g.U_limit[0, 0] == pytest.approx(e.known_facts["U_limit"].value, abs=1e-8)


def test_mathieu_monodromy_is_hyperbolic():
    e = catalog.get("mathieu")
    M = monodromy(e.hamiltonian, e.orbit_start, e.known_facts["forcing_period"].value)
    w = np.sort(np.abs(np.linalg.eigvals(M)))
    assert w[0] * w[1] == pytest.approx(1.0, rel=1e-8) and w[1] > 1.0


def test_lookup_errors():
    assert catalog.names() == sorted(catalog.names())
    with pytest.raises(UnknownSystemError):
        catalog.get("nosuch")
    with pytest.raises(ConfigurationError):
        catalog.get("mathieu(a, b)")
    with pytest.raises(ConfigurationError):
        catalog.get("pendulum(1, 2, 3)")
    with pytest.raises(ConfigurationError):
        catalog.get("free_particle(0)")
    with pytest.raises(ConfigurationError):
        catalog.get("mathieu(0.1, -1)")
