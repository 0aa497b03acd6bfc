import json

import numpy as np
import pytest

from greenbundles import catalog
from greenbundles.conjugate import GreenBundles, green_bundles
from greenbundles.errors import (
    ConfigurationError,
    FitFailure,
    NoContractionError,
    SingularProjectionError,
)
from greenbundles.flow import PhasePoint, integrate_orbit, monodromy
from greenbundles.hyperbolicity import (
    SampledCocycle,
    build_transversal_action,
    decide_theorem_A,
    decide_theorem_C,
    exponential_fit,
    graph_transform_period_map,
    graph_transform_splitting,
    quasi_hyperbolicity_check,
    sacker_sell_dims,
)
from greenbundles.hyperbolicity.cocycle import largest_principal_angle
from greenbundles.hyperbolicity.theorems import _aitken_limit
from greenbundles.hyperbolicity.transversal import projection, transversal_basis
from greenbundles.reports import dumps

DIAG = [[2.0, 0.0], [0.0, 0.5]]
ROT = [[np.cos(1.0), -np.sin(1.0)], [np.sin(1.0), np.cos(1.0)]]
SHEAR = [[1.0, 1.0], [0.0, 1.0]]


# ---------------------------------------------------------------- cocycles

def test_diag_cocycle_is_quasi_hyperbolic():
    rep = quasi_hyperbolicity_check(SampledCocycle.constant(DIAG), horizon=50, threshold=1e3)
    assert rep.quasi_hyperbolic and rep.dims == {0: (1, 1)}
    assert sacker_sell_dims(rep, [(0, 0, 0)], minimal_sets=[[0]])
    assert rep.splitting.lam == pytest.approx(np.log(2), rel=1e-2)
    assert largest_principal_angle(rep.Es[0], [[0.0], [1.0]]) < 1e-12
    assert not rep.intersection_flagged and rep.growth == "exponential"
    rep2 = quasi_hyperbolicity_check(SampledCocycle.constant(DIAG), horizon=100, threshold=1e3)
    assert np.isfinite(rep.K33) and abs(rep2.K33 - rep.K33) <= 0.05 * rep.K33


def test_rotation_not_quasi_hyperbolic():
    rep = quasi_hyperbolicity_check(SampledCocycle.constant(ROT))
    assert rep.verdict == "not_quasi_hyperbolic" and rep.witness is not None
    assert rep.growth == "bounded" and rep.dims[0] == (2, 2)


def test_shear_flags_intersection():
    rep = quasi_hyperbolicity_check(SampledCocycle.constant(SHEAR))
    assert rep.intersection_flagged and rep.growth == "polynomial"
    assert not rep.quasi_hyperbolic
    assert np.allclose(np.abs(rep.witness["vector"]), [1.0, 0.0])


def test_cocycle_reports_are_json():
    rep = quasi_hyperbolicity_check(SampledCocycle.constant(DIAG), horizon=20)
    assert json.loads(dumps(rep))["verdict"] == "quasi_hyperbolic"


def test_cocycle_validation():
    with pytest.raises(ConfigurationError):
        SampledCocycle([])
    with pytest.raises(ConfigurationError):
        SampledCocycle([np.eye(2), np.eye(3)])
    with pytest.raises(ConfigurationError):
        SampledCocycle([np.eye(2)], boundary="reflect")
    with pytest.raises(ConfigurationError):
        quasi_hyperbolicity_check(SampledCocycle.constant(DIAG), threshold=0.5)


def test_clamped_cocycle_products():
    c = SampledCocycle([np.diag([2.0, 0.5]), np.diag([3.0, 1 / 3])], boundary="clamp")
    assert np.allclose(c.psi(0, 3), np.diag([18.0, 1 / 18]))
    assert np.allclose(c.psi(0, -2), np.diag([1 / 4, 4.0]))
    assert np.allclose(c.psi(1, 2) @ c.psi(3, -2), np.eye(2))


def test_sacker_sell_tables():
    dims = {"x": (1, 1), "a": (1, 1), "b": (1, 1)}
    assert sacker_sell_dims(dims, [("x", "a", "b")], fiber_dim=2)
    assert not sacker_sell_dims({"x": (0, 0), "a": (1, 1), "b": (1, 1)}, [("x", "a", "b")], fiber_dim=2)
    assert not sacker_sell_dims({"a": (1, 1), "b": (2, 0)}, [], fiber_dim=2, minimal_sets=[["a", "b"]])
    with pytest.raises(ConfigurationError):
        sacker_sell_dims(dims, [])


def test_exponential_fit():
    t = np.linspace(0, 5, 11)
    C, lam, resid = exponential_fit(t, 3.0 * np.exp(-0.7 * t))
    assert C == pytest.approx(3.0) and lam == pytest.approx(0.7) and resid < 1e-12
    with pytest.raises(FitFailure):
        exponential_fit(t, np.exp(t))


def test_aitken_on_geometric_sequence():
    assert _aitken_limit([1.0 + 0.5 ** k for k in range(5)]) == pytest.approx(1.0, abs=1e-14)
    assert _aitken_limit([2.0, 1.0]) == 1.0


# ------------------------------------------------------------- transversal

def test_transversal_basis_properties():
    e = catalog.get("rotor_pendulum")
    ham = e.hamiltonian
    x, p = np.array([0.3, 0.2]), np.array([1.0, 0.4])
    N = transversal_basis(ham, x, p)
    assert N.shape == (4, 2)
    assert np.allclose(N.T @ N, np.eye(2), atol=1e-12)
    H_x, H_p = ham.H_x(x, p, 0.0), ham.H_p(x, p, 0.0)
    assert np.allclose(np.concatenate([H_x, H_p]) @ N, 0, atol=1e-12)
    assert np.allclose(H_p @ N[:2], 0, atol=1e-12)
    assert np.array_equal(N, transversal_basis(ham, x, p))
    P = projection(ham, x, p)
    assert np.allclose(P @ ham.vector_field(x, p, 0.0), 0, atol=1e-12)
    assert np.allclose(P @ P, P)
    with pytest.raises(SingularProjectionError):
        transversal_basis(ham, np.zeros(2), np.zeros(2))


def test_transversal_action_requirements(free1):
    e = catalog.get("mathieu")
    with pytest.raises(ConfigurationError):
        build_transversal_action(integrate_orbit(e.hamiltonian, e.orbit_start, 1.0))
    act = build_transversal_action(integrate_orbit(free1.hamiltonian, PhasePoint([0.0], [1.0]), 1.0))
    assert act.fiber_dim == 0 and act.notice


def test_rotor_transversal_cocycle_quasi_hyperbolic():
    e = catalog.get("rotor_pendulum")
    orb = integrate_orbit(e.hamiltonian, e.orbit_start, 2 * np.pi)
    act = build_transversal_action(orb)
    # the orbit is 2 pi periodic; sample the reduced action once per unit
    Psi = act.psi(0.0, 2 * np.pi)
    assert sorted(np.abs(np.linalg.eigvals(Psi))) == pytest.approx([np.exp(-2 * np.pi), np.exp(2 * np.pi)], rel=1e-6)
    # the reduced unit-time map is the same at every base point
    Psi1 = act.psi(0.0, 1.0)
    assert np.allclose(act.psi(2.0, 1.0), Psi1, atol=1e-9)
    rep = quasi_hyperbolicity_check(SampledCocycle.constant(Psi1), horizon=10)
    assert rep.quasi_hyperbolic and rep.dims[0] == (1, 1)
    assert rep.splitting.lam == pytest.approx(1.0, rel=1e-2)
    # at horizon 40 the stable singular value (e^-40) is below roundoff
    rep = quasi_hyperbolicity_check(SampledCocycle.constant(Psi1), horizon=40)
    assert rep.splitting is None and rep.notes


# ---------------------------------------------------------- graph transforms

def test_period_map_graph_transform_mathieu():
    e = catalog.get("mathieu")
    P = monodromy(e.hamiltonian, e.orbit_start, np.pi)
    out = graph_transform_period_map(P)
    w, v = np.linalg.eig(P)
    slopes = v[1] / v[0]
    assert out["unstable"]["L"][0, 0] == pytest.approx(slopes[np.argmax(np.abs(w))], rel=1e-9)
    assert out["stable"]["L"][0, 0] == pytest.approx(slopes[np.argmin(np.abs(w))], rel=1e-9)
    assert out["unstable"]["fixed_point_move"] < 1e-12


def test_period_map_graph_transform_symmetric():
    P = np.array([[np.cosh(1.0), np.sinh(1.0)], [np.sinh(1.0), np.cosh(1.0)]])
    out = graph_transform_period_map(P)
    assert out["unstable"]["L"][0, 0] == pytest.approx(1.0)
    assert out["stable"]["L"][0, 0] == pytest.approx(-1.0)
    with pytest.raises(NoContractionError):
        graph_transform_period_map(np.array(ROT), max_iter=200)


def test_flow_graph_transform_rotor():
    e = catalog.get("rotor_pendulum")
    orb = integrate_orbit(e.hamiltonian, e.orbit_start, (-32.0, 32.0))
    act = build_transversal_action(orb)
    N0 = act.N(0.0)
    # the transversal stable/unstable directions of the x2 saddle
    Es_N = N0.T @ np.array([0.0, 1.0, 0.0, -1.0])
    Eu_N = N0.T @ np.array([0.0, 1.0, 0.0, 1.0])
    split = graph_transform_splitting(act, Es_N, Eu_N, 0.0, max_t=30.0)
    assert split.lam == pytest.approx(1.0, rel=0.02) and split.C <= 1.5
    assert split.fits["fixed_point_move"] < 1e-10


def test_flow_graph_transform_no_contraction():
    e = catalog.get("free_particle(2)")
    orb = integrate_orbit(e.hamiltonian, PhasePoint([0.0, 0.0], [1.0, 0.0]), (-32.0, 32.0))
    act = build_transversal_action(orb)
    with pytest.raises(NoContractionError):
        graph_transform_splitting(act, [1.0, 0.0], [0.0, 1.0], 0.0, max_t=30.0)


# ---------------------------------------------------------------- Theorem C

def _greens(name, T=10.0):
    e = catalog.get(name)
    ham = e.analysis_hamiltonian()
    return e, ham, [green_bundles(ham, e.orbit_start, T)]


def test_theorem_C_pendulum():
    e, ham, gs = _greens("pendulum")
    r = decide_theorem_C(ham, gs, e.framework)
    s = r.samples[0]
    assert r.verdict == "hyperbolic" and r.framework == "time_dependent"
    assert s["angle_E_Es"] <= 1e-5 and s["angle_F_Eu"] <= 1e-5
    assert s["lambda"] == pytest.approx(1.0, rel=0.02) and s["C"] <= 1.5
    json.loads(dumps(r))


def test_theorem_C_rotor():
    e, ham, gs = _greens("rotor_pendulum")
    r = decide_theorem_C(ham, gs, e.framework)
    s = r.samples[0]
    assert r.verdict == "hyperbolic" and r.framework == "autonomous"
    assert s["angle_E_EsX"] <= 1e-5 and s["angle_E_Es"] <= 1e-5
    assert r.splitting.lam == pytest.approx(1.0, rel=0.02)


def test_theorem_C_free_particle():
    for name in ("free_particle", "free_particle(2)"):
        e, ham, gs = _greens(name)
        r = decide_theorem_C(ham, gs, e.framework)
        assert r.verdict == "not_hyperbolic"
        assert r.samples[0]["extrapolated_min_eig"] == pytest.approx(0.0, abs=1e-6)


def test_theorem_C_indeterminate_cases():
    e = catalog.get("pendulum")
    ham = e.analysis_hamiltonian()
    pt = PhasePoint([0.0], [0.0])
    S = np.array([[1.0]])
    flat = GreenBundles(pt, S, S.copy(), 10.0, 0.0, True, [(10.0, 0.0)], [(10.0, S, S), (20.0, S, S)])
    assert decide_theorem_C(ham, [flat]).verdict == "indeterminate"
    wobble = [(T, np.array([[-v]]), np.array([[v]])) for T, v in ((5, 1.0), (10, 1.2), (20, 0.9))]
    g = GreenBundles(pt, wobble[-1][1], wobble[-1][2], 10.0, 0.3, False, [], wobble)
    assert decide_theorem_C(ham, [g]).verdict == "indeterminate"
    with pytest.raises(ConfigurationError):
        decide_theorem_C(ham, [])
    with pytest.raises(ConfigurationError):
        decide_theorem_C(ham, [flat], framework="sideways")


# ---------------------------------------------------------------- Theorem A

def test_theorem_A_pendulum():
    e = catalog.get("pendulum")
    r = decide_theorem_A(e.analysis_hamiltonian(), [e.orbit_start], mesh=256, framework=e.framework)
    assert r.verdict == "hyperbolic"
    assert r.a == pytest.approx(1.0, rel=0.02)
    assert r.stages["broken_fields"]["passed"] and r.stages["theorem_c"]["passed"]
    row = r.stages["broken_fields"]["samples"][0]
    assert row["consistency"] < 1e-6
    json.loads(dumps(r))


def test_theorem_A_free_particle():
    e = catalog.get("free_particle")
    T_list = [5, 10, 20, 40]
    r = decide_theorem_A(e.analysis_hamiltonian(), [e.orbit_start], T_list, 256, e.framework)
    assert r.verdict == "hypothesis_not_satisfied"
    assert np.allclose(r.stages["scan"]["a_min"], (np.pi / np.asarray(T_list)) ** 2, rtol=0.05)
    assert r.theorem_c.verdict == "not_hyperbolic"


def test_theorem_A_harmonic_records_conjugate_points():
    e = catalog.get("harmonic")
    r = decide_theorem_A(e.analysis_hamiltonian(), [e.orbit_start], [5.0], 128, e.framework)
    assert r.verdict == "hypothesis_not_satisfied" and r.a < 0
    assert r.stages["scan"]["conjugate_times"][0][0] == pytest.approx(np.pi, abs=1e-6)
    assert r.stages["theorem_c_error"]["error"] == "disconjugacy-violation"
