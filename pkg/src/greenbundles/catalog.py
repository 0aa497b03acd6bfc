"""Builtin example systems with closed-form oracles.

Every fact in ``known_facts`` comes with an evaluator that recomputes it
from elementary closed forms (scipy quadrature and root finding at most),
never from the modules under test.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import ConfigurationError, UnknownSystemError
from .flow import PhasePoint, suspend
from .lagrangian import (
    CallablePotential,
    ConfigSpace,
    HamiltonianModel,
    LagrangianModel,
    TimeDependence,
    TrigPotential,
    TrigTerm,
    mechanical_pair,
)


@dataclass
class KnownFact:
    value: object
    evaluator: Callable[[], object]
    note: str = ""

    def check(self, tol=1e-10):
        got = np.asarray(self.evaluator(), dtype=float)
        want = np.asarray(self.value, dtype=float)
        if got.shape != want.shape:
            return False
        return bool(np.all(np.abs(got - want) <= tol * np.maximum(1.0, np.abs(want))))


@dataclass
class CatalogEntry:
    """A named system with its models, a reference orbit and oracle facts.

    ``framework`` says how hyperbolicity questions are posed:
    ``time_dependent`` (periodic clock, full transversality) or
    ``autonomous`` (restricted to the energy level, modulo the flow).
    """

    name: str
    lagrangian: LagrangianModel
    hamiltonian: HamiltonianModel
    orbit_start: PhasePoint
    framework: str
    hyperbolic: Optional[bool]
    known_facts: dict = field(default_factory=dict)
    notes: str = ""
    spec: dict = field(default_factory=dict)
    suspension_period: Optional[float] = None

    @property
    def dim(self):
        return self.hamiltonian.dim

    @property
    def space(self):
        return self.hamiltonian.space

    def analysis_hamiltonian(self):
        """Hamiltonian used for hyperbolicity questions (suspended if routed)."""
        if self.suspension_period is not None:
            return suspend(self.hamiltonian, self.suspension_period)
        return self.hamiltonian

    def check_facts(self, tol=1e-10):
        return {k: f.check(tol) for k, f in self.known_facts.items()}

    def to_system_file(self):
        """Plain dict in the system-definition format (see ``greenbundles.sysfile``)."""
        out = dict(self.spec)
        out["orbit"] = self.orbit_start.to_dict()
        out["framework"] = self.framework
        if self.suspension_period is not None:
            out["suspension_period"] = self.suspension_period
        return out

    def summary(self):
        return {"name": self.name, "dim": self.dim, "periodic": list(self.space.periodic),
                "framework": self.framework, "hyperbolic": self.hyperbolic,
                "time_dependence": self.hamiltonian.time_dependence.kind, "notes": self.notes}


def _roots(f, a, b, n=4000):
    """All sign-change roots of ``f`` on ``]a, b]`` by bracketing + brentq."""
    ts = np.linspace(a, b, n + 1)
    vals = np.array([f(t) for t in ts])
    out = []
    for i in range(n):
        if vals[i] == 0.0 and i > 0:
            out.append(ts[i])
        elif vals[i] * vals[i + 1] < 0:
            out.append(brentq(f, ts[i], ts[i + 1], xtol=1e-14))
    if vals[-1] == 0.0:
        out.append(ts[-1])
    return out


def _rayleigh_sine(T, potential_curvature=0.0):
    """Rayleigh quotient of ``sin(pi t/T)`` for ``xi'^2 + c xi^2`` by quadrature."""
    # rescaled to s = t/T so large T stays accurate
    num = quad(lambda s: (np.pi / T * np.cos(np.pi * s)) ** 2
               + potential_curvature * np.sin(np.pi * s) ** 2, 0, 1, epsabs=1e-15)[0]
    den = quad(lambda s: np.sin(np.pi * s) ** 2, 0, 1, epsabs=1e-15)[0]
    return num / den


def _linear_exponents(stiffness):
    """Eigenvalues of ``[[0, 1], [k, 0]]`` (``h'' = k h``), sorted."""
    return sorted(np.linalg.eigvals(np.array([[0.0, 1.0], [stiffness, 0.0]])).real)


def _file_spec(name, dim, periodic, terms=(), quadratic=None, kinetic=None, td=None):
    spec = {"name": name, "dim": dim, "periodicity": list(periodic), "kind": "mechanical",
            "potential": {"terms": [dict(t) for t in terms]},
            "kinetic": (np.eye(dim) if kinetic is None else np.asarray(kinetic)).tolist(),
            "time_dependence": td or {"kind": "autonomous"}}
    if quadratic is not None:
        spec["potential"]["quadratic"] = np.asarray(quadratic, float).tolist()
    return spec


def free_particle(d=1):
    d = int(d)
    if d < 1:
        raise ConfigurationError("free_particle dimension must be >= 1", dim=d)
    space = ConfigSpace.torus(d)
    lag, ham = mechanical_pair(space, TrigPotential(d), name="free_particle(%d)" % d)
    p0 = np.zeros(d)
    p0[0] = 1.0
    T = 10.0
    facts = {
        "a_min_T10": KnownFact(np.pi ** 2 / T ** 2, lambda: _rayleigh_sine(T),
                               "a_min(T) = pi^2/T^2 via the sine Rayleigh quotient"),
        "green_slopes": KnownFact([0.0, 0.0], lambda: [-1.0 / 1e12, 1.0 / 1e12],
                                  "limits of -+1/T"),
        "conjugate_times_0_100": KnownFact([], lambda: _roots(lambda t: t, 1e-9, 100.0),
                                           "Y(t) = t never vanishes"),
    }
    return CatalogEntry(
        name="free_particle(%d)" % d, lagrangian=lag, hamiltonian=ham,
        orbit_start=PhasePoint(np.zeros(d), p0), framework="autonomous" if d > 1 else "time_dependent",
        hyperbolic=False, known_facts=facts,
        notes="d = 1 is posed through the period-1 suspension" if d == 1 else "",
        spec=_file_spec("free_particle(%d)" % d, d, [True] * d),
        suspension_period=1.0 if d == 1 else None,
    )


def harmonic():
    space = ConfigSpace.line(1)
    q = [[1.0]]
    lag, ham = mechanical_pair(space, TrigPotential(1, quadratic=q), name="harmonic")
    facts = {
        "conjugate_times": KnownFact([k * np.pi for k in range(1, 11)],
                                     lambda: _roots(np.sin, 0.5, 10 * np.pi + 0.5),
                                     "zeros of Y(t) = sin t"),
    }
    return CatalogEntry(
        name="harmonic", lagrangian=lag, hamiltonian=ham, orbit_start=PhasePoint([0.0], [0.0]),
        framework="time_dependent", hyperbolic=False, known_facts=facts,
        spec=_file_spec("harmonic", 1, [False], quadratic=q), suspension_period=1.0,
    )


def pendulum():
    space = ConfigSpace.torus(1)
    terms = [{"freq": [1.0], "amplitude": 1.0, "phase": 0.0}]
    lag, ham = mechanical_pair(space, TrigPotential(1, terms), name="pendulum")
    facts = {
        "exponents": KnownFact([-1.0, 1.0], lambda: _linear_exponents(1.0),
                               "linearization h'' = h at x = 0"),
        "S_limit": KnownFact(-1.0, lambda: -1.0 / np.tanh(40.0), "limit of -coth T"),
        "U_limit": KnownFact(1.0, lambda: 1.0 / np.tanh(40.0), "limit of coth T"),
        "uniform_a": KnownFact(1.0, lambda: _rayleigh_sine(1e7, 1.0),
                               "inf over T of pi^2/T^2 + 1"),
        "Y_at_2": KnownFact(np.sinh(2.0), lambda: quad(np.cosh, 0.0, 2.0, epsabs=1e-14)[0],
                            "Y(2) = sinh 2"),
    }
    return CatalogEntry(
        name="pendulum", lagrangian=lag, hamiltonian=ham, orbit_start=PhasePoint([0.0], [0.0]),
        framework="time_dependent", hyperbolic=True, known_facts=facts,
        notes="hyperbolic equilibrium x = 0 sits on a critical energy level; "
              "questions are posed through the period-1 suspension",
        spec=_file_spec("pendulum", 1, [True], terms), suspension_period=1.0,
    )


def mathieu(q=0.1, omega=2.0):
    q, omega = float(q), float(omega)
    if omega <= 0:
        raise ConfigurationError("mathieu omega must be positive", omega=omega)
    space = ConfigSpace.torus(1)
    terms = [{"freq": [1.0], "amplitude": -1.0, "phase": 0.0, "q": q, "omega": omega}]
    period = 2 * np.pi / omega
    td = TimeDependence.periodic_in(period)
    lag, ham = mechanical_pair(space, TrigPotential(1, terms), time_dependence=td,
                               name="mathieu(%g,%g)" % (q, omega))
    facts = {
        "forcing_period": KnownFact(period, lambda: quad(lambda t: 1.0, 0, 2 * np.pi / omega)[0]),
        "q0_exponents": KnownFact([-1.0, 1.0], lambda: _linear_exponents(1.0),
                                  "at q = 0 the inverted orbit is the pendulum equilibrium"),
    }
    return CatalogEntry(
        name="mathieu(%g,%g)" % (q, omega), lagrangian=lag, hamiltonian=ham,
        orbit_start=PhasePoint([np.pi], [0.0]), framework="time_dependent", hyperbolic=True,
        known_facts=facts, notes="inverted orbit x = pi; exponents from the monodromy itself",
        spec=_file_spec("mathieu(%g,%g)" % (q, omega), 1, [True], terms,
                        td={"kind": "periodic", "period": period}),
    )


def double_well():
    space = ConfigSpace.line(1)
    pot = CallablePotential(
        lambda x, t: (x[0] ** 2 - 1.0) ** 2 / 4.0,
        lambda x, t: np.array([x[0] ** 3 - x[0]]),
        lambda x, t: np.array([[3.0 * x[0] ** 2 - 1.0]]),
    )
    lag, ham = mechanical_pair(space, pot, name="double_well")
    facts = {
        "exponents_at_0": KnownFact([-1.0, 1.0], lambda: _linear_exponents(1.0),
                                    "U''(0) = -1 so h'' = h"),
    }
    return CatalogEntry(
        name="double_well", lagrangian=lag, hamiltonian=ham, orbit_start=PhasePoint([0.0], [0.0]),
        framework="time_dependent", hyperbolic=True, known_facts=facts,
        notes="potential (x^2 - 1)^2 / 4; saddle at the origin, posed through the suspension",
        spec={"name": "double_well", "dim": 1, "periodicity": [False], "kind": "builtin"},
        suspension_period=1.0,
    )


def rotor_pendulum():
    space = ConfigSpace.torus(2)
    terms = [{"freq": [0.0, 1.0], "amplitude": 1.0, "phase": 0.0}]
    lag, ham = mechanical_pair(space, TrigPotential(2, terms), name="rotor_pendulum")
    facts = {
        "transverse_exponents": KnownFact([-1.0, 1.0], lambda: _linear_exponents(1.0),
                                          "x2 linearization h'' = h along x1 = t"),
        "S_limit": KnownFact([[0.0, 0.0], [0.0, -1.0]],
                             lambda: [[-1e-13, 0.0], [0.0, -1.0 / np.tanh(40.0)]]),
        "U_limit": KnownFact([[0.0, 0.0], [0.0, 1.0]],
                             lambda: [[1e-13, 0.0], [0.0, 1.0 / np.tanh(40.0)]]),
    }
    return CatalogEntry(
        name="rotor_pendulum", lagrangian=lag, hamiltonian=ham,
        orbit_start=PhasePoint([0.0, 0.0], [1.0, 0.0]), framework="autonomous", hyperbolic=True,
        known_facts=facts,
        notes="free rotation in x1 times an inverted pendulum in x2; the periodic orbit "
              "x1 = t, x2 = 0 is hyperbolic on its (regular) energy level",
        spec=_file_spec("rotor_pendulum", 2, [True, True], terms),
    )


_REGISTRY = {
    "free_particle": free_particle,
    "harmonic": harmonic,
    "pendulum": pendulum,
    "mathieu": mathieu,
    "double_well": double_well,
    "rotor_pendulum": rotor_pendulum,
}

_NAME_RE = re.compile(r"^\s*([a-z_]+)\s*(?:\((.*)\))?\s*$")


def names():
    return sorted(_REGISTRY)


def get(name) -> CatalogEntry:
    """Look up ``name`` such as ``pendulum``, ``free_particle(2)`` or ``mathieu(0.1, 2)``."""
    m = _NAME_RE.match(str(name))
    if not m or m.group(1) not in _REGISTRY:
        raise UnknownSystemError("unknown system %r" % (name,), name=str(name), known=names())
    args = []
    if m.group(2):
        try:
            args = [float(a) for a in m.group(2).split(",") if a.strip()]
        except ValueError:
            raise ConfigurationError("bad system arguments", name=str(name)) from None
    try:
        return _REGISTRY[m.group(1)](*args)
    except TypeError:
        raise ConfigurationError("wrong number of system arguments", name=str(name)) from None
