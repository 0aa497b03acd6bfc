"""Hamiltonian flow and its linearization (Jacobi frames).

Orbits and frames are integrated with scipy's DOP853 (adaptive embedded
Runge-Kutta with dense output).  A frame is always co-integrated with its
own copy of the base orbit, so the linearized equations are evaluated on
the same step sequence as the orbit itself.

Configuration coordinates are integrated lifted (no wrapping) and only
reduced when a :class:`PhasePoint` is reported.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import OdeSolution, solve_ivp

from .errors import ConfigurationError, EscapeError, NotPeriodicError
from .lagrangian import HamiltonianModel, TimeDependence

DEFAULT_TOL = 1e-10
ESCAPE_LEVEL = 1e8
CLOSURE_TOL = 1e-8
RESEED_STEP = 2.0  # frames re-read the base state from the reference orbit this often
RESEED_MAX = 64  # ... but in at most this many pieces per direction


@dataclass(frozen=True)
class PhasePoint:
    """``theta = (x, p)`` at clock time ``clock``."""

    x: np.ndarray
    p: np.ndarray
    clock: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)).copy())
        object.__setattr__(self, "p", np.atleast_1d(np.asarray(self.p, dtype=float)).copy())
        object.__setattr__(self, "clock", float(self.clock))
        if self.x.shape != self.p.shape or self.x.ndim != 1:
            raise ConfigurationError("x and p must be vectors of equal length",
                                     x=list(self.x.shape), p=list(self.p.shape))

    @property
    def dim(self):
        return self.x.size

    def reduced(self, space):
        return PhasePoint(space.reduce(self.x), self.p, self.clock)

    def to_dict(self):
        return {"x": self.x.tolist(), "p": self.p.tolist(), "clock": self.clock}


@dataclass(frozen=True)
class TangentSplitting:
    """Horizontal and vertical subspaces at a phase point, as column bases."""

    at: PhasePoint
    horizontal: np.ndarray = field(repr=False, default=None)
    vertical: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        d = self.at.dim
        eye, zero = np.eye(d), np.zeros((d, d))
        object.__setattr__(self, "horizontal", np.vstack([eye, zero]))
        object.__setattr__(self, "vertical", np.vstack([zero, eye]))


def omega(xi1, xi2):
    """Canonical symplectic form ``v1 . h2 - v2 . h1`` on ``(h, v)`` vectors."""
    xi1, xi2 = np.asarray(xi1, float), np.asarray(xi2, float)
    d = xi1.shape[0] // 2
    h1, v1 = xi1[:d], xi1[d:]
    h2, v2 = xi2[:d], xi2[d:]
    return v1.T @ h2 - v2.T @ h1


def canonical_J(d):
    """Matrix of ``omega``: ``omega(a, b) = a^T J b``."""
    eye, zero = np.eye(d), np.zeros((d, d))
    return np.block([[zero, -eye], [eye, zero]])


def symplectic_defect(Phi):
    """``||Phi^T J Phi - J||`` relative to ``max(1, ||Phi||^2)``."""
    Phi = np.asarray(Phi, float)
    J = canonical_J(Phi.shape[0] // 2)
    scale = max(1.0, np.linalg.norm(Phi, 2) ** 2)
    return float(np.linalg.norm(Phi.T @ J @ Phi - J, 2) / scale)


def wronskian(H1, V1, H2, V2):
    """``K = H1^T V2 - V1^T H2``."""
    return H1.T @ V2 - V1.T @ H2


class _TwoSided:
    """Dense output glued from a forward and a backward solve around ``t_ref``."""

    def __init__(self, t_ref, y_ref, fwd, bwd):
        self.t_ref = t_ref
        self.y_ref = y_ref
        self.fwd = fwd  # (t_array, OdeSolution) or None
        self.bwd = bwd
        t_lo = bwd[0][-1] if bwd else t_ref
        t_hi = fwd[0][-1] if fwd else t_ref
        self.t0, self.t1 = float(t_lo), float(t_hi)
        pieces = []
        if bwd:
            pieces.append(bwd[0][::-1])
        pieces.append(np.array([t_ref]))
        if fwd:
            pieces.append(fwd[0])
        self.step_times = np.unique(np.concatenate(pieces))

    def __call__(self, t):
        t = float(t)
        if t < self.t0 - 1e-12 * max(1.0, abs(self.t0)) or t > self.t1 + 1e-12 * max(1.0, abs(self.t1)):
            raise ConfigurationError("time outside integrated span", t=t, span=[self.t0, self.t1])
        if t == self.t_ref:
            return self.y_ref.copy()
        if t > self.t_ref:
            return self.fwd[1](min(t, self.t1))
        return self.bwd[1](max(t, self.t0))


def _solve(ham: HamiltonianModel, y0, t_ref, t_end, tol, k, base=None):
    """One-directional DOP853 solve of the (possibly augmented) system.

    With ``base`` (a reference orbit's ``state``) the augmented system is
    solved in pieces of length ``RESEED_STEP``, each restarted from the
    reference state.  Re-integrating an unstable orbit from the far end of
    a long window would otherwise amplify its drift by ``exp(lambda T)``.
    """
    if base is not None and abs(t_end - t_ref) > RESEED_STEP:
        return _solve_reseeded(ham, y0, t_ref, t_end, tol, k, base)
    d = ham.dim

    def rhs(t, y):
        x, p = y[:d], y[d:2 * d]
        out = np.empty_like(y)
        out[:d] = ham.H_p(x, p, t)
        out[d:2 * d] = -ham.H_x(x, p, t)
        if k:
            Hf = y[2 * d:2 * d + d * k].reshape(d, k)
            Vf = y[2 * d + d * k:].reshape(d, k)
            H_px, H_pp, H_xx, H_xp = ham.jacobi_blocks(x, p, t)
            out[2 * d:2 * d + d * k] = (H_px @ Hf + H_pp @ Vf).ravel()
            out[2 * d + d * k:] = (-H_xx @ Hf - H_xp @ Vf).ravel()
        return out

    def escape(t, y):
        return ESCAPE_LEVEL - np.max(np.abs(y[d:2 * d]))

    escape.terminal = True
    escape.direction = -1

    sol = solve_ivp(rhs, (t_ref, t_end), y0, method="DOP853", rtol=tol,
                    atol=tol * 1e-3, dense_output=True, events=escape)
    if sol.status == 1 or not sol.success:
        last = float(sol.t[-1]) if sol.t.size else t_ref
        raise EscapeError("integration escaped or failed: %s" % sol.message,
                          last_good_time=last, start=t_ref, target=t_end)
    return sol.t, sol.sol


def _solve_reseeded(ham, y0, t_ref, t_end, tol, k, base):
    d = ham.dim
    n = min(RESEED_MAX, int(np.ceil(abs(t_end - t_ref) / RESEED_STEP - 1e-9)))
    knots = np.linspace(t_ref, t_end, n + 1)
    y = np.asarray(y0, float)
    ts, interps = [np.array([t_ref])], []
    for a, b in zip(knots[:-1], knots[1:]):
        if a != t_ref:
            x, p = base(a)
            y = np.concatenate([x, p, y[2 * d:]])
        t_seg, sol = _solve(ham, y, a, b, tol, k)
        ts.append(t_seg[1:])
        interps.extend(sol.interpolants)
        y = sol(b)
    return np.concatenate(ts), OdeSolution(np.concatenate(ts), interps)


def _integrate(ham, y0, t_ref, t0, t1, tol, k, base=None):
    if not (tol > 0):
        raise ConfigurationError("tol must be positive", tol=tol)
    if not (t0 <= t_ref <= t1):
        raise ConfigurationError("span must contain the start clock", span=[t0, t1], start=t_ref)
    fwd = _solve(ham, y0, t_ref, t1, tol, k, base) if t1 > t_ref else None
    bwd = _solve(ham, y0, t_ref, t0, tol, k, base) if t0 < t_ref else None
    return _TwoSided(t_ref, np.asarray(y0, float), fwd, bwd)


class OrbitSegment:
    """Dense trajectory of the Hamiltonian flow on ``[t0, t1]``."""

    def __init__(self, ham: HamiltonianModel, start: PhasePoint, dense: _TwoSided, tol: float):
        self.ham = ham
        self.start = start
        self.tol = tol
        self._dense = dense
        self.t0, self.t1 = dense.t0, dense.t1
        self.energy_drift = self._energy_drift()

    @property
    def dim(self):
        return self.ham.dim

    @property
    def step_times(self):
        return self._dense.step_times

    def state(self, t):
        """Lifted ``(x, p)`` at time ``t``."""
        y = self._dense(t)
        d = self.dim
        return y[:d], y[d:2 * d]

    def point(self, t):
        x, p = self.state(t)
        return PhasePoint(self.ham.space.reduce(x), p, t)

    def lifted_point(self, t):
        x, p = self.state(t)
        return PhasePoint(x, p, t)

    def velocity(self, t):
        """Projected velocity ``dpi(X) = H_p`` along the orbit."""
        x, p = self.state(t)
        return self.ham.H_p(x, p, t)

    def samples(self):
        """``(times, x, p)`` at integrator steps; ``x`` reduced."""
        ts = self.step_times
        xs, ps = zip(*(self.state(t) for t in ts))
        return ts, self.ham.space.reduce(np.array(xs)), np.array(ps)

    def _energy_drift(self):
        if not self.ham.autonomous:
            return None
        x0, p0 = self.state(self.start.clock)
        e0 = self.ham.H(x0, p0)
        drift = 0.0
        for t in self.step_times:
            x, p = self.state(t)
            drift = max(drift, abs(self.ham.H(x, p) - e0))
        return float(drift)

    def hamilton_residual(self, times, h=1e-5):
        """Max deviation of the interpolant's derivative from the vector field."""
        worst = 0.0
        for t in times:
            lo, hi = max(self.t0, t - h), min(self.t1, t + h)
            xa, pa = self.state(lo)
            xb, pb = self.state(hi)
            deriv = np.concatenate([xb - xa, pb - pa]) / (hi - lo)
            # compare at the midpoint so the difference stays centred near the ends
            tm = 0.5 * (lo + hi)
            x, p = self.state(tm)
            X = self.ham.vector_field(x, p, tm)
            worst = max(worst, np.linalg.norm(deriv - X) / (1.0 + np.linalg.norm(X)))
        return float(worst)


def integrate_orbit(ham: HamiltonianModel, start: PhasePoint, t_span, tol=DEFAULT_TOL) -> OrbitSegment:
    """Integrate Hamilton's equations through ``start`` over ``t_span``.

    ``t_span`` is an absolute clock interval containing ``start.clock``; a
    single number ``T`` means ``[clock, clock + T]`` (negative allowed).
    """
    if start.dim != ham.dim:
        raise ConfigurationError("start point has wrong dimension")
    t0, t1 = _span(start.clock, t_span)
    y0 = np.concatenate([start.x, start.p])
    dense = _integrate(ham, y0, start.clock, t0, t1, tol, 0)
    return OrbitSegment(ham, start, dense, tol)


def _span(clock, t_span):
    if np.isscalar(t_span):
        a, b = clock, clock + float(t_span)
    else:
        a, b = (float(s) for s in t_span)
    return min(a, b), max(a, b)


class JacobiFrame:
    """Matrix solution ``(H(t), V(t))`` of the Jacobi equations along an orbit.

    ``H`` and ``V`` are ``d x k``.  The orbit is co-integrated with the
    frame and re-seeded from the reference ``orbit`` every ``RESEED_STEP``.
    """

    def __init__(self, orbit: OrbitSegment, initial, t_start: float, dense: _TwoSided, k: int):
        self.orbit = orbit
        self.initial = initial
        self.t_start = t_start
        self.k = k
        self._dense = dense
        self.t0, self.t1 = dense.t0, dense.t1

    @property
    def dim(self):
        return self.orbit.dim

    @property
    def step_times(self):
        return self._dense.step_times

    def at(self, t):
        y = self._dense(t)
        d, k = self.dim, self.k
        return (y[2 * d:2 * d + d * k].reshape(d, k).copy(),
                y[2 * d + d * k:].reshape(d, k).copy())

    def H(self, t):
        return self.at(t)[0]

    def V(self, t):
        return self.at(t)[1]

    def base_state(self, t):
        """Co-integrated orbit state ``(x, p)``."""
        y = self._dense(t)
        d = self.dim
        return y[:d], y[d:2 * d]

    def stacked(self, t):
        """``[H; V]`` as a ``2d x k`` matrix."""
        Hm, Vm = self.at(t)
        return np.vstack([Hm, Vm])

    def jacobi_residual(self, times, h=1e-5):
        """Relative residual of the Jacobi equations at spot-check times."""
        ham = self.orbit.ham
        worst = 0.0
        for t in times:
            lo, hi = max(self.t0, t - h), min(self.t1, t + h)
            Ha, Va = self.at(lo)
            Hb, Vb = self.at(hi)
            tm = 0.5 * (lo + hi)
            Hm, Vm = self.at(tm)
            x, p = self.base_state(tm)
            H_px, H_pp, H_xx, H_xp = ham.jacobi_blocks(x, p, tm)
            rH = (Hb - Ha) / (hi - lo) - (H_px @ Hm + H_pp @ Vm)
            rV = (Vb - Va) / (hi - lo) - (-H_xx @ Hm - H_xp @ Vm)
            scale = 1.0 + np.linalg.norm(np.vstack([Hm, Vm]))
            worst = max(worst, np.linalg.norm(np.vstack([rH, rV])) / scale)
        return float(worst)

    def lagrangian_defect(self, t):
        """``||V^T H - H^T V||`` relative to ``||[H; V]||^2``."""
        Hm, Vm = self.at(t)
        scale = max(1.0, np.linalg.norm(np.vstack([Hm, Vm])) ** 2)
        return float(np.linalg.norm(Vm.T @ Hm - Hm.T @ Vm) / scale)


def integrate_jacobi_frame(orbit: OrbitSegment, initial, tol=DEFAULT_TOL,
                           t_start=None, t_span=None) -> JacobiFrame:
    """Co-integrate the orbit and a Jacobi frame.

    ``initial = (H0, V0)`` is prescribed at ``t_start`` (default: the
    orbit's start clock).  The frame covers ``t_span`` (default: the
    orbit's whole span).
    """
    d = orbit.dim
    H0 = np.atleast_2d(np.asarray(initial[0], float))
    V0 = np.atleast_2d(np.asarray(initial[1], float))
    if H0.shape[0] != d and d == 1:
        H0, V0 = H0.reshape(1, -1), V0.reshape(1, -1)
    if H0.shape != V0.shape or H0.shape[0] != d:
        raise ConfigurationError("initial frame must be a pair of d x k matrices",
                                 H0=list(H0.shape), V0=list(V0.shape))
    k = H0.shape[1]
    if np.linalg.matrix_rank(np.vstack([H0, V0])) < k:
        raise ConfigurationError("initial frame must have full column rank")
    ts = orbit.start.clock if t_start is None else float(t_start)
    if t_span is None:
        a, b = orbit.t0, orbit.t1
    else:
        a, b = _span(ts, t_span)
    a, b = min(a, ts), max(b, ts)
    x, p = orbit.state(ts)
    y0 = np.concatenate([x, p, H0.ravel(), V0.ravel()])
    dense = _integrate(orbit.ham, y0, ts, a, b, tol, k, orbit.state)
    return JacobiFrame(orbit, (H0.copy(), V0.copy()), ts, dense, k)


def vertical_start(d):
    return np.zeros((d, d)), np.eye(d)


def horizontal_start(d):
    return np.eye(d), np.zeros((d, d))


def frame_from(ham: HamiltonianModel, point: PhasePoint, initial, t_end, tol=DEFAULT_TOL) -> JacobiFrame:
    """Frame through ``point`` with data at ``point.clock``, integrated to ``t_end``."""
    orbit = integrate_orbit(ham, point, (point.clock, t_end), tol)
    return integrate_jacobi_frame(orbit, initial, tol, t_start=point.clock)


def vertical_frame(orbit: OrbitSegment, t_from, t_to, tol=None):
    """``Y``: horizontal part at ``t_to`` of the frame started vertical at ``t_from``."""
    tol = orbit.tol if tol is None else tol
    frame = integrate_jacobi_frame(orbit, vertical_start(orbit.dim), tol,
                                   t_start=t_from, t_span=(t_from, t_to))
    return frame.H(t_to)


def closure_gap(ham: HamiltonianModel, a: PhasePoint, b: PhasePoint):
    """Phase-space distance, measured on the circle along periodic axes."""
    dx = ham.space.difference(a.x, b.x)
    return float(np.linalg.norm(np.concatenate([dx, b.p - a.p])))


def monodromy(ham: HamiltonianModel, start: PhasePoint, period, tol=DEFAULT_TOL,
              closure_tol=CLOSURE_TOL):
    """Linearization ``dpsi_period`` at a periodic point as a ``2d x 2d`` matrix."""
    period = float(period)
    if not period > 0:
        raise ConfigurationError("period must be positive", period=period)
    td = ham.time_dependence
    if td.kind == "periodic":
        ratio = period / td.period
        if abs(ratio - round(ratio)) > 1e-9:
            raise NotPeriodicError("period is not a multiple of the forcing period",
                                   period=period, forcing_period=td.period)
    d = ham.dim
    orbit = integrate_orbit(ham, start, period, tol)
    end = orbit.lifted_point(start.clock + period)
    gap = closure_gap(ham, start, end)
    if gap > closure_tol:
        raise NotPeriodicError("orbit does not close", gap=gap, period=period)
    initial = (np.hstack([np.eye(d), np.zeros((d, d))]),
               np.hstack([np.zeros((d, d)), np.eye(d)]))
    frame = integrate_jacobi_frame(orbit, initial, tol)
    return frame.stacked(start.clock + period)


def suspend(ham: HamiltonianModel, period=1.0) -> HamiltonianModel:
    """Regard an autonomous system as time-periodic with the given period."""
    return HamiltonianModel(
        ham.space, ham._H, ham._H_x, ham._H_p, ham._H_xx, ham._H_xp, ham._H_pp,
        time_dependence=TimeDependence.periodic_in(period), source=ham.source,
        lagrangian=ham.lagrangian, name="%s[suspended]" % ham.name,
    )
