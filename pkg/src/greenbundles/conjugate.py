"""Conjugate points, Green bundles and frame reconstruction.

The Green slopes at ``theta`` are

    S_T = slope of dpsi_{-T}(Vert(psi_T theta)),
    U_T = slope of dpsi_T(Vert(psi_{-T} theta)),

each obtained by integrating a vertical frame towards ``theta`` (never by
inverting a forward linearization).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import quad_vec
from scipy.optimize import minimize_scalar

from .errors import ConfigurationError, DisconjugacyViolation, ReconstructionDomainError
from .flow import (
    DEFAULT_TOL,
    JacobiFrame,
    OrbitSegment,
    PhasePoint,
    integrate_jacobi_frame,
    integrate_orbit,
    vertical_start,
    wronskian,
)
from .lagrangian import HamiltonianModel
from .riccati import det_crossings, sample_times

MULTIPLICITY_TOL = 1e-6
EVEN_CROSSING_TOL = 1e-7


@dataclass
class ConjugateReport:
    window: tuple
    conjugate_times: list  # [(t, multiplicity)]
    disconjugate: bool
    margin: Optional[float] = None  # distance from the window end to the nearest conjugate time inside

    def to_dict(self):
        return {"window": list(self.window),
                "conjugate_times": [[t, m] for t, m in self.conjugate_times],
                "disconjugate": self.disconjugate, "margin": self.margin}


def _normalized_sv(frame, t):
    Hm, Vm = frame.at(t)
    scale = np.linalg.norm(np.vstack([Hm, Vm]), 2)
    return np.linalg.svd(Hm / scale, compute_uv=False)


def find_conjugate_points(orbit: OrbitSegment, window=None, tol=None) -> ConjugateReport:
    """Times in ``]a, b]`` conjugate to ``a`` along ``orbit``.

    Odd crossings are sign changes of ``det Y``; for ``d > 1`` local minima
    of the normalized smallest singular value are also refined to catch
    even-multiplicity points.
    """
    tol = orbit.tol if tol is None else tol
    a, b = (orbit.t0, orbit.t1) if window is None else (float(window[0]), float(window[1]))
    if not (orbit.t0 - 1e-12 <= a < b <= orbit.t1 + 1e-12):
        raise ConfigurationError("window must lie inside the orbit span", window=[a, b],
                                 span=[orbit.t0, orbit.t1])
    frame = integrate_jacobi_frame(orbit, vertical_start(orbit.dim), tol, t_start=a, t_span=(a, b))
    eps = 1e-9 * max(1.0, abs(a))
    times = [t for t in det_crossings(frame, a, b) if t > a + eps]
    if orbit.dim > 1:
        ts = sample_times(frame)
        ts = ts[ts > a + eps]
        sig = np.array([_normalized_sv(frame, t)[-1] for t in ts])
        for i in range(1, len(ts) - 1):
            if sig[i] <= sig[i - 1] and sig[i] <= sig[i + 1]:
                res = minimize_scalar(lambda t: _normalized_sv(frame, t)[-1],
                                      bounds=(ts[i - 1], ts[i + 1]), method="bounded",
                                      options={"xatol": 1e-12})
                if res.fun < EVEN_CROSSING_TOL and not any(abs(res.x - t) < 1e-6 for t in times):
                    times.append(float(res.x))
    times.sort()
    found = []
    for t in times:
        sv = _normalized_sv(frame, t)
        found.append((float(t), max(1, int(np.sum(sv < MULTIPLICITY_TOL)))))
    margin = None if not found else float(b - found[-1][0])
    return ConjugateReport((a, b), found, not found, margin)


def green_slopes(ham: HamiltonianModel, point: PhasePoint, T, tol=DEFAULT_TOL, orbit=None):
    """``(S_T, U_T)`` at ``point`` from vertical frames at ``clock -+ T``."""
    c = point.clock
    T = float(T)
    if not T > 0:
        raise ConfigurationError("horizon must be positive", T=T)
    if orbit is None or orbit.t0 > c - T or orbit.t1 < c + T:
        orbit = integrate_orbit(ham, point, (c - T, c + T), tol)
    vs = vertical_start(ham.dim)
    back = integrate_jacobi_frame(orbit, vs, tol, t_start=c + T, t_span=(c, c + T))
    fwd = integrate_jacobi_frame(orbit, vs, tol, t_start=c - T, t_span=(c - T, c))
    out = []
    for fr in (back, fwd):
        Hm, Vm = fr.at(c)
        out.append(np.linalg.solve(Hm.T, Vm.T).T)
    return out[0], out[1]


@dataclass
class GreenBundles:
    at: PhasePoint
    S_limit: np.ndarray
    U_limit: np.ndarray
    T_used: float
    convergence_gap: float
    converged: bool
    history: list = field(default_factory=list)
    slopes: list = field(default_factory=list)  # [(T, S_T, U_T)] for every horizon used

    def E_basis(self):
        """Column basis ``[I; S]`` of the stable Green bundle."""
        return np.vstack([np.eye(self.S_limit.shape[0]), self.S_limit])

    def F_basis(self):
        return np.vstack([np.eye(self.U_limit.shape[0]), self.U_limit])

    def to_dict(self):
        return {"at": self.at.to_dict(), "S_limit": np.asarray(self.S_limit).tolist(),
                "U_limit": np.asarray(self.U_limit).tolist(), "T_used": self.T_used,
                "gap": self.convergence_gap, "converged": self.converged,
                "history": [[T, g] for T, g in self.history]}


def green_bundles(ham: HamiltonianModel, point: PhasePoint, T=10.0, tol=1e-8,
                  T_cap=None, ode_tol=DEFAULT_TOL) -> GreenBundles:
    """Green bundles at ``point`` as Cauchy limits in the horizon.

    Slopes at ``T`` and ``2T`` are compared; the horizon doubles until the
    gap drops below ``tol`` or ``2T`` reaches ``T_cap`` (default ``16 T``).
    ``T_used`` is the smaller horizon of the accepted pair.
    """
    T = float(T)
    T_cap = 16.0 * T if T_cap is None else float(T_cap)
    c = point.clock
    history, slopes = [], []
    S_prev = U_prev = None
    while True:
        span = (c - 2 * T, c + 2 * T)
        orbit = integrate_orbit(ham, point, span, ode_tol)
        rep = find_conjugate_points(orbit, span, ode_tol)
        if not rep.disconjugate:
            raise DisconjugacyViolation("conjugate points on the Green window",
                                        window=list(span), conjugate_times=rep.conjugate_times)
        if S_prev is None:
            S_prev, U_prev = green_slopes(ham, point, T, ode_tol, orbit)
            slopes.append((T, S_prev, U_prev))
        S2, U2 = green_slopes(ham, point, 2 * T, ode_tol, orbit)
        slopes.append((2 * T, S2, U2))
        gap = float(np.linalg.norm(S2 - S_prev, 2) + np.linalg.norm(U2 - U_prev, 2))
        history.append((T, gap))
        if gap <= tol or 2 * T >= T_cap:
            return GreenBundles(point, S2, U2, T, gap, gap <= tol, history, slopes)
        S_prev, U_prev = S2, U2
        T *= 2


def monotone_chain_defect(ham: HamiltonianModel, point: PhasePoint, s, t, tol=DEFAULT_TOL):
    """Smallest eigenvalues of ``S_t - S_s`` and ``U_s - U_t`` for ``0 < s < t``."""
    if not 0 < s < t:
        raise ConfigurationError("need 0 < s < t", s=s, t=t)
    orbit = integrate_orbit(ham, point, (point.clock - t, point.clock + t), tol)
    S_s, U_s = green_slopes(ham, point, s, tol, orbit)
    S_t, U_t = green_slopes(ham, point, t, tol, orbit)
    sym = lambda A: 0.5 * (A + A.T)
    return (float(np.linalg.eigvalsh(sym(S_t - S_s))[0]),
            float(np.linalg.eigvalsh(sym(U_s - U_t))[0]))


class ReconstructedFrame:
    """Frame ``(H2, V2)`` built from a base frame by the quadrature formulas

        H2 = H1 [D + int_{t0}^t H1^-1 H_pp H1^-T K ds],
        V2 = H1^-T [K + V1^T H2].
    """

    def __init__(self, base: JacobiFrame, K, D, t0, t_cap=None):
        self.base = base
        d = base.dim
        self.K = np.atleast_2d(np.asarray(K, float)).reshape(d, -1)
        self.D = np.atleast_2d(np.asarray(D, float)).reshape(d, self.K.shape[1])
        self.t0 = float(t0)
        self.t_cap = t_cap
        self.tail_bound = 0.0
        if np.isinf(self.t0):
            if t_cap is None:
                raise ConfigurationError("an infinite base time needs a cap")
            self.tail_bound = self._tail_estimate()

    @property
    def lagrangian(self):
        """Lagrangian iff ``K^T D`` is symmetric."""
        KD = self.K.T @ self.D
        return bool(np.linalg.norm(KD - KD.T) <= 1e-10 * max(1.0, np.linalg.norm(KD)))

    def _integrand(self, s):
        H1, _ = self.base.at(s)
        x, p = self.base.base_state(s)
        H_pp = self.base.orbit.ham.H_pp(x, p, s)
        H1inv = np.linalg.inv(H1)
        return H1inv @ H_pp @ H1inv.T @ self.K

    def _tail_estimate(self):
        # integrand decays exponentially here; extrapolate the geometric tail
        c = self.t_cap
        f1 = np.linalg.norm(self._integrand(c))
        f0 = np.linalg.norm(self._integrand(c - 1.0))
        if f1 == 0.0:
            return 0.0
        rate = np.log(f0 / f1) if f0 > f1 else 0.0
        return float(f1 / rate) if rate > 0 else float("inf")

    def _check_domain(self, t):
        lo, hi = sorted((t, self.t_cap if np.isinf(self.t0) else self.t0))
        if lo < self.base.t0 - 1e-12 or hi > self.base.t1 + 1e-12:
            raise ReconstructionDomainError("reconstruction interval leaves the base frame",
                                            interval=[lo, hi])
        if det_crossings(self.base, lo, hi):
            raise ReconstructionDomainError("base frame is singular on the interval",
                                            interval=[lo, hi])
        for s in (lo, hi):
            sv = _normalized_sv(self.base, s)
            if sv[-1] < 1e-12:
                raise ReconstructionDomainError("base frame is singular at an endpoint", t=s)

    def at(self, t):
        t = float(t)
        self._check_domain(t)
        start = self.t_cap if np.isinf(self.t0) else self.t0
        if t == start:
            integral = np.zeros_like(self.D)
        else:
            integral = quad_vec(self._integrand, start, t, epsabs=1e-13, epsrel=1e-12)[0]
        H1, V1 = self.base.at(t)
        H2 = H1 @ (self.D + integral)
        V2 = np.linalg.solve(H1.T, self.K + V1.T @ H2)
        return H2, V2

    def H(self, t):
        return self.at(t)[0]

    def V(self, t):
        return self.at(t)[1]

    def wronskian_with_base(self, t):
        H1, V1 = self.base.at(t)
        H2, V2 = self.at(t)
        return wronskian(H1, V1, H2, V2)

    def jacobi_residual(self, t, h=1e-4):
        Hp, Vp = self.at(t + h)
        Hm, Vm = self.at(t - h)
        H2, V2 = self.at(t)
        x, p = self.base.base_state(t)
        H_px, H_pp, H_xx, H_xp = self.base.orbit.ham.jacobi_blocks(x, p, t)
        rH = (Hp - Hm) / (2 * h) - (H_px @ H2 + H_pp @ V2)
        rV = (Vp - Vm) / (2 * h) - (-H_xx @ H2 - H_xp @ V2)
        return float(np.linalg.norm(np.vstack([rH, rV])) / (1.0 + np.linalg.norm(np.vstack([H2, V2]))))


def jform_reconstruct(frame1: JacobiFrame, K, D, t0, t_cap=None) -> ReconstructedFrame:
    """Other Jacobi solutions from ``frame1`` with Wronskian ``K``.

    ``t0 = inf`` caps the improper integral at ``t_cap`` (default: the end
    of ``frame1``) and records a tail estimate in ``tail_bound``.
    """
    if np.isinf(t0) and t_cap is None:
        t_cap = frame1.t1 if t0 > 0 else frame1.t0
    if np.isinf(t0) and t0 < 0:
        raise ConfigurationError("only t0 = +inf is supported as an improper base time")
    return ReconstructedFrame(frame1, K, D, t0, t_cap)
