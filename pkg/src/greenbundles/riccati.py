"""Riccati slopes of Jacobi frames, the coth comparison function and the
uniform a priori bound on symmetric Riccati solutions.

Slopes are always read off frames (``S = V H^-1``); the Riccati ODE itself
is never integrated, so solutions pass through blowups without trouble.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigurationError, InsufficientWindowError, PoleError
from .flow import JacobiFrame
from .lagrangian import BoundednessCertificate, Box, SAFETY_FACTOR

RANK_TOL = 1e-9
R_FLOOR = 1e-6


def _scaled_det(frame: JacobiFrame, t):
    Hm, Vm = frame.at(t)
    scale = np.linalg.norm(np.vstack([Hm, Vm]), 2)
    return np.linalg.det(Hm / scale)


def _near_vertical(Hm, Vm, rank_tol=RANK_TOL):
    scale = np.linalg.norm(np.vstack([Hm, Vm]), 2)
    return np.linalg.svd(Hm, compute_uv=False)[-1] < rank_tol * scale


def sample_times(frame: JacobiFrame, refine=4):
    """Integrator step times with ``refine - 1`` extra points per step."""
    ts = frame.step_times
    if refine <= 1 or ts.size < 2:
        return ts
    fr = np.linspace(0.0, 1.0, refine + 1)[:-1]
    out = (ts[:-1, None] + np.diff(ts)[:, None] * fr[None, :]).ravel()
    return np.append(out, ts[-1])


def det_crossings(frame: JacobiFrame, t_lo=None, t_hi=None, xtol=1e-12):
    """Times in the span where ``det H`` changes sign, located by brentq."""
    t_lo = frame.t0 if t_lo is None else t_lo
    t_hi = frame.t1 if t_hi is None else t_hi
    ts = sample_times(frame)
    ts = ts[(ts >= t_lo) & (ts <= t_hi)]
    ts = np.unique(np.concatenate([[t_lo], ts, [t_hi]]))
    vals = np.array([_scaled_det(frame, t) for t in ts])
    out = []
    for i in range(len(ts) - 1):
        a, b, fa, fb = ts[i], ts[i + 1], vals[i], vals[i + 1]
        if fa == 0.0:
            # exact zeros count only in the interior, with a sign change
            if i > 0 and vals[i - 1] * fb < 0:
                out.append(a)
            continue
        if fa * fb < 0:
            out.append(brentq(lambda t: _scaled_det(frame, t), a, b, xtol=xtol, rtol=1e-15))
    return sorted(set(float(t) for t in out))


@dataclass
class RiccatiSolution:
    """``S(t) = V(t) H(t)^-1`` on the maximal intervals between blowups."""

    frame: JacobiFrame
    blowup_times: list
    intervals: list
    rank_tol: float = RANK_TOL

    def S(self, t):
        """Slope at ``t``; all-NaN where the frame is (nearly) vertical."""
        Hm, Vm = self.frame.at(t)
        if _near_vertical(Hm, Vm, self.rank_tol):
            return np.full((Hm.shape[0],) * 2, np.nan)
        return np.linalg.solve(Hm.T, Vm.T).T

    def norm(self, t):
        S = self.S(t)
        return np.nan if np.isnan(S).any() else float(np.linalg.norm(S, 2))

    def symmetry_defect(self, t):
        S = self.S(t)
        return float(np.linalg.norm(S - S.T) / max(1.0, np.linalg.norm(S)))

    def residual(self, t, h=1e-5):
        """Relative residual of ``S' + S H_pp S + S H_px + H_xp S + H_xx``."""
        S = self.S(t)
        Sp, Sm = self.S(t + h), self.S(t - h)
        x, p = self.frame.base_state(t)
        H_px, H_pp, H_xx, H_xp = self.frame.orbit.ham.jacobi_blocks(x, p, t)
        r = (Sp - Sm) / (2 * h) + S @ H_pp @ S + S @ H_px + H_xp @ S + H_xx
        return float(np.linalg.norm(r) / (1.0 + np.linalg.norm(S) ** 2))

    def interval_of(self, t):
        for a, b in self.intervals:
            if a < t < b:
                return a, b
        return None


def solve_riccati(frame: JacobiFrame, rank_tol=RANK_TOL) -> RiccatiSolution:
    """Riccati solution carried by a square Lagrangian frame."""
    if frame.k != frame.dim:
        raise ConfigurationError("Riccati slopes need a square frame", k=frame.k, d=frame.dim)
    H0, V0 = frame.initial
    scale = max(1.0, np.linalg.norm(np.vstack([H0, V0])) ** 2)
    if np.linalg.norm(V0.T @ H0 - H0.T @ V0) > 1e-10 * scale:
        raise ConfigurationError("initial frame does not span a Lagrangian subspace")
    blowups = det_crossings(frame)
    # the frame start is a blowup when it is vertical there
    Hs, Vs = frame.at(frame.t_start)
    if _near_vertical(Hs, Vs, rank_tol) and not any(abs(b - frame.t_start) < 1e-9 for b in blowups):
        blowups = sorted(blowups + [frame.t_start])
    cuts = [frame.t0] + [b for b in blowups if frame.t0 < b < frame.t1] + [frame.t1]
    intervals = [(cuts[i], cuts[i + 1]) for i in range(len(cuts) - 1) if cuts[i + 1] > cuts[i]]
    return RiccatiSolution(frame, blowups, intervals, rank_tol)


def comparison_w(R, d, t):
    """``w(t) = R coth(R t - d)``."""
    arg = R * t - d
    if arg == 0.0:
        raise PoleError("comparison function has a pole", R=R, d=d, t=t)
    return R / np.tanh(arg)


def comparison_w_dot(R, d, t):
    """Analytic derivative ``-R^2 / sinh^2(R t - d)``."""
    arg = R * t - d
    if arg == 0.0:
        raise PoleError("comparison function has a pole", R=R, d=d, t=t)
    return -(R / np.sinh(arg)) ** 2


@dataclass
class RiccatiBound:
    """Constants of the uniform Riccati bound ``A = M R coth R + ||C||``."""

    b1: float
    b2: float
    M: float
    R: float
    C_norm: float
    D_max: float
    A_raw: float
    A: float
    safety: float = SAFETY_FACTOR
    heuristic: bool = True
    source: str = "grid"

    def to_dict(self):
        return {k: getattr(self, k) for k in
                ("b1", "b2", "M", "R", "C_norm", "D_max", "A_raw", "A", "safety", "heuristic", "source")}


def _R_coth_R(R):
    R = max(R, R_FLOOR)
    return R / np.tanh(R)


def _C(ham, x, p, t):
    H_px, H_pp, _, _ = ham.jacobi_blocks(x, p, t)
    return np.linalg.solve(H_pp, H_px)


def orbit_region(orbit, pad=0.25):
    """Box around the (lifted) orbit samples, padded by ``pad`` on every axis.

    Non-autonomous systems get a clock axis: one forcing period if periodic,
    otherwise the orbit's time span.
    """
    ts = orbit.step_times
    states = [orbit.state(t) for t in ts]
    xs = np.array([s[0] for s in states])
    ps = np.array([s[1] for s in states])
    xb = [(lo - pad, hi + pad) for lo, hi in zip(xs.min(0), xs.max(0))]
    pb = [(lo - pad, hi + pad) for lo, hi in zip(ps.min(0), ps.max(0))]
    td = orbit.ham.time_dependence
    tb = None
    if not td.autonomous:
        tb = (0.0, td.period) if td.kind == "periodic" else (float(ts[0]), float(ts[-1]))
    return Box(xb, pb, tb)


def riccati_bound(cert: BoundednessCertificate, grid_spec=None, fd_step=1e-5) -> RiccatiBound:
    """Sample ``C = H_pp^-1 H_px`` and ``D = H_xx - C^T H_pp C - C'`` over the region.

    ``C'`` is the derivative along the Hamiltonian vector field (clock
    included), by central differences.
    """
    ham = cert.ham
    if ham is None:
        raise ConfigurationError("certificate carries no hamiltonian")
    grid_spec = cert.grid_spec if grid_spec is None else grid_spec
    d = ham.dim
    c_max = 0.0
    d_max = 0.0
    for x, p, t in cert.region.grid(grid_spec):
        H_px, H_pp, H_xx, _ = ham.jacobi_blocks(x, p, t)
        C = np.linalg.solve(H_pp, H_px)
        X = ham.vector_field(x, p, t)
        h = fd_step
        zp = np.concatenate([x, p]) + h * X
        zm = np.concatenate([x, p]) - h * X
        C_dot = (_C(ham, zp[:d], zp[d:], t + h) - _C(ham, zm[:d], zm[d:], t - h)) / (2 * h)
        D = H_xx - C.T @ H_pp @ C - C_dot
        D = 0.5 * (D + D.T)
        c_max = max(c_max, np.linalg.norm(C, 2))
        d_max = max(d_max, np.max(np.abs(np.linalg.eigvalsh(D))))
    M_raw = 1.0 / cert.b2_raw
    R = max(np.sqrt(d_max / M_raw), R_FLOOR)
    A_raw = M_raw * _R_coth_R(R) + c_max
    return RiccatiBound(b1=cert.b1, b2=cert.b2, M=M_raw, R=float(R), C_norm=float(c_max),
                        D_max=float(d_max), A_raw=float(A_raw), A=float(A_raw * cert.safety),
                        safety=cert.safety)


def riccati_bound_from_constants(b1, b2, safety=SAFETY_FACTOR) -> RiccatiBound:
    """Worst-case bound using only ``b1``, ``b2`` (no sampling).

    ``||C|| <= b1/b2`` and ``||D||`` is bounded by products of ``b1`` and
    ``1/b2``; the result is nondecreasing in ``b1`` and nonincreasing in ``b2``.
    """
    if not (b1 >= 0 and b2 > 0):
        raise ConfigurationError("need b1 >= 0 and b2 > 0", b1=b1, b2=b2)
    M = 1.0 / b2
    c = b1 / b2
    # C' = -H_pp^-1 (dH_pp) H_pp^-1 H_px + H_pp^-1 dH_px along (X, 1), |X| <= b1
    c_dot = (b1 / b2 * c + b1 / b2) * (b1 + 1.0)
    d_max = b1 + b1 * c * c + c_dot
    R = max(np.sqrt(d_max / M), R_FLOOR)
    A_raw = M * _R_coth_R(R) + c
    return RiccatiBound(b1=float(b1), b2=float(b2), M=M, R=float(R), C_norm=float(c),
                        D_max=float(d_max), A_raw=float(A_raw), A=float(A_raw * safety),
                        safety=safety, source="constants")


@dataclass
class BoundReport:
    passed: bool
    A: float
    A_raw: float
    windows: list = field(default_factory=list)
    extended_per_interval: bool = False

    def to_dict(self):
        return {"passed": self.passed, "A": self.A, "A_raw": self.A_raw,
                "windows": self.windows, "extended_per_interval": self.extended_per_interval}


def verify_bound(sol: RiccatiSolution, bound: RiccatiBound, per_unit=200) -> BoundReport:
    """Compare ``max ||S||`` on each trimmed interval ``]a+1, b-1[`` with ``A``."""
    windows = []
    for a, b in sol.intervals:
        if b - a <= 2.0:
            continue
        lo, hi = a + 1.0, b - 1.0
        n = max(int(per_unit * (hi - lo)), 10)
        ts = np.linspace(lo, hi, n + 1)[1:-1]
        steps = sol.frame.step_times
        ts = np.union1d(ts, steps[(steps > lo) & (steps < hi)])
        norms = np.array([sol.norm(t) for t in ts])
        ok = ~np.isnan(norms)
        if not ok.any():
            continue
        i = int(np.nanargmax(norms))
        worst = float(norms[i])
        windows.append({"interval": [a, b], "trimmed": [lo, hi], "max_norm": worst,
                        "argmax_t": float(ts[i]), "passed": bool(worst < bound.A)})
    if not windows:
        raise InsufficientWindowError("no interval of definition longer than 2",
                                      intervals=[list(iv) for iv in sol.intervals])
    return BoundReport(passed=all(w["passed"] for w in windows), A=bound.A, A_raw=bound.A_raw,
                       windows=windows, extended_per_interval=len(sol.intervals) > 1)
