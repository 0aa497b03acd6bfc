"""Second variation of the action: the index form on fields along an orbit.

Two evaluations are provided.  ``index_form_direct`` integrates

    xi'^T L_vv eta' + xi'^T L_vx eta + xi^T L_xv eta' + xi^T L_xx eta

and ``index_form_factorized`` integrates

    (xi' - G xi)^T H_pp^-1 (eta' - G eta),   G = H_px + H_pp S,

plus the boundary terms ``xi^T S eta`` on each cell, where ``S`` is the
slope of a Lagrangian frame that is non-vertical on the cell.  Cells are cut
at the singular times of the supplied frame and bridged by auxiliary
frames that start horizontal there.

Positivity on the test space uses P1 finite elements and a dense
generalized symmetric eigensolve.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg

from .conjugate import find_conjugate_points
from .errors import ConfigurationError, DegenerateFrameError
from .flow import (
    DEFAULT_TOL,
    JacobiFrame,
    OrbitSegment,
    PhasePoint,
    horizontal_start,
    integrate_jacobi_frame,
    integrate_orbit,
    vertical_start,
)
from .riccati import det_crossings, sample_times

GL_POINTS = 10
QUAD_CELL = 0.25
SIGN_FLOOR = 1e-9
SINGULAR_TOL = 1e-6


# ---------------------------------------------------------------------------
# Vector fields along an orbit


class Field:
    """A piecewise-C^1 vector field ``t -> R^d`` on ``[t0, t1]``."""

    breakpoints: np.ndarray = np.array([])

    def value(self, t):
        raise NotImplementedError

    def deriv(self, t):
        raise NotImplementedError

    def __add__(self, other):
        return FieldCombination([(1.0, self), (1.0, other)])

    def __rmul__(self, c):
        return FieldCombination([(float(c), self)])

    def __neg__(self):
        return FieldCombination([(-1.0, self)])

    def __sub__(self, other):
        return FieldCombination([(1.0, self), (-1.0, other)])


class PiecewiseLinearField(Field):
    """Nodal values ``values[i]`` at ``nodes[i]``, linear in between."""

    def __init__(self, nodes, values):
        self.nodes = np.asarray(nodes, float)
        vals = np.asarray(values, float)
        self.values = vals.reshape(len(self.nodes), -1)
        if np.any(np.diff(self.nodes) <= 0):
            raise ConfigurationError("nodes must be strictly increasing")
        self.breakpoints = self.nodes
        self._slopes = np.diff(self.values, axis=0) / np.diff(self.nodes)[:, None]

    @property
    def span(self):
        return self.nodes[0], self.nodes[-1]

    def value(self, t):
        return np.array([np.interp(t, self.nodes, self.values[:, i], left=0.0, right=0.0)
                         for i in range(self.values.shape[1])])

    def deriv(self, t):
        if t < self.nodes[0] or t > self.nodes[-1]:
            return np.zeros(self.values.shape[1])
        i = int(np.clip(np.searchsorted(self.nodes, t, side="right") - 1, 0, len(self.nodes) - 2))
        return self._slopes[i].copy()


class CallableField(Field):
    def __init__(self, f: Callable, df: Callable, breakpoints: Sequence[float] = ()):
        self._f, self._df = f, df
        self.breakpoints = np.asarray(breakpoints, float)

    def value(self, t):
        return np.atleast_1d(np.asarray(self._f(t), float))

    def deriv(self, t):
        return np.atleast_1d(np.asarray(self._df(t), float))


class FieldCombination(Field):
    def __init__(self, terms):
        self.terms = terms
        self.breakpoints = np.unique(np.concatenate([np.asarray(f.breakpoints, float)
                                                     for _, f in terms] or [np.array([])]))

    def value(self, t):
        return sum(c * f.value(t) for c, f in self.terms)

    def deriv(self, t):
        return sum(c * f.deriv(t) for c, f in self.terms)


class FrameField(Field):
    """Horizontal part ``H(t) u`` of a frame column combination, cut off
    outside ``[a, b]`` (a broken Jacobi field)."""

    def __init__(self, frame: JacobiFrame, u, a, b, include_end=True):
        self.frame, self.u = frame, np.asarray(u, float).reshape(-1)
        self.a, self.b = float(a), float(b)
        self.include_end = include_end
        self.breakpoints = np.array([self.a, self.b])
        self._ham = frame.orbit.ham

    def _outside(self, t):
        return t < self.a or t > self.b or (t == self.b and not self.include_end)

    def value(self, t):
        if self._outside(t):
            return np.zeros(self.frame.dim)
        return self.frame.H(t) @ self.u

    def deriv(self, t):
        if self._outside(t):
            return np.zeros(self.frame.dim)
        Hm, Vm = self.frame.at(t)
        x, p = self.frame.base_state(t)
        H_px, H_pp, _, _ = self._ham.jacobi_blocks(x, p, t)
        return (H_px @ Hm + H_pp @ Vm) @ self.u


# ---------------------------------------------------------------------------
# Quadrature


_GL_CACHE = {}


def _gauss(n):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def _quad_nodes(cuts, n=GL_POINTS, h=QUAD_CELL):
    """Gauss-Legendre nodes and weights on every sub-cell between ``cuts``."""
    xg, wg = _gauss(n)
    ts, ws = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b <= a:
            continue
        m = max(1, int(np.ceil((b - a) / h)))
        edges = np.linspace(a, b, m + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            ts.append(0.5 * (hi - lo) * xg + 0.5 * (hi + lo))
            ws.append(0.5 * (hi - lo) * wg)
    if not ts:
        return np.array([]), np.array([])
    return np.concatenate(ts), np.concatenate(ws)


def _cuts(t0, t1, *fields, extra=()):
    pts = [t0, t1, *extra]
    for f in fields:
        bp = np.asarray(f.breakpoints, float)
        pts.extend(bp[(bp > t0) & (bp < t1)])
    return np.unique(np.asarray(pts, float))


def _span_of(orbit, span):
    if span is None:
        return orbit.t0, orbit.t1
    a, b = float(span[0]), float(span[1])
    if a < orbit.t0 - 1e-12 or b > orbit.t1 + 1e-12 or a >= b:
        raise ConfigurationError("integration span must lie inside the orbit", span=[a, b])
    return a, b


def index_form_direct(orbit: OrbitSegment, xi: Field, eta: Field, span=None,
                      n_gauss=GL_POINTS) -> float:
    """Quadrature of the second-variation integrand over ``span``."""
    a, b = _span_of(orbit, span)
    ham = orbit.ham
    ts, ws = _quad_nodes(_cuts(a, b, xi, eta), n_gauss)
    total = 0.0
    for t, w in zip(ts, ws):
        x, p = orbit.state(t)
        L_vv, L_vx, L_xx = ham.lagrangian_blocks(x, p, t)
        u, du = xi.value(t), xi.deriv(t)
        v, dv = eta.value(t), eta.deriv(t)
        total += w * (du @ L_vv @ dv + du @ L_vx @ v + u @ L_vx.T @ dv + u @ L_xx @ v)
    return float(total)


def first_variation(orbit: OrbitSegment, xi: Field, span=None, n_gauss=GL_POINTS):
    """``(int L_x xi + L_v xi', [L_v . xi]_a^b)``; equal along solutions."""
    a, b = _span_of(orbit, span)
    ham = orbit.ham
    ts, ws = _quad_nodes(_cuts(a, b, xi), n_gauss)
    total = 0.0
    for t, w in zip(ts, ws):
        x, p = orbit.state(t)
        # L_v = p and L_x = -H_x at Legendre-corresponding points
        total += w * (-ham.H_x(x, p, t) @ xi.value(t) + p @ xi.deriv(t))
    xb, pb = orbit.state(b)
    xa, pa = orbit.state(a)
    boundary = pb @ xi.value(b) - pa @ xi.value(a)
    return float(total), float(boundary)


# ---------------------------------------------------------------------------
# Factorized evaluation


@dataclass
class Cell:
    a: float
    b: float
    frame: JacobiFrame
    auxiliary: bool = False


def _sigma_ratio(frame, t):
    Hm, Vm = frame.at(t)
    scale = np.linalg.norm(np.vstack([Hm, Vm]), 2)
    return np.linalg.svd(Hm / scale, compute_uv=False)[-1]


def singular_times(frame: JacobiFrame, a, b, tol=SINGULAR_TOL):
    """Times in ``[a, b]`` where the frame meets the vertical."""
    out = list(det_crossings(frame, a, b))
    for t in (a, b):
        if _sigma_ratio(frame, t) < tol:
            out.append(t)
    if frame.dim > 1:
        ts = sample_times(frame)
        ts = ts[(ts >= a) & (ts <= b)]
        sig = np.array([_sigma_ratio(frame, t) for t in ts])
        for i in range(1, len(ts) - 1):
            if sig[i] <= sig[i - 1] and sig[i] <= sig[i + 1] and sig[i] < tol:
                out.append(float(ts[i]))
    out.sort()
    merged = []
    for t in out:
        if not merged or t - merged[-1] > 1e-8:
            merged.append(t)
    return merged


def partition(orbit: OrbitSegment, frame: JacobiFrame, a, b, tol=None):
    """Cells covering ``[a, b]`` on which a frame is non-vertical."""
    tol = orbit.tol if tol is None else tol
    if frame.t0 > a + 1e-12 or frame.t1 < b - 1e-12:
        raise ConfigurationError("frame does not cover the span", span=[a, b],
                                 frame=[frame.t0, frame.t1])
    sing = singular_times(frame, a, b)
    if not sing:
        return [Cell(a, b, frame)]
    d = orbit.dim
    cells = []
    bounds = []
    for i, s in enumerate(sing):
        left = sing[i - 1] if i > 0 else a
        right = sing[i + 1] if i + 1 < len(sing) else b
        delta = 0.25 * min(s - left if s > a else np.inf, right - s if s < b else np.inf)
        if not np.isfinite(delta):
            delta = 0.25 * (b - a)
        lo, hi = max(a, s - delta), min(b, s + delta)
        aux = integrate_jacobi_frame(orbit, horizontal_start(d), tol, t_start=s, t_span=(lo, hi))
        while singular_times(aux, lo, hi):
            delta *= 0.5
            if delta < 1e-6:
                raise DegenerateFrameError("no auxiliary frame is non-vertical near a blowup", t=s)
            lo, hi = max(a, s - delta), min(b, s + delta)
        bounds.append((lo, hi, aux))
    cursor = a
    for lo, hi, aux in bounds:
        if lo > cursor:
            cells.append(Cell(cursor, lo, frame))
        cells.append(Cell(lo, hi, aux, auxiliary=True))
        cursor = hi
    if cursor < b:
        cells.append(Cell(cursor, b, frame))
    for c in cells:
        if not c.auxiliary:
            mid = 0.5 * (c.a + c.b)
            if _sigma_ratio(c.frame, mid) < SINGULAR_TOL:
                raise DegenerateFrameError("frame is vertical on a whole cell", cell=[c.a, c.b])
    return cells


def _slope(frame, t):
    Hm, Vm = frame.at(t)
    return np.linalg.solve(Hm.T, Vm.T).T


def index_form_factorized(orbit: OrbitSegment, frame: Optional[JacobiFrame], xi: Field, eta: Field,
                          span=None, n_gauss=GL_POINTS, cells=None) -> float:
    """Index form through Riccati slopes of ``frame`` (vertical at ``span[0]`` if None)."""
    a, b = _span_of(orbit, span)
    ham = orbit.ham
    if frame is None:
        frame = integrate_jacobi_frame(orbit, vertical_start(orbit.dim), orbit.tol,
                                       t_start=a, t_span=(a, b))
    if cells is None:
        cells = partition(orbit, frame, a, b)
    total = 0.0
    for cell in cells:
        ts, ws = _quad_nodes(_cuts(cell.a, cell.b, xi, eta), n_gauss)
        for t, w in zip(ts, ws):
            x, p = orbit.state(t)
            H_px, H_pp, _, _ = ham.jacobi_blocks(x, p, t)
            S = _slope(cell.frame, t)
            G = H_px + H_pp @ S
            r1 = xi.deriv(t) - G @ xi.value(t)
            r2 = eta.deriv(t) - G @ eta.value(t)
            total += w * (r1 @ np.linalg.solve(H_pp, r2))
        for t, sign in ((cell.b, 1.0), (cell.a, -1.0)):
            u, v = xi.value(t), eta.value(t)
            if np.any(u) and np.any(v):
                total += sign * (u @ _slope(cell.frame, t) @ v)
    return float(total)


# ---------------------------------------------------------------------------
# Finite elements


class TestSpace:
    """P1 hat functions on a uniform mesh of ``[t0, t0 + T]``, zero at both ends.

    Coefficients are ordered node-major: ``c[(j - 1) * d + i]`` is component
    ``i`` at interior node ``j``.  With ``midpoint_constraint`` the space is
    cut down to ``<xi(T/2), gamma'(T/2)> = 0``.
    """

    __test__ = False  # keep pytest from collecting this class

    def __init__(self, orbit: OrbitSegment, T, n_elem, t0=None, midpoint_constraint=False):
        self.orbit = orbit
        self.t0 = orbit.t0 if t0 is None else float(t0)
        self.T = float(T)
        self.n_elem = int(n_elem)
        if self.n_elem < 2:
            raise ConfigurationError("need at least two elements", n_elem=n_elem)
        if self.t0 < orbit.t0 - 1e-12 or self.t0 + self.T > orbit.t1 + 1e-9:
            raise ConfigurationError("test space leaves the orbit span")
        self.d = orbit.dim
        self.nodes = self.t0 + np.linspace(0.0, self.T, self.n_elem + 1)
        self.h = self.T / self.n_elem
        self.midpoint_constraint = bool(midpoint_constraint)
        self.constraint = None
        self.basis = None  # columns span the constrained coefficient space
        if self.midpoint_constraint:
            self.constraint = self._midpoint_functional()
            if np.linalg.norm(self.constraint) > 0:
                self.basis = scipy.linalg.null_space(self.constraint[None, :])

    @property
    def n_dof(self):
        return (self.n_elem - 1) * self.d

    def _midpoint_functional(self):
        tm = self.t0 + 0.5 * self.T
        vel = self.orbit.velocity(tm)
        row = np.zeros(self.n_dof)
        s = (tm - self.t0) / self.h
        j = int(np.floor(s + 1e-12))
        lam = s - j
        for node, wgt in ((j, 1.0 - lam), (j + 1, lam)):
            if 1 <= node <= self.n_elem - 1 and wgt > 0:
                row[(node - 1) * self.d:node * self.d] += wgt * vel
        return row

    def field(self, coeffs) -> PiecewiseLinearField:
        c = np.asarray(coeffs, float)
        if self.basis is not None and c.size == self.basis.shape[1]:
            c = self.basis @ c
        vals = np.zeros((self.n_elem + 1, self.d))
        vals[1:-1] = c.reshape(self.n_elem - 1, self.d)
        return PiecewiseLinearField(self.nodes, vals)

    def random_field(self, rng, constrained=True):
        n = self.basis.shape[1] if (constrained and self.basis is not None) else self.n_dof
        return self.field(rng.standard_normal(n))

    def assemble(self):
        """Stiffness ``K`` (index form) and mass ``M`` (L2 Gram) with GL3 per element."""
        d, n = self.d, self.n_elem
        ham = self.orbit.ham
        xg, wg = _gauss(3)
        N = (n + 1) * d
        K = np.zeros((N, N))
        M = np.zeros((N, N))
        for e in range(n):
            ta, tb = self.nodes[e], self.nodes[e + 1]
            for xq, wq in zip(xg, wg):
                t = 0.5 * (tb - ta) * xq + 0.5 * (tb + ta)
                w = 0.5 * (tb - ta) * wq
                x, p = self.orbit.state(t)
                L_vv, L_vx, L_xx = ham.lagrangian_blocks(x, p, t)
                phi = np.array([(tb - t) / self.h, (t - ta) / self.h])
                dphi = np.array([-1.0 / self.h, 1.0 / self.h])
                for i in range(2):
                    for j in range(2):
                        blk = (dphi[i] * dphi[j] * L_vv + dphi[i] * phi[j] * L_vx
                               + phi[i] * dphi[j] * L_vx.T + phi[i] * phi[j] * L_xx)
                        ri, rj = (e + i) * d, (e + j) * d
                        K[ri:ri + d, rj:rj + d] += w * blk
                        M[ri:ri + d, rj:rj + d] += w * phi[i] * phi[j] * np.eye(d)
        K = K[d:-d, d:-d]
        M = M[d:-d, d:-d]
        K = 0.5 * (K + K.T)
        if self.basis is not None:
            K = self.basis.T @ K @ self.basis
            M = self.basis.T @ M @ self.basis
        return K, M


@dataclass
class IndexSpectrum:
    a_min: float
    witness: np.ndarray
    scale: float
    floor: float

    @property
    def sign(self):
        if self.a_min > self.floor:
            return 1
        if self.a_min < -self.floor:
            return -1
        return 0


def smallest_eigenpair(space: TestSpace) -> IndexSpectrum:
    K, M = space.assemble()
    w, v = scipy.linalg.eigh(K, M, subset_by_index=[0, 0])
    vec = v[:, 0]
    # deterministic sign: first significant entry positive
    k = int(np.argmax(np.abs(vec) > 1e-8 * np.abs(vec).max()))
    if vec[k] < 0:
        vec = -vec
    scale = float(np.max(np.abs(np.diag(K))) / np.max(np.abs(np.diag(M))))
    return IndexSpectrum(float(w[0]), vec, scale, SIGN_FLOOR * scale)


@dataclass
class IndexVerdict:
    """``disconjugate`` is True/False, or None when ``|a_min|`` is below the floor."""

    disconjugate: Optional[bool]
    a_min: float
    floor: float
    T: float
    mesh: int
    conjugate_check: Optional[bool] = None
    conjugate_times: list = field(default_factory=list)

    @property
    def agrees(self):
        return self.conjugate_check is None or self.disconjugate == self.conjugate_check

    def to_dict(self):
        return {"disconjugate": self.disconjugate, "a_min": self.a_min, "floor": self.floor,
                "T": self.T, "mesh": self.mesh, "conjugate_check": self.conjugate_check,
                "conjugate_times": [[t, m] for t, m in self.conjugate_times]}


def disconjugacy_via_index(orbit: OrbitSegment, T, mesh=256, t0=None,
                           midpoint_constraint=False, cross_check=True) -> IndexVerdict:
    """Sign of the index form on the test space of ``[t0, t0 + T]``."""
    space = TestSpace(orbit, T, mesh, t0, midpoint_constraint)
    spec = smallest_eigenpair(space)
    verdict = {1: True, -1: False, 0: None}[spec.sign]
    out = IndexVerdict(verdict, spec.a_min, spec.floor, float(T), int(mesh))
    if cross_check:
        rep = find_conjugate_points(orbit, (space.t0, space.t0 + space.T))
        # a conjugate time exactly at the window end leaves I only semidefinite
        inner = [(t, m) for t, m in rep.conjugate_times if t < space.t0 + space.T - 1e-9]
        out.conjugate_check = not inner
        out.conjugate_times = rep.conjugate_times
    return out


@dataclass
class PositivityReport:
    a_min: list
    T_scanned: list
    uniform_a: float
    witness: Optional[np.ndarray]
    cells: list
    a_inf: float
    trend_c: float
    bounded_below: bool
    warnings: list = field(default_factory=list)

    def to_dict(self):
        return {"uniform_a": self.uniform_a, "T_scanned": self.T_scanned, "a_min": self.a_min,
                "a_inf": self.a_inf, "trend_c": self.trend_c, "bounded_below": self.bounded_below,
                "cells": self.cells, "warnings": self.warnings}


def _scan_cell(args):
    ham, point, T, mesh, midpoint, tol = args
    orbit = integrate_orbit(ham, point, (point.clock, point.clock + T), tol)
    spec = smallest_eigenpair(TestSpace(orbit, T, mesh, point.clock, midpoint))
    return spec


def uniform_positivity_scan(ham, sampler, T_list, mesh=256, midpoint_constraint=False,
                            tol=DEFAULT_TOL, workers=1) -> PositivityReport:
    """Smallest index-form eigenvalue over sample points x horizons.

    ``sampler`` is an iterable of phase points or a callable returning one.
    The trend ``a_min(T) ~ a_inf + c / T^2`` is fitted to the per-T minima;
    ``bounded_below`` holds when ``a_inf`` clears the sign floor.
    """
    points = list(sampler() if callable(sampler) else sampler)
    if not points:
        raise ConfigurationError("sampler produced no points")
    T_list = [float(T) for T in T_list]
    jobs = [(ham, pt, T, mesh, midpoint_constraint, tol) for pt in points for T in T_list]
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_scan_cell, jobs))  # map keeps job order
    else:
        results = [_scan_cell(j) for j in jobs]
    cells, warnings = [], []
    per_T = {T: np.inf for T in T_list}
    best = None
    for (_, pt, T, *_), spec in zip(jobs, results):
        cells.append({"point": pt.to_dict(), "T": T, "a_min": spec.a_min, "sign": spec.sign})
        if spec.sign == 0:
            warnings.append("indeterminate sign at T=%g" % T)
        per_T[T] = min(per_T[T], spec.a_min)
        if best is None or spec.a_min < best.a_min:
            best = spec
    a_vals = [per_T[T] for T in T_list]
    A = np.column_stack([np.ones(len(T_list)), 1.0 / np.asarray(T_list) ** 2])
    if len(T_list) >= 2:
        coef = np.linalg.lstsq(A, np.asarray(a_vals), rcond=None)[0]
    else:
        coef = np.array([a_vals[0], 0.0])
    return PositivityReport(
        a_min=a_vals, T_scanned=T_list, uniform_a=float(min(a_vals)), witness=best.witness,
        cells=cells, a_inf=float(coef[0]), trend_c=float(coef[1]),
        bounded_below=bool(coef[0] > SIGN_FLOOR * max(1.0, best.scale) and min(a_vals) > 0),
        warnings=warnings,
    )


# ---------------------------------------------------------------------------
# Bump-field bound and the lower bound on Y


BUMP_L2 = 3.0 / 8.0          # int cos^4(pi t) over [-1/2, 1/2]
BUMP_DERIV_L2 = np.pi ** 2 / 2.0  # int (pi sin(2 pi t))^2 over [-1/2, 1/2]


def bump_field(center, direction):
    """``Z(t) = cos^2(pi (t - center)) v`` on ``|t - center| <= 1/2``, else 0."""
    v = np.asarray(direction, float).reshape(-1)
    v = v / np.linalg.norm(v)

    def f(t):
        s = t - center
        return np.cos(np.pi * s) ** 2 * v if abs(s) <= 0.5 else 0.0 * v

    def df(t):
        s = t - center
        return -np.pi * np.sin(2 * np.pi * s) * v if abs(s) <= 0.5 else 0.0 * v

    return CallableField(f, df, (center - 0.5, center, center + 0.5))


def bump_bound(lagrangian_c2):
    """``B = 4 ||L||_{C^2} ||(Z, Z')||^2_{L^2}`` for the unit cos^2 bump."""
    return 4.0 * float(lagrangian_c2) * (BUMP_L2 + BUMP_DERIV_L2)


def y_lower_bound(A, B):
    """``(2 A B)^{-1/2}``."""
    if A <= 0 or B <= 0:
        raise ConfigurationError("A and B must be positive", A=A, B=B)
    return float((2.0 * A * B) ** -0.5)


def broken_jacobi_field(ham, point: PhasePoint, T, extension=2.0, tol=DEFAULT_TOL, v0=None):
    """Spliced field: ``Y(t) v0`` on ``[0, T]``, then the backward vertical
    solution from ``T + extension``, matched at ``T``.

    Returns ``(field, orbit, S1, S2, J_T)`` where ``S1``/``S2`` are the two
    slopes at ``T``; the index form of the field is ``J_T^T (S1 - S2) J_T``.
    """
    d = ham.dim
    c = point.clock
    v0 = np.eye(d)[0] if v0 is None else np.asarray(v0, float)
    orbit = integrate_orbit(ham, point, (c, c + T + extension), tol)
    f1 = integrate_jacobi_frame(orbit, vertical_start(d), tol, t_start=c, t_span=(c, c + T))
    f2 = integrate_jacobi_frame(orbit, vertical_start(d), tol, t_start=c + T + extension,
                                t_span=(c + T, c + T + extension))
    J_T = f1.H(c + T) @ v0
    w0 = np.linalg.solve(f2.H(c + T), J_T)
    fld = FrameField(f1, v0, c, c + T, include_end=False) + FrameField(f2, w0, c + T, c + T + extension)
    S1 = _slope(f1, c + T)
    S2 = _slope(f2, c + T)
    return fld, orbit, S1, S2, J_T
