"""Convex Lagrangians and Hamiltonians on flat configuration spaces.

Configuration spaces are products of circles (period ``2*pi``) and lines, so
ordinary partial derivatives play the role of covariant ones.  Models are
plain containers of callables; all derivative blocks use the convention

    H_px[i, j] = d^2 H / dp_i dx_j,   H_xp = H_px.T,
    L_xv[i, j] = d^2 L / dx_i dv_j,   L_vx = L_xv.T.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    ConfigurationError,
    ConvexityViolation,
    NotConvexError,
    TransformFailure,
)

TWO_PI = 2.0 * np.pi

#: Newton settings for the inverse Legendre map.
NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50

#: Heuristic inflation applied to grid-sampled constants.
SAFETY_FACTOR = 1.1


@dataclass(frozen=True)
class ConfigSpace:
    """Flat configuration space: ``dim`` axes, each periodic or a line."""

    dim: int
    periodic: tuple = ()

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ConfigurationError("dim must be >= 1", dim=self.dim)
        per = tuple(bool(p) for p in self.periodic) or (False,) * int(self.dim)
        if len(per) != int(self.dim):
            raise ConfigurationError(
                "periodicity flags must match dim", dim=self.dim, periodic=list(per)
            )
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "periodic", per)

    @classmethod
    def torus(cls, dim):
        return cls(dim, (True,) * dim)

    @classmethod
    def line(cls, dim):
        return cls(dim, (False,) * dim)

    def reduce(self, x):
        """Map coordinates on periodic axes into ``[0, 2*pi)``."""
        x = np.asarray(x, dtype=float)
        per = np.asarray(self.periodic)
        out = np.where(per, np.mod(x, TWO_PI), x)
        # mod can return exactly 2*pi for tiny negative inputs
        return np.where(per & (out >= TWO_PI), 0.0, out)

    def difference(self, x, y):
        """Shortest displacement ``y - x`` (wrapped on periodic axes)."""
        dx = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
        per = np.asarray(self.periodic)
        wrapped = (dx + np.pi) % TWO_PI - np.pi
        return np.where(per, wrapped, dx)


@dataclass(frozen=True)
class TimeDependence:
    """``autonomous``, ``periodic`` (with ``period``) or ``general``."""

    kind: str = "autonomous"
    period: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("autonomous", "periodic", "general"):
            raise ConfigurationError("unknown time dependence", kind=self.kind)
        if self.kind == "periodic" and not (self.period and self.period > 0):
            raise ConfigurationError("periodic time dependence needs period > 0")

    @property
    def autonomous(self):
        return self.kind == "autonomous"

    @classmethod
    def periodic_in(cls, period):
        return cls("periodic", float(period))


AUTONOMOUS = TimeDependence()


def _a(x):
    return np.asarray(x, dtype=float)


def _vec(x, d):
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (d,):
        raise ConfigurationError("expected a vector of length %d" % d, got=list(x.shape))
    return x


class LagrangianModel:
    """A fiberwise convex Lagrangian ``L(x, v, t)`` with analytic derivatives.

    ``b`` is the declared convexity constant: ``L_vv >= b I``.  ``b = 0``
    means "positive definite, no uniform constant declared".
    """

    def __init__(
        self,
        space: ConfigSpace,
        L: Callable,
        L_x: Callable,
        L_v: Callable,
        L_xx: Callable,
        L_xv: Callable,
        L_vv: Callable,
        b: float = 0.0,
        time_dependence: TimeDependence = AUTONOMOUS,
        name: str = "lagrangian",
    ):
        self.space = space
        self._L, self._L_x, self._L_v = L, L_x, L_v
        self._L_xx, self._L_xv, self._L_vv = L_xx, L_xv, L_vv
        self.b = float(b)
        self.time_dependence = time_dependence
        self.name = name

    @property
    def dim(self):
        return self.space.dim

    def L(self, x, v, t=0.0):
        return float(self._L(_a(x), _a(v), t))

    def L_x(self, x, v, t=0.0):
        return np.asarray(self._L_x(_a(x), _a(v), t), dtype=float).reshape(self.dim)

    def L_v(self, x, v, t=0.0):
        return np.asarray(self._L_v(_a(x), _a(v), t), dtype=float).reshape(self.dim)

    def L_xx(self, x, v, t=0.0):
        return np.asarray(self._L_xx(_a(x), _a(v), t), dtype=float).reshape(self.dim, self.dim)

    def L_xv(self, x, v, t=0.0):
        return np.asarray(self._L_xv(_a(x), _a(v), t), dtype=float).reshape(self.dim, self.dim)

    def L_vx(self, x, v, t=0.0):
        return self.L_xv(x, v, t).T

    def L_vv(self, x, v, t=0.0):
        return np.asarray(self._L_vv(_a(x), _a(v), t), dtype=float).reshape(self.dim, self.dim)

    def check_convex(self, x, v, t=0.0):
        """Raise :class:`ConvexityViolation` unless ``L_vv`` is positive definite."""
        lam = np.linalg.eigvalsh(self.L_vv(x, v, t))[0]
        floor = self.b if self.b > 0 else 0.0
        if lam <= 0.0 or lam < floor * (1.0 - 1e-12):
            raise ConvexityViolation(
                "L_vv not positive definite at query point",
                x=np.asarray(x), v=np.asarray(v), t=t, min_eig=lam, b=self.b,
            )
        return lam

    def __repr__(self):
        return "LagrangianModel(%s, dim=%d)" % (self.name, self.dim)


class HamiltonianModel:
    """A fiberwise convex Hamiltonian ``H(x, p, t)`` with analytic derivatives."""

    def __init__(
        self,
        space: ConfigSpace,
        H: Callable,
        H_x: Callable,
        H_p: Callable,
        H_xx: Callable,
        H_xp: Callable,
        H_pp: Callable,
        time_dependence: TimeDependence = AUTONOMOUS,
        source: str = "analytic",
        lagrangian: Optional[LagrangianModel] = None,
        name: str = "hamiltonian",
    ):
        self.space = space
        self._H, self._H_x, self._H_p = H, H_x, H_p
        self._H_xx, self._H_xp, self._H_pp = H_xx, H_xp, H_pp
        self.time_dependence = time_dependence
        self.source = source
        self.lagrangian = lagrangian
        self.name = name

    @property
    def dim(self):
        return self.space.dim

    @property
    def autonomous(self):
        return self.time_dependence.autonomous

    def H(self, x, p, t=0.0):
        return float(self._H(_a(x), _a(p), t))

    def H_x(self, x, p, t=0.0):
        return np.asarray(self._H_x(_a(x), _a(p), t), dtype=float).reshape(self.dim)

    def H_p(self, x, p, t=0.0):
        return np.asarray(self._H_p(_a(x), _a(p), t), dtype=float).reshape(self.dim)

    def H_xx(self, x, p, t=0.0):
        return np.asarray(self._H_xx(_a(x), _a(p), t), dtype=float).reshape(self.dim, self.dim)

    def H_xp(self, x, p, t=0.0):
        return np.asarray(self._H_xp(_a(x), _a(p), t), dtype=float).reshape(self.dim, self.dim)

    def H_px(self, x, p, t=0.0):
        return self.H_xp(x, p, t).T

    def H_pp(self, x, p, t=0.0):
        return np.asarray(self._H_pp(_a(x), _a(p), t), dtype=float).reshape(self.dim, self.dim)

    def vector_field(self, x, p, t=0.0):
        """Hamiltonian vector field ``X = (H_p, -H_x)`` as a ``2d`` vector."""
        return np.concatenate([self.H_p(x, p, t), -self.H_x(x, p, t)])

    def jacobi_blocks(self, x, p, t=0.0):
        """Return ``(H_px, H_pp, H_xx, H_xp)`` at one point."""
        H_xp = self.H_xp(x, p, t)
        return H_xp.T, self.H_pp(x, p, t), self.H_xx(x, p, t), H_xp

    def lagrangian_blocks(self, x, p, t=0.0):
        """``(L_vv, L_vx, L_xx)`` at the Legendre-corresponding point.

        Uses the attached Lagrangian when there is one, otherwise the block
        identities ``L_vv = H_pp^-1``, ``H_px + H_pp L_vx = 0`` and
        ``H_xx + H_xp L_vx = -L_xx``.
        """
        if self.lagrangian is not None:
            v = self.H_p(x, p, t)
            lag = self.lagrangian
            return lag.L_vv(x, v, t), lag.L_vx(x, v, t), lag.L_xx(x, v, t)
        H_px, H_pp, H_xx, H_xp = self.jacobi_blocks(x, p, t)
        L_vv = np.linalg.inv(H_pp)
        L_vx = -L_vv @ H_px
        L_xx = -H_xx - H_xp @ L_vx
        return L_vv, L_vx, 0.5 * (L_xx + L_xx.T)

    def __repr__(self):
        return "HamiltonianModel(%s, dim=%d, source=%s)" % (self.name, self.dim, self.source)


# ---------------------------------------------------------------------------
# Legendre transform


def inverse_legendre(lag: LagrangianModel, x, p, t=0.0, v0=None,
                     tol=NEWTON_TOL, max_iter=NEWTON_MAX_ITER):
    """Solve ``L_v(x, v, t) = p`` for ``v`` by damped Newton iteration.

    Eigenvalues of ``L_vv`` are floored at the convexity constant ``b``.
    """
    d = lag.dim
    x, p = _vec(x, d), _vec(p, d)
    v = p.copy() if v0 is None else _vec(v0, d).copy()
    scale = 1.0 + np.linalg.norm(p)
    F = lag.L_v(x, v, t) - p
    res = np.linalg.norm(F)
    for it in range(max_iter):
        if res <= tol * scale:
            return v
        w, Q = np.linalg.eigh(lag.L_vv(x, v, t))
        floor = max(lag.b, 1e-12 * max(1.0, abs(w[-1])))
        w = np.maximum(w, floor)
        step = -Q @ ((Q.T @ F) / w)
        alpha = 1.0
        while True:
            v_new = v + alpha * step
            F_new = lag.L_v(x, v_new, t) - p
            res_new = np.linalg.norm(F_new)
            if res_new < (1.0 - 1e-4 * alpha) * res or alpha < 1e-10:
                break
            alpha *= 0.5
        v, F, res = v_new, F_new, res_new
    if res <= tol * scale:
        return v
    raise TransformFailure(
        "inverse Legendre map did not converge",
        x=x, p=p, t=t, residual=res, iterations=max_iter,
    )


def legendre_transform(lag: LagrangianModel, x, v, t=0.0):
    """``(x, v, t) -> (x, p, t)`` with ``p = L_v(x, v, t)``."""
    d = lag.dim
    x, v = _vec(x, d), _vec(v, d)
    lag.check_convex(x, v, t)
    return x, lag.L_v(x, v, t), float(t)


def energy(lag: LagrangianModel, x, v, t=0.0):
    """``E = L_v . v - L``."""
    d = lag.dim
    x, v = _vec(x, d), _vec(v, d)
    return float(lag.L_v(x, v, t) @ v - lag.L(x, v, t))


def hamiltonian_from_lagrangian(lag: LagrangianModel) -> HamiltonianModel:
    """Numerical Legendre dual of ``lag``.

    Each evaluation inverts ``p = L_v`` by Newton and assembles the Hessian
    blocks from the Lagrangian ones.
    """

    def velocity(x, p, t):
        return inverse_legendre(lag, x, p, t)

    def H(x, p, t):
        v = velocity(x, p, t)
        return float(np.dot(p, v) - lag.L(x, v, t))

    def H_x(x, p, t):
        return -lag.L_x(x, velocity(x, p, t), t)

    def H_p(x, p, t):
        return velocity(x, p, t)

    def H_pp(x, p, t):
        return np.linalg.inv(lag.L_vv(x, velocity(x, p, t), t))

    def H_xp(x, p, t):
        v = velocity(x, p, t)
        return -lag.L_xv(x, v, t) @ np.linalg.inv(lag.L_vv(x, v, t))

    def H_xx(x, p, t):
        v = velocity(x, p, t)
        L_xv = lag.L_xv(x, v, t)
        out = -lag.L_xx(x, v, t) + L_xv @ np.linalg.solve(lag.L_vv(x, v, t), L_xv.T)
        return 0.5 * (out + out.T)

    return HamiltonianModel(
        lag.space, H, H_x, H_p, H_xx, H_xp, H_pp,
        time_dependence=lag.time_dependence, source="legendre",
        lagrangian=lag, name="legendre(%s)" % lag.name,
    )


# ---------------------------------------------------------------------------
# Concrete families


class Potential:
    """``U(x, t)`` with gradient and Hessian in ``x``."""

    def value(self, x, t):
        raise NotImplementedError

    def grad(self, x, t):
        raise NotImplementedError

    def hess(self, x, t):
        raise NotImplementedError


@dataclass
class TrigTerm:
    """``amplitude * (1 + q cos(omega t)) * cos(k . x + phase)``."""

    freq: Sequence[float]
    amplitude: float
    phase: float = 0.0
    q: float = 0.0
    omega: float = 0.0


class TrigPotential(Potential):
    """Trigonometric polynomial plus an optional quadratic form ``x^T Q x / 2``."""

    def __init__(self, dim, terms=(), quadratic=None):
        self.dim = dim
        self.terms = [t if isinstance(t, TrigTerm) else TrigTerm(**t) for t in terms]
        for t in self.terms:
            if len(t.freq) != dim:
                raise ConfigurationError("frequency vector has wrong length", freq=list(t.freq))
        self.quadratic = None if quadratic is None else np.asarray(quadratic, float).reshape(dim, dim)

    def _modulation(self, term, t):
        return term.amplitude * (1.0 + term.q * np.cos(term.omega * t))

    def value(self, x, t):
        out = 0.0
        for term in self.terms:
            out += self._modulation(term, t) * np.cos(np.dot(term.freq, x) + term.phase)
        if self.quadratic is not None:
            out += 0.5 * x @ self.quadratic @ x
        return out

    def grad(self, x, t):
        out = np.zeros(self.dim)
        for term in self.terms:
            k = np.asarray(term.freq, float)
            out -= self._modulation(term, t) * np.sin(k @ x + term.phase) * k
        if self.quadratic is not None:
            out += 0.5 * (self.quadratic + self.quadratic.T) @ x
        return out

    def hess(self, x, t):
        out = np.zeros((self.dim, self.dim))
        for term in self.terms:
            k = np.asarray(term.freq, float)
            out -= self._modulation(term, t) * np.cos(k @ x + term.phase) * np.outer(k, k)
        if self.quadratic is not None:
            out += 0.5 * (self.quadratic + self.quadratic.T)
        return out


class CallablePotential(Potential):
    def __init__(self, value, grad, hess):
        self._value, self._grad, self._hess = value, grad, hess

    def value(self, x, t):
        return self._value(x, t)

    def grad(self, x, t):
        return self._grad(x, t)

    def hess(self, x, t):
        return self._hess(x, t)


def mechanical_pair(space: ConfigSpace, potential: Potential, kinetic=None,
                    time_dependence: TimeDependence = AUTONOMOUS, name="mechanical"):
    """``L = v^T G v / 2 - U(x, t)`` and its dual ``H = p^T G^-1 p / 2 + U``."""
    d = space.dim
    G = np.eye(d) if kinetic is None else np.asarray(kinetic, float).reshape(d, d)
    if not np.allclose(G, G.T):
        raise ConfigurationError("kinetic matrix must be symmetric")
    w = np.linalg.eigvalsh(G)
    if w[0] <= 0:
        raise NotConvexError("kinetic matrix must be positive definite", min_eig=w[0])
    Ginv = np.linalg.inv(G)
    zero = np.zeros((d, d))

    lag = LagrangianModel(
        space,
        L=lambda x, v, t: 0.5 * v @ G @ v - potential.value(x, t),
        L_x=lambda x, v, t: -potential.grad(x, t),
        L_v=lambda x, v, t: G @ v,
        L_xx=lambda x, v, t: -potential.hess(x, t),
        L_xv=lambda x, v, t: zero,
        L_vv=lambda x, v, t: G,
        b=float(w[0]),
        time_dependence=time_dependence,
        name=name,
    )
    ham = HamiltonianModel(
        space,
        H=lambda x, p, t: 0.5 * p @ Ginv @ p + potential.value(x, t),
        H_x=lambda x, p, t: potential.grad(x, t),
        H_p=lambda x, p, t: Ginv @ p,
        H_xx=lambda x, p, t: potential.hess(x, t),
        H_xp=lambda x, p, t: zero,
        H_pp=lambda x, p, t: Ginv,
        time_dependence=time_dependence,
        source="analytic",
        lagrangian=lag,
        name=name,
    )
    return lag, ham


def quartic_lagrangian(alpha=1.0, beta=1.0, dim=1, space=None):
    """``L = alpha |v|^4 / 4 + beta |v|^2 / 2`` (free, fiberwise quartic)."""
    space = space or ConfigSpace.torus(dim)
    d = space.dim
    zero = np.zeros((d, d))

    def L_v(x, v, t):
        return alpha * (v @ v) * v + beta * v

    def L_vv(x, v, t):
        return alpha * ((v @ v) * np.eye(d) + 2.0 * np.outer(v, v)) + beta * np.eye(d)

    return LagrangianModel(
        space,
        L=lambda x, v, t: alpha * (v @ v) ** 2 / 4.0 + beta * (v @ v) / 2.0,
        L_x=lambda x, v, t: np.zeros(d),
        L_v=L_v,
        L_xx=lambda x, v, t: zero,
        L_xv=lambda x, v, t: zero,
        L_vv=L_vv,
        b=beta,
        name="quartic(%g,%g)" % (alpha, beta),
    )


# ---------------------------------------------------------------------------
# Boundedness certificates


@dataclass(frozen=True)
class Box:
    """Compact chart region: coordinate box x fiber box (x) clock interval."""

    x_bounds: tuple
    p_bounds: tuple
    t_bounds: Optional[tuple] = None

    def __post_init__(self):
        xb = tuple((float(lo), float(hi)) for lo, hi in self.x_bounds)
        pb = tuple((float(lo), float(hi)) for lo, hi in self.p_bounds)
        for lo, hi in xb + pb + ((self.t_bounds,) if self.t_bounds else ()):
            if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
                raise ConfigurationError("region must be a bounded box", bounds=[lo, hi])
        object.__setattr__(self, "x_bounds", xb)
        object.__setattr__(self, "p_bounds", pb)
        if self.t_bounds is not None:
            object.__setattr__(self, "t_bounds", (float(self.t_bounds[0]), float(self.t_bounds[1])))

    @property
    def dim(self):
        return len(self.x_bounds)

    def contains(self, x, p, t=None, slack=1e-9):
        x, p = np.asarray(x, float), np.asarray(p, float)
        ok = all(lo - slack <= xi <= hi + slack for xi, (lo, hi) in zip(x, self.x_bounds))
        ok = ok and all(lo - slack <= pi <= hi + slack for pi, (lo, hi) in zip(p, self.p_bounds))
        return ok

    def grid(self, grid_spec):
        """Iterate over tensor grid points ``(x, p, t)``."""
        d = self.dim
        n_axes = 2 * d + (1 if self.t_bounds else 0)
        if np.isscalar(grid_spec):
            counts = [int(grid_spec)] * n_axes
        else:
            counts = [int(c) for c in grid_spec]
            if len(counts) != n_axes:
                raise ConfigurationError("grid_spec needs one count per axis", axes=n_axes)
        bounds = list(self.x_bounds) + list(self.p_bounds)
        if self.t_bounds:
            bounds.append(self.t_bounds)
        axes = [np.linspace(lo, hi, max(c, 1)) if hi > lo else np.array([lo])
                for (lo, hi), c in zip(bounds, counts)]
        for z in itertools.product(*axes):
            z = np.asarray(z)
            t = float(z[2 * d]) if self.t_bounds else 0.0
            yield z[:d], z[d:2 * d], t

    def to_dict(self):
        return {"x_bounds": [list(b) for b in self.x_bounds],
                "p_bounds": [list(b) for b in self.p_bounds],
                "t_bounds": list(self.t_bounds) if self.t_bounds else None}


@dataclass
class BoundednessCertificate:
    """Grid-sampled (heuristic) bounded-hamiltonian constants.

    ``b1``/``b2`` are the inflated certified values; ``b1_raw``/``b2_raw``
    are the plain grid extrema.
    """

    region: Box
    b1: float
    b2: float
    b1_raw: float
    b2_raw: float
    samples: int
    safety: float = SAFETY_FACTOR
    heuristic: bool = True
    ham: Optional[HamiltonianModel] = field(default=None, repr=False, compare=False)
    grid_spec: object = field(default=9, repr=False)

    def to_dict(self):
        return {"region": self.region.to_dict(), "b1": self.b1, "b2": self.b2,
                "b1_raw": self.b1_raw, "b2_raw": self.b2_raw, "samples": self.samples,
                "safety": self.safety, "heuristic": self.heuristic}


def phase_hessian(ham: HamiltonianModel, x, p, t):
    """Full ``2d x 2d`` Hessian of ``H`` in ``(x, p)``."""
    H_px, H_pp, H_xx, H_xp = ham.jacobi_blocks(x, p, t)
    return np.block([[H_xx, H_xp], [H_px, H_pp]])


def certify_bounded(ham: HamiltonianModel, region: Box, grid_spec=9,
                    safety=SAFETY_FACTOR, fd_step=1e-4) -> BoundednessCertificate:
    """Sample ``||H||_{C^3}`` and ``min eig H_pp`` over ``region``.

    Third derivatives come from central differences of the analytic Hessian.
    ``b1`` is inflated and ``b2`` deflated by ``safety``.
    """
    if region.dim != ham.dim:
        raise ConfigurationError("region dimension does not match the system")
    d = ham.dim
    b1_raw = 0.0
    b2_raw = np.inf
    n = 0
    for x, p, t in region.grid(grid_spec):
        n += 1
        H_pp = ham.H_pp(x, p, t)
        lam = np.linalg.eigvalsh(0.5 * (H_pp + H_pp.T))[0]
        if lam <= 0:
            raise NotConvexError("H_pp not positive definite", x=x, p=p, t=t, min_eig=lam)
        b2_raw = min(b2_raw, lam)
        grad = np.concatenate([ham.H_x(x, p, t), ham.H_p(x, p, t)])
        hess = phase_hessian(ham, x, p, t)
        third = 0.0
        z = np.concatenate([x, p])
        for k in range(2 * d + (0 if ham.autonomous else 1)):
            if k < 2 * d:
                h = fd_step * max(1.0, abs(z[k]))
                zp, zm = z.copy(), z.copy()
                zp[k] += h
                zm[k] -= h
                dH = (phase_hessian(ham, zp[:d], zp[d:], t)
                      - phase_hessian(ham, zm[:d], zm[d:], t)) / (2 * h)
            else:
                h = fd_step * max(1.0, abs(t))
                dH = (phase_hessian(ham, x, p, t + h) - phase_hessian(ham, x, p, t - h)) / (2 * h)
            third = max(third, np.linalg.norm(dH, 2))
        b1_raw = max(b1_raw, abs(ham.H(x, p, t)), np.linalg.norm(grad),
                     np.linalg.norm(hess, 2), third)
    return BoundednessCertificate(
        region=region, b1=float(b1_raw * safety), b2=float(b2_raw / safety),
        b1_raw=float(b1_raw), b2_raw=float(b2_raw), samples=n, safety=safety,
        ham=ham, grid_spec=grid_spec,
    )


def lagrangian_c2_norm(lag: LagrangianModel, region: Box, grid_spec=9):
    """Grid max of ``|L|`` and all first/second derivative norms.

    ``region.p_bounds`` is read as a velocity box.
    """
    best = 0.0
    for x, v, t in region.grid(grid_spec):
        hess = np.block([[lag.L_xx(x, v, t), lag.L_xv(x, v, t)],
                         [lag.L_vx(x, v, t), lag.L_vv(x, v, t)]])
        grad = np.concatenate([lag.L_x(x, v, t), lag.L_v(x, v, t)])
        best = max(best, abs(lag.L(x, v, t)), np.linalg.norm(grad), np.linalg.norm(hess, 2))
    return float(best)
