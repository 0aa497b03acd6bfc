"""Sampled linear cocycles and quasi-hyperbolicity diagnostics.

A :class:`SampledCocycle` is a sequence of fiber maps ``A_k`` over base
indices ``k`` (time step ``step``).  ``Psi_m`` at base ``k`` is
``A_{k+m-1} ... A_k`` for ``m > 0`` and the matching inverse product for
``m < 0``.  Boundedness over all time is proxied by a norm threshold at a
finite horizon.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import ConfigurationError, FitFailure

DEFAULT_THRESHOLD = 1e3
DEFAULT_HORIZON = 50.0
N_DIRECTIONS = 360


class SampledCocycle:
    """Fiber maps over an integer-indexed base.

    ``boundary='periodic'`` wraps base indices modulo the number of maps;
    ``'clamp'`` extends the first and last maps to all indices outside.
    """

    def __init__(self, maps, step=1.0, boundary="periodic", base_points=None):
        self.maps = [np.atleast_2d(np.asarray(A, float)) for A in maps]
        if not self.maps:
            raise ConfigurationError("cocycle needs at least one map")
        self.fiber_dim = self.maps[0].shape[0]
        for A in self.maps:
            if A.shape != (self.fiber_dim, self.fiber_dim):
                raise ConfigurationError("all fiber maps must be square of the same size")
        if boundary not in ("periodic", "clamp"):
            raise ConfigurationError("boundary must be 'periodic' or 'clamp'", boundary=boundary)
        self.step = float(step)
        self.boundary = boundary
        self.base_points = base_points
        self._inv = [np.linalg.inv(A) for A in self.maps]
        self.condition_numbers = [float(np.linalg.cond(A)) for A in self.maps]

    @classmethod
    def constant(cls, A, step=1.0):
        return cls([A], step, "periodic")

    @classmethod
    def from_action(cls, action, step, n_steps, t_start=None):
        """Time-``step`` maps of a transversal action along its orbit."""
        t0 = action.orbit.start.clock if t_start is None else t_start
        maps = [action.psi(t0 + k * step, step) for k in range(n_steps)]
        pts = [action.orbit.point(t0 + k * step) for k in range(n_steps)]
        return cls(maps, step, "periodic", pts)

    def __len__(self):
        return len(self.maps)

    def _idx(self, k):
        n = len(self.maps)
        if self.boundary == "periodic":
            return k % n
        return min(max(k, 0), n - 1)

    def map(self, k):
        return self.maps[self._idx(k)]

    def inverse(self, k):
        return self._inv[self._idx(k)]

    def steps(self, horizon):
        return max(1, int(round(horizon / self.step)))

    def forward_images(self, k, V, n):
        """``[Psi_0 V, Psi_1 V, ..., Psi_n V]`` at base ``k``."""
        out = [np.asarray(V, float)]
        W = out[0]
        for m in range(n):
            W = self.map(k + m) @ W
            out.append(W)
        return out

    def backward_images(self, k, V, n):
        """``[Psi_0 V, Psi_-1 V, ..., Psi_-n V]`` at base ``k``."""
        out = [np.asarray(V, float)]
        W = out[0]
        for m in range(1, n + 1):
            W = self.inverse(k - m) @ W
            out.append(W)
        return out

    def psi(self, k, m):
        """Matrix of ``Psi_m`` at base ``k``."""
        eye = np.eye(self.fiber_dim)
        if m >= 0:
            return self.forward_images(k, eye, m)[-1]
        return self.backward_images(k, eye, -m)[-1]


def fiber_mesh(dim, n=N_DIRECTIONS, seed=0):
    """Unit directions: ``n`` angles on a half circle for ``dim = 2``,
    coordinate axes plus seeded random directions otherwise."""
    if dim == 1:
        return np.ones((1, 1))
    if dim == 2:
        a = np.pi * np.arange(n) / n
        return np.vstack([np.cos(a), np.sin(a)])
    rng = np.random.default_rng(seed)
    R = rng.standard_normal((dim, n))
    R /= np.linalg.norm(R, axis=0)
    return np.hstack([np.eye(dim), R])


def _angle_between(A, B):
    """Smallest principal angle between column spans of ``A`` and ``B``."""
    if A.shape[1] == 0 or B.shape[1] == 0:
        return np.pi / 2
    qa, _ = np.linalg.qr(A)
    qb, _ = np.linalg.qr(B)
    s = np.linalg.svd(qa.T @ qb, compute_uv=False)
    return float(np.arccos(np.clip(s.max(), -1.0, 1.0)))


def largest_principal_angle(A, B):
    """Largest principal angle between equal-dimensional column spans."""
    qa, _ = np.linalg.qr(np.asarray(A, float))
    qb, _ = np.linalg.qr(np.asarray(B, float))
    s = np.linalg.svd(qa.T @ qb, compute_uv=False)
    return float(np.arccos(np.clip(s.min(), -1.0, 1.0)))


def bounded_subspace(Psi_N, bound):
    """Right-singular directions of ``Psi_N`` with singular value ``<= bound``."""
    _, s, vt = np.linalg.svd(Psi_N)
    keep = s <= bound
    return vt[keep].T


@dataclass
class HyperbolicSplitting:
    Es: object
    Eu: object
    C: float
    lam: float
    tau: float
    fits: dict = field(default_factory=dict)

    def to_dict(self):
        def enc(b):
            if b is None:
                return None
            if isinstance(b, list):
                return [np.asarray(x).tolist() for x in b]
            return np.asarray(b).tolist()
        return {"Es": enc(self.Es), "Eu": enc(self.Eu), "C": self.C, "lambda": self.lam,
                "tau": self.tau, "fits": self.fits}


@dataclass
class CocycleReport:
    verdict: str                      # "quasi_hyperbolic" | "not_quasi_hyperbolic" | "indeterminate"
    witness: Optional[list]
    K33: float
    dims: dict                        # base index -> (dim Es, dim Eu)
    intersection_flagged: bool
    min_angle: float
    growth: str                       # "bounded" | "polynomial" | "exponential"
    fiber_dim: int
    horizon: float
    threshold: float
    Es: dict = field(default_factory=dict, repr=False)
    Eu: dict = field(default_factory=dict, repr=False)
    indeterminate_witnesses: list = field(default_factory=list)
    sacker_sell_ok: Optional[bool] = None
    splitting: Optional[HyperbolicSplitting] = None
    notes: list = field(default_factory=list)

    @property
    def quasi_hyperbolic(self):
        return self.verdict == "quasi_hyperbolic"

    def to_dict(self):
        return {"verdict": self.verdict, "quasi_hyperbolic": self.quasi_hyperbolic,
                "witness": self.witness, "K33": self.K33,
                "dims": {str(k): list(v) for k, v in sorted(self.dims.items())},
                "intersection_flagged": self.intersection_flagged, "min_angle": self.min_angle,
                "growth": self.growth, "fiber_dim": self.fiber_dim, "horizon": self.horizon,
                "threshold": self.threshold, "sacker_sell_ok": self.sacker_sell_ok,
                "indeterminate_witnesses": self.indeterminate_witnesses[:10],
                "splitting": None if self.splitting is None else self.splitting.to_dict(),
                "notes": self.notes}


def _k33_one_sided(norms):
    """``max_{0<=t<=s} n_t / (n_0 + n_s)`` via suffix minima."""
    suffix_min = np.minimum.accumulate(norms[::-1])[::-1]
    return float(np.max(norms / (norms[0] + suffix_min)))


def _growth_class(cocycle, k, n, bound):
    def g(m):
        return max(np.linalg.norm(cocycle.psi(k, m), 2), np.linalg.norm(cocycle.psi(k, -m), 2))
    gN = g(n)
    if gN <= bound:
        return "bounded"
    q = max(n // 4, 1)
    l1, l2, l4 = np.log(g(q)), np.log(g(2 * q)), np.log(g(4 * q))
    d1, d2 = l2 - l1, l4 - l2
    # exponential growth doubles the log increment when the window doubles
    if d1 > 0 and d2 / d1 > 1.5:
        return "exponential"
    return "polynomial"


def quasi_hyperbolicity_check(cocycle: SampledCocycle, horizon=DEFAULT_HORIZON,
                              threshold=DEFAULT_THRESHOLD, points=None,
                              n_directions=N_DIRECTIONS, seed=0) -> CocycleReport:
    """Quasi-hyperbolicity verdict on a direction mesh at the given base points.

    A unit vector is *unbounded* when its orbit norm exceeds ``threshold``
    within ``[-horizon, horizon]`` and *bounded* when it stays below
    ``sqrt(threshold)``; anything in between is inconclusive.
    """
    if threshold <= 1:
        raise ConfigurationError("threshold must exceed 1", threshold=threshold)
    n = cocycle.steps(horizon)
    points = [0] if points is None else list(points)
    mesh = fiber_mesh(cocycle.fiber_dim, n_directions, seed)
    bound = np.sqrt(threshold)
    witness = None
    inconclusive = []
    K33 = 0.0
    dims, Es, Eu = {}, {}, {}
    min_angle = np.pi / 2
    for k in points:
        fwd = np.array([np.linalg.norm(W, axis=0) for W in cocycle.forward_images(k, mesh, n)])
        bwd = np.array([np.linalg.norm(W, axis=0) for W in cocycle.backward_images(k, mesh, n)])
        peak = np.maximum(fwd.max(axis=0), bwd.max(axis=0))
        for j in range(mesh.shape[1]):
            K33 = max(K33, _k33_one_sided(fwd[:, j]), _k33_one_sided(bwd[:, j]))
            if peak[j] <= bound and witness is None:
                witness = {"base": k, "vector": mesh[:, j].tolist(), "max_norm": float(peak[j])}
            elif bound < peak[j] <= threshold:
                inconclusive.append({"base": k, "vector": mesh[:, j].tolist(), "max_norm": float(peak[j])})
        es = bounded_subspace(cocycle.psi(k, n), bound)
        eu = bounded_subspace(cocycle.psi(k, -n), bound)
        Es[k], Eu[k] = es, eu
        dims[k] = (es.shape[1], eu.shape[1])
        min_angle = min(min_angle, _angle_between(es, eu))
    if witness is not None:
        verdict = "not_quasi_hyperbolic"
    elif inconclusive:
        verdict = "indeterminate"
    else:
        verdict = "quasi_hyperbolic"
    # with polynomial growth the singular-vector estimates converge like 1/n
    angle_tol = max(1e-6, min(0.1, 10.0 / n))
    flagged = bool(min_angle < angle_tol)
    growth = _growth_class(cocycle, points[0], n, bound)
    report = CocycleReport(
        verdict=verdict, witness=witness, K33=K33, dims=dims, intersection_flagged=flagged,
        min_angle=min_angle, growth=growth, fiber_dim=cocycle.fiber_dim, horizon=float(horizon),
        threshold=float(threshold), Es=Es, Eu=Eu, indeterminate_witnesses=inconclusive,
    )
    if flagged:
        report.notes.append("E^s and E^u estimates intersect; growth is %s" % growth)
    if verdict == "quasi_hyperbolic" and growth == "exponential" and not flagged:
        try:
            report.splitting = cocycle_splitting(cocycle, report, points[0])
        except FitFailure:
            # products this large lose the small singular values to roundoff
            report.notes.append("no exponential fit on the bounded subspaces; shorten the horizon")
    return report


def exponential_fit(times, norms, min_rate=1e-8):
    """Fit ``norm(t) <= C exp(-lam t)``.

    ``lam`` is the least-squares slope of ``-log norm``; ``C`` is the
    smallest constant making the bound hold on the samples.
    """
    t = np.asarray(times, float)
    y = np.log(np.asarray(norms, float))
    A = np.column_stack([np.ones_like(t), -t])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    lam = float(coef[1])
    resid = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    if not lam > min_rate:
        raise FitFailure("data does not decay", growth_rate=-lam, residual=resid)
    C = float(np.max(np.exp(y + lam * t)))
    return C, lam, resid


def cocycle_splitting(cocycle: SampledCocycle, report: CocycleReport, k=0) -> HyperbolicSplitting:
    """Fit ``(C, lam)`` on the estimated ``E^s`` (forward) and ``E^u`` (backward)."""
    n = cocycle.steps(report.horizon)
    es, eu = report.Es[k], report.Eu[k]
    ts = cocycle.step * np.arange(n + 1)
    fits = {}
    Cs, lams = [], []
    for name, basis, images in (("stable", es, cocycle.forward_images(k, es, n)),
                                ("unstable", eu, cocycle.backward_images(k, eu, n))):
        if basis.shape[1] == 0:
            continue
        norms = [np.linalg.norm(W, 2) for W in images]
        C, lam, resid = exponential_fit(ts, norms)
        fits[name] = {"C": C, "lambda": lam, "residual": resid}
        Cs.append(C)
        lams.append(lam)
    if len(Cs) < 2:
        raise FitFailure("a bounded subspace is empty", dims=[es.shape[1], eu.shape[1]])
    C, lam = max(Cs), min(lams)
    return HyperbolicSplitting(es, eu, C, lam, float(np.log(2 * C) / lam), fits)


def sacker_sell_dims(dims, pairs, fiber_dim=None, minimal_sets=None):
    """Check ``dim E^u(b) >= n - dim E^s(x)`` and ``dim E^s(a) >= n - dim E^u(x)``.

    ``dims`` maps base labels to ``(dim E^s, dim E^u)`` (a report works too);
    ``pairs`` lists ``(x, a, b)`` with ``a``/``b`` in the alpha/omega limit of
    ``x``.  ``minimal_sets`` is a list of label groups on which ``dim E^s``
    must be one constant.
    """
    if isinstance(dims, CocycleReport):
        fiber_dim = dims.fiber_dim if fiber_dim is None else fiber_dim
        dims = dims.dims
    if fiber_dim is None:
        raise ConfigurationError("fiber_dim is required with a plain dims table")
    for x, a, b in pairs:
        sx, ux = dims[x]
        sa, _ = dims[a]
        _, ub = dims[b]
        if ub < fiber_dim - sx or sa < fiber_dim - ux:
            return False
    for group in minimal_sets or ():
        if len({dims[label][0] for label in group}) > 1:
            return False
    return True
