"""scikit-learn style wrappers around the analysis entry points.

Only the parameter handling (``get_params``/``set_params``/``clone``) and the
``fit`` then trailing-underscore attribute convention are borrowed; the
"samples" are phase points ``[x..., p..., clock]`` (the clock column is
optional) and there are no targets.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .catalog import CatalogEntry
from .conjugate import green_bundles
from .errors import ConfigurationError
from .flow import PhasePoint
from .hyperbolicity.cocycle import SampledCocycle, quasi_hyperbolicity_check
from .hyperbolicity.theorems import decide_theorem_A, decide_theorem_C
from .index_form import uniform_positivity_scan
from .sysfile import load_system


def _entry(system):
    return system if isinstance(system, CatalogEntry) else load_system(system)


def _points(entry, X):
    if X is None:
        return [entry.orbit_start]
    X = np.atleast_2d(np.asarray(X, float))
    d = entry.dim
    if X.shape[1] not in (2 * d, 2 * d + 1):
        raise ConfigurationError("phase points need 2d or 2d+1 columns", dim=d, columns=X.shape[1])
    return [PhasePoint(r[:d], r[d:2 * d], r[2 * d] if X.shape[1] > 2 * d else 0.0) for r in X]


class GreenBundleEstimator(BaseEstimator):
    """Green slopes ``S``/``U`` at the given points."""

    def __init__(self, system="pendulum", T=10.0, tol=1e-8):
        self.system = system
        self.T = T
        self.tol = tol

    def fit(self, X=None, y=None):
        entry = _entry(self.system)
        ham = entry.analysis_hamiltonian()
        self.bundles_ = [green_bundles(ham, p, self.T, self.tol) for p in _points(entry, X)]
        self.dim_ = entry.dim
        return self

    def transform(self, X=None):
        """Rows ``[vec S, vec U]`` for each point (refits when ``X`` is given)."""
        if X is not None or not hasattr(self, "bundles_"):
            self.fit(X)
        return np.array([np.concatenate([g.S_limit.ravel(), g.U_limit.ravel()]) for g in self.bundles_])


class IndexFormPositivity(BaseEstimator):
    """Uniform positivity constant of the index form over the points."""

    def __init__(self, system="pendulum", T_list=(5, 10, 20, 40), mesh=256,
                 midpoint_constraint=None, tol=1e-10, workers=1):
        self.system = system
        self.T_list = T_list
        self.mesh = mesh
        self.midpoint_constraint = midpoint_constraint
        self.tol = tol
        self.workers = workers

    def fit(self, X=None, y=None):
        entry = _entry(self.system)
        ham = entry.analysis_hamiltonian()
        mc = self.midpoint_constraint
        if mc is None:
            mc = entry.framework == "autonomous"
        self.report_ = uniform_positivity_scan(ham, _points(entry, X), list(self.T_list), self.mesh,
                                               mc, self.tol, self.workers)
        self.uniform_a_ = self.report_.uniform_a
        return self

    def score(self, X=None, y=None):
        return self.fit(X).uniform_a_


class HyperbolicityClassifier(BaseEstimator):
    """Hyperbolicity verdict along the orbits of the given points."""

    def __init__(self, system="pendulum", pipeline="theoremC", T=10.0, T_list=(5, 10, 20, 40),
                 mesh=256, tol=1e-10):
        self.system = system
        self.pipeline = pipeline
        self.T = T
        self.T_list = T_list
        self.mesh = mesh
        self.tol = tol

    def fit(self, X=None, y=None):
        entry = _entry(self.system)
        ham = entry.analysis_hamiltonian()
        pts = _points(entry, X)
        if self.pipeline == "theoremC":
            greens = [green_bundles(ham, p, self.T) for p in pts]
            self.result_ = decide_theorem_C(ham, greens, entry.framework, tol=self.tol)
        elif self.pipeline == "theoremA":
            self.result_ = decide_theorem_A(ham, pts, list(self.T_list), self.mesh, entry.framework,
                                            green_T=self.T, tol=self.tol)
        else:
            raise ConfigurationError("unknown pipeline", pipeline=self.pipeline)
        self.verdict_ = self.result_.verdict
        return self

    def predict(self, X=None):
        """Per-point verdicts (Theorem C is decided point by point)."""
        entry = _entry(self.system)
        ham = entry.analysis_hamiltonian()
        out = []
        for p in _points(entry, X):
            r = decide_theorem_C(ham, [green_bundles(ham, p, self.T)], entry.framework, tol=self.tol)
            out.append(r.verdict)
        return np.array(out)


class QuasiHyperbolicityAnalyzer(BaseEstimator):
    """Quasi-hyperbolicity of a sampled cocycle given as an ``(n, k, k)`` array of maps."""

    def __init__(self, horizon=50, threshold=1e3, n_directions=360, seed=0):
        self.horizon = horizon
        self.threshold = threshold
        self.n_directions = n_directions
        self.seed = seed

    def fit(self, X, y=None):
        X = np.asarray(X, float)
        if X.ndim == 2:
            cocycle = SampledCocycle.constant(X)
        elif X.ndim == 3:
            cocycle = SampledCocycle(list(X))
        else:
            raise ConfigurationError("expected a k x k map or an (n, k, k) stack")
        self.report_ = quasi_hyperbolicity_check(cocycle, self.horizon, self.threshold,
                                                 n_directions=self.n_directions, seed=self.seed)
        self.quasi_hyperbolic_ = self.report_.quasi_hyperbolic
        return self

    def predict(self, X):
        return self.fit(X).quasi_hyperbolic_
