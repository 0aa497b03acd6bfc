"""Transversal reduction of the linearized flow on a regular energy level.

At ``theta`` with vector field ``X = (H_p, -H_x)``:

    T Sigma = {(h, v) : H_x . h + H_p . v = 0},
    N       = {xi in T Sigma : <h, H_p> = 0},
    P(xi)   = xi - (<h, H_p> / |H_p|^2) X,

and the reduced action is ``Psi_t = P o dpsi_t`` written in orthonormal
bases of ``N``.
"""
from __future__ import annotations

import logging

import numpy as np
import scipy.linalg

from ..errors import ConfigurationError, SingularProjectionError
from ..flow import DEFAULT_TOL, OrbitSegment, integrate_jacobi_frame

log = logging.getLogger(__name__)

GS_KEEP = 0.25


def _constraints(ham, x, p, t):
    H_x, H_p = ham.H_x(x, p, t), ham.H_p(x, p, t)
    d = ham.dim
    return np.vstack([np.concatenate([H_x, H_p]), np.concatenate([H_p, np.zeros(d)])]), H_x, H_p


def transversal_basis(ham, x, p, t=0.0):
    """Orthonormal basis of ``N`` (``2d x (2d - 2)``), deterministic in the point.

    Standard coordinate vectors are projected onto ``N`` and orthonormalized
    in their natural order, skipping ones with a small residual.
    """
    A, H_x, H_p = _constraints(ham, x, p, t)
    if np.linalg.norm(H_p) < 1e-12:
        raise SingularProjectionError("projected vector field vanishes", x=x, p=p, t=t)
    Q = scipy.linalg.null_space(A)
    n = 2 * ham.dim - 2
    if Q.shape[1] != n:
        raise SingularProjectionError("energy level is not regular here", x=x, p=p, rank=Q.shape[1])
    if n == 0:
        return np.zeros((2 * ham.dim, 0))
    P = Q @ Q.T
    for keep in (GS_KEEP, 1e-3):
        basis = []
        for k in range(2 * ham.dim):
            w = P[:, k].copy()
            for b in basis:
                w -= (b @ w) * b
            nw = np.linalg.norm(w)
            if nw > keep:
                basis.append(w / nw)
            if len(basis) == n:
                return np.column_stack(basis)
    return Q


def projection(ham, x, p, t=0.0):
    """Matrix of ``P`` along ``X``: ``I - X (H_p, 0)^T / |H_p|^2``."""
    H_p = ham.H_p(x, p, t)
    nrm2 = H_p @ H_p
    if nrm2 < 1e-24:
        raise SingularProjectionError("projected vector field vanishes", x=x, p=p, t=t)
    X = ham.vector_field(x, p, t)
    row = np.concatenate([H_p, np.zeros(ham.dim)])
    return np.eye(2 * ham.dim) - np.outer(X, row) / nrm2


def flow_coefficient(ham, x, p, t, xi):
    """Coefficient of ``X`` removed by ``P``: ``<h, H_p> / |H_p|^2``."""
    H_p = ham.H_p(x, p, t)
    xi = np.asarray(xi, float)
    return (H_p @ xi[:ham.dim]) / (H_p @ H_p)


class TransversalAction:
    """Reduced linear action ``Psi`` along an orbit of an autonomous system."""

    def __init__(self, orbit: OrbitSegment, tol=None, check_times=None):
        ham = orbit.ham
        if not ham.autonomous:
            raise ConfigurationError("the transversal reduction needs an autonomous system")
        self.orbit = orbit
        self.ham = ham
        self.tol = orbit.tol if tol is None else tol
        self.fiber_dim = 2 * ham.dim - 2
        self.notice = None
        if self.fiber_dim == 0:
            self.notice = "d = 1: the transversal bundle is trivial; use the time-periodic framework"
            log.info(self.notice)
        ts = orbit.step_times if check_times is None else np.asarray(check_times, float)
        self.conditioning = 0.0
        for t in ts:
            x, p = orbit.state(t)
            N = self.N(t)
            X = ham.vector_field(x, p, t)
            if np.linalg.norm(ham.H_p(x, p, t)) < 1e-12:
                raise SingularProjectionError("projected vector field vanishes on the orbit", t=float(t))
            self.conditioning = max(self.conditioning, np.linalg.cond(np.column_stack([N, X / np.linalg.norm(X)])))

    def N(self, t):
        x, p = self.orbit.state(t)
        return transversal_basis(self.ham, x, p, t)

    def X(self, t):
        x, p = self.orbit.state(t)
        return self.ham.vector_field(x, p, t)

    def P(self, t):
        x, p = self.orbit.state(t)
        return projection(self.ham, x, p, t)

    def dpsi(self, t_from, dt):
        """Full ``2d x 2d`` linearization from ``t_from`` to ``t_from + dt``."""
        d = self.ham.dim
        init = (np.hstack([np.eye(d), np.zeros((d, d))]), np.hstack([np.zeros((d, d)), np.eye(d)]))
        if dt == 0:
            return np.eye(2 * d)
        fr = integrate_jacobi_frame(self.orbit, init, self.tol, t_start=t_from,
                                    t_span=(t_from, t_from + dt))
        return fr.stacked(t_from + dt)

    def psi(self, t_from, dt, Phi=None):
        """``Psi_dt`` at the orbit point of time ``t_from`` in the ``N`` bases."""
        if self.fiber_dim == 0:
            return np.zeros((0, 0))
        Phi = self.dpsi(t_from, dt) if Phi is None else Phi
        return self.N(t_from + dt).T @ self.P(t_from + dt) @ Phi @ self.N(t_from)

    def flow_part(self, t_from, dt, xi, Phi=None):
        """``X``-coefficient of ``dpsi_dt xi`` at the image point."""
        Phi = self.dpsi(t_from, dt) if Phi is None else Phi
        x, p = self.orbit.state(t_from + dt)
        return flow_coefficient(self.ham, x, p, t_from + dt, Phi @ xi)


def build_transversal_action(orbit: OrbitSegment, tol=DEFAULT_TOL) -> TransversalAction:
    return TransversalAction(orbit, tol)
