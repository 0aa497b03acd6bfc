"""Graph transforms and the two hyperbolicity deciders.

``decide_theorem_C`` tests transversality of the Green bundles
(``E ∩ F = {0}`` with a periodic clock, ``E ∩ F = <X>`` on an energy level).
``decide_theorem_A`` runs the index-form pipeline: uniform positivity,
broken variation fields, then the transversality test.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from ..conjugate import GreenBundles, find_conjugate_points, green_bundles
from ..errors import (
    ConfigurationError,
    FitFailure,
    GreenBundlesError,
    NoContractionError,
    StageFailure,
)
from ..flow import DEFAULT_TOL, PhasePoint, integrate_jacobi_frame, integrate_orbit, vertical_start
from ..index_form import (
    SIGN_FLOOR,
    FrameField,
    _quad_nodes,
    _cuts,
    index_form_direct,
    uniform_positivity_scan,
)
from .cocycle import HyperbolicSplitting, exponential_fit, largest_principal_angle
from .transversal import TransversalAction, flow_coefficient, transversal_basis

log = logging.getLogger(__name__)

TRANSVERSALITY_FLOOR = 1e-6
SVD_TIME = 15.0
# long enough to see the rate, short enough that the unstable error stays small
FIT_HORIZON = 8.0
GT_TIME = 30.0


def _orth(A):
    q, _ = np.linalg.qr(np.asarray(A, float))
    return q


def _full_frame(orbit, t0, t1, tol):
    d = orbit.dim
    init = (np.hstack([np.eye(d), np.zeros((d, d))]), np.hstack([np.zeros((d, d)), np.eye(d)]))
    return integrate_jacobi_frame(orbit, init, tol, t_start=t0, t_span=(min(t0, t1), max(t0, t1)))


# ---------------------------------------------------------------------------
# Graph transforms


def _flow_fixed_point(action: TransversalAction, t0, basis, direction, step, max_t, tol):
    """Limit of ``-(X-coefficient of dpsi_{+-t} v)`` for the columns of ``basis``."""
    orbit = action.orbit
    end = t0 + direction * max_t
    frame = _full_frame(orbit, t0, end, action.tol)
    L_prev = None
    move = np.inf
    contraction = np.inf
    n = int(round(max_t / step))
    for i in range(1, n + 1):
        t = t0 + direction * i * step
        Phi = frame.stacked(t)
        x, p = orbit.state(t)
        img = Phi @ basis
        L = -np.array([flow_coefficient(action.ham, x, p, t, img[:, j]) for j in range(basis.shape[1])])
        N_t = transversal_basis(action.ham, x, p, t)
        red = N_t.T @ action.P(t) @ img
        contraction = np.linalg.norm(red, 2) / np.linalg.norm(basis, 2)
        if L_prev is not None:
            move = float(np.max(np.abs(L - L_prev)))
            if move < tol and contraction < 1.0:
                return L, move, contraction, i * step, frame
        L_prev = L
    raise NoContractionError("graph transform did not contract", contraction=contraction,
                             last_move=move, max_t=max_t)


def graph_transform_splitting(action: TransversalAction, Es_N, Eu_N, t0=None, step=1.0,
                              max_t=60.0, tol=1e-10, fit_horizon=FIT_HORIZON) -> HyperbolicSplitting:
    """Lift a transversal splitting ``N = Es_N + Eu_N`` to a flow-invariant one.

    ``Es_N``/``Eu_N`` are given in the orthonormal ``N`` basis at ``t0``.
    The lifted bundles are graphs ``v + L(v) X`` with ``L`` the fixed point of
    the graph transform, found as a Cauchy limit in ``t``.
    """
    if action.fiber_dim == 0:
        raise ConfigurationError("trivial transversal bundle; nothing to split")
    t0 = action.orbit.start.clock if t0 is None else float(t0)
    N0 = action.N(t0)
    X0 = action.X(t0)
    Es = _orth(N0 @ np.atleast_2d(np.asarray(Es_N, float)).reshape(action.fiber_dim, -1))
    Eu = _orth(N0 @ np.atleast_2d(np.asarray(Eu_N, float)).reshape(action.fiber_dim, -1))
    Ls, move_s, c_s, ts, fr_f = _flow_fixed_point(action, t0, Es, +1, step, max_t, tol)
    Lu, move_u, c_u, tu, fr_b = _flow_fixed_point(action, t0, Eu, -1, step, max_t, tol)
    Es_full = _orth(Es + np.outer(X0, Ls))
    Eu_full = _orth(Eu + np.outer(X0, Lu))
    fits = {"L_s": Ls.tolist(), "L_u": Lu.tolist(), "fixed_point_move": max(move_s, move_u),
            "contraction_s": c_s, "contraction_u": c_u}
    times = np.linspace(0.0, min(fit_horizon, max_t), 101)
    C, lam = _fit_pair(fr_f, fr_b, t0, Es_full, Eu_full, times, fits)
    return HyperbolicSplitting(Es_full, Eu_full, C, lam, float(np.log(2 * C) / lam), fits)


def _fit_pair(fr_f, fr_b, t0, Es, Eu, times, fits):
    ns = [np.linalg.norm(fr_f.stacked(t0 + t) @ Es, 2) for t in times]
    nu = [np.linalg.norm(fr_b.stacked(t0 - t) @ Eu, 2) for t in times]
    Cs, ls, rs = exponential_fit(times, ns)
    Cu, lu, ru = exponential_fit(times, nu)
    fits["stable"] = {"C": Cs, "lambda": ls, "residual": rs}
    fits["unstable"] = {"C": Cu, "lambda": lu, "residual": ru}
    return max(Cs, Cu), min(ls, lu)


def graph_transform_period_map(P, E_ref=None, F_ref=None, tol=1e-12, max_iter=1000):
    """Invariant graphs of a period map ``P`` over ``E_ref`` (values in ``F_ref``).

    Iterates ``L <- (Q21 + Q22 L)(Q11 + Q12 L)^-1`` with ``Q`` the period
    map in the ``[E_ref F_ref]`` basis (``P^-1`` for the stable graph).
    Defaults: horizontal reference, vertical values.  Returns a dict with
    the slopes, the subspaces and the last fixed-point moves.
    """
    P = np.asarray(P, float)
    d = P.shape[0] // 2
    E_ref = np.vstack([np.eye(d), np.zeros((d, d))]) if E_ref is None else np.asarray(E_ref, float)
    F_ref = np.vstack([np.zeros((d, d)), np.eye(d)]) if F_ref is None else np.asarray(F_ref, float)
    B = np.hstack([E_ref, F_ref])
    out = {}
    for name, M in (("unstable", P), ("stable", np.linalg.inv(P))):
        Q = np.linalg.solve(B, M @ B)
        Q11, Q12, Q21, Q22 = Q[:d, :d], Q[:d, d:], Q[d:, :d], Q[d:, d:]
        L = np.zeros((d, d))
        move = np.inf
        for it in range(max_iter):
            L_new = np.linalg.solve((Q11 + Q12 @ L).T, (Q21 + Q22 @ L).T).T
            move = float(np.max(np.abs(L_new - L)))
            L = L_new
            if move < tol:
                break
        else:
            raise NoContractionError("period-map graph transform did not converge",
                                     bundle=name, last_move=move)
        # one more application measures how fixed the fixed point is
        L_check = np.linalg.solve((Q11 + Q12 @ L).T, (Q21 + Q22 @ L).T).T
        out[name] = {"L": L, "subspace": B @ np.vstack([np.eye(d), L]), "iterations": it + 1,
                     "fixed_point_move": float(np.max(np.abs(L_check - L)))}
    return out


# ---------------------------------------------------------------------------
# Theorem C


@dataclass
class TheoremCResult:
    verdict: str                 # "hyperbolic" | "not_hyperbolic" | "indeterminate"
    framework: str
    samples: list
    splitting: Optional[HyperbolicSplitting] = None
    notes: list = field(default_factory=list)

    @property
    def hyperbolic(self):
        return self.verdict == "hyperbolic"

    def to_dict(self):
        return {"verdict": self.verdict, "framework": self.framework, "samples": self.samples,
                "splitting": None if self.splitting is None else self.splitting.to_dict(),
                "notes": self.notes}


def _aitken_limit(values):
    """Extrapolated limit of a sequence sampled at doubling horizons."""
    v = list(values)
    if len(v) < 3:
        return v[-1]
    a, b, c = v[-3:]
    denom = (c - b) - (b - a)
    if denom == 0.0:
        return c
    return c - (c - b) ** 2 / denom


def _restricted_min(Nh, S, U):
    Q = Nh.T @ (U - S) @ Nh
    return float(np.linalg.eigvalsh(0.5 * (Q + Q.T))[0])


def _transverse_h(ham, point, framework):
    d = ham.dim
    if framework == "autonomous":
        H_p = ham.H_p(point.x, point.p, point.clock)
        if np.linalg.norm(H_p) < 1e-12:
            raise ConfigurationError("autonomous framework needs a regular point (H_p != 0)")
        return scipy.linalg.null_space(H_p[None, :])
    return np.eye(d)


def _framework_of(ham, framework):
    if framework is not None:
        if framework not in ("autonomous", "time_dependent"):
            raise ConfigurationError("unknown framework", framework=framework)
        return framework
    return "autonomous" if ham.autonomous else "time_dependent"


def decide_theorem_C(ham, greens, framework=None, floor=TRANSVERSALITY_FLOOR, horizon=FIT_HORIZON,
                     tol=DEFAULT_TOL, svd_time=SVD_TIME, gap_tol=1e-8) -> TheoremCResult:
    """Transversality verdict from Green bundles at sample points.

    A sample is hyperbolic when the smallest eigenvalue of ``U - S`` on the
    transversal directions clears ``floor * max(1, |S|, |U|)``.  Below the
    floor the sample is indeterminate.  Bundles that have not converged
    (on the transversal directions) are non-hyperbolic only if the
    per-horizon eigenvalues decrease and extrapolate below the floor.
    """
    framework = _framework_of(ham, framework)
    greens = list(greens)
    if not greens:
        raise ConfigurationError("no Green bundle samples")
    samples = []
    statuses = []
    for g in greens:
        Nh = _transverse_h(ham, g.at, framework)
        scale = max(1.0, np.linalg.norm(g.S_limit, 2), np.linalg.norm(g.U_limit, 2))
        thr = floor * scale
        if Nh.shape[1] == 0:
            samples.append({"status": "indeterminate", "reason": "no transversal directions"})
            statuses.append("indeterminate")
            continue
        seq = [_restricted_min(Nh, S, U) for _, S, U in g.slopes]
        m = _restricted_min(Nh, g.S_limit, g.U_limit)
        converged = g.converged
        if not converged and len(g.slopes) >= 2:
            (_, S1, U1), (_, S2, U2) = g.slopes[-2:]
            rgap = (np.linalg.norm(Nh.T @ (S2 - S1) @ Nh, 2)
                    + np.linalg.norm(Nh.T @ (U2 - U1) @ Nh, 2))
            converged = bool(rgap < gap_tol)
        info = {"at": g.at.to_dict(), "min_eig": m, "floor": thr, "converged": converged,
                "gap": g.convergence_gap}
        decreasing = len(seq) >= 3 and all(a >= b for a, b in zip(seq, seq[1:]))
        if converged:
            status = "hyperbolic" if m >= thr else "indeterminate"
        elif decreasing:
            lim = _aitken_limit(seq)
            info["extrapolated_min_eig"] = lim
            status = "not_hyperbolic" if lim < thr else "indeterminate"
        else:
            status = "indeterminate"
        info["status"] = status
        samples.append(info)
        statuses.append(status)
    if all(s == "hyperbolic" for s in statuses):
        verdict = "hyperbolic"
    elif "not_hyperbolic" in statuses:
        verdict = "not_hyperbolic"
    else:
        verdict = "indeterminate"
    result = TheoremCResult(verdict, framework, samples)
    if verdict == "hyperbolic":
        for g, info in zip(greens, samples):
            split = _splitting_at(ham, g, framework, info, horizon, tol, svd_time)
            if result.splitting is None:
                result.splitting = split
    return result


def _svd_stable(Phi, k):
    """Right-singular directions of the ``k`` smallest singular values."""
    _, _, vt = np.linalg.svd(Phi)
    return vt[-k:].T


def _splitting_at(ham, g: GreenBundles, framework, info, horizon, tol, svd_time):
    d = ham.dim
    c = g.at.clock
    span = max(horizon, svd_time, GT_TIME if framework == "autonomous" else 0.0) + 1.0
    orbit = integrate_orbit(ham, g.at, (c - span, c + span), tol)
    E, F = g.E_basis(), g.F_basis()
    fr_f = _full_frame(orbit, c, c + span, tol)
    fr_b = _full_frame(orbit, c, c - span, tol)
    if framework == "time_dependent":
        Es, Eu = _orth(E), _orth(F)
        fits = {}
        C, lam = _fit_pair(fr_f, fr_b, c, Es, Eu, np.linspace(0.0, horizon, 101), fits)
        split = HyperbolicSplitting(Es, Eu, C, lam, float(np.log(2 * C) / lam), fits)
        Es_svd = _svd_stable(fr_f.stacked(c + svd_time), d)
        Eu_svd = _svd_stable(fr_b.stacked(c - svd_time), d)
        info["angle_E_Es"] = largest_principal_angle(E, Es_svd)
        info["angle_F_Eu"] = largest_principal_angle(F, Eu_svd)
    else:
        action = TransversalAction(orbit, tol, check_times=[c])
        N0 = action.N(c)
        Nh = _transverse_h(ham, g.at, framework)
        Es_N = N0.T @ np.vstack([Nh, g.S_limit @ Nh])
        Eu_N = N0.T @ np.vstack([Nh, g.U_limit @ Nh])
        split = graph_transform_splitting(action, Es_N, Eu_N, c, max_t=GT_TIME,
                                          fit_horizon=horizon)
        X = action.X(c)
        # along X the slopes converge only like 1/T, so compare on N + <X>
        E_N = np.column_stack([np.vstack([Nh, g.S_limit @ Nh]), X])
        F_N = np.column_stack([np.vstack([Nh, g.U_limit @ Nh]), X])
        info["angle_E_EsX"] = largest_principal_angle(E_N, np.column_stack([split.Es, X]))
        info["angle_F_EuX"] = largest_principal_angle(F_N, np.column_stack([split.Eu, X]))
        Es_svd = _svd_stable(fr_f.stacked(c + svd_time), d - 1)
        Eu_svd = _svd_stable(fr_b.stacked(c - svd_time), d - 1)
        info["angle_E_Es"] = largest_principal_angle(E_N, np.column_stack([Es_svd, X]))
        info["angle_F_Eu"] = largest_principal_angle(F_N, np.column_stack([Eu_svd, X]))
        info["angle_full_E"] = largest_principal_angle(E, np.column_stack([split.Es, X]))
    info["C"], info["lambda"] = split.C, split.lam
    return split


# ---------------------------------------------------------------------------
# Theorem A


@dataclass
class TheoremAResult:
    verdict: str                 # "hyperbolic" | "hypothesis_not_satisfied" | "indeterminate"
    stages: dict
    a: float
    theorem_c: Optional[TheoremCResult] = None

    def to_dict(self):
        return {"verdict": self.verdict, "a": self.a, "stages": self.stages,
                "theorem_c": None if self.theorem_c is None else self.theorem_c.to_dict()}


def _l2_norm2(orbit, fld, a, b):
    ts, ws = _quad_nodes(_cuts(a, b, fld))
    return float(sum(w * fld.value(t) @ fld.value(t) for t, w in zip(ts, ws)))


def broken_variation_check(ham, point: PhasePoint, T, a, framework, tol=DEFAULT_TOL):
    """Fields ``xi_T`` equal to ``h`` at ``point``, Jacobi on each side and
    vanishing at ``clock -+ T``.

    Checks ``I(xi_T, xi_T) = h^T (U_T - S_T) h`` and the positivity chain
    ``a ||xi_T||^2 <= I(xi_T, xi_T)`` and returns ``b_T = min ||xi_T||^2``.
    """
    d = ham.dim
    c = point.clock
    orbit = integrate_orbit(ham, point, (c - T, c + T), tol)
    fwd = integrate_jacobi_frame(orbit, vertical_start(d), tol, t_start=c - T, t_span=(c - T, c))
    bwd = integrate_jacobi_frame(orbit, vertical_start(d), tol, t_start=c + T, t_span=(c, c + T))
    Hf, Vf = fwd.at(c)
    Hb, Vb = bwd.at(c)
    U_T = np.linalg.solve(Hf.T, Vf.T).T
    S_T = np.linalg.solve(Hb.T, Vb.T).T
    Q = U_T - S_T
    Nh = _transverse_h(ham, point, framework)
    rows = []
    b_T = np.inf
    worst_rel = 0.0
    chain_ok = True
    for j in range(Nh.shape[1]):
        h = Nh[:, j]
        fld = (FrameField(fwd, np.linalg.solve(Hf, h), c - T, c, include_end=False)
               + FrameField(bwd, np.linalg.solve(Hb, h), c, c + T))
        I = index_form_direct(orbit, fld, fld)
        q = float(h @ Q @ h)
        n2 = _l2_norm2(orbit, fld, c - T, c + T)
        rel = abs(I - q) / max(1.0, abs(q))
        worst_rel = max(worst_rel, rel)
        b_T = min(b_T, n2)
        chain_ok = chain_ok and a * n2 <= I * (1 + 1e-6) + 1e-9
        rows.append({"h": h.tolist(), "I": I, "hQh": q, "l2": n2})
    q_min = float(np.linalg.eigvalsh(Nh.T @ (0.5 * (Q + Q.T)) @ Nh)[0])
    ok = worst_rel < 1e-6 and chain_ok and q_min >= a * b_T * (1 - 1e-6)
    return {"T": T, "b_T": b_T, "Q_min_eig": q_min, "consistency": worst_rel,
            "chain_ok": bool(chain_ok), "passed": bool(ok), "fields": rows}


def decide_theorem_A(ham, points, T_list=(5, 10, 20, 40), mesh=256, framework=None,
                     midpoint_constraint=None, green_T=10.0, horizon=FIT_HORIZON, tol=DEFAULT_TOL,
                     workers=1) -> TheoremAResult:
    """Index-form pipeline: positivity scan, broken fields, Green transversality."""
    framework = _framework_of(ham, framework)
    points = list(points)
    if midpoint_constraint is None:
        midpoint_constraint = framework == "autonomous"
    stages = {}
    try:
        scan = uniform_positivity_scan(ham, points, T_list, mesh, midpoint_constraint, tol, workers)
    except GreenBundlesError as exc:
        raise StageFailure("positivity scan failed: %s" % exc, stage="scan", cause=exc.to_dict()) from exc
    a = scan.uniform_a
    stage1 = scan.to_dict()
    stage1["passed"] = bool(scan.bounded_below)
    stages["scan"] = stage1
    if not scan.bounded_below:
        if a < 0:
            bad = [cell for cell in scan.cells if cell["a_min"] < 0]
            cell = bad[0]
            pt = PhasePoint(cell["point"]["x"], cell["point"]["p"], cell["point"]["clock"])
            orb = integrate_orbit(ham, pt, (pt.clock, pt.clock + cell["T"]), tol)
            stages["scan"]["conjugate_times"] = find_conjugate_points(orb).to_dict()["conjugate_times"]
        result = TheoremAResult("hypothesis_not_satisfied", stages, a)
        try:
            result.theorem_c = decide_theorem_C(ham, [green_bundles(ham, p, green_T) for p in points],
                                                framework, horizon=horizon, tol=tol)
        except GreenBundlesError as exc:
            stages["theorem_c_error"] = exc.to_dict()
        return result
    try:
        rows = [broken_variation_check(ham, p, green_T, a, framework, tol) for p in points]
    except GreenBundlesError as exc:
        raise StageFailure("broken-field stage failed: %s" % exc, stage="broken_fields",
                           cause=exc.to_dict()) from exc
    stages["broken_fields"] = {"passed": all(r["passed"] for r in rows), "samples": rows}
    try:
        greens = [green_bundles(ham, p, green_T) for p in points]
        tc = decide_theorem_C(ham, greens, framework, horizon=horizon, tol=tol)
    except GreenBundlesError as exc:
        raise StageFailure("transversality stage failed: %s" % exc, stage="theorem_c",
                           cause=exc.to_dict()) from exc
    stages["theorem_c"] = {"passed": tc.hyperbolic, "verdict": tc.verdict}
    if stages["broken_fields"]["passed"] and tc.hyperbolic:
        verdict = "hyperbolic"
    else:
        verdict = "indeterminate"
    return TheoremAResult(verdict, stages, a, tc)
