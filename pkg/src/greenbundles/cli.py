"""``gb`` command-line front end.

Exit codes: 0 success, 1 mathematical negative (hypotheses not met, not
hyperbolic, not quasi-hyperbolic), 2 configuration error, 3 numerical
failure.  Errors are reported as one JSON object on stderr.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import catalog, reports
from .conjugate import find_conjugate_points, green_bundles
from .errors import ConfigurationError, GreenBundlesError
from .flow import (
    DEFAULT_TOL,
    PhasePoint,
    horizontal_start,
    integrate_jacobi_frame,
    integrate_orbit,
    vertical_start,
)
from .hyperbolicity.cocycle import SampledCocycle, quasi_hyperbolicity_check
from .hyperbolicity.theorems import decide_theorem_A, decide_theorem_C
from .hyperbolicity.transversal import TransversalAction
from .index_form import uniform_positivity_scan
from .lagrangian import certify_bounded
from .riccati import orbit_region, riccati_bound, sample_times, solve_riccati, verify_bound
from .sysfile import dump_system, load_system

log = logging.getLogger("greenbundles")

EXIT_OK, EXIT_NEGATIVE, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
NEGATIVE_VERDICTS = {"hypothesis_not_satisfied", "not_hyperbolic", "not_quasi_hyperbolic"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigurationError(message, usage=self.format_usage().strip())


@dataclass
class RunConfig:
    command: str
    system: str = None
    tol: float = DEFAULT_TOL
    workers: int = 1
    out: str = None
    seed: int = 0
    plot_data: bool = False
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigurationError("tolerance must be positive", tol=self.tol)
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1", workers=self.workers)
        if self.out is not None:
            try:
                os.makedirs(self.out, exist_ok=True)
            except OSError as exc:
                raise ConfigurationError("cannot create output directory", out=self.out,
                                         reason=str(exc)) from None
            if not os.access(self.out, os.W_OK):
                raise ConfigurationError("output directory is not writable", out=self.out)


# ---------------------------------------------------------------------------
# helpers


def _emit(cfg, stem, doc, csv_rows=None, header=None):
    """Print the JSON report and write JSON/CSV files when ``--out`` is set."""
    text = reports.dumps(doc)
    print(text)
    if cfg.out is not None:
        reports.write_json(os.path.join(cfg.out, stem + ".json"), doc)
        if csv_rows is not None:
            ext = ".dat" if cfg.plot_data else ".csv"
            reports.write_csv(os.path.join(cfg.out, stem + ext), header, csv_rows, cfg.plot_data)
    elif csv_rows is not None and cfg.plot_data:
        sys.stdout.write(reports.csv_text(header, csv_rows, True))


def _start(entry, args):
    pt = entry.orbit_start
    x = pt.x if args.x is None else np.array(args.x, float)
    p = pt.p if args.p is None else np.array(args.p, float)
    c = pt.clock if args.clock is None else args.clock
    if len(x) != entry.dim or len(p) != entry.dim:
        raise ConfigurationError("start point has wrong dimension", dim=entry.dim)
    return PhasePoint(x, p, c)


def _parse_points(spec, entry):
    """``--set``: a JSON/CSV file of rows or inline ``x..,p..[,clock];...``."""
    d = entry.dim
    if spec is None:
        return [entry.orbit_start]
    rows = []
    if os.path.exists(spec):
        if spec.lower().endswith(".json"):
            with open(spec) as fh:
                doc = json.load(fh)
            for r in doc:
                if isinstance(r, dict):
                    rows.append(list(r["x"]) + list(r["p"]) + [r.get("clock", 0.0)])
                else:
                    rows.append(list(r))
        else:
            with open(spec) as fh:
                for r in csv.reader(fh):
                    if r and not r[0].lstrip().startswith("#"):
                        try:
                            rows.append([float(v) for v in r])
                        except ValueError:
                            continue  # header line
    else:
        try:
            rows = [[float(v) for v in part.split(",")] for part in spec.split(";") if part.strip()]
        except ValueError:
            raise ConfigurationError("cannot parse --set", value=spec) from None
    pts = []
    for r in rows:
        if len(r) not in (2 * d, 2 * d + 1):
            raise ConfigurationError("sample row has wrong length", row=r, dim=d)
        pts.append(PhasePoint(r[:d], r[d:2 * d], r[2 * d] if len(r) > 2 * d else 0.0))
    if not pts:
        raise ConfigurationError("empty sample set", value=spec)
    return pts


def _entry(cfg):
    if cfg.system is None:
        raise ConfigurationError("--system is required")
    return load_system(cfg.system)


def _times(orbit, n):
    return np.linspace(orbit.t0, orbit.t1, n)


# ---------------------------------------------------------------------------
# subcommands


def cmd_systems(cfg, args):
    if args.action == "export":
        if not args.name:
            raise ConfigurationError("systems export needs a name")
        entry = load_system(args.name)
        doc = entry.to_system_file()
        if args.file:
            dump_system(entry, args.file)
        print(reports.dumps(doc))
        return EXIT_OK
    doc = [catalog.get(n).summary() for n in catalog.names()]
    print(reports.dumps(doc))
    return EXIT_OK


def cmd_orbit(cfg, args):
    entry = _entry(cfg)
    ham = entry.hamiltonian  # the suspension changes nothing here but hides the energy
    start = _start(entry, args)
    orbit = integrate_orbit(ham, start, args.T, cfg.tol)
    d = entry.dim
    rows = []
    for t in _times(orbit, args.samples):
        x, p = orbit.state(t)
        rows.append([t, *x, *p, ham.H(x, p, t)])
    header = ["t"] + ["x%d" % i for i in range(d)] + ["p%d" % i for i in range(d)] + ["H"]
    doc = {"system": entry.name, "start": start.to_dict(), "T": args.T,
           "energy_drift": orbit.energy_drift,
           "end": orbit.point(orbit.t1).to_dict()}
    _emit(cfg, "orbit", doc, rows, header)
    return EXIT_OK


def cmd_jacobi(cfg, args):
    entry = _entry(cfg)
    ham = entry.hamiltonian  # the suspension changes nothing here but hides the energy
    start = _start(entry, args)
    orbit = integrate_orbit(ham, start, args.T, cfg.tol)
    d = entry.dim
    init = vertical_start(d) if args.start == "vertical" else horizontal_start(d)
    frame = integrate_jacobi_frame(orbit, init, cfg.tol)
    rows = []
    for t in _times(orbit, args.samples):
        x, p = orbit.state(t)
        Hm, Vm = frame.at(t)
        rows.append([t, *x, *p, ham.H(x, p, t), *Hm.ravel(), *Vm.ravel()])
    header = (["t"] + ["x%d" % i for i in range(d)] + ["p%d" % i for i in range(d)] + ["H"]
              + ["H%d%d" % (i, j) for i in range(d) for j in range(d)]
              + ["V%d%d" % (i, j) for i in range(d) for j in range(d)])
    ts = _times(orbit, 21)
    doc = {"system": entry.name, "start": start.to_dict(), "frame_start": args.start, "T": args.T,
           "jacobi_residual": frame.jacobi_residual(ts),
           "lagrangian_defect": float(max(frame.lagrangian_defect(t) for t in ts))}
    _emit(cfg, "jacobi", doc, rows, header)
    return EXIT_OK


def cmd_riccati(cfg, args):
    entry = _entry(cfg)
    ham = entry.analysis_hamiltonian()
    start = _start(entry, args)
    orbit = integrate_orbit(ham, start, args.T, cfg.tol)
    frame = integrate_jacobi_frame(orbit, vertical_start(entry.dim), cfg.tol)
    sol = solve_riccati(frame)
    cert = certify_bounded(ham, orbit_region(orbit, args.pad), args.grid)
    bound = riccati_bound(cert)
    report = verify_bound(sol, bound)
    d = entry.dim
    rows = []
    for t in sample_times(frame, 2):
        S = sol.S(t)
        nrm = sol.norm(t)
        ok = bool(np.isfinite(nrm) and nrm < bound.A)
        rows.append([t, *S.ravel(), nrm, bound.A, int(ok)])
    header = ["t"] + ["S%d%d" % (i, j) for i in range(d) for j in range(d)] + ["norm", "A", "pass"]
    doc = {"system": entry.name, "blowup_times": sol.blowup_times, "bound": bound.to_dict(),
           "verification": report.to_dict()}
    _emit(cfg, "riccati", doc, rows, header)
    return EXIT_OK if report.passed else EXIT_NUMERIC


def cmd_conjugate(cfg, args):
    entry = _entry(cfg)
    ham = entry.analysis_hamiltonian()
    start = _start(entry, args)
    orbit = integrate_orbit(ham, start, args.T, cfg.tol)
    rep = find_conjugate_points(orbit, tol=cfg.tol)
    doc = {"system": entry.name, "start": start.to_dict(), **rep.to_dict()}
    rows = [[t, m] for t, m in rep.conjugate_times]
    _emit(cfg, "conjugate", doc, rows, ["t", "multiplicity"])
    return EXIT_OK


def cmd_greens(cfg, args):
    entry = _entry(cfg)
    ham = entry.analysis_hamiltonian()
    start = _start(entry, args)
    g = green_bundles(ham, start, args.T, tol=args.gap_tol, ode_tol=cfg.tol)
    doc = {"system": entry.name, **g.to_dict()}
    rows = [[T, gap] for T, gap in g.history]
    _emit(cfg, "greens", doc, rows, ["T", "gap"])
    return EXIT_OK


def cmd_index(cfg, args):
    entry = _entry(cfg)
    ham = entry.analysis_hamiltonian()
    pts = _parse_points(args.set, entry)
    if args.midpoint_constraint is None:
        mc = entry.framework == "autonomous"
    else:
        mc = args.midpoint_constraint == "on"
    rep = uniform_positivity_scan(ham, pts, args.T, args.mesh, mc, cfg.tol, cfg.workers)
    doc = {"system": entry.name, "midpoint_constraint": mc, **rep.to_dict()}
    rows = [[T, a] for T, a in zip(rep.T_scanned, rep.a_min)]
    _emit(cfg, "index", doc, rows, ["T", "a_min"])
    return EXIT_OK


def _system_cocycle(entry, ham, point, horizon, tol):
    """Unit-time maps of the linearized flow (transversal part when autonomous)."""
    n = 2 * int(horizon) + 1
    c = point.clock - int(horizon)
    orbit = integrate_orbit(ham, point, (c, c + n), tol)
    if entry.framework == "autonomous":
        action = TransversalAction(orbit, tol)
        return SampledCocycle.from_action(action, 1.0, n, t_start=c), int(horizon)
    d = entry.dim
    maps = []
    for k in range(n):
        init = (np.hstack([np.eye(d), np.zeros((d, d))]), np.hstack([np.zeros((d, d)), np.eye(d)]))
        fr = integrate_jacobi_frame(orbit, init, tol, t_start=c + k, t_span=(c + k, c + k + 1))
        maps.append(fr.stacked(c + k + 1))
    return SampledCocycle(maps, 1.0, "clamp"), int(horizon)


def cmd_hyperbolicity(cfg, args):
    entry = _entry(cfg)
    ham = entry.analysis_hamiltonian()
    pts = _parse_points(args.set, entry)
    rows = []
    if args.pipeline == "theoremA":
        res = decide_theorem_A(ham, pts, args.T_list, args.mesh, entry.framework,
                               green_T=args.green_T, horizon=args.horizon, tol=cfg.tol,
                               workers=cfg.workers)
        verdict = res.verdict
        tc = res.theorem_c
    elif args.pipeline == "theoremC":
        greens = [green_bundles(ham, p, args.green_T, ode_tol=cfg.tol) for p in pts]
        res = decide_theorem_C(ham, greens, entry.framework, horizon=args.horizon, tol=cfg.tol)
        verdict = res.verdict
        tc = res
    else:
        reps = []
        for p in pts:
            cocycle, mid = _system_cocycle(entry, ham, p, args.horizon, cfg.tol)
            reps.append(quasi_hyperbolicity_check(cocycle, int(args.horizon), args.threshold,
                                                  points=[mid], seed=cfg.seed))
        verdict = "quasi_hyperbolic" if all(r.quasi_hyperbolic for r in reps) else "not_quasi_hyperbolic"
        res = {"verdict": verdict, "reports": reps}
        tc = None
        for r in reps:
            if r.splitting is not None:
                rows.append([r.splitting.C, r.splitting.lam])
    if tc is not None:
        for s in tc.samples:
            if "C" in s:
                rows.append([s["C"], s["lambda"]])
    doc = {"system": entry.name, "pipeline": args.pipeline, "verdict": verdict, "result": res}
    _emit(cfg, "hyperbolicity", doc, rows, ["C", "lambda"])
    return EXIT_NEGATIVE if verdict in NEGATIVE_VERDICTS else EXIT_OK


_BUILTIN_COCYCLES = {
    "hyperbolic": [[2.0, 0.0], [0.0, 0.5]],
    "rotation": [[np.cos(1.0), -np.sin(1.0)], [np.sin(1.0), np.cos(1.0)]],
    "shear": [[1.0, 1.0], [0.0, 1.0]],
}


def cmd_cocycle(cfg, args):
    if args.maps:
        try:
            with open(args.maps) as fh:
                maps = np.asarray(json.load(fh), float)
        except (OSError, ValueError) as exc:
            raise ConfigurationError("cannot read cocycle maps", path=args.maps, reason=str(exc)) from None
    else:
        maps = np.asarray(_BUILTIN_COCYCLES[args.builtin], float)
    if maps.ndim == 2:
        cocycle = SampledCocycle.constant(maps)
    elif maps.ndim == 3:
        cocycle = SampledCocycle(list(maps), 1.0, args.boundary)
    else:
        raise ConfigurationError("maps must be a matrix or a list of matrices")
    points = args.points if args.points else None
    rep = quasi_hyperbolicity_check(cocycle, args.horizon, args.threshold, points=points,
                                    n_directions=args.directions, seed=cfg.seed)
    rows = []
    if rep.splitting is not None:
        rows.append([rep.splitting.C, rep.splitting.lam])
    _emit(cfg, "cocycle", rep.to_dict(), rows, ["C", "lambda"])
    return EXIT_OK if rep.quasi_hyperbolic else EXIT_NEGATIVE


# ---------------------------------------------------------------------------
# parser


def _global_flags(suppress):
    # subcommands repeat the global flags without defaults, so a flag given
    # before the subcommand is not overwritten
    dflt = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    g = _Parser(add_help=False)
    g.add_argument("--tol", type=float, default=dflt(DEFAULT_TOL), help="integrator tolerance")
    g.add_argument("--workers", type=int, default=dflt(1))
    g.add_argument("--out", default=dflt(None), help="directory for JSON/CSV reports")
    g.add_argument("--seed", type=int, default=dflt(0))
    g.add_argument("--plot-data", action="store_true", default=dflt(False),
                   help="gnuplot-ready columns")
    return g


def build_parser():
    common = _global_flags(True)
    parser = _Parser(prog="gb", description="Green bundles, index forms and hyperbolicity tests.",
                     parents=[_global_flags(False)])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("systems", parents=[common], help="list or export builtin systems")
    p.add_argument("action", choices=["list", "export"])
    p.add_argument("name", nargs="?")
    p.add_argument("--file", default=None)

    def with_system(name, help_text, T=10.0):
        q = sub.add_parser(name, parents=[common], help=help_text)
        q.add_argument("--system", required=True, help="builtin name or system file")
        q.add_argument("--T", type=float, default=T)
        q.add_argument("--x", type=float, nargs="+")
        q.add_argument("--p", type=float, nargs="+")
        q.add_argument("--clock", type=float)
        return q

    q = with_system("orbit", "integrate an orbit")
    q.add_argument("--samples", type=int, default=201)
    q = with_system("jacobi", "integrate a Jacobi frame")
    q.add_argument("--samples", type=int, default=201)
    q.add_argument("--start", choices=["vertical", "horizontal"], default="vertical")
    q = with_system("riccati", "Riccati slopes and the a priori bound")
    q.add_argument("--pad", type=float, default=0.25, help="region padding around the orbit")
    q.add_argument("--grid", type=int, default=5)
    with_system("conjugate", "conjugate points on [clock, clock + T]")
    q = with_system("greens", "Green bundles at the start point")
    q.add_argument("--gap-tol", type=float, default=1e-8)

    q = sub.add_parser("index", parents=[common], help="index-form positivity scan")
    q.add_argument("--system", required=True)
    q.add_argument("--T", type=float, nargs="+", default=[5.0, 10.0, 20.0, 40.0])
    q.add_argument("--mesh", type=int, default=256)
    q.add_argument("--midpoint-constraint", choices=["on", "off"], default=None)
    q.add_argument("--set", default=None, help="sample file or inline 'x..,p..[,clock];...'")

    q = sub.add_parser("hyperbolicity", parents=[common], help="hyperbolicity verdict")
    q.add_argument("--system", required=True)
    q.add_argument("--set", default=None)
    q.add_argument("--pipeline", choices=["theoremA", "theoremC", "cocycle"], default="theoremC")
    q.add_argument("--horizon", type=float, default=8.0)
    q.add_argument("--threshold", type=float, default=1e3)
    q.add_argument("--T-list", dest="T_list", type=float, nargs="+", default=[5.0, 10.0, 20.0, 40.0])
    q.add_argument("--mesh", type=int, default=256)
    q.add_argument("--green-T", dest="green_T", type=float, default=10.0)

    q = sub.add_parser("cocycle", parents=[common], help="quasi-hyperbolicity of a sampled cocycle")
    src = q.add_mutually_exclusive_group()
    src.add_argument("--maps", default=None, help="JSON matrix or list of matrices")
    src.add_argument("--builtin", choices=sorted(_BUILTIN_COCYCLES), default="hyperbolic")
    q.add_argument("--boundary", choices=["periodic", "clamp"], default="periodic")
    q.add_argument("--horizon", type=int, default=50)
    q.add_argument("--threshold", type=float, default=1e3)
    q.add_argument("--points", type=int, nargs="+")
    q.add_argument("--directions", type=int, default=360)
    return parser


_COMMANDS = {
    "systems": cmd_systems, "orbit": cmd_orbit, "jacobi": cmd_jacobi, "riccati": cmd_riccati,
    "conjugate": cmd_conjugate, "greens": cmd_greens, "index": cmd_index,
    "hyperbolicity": cmd_hyperbolicity, "cocycle": cmd_cocycle,
}


def _setup_logging():
    level = os.environ.get("GB_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _fail(exc, code):
    if isinstance(exc, GreenBundlesError):
        doc = exc.to_dict()
    else:
        doc = {"error": "internal", "message": "%s: %s" % (type(exc).__name__, exc)}
    doc["exit_code"] = code
    sys.stderr.write(reports.dumps(doc) + "\n")
    return code


def run(argv=None):
    """Parse ``argv``, run the subcommand and return the exit code."""
    _setup_logging()
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise ConfigurationError("no subcommand given", commands=sorted(_COMMANDS))
        cfg = RunConfig(args.command, getattr(args, "system", None), args.tol, args.workers,
                        args.out, args.seed, args.plot_data)
        return _COMMANDS[args.command](cfg, args)
    except ConfigurationError as exc:
        return _fail(exc, EXIT_CONFIG)
    except GreenBundlesError as exc:
        return _fail(exc, EXIT_NUMERIC)
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        return _fail(exc, EXIT_NUMERIC)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
