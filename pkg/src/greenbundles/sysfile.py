"""System-definition files (JSON or TOML).

A file either names a builtin::

    {"kind": "builtin", "name": "mathieu(0.2, 2)"}

or defines a mechanical system ``L = v^T G v / 2 - U(x, t)``::

    name = "my_system"
    dim = 1
    periodicity = [true]
    kind = "mechanical"
    kinetic = [[1.0]]
    framework = "time_dependent"     # optional
    suspension_period = 1.0          # optional
    [potential]
    terms = [{freq = [1.0], amplitude = 1.0, phase = 0.0, q = 0.0, omega = 0.0}]
    quadratic = [[0.0]]              # optional
    [time_dependence]
    kind = "autonomous"              # or "periodic" with period = ...
    [orbit]
    x = [0.0]
    p = [0.0]
    clock = 0.0

Builtin files may also override ``orbit``.  ``load_system`` accepts a path
or a builtin name and returns a :class:`CatalogEntry`.
"""
from __future__ import annotations

import json
import os
import sys

from . import catalog
from .catalog import CatalogEntry
from .errors import ConfigurationError
from .flow import PhasePoint
from .lagrangian import ConfigSpace, TimeDependence, TrigPotential, mechanical_pair

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


def _read(path):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigurationError("cannot read system file", path=str(path), reason=str(exc)) from None
    try:
        if str(path).lower().endswith(".toml"):
            return tomllib.loads(raw.decode("utf-8"))
        return json.loads(raw.decode("utf-8"))
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigurationError("malformed system file", path=str(path), reason=str(exc)) from None


def _orbit(doc, default):
    o = doc.get("orbit")
    if o is None:
        return default
    try:
        return PhasePoint(o["x"], o["p"], float(o.get("clock", 0.0)))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError("bad orbit block", reason=str(exc)) from None


def _time_dependence(doc):
    td = doc.get("time_dependence") or {"kind": "autonomous"}
    kind = td.get("kind", "autonomous")
    if kind == "autonomous":
        return TimeDependence()
    if kind == "periodic":
        if "period" not in td:
            raise ConfigurationError("periodic time dependence needs a period")
        return TimeDependence.periodic_in(float(td["period"]))
    raise ConfigurationError("unknown time dependence", kind=kind)


def system_from_dict(doc) -> CatalogEntry:
    """Build an entry from a parsed system-definition document."""
    if not isinstance(doc, dict):
        raise ConfigurationError("system definition must be a table/object")
    kind = doc.get("kind", "mechanical")
    if kind == "builtin":
        if "name" not in doc:
            raise ConfigurationError("builtin system needs a name")
        entry = catalog.get(doc["name"])
        entry.orbit_start = _orbit(doc, entry.orbit_start)
        return entry
    if kind != "mechanical":
        raise ConfigurationError("unknown system kind", kind=kind)
    try:
        d = int(doc["dim"])
        periodic = [bool(b) for b in doc.get("periodicity", [True] * d)]
        pot = doc.get("potential", {})
        potential = TrigPotential(d, pot.get("terms", []), pot.get("quadratic"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError("bad mechanical system definition", reason=str(exc)) from None
    if len(periodic) != d:
        raise ConfigurationError("periodicity has wrong length", dim=d)
    space = ConfigSpace(d, periodic)
    td = _time_dependence(doc)
    name = str(doc.get("name", "custom"))
    lag, ham = mechanical_pair(space, potential, doc.get("kinetic"), td, name=name)
    framework = doc.get("framework", "autonomous" if td.autonomous else "time_dependent")
    if framework not in ("autonomous", "time_dependent"):
        raise ConfigurationError("unknown framework", framework=framework)
    susp = doc.get("suspension_period")
    spec = {k: v for k, v in doc.items() if k not in ("orbit", "framework", "suspension_period")}
    return CatalogEntry(
        name=name, lagrangian=lag, hamiltonian=ham,
        orbit_start=_orbit(doc, PhasePoint([0.0] * d, [0.0] * d)),
        framework=framework, hyperbolic=None, spec=spec,
        suspension_period=None if susp is None else float(susp),
    )


def load_system(source) -> CatalogEntry:
    """Builtin name, or path to a ``.json``/``.toml`` system file."""
    source = str(source)
    if os.path.exists(source):
        return system_from_dict(_read(source))
    if source.lower().endswith((".json", ".toml")):
        raise ConfigurationError("system file not found", path=source)
    return catalog.get(source)


def dump_system(entry: CatalogEntry, path):
    """Write ``entry`` as JSON (the TOML reader is read-only in the stdlib)."""
    with open(path, "w") as fh:
        json.dump(entry.to_system_file(), fh, indent=2, sort_keys=True)
        fh.write("\n")
