"""Builtin target descriptors understood by ``qpfc verify``.

========================================  ==========================================
descriptor                                operator
========================================  ==========================================
``identity``                              identity
``single:<axis>:<site>:<angle>``          ``exp(-i angle sigma^axis)`` on one site
``bond:<k>:<angle>``                      ``exp(+i angle Z_k Z_k+1)`` on a chain
``bond:<i>,<j>:<angle>``                  ``exp(+i angle Z_(i,j) Z_(i,j+1))`` on a grid
``rot:<axis>:<angle>:<s1>,<s2>,...``      the rotation on every listed site
``zz:<angle>:<a>-<b>,...``                ``exp(+i angle sum Z_a Z_b)``
``dimer-exact:lambda=..,t=..[,J=..]``     ``exp(-i t H_d)`` of the coupled-dimer model
``readout:<L>:<anchor>``                  population map of ``|11...1>`` (see below)
========================================  ==========================================

Grid sites are written ``i,j`` in ``single``/``bond`` and ``i.j`` inside lists.
``readout`` is not a unitary; :func:`readout_fidelity` scores it by the worst
site population in the expected level.
"""

from __future__ import annotations

import math

import numpy as np

from .engine import (
    FidelityReport,
    SiteRotation,
    StateVector,
    Target,
    apply_schedule,
    zz_phase,
)
from .lattice import Axis, GeometryError, LatticeGeometry, Schedule
from .schedule_io import parse_site


class TargetSpecError(ValueError):
    """Malformed target descriptor."""


def _real(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise TargetSpecError(f"not a number: {text!r}") from None


def _site(text: str, geometry: LatticeGeometry):
    try:
        site = parse_site(text.replace(",", "."))
    except ValueError:
        raise TargetSpecError(f"bad site {text!r}") from None
    if geometry.is_chain != isinstance(site, int):
        raise GeometryError(f"site {text!r} does not match a {geometry.kind} geometry")
    if not geometry.contains(site):
        raise GeometryError(f"site {text!r} outside the geometry")
    return site


def _horizontal_partner(site, geometry):
    partner = site + 1 if isinstance(site, int) else (site[0], site[1] + 1)
    if not geometry.contains(partner):
        raise GeometryError(f"bond from {site} leaves the geometry")
    return partner


def _keyvals(text: str) -> dict:
    out = {}
    for item in filter(None, text.split(",")):
        key, sep, val = item.partition("=")
        if not sep:
            raise TargetSpecError(f"expected key=value, got {item!r}")
        out[key.strip()] = _real(val)
    return out


def is_readout(desc: str) -> bool:
    return desc.startswith("readout:")


def parse_target(desc: str, geometry: LatticeGeometry, dim: int = 2) -> Target:
    """Exact target operator named by ``desc`` on ``geometry``.

    Raises :class:`TargetSpecError` for malformed text and
    :class:`~qpfc.lattice.GeometryError` when the descriptor does not fit.
    """
    head, _, rest = desc.partition(":")
    parts = rest.split(":") if rest else []
    if head != "readout" and dim != 2:
        raise GeometryError(f"target {desc!r} needs qubits, schedule has dim={dim}")
    if head == "identity":
        ops = ()
    elif head == "single" and len(parts) == 3:
        ops = (SiteRotation((_site(parts[1], geometry),), Axis(parts[0]), _real(parts[2])),)
    elif head == "bond" and len(parts) == 2:
        a = _site(parts[0], geometry)
        ops = (zz_phase([(a, _horizontal_partner(a, geometry))], _real(parts[1])),)
    elif head == "rot" and len(parts) == 3:
        sites = tuple(_site(s, geometry) for s in parts[2].split(",") if s)
        ops = (SiteRotation(sites, Axis(parts[0]), _real(parts[1])),)
    elif head == "zz" and len(parts) == 2:
        pairs = []
        for item in filter(None, parts[1].split(",")):
            a, _, b = item.partition("-")
            pairs.append((_site(a, geometry), _site(b, geometry)))
        for a, b in pairs:
            if not geometry.are_neighbors(a, b):
                raise GeometryError(f"{a}-{b} is not a bond")
        ops = (zz_phase(pairs, _real(parts[0])),)
    elif head == "dimer-exact" and len(parts) == 1:
        from .dimer import DimerSystem

        kv = _keyvals(parts[0])
        unknown = set(kv) - {"lambda", "t", "J"}
        if unknown or not {"lambda", "t"} <= set(kv):
            raise TargetSpecError(f"dimer-exact needs lambda and t (J optional), got {sorted(kv)}")
        if geometry.is_chain:
            raise GeometryError("dimer-exact needs a grid geometry")
        sys = DimerSystem(geometry.rows, geometry.cols, kv.get("J", 1.0), kv["lambda"], kv["t"])
        return Target(geometry, dim, sys.exact_target().ops, desc)
    elif head == "readout":
        raise TargetSpecError("readout is a population map; use readout_fidelity")
    else:
        raise TargetSpecError(f"unrecognised target descriptor {desc!r}")
    return Target(geometry, dim, ops, desc)


def readout_spec(desc: str) -> tuple[int, int]:
    parts = desc.split(":")
    if len(parts) != 3 or parts[0] != "readout":
        raise TargetSpecError(f"expected readout:<L>:<anchor>, got {desc!r}")
    try:
        return int(parts[1]), int(parts[2])
    except ValueError:
        raise TargetSpecError(f"bad readout descriptor {desc!r}") from None


def readout_fidelity(schedule: Schedule, desc: str) -> FidelityReport:
    """Worst per-site population in the level the readout map should reach from ``|11...1>``."""
    from .compiler import readout_levels

    levels, anchor = readout_spec(desc)
    g = schedule.geometry
    if not g.is_chain or schedule.dim != levels + 2 or not 1 <= anchor <= g.length:
        raise GeometryError(f"{desc!r} needs a chain with dim={levels + 2} containing the anchor")
    pops = apply_schedule(StateVector.all_one(g, schedule.dim), schedule).populations()
    want = readout_levels(levels, g.length, anchor)
    values = pops[np.arange(g.n_sites), want]
    worst = float(values.min())
    return FidelityReport(worst, "population", 0, float(math.fabs(1 - worst)), None)
