"""Plain-text schedule files.

One record per line, ``key=value`` fields, reals written with 17 significant
digits so files round-trip exactly. Lines starting with ``#`` are comments;
they carry the schedule's free-form metadata.
"""

from __future__ import annotations

from pathlib import Path

from .lattice import (
    Axis,
    BondSet,
    Direction,
    Heisenberg,
    Ising,
    LatticeGeometry,
    Periodic,
    Schedule,
    Subspace,
    Uniform,
    XXZ,
    XYBond,
)


class ScheduleFormatError(ValueError):
    pass


def fmt_real(x: float) -> str:
    return format(float(x), ".17g")


def fmt_short(x: float) -> str:
    """Shortest text that reads back to the same double."""
    return repr(float(x))


def format_site(site) -> str:
    return f"{site[0]}.{site[1]}" if isinstance(site, tuple) else str(site)


def parse_site(text: str):
    if "." in text:
        i, j = text.split(".")
        return (int(i), int(j))
    return int(text)


def format_bonds(bonds: BondSet) -> str:
    if bonds.selector != "explicit":
        return bonds.selector
    return "explicit:" + ",".join(f"{format_site(a)}-{format_site(b)}" for a, b in bonds.pairs)


def parse_bonds(text: str) -> BondSet:
    if text.startswith("explicit:"):
        pairs = []
        for item in filter(None, text[len("explicit:"):].split(",")):
            a, b = item.split("-")
            pairs.append((parse_site(a), parse_site(b)))
        return BondSet.explicit(pairs)
    try:
        return BondSet(text)
    except ValueError as exc:
        raise ScheduleFormatError(str(exc)) from None


def format_geometry(geometry: LatticeGeometry, dim: int) -> str:
    if geometry.is_chain:
        return f"GEOMETRY kind=chain n={geometry.length} dim={dim}"
    return f"GEOMETRY kind=grid rows={geometry.rows} cols={geometry.cols} dim={dim}"


def format_pulse(p) -> str:
    if isinstance(p, Periodic):
        line = (f"PERIODIC axis={p.axis.value} theta={fmt_real(p.theta)} "
                f"period={fmt_real(p.period)} focus={fmt_real(p.focus)}")
        if p.direction is not None:
            line += f" direction={p.direction.value}"
        return line
    if isinstance(p, Uniform):
        return f"UNIFORM axis={p.axis.value} theta={fmt_real(p.theta)}"
    if isinstance(p, Ising):
        return f"ISING theta={fmt_real(p.theta)} bonds={format_bonds(p.bonds)}"
    if isinstance(p, XXZ):
        return (f"XXZ j1={fmt_real(p.j1)} j2={fmt_real(p.j2)} t={fmt_real(p.t)} "
                f"bonds={format_bonds(p.bonds)}")
    if isinstance(p, Heisenberg):
        return f"HEISENBERG j={fmt_real(p.j)} t={fmt_real(p.t)} bonds={format_bonds(p.bonds)}"
    if isinstance(p, XYBond):
        return f"XYBOND theta={fmt_real(p.theta)} bonds={format_bonds(p.bonds)}"
    if isinstance(p, Subspace):
        line = f"SUBSPACE axis={p.axis.value} level={p.level} theta={fmt_real(p.theta)}"
        if p.period is not None:
            line += f" period={fmt_real(p.period)} focus={fmt_real(p.focus)}"
        return line
    raise TypeError(f"not a pulse: {p!r}")


def dumps(schedule: Schedule) -> str:
    lines = [f"# {m}" for m in schedule.metadata.splitlines()]
    lines.append(format_geometry(schedule.geometry, schedule.dim))
    lines.extend(format_pulse(p) for p in schedule.pulses)
    return "\n".join(lines) + "\n"


# field name -> converter, and whether it is required
_PULSE_FIELDS = {
    "PERIODIC": {"axis": (Axis, True), "theta": (float, True), "period": (float, True),
                 "focus": (float, True), "direction": (Direction, False)},
    "UNIFORM": {"axis": (Axis, True), "theta": (float, True)},
    "ISING": {"theta": (float, True), "bonds": (parse_bonds, True)},
    "XXZ": {"j1": (float, True), "j2": (float, True), "t": (float, True),
            "bonds": (parse_bonds, True)},
    "HEISENBERG": {"j": (float, True), "t": (float, True), "bonds": (parse_bonds, True)},
    "XYBOND": {"theta": (float, True), "bonds": (parse_bonds, True)},
    "SUBSPACE": {"axis": (Axis, True), "level": (int, True), "theta": (float, True),
                 "period": (float, False), "focus": (float, False)},
}
_PULSE_TYPES = {"PERIODIC": Periodic, "UNIFORM": Uniform, "ISING": Ising, "XXZ": XXZ,
                "HEISENBERG": Heisenberg, "XYBOND": XYBond, "SUBSPACE": Subspace}


def _fields(tokens: list[str], lineno: int) -> dict[str, str]:
    out = {}
    for tok in tokens:
        key, sep, value = tok.partition("=")
        if not sep or not key or key in out:
            raise ScheduleFormatError(f"line {lineno}: malformed field {tok!r}")
        out[key] = value
    return out


def _convert(spec: dict, fields: dict[str, str], lineno: int) -> dict:
    unknown = set(fields) - set(spec)
    if unknown:
        raise ScheduleFormatError(f"line {lineno}: unknown keys {sorted(unknown)}")
    kwargs = {}
    for key, (conv, required) in spec.items():
        if key not in fields:
            if required:
                raise ScheduleFormatError(f"line {lineno}: missing key {key!r}")
            continue
        try:
            kwargs[key] = conv(fields[key])
        except ValueError as exc:
            raise ScheduleFormatError(f"line {lineno}: bad value for {key}: {exc}") from None
    return kwargs


def loads(text: str) -> Schedule:
    geometry = dim = None
    pulses, meta = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            meta.append(line[1:].removeprefix(" "))
            continue
        head, *tokens = line.split()
        fields = _fields(tokens, lineno)
        if head == "GEOMETRY":
            if geometry is not None:
                raise ScheduleFormatError(f"line {lineno}: duplicate GEOMETRY record")
            kind = fields.get("kind")
            if kind == "chain":
                kw = _convert({"kind": (str, True), "n": (int, True), "dim": (int, True)},
                              fields, lineno)
                geometry = LatticeGeometry.chain(kw["n"])
            elif kind == "grid":
                kw = _convert({"kind": (str, True), "rows": (int, True), "cols": (int, True),
                               "dim": (int, True)}, fields, lineno)
                geometry = LatticeGeometry.grid(kw["rows"], kw["cols"])
            else:
                raise ScheduleFormatError(f"line {lineno}: unknown geometry kind {kind!r}")
            dim = kw["dim"]
            continue
        if geometry is None:
            raise ScheduleFormatError(f"line {lineno}: pulse before GEOMETRY record")
        if head not in _PULSE_FIELDS:
            raise ScheduleFormatError(f"line {lineno}: unknown record {head!r}")
        kwargs = _convert(_PULSE_FIELDS[head], fields, lineno)
        if head == "SUBSPACE" and ("period" in kwargs) != ("focus" in kwargs):
            raise ScheduleFormatError(f"line {lineno}: SUBSPACE needs both period and focus")
        pulses.append(_PULSE_TYPES[head](**kwargs))
    if geometry is None:
        raise ScheduleFormatError("missing GEOMETRY record")
    return Schedule(geometry, tuple(pulses), dim, "\n".join(meta))


def save(schedule: Schedule, path) -> None:
    Path(path).write_text(dumps(schedule))


def load(path) -> Schedule:
    return loads(Path(path).read_text())
