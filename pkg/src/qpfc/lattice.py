"""Lattice geometries, bond selections, pulse primitives and schedules.

Sites are 1-based: chain sites are integers ``1..N`` and grid sites are
``(row, col)`` tuples. Every pulse type here is an immutable value; the
per-site angle of a periodic pulse is computed by :func:`angle_profile`,
which both the compiler and the engine rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Union

import numpy as np

Site = Union[int, tuple[int, int]]
Bond = tuple[Site, Site]


class GeometryError(ValueError):
    """A pulse, bond set or site does not fit the lattice it is applied to."""


class Axis(str, Enum):
    X = "x"
    Y = "y"
    Z = "z"

    def anticommuting(self) -> "Axis":
        """An axis whose Pauli operator anticommutes with this one (x<->z, y->z)."""
        return {Axis.X: Axis.Z, Axis.Z: Axis.X, Axis.Y: Axis.Z}[self]


class Direction(str, Enum):
    """Coordinate a periodic pulse varies along.

    ``ROWS`` means the profile depends on the row index ``i`` (the pulse
    selects rows); ``COLS`` depends on the column index ``j``.
    """

    CHAIN = "chain"
    ROWS = "rows"
    COLS = "cols"


@dataclass(frozen=True)
class LatticeGeometry:
    kind: str
    rows: int
    cols: int

    def __post_init__(self):
        if self.kind == "chain":
            if self.rows != 1 or self.cols < 1:
                raise GeometryError(f"invalid chain length {self.cols}")
        elif self.kind == "grid":
            if self.rows < 2 or self.cols < 2:
                raise GeometryError(f"grid must be at least 2x2, got {self.rows}x{self.cols}")
        else:
            raise GeometryError(f"unknown geometry kind {self.kind!r}")

    @classmethod
    def chain(cls, n: int) -> "LatticeGeometry":
        return cls("chain", 1, int(n))

    @classmethod
    def grid(cls, rows: int, cols: int | None = None) -> "LatticeGeometry":
        return cls("grid", int(rows), int(rows if cols is None else cols))

    @property
    def is_chain(self) -> bool:
        return self.kind == "chain"

    @property
    def n_sites(self) -> int:
        return self.rows * self.cols if not self.is_chain else self.cols

    @property
    def length(self) -> int:
        """Chain length ``N`` (chains only)."""
        if not self.is_chain:
            raise GeometryError("length is defined for chains only")
        return self.cols

    def sites(self) -> list[Site]:
        if self.is_chain:
            return list(range(1, self.cols + 1))
        return [(i, j) for i in range(1, self.rows + 1) for j in range(1, self.cols + 1)]

    def index(self, site: Site) -> int:
        """0-based tensor axis of ``site``; site 1 / (1,1) is the most significant digit."""
        if self.is_chain:
            if isinstance(site, tuple) or not 1 <= site <= self.cols:
                raise GeometryError(f"site {site!r} not in chain of {self.cols}")
            return int(site) - 1
        if not isinstance(site, tuple) or len(site) != 2:
            raise GeometryError(f"grid sites are (row, col) pairs, got {site!r}")
        i, j = site
        if not (1 <= i <= self.rows and 1 <= j <= self.cols):
            raise GeometryError(f"site {site!r} outside {self.rows}x{self.cols} grid")
        return (i - 1) * self.cols + (j - 1)

    def contains(self, site: Site) -> bool:
        try:
            self.index(site)
        except GeometryError:
            return False
        return True

    def coordinates(self, direction: Direction | str | None) -> np.ndarray:
        """Coordinate of every site (in :meth:`sites` order) along ``direction``."""
        direction = _resolve_direction(self, direction)
        if direction is Direction.CHAIN:
            return np.arange(1, self.cols + 1, dtype=float)
        rows, cols = np.meshgrid(
            np.arange(1, self.rows + 1), np.arange(1, self.cols + 1), indexing="ij"
        )
        return (rows if direction is Direction.ROWS else cols).ravel().astype(float)

    def extent(self, direction: Direction | str | None) -> int:
        direction = _resolve_direction(self, direction)
        return self.rows if direction is Direction.ROWS else self.cols

    def are_neighbors(self, a: Site, b: Site) -> bool:
        if not (self.contains(a) and self.contains(b)):
            return False
        if self.is_chain:
            return abs(a - b) == 1
        return abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1


def _resolve_direction(geometry: LatticeGeometry, direction) -> Direction:
    if direction is None:
        if geometry.is_chain:
            return Direction.CHAIN
        raise GeometryError("periodic pulses on a grid need direction 'rows' or 'cols'")
    direction = Direction(direction)
    if geometry.is_chain != (direction is Direction.CHAIN):
        raise GeometryError(f"direction {direction.value!r} does not fit a {geometry.kind}")
    return direction


# -- bond sets ----------------------------------------------------------------

SELECTORS = ("allChain", "allGrid", "gridRowsOnly", "gridColsOnly", "dimerA", "dimerB", "explicit")


@dataclass(frozen=True)
class BondSet:
    selector: str
    pairs: tuple[Bond, ...] = ()

    def __post_init__(self):
        if self.selector not in SELECTORS:
            raise ValueError(f"unknown bond selector {self.selector!r}")
        if self.selector != "explicit" and self.pairs:
            raise ValueError("only explicit bond sets carry pairs")

    @classmethod
    def explicit(cls, pairs: Iterable[Bond]) -> "BondSet":
        return cls("explicit", tuple((a, b) for a, b in pairs))


ALL_CHAIN = BondSet("allChain")
ALL_GRID = BondSet("allGrid")
GRID_ROWS = BondSet("gridRowsOnly")
GRID_COLS = BondSet("gridColsOnly")
DIMER_A = BondSet("dimerA")
DIMER_B = BondSet("dimerB")


def _horizontal(g: LatticeGeometry) -> list[Bond]:
    return [((i, j), (i, j + 1)) for i in range(1, g.rows + 1) for j in range(1, g.cols)]


def _vertical(g: LatticeGeometry) -> list[Bond]:
    return [((i, j), (i + 1, j)) for i in range(1, g.rows) for j in range(1, g.cols + 1)]


def bonds_of(bonds: BondSet, geometry: LatticeGeometry) -> list[Bond]:
    """Enumerate the site pairs selected by ``bonds`` on ``geometry``.

    Grid bonds come row-major, all horizontal bonds before all vertical ones.
    ``dimerA`` holds the horizontal bonds between columns ``2c-1`` and ``2c``;
    ``dimerB`` is every other grid bond.
    """
    sel = bonds.selector
    if sel == "explicit":
        out = []
        for a, b in bonds.pairs:
            if not geometry.are_neighbors(a, b):
                raise GeometryError(f"{a!r}-{b!r} is not a nearest-neighbour pair")
            out.append((a, b))
        if len(set(map(frozenset, out))) != len(out):
            raise GeometryError("explicit bond list contains duplicates")
        return out
    if sel == "allChain":
        if not geometry.is_chain:
            raise GeometryError("allChain requires a chain")
        return [(b, b + 1) for b in range(1, geometry.cols)]
    if geometry.is_chain:
        raise GeometryError(f"{sel} requires a grid")
    if sel == "allGrid":
        return _horizontal(geometry) + _vertical(geometry)
    if sel == "gridRowsOnly":
        return _horizontal(geometry)
    if sel == "gridColsOnly":
        return _vertical(geometry)
    if geometry.cols % 2:
        raise GeometryError(f"{sel} needs an even number of columns, got {geometry.cols}")
    a_links = [((i, 2 * c - 1), (i, 2 * c)) for i in range(1, geometry.rows + 1)
               for c in range(1, geometry.cols // 2 + 1)]
    if sel == "dimerA":
        return a_links
    a_set = set(a_links)
    return [bond for bond in _horizontal(geometry) + _vertical(geometry) if bond not in a_set]


def is_disjoint(pairs: Iterable[Bond]) -> bool:
    seen: set = set()
    for a, b in pairs:
        if a in seen or b in seen:
            return False
        seen.update((a, b))
    return True


# -- pulses -------------------------------------------------------------------


@dataclass(frozen=True)
class Periodic:
    """Cosine-profile field: site angle ``theta * (1 - cos(2*pi*(x - focus)/period))``."""

    axis: Axis
    theta: float
    period: float
    focus: float
    direction: Direction | None = None

    def __post_init__(self):
        object.__setattr__(self, "axis", Axis(self.axis))
        if self.direction is not None:
            object.__setattr__(self, "direction", Direction(self.direction))
        if not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")

    @property
    def phase(self) -> float:
        """Phase offset of the cosine, ``-2*pi*focus/period``."""
        return -2 * math.pi * self.focus / self.period

    def inverse(self) -> "Periodic":
        return replace(self, theta=-self.theta)


@dataclass(frozen=True)
class Uniform:
    axis: Axis
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "axis", Axis(self.axis))

    def inverse(self) -> "Uniform":
        return replace(self, theta=-self.theta)


@dataclass(frozen=True)
class Ising:
    """``exp(+i * theta * sum_bonds Z Z)``."""

    theta: float
    bonds: BondSet

    def inverse(self) -> "Ising":
        return replace(self, theta=-self.theta)


@dataclass(frozen=True)
class XXZ:
    """``exp(-i t H)`` with ``H = sum_bonds [j1 ZZ - j2 (XX + YY)]``."""

    j1: float
    j2: float
    t: float
    bonds: BondSet

    def inverse(self) -> "XXZ":
        return replace(self, t=-self.t)


@dataclass(frozen=True)
class Heisenberg:
    """``exp(-i t j sum_bonds (XX + YY + ZZ))``."""

    j: float
    t: float
    bonds: BondSet

    def inverse(self) -> "Heisenberg":
        return replace(self, t=-self.t)


@dataclass(frozen=True)
class XYBond:
    """``exp(+i * theta * sum_bonds (XX + YY))``."""

    theta: float
    bonds: BondSet

    def inverse(self) -> "XYBond":
        return replace(self, theta=-self.theta)


@dataclass(frozen=True)
class Subspace:
    """Rotation inside the two-level subspace ``{level, level + 1}`` of each site.

    ``level`` is the auxiliary index: level 1 couples ``|1>`` and ``|a_1>``
    (local levels 1 and 2). With ``period=None`` the pulse is uniform.
    """

    level: int
    axis: Axis
    theta: float
    period: float | None = None
    focus: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "axis", Axis(self.axis))
        if self.level < 1:
            raise ValueError("subspace level must be >= 1")
        if self.period is not None and not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")

    def inverse(self) -> "Subspace":
        return replace(self, theta=-self.theta)


Pulse = Union[Periodic, Uniform, Ising, XXZ, Heisenberg, XYBond, Subspace]
SINGLE_SITE_PULSES = (Periodic, Uniform, Subspace)
BOND_PULSES = (Ising, XXZ, Heisenberg, XYBond)


def profile_vector(pulse: Pulse, geometry: LatticeGeometry) -> np.ndarray:
    """Per-site angles in :meth:`LatticeGeometry.sites` order."""
    if isinstance(pulse, Uniform) or (isinstance(pulse, Subspace) and pulse.period is None):
        return np.full(geometry.n_sites, float(pulse.theta))
    if isinstance(pulse, Periodic):
        x = geometry.coordinates(pulse.direction)
    elif isinstance(pulse, Subspace):
        # readout pulses are defined along a chain only
        x = geometry.coordinates(None)
    else:
        raise TypeError(f"{type(pulse).__name__} pulses have no per-site angle profile")
    return pulse.theta * (1.0 - np.cos(2 * np.pi * (x - pulse.focus) / pulse.period))


def angle_profile(pulse: Pulse, geometry: LatticeGeometry) -> dict[Site, float]:
    """Map every site to the rotation angle the pulse applies there."""
    return dict(zip(geometry.sites(), profile_vector(pulse, geometry).tolist()))


def bonds_used(pulse: Pulse) -> BondSet | None:
    return pulse.bonds if isinstance(pulse, BOND_PULSES) else None


# -- schedules ----------------------------------------------------------------


@dataclass(frozen=True)
class Schedule:
    """Ordered pulses on a geometry; ``pulses[0]`` acts on the state first."""

    geometry: LatticeGeometry
    pulses: tuple = ()
    dim: int = 2
    metadata: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "pulses", tuple(self.pulses))
        if self.dim < 2:
            raise ValueError("local dimension must be at least 2")

    @property
    def step_count(self) -> int:
        # every global pulse is one elementary step
        return len(self.pulses)

    def __len__(self) -> int:
        return len(self.pulses)

    def __add__(self, other: "Schedule") -> "Schedule":
        if not isinstance(other, Schedule):
            return NotImplemented
        if other.geometry != self.geometry or other.dim != self.dim:
            raise GeometryError("cannot concatenate schedules on different geometries")
        meta = "\n".join(m for m in (self.metadata, other.metadata) if m)
        return Schedule(self.geometry, self.pulses + other.pulses, self.dim, meta)

    def then(self, *pulses: Pulse) -> "Schedule":
        return replace(self, pulses=self.pulses + tuple(pulses))

    def inverse(self) -> "Schedule":
        return replace(self, pulses=tuple(p.inverse() for p in reversed(self.pulses)))


def elementary_step_count(schedule: Schedule) -> int:
    return schedule.step_count
