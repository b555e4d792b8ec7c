"""Lowering of local operations to global periodic pulse schedules.

All emitted schedules are in application order (first pulse acts first).
Targets are exact up to a global phase except for the comb procedure, whose
accuracy is set by how well the supplied amplitudes satisfy their integer
constraints (see :mod:`qpfc.dioph`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .engine import SiteRotation, Target, zz_phase
from .lattice import (
    ALL_CHAIN,
    ALL_GRID,
    GRID_ROWS,
    Axis,
    Direction,
    GeometryError,
    Ising,
    LatticeGeometry,
    Periodic,
    Schedule,
    Subspace,
    Uniform,
)
from .schedule_io import fmt_short


class MissingAmplitudeError(ValueError):
    """A comb level needs an amplitude that was not supplied."""

    def __init__(self, level: int):
        super().__init__(f"no amplitude supplied for comb level {level}")
        self.level = level


@dataclass(frozen=True)
class CompileResult:
    schedule: Schedule
    target: Target | None
    depth: int
    descriptor: str

    @property
    def step_count(self) -> int:
        return self.schedule.step_count

    def sidecar(self) -> str:
        return f"STEPS={self.step_count} DEPTH={self.depth} TARGET={self.descriptor}"


def focus_depth(length: int, k: float, base: int, bond: bool = False) -> int:
    """Smallest ``m`` with ``base**m`` beyond the farthest site (or bond) from ``k``."""
    reach = max((length - 1 - k) if bond else (length - k), k - 1)
    m = 0
    while base**m <= reach:
        m += 1
    return m


def _wrap(inner: list, conj) -> list:
    return [conj] + inner + [conj.inverse()] + inner


def focus_stages(geometry: LatticeGeometry, k: int, axis, theta: float,
                 direction: Direction | None = None, depth: int | None = None) -> list[list]:
    """Pulse lists after each focusing level ``0..depth`` for a site rotation.

    ``theta`` is the base (pre-scaled) angle; level ``l`` leaves
    ``exp(-i 2**l theta sigma)`` on every site ``2**l`` apart from ``k``.
    """
    axis = Axis(axis)
    conj_axis = axis.anticommuting()
    if depth is None:
        depth = focus_depth(geometry.extent(direction), k, 2)
    stages = [[Uniform(axis, theta)]]
    for level in range(1, depth + 1):
        conj = Periodic(conj_axis, math.pi / 4, 2**level, k, direction)
        stages.append(_wrap(stages[-1], conj))
    return stages


def _focused_rotation(geometry, k, axis, angle, direction=None) -> tuple[list, int]:
    depth = focus_depth(geometry.extent(direction), k, 2)
    return focus_stages(geometry, k, axis, angle / 2**depth, direction, depth)[-1], depth


def _check_chain_site(k: int, n: int) -> None:
    if not 1 <= k <= n:
        raise GeometryError(f"site {k} outside chain of {n}")


def compile_single(k: int, axis, angle: float, n: int) -> CompileResult:
    """``exp(-i angle sigma_k^axis)`` on a chain of ``n`` sites."""
    _check_chain_site(k, n)
    geometry = LatticeGeometry.chain(n)
    axis = Axis(axis)
    pulses, depth = _focused_rotation(geometry, k, axis, angle)
    desc = f"single:{axis.value}:{k}:{fmt_short(angle)}"
    target = Target(geometry, 2, (SiteRotation((k,), axis, angle),), desc)
    return CompileResult(Schedule(geometry, pulses, 2, desc), target, depth, desc)


def _x_flip(geometry, site) -> tuple[list, int]:
    if geometry.is_chain:
        return _focused_rotation(geometry, site, Axis.X, math.pi / 2)
    return _grid_single_pulses(geometry, site, Axis.X, math.pi / 2)


def compile_bond_naive(k: int, angle: float, n: int) -> CompileResult:
    """``exp(+i angle Z_k Z_{k+1})`` from four Ising pulses and six focused flips."""
    if not 1 <= k < n:
        raise GeometryError(f"bond {k} outside chain of {n}")
    geometry = LatticeGeometry.chain(n)
    xk, mk = _x_flip(geometry, k)
    xk1, mk1 = _x_flip(geometry, k + 1)
    q = angle / 4
    pulses = (xk + xk1 + [Ising(q, ALL_CHAIN)] + xk + [Ising(-q, ALL_CHAIN)]
              + xk + xk1 + [Ising(-q, ALL_CHAIN)] + xk + [Ising(q, ALL_CHAIN)])
    desc = f"bond:{k}:{fmt_short(angle)}"
    target = Target(geometry, 2, (zz_phase([(k, k + 1)], angle),), desc)
    return CompileResult(Schedule(geometry, pulses, 2, desc), target, max(mk, mk1), desc)


def _amplitude(solutions, level: int) -> float:
    if level == 1:
        return math.pi / 3
    if isinstance(solutions, Mapping):
        sol = solutions.get(level)
    else:
        sol = next((s for s in solutions or () if getattr(s, "level", None) == level), None)
    if sol is None:
        raise MissingAmplitudeError(level)
    return float(getattr(sol, "a", sol))


def comb_stages(geometry: LatticeGeometry, k: int, theta: float, solutions=None,
                depth: int | None = None, bonds=ALL_CHAIN,
                direction: Direction | None = None) -> list[list]:
    """Pulse lists after each comb level ``0..depth`` for the bond ``(k, k+1)``.

    Level ``n`` conjugates with a period ``3**n`` x-field focused at
    ``k - (3**n - 1)/2``; level 1 uses the exact amplitude pi/3.
    """
    length = geometry.extent(direction)
    if depth is None:
        depth = focus_depth(length, k, 3, bond=True)
    stages = [[Ising(theta, bonds)]]
    for level in range(1, depth + 1):
        a_n = _amplitude(solutions, level)
        conj = Periodic(Axis.X, a_n, 3**level, k - (3**level - 1) / 2, direction)
        stages.append(_wrap(stages[-1], conj))
    return stages


def compile_bond_comb(k: int, angle: float, n: int, solutions=None) -> CompileResult:
    """``exp(+i angle Z_k Z_{k+1})`` via the spacing-3 comb recursion.

    ``solutions`` maps comb level -> amplitude (a float or an object with
    ``.a``), or is a sequence of solver results carrying ``.level``.
    """
    if not 1 <= k < n:
        raise GeometryError(f"bond {k} outside chain of {n}")
    geometry = LatticeGeometry.chain(n)
    depth = focus_depth(n, k, 3, bond=True)
    pulses = comb_stages(geometry, k, angle / 2**depth, solutions, depth)[-1]
    desc = f"bond:{k}:{fmt_short(angle)}"
    target = Target(geometry, 2, (zz_phase([(k, k + 1)], angle),), desc)
    return CompileResult(Schedule(geometry, pulses, 2, desc), target, depth, desc)


# -- two dimensions -----------------------------------------------------------


def _grid_single_pulses(geometry: LatticeGeometry, site, axis, angle) -> tuple[list, int]:
    i, j = site
    geometry.index(site)
    axis = Axis(axis)
    sandwich = axis.anticommuting()
    row_on, m_row = _focused_rotation(geometry, i, axis, angle / 2, Direction.ROWS)
    row_off, _ = _focused_rotation(geometry, i, axis, -angle / 2, Direction.ROWS)
    col_on, m_col = _focused_rotation(geometry, j, sandwich, math.pi / 2, Direction.COLS)
    col_off, _ = _focused_rotation(geometry, j, sandwich, -math.pi / 2, Direction.COLS)
    return col_off + row_off + col_on + row_on, max(m_row, m_col)


def compile_grid_single(site: tuple[int, int], axis, angle: float, n: int) -> CompileResult:
    """``exp(-i angle sigma^axis)`` on one site of an ``n x n`` grid.

    Row ``i`` is rotated by ``-angle/2``, column ``j`` is flipped by an
    anticommuting pi/2 rotation, row ``i`` is rotated by ``+angle/2`` and the
    column flip is undone; only the crossing site keeps a net rotation.
    """
    geometry = LatticeGeometry.grid(n)
    axis = Axis(axis)
    pulses, depth = _grid_single_pulses(geometry, site, axis, angle)
    desc = f"single:{axis.value}:{site[0]},{site[1]}:{fmt_short(angle)}"
    target = Target(geometry, 2, (SiteRotation((tuple(site),), axis, angle),), desc)
    return CompileResult(Schedule(geometry, pulses, 2, desc), target, depth, desc)


def _column_pair_ising(geometry, j, phi, solutions) -> tuple[list, int]:
    depth = focus_depth(geometry.cols, j, 3, bond=True)
    stages = comb_stages(geometry, j, phi / 2**depth, solutions, depth, GRID_ROWS, Direction.COLS)
    return stages[-1], depth


def compile_grid_bond(site: tuple[int, int], angle: float, n: int, method: str = "naive8",
                      solutions=None, conjugator="x") -> CompileResult:
    """``exp(+i angle Z_(i,j) Z_(i,j+1))`` on an ``n x n`` grid.

    ``naive8`` wraps six full-grid Ising pulses with eight focused flips.
    ``twoOp`` builds the Ising phase on every bond between columns ``j`` and
    ``j+1`` with the comb recursion and flips site ``(i, j)`` around it.
    ``conjugator="z"`` reproduces the printed sigma^z variant, which commutes
    with the Ising phases and leaves the identity.
    """
    geometry = LatticeGeometry.grid(n)
    i, j = site
    a, b = (i, j), (i, j + 1)
    if not (geometry.contains(a) and geometry.contains(b)):
        raise GeometryError(f"horizontal bond {a}-{b} outside the grid")
    q = angle / 4
    if method == "naive8":
        xa, ma = _grid_single_pulses(geometry, a, Axis.X, math.pi / 2)
        xb, mb = _grid_single_pulses(geometry, b, Axis.X, math.pi / 2)
        pulses = (xa + xb + [Ising(q, ALL_GRID)] + xa + xb + [Ising(-q, ALL_GRID)]
                  + xb + [Ising(-q, ALL_GRID)] + xb + [Ising(q, ALL_GRID)]
                  + xa + [Ising(-q, ALL_GRID)] + xa + [Ising(q, ALL_GRID)])
        depth = max(ma, mb)
    elif method == "twoOp":
        flip, mf = _grid_single_pulses(geometry, a, Axis(conjugator), math.pi / 2)
        off, depth = _column_pair_ising(geometry, j, -angle / 2, solutions)
        on, _ = _column_pair_ising(geometry, j, angle / 2, solutions)
        pulses = flip + off + flip + on
        depth = max(depth, mf)
    else:
        raise ValueError(f"unknown grid bond method {method!r}")
    desc = f"bond:{i},{j}:{fmt_short(angle)}"
    target = Target(geometry, 2, (zz_phase([(a, b)], angle),), desc)
    return CompileResult(Schedule(geometry, pulses, 2, desc), target, depth, desc)


# -- readout ------------------------------------------------------------------


def readout_levels(levels: int, n: int, anchor: int) -> list[int]:
    """Local level each site of ``|11...1>`` ends in after the readout map.

    Site ``s`` is carried to ``|a_l>`` (local level ``l + 1``) for the largest
    ``l <= levels`` with ``2**l`` dividing ``s - anchor``.
    """
    out = []
    for s in range(1, n + 1):
        off, ell = abs(s - anchor), 0
        while ell < levels and off % 2 ** (ell + 1) == 0:
            ell += 1
        out.append(ell + 1)
    return out


def compile_readout(levels: int, n: int, anchor: int) -> CompileResult:
    """Move ``|1>`` to ``|a_levels>`` on sites ``2**levels`` apart from ``anchor``.

    Stage ``l`` repeats the parity construction inside the ``{|a_(l-1)>, |a_l>}``
    subspace with pi/4 pulses, so the selected sites see a full transfer and the
    rest of the subspace is left alone. Phases on the auxiliary levels are not
    controlled; only populations are.
    """
    if levels < 1:
        raise ValueError("need at least one auxiliary level")
    _check_chain_site(anchor, n)
    geometry = LatticeGeometry.chain(n)
    pulses = []
    for ell in range(1, levels + 1):
        conj = Subspace(ell, Axis.Z, math.pi / 4, 2**ell, anchor)
        pulses += _wrap([Subspace(ell, Axis.X, math.pi / 4)], conj)
    desc = f"readout:{levels}:{anchor}"
    return CompileResult(Schedule(geometry, pulses, levels + 2, desc), None, levels, desc)
