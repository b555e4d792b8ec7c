"""Synthesis of same-period periodic pulses for a target angle pattern.

A period-``P`` pulse with amplitude ``theta`` and focus ``k`` puts
``theta * (1 - cos(2 pi (x - k) / P))`` on coordinate ``x``. In the basis
``(1, cos(2 pi r / P), sin(2 pi r / P))`` with ``r = x mod P`` that is the
vector ``theta * (1, -cos phi, -sin phi)``, ``phi = 2 pi k / P``. Any pattern
whose values (up to 2 pi shifts) lie in that 3-dimensional span is reachable
with at most two pulses.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .compiler import CompileResult
from .engine import SiteRotation, Target, zz_phase
from .lattice import (
    ALL_CHAIN,
    Axis,
    Direction,
    Heisenberg,
    Ising,
    LatticeGeometry,
    Periodic,
    Schedule,
    Uniform,
    XXZ,
    XYBond,
    bonds_of,
    profile_vector,
)
from .schedule_io import fmt_short

SPAN_TOL = 1e-10
SINGLE_TOL = 1e-12


class SynthesisError(ValueError):
    """No 2 pi shift of the pattern is reachable with the allowed pulses."""

    def __init__(self, message: str, distance: float):
        super().__init__(message)
        self.distance = distance


@dataclass(frozen=True)
class AnglePattern:
    """Target angles ``values[r]`` for every site whose coordinate is ``r`` mod ``period``."""

    period: int
    values: tuple
    axis: Axis = Axis.Z
    direction: Direction | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "axis", Axis(self.axis))
        if self.period < 1 or len(self.values) != self.period:
            raise ValueError(f"need {self.period} values, got {len(self.values)}")

    @classmethod
    def flips(cls, bits, axis=Axis.X, direction=None) -> "AnglePattern":
        """pi/2 on every residue with bit 1: a pi flip mask."""
        return cls(len(bits), tuple(math.pi / 2 * b for b in bits), axis, direction)

    @classmethod
    def parse(cls, text: str) -> "AnglePattern":
        """Read ``PATTERN period=<P> axis=<a> values=<v0,...>``."""
        head, *tokens = text.split()
        if head != "PATTERN":
            raise ValueError(f"expected a PATTERN record, got {head!r}")
        fields = dict(tok.split("=", 1) for tok in tokens)
        unknown = set(fields) - {"period", "axis", "values", "direction"}
        if unknown:
            raise ValueError(f"unknown PATTERN keys {sorted(unknown)}")
        values = tuple(float(v) for v in fields["values"].split(","))
        return cls(int(fields["period"]), values, Axis(fields.get("axis", "z")),
                   fields.get("direction"))


def _basis(period: int) -> np.ndarray:
    r = np.arange(period)
    ang = 2 * np.pi * r / period
    return np.column_stack([np.ones(period), np.cos(ang), np.sin(ang)])


def _shifts(period: int, window: int):
    vecs = itertools.product(range(-window, window + 1), repeat=period)
    return sorted(vecs, key=lambda s: (sum(map(abs, s)), s))


def _single_coords(c: np.ndarray, period: int):
    """Span coordinates realising ``c`` with one pulse, or ``None``."""
    c0, c1, c2 = c
    scale = max(c0 * c0, c1 * c1 + c2 * c2)
    if period == 2:
        # the sine column vanishes on integer sites, so c2 is free
        if c0 * c0 >= c1 * c1 - SINGLE_TOL * scale:
            return np.array([c0, c1, math.sqrt(max(c0 * c0 - c1 * c1, 0.0))])
        return None
    if abs(c1 * c1 + c2 * c2 - c0 * c0) <= SINGLE_TOL * scale:
        return c
    return None


def _pulse(theta, u, pattern: AnglePattern) -> Periodic:
    phi = math.atan2(u[1], u[0])
    focus = (pattern.period * phi / (2 * math.pi)) % pattern.period
    return Periodic(pattern.axis, float(theta), pattern.period, float(focus), pattern.direction)


def _decompose(c: np.ndarray, pattern: AnglePattern) -> list:
    c0 = float(c[0])
    v = -np.asarray(c[1:], dtype=float)
    norm = float(np.hypot(*v))
    if norm <= SINGLE_TOL and abs(c0) <= SINGLE_TOL:
        return []
    single = _single_coords(c, pattern.period)
    if single is not None:
        return [_pulse(single[0], -single[1:] / single[0], pattern)]
    vhat = v / norm if norm > SINGLE_TOL else np.array([1.0, 0.0])
    if norm >= abs(c0):
        t1, t2 = (c0 + norm) / 2, (c0 - norm) / 2
        return [_pulse(t1, vhat, pattern), _pulse(t2, -vhat, pattern)]
    # equal amplitudes, directions rotated by +-alpha around v
    alpha = math.acos(max(-1.0, min(1.0, norm / c0)))
    rot = lambda a: np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
    return [_pulse(c0 / 2, rot(alpha) @ vhat, pattern), _pulse(c0 / 2, rot(-alpha) @ vhat, pattern)]


def _span_coords(pulses, period: int) -> np.ndarray:
    total = np.zeros(3)
    for p in pulses:
        phi = 2 * math.pi * p.focus / period
        total += p.theta * np.array([1.0, -math.cos(phi), -math.sin(phi)])
    return total


def synthesize(pattern: AnglePattern, max_pulses: int = 2, window: int = 2) -> list:
    """Pulses of period ``pattern.period`` whose summed profiles hit the pattern mod 2 pi.

    A uniform pattern comes back as one :class:`~qpfc.lattice.Uniform` pulse.
    Among reachable 2 pi shifts the one needing the fewest pulses wins, then
    the smallest shift.
    """
    if max_pulses < 1:
        raise ValueError("max_pulses must be >= 1")
    values = np.array(pattern.values)
    if np.ptp(values) == 0:
        return [] if values[0] == 0 else [Uniform(pattern.axis, float(values[0]))]
    basis = _basis(pattern.period)
    best, closest = None, math.inf
    for shift in _shifts(pattern.period, window):
        target = values + 2 * np.pi * np.array(shift)
        coords, *_ = np.linalg.lstsq(basis, target, rcond=None)
        dist = float(np.max(np.abs(basis @ coords - target)))
        closest = min(closest, dist)
        if dist > SPAN_TOL:
            continue
        pulses = _decompose(coords, pattern)
        # guard against tolerance slips in the single-pulse test
        if np.max(np.abs(basis @ _span_coords(pulses, pattern.period) - target)) > SPAN_TOL:
            continue
        if best is None or len(pulses) < len(best):
            best = pulses
        if len(best) <= 1:
            break
    if best is None:
        raise SynthesisError(f"pattern not reachable within shift window {window}", closest)
    if len(best) > max_pulses:
        raise SynthesisError(f"pattern needs {len(best)} pulses, allowed {max_pulses}", 0.0)
    return best


def profile_error(pulses, pattern: AnglePattern, geometry: LatticeGeometry) -> float:
    """Largest deviation mod 2 pi between the summed profiles and the pattern."""
    total = sum((profile_vector(p, geometry) for p in pulses), np.zeros(geometry.n_sites))
    coord = geometry.coordinates(pattern.direction).astype(int)
    want = np.array(pattern.values)[coord % pattern.period]
    diff = np.angle(np.exp(1j * (total - want)))
    return float(np.max(np.abs(diff))) if diff.size else 0.0


# -- masked interactions ------------------------------------------------------


def _scaled(base, factor: float):
    if isinstance(base, (Ising, XYBond)):
        return type(base)(base.theta * factor, base.bonds)
    if isinstance(base, Heisenberg):
        return Heisenberg(base.j, base.t * factor, base.bonds)
    if isinstance(base, XXZ):
        return XXZ(base.j1, base.j2, base.t * factor, base.bonds)
    raise TypeError(f"cannot mask {type(base).__name__} pulses")


def flip_bits(mask, geometry: LatticeGeometry, tol: float = 1e-9) -> np.ndarray:
    """0/1 flip parity per site of a pi-flip mask; raises if any angle is not a multiple of pi/2."""
    total = sum((profile_vector(p, geometry) for p in mask), np.zeros(geometry.n_sites))
    q = total / (math.pi / 2)
    if np.max(np.abs(q - np.round(q)), initial=0.0) > tol:
        raise ValueError("mask is not a pi-flip pattern")
    return np.round(q).astype(int) % 2


def masked_ising(mask, base, geometry: LatticeGeometry, theta: float | None = None,
                 dim: int = 2) -> Schedule:
    """``[mask, base/2, mask^-1, base/2]``: bonds whose ends flip alike keep the full base phase.

    ``theta`` rescales an Ising/XY base pulse to that angle before halving.
    """
    mask = list(mask)
    flip_bits(mask, geometry)
    if theta is not None:
        base = _scaled(base, theta / base.theta)
    half = _scaled(base, 0.5)
    undo = [p.inverse() for p in reversed(mask)]
    return Schedule(geometry, tuple(mask + [half] + undo + [half]), dim)


def surviving_bonds(mask, bonds, geometry: LatticeGeometry) -> list:
    """Bonds of ``bonds`` whose two ends share the mask's flip parity."""
    bits = flip_bits(mask, geometry)
    idx = geometry.index
    return [(a, b) for a, b in bonds_of(bonds, geometry) if bits[idx(a)] == bits[idx(b)]]


INTERVAL_BITS = (0, 0, 1, 1)
CA_KINDS = ("even-single", "odd-single", "even-right", "even-left")


def compile_interval(n: int, theta: float) -> CompileResult:
    """``prod_k exp(i theta Z_2k Z_2k+1)`` on a chain from one masked Ising pulse."""
    return compile_ca_pattern("even-right", n, theta)


def compile_ca_pattern(kind: str, n: int, theta: float, axis="x") -> CompileResult:
    """One of the four cellular-automaton Hamiltonian patterns on a chain.

    ``even-single``/``odd-single`` rotate every even/odd site about ``axis``;
    ``even-right``/``even-left`` apply ``exp(i theta Z Z)`` on the bonds from
    every even site to its right/left neighbour.
    """
    geometry = LatticeGeometry.chain(n)
    if kind in ("even-single", "odd-single"):
        values = (theta, 0.0) if kind == "even-single" else (0.0, theta)
        pulses = synthesize(AnglePattern(2, values, axis))
        parity = 0 if kind == "even-single" else 1
        sites = tuple(s for s in geometry.sites() if s % 2 == parity)
        desc = f"rot:{Axis(axis).value}:{fmt_short(theta)}:{','.join(map(str, sites))}"
        target = Target(geometry, 2, (SiteRotation(sites, Axis(axis), theta),), desc)
        return CompileResult(Schedule(geometry, pulses, 2, desc), target, 1, desc)
    if kind == "even-right":
        bits = INTERVAL_BITS
    elif kind == "even-left":
        bits = (0, 1, 1, 0)
    else:
        raise ValueError(f"unknown pattern kind {kind!r}; expected one of {CA_KINDS}")
    mask = synthesize(AnglePattern.flips(bits, Axis.X))
    sched = masked_ising(mask, Ising(theta, ALL_CHAIN), geometry)
    kept = surviving_bonds(mask, ALL_CHAIN, geometry)
    desc = f"zz:{fmt_short(theta)}:" + ",".join(f"{a}-{b}" for a, b in kept)
    target = Target(geometry, 2, (zz_phase(kept, theta),), desc)
    return CompileResult(Schedule(geometry, sched.pulses, 2, desc), target, 1, desc)
