"""Dense simulation of pulse schedules.

States are complex vectors of length ``d**n_sites`` with site 1 (or grid site
``(1, 1)``) as the most significant base-``d`` digit. Qubit pulses act on the
local levels ``{0, 1}``; ``Subspace`` pulses act on ``{level, level + 1}``.
The sign convention is ``Z = diag(+1, -1)`` on levels ``0, 1``.

Every evolution is computed exactly: diagonal phases, two-site exponentials
for disjoint bonds, and a cached Hermitian eigendecomposition of the full
Hamiltonian otherwise. No Trotterisation happens in here.
"""

from __future__ import annotations

import functools
import os
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .lattice import (
    Axis,
    BondSet,
    GeometryError,
    Heisenberg,
    Ising,
    LatticeGeometry,
    Periodic,
    Schedule,
    Site,
    Subspace,
    Uniform,
    XXZ,
    XYBond,
    bonds_of,
    is_disjoint,
    profile_vector,
)
from .schedule_io import fmt_real

DEFAULT_MATRIX_CAP = 4096
NORM_TOL = 1e-12
UNITARY_TOL = 1e-10


class MatrixCapError(RuntimeError):
    """The requested dense matrix exceeds the configured dimension cap."""


class NonHermitianError(ValueError):
    pass


def matrix_cap() -> int:
    return int(os.environ.get("QPFC_MATRIX_CAP", DEFAULT_MATRIX_CAP))


# -- local operators ----------------------------------------------------------

_PAULI = {
    Axis.X: np.array([[0, 1], [1, 0]], dtype=complex),
    Axis.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    Axis.Z: np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli(axis, dim: int = 2, lower: int = 0) -> np.ndarray:
    """Pauli matrix on levels ``{lower, lower+1}`` of a ``dim``-level site, zero elsewhere."""
    if lower + 2 > dim:
        raise GeometryError(f"levels {lower},{lower + 1} do not exist for local dimension {dim}")
    out = np.zeros((dim, dim), dtype=complex)
    out[lower:lower + 2, lower:lower + 2] = _PAULI[Axis(axis)]
    return out


def rotation(axis, theta: float, dim: int = 2, lower: int = 0) -> np.ndarray:
    """``exp(-i theta sigma)`` on the two-level subspace, identity on other levels."""
    out = np.eye(dim, dtype=complex)
    out[lower:lower + 2, lower:lower + 2] = (
        np.cos(theta) * np.eye(2) - 1j * np.sin(theta) * _PAULI[Axis(axis)]
    )
    return out


@functools.lru_cache(maxsize=16)
def _digits(n: int, dim: int) -> np.ndarray:
    """Base-``dim`` digits of every basis index, shape ``(n, dim**n)``."""
    idx = np.arange(dim**n)
    return np.stack([(idx // dim ** (n - 1 - s)) % dim for s in range(n)])


def _sz_table(dim: int) -> np.ndarray:
    table = np.zeros(dim)
    table[0], table[1] = 1.0, -1.0
    return table


# -- data carriers ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StateVector:
    geometry: LatticeGeometry
    dim: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != self.dim ** self.geometry.n_sites:
            raise GeometryError(
                f"{amps.size} amplitudes do not match {self.dim}**{self.geometry.n_sites}"
            )
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, geometry: LatticeGeometry, levels: Sequence[int], dim: int = 2) -> "StateVector":
        n = geometry.n_sites
        if len(levels) != n:
            raise GeometryError(f"need {n} site levels, got {len(levels)}")
        index = 0
        for level in levels:
            if not 0 <= level < dim:
                raise GeometryError(f"level {level} outside local dimension {dim}")
            index = index * dim + int(level)
        amps = np.zeros(dim**n, dtype=complex)
        amps[index] = 1.0
        return cls(geometry, dim, amps)

    @classmethod
    def all_zero(cls, geometry: LatticeGeometry, dim: int = 2) -> "StateVector":
        return cls.basis(geometry, [0] * geometry.n_sites, dim)

    @classmethod
    def all_one(cls, geometry: LatticeGeometry, dim: int = 2) -> "StateVector":
        return cls.basis(geometry, [1] * geometry.n_sites, dim)

    @classmethod
    def random(cls, geometry: LatticeGeometry, dim: int = 2, seed: int = 0) -> "StateVector":
        amps = _haar_states(dim ** geometry.n_sites, 1, np.random.default_rng(seed))[:, 0]
        return cls(geometry, dim, amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def populations(self) -> np.ndarray:
        """Reduced level populations, shape ``(n_sites, dim)``, rows in site order."""
        n, d = self.geometry.n_sites, self.dim
        probs = np.abs(self.amplitudes.reshape((d,) * n)) ** 2
        return np.stack([
            probs.sum(axis=tuple(a for a in range(n) if a != s)) for s in range(n)
        ])

    def population(self, site: Site, level: int) -> float:
        return float(self.populations()[self.geometry.index(site), level])


@dataclass(frozen=True, eq=False)
class OperatorHandle:
    geometry: LatticeGeometry
    dim: int
    matrix: np.ndarray

    @property
    def size(self) -> int:
        return self.dim ** self.geometry.n_sites

    def unitarity_deviation(self) -> float:
        u = self.matrix
        return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


@dataclass(frozen=True)
class FidelityReport:
    value: float
    mode: str
    sample_count: int = 0
    worst_deviation: float = 0.0
    seed: int | None = None

    def __str__(self) -> str:
        return f"F={self.value:.15g} MODE={self.mode} SEED={self.seed}"


# -- Hamiltonian descriptors --------------------------------------------------


@dataclass(frozen=True)
class Term:
    """``coef * prod(sigma^axis_site)``; each factor is ``(site, axis, lower_level)``."""

    coef: complex
    ops: tuple

    def __post_init__(self):
        ops = tuple((site, Axis(axis), lower) for site, axis, lower in
                    ((o + (0,)) if len(o) == 2 else o for o in self.ops))
        object.__setattr__(self, "ops", ops)


def bond_terms(pairs: Iterable, coeffs: dict) -> tuple[Term, ...]:
    """Two-site terms ``sum_pairs sum_axis coeffs[axis] * sigma^a sigma^a``."""
    out = []
    for a, b in pairs:
        for axis, c in coeffs.items():
            if c:
                out.append(Term(c, ((a, axis), (b, axis))))
    return tuple(out)


def heisenberg_terms(pairs: Iterable, j: float) -> tuple[Term, ...]:
    return bond_terms(pairs, {"x": j, "y": j, "z": j})


def pulse_generator(pulse, geometry: LatticeGeometry) -> tuple[tuple[Term, ...], float]:
    """Hamiltonian ``H`` and time ``t`` with ``exp(-i t H)`` equal to the pulse."""
    if isinstance(pulse, (Periodic, Uniform, Subspace)):
        lower = pulse.level if isinstance(pulse, Subspace) else 0
        angles = profile_vector(pulse, geometry)
        terms = tuple(Term(float(th), ((s, pulse.axis, lower),))
                      for s, th in zip(geometry.sites(), angles))
        return terms, 1.0
    pairs = bonds_of(pulse.bonds, geometry)
    if isinstance(pulse, Ising):
        return bond_terms(pairs, {"z": -pulse.theta}), 1.0
    if isinstance(pulse, XYBond):
        return bond_terms(pairs, {"x": -pulse.theta, "y": -pulse.theta}), 1.0
    if isinstance(pulse, XXZ):
        return bond_terms(pairs, {"z": pulse.j1, "x": -pulse.j2, "y": -pulse.j2}), pulse.t
    if isinstance(pulse, Heisenberg):
        return heisenberg_terms(pairs, pulse.j), pulse.t
    raise TypeError(f"not a pulse: {pulse!r}")


def hamiltonian_matrix(terms: Iterable[Term], geometry: LatticeGeometry, dim: int = 2,
                       check: bool = True) -> np.ndarray:
    """Dense matrix of a term list; raises :class:`NonHermitianError` on complex coefficients."""
    n = geometry.n_sites
    size = dim**n
    if size > matrix_cap():
        raise MatrixCapError(f"dimension {size} exceeds matrix cap {matrix_cap()}")
    total = sp.csr_matrix((size, size), dtype=complex)
    eye = sp.identity(dim, dtype=complex, format="csr")
    for term in terms:
        if check and abs(np.imag(term.coef)) > 0:
            raise NonHermitianError(f"term coefficient {term.coef} is not real")
        factors = [eye] * n
        for site, axis, lower in term.ops:
            k = geometry.index(site)
            factors[k] = sp.csr_matrix(pauli(axis, dim, lower) @ factors[k].toarray())
        mat = factors[0]
        for f in factors[1:]:
            mat = sp.kron(mat, f, format="csr")
        total = total + term.coef * mat
    return total.toarray()


def _check_hermitian(h: np.ndarray) -> None:
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise NonHermitianError("Hamiltonian must be a square matrix")
    if not np.allclose(h, h.conj().T, atol=1e-12, rtol=0):
        raise NonHermitianError("Hamiltonian is not Hermitian")


def exact_evolve(hamiltonian, t: float, geometry: LatticeGeometry, dim: int = 2) -> OperatorHandle:
    """``exp(-i t H)`` by Hermitian eigendecomposition.

    ``hamiltonian`` is a sequence of :class:`Term` or a dense matrix.
    """
    if isinstance(hamiltonian, np.ndarray):
        h = np.asarray(hamiltonian, dtype=complex)
        if h.shape != (dim ** geometry.n_sites,) * 2:
            raise GeometryError(f"matrix shape {h.shape} does not match the geometry")
    else:
        h = hamiltonian_matrix(hamiltonian, geometry, dim)
    _check_hermitian(h)
    evals, evecs = np.linalg.eigh(h)
    u = (evecs * np.exp(-1j * t * evals)) @ evecs.conj().T
    return OperatorHandle(geometry, dim, u)


# -- pulse application on (D, batch) arrays -----------------------------------


def _apply_local(arr: np.ndarray, op: np.ndarray, axis: int, n: int, dim: int) -> np.ndarray:
    batch = arr.shape[1]
    view = arr.reshape(dim**axis, dim, dim ** (n - axis - 1) * batch)
    return np.matmul(op, view).reshape(-1, batch)


def _apply_two_site(arr: np.ndarray, op: np.ndarray, a: int, b: int, n: int, dim: int) -> np.ndarray:
    batch = arr.shape[1]
    tensor = arr.reshape((dim,) * n + (batch,))
    out = np.tensordot(op.reshape(dim, dim, dim, dim), tensor, axes=([2, 3], [a, b]))
    out = np.moveaxis(out, [0, 1], [a, b])
    return out.reshape(-1, batch)


def _apply_site_angles(arr, angles, axis: Axis, lower: int, n: int, dim: int) -> np.ndarray:
    if axis is Axis.Z:
        # diagonal: multiply by the kron of per-site phase vectors
        zdiag = np.real(np.diag(pauli(Axis.Z, dim, lower)))
        phase = np.ones(1, dtype=complex)
        for th in angles:
            phase = np.kron(phase, np.exp(-1j * th * zdiag))
        return arr * phase[:, None]
    for s, th in enumerate(angles):
        if abs(th) > 1e-15:
            arr = _apply_local(arr, rotation(axis, th, dim, lower), s, n, dim)
    return arr


def _two_site_hamiltonian(pulse, dim: int) -> tuple[np.ndarray, float]:
    def pp(axis):
        p = pauli(axis, dim)
        return np.kron(p, p)

    if isinstance(pulse, XXZ):
        return pulse.j1 * pp("z") - pulse.j2 * (pp("x") + pp("y")), pulse.t
    if isinstance(pulse, Heisenberg):
        return pulse.j * (pp("x") + pp("y") + pp("z")), pulse.t
    if isinstance(pulse, XYBond):
        return -(pp("x") + pp("y")), pulse.theta
    raise TypeError(pulse)


@functools.lru_cache(maxsize=32)
def _spectrum(geometry: LatticeGeometry, dim: int, pairs: tuple, kind: str, coeffs: tuple):
    terms = bond_terms(pairs, dict(coeffs))
    h = hamiltonian_matrix(terms, geometry, dim)
    return np.linalg.eigh(h)


def _apply_bond_pulse(arr, pulse, geometry: LatticeGeometry, dim: int) -> np.ndarray:
    n = geometry.n_sites
    pairs = bonds_of(pulse.bonds, geometry)
    if not pairs:
        return arr
    idx = [(geometry.index(a), geometry.index(b)) for a, b in pairs]
    if isinstance(pulse, Ising):
        dig = _digits(n, dim)
        sz = _sz_table(dim)[dig]
        energy = sum(sz[a] * sz[b] for a, b in idx)
        return arr * np.exp(1j * pulse.theta * energy)[:, None]
    h2, t = _two_site_hamiltonian(pulse, dim)
    if is_disjoint(pairs):
        evals, evecs = np.linalg.eigh(h2)
        u2 = (evecs * np.exp(-1j * t * evals)) @ evecs.conj().T
        for a, b in idx:
            arr = _apply_two_site(arr, u2, a, b, n, dim)
        return arr
    # overlapping bonds: exact exponential of the full generator
    if isinstance(pulse, XXZ):
        kind, coeffs = "xxz", (("x", -pulse.j2), ("y", -pulse.j2), ("z", pulse.j1))
    elif isinstance(pulse, Heisenberg):
        kind, coeffs = "heis", (("x", pulse.j), ("y", pulse.j), ("z", pulse.j))
    else:
        kind, coeffs = "xy", (("x", -1.0), ("y", -1.0))
    evals, evecs = _spectrum(geometry, dim, tuple(pairs), kind, coeffs)
    return evecs @ (np.exp(-1j * t * evals)[:, None] * (evecs.conj().T @ arr))


def _apply_to_array(arr: np.ndarray, pulse, geometry: LatticeGeometry, dim: int) -> np.ndarray:
    n = geometry.n_sites
    if isinstance(pulse, (Periodic, Uniform)):
        return _apply_site_angles(arr, profile_vector(pulse, geometry), pulse.axis, 0, n, dim)
    if isinstance(pulse, Subspace):
        if dim < pulse.level + 2:
            raise GeometryError(f"subspace level {pulse.level} needs local dimension >= {pulse.level + 2}")
        return _apply_site_angles(arr, profile_vector(pulse, geometry), pulse.axis,
                                  pulse.level, n, dim)
    if isinstance(pulse, (Ising, XXZ, Heisenberg, XYBond)):
        return _apply_bond_pulse(arr, pulse, geometry, dim)
    if isinstance(pulse, _TargetOp):
        return pulse.apply(arr, geometry, dim)
    raise TypeError(f"not a pulse: {pulse!r}")


def _check_state(state: StateVector, geometry: LatticeGeometry, dim: int) -> None:
    if state.geometry != geometry or state.dim != dim:
        raise GeometryError("state and schedule live on different geometries or dimensions")


def apply_pulse(state: StateVector, pulse) -> StateVector:
    arr = _apply_to_array(state.amplitudes[:, None], pulse, state.geometry, state.dim)
    return StateVector(state.geometry, state.dim, arr[:, 0])


def apply_schedule(state: StateVector, schedule: Schedule) -> StateVector:
    _check_state(state, schedule.geometry, schedule.dim)
    arr = state.amplitudes[:, None]
    for p in schedule.pulses:
        arr = _apply_to_array(arr, p, schedule.geometry, schedule.dim)
    return StateVector(state.geometry, state.dim, arr[:, 0])


def _apply_ops(arr: np.ndarray, ops, geometry: LatticeGeometry, dim: int) -> np.ndarray:
    for p in ops:
        arr = _apply_to_array(arr, p, geometry, dim)
    return arr


def schedule_to_unitary(schedule: Schedule, cap: int | None = None) -> OperatorHandle:
    """Dense product of the schedule's pulses (first pulse rightmost)."""
    size = schedule.dim ** schedule.geometry.n_sites
    cap = matrix_cap() if cap is None else cap
    if size > cap:
        raise MatrixCapError(f"dimension {size} exceeds matrix cap {cap}; use sampling")
    u = _apply_ops(np.eye(size, dtype=complex), schedule.pulses, schedule.geometry, schedule.dim)
    return OperatorHandle(schedule.geometry, schedule.dim, u)


# -- targets ------------------------------------------------------------------


class _TargetOp:
    def apply(self, arr, geometry, dim):  # pragma: no cover - interface
        raise NotImplementedError


@dataclass(frozen=True)
class SiteRotation(_TargetOp):
    """``prod_sites exp(-i angle sigma^axis)`` on the listed sites."""

    sites: tuple
    axis: Axis
    angle: float
    level: int = 0

    def apply(self, arr, geometry, dim):
        angles = np.zeros(geometry.n_sites)
        for s in self.sites:
            angles[geometry.index(s)] = self.angle
        return _apply_site_angles(arr, angles, Axis(self.axis), self.level, geometry.n_sites, dim)


@dataclass(frozen=True)
class Evolution(_TargetOp):
    """``exp(-i t H)`` for a term-list Hamiltonian (dense, subject to the cap)."""

    terms: tuple
    t: float

    def apply(self, arr, geometry, dim):
        return exact_evolve(self.terms, self.t, geometry, dim).matrix @ arr


def zz_phase(pairs, angle: float) -> Ising:
    """``exp(+i angle sum_pairs Z Z)`` as an Ising pulse on an explicit bond list."""
    return Ising(angle, BondSet.explicit(pairs))


@dataclass(frozen=True)
class Target:
    """Exact reference operator: the product of ``ops`` applied in order."""

    geometry: LatticeGeometry
    dim: int
    ops: tuple = ()
    descriptor: str = ""

    def apply(self, arr: np.ndarray) -> np.ndarray:
        return _apply_ops(arr, self.ops, self.geometry, self.dim)

    def unitary(self, cap: int | None = None) -> OperatorHandle:
        size = self.dim ** self.geometry.n_sites
        cap = matrix_cap() if cap is None else cap
        if size > cap:
            raise MatrixCapError(f"dimension {size} exceeds matrix cap {cap}")
        return OperatorHandle(self.geometry, self.dim, self.apply(np.eye(size, dtype=complex)))


TargetLike = Union[Target, OperatorHandle]


# -- fidelity -----------------------------------------------------------------


def _haar_states(size: int, count: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(size, count)) + 1j * rng.normal(size=(size, count))
    return z / np.linalg.norm(z, axis=0)


def compare_fidelity(schedule: Schedule, target: TargetLike, *, seed: int = 0,
                     n_samples: int = 20, mode: str | None = None,
                     cap: int | None = None) -> FidelityReport:
    """Global-phase-invariant agreement between a schedule and a target.

    ``fullUnitary``: ``|Tr(V^dag U)| / D``. ``randomStateSampling``: minimum of
    ``|<V psi|U psi>|`` over seeded Haar-random states. The mode is chosen by
    the matrix cap unless given explicitly.
    """
    if target.geometry != schedule.geometry or target.dim != schedule.dim:
        raise GeometryError("schedule and target live on different geometries or dimensions")
    size = schedule.dim ** schedule.geometry.n_sites
    cap = matrix_cap() if cap is None else cap
    if mode is None:
        mode = "fullUnitary" if size <= cap else "randomStateSampling"
    if mode == "fullUnitary":
        u = schedule_to_unitary(schedule, cap).matrix
        v = target.matrix if isinstance(target, OperatorHandle) else target.unitary(cap).matrix
        f = float(abs(np.vdot(v, u)) / size)
        return FidelityReport(min(f, 1.0), mode, 0, abs(1.0 - f), seed)
    if mode != "randomStateSampling":
        raise ValueError(f"unknown fidelity mode {mode!r}")
    if n_samples < 20:
        raise ValueError("sampling mode uses at least 20 states")
    psi = _haar_states(size, n_samples, np.random.default_rng(seed))
    out_u = _apply_ops(psi, schedule.pulses, schedule.geometry, schedule.dim)
    out_v = target.matrix @ psi if isinstance(target, OperatorHandle) else target.apply(psi)
    overlaps = np.abs(np.sum(out_v.conj() * out_u, axis=0))
    f = float(overlaps.min())
    return FidelityReport(min(f, 1.0), mode, n_samples, float(np.max(np.abs(1 - overlaps))), seed)


# -- statevector dump ---------------------------------------------------------


def dump_state(state: StateVector, threshold: float = 1e-14) -> str:
    n, d = state.geometry.n_sites, state.dim
    lines = []
    for idx in np.flatnonzero(np.abs(state.amplitudes) >= threshold):
        label = "".join(str(x) for x in _digits(n, d)[:, idx]) if d <= 10 else \
            ",".join(str(x) for x in _digits(n, d)[:, idx])
        a = state.amplitudes[idx]
        lines.append(f"{label} {fmt_real(a.real)} {fmt_real(a.imag)}")
    return "\n".join(lines) + "\n"


def load_state(text: str, geometry: LatticeGeometry, dim: int) -> StateVector:
    n = geometry.n_sites
    amps = np.zeros(dim**n, dtype=complex)
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        label, re, im = line.split()
        digits = [int(c) for c in (label.split(",") if "," in label else label)]
        if len(digits) != n or any(not 0 <= x < dim for x in digits):
            raise GeometryError(f"basis label {label!r} does not fit the geometry")
        idx = 0
        for x in digits:
            idx = idx * dim + x
        amps[idx] = complex(float(re), float(im))
    return StateVector(geometry, dim, amps)
