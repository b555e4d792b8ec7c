"""Independent dense reference built from explicit Kronecker products and expm."""

import functools

import numpy as np
from scipy.linalg import expm

from qpfc.lattice import (
    ALL_CHAIN,
    BondSet,
    Heisenberg,
    Ising,
    LatticeGeometry,
    Periodic,
    Uniform,
    XXZ,
    XYBond,
    bonds_of,
    profile_vector,
)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
PAULI = {"x": X, "y": Y, "z": Z}


def embed(n, ops, dim=2):
    """Kronecker product with ``ops[k]`` on 0-based site ``k`` and identity elsewhere."""
    return functools.reduce(np.kron, [ops.get(k, np.eye(dim, dtype=complex)) for k in range(n)])


def site_rotation(n, site0, axis, angle):
    return expm(-1j * angle * embed(n, {site0: PAULI[axis]}))


def zz(n, a0, b0):
    return embed(n, {a0: Z, b0: Z})


def pair(n, a0, b0, axis):
    return embed(n, {a0: PAULI[axis], b0: PAULI[axis]})


def fidelity(u, v):
    return abs(np.vdot(v, u)) / u.shape[0]


def random_pulse(rng, g):
    kind = rng.integers(7)
    th = float(rng.uniform(-2, 2))
    ax = "xyz"[rng.integers(3)]
    if kind == 0:
        return Uniform(ax, th)
    if kind == 1:
        return Periodic(ax, th, float(rng.integers(1, 6)), float(rng.uniform(0, 5)))
    if kind == 2:
        return Ising(th, ALL_CHAIN)
    if kind == 3:
        return XXZ(float(rng.normal()), float(rng.normal()), th, ALL_CHAIN)
    if kind == 4:
        return Heisenberg(float(rng.normal()), th, ALL_CHAIN)
    if kind == 5:
        return XYBond(th, ALL_CHAIN)
    return Ising(th, BondSet.explicit([(1, 2)]))


def generator(pulse, n):
    """Generator built from explicit Kronecker products, not the engine's term lists."""
    g = LatticeGeometry.chain(n)
    if isinstance(pulse, (Uniform, Periodic)):
        ang = profile_vector(pulse, g)
        return sum(a * embed(n, {q: PAULI[pulse.axis.value]}) for q, a in enumerate(ang)), 1.0
    pairs = [(a - 1, b - 1) for a, b in bonds_of(pulse.bonds, g)]
    xy = sum(pair(n, a, b, "x") + pair(n, a, b, "y") for a, b in pairs)
    zzs = sum(zz(n, a, b) for a, b in pairs)
    if isinstance(pulse, Ising):
        return -pulse.theta * zzs, 1.0
    if isinstance(pulse, XYBond):
        return -pulse.theta * xy, 1.0
    if isinstance(pulse, XXZ):
        return pulse.j1 * zzs - pulse.j2 * xy, pulse.t
    return pulse.j * (xy + zzs), pulse.t


def local_rotation(axis, angle):
    return expm(-1j * angle * PAULI[axis])


def rotations(n, angles, axis):
    """``prod_k exp(-i angles[k] sigma_k)`` as one Kronecker product (0-based keys)."""
    return embed(n, {k: local_rotation(axis, a) for k, a in angles.items()})


def zz_diag(n, pairs0, angle):
    """Diagonal of ``exp(+i angle sum Z_a Z_b)``; site 0 is the most significant bit."""
    bits = (np.arange(2**n)[:, None] >> (n - 1 - np.arange(n))) & 1
    s = 1 - 2 * bits
    return np.exp(1j * angle * sum(s[:, a] * s[:, b] for a, b in pairs0))


def periodic_angles(pulse, coords):
    """``theta (1 - cos(2 pi (x - k) / a))`` per coordinate, straight from the definition."""
    x = np.asarray(coords, dtype=float)
    return pulse.theta * (1 - np.cos(2 * np.pi * (x - pulse.focus) / pulse.period))


def haar(size, count, seed):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(size, count)) + 1j * rng.normal(size=(size, count))
    return z / np.linalg.norm(z, axis=0)
