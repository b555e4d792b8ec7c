import math

import numpy as np
import pytest

from oracle import fidelity, site_rotation, zz
from qpfc.compiler import (
    MissingAmplitudeError,
    comb_stages,
    compile_bond_comb,
    compile_bond_naive,
    compile_grid_bond,
    compile_grid_single,
    compile_readout,
    compile_single,
    focus_depth,
    focus_stages,
    readout_levels,
)
from qpfc.engine import (
    SiteRotation,
    StateVector,
    Target,
    apply_schedule,
    compare_fidelity,
    schedule_to_unitary,
    zz_phase,
)
from qpfc.lattice import GeometryError, LatticeGeometry, Periodic, Schedule, Uniform
from scipy.linalg import expm

pi = math.pi
EXACT = 1 - 1e-10


def fid(result):
    return compare_fidelity(result.schedule, result.target, mode="fullUnitary").value


# -- compileSingle ------------------------------------------------------------


def test_single_site_chain_needs_no_focusing():
    r = compile_single(1, "x", 0.8, 1)
    assert r.schedule.pulses == (Uniform("x", 0.8),)
    assert r.step_count == 1 and r.depth == 0


def test_single_n8_k3():
    r = compile_single(3, "x", 0.7, 8)
    assert r.depth == 3 and r.step_count == 22
    u = schedule_to_unitary(r.schedule).matrix
    assert fidelity(u, site_rotation(8, 2, "x", 0.7)) >= EXACT


@pytest.mark.parametrize("n", range(2, 9))
@pytest.mark.parametrize("axis", ["x", "z", "y"])
def test_single_exact_every_site(n, axis):
    theta = 0.3 + 0.1 * n
    for k in range(1, n + 1):
        r = compile_single(k, axis, theta, n)
        assert fid(r) >= EXACT, (n, k)
        m = focus_depth(n, k, 2)
        assert 2**m > max(n - k, k - 1) and (m == 0 or 2 ** (m - 1) <= max(n - k, k - 1))
        assert r.step_count == 3 * 2**m - 2


def test_compiler_never_emits_y_conjugators():
    for axis in "xyz":
        pulses = compile_single(2, axis, 0.4, 6).schedule.pulses
        assert {p.axis.value for p in pulses if isinstance(p, Periodic)} <= {"x", "z"}


@pytest.mark.parametrize("n", [4, 6, 8, 12])
def test_single_step_band(n):
    counts = [compile_single(k, "x", 0.1, n).step_count for k in range(1, n + 1)]
    assert min(counts) >= 1 and max(counts) <= 6 * n
    assert max(counts) >= 1.5 * n


def test_parity_comb_after_first_iteration():
    n, k, big = 5, 3, pi / 8
    m = focus_depth(n, k, 2)
    theta = big / 2**m
    g = LatticeGeometry.chain(n)
    stage1 = Schedule(g, focus_stages(g, k, "x", theta)[1])
    want = Target(g, 2, (SiteRotation((1, 3, 5), "x", 2 * theta),))
    assert compare_fidelity(stage1, want).value >= EXACT


@pytest.mark.parametrize("n", [6, 9, 10])
def test_parity_comb_every_level(n):
    g = LatticeGeometry.chain(n)
    theta = 0.21
    for k in (1, n // 2, n):
        for level, pulses in enumerate(focus_stages(g, k, "x", theta)[:4]):
            sites = tuple(s for s in range(1, n + 1) if (s - k) % 2**level == 0)
            want = Target(g, 2, (SiteRotation(sites, "x", 2**level * theta),))
            assert compare_fidelity(Schedule(g, pulses), want).value >= EXACT


def test_out_of_range_site():
    with pytest.raises(GeometryError):
        compile_single(0, "x", 0.1, 4)
    with pytest.raises(GeometryError):
        compile_single(5, "x", 0.1, 4)


# -- bonds ----------------------------------------------------------------------


def test_naive_bond_two_sites():
    r = compile_bond_naive(1, 0.9, 2)
    u = schedule_to_unitary(r.schedule).matrix
    assert fidelity(u, expm(0.9j * zz(2, 0, 1))) >= EXACT


def test_naive_bond_n6_leaves_other_bonds_alone():
    r = compile_bond_naive(3, 0.7, 6)
    u = schedule_to_unitary(r.schedule).matrix
    assert fidelity(u, expm(0.7j * zz(6, 2, 3))) >= EXACT
    # a diagonal result: no phase on any other bond
    assert np.allclose(np.abs(np.diag(u)), 1, atol=1e-10)


@pytest.mark.parametrize("n", range(2, 8))
def test_naive_bond_every_bond(n):
    for k in range(1, n):
        assert fid(compile_bond_naive(k, 0.55, n)) >= EXACT


@pytest.mark.parametrize("n", [6, 8, 10])
def test_naive_bond_step_band(n):
    counts = [compile_bond_naive(k, 0.2, n).step_count for k in range(1, n)]
    assert 9 * n <= min(counts) and max(counts) <= 36 * n


def test_bond_out_of_range():
    with pytest.raises(GeometryError):
        compile_bond_naive(4, 0.1, 4)
    with pytest.raises(GeometryError):
        compile_bond_comb(0, 0.1, 4)


def test_comb_first_level_n8_k4():
    g = LatticeGeometry.chain(8)
    theta = 0.3
    stage = Schedule(g, comb_stages(g, 4, theta, depth=1)[1])
    want = Target(g, 2, (zz_phase([(1, 2), (4, 5), (7, 8)], 2 * theta),))
    assert compare_fidelity(stage, want).value >= EXACT


@pytest.mark.parametrize("n,k,depth", [(4, 2, 1), (5, 3, 1), (6, 3, 1), (5, 2, 1), (3, 1, 1),
                                       (2, 1, 0)])
def test_comb_exact_when_one_level_suffices(n, k, depth):
    r = compile_bond_comb(k, 0.8, n)
    assert r.depth == depth and r.step_count == 3 * 2**depth - 2
    assert fid(r) >= EXACT


def test_comb_surviving_bonds_at_level_one():
    for n in (6, 9, 12):
        g = LatticeGeometry.chain(n)
        k = n // 2
        stage = Schedule(g, comb_stages(g, k, 0.2, depth=1)[1])
        kept = [(b, b + 1) for b in range(1, n) if (b - k) % 3 == 0]
        want = Target(g, 2, (zz_phase(kept, 0.4),))
        assert compare_fidelity(stage, want, mode="randomStateSampling").value >= EXACT


def test_comb_needs_amplitude_beyond_level_one():
    with pytest.raises(MissingAmplitudeError):
        compile_bond_comb(6, 0.5, 12)


def test_comb_depth_and_steps():
    for n, k, depth in [(12, 6, 2), (30, 15, 3), (4, 2, 1)]:
        assert focus_depth(n, k, 3, bond=True) == depth
        r = compile_bond_comb(k, 0.5, n, {2: 1.0, 3: 1.0})
        assert r.step_count == 3 * 2**depth - 2


# -- grids --------------------------------------------------------------------


def test_grid_single_3x3_centre():
    r = compile_grid_single((2, 2), "x", 0.4, 3)
    assert fid(r) >= EXACT


@pytest.mark.parametrize("axis", ["x", "z"])
def test_grid_single_every_site(axis):
    for n in (2, 3):
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                assert fid(compile_grid_single((i, j), axis, 0.9, n)) >= EXACT


def test_grid_single_zero_angle_is_identity():
    r = compile_grid_single((1, 3), "x", 0.0, 3)
    u = schedule_to_unitary(r.schedule).matrix
    assert fidelity(u, np.eye(512)) == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("method", ["naive8", "twoOp"])
def test_grid_bond_3x3(method):
    assert fid(compile_grid_bond((2, 2), 0.7, 3, method)) >= EXACT


@pytest.mark.parametrize("method", ["naive8", "twoOp"])
def test_grid_bond_every_horizontal_bond_2x2(method):
    for i in (1, 2):
        assert fid(compile_grid_bond((i, 1), 1.1, 2, method)) >= EXACT


def test_grid_bond_zero_angle():
    r = compile_grid_bond((1, 1), 0.0, 3, "twoOp")
    assert fid(r) == pytest.approx(1, abs=1e-12)


def test_two_op_with_literal_z_conjugator_is_identity():
    theta = 0.7
    r = compile_grid_bond((2, 2), theta, 3, "twoOp", conjugator="z")
    u = schedule_to_unitary(r.schedule).matrix
    assert fidelity(u, np.eye(512)) == pytest.approx(1, abs=1e-10)
    # mismatch against the target is |cos theta|
    assert fid(r) == pytest.approx(abs(math.cos(theta)), abs=1e-10)


def test_grid_bond_outside():
    with pytest.raises(GeometryError):
        compile_grid_bond((1, 3), 0.1, 3)
    with pytest.raises(ValueError):
        compile_grid_bond((1, 1), 0.1, 3, method="fourOp")


# -- readout ------------------------------------------------------------------


def _final_levels(levels, n, anchor, init):
    r = compile_readout(levels, n, anchor)
    assert r.schedule.dim == levels + 2 and r.depth == levels
    g = r.schedule.geometry
    pops = apply_schedule(StateVector.basis(g, init, levels + 2), r.schedule).populations()
    return pops


def test_readout_one_level():
    pops = _final_levels(1, 4, 2, [1] * 4)
    assert np.allclose(pops[[1, 3], 2], 1, atol=1e-10)
    assert np.allclose(pops[[0, 2], 1], 1, atol=1e-10)


def test_readout_two_levels():
    pops = _final_levels(2, 8, 1, [1] * 8)
    assert np.allclose(pops[[0, 4], 3], 1, atol=1e-10)
    assert np.allclose(pops[[2, 6], 2], 1, atol=1e-10)
    assert np.allclose(pops[[1, 3, 5, 7], 1], 1, atol=1e-10)
    assert readout_levels(2, 8, 1) == [3, 1, 2, 1, 3, 1, 2, 1]


def test_readout_leaves_ground_state():
    pops = _final_levels(2, 6, 3, [0] * 6)
    assert np.allclose(pops[:, 0], 1, atol=1e-12)


def test_readout_sidecar():
    r = compile_readout(2, 8, 1)
    assert r.sidecar() == "STEPS=8 DEPTH=2 TARGET=readout:2:1"
    with pytest.raises(GeometryError):
        compile_readout(2, 8, 9)
