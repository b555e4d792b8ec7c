import math

import numpy as np
import pytest
from scipy.linalg import expm

from oracle import X, Y, embed, fidelity, generator, random_pulse, zz
from qpfc.engine import (
    Evolution,
    MatrixCapError,
    NonHermitianError,
    StateVector,
    Target,
    Term,
    apply_pulse,
    apply_schedule,
    compare_fidelity,
    dump_state,
    exact_evolve,
    heisenberg_terms,
    load_state,
    pulse_generator,
    rotation,
    schedule_to_unitary,
)
from qpfc.lattice import (
    ALL_CHAIN,
    ALL_GRID,
    DIMER_A,
    DIMER_B,
    GRID_ROWS,
    GeometryError,
    Heisenberg,
    Ising,
    LatticeGeometry,
    Periodic,
    Schedule,
    Subspace,
    Uniform,
    XXZ,
    XYBond,
    bonds_of,
    profile_vector,
)

pi = math.pi


# -- applyPulse examples ------------------------------------------------------


def test_uniform_pi_half_flips_both_spins():
    g = LatticeGeometry.chain(2)
    out = apply_pulse(StateVector.all_zero(g), Uniform("x", pi / 2))
    assert abs(out.amplitudes[3]) == pytest.approx(1, abs=1e-12)
    assert out.amplitudes[3] == pytest.approx(-1)  # (-i)^2


@pytest.mark.parametrize("idx", [0, 5, 17, 31])
def test_z_pulse_keeps_basis_states(idx):
    g = LatticeGeometry.chain(5)
    amps = np.zeros(32, complex)
    amps[idx] = 1
    out = apply_pulse(StateVector(g, 2, amps), Periodic("z", pi / 4, 2, 3))
    assert abs(out.amplitudes[idx]) == pytest.approx(1, abs=1e-14)


def test_ising_phase_by_bond_enumeration():
    g, theta = LatticeGeometry.chain(4), 0.37
    u = schedule_to_unitary(Schedule(g, (Ising(theta, ALL_CHAIN),))).matrix
    for idx in range(16):
        bits = [(idx >> (3 - q)) & 1 for q in range(4)]
        s = [1 - 2 * b for b in bits]
        phase = np.exp(1j * theta * sum(s[q] * s[q + 1] for q in range(3)))
        assert u[idx, idx] == pytest.approx(phase, abs=1e-14)
    # two-site exponential oracle
    want = expm(1j * theta * sum(zz(4, q, q + 1) for q in range(3)))
    assert np.allclose(u, want, atol=1e-12)


# -- compareFidelity examples -------------------------------------------------


def test_self_comparison():
    s = Schedule(LatticeGeometry.chain(3), (Uniform("x", 0.4),))
    assert compare_fidelity(s, schedule_to_unitary(s)).value == pytest.approx(1, abs=1e-12)


def test_uniform_against_summed_generator():
    n = 4
    s = Schedule(LatticeGeometry.chain(n), (Uniform("x", 0.3),))
    v = expm(-1j * 0.3 * sum(embed(n, {q: X}) for q in range(n)))
    f = compare_fidelity(s, _handle(v, n)).value
    assert f == pytest.approx(1, abs=1e-10)


def test_empty_schedule_is_identity():
    g = LatticeGeometry.chain(3)
    assert compare_fidelity(Schedule(g), Target(g, 2)).value == 1.0


def test_sampling_mode_is_seeded_and_conservative():
    g = LatticeGeometry.chain(5)
    s = Schedule(g, (Uniform("x", 0.3), Ising(0.2, ALL_CHAIN)))
    t = Target(g, 2, (Uniform("x", 0.3), Ising(0.21, ALL_CHAIN)))
    a = compare_fidelity(s, t, seed=7, mode="randomStateSampling")
    b = compare_fidelity(s, t, seed=7, mode="randomStateSampling")
    full = compare_fidelity(s, t, mode="fullUnitary")
    assert a == b and a.sample_count == 20 and a.seed == 7
    assert a.value < 1 and abs(a.value - full.value) < 0.05
    with pytest.raises(ValueError):
        compare_fidelity(s, t, mode="randomStateSampling", n_samples=5)


def test_cap_switches_to_sampling(monkeypatch):
    g = LatticeGeometry.chain(4)
    s = Schedule(g, (Uniform("x", 0.3),))
    monkeypatch.setenv("QPFC_MATRIX_CAP", "8")
    rep = compare_fidelity(s, Target(g, 2, (Uniform("x", 0.3),)))
    assert rep.mode == "randomStateSampling" and rep.value == pytest.approx(1, abs=1e-12)
    with pytest.raises(MatrixCapError):
        schedule_to_unitary(s)


def test_mismatched_geometry_rejected():
    s = Schedule(LatticeGeometry.chain(3))
    with pytest.raises(GeometryError):
        compare_fidelity(s, Target(LatticeGeometry.chain(4), 2))
    with pytest.raises(GeometryError):
        apply_schedule(StateVector.all_zero(LatticeGeometry.chain(4)), s)


def test_report_text():
    s = Schedule(LatticeGeometry.chain(2))
    assert str(compare_fidelity(s, Target(s.geometry, 2), seed=3)) == "F=1 MODE=fullUnitary SEED=3"


# -- exactEvolve examples -----------------------------------------------------


def _handle(v, n, dim=2):
    from qpfc.engine import OperatorHandle
    return OperatorHandle(LatticeGeometry.chain(n), dim, v)


def test_exact_evolve_zz_quarter_pi():
    g = LatticeGeometry.chain(2)
    u = exact_evolve((Term(1.0, ((1, "z"), (2, "z"))),), pi / 4, g).matrix
    e = np.exp(-1j * pi / 4)
    assert np.allclose(u, np.diag([e, e.conjugate(), e.conjugate(), e]), atol=1e-14)


def test_heisenberg_bond_spectrum():
    g, t = LatticeGeometry.chain(2), 0.83
    u = exact_evolve(heisenberg_terms([(1, 2)], 1.0), t, g).matrix
    evals = np.linalg.eigvals(u)
    phases = sorted(np.round(np.angle(evals * np.exp(1j * t)), 12))
    # triplet (eigenvalue 1) thrice, singlet (-3) once
    assert np.allclose(sorted(np.angle(evals)), sorted(np.angle(
        np.exp(-1j * t * np.array([1, 1, 1, -3])))), atol=1e-12)
    assert phases.count(0.0) == 3


def test_dimer_lambda_one_is_square_lattice():
    g = LatticeGeometry.grid(2)
    hd = heisenberg_terms(bonds_of(DIMER_A, g), 1.0) + heisenberg_terms(bonds_of(DIMER_B, g), 1.0)
    sq = heisenberg_terms(bonds_of(ALL_GRID, g), 1.0)
    assert np.allclose(exact_evolve(hd, 0.7, g).matrix, exact_evolve(sq, 0.7, g).matrix, atol=1e-12)


def test_non_hermitian_rejected():
    g = LatticeGeometry.chain(2)
    with pytest.raises(NonHermitianError):
        exact_evolve((Term(1j, ((1, "z"),)),), 1.0, g)
    with pytest.raises(NonHermitianError):
        exact_evolve(np.triu(np.ones((4, 4))), 1.0, g)


# -- invariants ---------------------------------------------------------------


def test_norm_preserved_over_random_pulses(rng):
    g = LatticeGeometry.chain(5)
    for trial in range(100):
        psi = StateVector.random(g, seed=trial)
        out = apply_pulse(psi, random_pulse(rng, g))
        assert abs(out.norm - 1) <= 1e-12


def test_unitarity_of_random_schedules(rng):
    for trial in range(12):
        n = int(rng.integers(2, 9))
        g = LatticeGeometry.chain(n)
        pulses = [random_pulse(rng, g) for _ in range(int(rng.integers(1, 21)))]
        u = schedule_to_unitary(Schedule(g, pulses))
        assert u.unitarity_deviation() <= 1e-10


@pytest.mark.parametrize("n", [2, 3, 5, 6])
def test_pulse_matches_generator_oracle(n, rng):
    g = LatticeGeometry.chain(n)
    for _ in range(15):
        p = random_pulse(rng, g)
        h, t = generator(p, n)
        psi = StateVector.random(g, seed=int(rng.integers(1000)))
        want = expm(-1j * t * h) @ psi.amplitudes
        got = apply_pulse(psi, p).amplitudes
        assert np.max(np.abs(got - want)) <= 1e-10
        # the engine's own descriptor agrees as well
        terms, tt = pulse_generator(p, g)
        assert np.allclose(exact_evolve(terms, tt, g).matrix @ psi.amplitudes, want, atol=1e-10)


@pytest.mark.parametrize("bonds", [ALL_GRID, GRID_ROWS, DIMER_A, DIMER_B])
@pytest.mark.parametrize("kind", ["xxz", "heis", "xy"])
def test_grid_bond_pulses_against_oracle(bonds, kind):
    g = LatticeGeometry.grid(2, 4)
    p = {"xxz": XXZ(0.7, -0.4, 0.9, bonds), "heis": Heisenberg(0.6, 0.5, bonds),
         "xy": XYBond(0.3, bonds)}[kind]
    terms, t = pulse_generator(p, g)
    want = exact_evolve(terms, t, g).matrix
    assert np.allclose(schedule_to_unitary(Schedule(g, (p,))).matrix, want, atol=1e-10)


def test_diagonal_pulses_commute(rng):
    g = LatticeGeometry.chain(5)
    a, b = Periodic("z", 0.4, 3, 2), Ising(0.9, ALL_CHAIN)
    u1 = schedule_to_unitary(Schedule(g, (Uniform("x", 0.2), a, b, Uniform("x", 0.5)))).matrix
    u2 = schedule_to_unitary(Schedule(g, (Uniform("x", 0.2), b, a, Uniform("x", 0.5)))).matrix
    assert np.max(np.abs(u1 - u2)) <= 1e-12


@pytest.mark.parametrize("j1,t", [(1.0, 0.4), (-0.7, 1.3)])
def test_xxz_without_flip_flop_is_ising(j1, t):
    g = LatticeGeometry.chain(4)
    s = Schedule(g, (XXZ(j1, 0.0, t, ALL_CHAIN),))
    assert compare_fidelity(s, Target(g, 2, (Ising(-j1 * t, ALL_CHAIN),))).value == pytest.approx(1, abs=1e-12)
    wrong = compare_fidelity(s, Target(g, 2, (Ising(j1 * t, ALL_CHAIN),))).value
    assert wrong < 1 - 1e-3


# -- qudits, dumps ------------------------------------------------------------


def test_subspace_pulse_acts_on_upper_pair_only():
    g = LatticeGeometry.chain(2)
    s = Schedule(g, (Subspace(1, "x", pi / 2),), dim=3)
    out = apply_schedule(StateVector.basis(g, [1, 0], 3), s)
    pops = out.populations()
    assert pops[0, 2] == pytest.approx(1) and pops[1, 0] == pytest.approx(1)
    r = rotation("x", 0.3, dim=3, lower=1)
    assert np.allclose(r[:1, :1], 1) and np.allclose(r[1:, 1:], expm(-0.3j * X))


def test_qubit_pulses_leave_auxiliary_levels_alone():
    g = LatticeGeometry.chain(2)
    s = Schedule(g, (Uniform("x", 0.4), Ising(0.3, ALL_CHAIN)), dim=4)
    out = apply_schedule(StateVector.basis(g, [3, 2], 4), s)
    assert abs(abs(out.amplitudes[3 * 4 + 2]) - 1) < 1e-12


def test_dump_round_trip_and_threshold():
    g = LatticeGeometry.chain(3)
    psi = apply_pulse(StateVector.all_zero(g), Periodic("x", 0.3, 4, 1))
    text = dump_state(psi)
    for line in text.splitlines():
        label, re, im = line.split()
        assert len(label) == 3 and abs(complex(float(re), float(im))) >= 1e-14
    back = load_state(text, g, 2)
    assert np.allclose(back.amplitudes, psi.amplitudes, atol=1e-15)
    with pytest.raises(GeometryError):
        load_state("0000 1 0\n", g, 2)


def test_site_one_is_most_significant():
    g = LatticeGeometry.chain(3)
    psi = StateVector.basis(g, [1, 0, 0])
    assert psi.amplitudes[4] == 1
    assert dump_state(psi).split()[0] == "100"


def test_populations_of_product_state():
    g = LatticeGeometry.grid(2)
    out = apply_schedule(StateVector.all_zero(g), Schedule(g, (Uniform("y", pi / 4),)))
    assert np.allclose(out.populations(), 0.5)


def test_y_axis_supported_by_engine():
    g = LatticeGeometry.chain(2)
    u = schedule_to_unitary(Schedule(g, (Periodic("y", 0.2, 3, 1),))).matrix
    ang = profile_vector(Periodic("y", 0.2, 3, 1), g)
    want = np.kron(expm(-1j * ang[0] * Y), expm(-1j * ang[1] * Y))
    assert fidelity(u, want) == pytest.approx(1, abs=1e-12)


def test_evolution_target_matches_exact_evolve():
    g = LatticeGeometry.chain(3)
    h = heisenberg_terms([(1, 2), (2, 3)], 0.5)
    t = Target(g, 2, (Evolution(h, 0.9),))
    s = Schedule(g, (Heisenberg(0.5, 0.9, ALL_CHAIN),))
    assert compare_fidelity(s, t).value == pytest.approx(1, abs=1e-12)
