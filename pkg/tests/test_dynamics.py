import numpy as np
import pytest

from cryochain.constants import TWO_PI, BOLTZMANN, HBAR
from cryochain.species import ytterbium_171
from cryochain import axial as ax
from cryochain import trap as tp
from cryochain import dynamics as dyn

ION = ytterbium_171()

# compact bench trap: low drive frequency keeps RF periods cheap while the
# frequency hierarchy (axial < transverse < drive/2) matches the real thing
TRAP = tp.trap_from_secular_frequencies(
    ION, TWO_PI * 6e6, TWO_PI * 150e3, (TWO_PI * 405e3, TWO_PI * 435e3))
WELL = ax.harmonic_axial_potential(ION, TWO_PI * 150e3)


def small_crystal(n=3):
    ell = ax.characteristic_length(ION, TWO_PI * 150e3)
    pos = np.zeros((n, 3))
    pos[:, 0] = ax.solve_equilibrium(n, 0.0) * ell
    pos[0, 1] += 50e-9
    pos[-1, 2] -= 30e-9
    return dyn.SystemState.at_rest(pos)


def test_state_construction_and_validation():
    s = dyn.SystemState.at_rest([[1e-6, 0.0, 0.0]])
    assert s.n_ions == 1
    assert s.internal_amplitudes[0, 0] == 1.0 + 0.0j
    assert s.internal_amplitudes[0, 1] == 0.0 + 0.0j
    with pytest.raises(ValueError):
        dyn.SystemState(np.zeros((2, 3)), np.zeros((3, 3)))
    with pytest.raises(ValueError):
        dyn.SystemState(np.array([[np.nan, 0.0, 0.0]]), np.zeros((1, 3)))


def test_cooling_parameter_values():
    cool = dyn.yb171_cooling()
    assert cool.wavelength == 369.5e-9
    assert cool.linewidth == pytest.approx(TWO_PI * 19.6e6)
    assert cool.detuning == pytest.approx(-0.5 * cool.linewidth)
    assert np.linalg.norm(cool.beam_direction) == pytest.approx(1.0)
    assert cool.rabi_frequency == pytest.approx(
        cool.linewidth / np.sqrt(2.0), rel=1e-12)
    assert cool.recoil_speed(ION) == pytest.approx(
        HBAR * TWO_PI / 369.5e-9 / ION.mass, rel=1e-12)
    with pytest.raises(ValueError):
        dyn.CoolingParameters(369.5e-9, 1.0, 0.0, 1.0, (0.0, 0.0, 0.0))


def test_integrator_config_validation():
    with pytest.raises(ValueError):
        dyn.IntegratorConfig(steps_per_rf_period=5)
    cfg = dyn.IntegratorConfig()
    cool = dyn.yb171_cooling()
    # substep count caps the optical phase advanced per substep
    n_sub = cfg.cooling_substeps(1.667e-9, cool)
    assert n_sub >= cool.linewidth * 1.667e-9 / cfg.max_phase_per_substep


def test_coulomb_forces_pairwise():
    pos = np.array([[0.0, 0.0, 0.0], [5e-6, 0.0, 0.0]])
    f = dyn.coulomb_forces(pos, ION.charge)
    k = ION.charge**2 / (4.0 * np.pi * 8.8541878128e-12)
    assert f[0, 0] == pytest.approx(-k / 25e-12, rel=1e-6, abs=0.0)
    assert f[1, 0] == pytest.approx(k / 25e-12, rel=1e-6, abs=0.0)
    assert np.sum(f, axis=0) == pytest.approx([0.0, 0.0, 0.0], abs=1e-30)
    with pytest.raises(RuntimeError):
        dyn.coulomb_forces(np.array([[0.0, 0.0, 0.0], [5e-10, 0.0, 0.0]]),
                           ION.charge)


def test_forest_ruth_reverses_exactly():
    pos = np.array([[2e-6, 1e-6, -1e-6]])
    vel = np.array([[0.3, -0.2, 0.1]])
    acc = lambda p, t: dyn.total_force(p, t, TRAP, WELL, ION) / ION.mass
    dt = TRAP.rf_period / 100
    p, v, t = pos, vel, 0.0
    for _ in range(40):
        p, v, t = dyn.forest_ruth_step(p, v, t, dt, acc)
    for _ in range(40):
        p, v, t = dyn.forest_ruth_step(p, v, t, -dt, acc)
    assert p == pytest.approx(pos, rel=1e-10, abs=0.0)
    assert v == pytest.approx(vel, rel=1e-9, abs=1e-12)
    assert t == pytest.approx(0.0, abs=1e-22)


def test_kernel_matches_python_stepper():
    # cooling off, the compiled trajectory must agree with the plain
    # python palindrome step for step
    state = small_crystal()
    res = dyn.evolve(state, 2, TRAP, WELL, ION)
    p, v, t = state.positions.copy(), state.velocities.copy(), 0.0
    dt = TRAP.rf_period / 100
    acc = lambda q, tt: dyn.total_force(q, tt, TRAP, WELL, ION) / ION.mass
    for _ in range(200):
        p, v, t = dyn.forest_ruth_step(p, v, t, dt, acc)
    scale_p = np.max(np.abs(p))
    scale_v = np.max(np.abs(v))
    assert np.max(np.abs(res.state.positions - p)) < 1e-12 * scale_p
    assert np.max(np.abs(res.state.velocities - v)) < 1e-12 * scale_v
    assert res.periods_completed == 2 and not res.ejected
    assert res.state.time == pytest.approx(200 * dt, rel=1e-12)


def test_evolve_monitors_and_stays_bound():
    res = dyn.evolve(small_crystal(), 6, TRAP, WELL, ION)
    assert len(res.energy) == 6 and len(res.max_displacement) == 6
    # farthest ion stays near the chain end at |u| ell = 10.5 um
    assert np.all(res.max_displacement < 1.1e-5)
    assert np.all(np.isfinite(res.energy))
    assert res.periods[-1] == 6
    with pytest.raises(ValueError):
        dyn.evolve(small_crystal(), 0, TRAP, WELL, ION)


def test_collision_kick_equals_manual_split():
    # a kick scheduled on a period boundary must reproduce stop/kick/restart
    state = small_crystal()
    dv = np.array([0.0, 0.02, 0.01])
    whole = dyn.evolve(state, 6, TRAP, WELL, ION,
                       collisions=[(3 * TRAP.rf_period, 1, dv)])
    first = dyn.evolve(state, 3, TRAP, WELL, ION)
    mid = first.state
    mid.velocities[1] += dv
    second = dyn.evolve(mid, 3, TRAP, WELL, ION)
    assert np.max(np.abs(whole.state.positions - second.state.positions)) < 1e-18
    assert np.max(np.abs(whole.state.velocities - second.state.velocities)) < 1e-12
    # kicks outside the integration window are ignored
    late = dyn.evolve(state, 2, TRAP, WELL, ION,
                      collisions=[(50 * TRAP.rf_period, 0, dv)])
    quiet = dyn.evolve(state, 2, TRAP, WELL, ION)
    assert np.array_equal(late.state.positions, quiet.state.positions)


def test_ejection_stops_early():
    state = small_crystal()
    state.velocities[0] = (900.0, 0.0, 0.0)
    res = dyn.evolve(state, 50, TRAP, WELL, ION)
    assert res.ejected
    assert res.periods_completed < 50
    assert len(res.energy) == res.periods_completed


def test_cooling_removes_energy_and_is_deterministic():
    rng = np.random.default_rng(5)
    sigma = np.sqrt(BOLTZMANN * 0.5 / ION.mass)
    hot = dyn.SystemState(np.zeros((1, 3)), rng.normal(0.0, sigma, (1, 3)))
    cool = dyn.yb171_cooling()
    k0 = 0.5 * ION.mass * np.sum(hot.velocities**2)
    res = dyn.evolve(hot, 3000, TRAP, WELL, ION, cooling=cool, seed=3)
    kf = 0.5 * ION.mass * np.sum(res.state.velocities**2)
    assert kf < 0.05 * k0          # a few hundred mK down to a few mK
    assert res.jump_count > 5000   # photon budget for that energy drop
    again = dyn.evolve(hot, 3000, TRAP, WELL, ION, cooling=cool, seed=3)
    assert np.array_equal(res.state.positions, again.state.positions)
    assert np.array_equal(res.state.velocities, again.state.velocities)
    assert res.jump_count == again.jump_count
    other = dyn.evolve(hot, 3000, TRAP, WELL, ION, cooling=cool, seed=4)
    assert not np.array_equal(res.state.velocities, other.state.velocities)


def test_python_cooling_substep_jumps_and_recoils():
    rng = np.random.default_rng(0)
    state = dyn.SystemState.at_rest(np.zeros((4, 3)))
    cool = dyn.yb171_cooling(saturation=2.0)
    dt = 0.05 / cool.linewidth
    jumps = 0
    for _ in range(4000):
        jumps += dyn.cooling_substep(state, dt, cool, ION, rng)
    assert jumps > 100
    # every ion ends normalized and the recoils moved them
    norms = np.sum(np.abs(state.internal_amplitudes) ** 2, axis=1)
    assert norms == pytest.approx(1.0, rel=1e-9)
    assert np.all(np.linalg.norm(state.velocities, axis=1) > 0.0)
    # no drive, no dynamics
    idle = dyn.SystemState.at_rest(np.zeros((2, 3)))
    off = dyn.yb171_cooling(saturation=0.0)
    assert dyn.cooling_substep(idle, dt, off, ION, rng) == 0


def test_snapshot_round_trip(tmp_path):
    state = small_crystal()
    state.velocities[:] = np.arange(9.0).reshape(3, 3) * 1e-3
    state.internal_amplitudes[1] = (0.6 + 0.1j, 0.78 - 0.12j)
    state.time = 3.25e-6
    path = tmp_path / "snap.bin"
    dyn.save_state(state, path)
    back = dyn.load_state(path)
    assert np.array_equal(back.positions, state.positions)
    assert np.array_equal(back.velocities, state.velocities)
    assert np.array_equal(back.internal_amplitudes, state.internal_amplitudes)
    assert back.time == state.time
    bad = tmp_path / "junk.bin"
    bad.write_bytes(b"not a snapshot at all")
    with pytest.raises(ValueError):
        dyn.load_state(bad)
