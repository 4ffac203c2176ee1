import numpy as np
import pytest
from scipy import special

from cryochain.constants import BOLTZMANN, PI, torr_to_pascal
from cryochain.species import ytterbium_171, hydrogen_gas
from cryochain import collision as col

ION = ytterbium_171()
GAS = hydrogen_gas(4.7)
INTER = col.InducedDipoleInteraction.from_species(GAS, ION)


def test_induced_dipole_strength():
    assert INTER.c4 == pytest.approx(9.0784e-59, rel=1e-4)
    assert INTER.mass_imbalance == pytest.approx(0.0117932, rel=1e-5)
    assert INTER.reduced_mass == pytest.approx(
        GAS.mass * ION.mass / (GAS.mass + ION.mass), rel=1e-12)
    with pytest.raises(ValueError):
        col.InducedDipoleInteraction(c4=-1.0, reduced_mass=1e-27,
                                     mass_imbalance=0.01)


def test_p_wave_barrier_scale():
    # quantum effects are confined below a few mK; 4.7 K is classical
    assert col.p_wave_barrier(GAS, ION) / BOLTZMANN == pytest.approx(
        2.2538e-3, rel=1e-4)


def test_critical_impact_parameter():
    assert col.critical_impact_parameter(193.0, INTER) == pytest.approx(
        1.55808e-9, rel=1e-4)
    # array input, and the b_c ~ v^(-1/2) scaling
    v = np.array([50.0, 200.0, 800.0])
    bc = col.critical_impact_parameter(v, INTER)
    assert bc[0] / bc[1] == pytest.approx(2.0, rel=1e-12)
    assert bc[1] / bc[2] == pytest.approx(2.0, rel=1e-12)
    with pytest.raises(ValueError):
        col.critical_impact_parameter(0.0, INTER)


def test_elliptic_k_against_scipy():
    m = np.array([0.0, 0.2, 0.5, 0.9, 0.999])
    assert col.complete_elliptic_k(m) == pytest.approx(special.ellipk(m),
                                                       rel=1e-13)
    with pytest.raises(ValueError):
        col.complete_elliptic_k(1.0)


def test_scattering_angle_far_field_asymptote():
    # b >> b_c deflection approaches (3 pi / 16) (b_c/b)^4
    bc = col.critical_impact_parameter(193.0, INTER)
    for ratio in (5.0, 8.0, 12.0):
        theta, captured = col.scattering_angle(ratio * bc, 193.0, INTER)
        assert not captured
        assert theta == pytest.approx(3.0 * PI / 16.0 / ratio**4, rel=2e-2)


def test_scattering_angle_capture_branch():
    bc = col.critical_impact_parameter(193.0, INTER)
    theta, captured = col.scattering_angle(0.5 * bc, 193.0, INTER)
    assert captured and theta == PI
    theta, captured = col.scattering_angle(0.5 * bc, 193.0, INTER,
                                           capture_angle="overlap")
    assert captured and 0.0 < theta < PI
    # grazing but free orbits deflect strongly
    theta, captured = col.scattering_angle(1.01 * bc, 193.0, INTER)
    assert not captured
    assert theta == pytest.approx(2.1143, rel=1e-3)
    with pytest.raises(ValueError):
        col.scattering_angle(-1.0, 193.0, INTER)
    with pytest.raises(ValueError):
        col.scattering_angle(bc, 193.0, INTER, capture_angle="bogus")


def test_zero_strength_limit():
    weak = col.InducedDipoleInteraction(
        c4=1e-80, reduced_mass=INTER.reduced_mass,
        mass_imbalance=INTER.mass_imbalance)
    theta, captured = col.scattering_angle(1.5e-9, 193.0, weak)
    assert not captured
    assert theta < 1e-6


def test_collide_event_bookkeeping():
    bc = col.critical_impact_parameter(193.0, INTER)
    ev = col.collide(2.0 * bc, 193.0, INTER)
    assert ev.angular_momentum == pytest.approx(
        2.0 * bc * INTER.reduced_mass * 193.0, rel=1e-12, abs=0.0)
    assert ev.energy == pytest.approx(
        0.5 * INTER.reduced_mass * 193.0**2, rel=1e-12, abs=0.0)
    assert not ev.captured


def test_energy_transfer_head_on():
    # theta = pi transfers the full 4 xi/(1+xi)^2 fraction
    frac = col.energy_transfer(INTER.mass_imbalance, PI, 1.0)
    assert frac == pytest.approx(0.046079, rel=1e-4)
    assert col.energy_transfer(INTER.mass_imbalance, 0.0, 1.0) == 0.0
    with pytest.raises(ValueError):
        col.energy_transfer(0.0, PI, 1.0)


def test_collision_outcome_conserves():
    v_mol = np.array([120.0, -40.0, 60.0])
    xi = INTER.mass_imbalance
    v_ion, v_out = col.collision_outcome(v_mol, 1.3, xi, 0.7)
    # momentum: m_mol v_mol = m_mol v_out + m_ion v_ion, scaled by 1/m_ion
    p_in = xi * v_mol
    p_out = xi * v_out + v_ion
    assert p_out == pytest.approx(p_in, rel=1e-12, abs=0.0)
    e_in = xi * v_mol @ v_mol
    e_out = xi * v_out @ v_out + v_ion @ v_ion
    assert e_out == pytest.approx(e_in, rel=1e-12, abs=0.0)


def test_velocity_kick_needs_azimuth_source():
    with pytest.raises(ValueError):
        col.velocity_kick(np.array([100.0, 0.0, 0.0]), 1.0,
                          INTER.mass_imbalance)
    kick = col.velocity_kick(np.array([100.0, 0.0, 0.0]), PI,
                             INTER.mass_imbalance, azimuth=0.0)
    xi = INTER.mass_imbalance
    assert kick[0] == pytest.approx(2.0 * xi / (1.0 + xi) * 100.0,
                                    rel=1e-12, abs=0.0)


def test_langevin_rate_values():
    assert col.langevin_rate(GAS, ION, 1.0) == pytest.approx(
        1.47193e-15, rel=1e-4)
    n = col.density_from_pressure(torr_to_pascal(2e-12), 4.7)
    assert col.langevin_rate(GAS, ION, n) == pytest.approx(
        4.0323e-3, rel=1e-4)
    # the rate is n pi b_c^2 v at any v
    for v in (10.0, 193.0, 4000.0):
        bc = col.critical_impact_parameter(v, INTER)
        assert col.langevin_rate(GAS, ION, n) == pytest.approx(
            n * PI * bc**2 * v, rel=1e-12)


def test_density_conventions():
    p = torr_to_pascal(2e-12)
    n_work = col.density_from_pressure(p, 4.7)
    n_ideal = col.density_from_pressure(p, 4.7, ideal_gas=True)
    assert n_work == pytest.approx(2.0 / 3.0 * n_ideal, rel=1e-12)
    assert n_ideal == pytest.approx(p / (BOLTZMANN * 4.7), rel=1e-12)
    with pytest.raises(ValueError):
        col.density_from_pressure(-1.0, 4.7)
    with pytest.raises(ValueError):
        col.density_from_pressure(p, 0.0)


def test_thermal_sampling_moments():
    rng = np.random.default_rng(3)
    v = col.sample_thermal_velocities(GAS, rng, 200_000)
    sigma2 = BOLTZMANN * GAS.temperature / GAS.mass
    assert np.var(v, axis=0) == pytest.approx(sigma2, rel=2e-2)
    assert col.most_probable_speed(GAS) == pytest.approx(
        np.sqrt(2.0 * sigma2), rel=1e-12)


def test_mean_capture_energy_transfer():
    # head-on capture kicks average to 4 xi/(1+xi)^2 (3/2) kB T exactly
    rng = np.random.default_rng(11)
    de_pi = col.mean_capture_energy_transfer(GAS, ION, 200_000, rng,
                                             capture_angle="pi")
    analytic = 0.046079 * 1.5 * BOLTZMANN * GAS.temperature
    assert de_pi == pytest.approx(analytic, rel=1e-2)
    # exact infall rotation angles knock the average down by half
    rng = np.random.default_rng(11)
    de = col.mean_capture_energy_transfer(GAS, ION, 200_000, rng)
    assert 0.40 * de_pi < de < 0.50 * de_pi
    assert 0.100 < de / BOLTZMANN < 0.200  # kelvin
    with pytest.raises(ValueError):
        col.mean_capture_energy_transfer(GAS, ION, 0, rng)
