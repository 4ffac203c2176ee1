import numpy as np
import pytest

from cryochain.constants import TWO_PI, BOLTZMANN, torr_to_pascal
from cryochain.species import ytterbium_171, hydrogen_gas
from cryochain import experiments as ex
from cryochain import trap as tp

ION = ytterbium_171()
W_AX = TWO_PI * 150e3
W_Y = TWO_PI * 405e3
W_Z = TWO_PI * 435e3


def desk_pattern():
    return ex.zigzag_equilibrium(7, ION, W_AX, W_Y, W_Z)


def test_zigzag_equilibrium_pattern():
    eq = desk_pattern()
    # buckled in the soft (y) plane only, alternating, mirror symmetric
    assert np.max(np.abs(eq[:, 2])) < 1e-12
    assert np.all(np.sign(eq[1:, 1]) == -np.sign(eq[:-1, 1]))
    assert eq[:, 1] == pytest.approx(eq[::-1, 1], rel=1e-9)
    assert 3e-6 < np.max(np.abs(eq[:, 1])) < 4e-6
    mirror = ex.zigzag_equilibrium(7, ION, W_AX, W_Y, W_Z, stagger_sign=-1.0)
    assert mirror[:, 1] == pytest.approx(-eq[:, 1], rel=1e-9)


def test_flip_threshold_from_geometry():
    eq = desk_pattern()
    thr = ex.flip_threshold(eq)
    assert thr == pytest.approx(
        2.0 * np.sum(eq[:, 1] ** 2 + eq[:, 2] ** 2), rel=1e-12)
    # mirror distance is twice the threshold, residual jitter far below
    mirror = eq.copy()
    mirror[:, 1] *= -1.0
    assert np.sum((eq - mirror) ** 2) == pytest.approx(2.0 * thr, rel=1e-12)


def test_detect_flip_classifies_patterns():
    eq = desk_pattern()
    thr = ex.flip_threshold(eq)
    mirror = eq.copy()
    mirror[:, 1] *= -1.0
    rng = np.random.default_rng(1)
    jitter = eq + rng.normal(0.0, 20e-9, eq.shape)
    assert ex.detect_flip(eq, mirror, thr)
    assert not ex.detect_flip(eq, jitter, thr)
    assert not ex.detect_flip(eq, eq, thr)
    # symmetric in its arguments, and insensitive to row order
    assert ex.detect_flip(mirror, eq, thr)
    assert not ex.detect_flip(eq, jitter[::-1], thr)
    with pytest.raises(ValueError):
        ex.detect_flip(eq, eq[:5], thr)


def test_classify_configuration():
    eq = desk_pattern()
    mirror = eq.copy()
    mirror[:, 1] *= -1.0
    half = eq.copy()
    half[:3, 1] *= -1.0
    assert ex.classify_configuration(eq, eq) == "kept"
    assert ex.classify_configuration(eq, mirror) == "flipped"
    assert ex.classify_configuration(eq, half) == "mixed"


def test_flip_barrier_value():
    # rotation barrier for the bench geometry at a 30 kHz transverse split
    barrier = ex.flip_barrier(7, ION, W_AX, W_Y, W_Z)
    assert barrier / BOLTZMANN == pytest.approx(0.24709, rel=1e-3)
    # wider split costs more to rotate through the stiff plane
    wider = ex.flip_barrier(7, ION, W_AX, TWO_PI * 400e3, TWO_PI * 440e3)
    assert wider > barrier
    with pytest.raises(ValueError):
        ex.flip_barrier(7, ION, W_AX, W_Z, W_Y)


def test_crystal_energy_two_ion_analytic():
    from cryochain.constants import COULOMB_E2
    d = 8e-6
    pos = np.array([[-d / 2, 0.0, 0.0], [d / 2, 0.0, 0.0]])
    e = ex.crystal_energy(pos, ION, W_AX, W_Y, W_Z)
    expect = 2.0 * 0.5 * ION.mass * W_AX**2 * (d / 2) ** 2 + COULOMB_E2 / d
    assert e == pytest.approx(expect, rel=1e-12, abs=0.0)


def test_dress_micromotion_periodic_and_consistent():
    trap = tp.trap_from_secular_frequencies(ION, TWO_PI * 6e6, W_AX,
                                            (W_Y, W_Z))
    eq = desk_pattern()
    p0, v0 = ex.dress_micromotion(eq, trap, 0.0, ION)
    p1, v1 = ex.dress_micromotion(eq, trap, trap.rf_period, ION)
    assert p1 == pytest.approx(p0, rel=1e-9)
    assert v0 == pytest.approx(np.zeros_like(v0), abs=1e-12)
    # matches the trap-level dressing at zero phase
    dressed, vel = tp.micromotion_dressed_state(eq, trap, ION, 0.0)
    assert p0 == pytest.approx(dressed, rel=1e-12)


def test_flip_config_validation():
    good = ex.desk_scale_flip_config(4.7)
    assert good.transverse_split == pytest.approx(TWO_PI * 30e3)
    assert good.temperature == 4.7
    assert good.samples == good.samples_per_batch * good.batches
    with pytest.raises(ValueError):
        ex.desk_scale_flip_config(4.7, n_ions=2)
    with pytest.raises(ValueError):
        ex.desk_scale_flip_config(4.7, omega_y=W_Z, omega_z=W_Y)
    with pytest.raises(ValueError):
        # too stiff transversally: the chain never buckles
        ex.desk_scale_flip_config(4.7, omega_y=TWO_PI * 800e3,
                                  omega_z=TWO_PI * 830e3)
    with pytest.raises(ValueError):
        ex.desk_scale_flip_config(4.7, capture_kick="sideways")


def test_estimate_p_flip_deterministic():
    cfg = ex.desk_scale_flip_config(12.0, samples_per_batch=2, batches=2,
                                    periods=200)
    first = ex.estimate_p_flip(cfg, seed=42)
    again = ex.estimate_p_flip(cfg, seed=42)
    assert first == again
    assert first.total == 4
    assert len(first.batch_means) == 2
    # overall p is the flip count over the included samples
    assert first.p_flip == pytest.approx(first.flip_count / first.total)
    other = ex.estimate_p_flip(cfg, seed=43)
    assert other.batch_means != first.batch_means or \
        other.flip_count != first.flip_count


def test_arrhenius_two_point_round_trip():
    e_act, p0 = 10.0, 0.6
    t1, t2 = 4.7, 20.0
    act, amp = ex.arrhenius_two_point(t1, p0 * np.exp(-e_act / t1),
                                      t2, p0 * np.exp(-e_act / t2))
    assert act == pytest.approx(e_act, rel=1e-12)
    assert amp == pytest.approx(p0, rel=1e-12)
    with pytest.raises(ValueError):
        ex.arrhenius_two_point(20.0, 0.1, 4.7, 0.2)


def test_elastic_rate_and_inversion():
    assert ex.elastic_rate(0.4, 0.01) == pytest.approx(0.004)
    with pytest.raises(ValueError):
        ex.elastic_rate(-0.1, 1.0)
    # inverting the forward rate calculation lands on the input pressure
    est = ex.infer_pressure_elastic(4.0323e-3, 1.0, hydrogen_gas(4.7),
                                    ION, 4.7)
    assert est.torr == pytest.approx(2e-12, rel=1e-4)
    assert est.method == "elastic"
    # p_flip < 1 scales the inferred pressure up accordingly
    half = ex.infer_pressure_elastic(4.0323e-3, 0.5, hydrogen_gas(4.7),
                                     ION, 4.7)
    assert half.pressure == pytest.approx(2.0 * est.pressure, rel=1e-12)
    # quadrature error propagation
    err = ex.infer_pressure_elastic(4.0e-3, 0.4, hydrogen_gas(4.7), ION, 4.7,
                                    gamma_el_err=4.0e-4, p_flip_err=0.04)
    assert err.uncertainty / err.pressure == pytest.approx(
        np.hypot(0.1, 0.1), rel=1e-12)
    with pytest.raises(ValueError):
        ex.infer_pressure_elastic(1e-3, 0.0, hydrogen_gas(4.7), ION, 4.7)


def test_pressure_ratio_method():
    est = ex.infer_pressure_ratio(2e-5, 2e-4, torr_to_pascal(1e-11),
                                  4.0, 300.0)
    assert est.torr == pytest.approx(1.3333e-14, rel=1e-4)
    assert est.method == "inelastic-ratio"
    assert est.torr < 1e-13
    with pytest.raises(ValueError):
        ex.infer_pressure_ratio(2e-5, 0.0, 1e-9, 4.0, 300.0)


def test_dark_ion_series_poisson():
    gamma, p, n_ions, duration = 4e-3, 0.05, 50, 1e4
    events = ex.simulate_dark_ion_series(gamma, p, duration, n_ions, seed=8)
    mean = n_ions * gamma * p * duration
    assert abs(len(events) - mean) < 3.0 * np.sqrt(mean)
    assert np.all(np.diff(events) >= 0.0)
    assert np.all((events >= 0.0) & (events <= duration))
    assert len(ex.simulate_dark_ion_series(gamma, 0.0, duration, n_ions, 8)) == 0
    # fixed seed, fixed series
    again = ex.simulate_dark_ion_series(gamma, p, duration, n_ions, seed=8)
    assert np.array_equal(events, again)
    with pytest.raises(ValueError):
        ex.simulate_dark_ion_series(gamma, 1.5, duration, n_ions, 8)
