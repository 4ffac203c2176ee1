import numpy as np
import pytest

from cryochain import calculators as calc

# published stage loads the presets were sized against: (W at 40 K, W at 4 K)
BUDGET = {
    "40 K shield": (5.6, None),
    "4 K shield": (None, 1.0e-3),
    '2" viewport': (0.8, 0.6e-3),
    '1" viewports': (1.6, 1.2e-3),
    "wiring": (0.5, 220e-3),
}


def flat_table(lam=5.0, lo=2.0, hi=300.0):
    t = np.linspace(lo, hi, 50)
    return calc.ConductivityTable(temperatures=t,
                                  conductivities=np.full(50, lam),
                                  label="flat")


def test_radiative_load_formula_and_monotonicity():
    s = calc.RadiativeSurface(area=0.5, t_hot=300.0, t_cold=40.0,
                              view_factor=41.0)
    expect = 5.670374419e-8 * (300.0**4 - 40.0**4) * 0.5 / 41.0
    assert calc.radiative_load(s) == pytest.approx(expect, rel=1e-9)
    hotter = calc.RadiativeSurface(0.5, 320.0, 40.0, 41.0)
    colder = calc.RadiativeSurface(0.5, 300.0, 20.0, 41.0)
    assert calc.radiative_load(hotter) > calc.radiative_load(s)
    assert calc.radiative_load(colder) > calc.radiative_load(s)
    equal = calc.RadiativeSurface(0.5, 77.0, 77.0, 41.0)
    assert calc.radiative_load(equal) == 0.0
    with pytest.raises(ValueError):
        calc.RadiativeSurface(-1.0, 300.0, 40.0, 1.0)
    with pytest.raises(ValueError):
        calc.RadiativeSurface(1.0, 300.0, 40.0, 0.0)
    with pytest.raises(ValueError):
        calc.RadiativeSurface(1.0, 40.0, 300.0, 1.0)


def test_conductivity_table_validation():
    with pytest.raises(ValueError):
        calc.ConductivityTable(np.array([2.0]), np.array([1.0]), "short")
    with pytest.raises(ValueError):
        calc.ConductivityTable(np.array([2.0, 2.0, 3.0]),
                               np.array([1.0, 1.0, 1.0]), "dup")
    with pytest.raises(ValueError):
        calc.ConductivityTable(np.array([2.0, 3.0]),
                               np.array([1.0, -1.0]), "neg")


def test_constant_conductivity_integrates_exactly():
    table = flat_table(lam=5.0)
    assert table.integrate(10.0, 110.0) == pytest.approx(500.0, rel=1e-12)
    assert table.integrate(110.0, 10.0) == pytest.approx(500.0, rel=1e-12)
    assert table.integrate(77.0, 77.0) == 0.0
    # interior endpoints interpolate, not snap to grid
    assert table.integrate(10.5, 11.5) == pytest.approx(5.0, rel=1e-12)


def test_out_of_range_integration_names_the_gap():
    table = flat_table(lo=2.0, hi=300.0)
    with pytest.raises(ValueError, match="missing"):
        table.integrate(1.0, 50.0)
    with pytest.raises(ValueError, match="flat"):
        table.integrate(100.0, 400.0)


def test_packaged_tables_anchor_points():
    ss = calc.load_conductivity(calc.STAINLESS_304)
    cu = calc.load_conductivity(calc.OFHC_COPPER_RRR50)
    # narrow-window means reproduce standard handbook anchors
    assert ss.integrate(76.9, 77.1) / 0.2 == pytest.approx(7.9, rel=2e-2)
    assert ss.integrate(299.0, 300.0) == pytest.approx(15.3, rel=2e-2)
    assert cu.integrate(4.0, 4.1) / 0.1 == pytest.approx(322.0, rel=2e-2)
    assert cu.integrate(299.0, 300.0) == pytest.approx(392.0, rel=2e-2)
    # the copper fit peaks over a kW/m/K in the 20-30 K window
    peak_at = cu.temperatures[int(np.argmax(cu.conductivities))]
    assert 20.0 < peak_at < 30.0
    assert np.max(cu.conductivities) > 1400.0
    with pytest.raises(FileNotFoundError):
        calc.load_conductivity("unobtainium")


def test_table_resolution_sufficient():
    # halving the sampling moves the wiring integrals by well under 0.1%
    for name in (calc.STAINLESS_304, calc.OFHC_COPPER_RRR50):
        full = calc.load_conductivity(name)
        coarse = calc.ConductivityTable(full.temperatures[::2],
                                        full.conductivities[::2], "coarse")
        lo, hi = coarse.temperatures[0], coarse.temperatures[-1]
        a = full.integrate(lo, hi)
        b = coarse.integrate(lo, hi)
        assert abs(a - b) / a < 1e-3


def test_conductive_load_formula():
    wire = calc.WireRun(cross_section=2e-6, length=0.5,
                        conductivity=flat_table(lam=10.0),
                        t_hot=300.0, t_cold=40.0)
    assert calc.conductive_load(wire) == pytest.approx(
        2e-6 / 0.5 * 10.0 * 260.0, rel=1e-12)


def test_preset_budget_matches_published_rounding():
    # each row agrees with the published table to half its last digit
    rows = {name: (w40, w4) for name, w40, w4 in calc.heat_budget_table()}
    assert set(rows) == set(BUDGET)
    for name, (pub40, pub4) in BUDGET.items():
        got40, got4 = rows[name]
        for pub, got in ((pub40, got40), (pub4, got4)):
            if pub is None:
                assert got is None
            else:
                digit = 10.0 ** np.floor(np.log10(pub) - 1.0)
                assert got == pytest.approx(pub, abs=0.5 * digit)


def test_budget_totals_scale():
    rows = calc.heat_budget_table()
    total40 = sum(w for _, w, _ in rows if w is not None)
    total4 = sum(w for _, _, w in rows if w is not None)
    assert total40 == pytest.approx(8.5, abs=0.1)
    assert total4 == pytest.approx(0.2228, abs=0.002)


def test_unloaded_q_pairs():
    # warm and cold measurements both round-trip to 3 significant figures
    assert calc.unloaded_q(210.0, 0.36) == pytest.approx(1050.0, rel=5e-3)
    assert calc.unloaded_q(900.0, 0.187) == pytest.approx(3170.0, rel=5e-3)
    # better matching (smaller reflection) means less correction
    assert calc.unloaded_q(210.0, 0.01) < calc.unloaded_q(210.0, 0.36)
    with pytest.raises(ValueError):
        calc.unloaded_q(210.0, 1.0)
    with pytest.raises(ValueError):
        calc.unloaded_q(0.0, 0.36)


def test_resonator_frequency():
    bare = calc.ResonatorParams()
    assert calc.resonant_frequency(bare) == pytest.approx(39.789e6, rel=1e-4)
    # loading the tank pulls the resonance down to the 24 MHz drive
    assert calc.resonant_frequency(calc.RESONATOR_COLD) == pytest.approx(
        24.0e6, rel=1e-4)
    total = calc.RESONATOR_COLD.self_capacitance \
        + calc.RESONATOR_COLD.load_capacitance
    assert total == pytest.approx(22.0e-12, rel=1e-3)
    assert calc.RESONATOR_COLD.unloaded_q == pytest.approx(3170.0, rel=5e-3)
    with pytest.raises(ValueError):
        calc.ResonatorParams(self_inductance=0.0)
