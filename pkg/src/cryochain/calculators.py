"""Cryostat heat-load and rf-resonator design calculators.

Sizing helpers for a two-stage (40 K / 4 K) cryostat and the helical
step-up resonator that drives the trap.  Radiative loads follow the
Stefan-Boltzmann law with an effective view factor that folds geometry
and emissivities into one number; conductive loads integrate a tabulated
thermal conductivity over the temperature drop of a wire run.  The
shipped presets describe the reference build: measured areas and cable
lengths with the view factors (and the effective wiring cross-section)
fitted so the presets reproduce its measured stage-by-stage budget.

Everything here is a pure function of its inputs; tables are plain
arrays loaded from the packaged CSV files or from a user path.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .constants import PI, STEFAN_BOLTZMANN, TWO_PI

# packaged conductivity tables, by short name
STAINLESS_304 = "stainless_304"
OFHC_COPPER_RRR50 = "ofhc_copper_rrr50"


@dataclass(frozen=True)
class ConductivityTable:
    """Thermal conductivity samples lambda(T), strictly positive, T ascending."""

    temperatures: np.ndarray   # K
    conductivities: np.ndarray  # W / (m K)
    label: str = ""

    def __post_init__(self):
        t = np.asarray(self.temperatures, dtype=float)
        lam = np.asarray(self.conductivities, dtype=float)
        if t.ndim != 1 or t.shape != lam.shape or len(t) < 2:
            raise ValueError("conductivity table needs two equal-length 1d "
                             f"columns with at least 2 rows, got {t.shape} "
                             f"and {lam.shape}")
        if np.any(np.diff(t) <= 0.0):
            raise ValueError("table temperatures must increase strictly")
        if np.any(lam <= 0.0) or not np.all(np.isfinite(lam)):
            raise ValueError("table conductivities must be positive and finite")
        object.__setattr__(self, "temperatures", t)
        object.__setattr__(self, "conductivities", lam)

    def integrate(self, t_low: float, t_high: float) -> float:
        """Trapezoid integral of lambda(T) dT over [t_low, t_high] in W/m."""
        if t_high < t_low:
            t_low, t_high = t_high, t_low
        lo, hi = self.temperatures[0], self.temperatures[-1]
        if t_low < lo or t_high > hi:
            missing = []
            if t_low < lo:
                missing.append(f"{t_low:g}-{lo:g} K")
            if t_high > hi:
                missing.append(f"{hi:g}-{t_high:g} K")
            raise ValueError(
                f"conductivity table '{self.label}' covers {lo:g}-{hi:g} K; "
                f"missing {' and '.join(missing)}")
        if t_high == t_low:
            return 0.0
        inside = self.temperatures[(self.temperatures > t_low)
                                   & (self.temperatures < t_high)]
        grid = np.concatenate([[t_low], inside, [t_high]])
        vals = np.interp(grid, self.temperatures, self.conductivities)
        return float(np.trapezoid(vals, grid))


def load_conductivity(name: str) -> ConductivityTable:
    """Load a packaged table by short name, or any CSV by path.

    Rows are temperature_K,conductivity_W_per_m_K; '#' comments and the
    header line are skipped.
    """
    path = Path(name)
    if not path.suffix and not path.exists():
        res = resources.files("cryochain") / "data" / f"{name}.csv"
        if not res.is_file():
            raise FileNotFoundError(f"no packaged conductivity table '{name}'")
        text = res.read_text(encoding="utf-8")
        label = name
    else:
        text = path.read_text(encoding="utf-8")
        label = path.stem
    temps, lams = [], []
    for row in csv.reader(text.splitlines()):
        if not row or row[0].lstrip().startswith("#"):
            continue
        try:
            t, lam = float(row[0]), float(row[1])
        except ValueError:
            continue  # header line
        temps.append(t)
        lams.append(lam)
    return ConductivityTable(np.array(temps), np.array(lams), label=label)


@dataclass(frozen=True)
class RadiativeSurface:
    """One surface exchanging blackbody radiation with its surroundings.

    view_factor is the single effective number dividing the ideal
    blackbody exchange: geometry, both emissivities and any baffling fold
    into it.  Facing polished metal it lands well above 1; a bare window
    with direct line of sight sits near 1, and below 1 once the window
    also passes radiation from a hotter stage behind it.
    """

    area: float         # m^2
    t_hot: float        # K
    t_cold: float       # K
    view_factor: float

    def __post_init__(self):
        if self.area <= 0.0:
            raise ValueError(f"area must be positive, got {self.area}")
        if self.view_factor <= 0.0:
            raise ValueError(f"view factor must be positive, got {self.view_factor}")
        if self.t_cold < 0.0 or self.t_hot < self.t_cold:
            raise ValueError(f"need t_hot >= t_cold >= 0, got "
                             f"{self.t_hot} and {self.t_cold}")


def radiative_load(surface: RadiativeSurface) -> float:
    """Blackbody heat flow onto the cold side in W."""
    dt4 = surface.t_hot**4 - surface.t_cold**4
    return STEFAN_BOLTZMANN * dt4 * surface.area / surface.view_factor


@dataclass(frozen=True)
class WireRun:
    """A conduction path between two temperature anchors."""

    cross_section: float  # m^2
    length: float         # m
    conductivity: ConductivityTable
    t_hot: float          # K
    t_cold: float         # K

    def __post_init__(self):
        if self.cross_section <= 0.0 or self.length <= 0.0:
            raise ValueError(f"cross_section and length must be positive, got "
                             f"{self.cross_section} and {self.length}")
        if self.t_cold < 0.0 or self.t_hot < self.t_cold:
            raise ValueError(f"need t_hot >= t_cold >= 0, got "
                             f"{self.t_hot} and {self.t_cold}")


def conductive_load(wire: WireRun) -> float:
    """Heat conducted to the cold end, A/L * integral of lambda dT, in W."""
    return (wire.cross_section / wire.length
            * wire.conductivity.integrate(wire.t_cold, wire.t_hot))


# --------------------------------------------------------------------------
# helical resonator

@dataclass(frozen=True)
class ResonatorParams:
    """Lumped model of the helical step-up resonator.

    Defaults are the reference build: 2 uH / 8 pF coil, loaded Q and
    reflected-power fraction at room temperature before cool-down.
    """

    self_inductance: float = 2e-6     # H
    self_capacitance: float = 8e-12   # F
    load_capacitance: float = 0.0     # F, trap + wiring hanging off the coil
    q_load: float = 210.0
    reflected_power: float = 0.36     # fraction of forward power

    def __post_init__(self):
        if self.self_inductance <= 0.0 or self.self_capacitance <= 0.0:
            raise ValueError("inductance and capacitance must be positive")
        if self.load_capacitance < 0.0:
            raise ValueError(f"load capacitance must be >= 0, "
                             f"got {self.load_capacitance}")
        if self.q_load <= 0.0:
            raise ValueError(f"loaded Q must be positive, got {self.q_load}")
        if not 0.0 <= self.reflected_power < 1.0:
            raise ValueError(f"reflected power fraction must sit in [0, 1), "
                             f"got {self.reflected_power}")

    @property
    def unloaded_q(self) -> float:
        return unloaded_q(self.q_load, self.reflected_power)


def unloaded_q(q_load: float, reflected_power: float) -> float:
    """Unloaded quality factor from the loaded Q and the reflected fraction.

    Q = 2 Q_load / (1 - sqrt(R)); R = 0 is critical coupling and doubles
    the loaded value, R -> 1 means no power enters the resonator at all.
    """
    if q_load <= 0.0:
        raise ValueError(f"loaded Q must be positive, got {q_load}")
    if not 0.0 <= reflected_power < 1.0:
        raise ValueError(f"reflected power fraction must sit in [0, 1), "
                         f"got {reflected_power}")
    return 2.0 * q_load / (1.0 - np.sqrt(reflected_power))


def resonant_frequency(params: ResonatorParams) -> float:
    """LC resonance in Hz with the load capacitance across the coil."""
    c_total = params.self_capacitance + params.load_capacitance
    return 1.0 / (TWO_PI * np.sqrt(params.self_inductance * c_total))


# --------------------------------------------------------------------------
# reference build presets
#
# Areas and lengths are as measured on the apparatus; the view factors and
# the effective wiring cross-section are fitted so that the presets
# reproduce the measured budget (shield rows are radiative only, the
# wiring rows conduction through four coaxial feed lines whose copper
# center conductors dominate, the stainless jackets folded into the
# effective cross-section).

SHIELD_40K = RadiativeSurface(area=0.50, t_hot=300.0, t_cold=40.0,
                              view_factor=41.0)
SHIELD_4K = RadiativeSurface(area=0.25, t_hot=40.0, t_cold=4.0,
                             view_factor=36.3)
# single 2" reentrant imaging window, direct line of sight
VIEWPORT_2IN_40K = RadiativeSurface(area=PI * 0.0286**2, t_hot=300.0,
                                    t_cold=40.0, view_factor=1.475)
VIEWPORT_2IN_4K = RadiativeSurface(area=PI * 0.0286**2, t_hot=40.0,
                                   t_cold=4.0, view_factor=0.622)
# eight 1" beam windows taken together
VIEWPORTS_1IN_40K = RadiativeSurface(area=8.0 * PI * 0.0127**2, t_hot=300.0,
                                     t_cold=40.0, view_factor=1.163)
VIEWPORTS_1IN_4K = RadiativeSurface(area=8.0 * PI * 0.0127**2, t_hot=40.0,
                                    t_cold=4.0, view_factor=0.490)

_WIRING_SECTION = 1.678e-6  # m^2, four cables, effective copper section

def _wiring(t_hot: float, t_cold: float, length: float) -> WireRun:
    return WireRun(cross_section=_WIRING_SECTION, length=length,
                   conductivity=load_conductivity(OFHC_COPPER_RRR50),
                   t_hot=t_hot, t_cold=t_cold)

WIRING_40K = _wiring(300.0, 40.0, length=0.40)
WIRING_4K = _wiring(40.0, 4.0, length=0.3206)

# resonator tuned onto the drive: load capacitance pulling 2 uH / 8 pF
# down to the operating frequency, cold Q numbers after cool-down
RESONATOR_COLD = ResonatorParams(load_capacitance=13.99e-12,
                                 q_load=900.0, reflected_power=0.187)


def heat_budget_table() -> list[tuple[str, float | None, float | None]]:
    """Stage-by-stage preset loads in W: (component, 40 K row, 4 K row)."""
    return [
        ('40 K shield', radiative_load(SHIELD_40K), None),
        ('4 K shield', None, radiative_load(SHIELD_4K)),
        ('2" viewport', radiative_load(VIEWPORT_2IN_40K),
         radiative_load(VIEWPORT_2IN_4K)),
        ('1" viewports', radiative_load(VIEWPORTS_1IN_40K),
         radiative_load(VIEWPORTS_1IN_4K)),
        ('wiring', conductive_load(WIRING_40K), conductive_load(WIRING_4K)),
    ]
