"""Linear RF trap model.

The drive potential is a pure transverse quadrupole,

    Phi(r, t) = V_rf * g * cos(Omega_rf t) * (y^2 - z^2) / 2,

where g (1/m^2) collapses electrode geometry and voltage efficiency into a
single coefficient.  Lowest-order Mathieu theory (a = 0) then gives a
pseudopotential with secular frequency

    w_p = q Omega_rf / (2 sqrt(2)),   q = 2 Q g V_rf / (m Omega_rf^2).

Static electrodes add a harmonic axial well and a transverse curvature
split; both are expressed directly through the configured secular
frequencies, so the time-averaged motion matches them by construction.
"""

from dataclasses import dataclass

import numpy as np

from .species import IonSpecies, ytterbium_171

# stability guard: drives past q ~ 0.9 are outside the first stability lobe
MATHIEU_Q_LIMIT = 0.9


def mathieu_q(omega_secular: float, rf_frequency: float) -> float:
    """Mathieu q for a pure quadrupole drive (a = 0): q = 2 sqrt(2) w / Omega.

    Valid only below Omega/2; above it the smooth secular picture is gone.
    """
    if rf_frequency <= 0.0:
        raise ValueError(f"rf frequency must be positive, got {rf_frequency}")
    if omega_secular < 0.0:
        raise ValueError(f"secular frequency must be >= 0, got {omega_secular}")
    if omega_secular >= rf_frequency / 2.0:
        raise ValueError(
            "secular frequency %.4g exceeds Omega_rf/2 = %.4g; no stable "
            "secular motion" % (omega_secular, rf_frequency / 2.0)
        )
    return 2.0 * np.sqrt(2.0) * omega_secular / rf_frequency


def power_dissipated(rf_frequency: float, trap_capacitance: float,
                     rf_amplitude: float, series_resistance: float) -> float:
    """Ohmic power burned in the trap electrodes, P = W^2 C^2 V^2 R / 2."""
    for name, val in (("rf_frequency", rf_frequency),
                      ("trap_capacitance", trap_capacitance),
                      ("series_resistance", series_resistance)):
        if val < 0.0:
            raise ValueError(f"{name} must be >= 0, got {val}")
    return 0.5 * (rf_frequency * trap_capacitance * rf_amplitude) ** 2 * series_resistance


def calibrate_geometric_efficiency(ion: IonSpecies, rf_frequency: float,
                                   rf_amplitude: float, omega_transverse: float) -> float:
    """Back out g from one measured operating point, g = sqrt(2) m W w / (Q V)."""
    if rf_amplitude <= 0.0:
        raise ValueError(f"rf amplitude must be positive, got {rf_amplitude}")
    # reuse the domain checks
    mathieu_q(omega_transverse, rf_frequency)
    return np.sqrt(2.0) * ion.mass * rf_frequency * omega_transverse / (
        ion.charge * rf_amplitude)


# reference operating point: 480 V at 2*pi*24 MHz gives a 2*pi*4 MHz
# transverse pseudopotential for 171Yb+
CALIBRATED_GEOMETRIC_EFFICIENCY = calibrate_geometric_efficiency(
    ytterbium_171(), 2.0 * np.pi * 24e6, 480.0, 2.0 * np.pi * 4e6)


@dataclass(frozen=True)
class TrapParameters:
    """Operating point of the trap.

    rf_frequency      Omega_rf, rad/s
    rf_amplitude      V_rf, volts (zero-to-peak)
    geometric_efficiency  g, 1/m^2
    axial_frequency   w_x, rad/s (secular)
    transverse_frequencies  (w_y, w_z), rad/s (secular, including statics)
    """

    rf_frequency: float
    rf_amplitude: float
    geometric_efficiency: float
    axial_frequency: float
    transverse_frequencies: tuple[float, float]

    def __post_init__(self):
        wy, wz = self.transverse_frequencies
        if not (self.axial_frequency > 0.0):
            raise ValueError(f"axial frequency must be positive, got {self.axial_frequency}")
        if not (wy > self.axial_frequency and wz > self.axial_frequency):
            raise ValueError(
                "transverse frequencies (%.4g, %.4g) must exceed the axial "
                "frequency %.4g" % (wy, wz, self.axial_frequency))
        if self.rf_frequency <= 2.0 * max(wy, wz):
            raise ValueError(
                "rf frequency %.4g too low for transverse frequencies "
                "(%.4g, %.4g); need Omega_rf > 2 max(w_y, w_z)"
                % (self.rf_frequency, wy, wz))
        if self.rf_amplitude <= 0.0:
            raise ValueError(f"rf amplitude must be positive, got {self.rf_amplitude}")
        if self.geometric_efficiency <= 0.0:
            raise ValueError(
                f"geometric efficiency must be positive, got {self.geometric_efficiency}")
        q = mathieu_q(max(wy, wz), self.rf_frequency)
        if q >= MATHIEU_Q_LIMIT:
            raise ValueError(f"Mathieu q = {q:.3f} is outside the stable range (< 0.9)")

    @property
    def rf_period(self) -> float:
        return 2.0 * np.pi / self.rf_frequency

    def pseudopotential_frequency(self, ion: IonSpecies) -> float:
        """Transverse secular frequency from the RF drive alone."""
        return ion.charge * self.geometric_efficiency * self.rf_amplitude / (
            np.sqrt(2.0) * ion.mass * self.rf_frequency)

    def drive_mathieu_q(self, ion: IonSpecies) -> float:
        return 2.0 * ion.charge * self.geometric_efficiency * self.rf_amplitude / (
            ion.mass * self.rf_frequency**2)

    def static_transverse_curvatures(self, ion: IonSpecies) -> tuple[float, float]:
        """(c_y, c_z) in (rad/s)^2: static potential U = m (c_y y^2 + c_z z^2) / 2.

        Chosen so pseudopotential + statics reproduce the configured secular
        frequencies: c_i = w_i^2 - w_p^2.  Negative values mean the statics
        de-focus that direction (the usual situation for a weak transverse
        operating point under a stiff drive).
        """
        wp2 = self.pseudopotential_frequency(ion) ** 2
        wy, wz = self.transverse_frequencies
        return wy**2 - wp2, wz**2 - wp2


def trap_from_secular_frequencies(ion: IonSpecies, rf_frequency: float,
                                  axial_frequency: float,
                                  transverse_frequencies: tuple[float, float],
                                  geometric_efficiency: float = CALIBRATED_GEOMETRIC_EFFICIENCY,
                                  ) -> TrapParameters:
    """Build an operating point from target secular frequencies.

    The RF amplitude is chosen so the static part can satisfy Laplace's
    equation: a real dc field with axial curvature +w_x^2 defocuses the
    transverse plane by the same total amount, which pins

        w_p^2 = (w_x^2 + w_y^2 + w_z^2) / 2.
    """
    wy, wz = transverse_frequencies
    wp = np.sqrt((axial_frequency**2 + wy**2 + wz**2) / 2.0)
    amplitude = np.sqrt(2.0) * ion.mass * rf_frequency * wp / (
        ion.charge * geometric_efficiency)
    return TrapParameters(
        rf_frequency=rf_frequency,
        rf_amplitude=amplitude,
        geometric_efficiency=geometric_efficiency,
        axial_frequency=axial_frequency,
        transverse_frequencies=(wy, wz),
    )


def rf_force(positions: np.ndarray, t: float, trap: TrapParameters,
             ion: IonSpecies) -> np.ndarray:
    """Instantaneous drive force on each ion, shape (N, 3).

    F_y = -Q g V cos(Wt) y,  F_z = +Q g V cos(Wt) z,  F_x = 0.
    """
    positions = np.asarray(positions, dtype=float)
    if positions.ndim != 2 or positions.shape[1] != 3:
        raise ValueError(f"positions must have shape (N, 3), got {positions.shape}")
    coeff = ion.charge * trap.geometric_efficiency * trap.rf_amplitude * np.cos(
        trap.rf_frequency * t)
    out = np.zeros_like(positions)
    out[:, 1] = -coeff * positions[:, 1]
    out[:, 2] = coeff * positions[:, 2]
    return out


def micromotion_dressed_state(positions: np.ndarray, trap: TrapParameters,
                              ion: IonSpecies, rf_phase: float
                              ) -> tuple[np.ndarray, np.ndarray]:
    """Lowest-order driven solution through secular positions at a given phase.

    y(t) = y0 (1 + (q/2) cos phi), z(t) = z0 (1 - (q/2) cos phi), with the
    matching velocities.  Starting a trajectory from the dressed state instead
    of the bare secular one avoids injecting a spurious micromotion transient.
    """
    positions = np.asarray(positions, dtype=float)
    q = trap.drive_mathieu_q(ion)
    c, s = np.cos(rf_phase), np.sin(rf_phase)
    dressed = positions.copy()
    dressed[:, 1] *= 1.0 + 0.5 * q * c
    dressed[:, 2] *= 1.0 - 0.5 * q * c
    vel = np.zeros_like(positions)
    vel[:, 1] = -positions[:, 1] * 0.5 * q * trap.rf_frequency * s
    vel[:, 2] = positions[:, 2] * 0.5 * q * trap.rf_frequency * s
    return dressed, vel
