"""Trajectory integration with RF drive, Coulomb coupling and laser cooling.

The conservative part is a Forest-Ruth (4th order symplectic) splitting of
the exact time-dependent forces: the oscillating quadrupole drive, the
static curvatures that complete the transverse confinement, the axial well
and pairwise Coulomb repulsion.  Nothing is averaged; micromotion is in
the trajectories.

Cooling follows the quantum-trajectory picture: each ion carries a
two-level amplitude evolved under a non-Hermitian Hamiltonian whose decay
of norm encodes the photon scattering probability.  A jump resets the ion
to the ground state and recoils it by one absorbed photon along the beam
plus one emitted photon in a random direction.  Substeps are sized so the
scattering probability per substep stays small.

Single trajectories are deterministic functions of their seed; the hot
loop lives in _kernels and is strictly sequential.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .axial import AxialPotential
from .constants import HBAR, PI, TWO_PI, VACUUM_PERMITTIVITY
from .species import IonSpecies
from .trap import TrapParameters

FOREST_RUTH_THETA = _kernels.FR_THETA

# non-Hermitian evolution loses at most ~5% of norm per substep at this cap
MAX_PHASE_PER_SUBSTEP = 0.05

# two ions this close are no longer a crystal; treat as corrupted state
MIN_ION_SEPARATION = 1e-9

SNAPSHOT_MAGIC = b"ECRY"
SNAPSHOT_VERSION = 1


@dataclass
class SystemState:
    """Mechanical plus internal state of the ion register."""

    positions: np.ndarray                   # (N, 3) m
    velocities: np.ndarray                  # (N, 3) m/s
    internal_amplitudes: np.ndarray = None  # (N, 2) complex, (ground, excited)
    time: float = 0.0

    def __post_init__(self):
        self.positions = np.atleast_2d(np.asarray(self.positions, dtype=float))
        self.velocities = np.atleast_2d(np.asarray(self.velocities, dtype=float))
        if self.internal_amplitudes is None:
            amp = np.zeros((len(self.positions), 2), dtype=complex)
            amp[:, 0] = 1.0
            self.internal_amplitudes = amp
        self.internal_amplitudes = np.atleast_2d(
            np.asarray(self.internal_amplitudes, dtype=complex))
        n = len(self.positions)
        if self.positions.shape != (n, 3) or self.velocities.shape != (n, 3) \
                or self.internal_amplitudes.shape != (n, 2):
            raise ValueError("inconsistent state array shapes")
        if not (np.all(np.isfinite(self.positions))
                and np.all(np.isfinite(self.velocities))
                and np.all(np.isfinite(self.internal_amplitudes))):
            raise ValueError("state contains non-finite entries")

    @classmethod
    def at_rest(cls, positions: np.ndarray, time: float = 0.0) -> "SystemState":
        positions = np.atleast_2d(np.asarray(positions, dtype=float))
        n = len(positions)
        amp = np.zeros((n, 2), dtype=complex)
        amp[:, 0] = 1.0
        return cls(positions=positions.copy(), velocities=np.zeros((n, 3)),
                   internal_amplitudes=amp, time=time)

    def copy(self) -> "SystemState":
        return SystemState(self.positions.copy(), self.velocities.copy(),
                           self.internal_amplitudes.copy(), self.time)

    @property
    def n_ions(self) -> int:
        return len(self.positions)


@dataclass(frozen=True)
class CoolingParameters:
    """Red-detuned two-level cooling beam."""

    wavelength: float          # m
    linewidth: float           # rad/s
    detuning: float            # rad/s, negative = red
    saturation: float
    beam_direction: tuple[float, float, float]

    def __post_init__(self):
        if self.wavelength <= 0.0 or self.linewidth <= 0.0:
            raise ValueError("wavelength and linewidth must be positive")
        if self.saturation < 0.0:
            raise ValueError(f"saturation must be >= 0, got {self.saturation}")
        b = np.asarray(self.beam_direction, dtype=float)
        norm = np.linalg.norm(b)
        if norm == 0.0:
            raise ValueError("beam direction must be a nonzero vector")
        object.__setattr__(self, "beam_direction", tuple(b / norm))

    @property
    def rabi_frequency(self) -> float:
        """Drive strength from saturation, Omega = Gamma sqrt(s/2)."""
        return self.linewidth * np.sqrt(self.saturation / 2.0)

    @property
    def wavenumber(self) -> float:
        return TWO_PI / self.wavelength

    def recoil_speed(self, ion: IonSpecies) -> float:
        return HBAR * self.wavenumber / ion.mass


def yb171_cooling(detuning_linewidths: float = -0.5, saturation: float = 1.0,
                  beam_direction=(1.0, 1.0, 0.0)) -> CoolingParameters:
    """Standard dipole-transition cooling settings for the 171 isotope."""
    linewidth = TWO_PI * 19.6e6
    return CoolingParameters(wavelength=369.5e-9, linewidth=linewidth,
                             detuning=detuning_linewidths * linewidth,
                             saturation=saturation,
                             beam_direction=tuple(beam_direction))


@dataclass(frozen=True)
class IntegratorConfig:
    steps_per_rf_period: int = 100
    max_phase_per_substep: float = MAX_PHASE_PER_SUBSTEP

    def __post_init__(self):
        if self.steps_per_rf_period < 10:
            raise ValueError(
                f"need >= 10 steps per RF period, got {self.steps_per_rf_period}")
        if self.max_phase_per_substep <= 0.0:
            raise ValueError("substep phase cap must be positive")

    def cooling_substeps(self, dt: float, cooling: CoolingParameters) -> int:
        return max(1, int(np.ceil(cooling.linewidth * dt / self.max_phase_per_substep)))


def coulomb_forces(positions: np.ndarray, charge: float) -> np.ndarray:
    """Pairwise Coulomb forces, exact O(N^2); (N, 3) in, (N, 3) out."""
    dr = positions[:, None, :] - positions[None, :, :]
    d = np.sqrt(np.sum(dr**2, axis=2))
    np.fill_diagonal(d, np.inf)
    if np.any(d < MIN_ION_SEPARATION):
        raise RuntimeError(
            "ions closer than 1 nm; the crystal state is unphysical")
    k = charge**2 / (4.0 * PI * VACUUM_PERMITTIVITY)
    return k * np.sum(dr / d[:, :, None] ** 3, axis=1)


def total_force(positions: np.ndarray, t: float, trap: TrapParameters,
                axial: AxialPotential, ion: IonSpecies) -> np.ndarray:
    """RF drive + static curvature + axial well + Coulomb, (N, 3) in N."""
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    f = coulomb_forces(positions, ion.charge)
    x, y, z = positions[:, 0], positions[:, 1], positions[:, 2]
    f[:, 0] += axial.force(x)
    drive = ion.charge * trap.geometric_efficiency * trap.rf_amplitude \
        * np.cos(trap.rf_frequency * t)
    cy, cz = trap.static_transverse_curvatures(ion)
    f[:, 1] += -(drive + ion.mass * cy) * y
    f[:, 2] += (drive - ion.mass * cz) * z
    if not np.all(np.isfinite(f)):
        raise RuntimeError("non-finite force; integration state is corrupted")
    return f


def forest_ruth_step(positions: np.ndarray, velocities: np.ndarray, t: float,
                     dt: float, acceleration) -> tuple[np.ndarray, np.ndarray, float]:
    """One 4th-order symplectic step of the drift/kick palindrome.

    acceleration(positions, t) -> (N, 3); the three kicks are evaluated at
    the drift-accumulated times, so the sequence is exactly time reversible
    (run with -dt to retrace).  Returns updated copies.
    """
    theta = FOREST_RUTH_THETA
    pos = np.array(positions, dtype=float, copy=True)
    vel = np.array(velocities, dtype=float, copy=True)
    drifts = (0.5 * theta, 0.5 * (1.0 - theta), 0.5 * (1.0 - theta), 0.5 * theta)
    kicks = (theta, 1.0 - 2.0 * theta, theta)
    elapsed = 0.0
    for i, dfrac in enumerate(drifts):
        pos += vel * (dfrac * dt)
        elapsed += dfrac
        if i < 3:
            acc = np.asarray(acceleration(pos, t + elapsed * dt), dtype=float)
            if not np.all(np.isfinite(acc)):
                raise RuntimeError("non-finite force; integration aborted")
            vel += acc * (kicks[i] * dt)
    return pos, vel, t + dt


def cooling_substep(state: SystemState, dt: float, cooling: CoolingParameters,
                    ion: IonSpecies, rng: np.random.Generator) -> int:
    """Evolve every ion's internal amplitude over dt; returns jump count.

    Vectorized counterpart of the compiled substep: exact 2x2 propagator of
    the non-Hermitian Hamiltonian with the Doppler shift frozen over the
    substep, survival decided against the decayed norm, jumps recoil the
    ion and reset it to the ground state.
    """
    if cooling.rabi_frequency == 0.0:
        return 0
    beam = np.asarray(cooling.beam_direction)
    gamma = cooling.linewidth
    half_delta = 0.5 * (cooling.detuning
                        - cooling.wavenumber * state.velocities @ beam)
    b11 = half_delta + 0.25j * gamma
    lam = np.sqrt(b11**2 + 0.25 * cooling.rabi_frequency**2)
    arg = lam * dt
    small = np.abs(arg) < 1e-8
    s_over = np.where(small, dt * (1.0 - arg**2 / 6.0),
                      np.sin(np.where(small, 1.0, arg)) / np.where(small, 1.0, lam))
    decay = np.exp(-0.25 * gamma * dt)
    c = np.cos(arg)
    u11 = decay * (c - 1j * s_over * b11)
    u12 = decay * (-0.5j * s_over * cooling.rabi_frequency)
    u22 = decay * (c + 1j * s_over * b11)
    g = u11 * state.internal_amplitudes[:, 0] + u12 * state.internal_amplitudes[:, 1]
    e = u12 * state.internal_amplitudes[:, 0] + u22 * state.internal_amplitudes[:, 1]
    norm2 = np.abs(g) ** 2 + np.abs(e) ** 2
    survive = rng.uniform(size=len(norm2)) < norm2
    inv = 1.0 / np.sqrt(np.maximum(norm2, 1e-300))
    state.internal_amplitudes[:, 0] = np.where(survive, g * inv, 1.0)
    state.internal_amplitudes[:, 1] = np.where(survive, e * inv, 0.0)
    jumped = ~survive
    n_jumps = int(np.count_nonzero(jumped))
    if n_jumps:
        emit = rng.standard_normal((n_jumps, 3))
        emit /= np.linalg.norm(emit, axis=1, keepdims=True)
        state.velocities[jumped] += cooling.recoil_speed(ion) * (beam + emit)
    return n_jumps


@dataclass
class EvolveResult:
    """Final state plus the per-period trajectory summary."""

    state: SystemState
    energy: np.ndarray         # J at each completed period boundary
    max_displacement: np.ndarray  # m
    periods_completed: int
    ejected: bool
    jump_count: int

    @property
    def periods(self) -> np.ndarray:
        return np.arange(1, self.periods_completed + 1)


def evolve(state: SystemState, n_rf_periods: int, trap: TrapParameters,
           axial: AxialPotential, ion: IonSpecies,
           cooling: CoolingParameters | None = None,
           collisions=None,
           config: IntegratorConfig = IntegratorConfig(),
           seed: int = 0) -> EvolveResult:
    """Drive the register for n_rf_periods; cooling and kicks optional.

    collisions is a sequence of (time, ion_index, dv_vector) velocity kicks
    applied instantaneously at the nearest step boundary.  An ion straying
    beyond ten times the initial chain extent ends the run early with the
    ejected flag set (a melted or broken crystal is not worth integrating).
    The trajectory is reproducible from (state, seed) alone.
    """
    if n_rf_periods < 1:
        raise ValueError(f"need at least one period, got {n_rf_periods}")
    work = state.copy()
    dt = trap.rf_period / config.steps_per_rf_period

    extent = float(np.max(np.linalg.norm(work.positions, axis=1)))
    eject_radius = 10.0 * extent if extent > 0.0 else np.inf

    if collisions:
        events = sorted(collisions, key=lambda ev: ev[0])
        steps = np.array(
            [int(round((ev[0] - work.time) / dt)) for ev in events], dtype=np.int64)
        total = n_rf_periods * config.steps_per_rf_period
        keep = (steps >= 0) & (steps < total)
        kick_step = steps[keep]
        kick_ion = np.array([ev[1] for ev in events], dtype=np.int64)[keep]
        kick_dv = np.array([ev[2] for ev in events], dtype=float)[keep].reshape(-1, 3)
    else:
        kick_step = np.empty(0, dtype=np.int64)
        kick_ion = np.empty(0, dtype=np.int64)
        kick_dv = np.empty((0, 3))

    if cooling is not None:
        n_sub = config.cooling_substeps(dt, cooling)
        cool_args = (True, cooling.linewidth, cooling.detuning,
                     cooling.rabi_frequency, cooling.wavenumber,
                     cooling.recoil_speed(ion),
                     np.asarray(cooling.beam_direction), n_sub)
    else:
        cool_args = (False, 0.0, 0.0, 0.0, 0.0, 0.0, np.zeros(3), 1)

    cy, cz = trap.static_transverse_curvatures(ion)
    rfa = ion.charge * trap.geometric_efficiency * trap.rf_amplitude / ion.mass
    k2m = axial.quadratic / ion.mass
    k4m = axial.quartic / ion.mass
    qqm = ion.charge**2 / (4.0 * PI * VACUUM_PERMITTIVITY * ion.mass)

    energy = np.empty(n_rf_periods)
    maxdisp = np.empty(n_rf_periods)
    status, done, jumps = _kernels.run_trajectory(
        work.positions, work.velocities, work.internal_amplitudes,
        work.time, trap.rf_frequency, rfa, cy, cz, k2m, k4m, qqm,
        config.steps_per_rf_period, n_rf_periods, *cool_args,
        np.uint32(seed & 0xFFFFFFFF),
        kick_step, kick_ion, kick_dv, eject_radius, energy, maxdisp)
    work.time += done * config.steps_per_rf_period * dt
    return EvolveResult(state=work, energy=energy[:done] * ion.mass,
                        max_displacement=maxdisp[:done],
                        periods_completed=int(done), ejected=bool(status == 1),
                        jump_count=int(jumps))


def save_state(state: SystemState, path) -> None:
    """Write a restart snapshot; fixed little-endian layout.

    magic "ECRY" | u32 version | u64 N | f64 time | positions f64 N*3 |
    velocities f64 N*3 | amplitudes c128 N*2, all little-endian, C order.
    """
    n = state.n_ions
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(np.uint32(SNAPSHOT_VERSION).astype("<u4").tobytes())
        fh.write(np.uint64(n).astype("<u8").tobytes())
        fh.write(np.float64(state.time).astype("<f8").tobytes())
        fh.write(np.ascontiguousarray(state.positions, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(state.velocities, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(state.internal_amplitudes,
                                      dtype="<c16").tobytes())


def load_state(path) -> SystemState:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != SNAPSHOT_MAGIC:
        raise ValueError("not a state snapshot")
    version = int(np.frombuffer(raw, "<u4", count=1, offset=4)[0])
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    n = int(np.frombuffer(raw, "<u8", count=1, offset=8)[0])
    time = float(np.frombuffer(raw, "<f8", count=1, offset=16)[0])
    off = 24
    pos = np.frombuffer(raw, "<f8", count=3 * n, offset=off).reshape(n, 3)
    off += 24 * n
    vel = np.frombuffer(raw, "<f8", count=3 * n, offset=off).reshape(n, 3)
    off += 24 * n
    amp = np.frombuffer(raw, "<c16", count=2 * n, offset=off).reshape(n, 2)
    return SystemState(pos.copy(), vel.copy(), amp.copy(), time)
