"""Compiled inner loops for the trajectory integrator.

Everything here works in SI units on plain float64 arrays so the hot loop
carries no Python objects.  The RF drive, static curvatures and axial well
enter as precomputed acceleration coefficients:

    ax = -k2m x - k4m x^3
    ay = -(rfa cos(Wt) + cy) y
    az = +(rfa cos(Wt) - cz) z ... sign folded below
    Coulomb: qqm * (ri - rj) / |ri - rj|^3 pairwise

with rfa = Q g V / m, cy = wy^2 - wp^2, cz = wz^2 - wp^2, k2m = k2/m,
k4m = k4/m, qqm = Q^2 / (4 pi eps0 m).

The cooling substep evolves each ion's two-level amplitude under the
non-Hermitian 2x2 Hamiltonian with the exact matrix exponential (stable at
dt Gamma ~ 0.05), then draws the quantum jump; a jump resets the amplitude
to the ground state and applies one absorption recoil along the beam plus
one emission recoil in an isotropic random direction.

Randomness comes from numba's thread-local legacy np.random state, seeded
once per trajectory, so a trajectory is a pure function of its seed no
matter which process runs it.
"""

import cmath

import numpy as np
from numba import njit

FR_THETA = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))


@njit(cache=True)
def _accel(pos, t, omega_rf, rfa, cy, cz, k2m, k4m, qqm, acc):
    n = pos.shape[0]
    drive = rfa * np.cos(omega_rf * t)
    for i in range(n):
        x = pos[i, 0]
        acc[i, 0] = -k2m * x - k4m * x * x * x
        acc[i, 1] = -(drive + cy) * pos[i, 1]
        acc[i, 2] = (drive - cz) * pos[i, 2]
    for i in range(n):
        for j in range(i + 1, n):
            dx = pos[i, 0] - pos[j, 0]
            dy = pos[i, 1] - pos[j, 1]
            dz = pos[i, 2] - pos[j, 2]
            r2 = dx * dx + dy * dy + dz * dz
            inv_r3 = qqm / (r2 * np.sqrt(r2))
            acc[i, 0] += dx * inv_r3
            acc[i, 1] += dy * inv_r3
            acc[i, 2] += dz * inv_r3
            acc[j, 0] -= dx * inv_r3
            acc[j, 1] -= dy * inv_r3
            acc[j, 2] -= dz * inv_r3


@njit(cache=True)
def _potential(pos, t, omega_rf, rfa, cy, cz, k2m, k4m, qqm):
    # potential energy per unit mass, same coefficient convention as _accel
    n = pos.shape[0]
    drive = rfa * np.cos(omega_rf * t)
    e = 0.0
    for i in range(n):
        x, y, z = pos[i, 0], pos[i, 1], pos[i, 2]
        e += 0.5 * k2m * x * x + 0.25 * k4m * x * x * x * x
        e += 0.5 * (drive + cy) * y * y
        e += 0.5 * (cz - drive) * z * z
    for i in range(n):
        for j in range(i + 1, n):
            dx = pos[i, 0] - pos[j, 0]
            dy = pos[i, 1] - pos[j, 1]
            dz = pos[i, 2] - pos[j, 2]
            e += qqm / np.sqrt(dx * dx + dy * dy + dz * dz)
    return e


@njit(cache=True)
def _cooling_block(vel, amp, dt_sub, n_sub, gamma, detuning, rabi,
                   wavenumber, recoil, beam):
    """Advance all internal states over n_sub substeps; kicks on jumps.

    Returns the number of jumps (photon scatters) in the block.
    """
    n = vel.shape[0]
    jumps = 0
    quarter = 0.25 * gamma
    decay = np.exp(-0.25 * gamma * dt_sub)
    for i in range(n):
        # velocity is frozen between jumps, so the propagator is reused
        # across substeps and only rebuilt after a recoil
        stale = True
        u11 = 0.0 + 0.0j
        u12 = 0.0 + 0.0j
        u22 = 0.0 + 0.0j
        for _s in range(n_sub):
            if stale:
                kv = wavenumber * (beam[0] * vel[i, 0] + beam[1] * vel[i, 1]
                                   + beam[2] * vel[i, 2])
                half_delta = 0.5 * (detuning - kv)
                # H = -i gamma/4 I + B, B traceless with eigenvalue lam
                b11 = half_delta + 1j * quarter
                lam = cmath.sqrt(b11 * b11 + 0.25 * rabi * rabi)
                arg = lam * dt_sub
                c = cmath.cos(arg)
                if abs(arg) > 1e-8:
                    s_over = cmath.sin(arg) / lam
                else:
                    s_over = dt_sub * (1.0 - arg * arg / 6.0)
                u11 = decay * (c - 1j * s_over * b11)
                u12 = decay * (-1j * s_over * 0.5 * rabi)
                u22 = decay * (c + 1j * s_over * b11)
                stale = False
            g = u11 * amp[i, 0] + u12 * amp[i, 1]
            e = u12 * amp[i, 0] + u22 * amp[i, 1]
            norm2 = (g.real * g.real + g.imag * g.imag
                     + e.real * e.real + e.imag * e.imag)
            if np.random.random() < norm2:
                inv = 1.0 / np.sqrt(norm2)
                amp[i, 0] = g * inv
                amp[i, 1] = e * inv
            else:
                amp[i, 0] = 1.0 + 0.0j
                amp[i, 1] = 0.0 + 0.0j
                ex = np.random.standard_normal()
                ey = np.random.standard_normal()
                ez = np.random.standard_normal()
                inv_e = 1.0 / np.sqrt(ex * ex + ey * ey + ez * ez)
                vel[i, 0] += recoil * (beam[0] + ex * inv_e)
                vel[i, 1] += recoil * (beam[1] + ey * inv_e)
                vel[i, 2] += recoil * (beam[2] + ez * inv_e)
                jumps += 1
                stale = True
    return jumps


@njit(cache=True)
def run_trajectory(pos, vel, amp, t_start, omega_rf, rfa, cy, cz,
                   k2m, k4m, qqm, steps_per_period, n_periods,
                   cooling_on, gamma, detuning, rabi, wavenumber, recoil,
                   beam, n_sub, seed,
                   kick_step, kick_ion, kick_dv,
                   eject_radius,
                   energy_out, maxdisp_out):
    """Integrate n_periods of RF drive in place; returns (status, periods, jumps).

    status 0: completed; 1: an ion left the eject_radius sphere (recorded
    arrays are valid up to the returned period count).  Scheduled velocity
    kicks fire at the start of their global step index.  energy_out and
    maxdisp_out must hold n_periods entries; energies are per unit mass,
    sampled at period boundaries where the drive phase returns to cos = 1.
    """
    np.random.seed(seed)
    n = pos.shape[0]
    dt = (2.0 * np.pi / omega_rf) / steps_per_period
    acc = np.empty((n, 3))
    theta = FR_THETA
    d1 = 0.5 * theta * dt
    d2 = 0.5 * (1.0 - theta) * dt
    k1 = theta * dt
    k2 = (1.0 - 2.0 * theta) * dt
    dt_sub = dt / n_sub if n_sub > 0 else 0.0
    jumps = 0
    kick_idx = 0
    n_kicks = kick_step.shape[0]
    t = t_start
    step_global = 0
    for period in range(n_periods):
        for _s in range(steps_per_period):
            while kick_idx < n_kicks and kick_step[kick_idx] == step_global:
                ki = kick_ion[kick_idx]
                vel[ki, 0] += kick_dv[kick_idx, 0]
                vel[ki, 1] += kick_dv[kick_idx, 1]
                vel[ki, 2] += kick_dv[kick_idx, 2]
                kick_idx += 1
            # Forest-Ruth: drift d1, kick k1, drift d2, kick k2, drift d2,
            # kick k1, drift d1; kick times follow the accumulated drifts
            for i in range(n):
                pos[i, 0] += vel[i, 0] * d1
                pos[i, 1] += vel[i, 1] * d1
                pos[i, 2] += vel[i, 2] * d1
            _accel(pos, t + d1, omega_rf, rfa, cy, cz, k2m, k4m, qqm, acc)
            for i in range(n):
                vel[i, 0] += acc[i, 0] * k1
                vel[i, 1] += acc[i, 1] * k1
                vel[i, 2] += acc[i, 2] * k1
            for i in range(n):
                pos[i, 0] += vel[i, 0] * d2
                pos[i, 1] += vel[i, 1] * d2
                pos[i, 2] += vel[i, 2] * d2
            _accel(pos, t + 0.5 * dt, omega_rf, rfa, cy, cz, k2m, k4m, qqm, acc)
            for i in range(n):
                vel[i, 0] += acc[i, 0] * k2
                vel[i, 1] += acc[i, 1] * k2
                vel[i, 2] += acc[i, 2] * k2
            for i in range(n):
                pos[i, 0] += vel[i, 0] * d2
                pos[i, 1] += vel[i, 1] * d2
                pos[i, 2] += vel[i, 2] * d2
            _accel(pos, t + dt - d1, omega_rf, rfa, cy, cz, k2m, k4m, qqm, acc)
            for i in range(n):
                vel[i, 0] += acc[i, 0] * k1
                vel[i, 1] += acc[i, 1] * k1
                vel[i, 2] += acc[i, 2] * k1
            for i in range(n):
                pos[i, 0] += vel[i, 0] * d1
                pos[i, 1] += vel[i, 1] * d1
                pos[i, 2] += vel[i, 2] * d1
            t += dt
            step_global += 1
            if cooling_on:
                jumps += _cooling_block(vel, amp, dt_sub, n_sub, gamma,
                                        detuning, rabi, wavenumber, recoil,
                                        beam)
        kin = 0.0
        rmax2 = 0.0
        for i in range(n):
            kin += 0.5 * (vel[i, 0] ** 2 + vel[i, 1] ** 2 + vel[i, 2] ** 2)
            r2 = pos[i, 0] ** 2 + pos[i, 1] ** 2 + pos[i, 2] ** 2
            if r2 > rmax2:
                rmax2 = r2
        energy_out[period] = kin + _potential(pos, t, omega_rf, rfa, cy, cz,
                                              k2m, k4m, qqm)
        maxdisp_out[period] = np.sqrt(rmax2)
        if rmax2 > eject_radius * eject_radius:
            return 1, period + 1, jumps
    return 0, n_periods, jumps
