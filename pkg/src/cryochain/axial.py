"""Axial confinement and ion-chain equilibria.

Lengths along the chain are measured in units of

    l = (Q^2 / (4 pi eps0 m w_x^2))^(1/3),

the distance at which Coulomb repulsion balances the harmonic restoring
force.  In these units a chain in a quadratic + quartic well satisfies,
for each ion i (positions sorted ascending),

    0 = u_i + beta u_i^3 - sum_{j<i} (u_i-u_j)^-2 + sum_{j>i} (u_i-u_j)^-2,

with beta the single dimensionless knob comparing quartic to quadratic
stiffness at distance l.  A well-chosen beta flattens the center of the
chain and pulls the spacing spread far below the purely harmonic value,
which is what makes long uniform chains practical.
"""

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .constants import VACUUM_PERMITTIVITY
from .species import IonSpecies

# default residual tolerance: max |force| per ion, dimensionless units
EQUILIBRIUM_TOL = 1e-10


def characteristic_length(ion: IonSpecies, omega_axial: float) -> float:
    """Coulomb/harmonic balance length l = (Q^2/(4 pi eps0 m w^2))^(1/3)."""
    if omega_axial <= 0.0:
        raise ValueError(f"axial frequency must be positive, got {omega_axial}")
    k = ion.charge**2 / (4.0 * np.pi * VACUUM_PERMITTIVITY)
    return (k / (ion.mass * omega_axial**2)) ** (1.0 / 3.0)


@dataclass(frozen=True)
class AxialPotential:
    """On-axis well U(x) = (k2/2) x^2 + (k4/4) x^4 per ion (SI: N/m, N/m^3)."""

    quadratic: float
    quartic: float = 0.0

    def __post_init__(self):
        if self.quadratic <= 0.0:
            raise ValueError(f"quadratic coefficient must be positive, got {self.quadratic}")
        if self.quartic < 0.0:
            raise ValueError(f"quartic coefficient must be >= 0, got {self.quartic}")

    def energy(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * self.quadratic * x**2 + 0.25 * self.quartic * x**4

    def force(self, x):
        x = np.asarray(x, dtype=float)
        return -(self.quadratic * x + self.quartic * x**3)

    def frequency(self, ion: IonSpecies) -> float:
        """Small-oscillation frequency of one ion at the well center."""
        return np.sqrt(self.quadratic / ion.mass)

    def stiffness_ratio(self, ion: IonSpecies) -> float:
        """beta = k4 l^2 / k2 with l evaluated from the quadratic part."""
        ell = characteristic_length(ion, self.frequency(ion))
        return self.quartic * ell**2 / self.quadratic


def harmonic_axial_potential(ion: IonSpecies, omega_axial: float) -> AxialPotential:
    if omega_axial <= 0.0:
        raise ValueError(f"axial frequency must be positive, got {omega_axial}")
    return AxialPotential(quadratic=ion.mass * omega_axial**2)


def _force_residual(u: np.ndarray, lin: float, cub: float) -> np.ndarray:
    d = u[:, None] - u[None, :]
    np.fill_diagonal(d, np.inf)
    coul = np.sign(d) / d**2
    return lin * u + cub * u**3 - coul.sum(axis=1)


def _jacobian(u: np.ndarray, lin: float, cub: float) -> np.ndarray:
    d = u[:, None] - u[None, :]
    np.fill_diagonal(d, np.inf)
    off = -2.0 / np.abs(d) ** 3
    jac = off.copy()
    np.fill_diagonal(jac, lin + 3.0 * cub * u**2 - off.sum(axis=1))
    return jac


def _energy(u: np.ndarray, lin: float, cub: float) -> float:
    trap = np.sum(0.5 * lin * u**2 + 0.25 * cub * u**4)
    d = np.abs(u[:, None] - u[None, :])
    iu = np.triu_indices(len(u), k=1)
    return trap + np.sum(1.0 / d[iu])


def chain_energy(u: np.ndarray, beta: float) -> float:
    """Dimensionless potential energy of a chain configuration."""
    return _energy(np.asarray(u, dtype=float), 1.0, beta)


def _newton(u: np.ndarray, lin: float, cub: float, tol: float,
            max_iter: int = 100) -> tuple[np.ndarray, float]:
    # damped Newton on the force residual; steps keep the ordering intact
    f = _force_residual(u, lin, cub)
    norm = np.max(np.abs(f))
    for _ in range(max_iter):
        if norm <= tol:
            return u, norm
        try:
            step = np.linalg.solve(_jacobian(u, lin, cub), f)
        except np.linalg.LinAlgError:
            return u, norm
        lam = 1.0
        while lam > 1e-12:
            trial = u - lam * step
            if np.all(np.diff(trial) > 0.0):
                ft = _force_residual(trial, lin, cub)
                nt = np.max(np.abs(ft))
                if nt < norm:
                    u, f, norm = trial, ft, nt
                    break
            lam *= 0.5
        else:
            return u, norm  # stalled
    return u, norm


def _initial_guess(n_ions: int, beta: float) -> np.ndarray:
    # equally spaced sites, overall scale s from minimizing E along that ray:
    # dE/ds = A s + beta B s^3 - C / s^2 = 0
    c = np.arange(n_ions, dtype=float) - 0.5 * (n_ions - 1)
    a = np.sum(c**2)
    b = np.sum(c**4)
    iu = np.triu_indices(n_ions, k=1)
    cc = np.sum(1.0 / np.abs(c[:, None] - c[None, :])[iu]) if n_ions > 1 else 0.0

    def dE(s):
        return a * s + beta * b * s**3 - cc / s**2

    s = optimize.brentq(dE, 1e-6, 1e6)
    return c * s


def solve_equilibrium(n_ions: int, beta: float, tol: float = EQUILIBRIUM_TOL,
                      initial: np.ndarray | None = None) -> np.ndarray:
    """Equilibrium positions (dimensionless, sorted ascending) for n_ions.

    Damped Newton on the force residual with the analytic Jacobian; falls
    back to quasi-Newton energy minimization if the iteration stalls on a
    bad start.  The returned configuration satisfies
    max |residual| <= tol and is reflection-symmetric for every n.
    """
    if n_ions < 1:
        raise ValueError(f"need at least one ion, got {n_ions}")
    if beta < 0.0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    if n_ions == 1:
        return np.zeros(1)

    u = np.sort(np.asarray(initial, dtype=float)) if initial is not None \
        else _initial_guess(n_ions, beta)

    u, norm = _newton(u, 1.0, beta, tol)
    if norm > tol:
        # energy minimization recovers from poor ordering/scaling, then polish
        res = optimize.minimize(
            _energy, u, args=(1.0, beta),
            jac=lambda v, a, b: _force_residual(v, a, b),
            method="L-BFGS-B", options={"maxiter": 2000, "ftol": 1e-15, "gtol": 1e-12})
        u, norm = _newton(np.sort(res.x), 1.0, beta, tol)
    if norm > tol:
        raise RuntimeError(
            f"equilibrium solve failed for n={n_ions}, beta={beta:.4g}: "
            f"residual {norm:.3e} > {tol:.1e}")
    # symmetrize: the physical solution is odd under reflection
    u = 0.5 * (u - u[::-1])
    return u


@dataclass(frozen=True)
class SpacingStats:
    mean: float
    std: float

    @property
    def ratio(self) -> float:
        return self.std / self.mean


def spacing_stats(positions: np.ndarray) -> SpacingStats:
    """Mean and population spread of nearest-neighbor spacings."""
    positions = np.sort(np.asarray(positions, dtype=float))
    if len(positions) < 2:
        raise ValueError("spacing statistics need at least two ions")
    gaps = np.diff(positions)
    return SpacingStats(mean=float(np.mean(gaps)), std=float(np.std(gaps)))


def spacing_ratio(n_ions: int, beta: float) -> float:
    """std/mean of the spacings at equilibrium; the uniformity figure of merit."""
    return spacing_stats(solve_equilibrium(n_ions, beta)).ratio


# --- signed quadratic branch -------------------------------------------------
#
# With the quartic term fixed the natural length is l4 = (k_coul/k4)^(1/5).
# Measuring positions w in l4 the equilibrium condition reads
#
#     0 = kappa w_i + w_i^3 - sum_j sgn(w_i - w_j) / (w_i - w_j)^2,
#
# kappa = k2 l4^2 / k4 the signed quadratic-to-quartic stiffness.  For the
# inverse ratio s = 1/beta (signed, s < 0 meaning the quadratic part pushes
# outward) one has kappa = sign(s)|s|^(3/5).  Long chains reach their best
# spacing uniformity at s < 0: the outward push empties the crowded center
# while the quartic wall holds the ends, and only far past that optimum does
# the chain start to break into two clumps.  On s >= 0 alone the ratio just
# falls monotonically toward the pure-quartic value, so the minimum of the
# full curve is invisible to a positive-beta search.


def _kappa_from_inverse_ratio(s: float) -> float:
    return float(np.sign(s) * np.abs(s) ** 0.6)


def _quartic_guess(n_ions: int) -> np.ndarray:
    # equal spacing, scale from balancing the quartic ray against Coulomb
    c = np.arange(n_ions, dtype=float) - 0.5 * (n_ions - 1)
    b = np.sum(c**4)
    iu = np.triu_indices(n_ions, k=1)
    cc = np.sum(1.0 / np.abs(c[:, None] - c[None, :])[iu])
    return c * (cc / b) ** 0.2


def solve_equilibrium_quartic_scaled(
        n_ions: int, inverse_stiffness_ratio: float,
        tol: float = EQUILIBRIUM_TOL,
        initial: np.ndarray | None = None) -> np.ndarray:
    """Equilibrium positions in quartic-balance units l4, sorted ascending.

    Unlike solve_equilibrium this accepts a signed quadratic term via
    s = 1/beta; negative s inverts the quadratic part (center pushed up,
    quartic wall confining).  Reaching strongly negative s is done by
    continuation from the pure quartic chain, halving the parameter step
    whenever Newton stalls.
    """
    if n_ions < 1:
        raise ValueError(f"need at least one ion, got {n_ions}")
    if n_ions == 1:
        return np.zeros(1)

    kappa_target = _kappa_from_inverse_ratio(inverse_stiffness_ratio)
    if initial is not None:
        w = np.sort(np.asarray(initial, dtype=float))
        w, norm = _newton(w, kappa_target, 1.0, tol)
        if norm <= tol:
            return 0.5 * (w - w[::-1])

    w = _quartic_guess(n_ions)
    w, norm = _newton(w, 0.0, 1.0, tol)
    if norm > tol:
        raise RuntimeError(
            f"pure quartic equilibrium failed for n={n_ions}: residual {norm:.3e}")

    kappa = 0.0
    step = 0.5 if kappa_target >= 0.0 else -0.5
    while kappa != kappa_target:
        nxt = kappa_target if abs(kappa_target - kappa) <= abs(step) \
            else kappa + step
        w_try, norm = _newton(w, nxt, 1.0, tol)
        if norm <= tol:
            kappa, w = nxt, w_try
            continue
        step *= 0.5
        if abs(step) < 1e-6:
            raise RuntimeError(
                f"continuation stalled for n={n_ions} at kappa={kappa:.4g} "
                f"(target {kappa_target:.4g}): residual {norm:.3e}")
    return 0.5 * (w - w[::-1])


def uniformity_curve(n_ions: int, inverse_stiffness_values: np.ndarray
                     ) -> np.ndarray:
    """Spacing ratio along a sweep of the signed inverse stiffness 1/beta.

    Values are visited in the given order with each solve warm-started from
    the previous one, so a monotone sweep doubles as cheap continuation.
    """
    values = np.asarray(inverse_stiffness_values, dtype=float)
    ratios = np.empty(len(values))
    w = None
    for i, s in enumerate(values):
        w = solve_equilibrium_quartic_scaled(n_ions, s, initial=w)
        ratios[i] = spacing_stats(w).ratio
    return ratios


INVERSE_RATIO_BRACKET = (-16.0, 3.0)


def optimal_inverse_stiffness(n_ions: int,
                              bracket: tuple[float, float] = INVERSE_RATIO_BRACKET,
                              samples: int = 160) -> tuple[float, float]:
    """Signed 1/beta minimizing the spacing ratio; returns (s*, ratio*).

    Grid scan with continuation followed by parabolic refinement of the
    bracketing triple.  The optimum sits on the inverted-quadratic side
    (s* < 0) for chains longer than a dozen ions or so, moving deeper
    roughly linearly with N.  Chains of 2 or 3 ions are uniform by symmetry
    everywhere, so (0, 0) is returned.
    """
    if n_ions < 2:
        raise ValueError(f"need at least two ions, got {n_ions}")
    if n_ions <= 3:
        return 0.0, 0.0
    lo, hi = bracket
    if not lo < hi:
        raise ValueError(f"empty bracket {bracket}")

    # sweep from the harmonic side down so continuation stays smooth
    grid = np.linspace(hi, lo, samples)
    ratios = uniformity_curve(n_ions, grid)
    k = int(np.argmin(ratios))
    if k == 0 or k == samples - 1:
        return float(grid[k]), float(ratios[k])

    # parabola through the bracketing triple, then one more solve at the vertex
    s3, r3 = grid[k - 1:k + 2], ratios[k - 1:k + 2]
    denom = (s3[0] - s3[1]) * (s3[0] - s3[2]) * (s3[1] - s3[2])
    a = (s3[2] * (r3[1] - r3[0]) + s3[1] * (r3[0] - r3[2])
         + s3[0] * (r3[2] - r3[1])) / denom
    b = (s3[2] ** 2 * (r3[0] - r3[1]) + s3[1] ** 2 * (r3[2] - r3[0])
         + s3[0] ** 2 * (r3[1] - r3[2])) / denom
    s_star = float(np.clip(-b / (2.0 * a), min(s3), max(s3)))
    w = solve_equilibrium_quartic_scaled(n_ions, s_star)
    r_star = spacing_stats(w).ratio
    if r_star > ratios[k]:
        return float(grid[k]), float(ratios[k])
    return s_star, float(r_star)


BETA_BRACKET = (1e-3, 50.0)


def optimize_beta(n_ions: int, bracket: tuple[float, float] = BETA_BRACKET,
                  rel_tol: float = 1e-5) -> tuple[float, float]:
    """Quartic admixture minimizing the spacing ratio; returns (beta*, ratio*).

    Grid scan in log(beta) over the bracket, ties resolved to the smallest
    beta, then golden-section refinement when the scan minimum is interior.
    Chains of 2 or 3 ions are uniform by symmetry at any beta, so no quartic
    term is needed and (0, 0) is returned.

    For chains beyond a dozen ions the ratio decreases monotonically in beta
    toward the pure-quartic limit, so the search honestly reports the upper
    bracket edge.  The true optimum of the family lies at inverted quadratic
    confinement, outside beta >= 0; see optimal_inverse_stiffness.
    """
    if n_ions < 2:
        raise ValueError(f"need at least two ions, got {n_ions}")
    if n_ions <= 3:
        return 0.0, 0.0

    lo, hi = np.log(bracket[0]), np.log(bracket[1])
    grid = np.linspace(lo, hi, 40)
    vals = [spacing_ratio(n_ions, np.exp(g)) for g in grid]
    k = int(np.argmin(vals))
    # ties (flat stretches) resolve to the smallest beta
    for i in range(k):
        if vals[i] <= vals[k] * (1.0 + 1e-12):
            k = i
            break
    if k == 0 or k == len(grid) - 1:
        return float(np.exp(grid[k])), float(vals[k])

    a, b = grid[k - 1], grid[k + 1]
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    c, d = b - phi * (b - a), a + phi * (b - a)
    fc, fd = spacing_ratio(n_ions, np.exp(c)), spacing_ratio(n_ions, np.exp(d))
    while b - a > rel_tol:
        if fc < fd or (fc == fd and c < d):
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = spacing_ratio(n_ions, np.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = spacing_ratio(n_ions, np.exp(d))
    beta = float(np.exp(0.5 * (a + b)))
    return beta, spacing_ratio(n_ions, beta)


@dataclass(frozen=True)
class ChainDesign:
    """Result of sizing a quartic well for a uniform chain."""

    potential: AxialPotential
    beta: float
    spacing: SpacingStats
    positions: np.ndarray  # SI equilibrium positions, sorted

    @property
    def length_scale(self) -> float:
        return float(self.positions[-1] - self.positions[0])


def build_potential(n_ions: int, target_spacing: float, ion: IonSpecies) -> ChainDesign:
    """Size (k2, k4) so the chain is maximally uniform at the target spacing.

    beta* fixes the dimensionless geometry; the quadratic coefficient is then
    the root of  mean_spacing(k2) = target,  and k4 = beta* k2 / l(k2)^2.
    """
    if target_spacing <= 0.0:
        raise ValueError(f"target spacing must be positive, got {target_spacing}")
    beta, _ = optimize_beta(n_ions)
    u = solve_equilibrium(n_ions, beta)
    dimless_mean = spacing_stats(u).mean

    k_coul = ion.charge**2 / (4.0 * np.pi * VACUUM_PERMITTIVITY)

    def ell(k2):
        return (k_coul / k2) ** (1.0 / 3.0)

    def mismatch(log_k2):
        return ell(np.exp(log_k2)) * dimless_mean - target_spacing

    center = np.log(k_coul * (dimless_mean / target_spacing) ** 3)
    log_k2 = optimize.brentq(mismatch, center - 5.0, center + 5.0, xtol=1e-14)
    k2 = float(np.exp(log_k2))
    k4 = beta * k2 / ell(k2) ** 2
    pot = AxialPotential(quadratic=k2, quartic=k4)
    x = u * ell(k2)
    return ChainDesign(potential=pot, beta=beta, spacing=spacing_stats(x), positions=x)


def zigzag_expected(n_ions: int, axial_frequency: float,
                    min_transverse_frequency: float) -> bool:
    """Linear-chain instability estimate: True when the chain buckles.

    The straight chain gives way to a zig-zag once the weakest transverse
    confinement drops below roughly N/sqrt(ln N) times the axial frequency.
    """
    if n_ions < 3:
        raise ValueError(f"zig-zag estimate needs at least 3 ions, got {n_ions}")
    if axial_frequency <= 0.0 or min_transverse_frequency <= axial_frequency:
        raise ValueError(
            "need 0 < axial < transverse frequency, got "
            f"{axial_frequency}, {min_transverse_frequency}")
    return min_transverse_frequency / axial_frequency < n_ions / np.sqrt(np.log(n_ions))


def _energy_grad_3d(flat: np.ndarray, ay2: float, az2: float, beta: float
                    ) -> tuple[float, np.ndarray]:
    r = flat.reshape(-1, 3)
    n = len(r)
    w2 = np.array([1.0, ay2, az2])
    e_trap = 0.5 * np.sum(w2 * r**2) + 0.25 * beta * np.sum(r[:, 0] ** 4)
    g = w2 * r
    g[:, 0] += beta * r[:, 0] ** 3
    dr = r[:, None, :] - r[None, :, :]
    d = np.sqrt(np.sum(dr**2, axis=2))
    np.fill_diagonal(d, np.inf)
    e_coul = 0.5 * np.sum(1.0 / d)
    g -= np.sum(dr / d[:, :, None] ** 3, axis=1)
    return e_trap + e_coul, g.ravel()


def _hessian_3d(r: np.ndarray, ay2: float, az2: float, beta: float) -> np.ndarray:
    n_ions = len(r)
    n3 = 3 * n_ions
    hess = np.zeros((n3, n3))
    w2 = np.array([1.0, ay2, az2])
    for i in range(n_ions):
        blk = np.diag(w2.copy())
        blk[0, 0] += 3.0 * beta * r[i, 0] ** 2
        hess[3 * i:3 * i + 3, 3 * i:3 * i + 3] += blk
    dr = r[:, None, :] - r[None, :, :]
    d = np.sqrt(np.sum(dr**2, axis=2))
    for i in range(n_ions):
        for j in range(i + 1, n_ions):
            rh = dr[i, j] / d[i, j]
            blk = (3.0 * np.outer(rh, rh) - np.eye(3)) / d[i, j] ** 3
            hess[3 * i:3 * i + 3, 3 * i:3 * i + 3] += blk
            hess[3 * j:3 * j + 3, 3 * j:3 * j + 3] += blk
            hess[3 * i:3 * i + 3, 3 * j:3 * j + 3] -= blk
            hess[3 * j:3 * j + 3, 3 * i:3 * i + 3] -= blk
    return hess


def solve_equilibrium_3d(n_ions: int, omega_axial: float,
                         omega_transverse: tuple[float, float],
                         beta: float = 0.0, stagger_sign: float = 1.0,
                         tol: float = 1e-9) -> np.ndarray:
    """Pseudopotential crystal structure in units of l, shape (N, 3).

    Minimizes the scaled energy with transverse stiffness (w_y/w_x)^2,
    (w_z/w_x)^2.  Below the buckling threshold the minimum is planar
    (in x-y when w_y < w_z); the mirror image (y -> -y) is reached with
    stagger_sign = -1.  Axes follow the trap convention: x axial.  The
    result is checked against its own Hessian, so a stationary point that
    is actually a saddle (the straight chain past buckling, say) is kicked
    along the unstable direction and re-minimized instead of returned.
    """
    wy, wz = omega_transverse
    if not (omega_axial > 0 and wy > omega_axial and wz > omega_axial):
        raise ValueError(
            f"need 0 < axial < transverse frequencies, got {omega_axial}, {wy}, {wz}")
    ay2, az2 = (wy / omega_axial) ** 2, (wz / omega_axial) ** 2

    u = solve_equilibrium(n_ions, beta)
    r0 = np.zeros((n_ions, 3))
    r0[:, 0] = u
    # alternating transverse seed lets the minimizer fall off the unstable ridge
    soft = 1 if ay2 <= az2 else 2
    stag = 0.05 * spacing_stats(u).mean if n_ions > 1 else 0.05
    r0[:, soft] = stagger_sign * stag * (-1.0) ** np.arange(n_ions)

    for _attempt in range(4):
        res = optimize.minimize(
            _energy_grad_3d, r0.ravel(), args=(ay2, az2, beta), jac=True,
            method="L-BFGS-B", options={"maxiter": 20000, "ftol": 1e-16, "gtol": 1e-12})
        r = res.x.reshape(-1, 3)

        # Newton polish on the gradient with the analytic Hessian
        for _ in range(60):
            _, g = _energy_grad_3d(r.ravel(), ay2, az2, beta)
            if np.max(np.abs(g)) <= tol:
                break
            hess = _hessian_3d(r, ay2, az2, beta)
            try:
                step = np.linalg.solve(hess, g)
            except np.linalg.LinAlgError:
                break
            r = (r.ravel() - step).reshape(-1, 3)

        _, g = _energy_grad_3d(r.ravel(), ay2, az2, beta)
        if np.max(np.abs(g)) > tol:
            raise RuntimeError(
                f"3d equilibrium solve failed for n={n_ions}: gradient "
                f"{np.max(np.abs(g)):.3e} > {tol:.1e}")

        eigval, eigvec = np.linalg.eigh(_hessian_3d(r, ay2, az2, beta))
        if eigval[0] >= -1e-8 * eigval[-1]:
            return r[np.argsort(r[:, 0])]
        # saddle: displace along the unstable mode and try again
        kick = 0.1 * stag * eigvec[:, 0].reshape(-1, 3)
        r0 = r + kick * (_attempt + 1)

    raise RuntimeError(
        f"3d equilibrium solve for n={n_ions} kept landing on saddle points")
