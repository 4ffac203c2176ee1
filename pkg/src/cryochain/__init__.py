"""Desk-scale simulations of cryogenic trapped-ion chains.

Submodules:
    trap         RF trap operating points and drive forces
    axial        chain equilibria, quartic-well sizing, zig-zag structure
    collision    ion / neutral-gas collision kinematics and rates
    dynamics     driven molecular dynamics with quantum-jump laser cooling
    experiments  collision-flip Monte Carlo and pressure inference
    calculators  cryostat heat loads and the RF resonator
    cli          batch command-line interface
"""

__version__ = "0.1.0"

from .species import IonSpecies, BackgroundGas, ytterbium_171, hydrogen_gas
from .trap import (
    TrapParameters,
    mathieu_q,
    power_dissipated,
    calibrate_geometric_efficiency,
    trap_from_secular_frequencies,
)
from .axial import (
    AxialPotential,
    harmonic_axial_potential,
    characteristic_length,
    solve_equilibrium,
    solve_equilibrium_quartic_scaled,
    spacing_stats,
    optimize_beta,
    optimal_inverse_stiffness,
    uniformity_curve,
    build_potential,
    zigzag_expected,
    solve_equilibrium_3d,
)
from .collision import (
    InducedDipoleInteraction,
    CollisionEvent,
    c4_coefficient,
    p_wave_barrier,
    critical_impact_parameter,
    scattering_angle,
    energy_transfer,
    velocity_kick,
    langevin_rate,
    density_from_pressure,
    mean_capture_energy_transfer,
)
from .dynamics import (
    SystemState,
    CoolingParameters,
    IntegratorConfig,
    EvolveResult,
    evolve,
    yb171_cooling,
    save_state,
    load_state,
)
from .experiments import (
    FlipExperimentConfig,
    FlipResult,
    PressureEstimate,
    detect_flip,
    flip_threshold,
    classify_configuration,
    flip_barrier,
    zigzag_equilibrium,
    dress_micromotion,
    estimate_p_flip,
    arrhenius_two_point,
    desk_scale_flip_config,
    elastic_rate,
    infer_pressure_elastic,
    infer_pressure_ratio,
    simulate_dark_ion_series,
)
from .calculators import (
    ConductivityTable,
    RadiativeSurface,
    WireRun,
    ResonatorParams,
    load_conductivity,
    radiative_load,
    conductive_load,
    unloaded_q,
    resonant_frequency,
    heat_budget_table,
)
from .parallel import parallel_map, sample_seed_sequence, default_worker_count
