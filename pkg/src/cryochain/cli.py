"""Batch command-line front end.

    cryochain SUBCOMMAND [--config PATH] [--seed N] [--workers N] [--out DIR]

Subcommands: equilibrium, optimize-beta, scatter, flip-mc, pressure,
heatload, resonator, cool-demo.  Each run reads one JSON config tree
(strictly validated, unknown keys rejected), writes CSV tables and JSON
summaries into the output directory, and always drops a run_manifest.json
echoing the resolved inputs, seeds and wall time so the run can be
reproduced bit-exactly: result files depend only on config and master
seed, never on worker count or timing.

Exit codes: 0 success, 2 config schema violation, 3 physics/domain
failure (including any non-finite number headed for an output file),
4 I/O failure.  Status and errors go to stderr as single-line JSON
events; stdout stays quiet.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, axial, calculators, collision, experiments
from .config import ConfigError, VALIDATORS, load_tree
from .constants import BOLTZMANN, TWO_PI, torr_to_pascal
from .dynamics import IntegratorConfig, SystemState, evolve, yb171_cooling
from .parallel import default_worker_count, sample_seed_sequence
from .species import hydrogen_gas, ytterbium_171
from .trap import trap_from_secular_frequencies

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PHYSICS = 3
EXIT_IO = 4

MANIFEST_NAME = "run_manifest.json"


def _emit(event: dict) -> None:
    print(json.dumps(event, sort_keys=True), file=sys.stderr, flush=True)


class _NonFinite(ValueError):
    pass


def _check_finite(value, where: str) -> None:
    if isinstance(value, bool) or value is None or isinstance(value, (str, int)):
        return
    if isinstance(value, float):
        if not np.isfinite(value):
            raise _NonFinite(f"non-finite value in {where}")
        return
    if isinstance(value, dict):
        for v in value.values():
            _check_finite(v, where)
        return
    if isinstance(value, (list, tuple)):
        for v in value:
            _check_finite(v, where)
        return
    raise TypeError(f"unexpected output type {type(value).__name__} in {where}")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def _write_csv(path: Path, header: list[str], rows) -> None:
    rows = list(rows)
    for row in rows:
        _check_finite(list(row), path.name)
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _write_json(path: Path, tree: dict) -> None:
    _check_finite(tree, path.name)
    path.write_text(json.dumps(tree, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8", newline="\n")


# --------------------------------------------------------------------------
# subcommand runners; each returns (outputs, batch_seeds, failures)


def _run_equilibrium(job, seed, workers, out):
    u = axial.solve_equilibrium(job.n_ions, job.beta)
    _write_csv(out / "equilibrium.csv", ["ion_index", "position_scaled"],
               [(i, float(x)) for i, x in enumerate(u)])
    return ["equilibrium.csv"], [], []


def _run_optimize_beta(job, seed, workers, out):
    beta_star, ratio_star = axial.optimize_beta(job.n_ions)
    harmonic = axial.spacing_stats(axial.solve_equilibrium(job.n_ions, 0.0)).ratio
    s_star, s_ratio = axial.optimal_inverse_stiffness(job.n_ions)
    grid = np.linspace(job.inv_beta_high, job.inv_beta_low, job.curve_points)
    ratios = axial.uniformity_curve(job.n_ions, grid)
    order = np.argsort(grid)
    _write_csv(out / "optimize_beta.csv", ["inv_beta", "spacing_ratio"],
               [(float(grid[i]), float(ratios[i])) for i in order])
    _write_json(out / "optimize_beta.json", {
        "n_ions": job.n_ions,
        "beta_star": beta_star,
        "spacing_ratio_at_beta_star": ratio_star,
        "harmonic_spacing_ratio": float(harmonic),
        "signed_curve_minimum": {"inv_beta": s_star, "spacing_ratio": s_ratio},
    })
    return ["optimize_beta.csv", "optimize_beta.json"], [], []


def _run_scatter(job, seed, workers, out):
    gas = hydrogen_gas(4.7)
    interaction = collision.InducedDipoleInteraction.from_species(
        gas, ytterbium_171())
    b_c = collision.critical_impact_parameter(job.speed, interaction)
    grid = np.linspace(job.max_over_critical / job.count,
                       job.max_over_critical, job.count) * b_c
    rows = []
    captured_count = 0
    for b in grid:
        theta, captured = collision.scattering_angle(float(b), job.speed,
                                                     interaction)
        captured_count += captured
        rows.append((float(b), float(theta), int(captured)))
    _write_csv(out / "scatter.csv",
               ["impact_parameter_m", "scattering_angle_rad", "captured"],
               rows)
    _write_json(out / "scatter.json", {
        "speed_mps": job.speed,
        "critical_impact_parameter_m": float(b_c),
        "count": job.count,
        "captured_count": int(captured_count),
    })
    return ["scatter.csv", "scatter.json"], [], []


def _flip_config(job, temperature: float) -> experiments.FlipExperimentConfig:
    half = 0.5 * job.transverse_split
    return experiments.FlipExperimentConfig(
        n_ions=job.n_ions,
        omega_axial=job.omega_axial,
        omega_y=job.omega_mean_transverse - half,
        omega_z=job.omega_mean_transverse + half,
        omega_rf=job.omega_rf,
        gas=hydrogen_gas(temperature),
        samples_per_batch=job.samples_per_batch,
        batches=job.batches,
        periods=job.periods,
        steps_per_period=job.steps_per_period,
        capture_kick=job.capture_kick,
        drop_ejected=job.drop_ejected,
    )


def _run_flip(job, seed, workers, out):
    children = np.random.SeedSequence(seed).spawn(len(job.temperatures))
    point_seeds = [int(c.generate_state(1, np.uint64)[0]) for c in children]
    rows, points, batch_seeds, failures = [], [], [], []
    start = time.monotonic()
    for temperature, point_seed in zip(job.temperatures, point_seeds):
        cfg = _flip_config(job, temperature)

        def progress(done, _t=temperature):
            if job.progress_every and done % job.progress_every == 0:
                _emit({"event": "progress", "subcommand": "flip-mc",
                       "temperature_k": _t, "samples_done": done,
                       "samples_total": cfg.samples,
                       "elapsed_s": round(time.monotonic() - start, 1)})

        result = experiments.estimate_p_flip(
            cfg, point_seed, workers=workers,
            progress=progress if job.progress_every else None)
        rows.append((temperature, result.p_flip, result.std_err,
                     result.flip_count, result.ejected, result.total))
        points.append({
            "temperature_k": temperature,
            "p_flip": result.p_flip,
            "std_err": result.std_err,
            "flips": result.flip_count,
            "ejections": result.ejected,
            "samples": result.total,
            "batch_means": list(result.batch_means),
        })
        batch_seeds.append({
            "temperature_k": temperature,
            "seed": point_seed,
            "batch_first_sample_index": [b * job.samples_per_batch
                                         for b in range(job.batches)],
        })
        if result.failed:
            failures.append({"temperature_k": temperature,
                             "failed_samples": result.failed})
    usable = [(t, p["p_flip"]) for t, p in zip(job.temperatures, points)
              if p["p_flip"] > 0.0]
    arrhenius = None
    if len(usable) >= 2:
        (t_lo, p_lo), (t_hi, p_hi) = sorted(usable)[-2:]
        if t_lo < t_hi:
            activation, intercept = experiments.arrhenius_two_point(
                t_lo, p_lo, t_hi, p_hi)
            arrhenius = {"activation_k": activation, "intercept": intercept,
                         "fit_temperatures_k": [t_lo, t_hi]}
    _write_csv(out / "flip_mc.csv",
               ["temperature_k", "p_flip", "std_err", "flips", "ejections",
                "samples"], rows)
    _write_json(out / "flip_mc.json",
                {"points": points, "arrhenius": arrhenius})
    return ["flip_mc.csv", "flip_mc.json"], batch_seeds, failures


def _run_pressure(job, seed, workers, out):
    if job.method == "elastic":
        p = job.params
        temperature = p["temperature_k"]
        estimate = experiments.infer_pressure_elastic(
            p["gamma_el_per_s"], p["p_flip"],
            hydrogen_gas(temperature), ytterbium_171(), temperature,
            gamma_el_err=p["gamma_el_err_per_s"],
            p_flip_err=p["p_flip_err"])
    else:
        p = job.params
        estimate = experiments.infer_pressure_ratio(
            p["gamma_cold_per_s"], p["gamma_warm_per_s"],
            torr_to_pascal(p["pressure_warm_torr"]),
            p["t_cold_k"], p["t_warm_k"])
    _write_json(out / "pressure.json", {
        "method": estimate.method,
        "pressure_pa": estimate.pressure,
        "uncertainty_pa": estimate.uncertainty,
        "pressure_torr": estimate.torr,
        "uncertainty_torr": estimate.uncertainty_torr,
        "inputs": dict(estimate.inputs),
    })
    return ["pressure.json"], [], []


def _run_heatload(job, seed, workers, out):
    rows: list[tuple[str, float | None, float | None]] = []
    if job.preset is not None:
        rows.extend(calculators.heat_budget_table())
    for entry in job.surfaces:
        surface = calculators.RadiativeSurface(
            area=entry["area_m2"], t_hot=entry["t_hot_k"],
            t_cold=entry["t_cold_k"], view_factor=entry["view_factor"])
        load = calculators.radiative_load(surface)
        rows.append((entry["name"],
                     load if entry["stage"] == "40k" else None,
                     load if entry["stage"] == "4k" else None))
    for entry in job.wires:
        wire = calculators.WireRun(
            cross_section=entry["cross_section_m2"], length=entry["length_m"],
            conductivity=calculators.load_conductivity(entry["conductivity"]),
            t_hot=entry["t_hot_k"], t_cold=entry["t_cold_k"])
        load = calculators.conductive_load(wire)
        rows.append((entry["name"],
                     load if entry["stage"] == "40k" else None,
                     load if entry["stage"] == "4k" else None))
    _write_csv(out / "heatload.csv",
               ["component", "load_40k_w", "load_4k_w"], rows)
    _write_json(out / "heatload.json", {
        "components": [{"name": n, "load_40k_w": a, "load_4k_w": b}
                       for n, a, b in rows],
        "total_40k_w": sum(a for _, a, _b in rows if a is not None),
        "total_4k_w": sum(b for _, _a, b in rows if b is not None),
    })
    return ["heatload.csv", "heatload.json"], [], []


def _run_resonator(job, seed, workers, out):
    params = calculators.ResonatorParams(
        self_inductance=job.self_inductance,
        self_capacitance=job.self_capacitance,
        load_capacitance=job.load_capacitance,
        q_load=job.q_load,
        reflected_power=job.reflected_power)
    _write_json(out / "resonator.json", {
        "q_load": params.q_load,
        "reflected_power": params.reflected_power,
        "unloaded_q": params.unloaded_q,
        "total_capacitance_f": params.self_capacitance
        + params.load_capacitance,
        "resonant_frequency_hz": calculators.resonant_frequency(params),
    })
    return ["resonator.json"], [], []


def _run_cool_demo(job, seed, workers, out):
    ion = ytterbium_171()
    trap = trap_from_secular_frequencies(
        ion, TWO_PI * job.rf_frequency_hz, TWO_PI * job.axial_frequency_hz,
        tuple(TWO_PI * f for f in job.transverse_frequencies_hz))
    axial_pot = axial.harmonic_axial_potential(
        ion, TWO_PI * job.axial_frequency_hz)
    rng = np.random.default_rng(sample_seed_sequence(seed, 0))
    sigma = np.sqrt(BOLTZMANN * job.temperature / ion.mass)
    state = SystemState(positions=np.zeros((1, 3)),
                        velocities=rng.normal(0.0, sigma, (1, 3)))
    cooling = yb171_cooling(beam_direction=(1.0, 1.0, 1.0))
    integrator = IntegratorConfig(steps_per_rf_period=job.steps_per_period)
    kernel_seed = int(sample_seed_sequence(seed, 1).generate_state(
        1, np.uint32)[0])

    def kinetic_mk(s: SystemState) -> float:
        ke = 0.5 * ion.mass * float(np.sum(s.velocities**2))
        return ke / (1.5 * BOLTZMANN) * 1e3

    rows = [(0, kinetic_mk(state))]
    done = 0
    while done < job.periods:
        chunk = min(job.report_every, job.periods - done)
        result = evolve(state, chunk, trap, axial_pot, ion,
                        cooling=cooling, config=integrator, seed=kernel_seed)
        state = result.state
        done += result.periods_completed
        rows.append((done, kinetic_mk(state)))
        kernel_seed = (kernel_seed + 1) % (2**32)
        if result.ejected:
            break
    _write_csv(out / "cool_demo.csv",
               ["period", "kinetic_temperature_mk"], rows)
    _write_json(out / "cool_demo.json", {
        "initial_mk": rows[0][1],
        "final_mk": rows[-1][1],
        "periods": rows[-1][0],
    })
    return ["cool_demo.csv", "cool_demo.json"], [], []


_RUNNERS = {
    "equilibrium": _run_equilibrium,
    "optimize-beta": _run_optimize_beta,
    "scatter": _run_scatter,
    "flip-mc": _run_flip,
    "pressure": _run_pressure,
    "heatload": _run_heatload,
    "resonator": _run_resonator,
    "cool-demo": _run_cool_demo,
}


# --------------------------------------------------------------------------
# argument parsing and dispatch


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="JSON config tree (or a previous run manifest)")
    common.add_argument("--seed", type=int, default=None, metavar="U64",
                        help="master seed, 0 <= seed < 2^64; a manifest "
                             "passed as --config supplies its own")
    common.add_argument("--workers", type=int, default=None, metavar="N",
                        help="process count; default from CRYOCHAIN_WORKERS "
                             "or the machine")
    common.add_argument("--out", default=".", metavar="DIR",
                        help="output directory (created if missing)")
    parser = argparse.ArgumentParser(
        prog="cryochain",
        description="Trapped-ion chain simulation batch runner")
    parser.add_argument("--version", action="version",
                        version=f"cryochain {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    p = sub.add_parser("equilibrium", parents=[common],
                       help="axial chain equilibrium positions")
    p.add_argument("--n", type=int, default=None, help="ion count")
    p.add_argument("--beta", type=float, default=None,
                   help="quartic admixture")
    p = sub.add_parser("optimize-beta", parents=[common],
                       help="spacing-uniformity optimization")
    p.add_argument("--n", type=int, default=None, help="ion count")
    p = sub.add_parser("scatter", parents=[common],
                       help="ion-molecule scattering angle table")
    p.add_argument("--speed", type=float, default=None,
                   help="molecule speed in m/s")
    sub.add_parser("flip-mc", parents=[common],
                   help="collision-driven configuration-flip Monte Carlo")
    sub.add_parser("pressure", parents=[common],
                   help="pressure inference from collision rates")
    p = sub.add_parser("heatload", parents=[common],
                       help="cryostat stage heat-load budget")
    p.add_argument("--preset", default=None,
                   help="named preset (reference-build)")
    sub.add_parser("resonator", parents=[common],
                   help="helical resonator figures")
    sub.add_parser("cool-demo", parents=[common],
                   help="single-ion Doppler cooling demonstration")
    return parser


def _apply_flag_overrides(args, tree: dict) -> None:
    if args.subcommand == "equilibrium":
        if args.n is not None:
            tree["n_ions"] = args.n
        if args.beta is not None:
            tree["beta"] = args.beta
    elif args.subcommand == "optimize-beta":
        if args.n is not None:
            tree["n_ions"] = args.n
    elif args.subcommand == "scatter":
        if args.speed is not None:
            tree["speed_mps"] = args.speed
    elif args.subcommand == "heatload":
        if args.preset is not None:
            tree["preset"] = args.preset


def run(argv) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    started = time.monotonic()
    try:
        if args.workers is not None and args.workers < 1:
            raise ConfigError(f"--workers: must be >= 1, got {args.workers}")
        workers = args.workers or default_worker_count()
        tree, manifest_seed = (load_tree(args.config)
                               if args.config else ({}, None))
        seed = args.seed if args.seed is not None else manifest_seed
        if seed is None:
            seed = 0
        if not 0 <= seed < 2**64:
            raise ConfigError(f"--seed: must sit in [0, 2^64), got {seed}")
        _apply_flag_overrides(args, tree)
        job, echo = VALIDATORS[args.subcommand](tree)

        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        outputs, batch_seeds, failures = _RUNNERS[args.subcommand](
            job, seed, workers, out)
        manifest = {
            "tool": "cryochain",
            "version": __version__,
            "subcommand": args.subcommand,
            "master_seed": seed,
            "workers": workers,
            "wall_time_s": round(time.monotonic() - started, 3),
            "config": echo,
            "outputs": outputs,
            "batch_seeds": batch_seeds,
            "failures": failures,
        }
        _write_json(out / MANIFEST_NAME, manifest)
        if failures:
            _emit({"event": "warning",
                   "message": f"{len(failures)} sample group(s) recorded "
                              f"failures; see {MANIFEST_NAME}"})
    except ConfigError as exc:
        _emit({"event": "error", "kind": "config", "message": str(exc)})
        return EXIT_CONFIG
    except OSError as exc:
        _emit({"event": "error", "kind": "io", "message": str(exc)})
        return EXIT_IO
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        _emit({"event": "error", "kind": "physics", "message": str(exc)})
        return EXIT_PHYSICS
    return EXIT_OK


def main() -> None:
    sys.exit(run(sys.argv[1:]))
