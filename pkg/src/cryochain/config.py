"""Config-tree loading and validation for the batch CLI.

One run is described by one JSON-compatible tree.  Validation is strict
and total: unknown keys are rejected, every message carries the dotted
path of the offending field, and all defaults are materialized into a
resolved tree that gets echoed into the run manifest, so re-running from
a manifest sees exactly the same inputs even if package defaults move.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .constants import TWO_PI


class ConfigError(ValueError):
    """Schema violation; the message names the dotted field path."""


_REQUIRED = object()


class _Node:
    """Destructive walker over one mapping level: take() pops known keys,
    done() rejects whatever is left."""

    def __init__(self, tree, path: str = ""):
        label = path or "config"
        if not isinstance(tree, dict):
            raise ConfigError(f"{label}: expected an object, "
                              f"got {type(tree).__name__}")
        self._left = dict(tree)
        self.path = path

    def _label(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def take(self, key: str, kind: type, default=_REQUIRED,
             where=None, what: str = ""):
        if key not in self._left:
            if default is _REQUIRED:
                raise ConfigError(f"{self._label(key)}: required field missing")
            return default
        value = self._left.pop(key)
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if kind is not bool and isinstance(value, bool):
            raise ConfigError(f"{self._label(key)}: expected {kind.__name__}, "
                              f"got a boolean")
        if not isinstance(value, kind):
            raise ConfigError(f"{self._label(key)}: expected {kind.__name__}, "
                              f"got {type(value).__name__}")
        if where is not None and not where(value):
            raise ConfigError(f"{self._label(key)}: {what or 'invalid value'}, "
                              f"got {value!r}")
        return value

    def child(self, key: str, required: bool = True) -> "_Node | None":
        if key not in self._left:
            if required:
                raise ConfigError(f"{self._label(key)}: required block missing")
            return None
        return _Node(self._left.pop(key), self._label(key))

    def take_list(self, key: str, default=_REQUIRED) -> list | None:
        value = self.take(key, list, default)
        return value

    def done(self) -> None:
        if self._left:
            key = sorted(self._left)[0]
            raise ConfigError(f"unknown key '{self._label(key)}'")


def _positive(v) -> bool:
    return v > 0


def _non_negative(v) -> bool:
    return v >= 0


def load_tree(path) -> tuple[dict, int | None]:
    """Read a JSON config file; returns (tree, manifest_seed).

    A previous run manifest is accepted directly: its config echo is
    unwrapped and its master seed comes back so a bare re-run reproduces
    the original outputs.  Plain config files return (tree, None).
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        tree = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: not valid JSON ({exc})") from exc
    if not isinstance(tree, dict):
        raise ConfigError("config: top level must be an object")
    if "config" in tree and "tool" in tree:
        inner = tree["config"]
        if not isinstance(inner, dict):
            raise ConfigError("config: manifest echo is not an object")
        seed = tree.get("master_seed")
        if seed is not None and (isinstance(seed, bool)
                                 or not isinstance(seed, int)):
            raise ConfigError("config: manifest master_seed is not an integer")
        return inner, seed
    return tree, None


# --------------------------------------------------------------------------
# per-subcommand jobs


@dataclass(frozen=True)
class EquilibriumJob:
    n_ions: int
    beta: float


def validate_equilibrium(tree: dict) -> tuple[EquilibriumJob, dict]:
    node = _Node(tree)
    n = node.take("n_ions", int, 3, where=lambda v: v >= 2,
                  what="need at least 2 ions")
    beta = node.take("beta", float, 0.0, where=_non_negative,
                     what="quartic ratio must be >= 0")
    node.done()
    return EquilibriumJob(n, beta), {"n_ions": n, "beta": beta}


@dataclass(frozen=True)
class OptimizeBetaJob:
    n_ions: int
    curve_points: int
    inv_beta_low: float
    inv_beta_high: float


def validate_optimize_beta(tree: dict) -> tuple[OptimizeBetaJob, dict]:
    node = _Node(tree)
    n = node.take("n_ions", int, 20, where=lambda v: v >= 4,
                  what="need at least 4 ions")
    pts = node.take("curve_points", int, 25, where=lambda v: v >= 2,
                    what="need at least 2 curve points")
    lo = node.take("inv_beta_low", float, -16.0)
    hi = node.take("inv_beta_high", float, 3.0)
    if hi <= lo:
        raise ConfigError(f"inv_beta_high: must exceed inv_beta_low, "
                          f"got {hi!r} <= {lo!r}")
    node.done()
    job = OptimizeBetaJob(n, pts, lo, hi)
    return job, {"n_ions": n, "curve_points": pts,
                 "inv_beta_low": lo, "inv_beta_high": hi}


@dataclass(frozen=True)
class ScatterJob:
    speed: float           # m/s
    count: int
    max_over_critical: float


def validate_scatter(tree: dict) -> tuple[ScatterJob, dict]:
    node = _Node(tree)
    speed = node.take("speed_mps", float, 193.0, where=_positive,
                      what="molecule speed must be positive")
    count = node.take("count", int, 50, where=_positive,
                      what="need at least one impact parameter")
    bmax = node.take("max_over_critical", float, 5.0, where=_positive,
                     what="grid end must be positive")
    node.done()
    return (ScatterJob(speed, count, bmax),
            {"speed_mps": speed, "count": count, "max_over_critical": bmax})


@dataclass(frozen=True)
class FlipJob:
    temperatures: tuple[float, ...]  # K
    samples_per_batch: int
    batches: int
    periods: int
    steps_per_period: int
    capture_kick: str
    drop_ejected: bool
    n_ions: int
    omega_axial: float               # rad/s
    omega_mean_transverse: float     # rad/s
    transverse_split: float          # rad/s
    omega_rf: float                  # rad/s
    progress_every: int


def validate_flip(tree: dict) -> tuple[FlipJob, dict]:
    node = _Node(tree)
    temps = node.take_list("temperatures_k", [4.7, 12.0, 20.0])
    if not temps:
        raise ConfigError("temperatures_k: need at least one temperature")
    for i, t in enumerate(temps):
        if isinstance(t, bool) or not isinstance(t, (int, float)) or t <= 0:
            raise ConfigError(f"temperatures_k[{i}]: temperature must be a "
                              f"positive number, got {t!r}")
    temps = tuple(float(t) for t in temps)
    spb = node.take("samples_per_batch", int, 200, where=_positive,
                    what="need at least one sample per batch")
    batches = node.take("batches", int, 5, where=_positive,
                        what="need at least one batch")
    periods = node.take("periods", int, 2_000, where=_positive,
                        what="need at least one period")
    steps = node.take("steps_per_period", int, 100, where=lambda v: v >= 10,
                      what="need at least 10 steps per period")
    kick = node.take("capture_kick", str, "pi",
                     where=lambda v: v in ("pi", "overlap"),
                     what="must be 'pi' or 'overlap'")
    drop = node.take("drop_ejected", bool, False)
    progress = node.take("progress_every", int, 0, where=_non_negative,
                         what="progress interval must be >= 0")
    geo = node.child("geometry", required=False)
    if geo is None:
        geo = _Node({}, "geometry")
    n = geo.take("n_ions", int, 7, where=lambda v: v >= 3,
                 what="need at least 3 ions")
    f_ax = geo.take("axial_frequency_hz", float, 150e3, where=_positive,
                    what="frequency must be positive")
    f_tr = geo.take("mean_transverse_frequency_hz", float, 420e3,
                    where=_positive, what="frequency must be positive")
    f_split = geo.take("transverse_split_hz", float, 30e3, where=_positive,
                       what="split must be positive")
    f_rf = geo.take("rf_frequency_hz", float, 6e6, where=_positive,
                    what="frequency must be positive")
    geo.done()
    node.done()
    job = FlipJob(temps, spb, batches, periods, steps, kick, drop,
                  n, TWO_PI * f_ax, TWO_PI * f_tr, TWO_PI * f_split,
                  TWO_PI * f_rf, progress)
    echo = {
        "temperatures_k": list(temps),
        "samples_per_batch": spb, "batches": batches,
        "periods": periods, "steps_per_period": steps,
        "capture_kick": kick, "drop_ejected": drop,
        "progress_every": progress,
        "geometry": {"n_ions": n, "axial_frequency_hz": f_ax,
                     "mean_transverse_frequency_hz": f_tr,
                     "transverse_split_hz": f_split,
                     "rf_frequency_hz": f_rf},
    }
    return job, echo


@dataclass(frozen=True)
class PressureJob:
    method: str                      # "elastic" | "ratio"
    params: dict


def validate_pressure(tree: dict) -> tuple[PressureJob, dict]:
    node = _Node(tree)
    method = node.take("method", str,
                       where=lambda v: v in ("elastic", "ratio"),
                       what="must be 'elastic' or 'ratio'")
    if method == "elastic":
        blk = node.child("elastic")
        p = {
            "gamma_el_per_s": blk.take("gamma_el_per_s", float,
                                       where=_positive,
                                       what="rate must be positive"),
            "gamma_el_err_per_s": blk.take("gamma_el_err_per_s", float, 0.0,
                                           where=_non_negative,
                                           what="error must be >= 0"),
            "p_flip": blk.take("p_flip", float,
                               where=lambda v: 0 < v <= 1,
                               what="flip probability must sit in (0, 1]"),
            "p_flip_err": blk.take("p_flip_err", float, 0.0,
                                   where=_non_negative,
                                   what="error must be >= 0"),
            "temperature_k": blk.take("temperature_k", float,
                                      where=_positive,
                                      what="temperature must be positive"),
        }
        blk.done()
        node.done()
        return PressureJob(method, p), {"method": method, "elastic": p}
    blk = node.child("ratio")
    p = {
        "gamma_cold_per_s": blk.take("gamma_cold_per_s", float,
                                     where=_non_negative,
                                     what="rate must be >= 0"),
        "gamma_warm_per_s": blk.take("gamma_warm_per_s", float,
                                     where=_positive,
                                     what="warm rate must be positive"),
        "pressure_warm_torr": blk.take("pressure_warm_torr", float,
                                       where=_positive,
                                       what="pressure must be positive"),
        "t_cold_k": blk.take("t_cold_k", float, where=_positive,
                             what="temperature must be positive"),
        "t_warm_k": blk.take("t_warm_k", float, where=_positive,
                             what="temperature must be positive"),
    }
    blk.done()
    node.done()
    return PressureJob(method, p), {"method": method, "ratio": p}


@dataclass(frozen=True)
class HeatloadJob:
    preset: str | None
    surfaces: tuple[dict, ...]
    wires: tuple[dict, ...]


def _surface_entry(i: int, entry) -> dict:
    node = _Node(entry, f"surfaces[{i}]")
    out = {
        "name": node.take("name", str),
        "stage": node.take("stage", str,
                           where=lambda v: v in ("40k", "4k"),
                           what="must be '40k' or '4k'"),
        "area_m2": node.take("area_m2", float, where=_positive,
                             what="area must be positive"),
        "t_hot_k": node.take("t_hot_k", float, where=_non_negative,
                             what="temperature must be >= 0"),
        "t_cold_k": node.take("t_cold_k", float, where=_non_negative,
                              what="temperature must be >= 0"),
        "view_factor": node.take("view_factor", float, where=_positive,
                                 what="view factor must be positive"),
    }
    if out["t_cold_k"] > out["t_hot_k"]:
        raise ConfigError(f"surfaces[{i}].t_cold_k: exceeds t_hot_k")
    node.done()
    return out


def _wire_entry(i: int, entry) -> dict:
    node = _Node(entry, f"wires[{i}]")
    out = {
        "name": node.take("name", str),
        "stage": node.take("stage", str,
                           where=lambda v: v in ("40k", "4k"),
                           what="must be '40k' or '4k'"),
        "cross_section_m2": node.take("cross_section_m2", float,
                                      where=_positive,
                                      what="cross-section must be positive"),
        "length_m": node.take("length_m", float, where=_positive,
                              what="length must be positive"),
        "conductivity": node.take("conductivity", str),
        "t_hot_k": node.take("t_hot_k", float, where=_non_negative,
                             what="temperature must be >= 0"),
        "t_cold_k": node.take("t_cold_k", float, where=_non_negative,
                              what="temperature must be >= 0"),
    }
    if out["t_cold_k"] > out["t_hot_k"]:
        raise ConfigError(f"wires[{i}].t_cold_k: exceeds t_hot_k")
    node.done()
    return out


def validate_heatload(tree: dict) -> tuple[HeatloadJob, dict]:
    node = _Node(tree)
    preset = node.take("preset", str, None,
                       where=lambda v: v == "reference-build",
                       what="the only packaged preset is 'reference-build'")
    raw_surfaces = node.take_list("surfaces", [])
    raw_wires = node.take_list("wires", [])
    node.done()
    if preset is None and not raw_surfaces and not raw_wires:
        preset = "reference-build"
    surfaces = tuple(_surface_entry(i, e) for i, e in enumerate(raw_surfaces))
    wires = tuple(_wire_entry(i, e) for i, e in enumerate(raw_wires))
    job = HeatloadJob(preset, surfaces, wires)
    echo: dict = {"surfaces": [dict(s) for s in surfaces],
                  "wires": [dict(w) for w in wires]}
    if preset is not None:
        echo["preset"] = preset
    return job, echo


@dataclass(frozen=True)
class ResonatorJob:
    self_inductance: float
    self_capacitance: float
    load_capacitance: float
    q_load: float
    reflected_power: float


def validate_resonator(tree: dict) -> tuple[ResonatorJob, dict]:
    node = _Node(tree)
    ind = node.take("self_inductance_h", float, 2e-6, where=_positive,
                    what="inductance must be positive")
    cap = node.take("self_capacitance_f", float, 8e-12, where=_positive,
                    what="capacitance must be positive")
    load = node.take("load_capacitance_f", float, 0.0, where=_non_negative,
                     what="load capacitance must be >= 0")
    q = node.take("q_load", float, 210.0, where=_positive,
                  what="loaded Q must be positive")
    refl = node.take("reflected_power", float, 0.36,
                     where=lambda v: 0 <= v < 1,
                     what="reflected fraction must sit in [0, 1)")
    node.done()
    job = ResonatorJob(ind, cap, load, q, refl)
    return job, {"self_inductance_h": ind, "self_capacitance_f": cap,
                 "load_capacitance_f": load, "q_load": q,
                 "reflected_power": refl}


@dataclass(frozen=True)
class CoolDemoJob:
    temperature: float       # K
    periods: int
    steps_per_period: int
    report_every: int
    rf_frequency_hz: float
    axial_frequency_hz: float
    transverse_frequencies_hz: tuple[float, float]


def validate_cool_demo(tree: dict) -> tuple[CoolDemoJob, dict]:
    node = _Node(tree)
    temp = node.take("temperature_k", float, 1.0, where=_positive,
                     what="temperature must be positive")
    periods = node.take("periods", int, 40_000, where=_positive,
                        what="need at least one period")
    steps = node.take("steps_per_period", int, 100,
                      where=lambda v: v >= 10,
                      what="need at least 10 steps per period")
    every = node.take("report_every", int, 500, where=_positive,
                      what="report interval must be positive")
    f_rf = node.take("rf_frequency_hz", float, 6e6, where=_positive,
                     what="frequency must be positive")
    f_ax = node.take("axial_frequency_hz", float, 150e3, where=_positive,
                     what="frequency must be positive")
    f_y = node.take("transverse_y_frequency_hz", float, 405e3,
                    where=_positive, what="frequency must be positive")
    f_z = node.take("transverse_z_frequency_hz", float, 435e3,
                    where=_positive, what="frequency must be positive")
    node.done()
    job = CoolDemoJob(temp, periods, steps, every, f_rf, f_ax, (f_y, f_z))
    return job, {"temperature_k": temp, "periods": periods,
                 "steps_per_period": steps, "report_every": every,
                 "rf_frequency_hz": f_rf, "axial_frequency_hz": f_ax,
                 "transverse_y_frequency_hz": f_y,
                 "transverse_z_frequency_hz": f_z}


VALIDATORS = {
    "equilibrium": validate_equilibrium,
    "optimize-beta": validate_optimize_beta,
    "scatter": validate_scatter,
    "flip-mc": validate_flip,
    "pressure": validate_pressure,
    "heatload": validate_heatload,
    "resonator": validate_resonator,
    "cool-demo": validate_cool_demo,
}
