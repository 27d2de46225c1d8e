"""INI run configuration and named presets.

Sections and keys (all optional, defaults in brackets)::

    [params]   mass_kg, delta_a_bohr [-1.4], abar_bohr [100.87], n3d_cm3 [2.6e14],
               n2d_um2 (peak column density; Thomas-Fermi estimate if absent),
               density_convention [user], n2d_eff_q0_hz [15], atom_number [2e6],
               trap_hz_x [39], trap_hz_y [440], trap_hz_z [4.2],
               static_coeff_hz_per_g2 [70]
    [grid]     nx [64], nz [512], dx_um [0.5], dz_um [0.5]
    [seed]     mode [vacuum], rng_seed [0], n_pm [0], k_single ["0 0"], amp_single [0],
               scale [1], basis [bare], q_prep_hz
    [evolve]   dt_ms [0.01], ramp_ms [5], hold_ms [0], qi_hz [30], qf_hz [2],
               record_ms (list), frozen_density [false], trap [false],
               ramp_shape [linear], q_offset_hz [0], ground_state [thomas-fermi]
    [analysis] region_um ["16 124"], resolution_um [1; 0 disables], imaging_noise [0], t_m_ms [77],
               fit_t_min_ms [0], fit_t_max_ms [90], profile [long-axis]

Lists are whitespace or comma separated.
"""

from __future__ import annotations

import configparser
import dataclasses
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import DEFAULT_REGION, LINEAR_REGIME_MAX_MS, T_M
from .dynamics import EvolutionConfig, QuenchProtocol
from .field import Grid2D
from .params import BOHR, DensityConvention, PhysicalParams, derive_scales
from .seed import SeedSpec

TWO_PI = 2.0 * math.pi


class ConfigError(ValueError):
    """Invalid or unparseable configuration; ``errors`` lists 'section.key: reason'."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class AnalysisConfig:
    region_um: tuple[float, float] = DEFAULT_REGION
    resolution_um: float | None = 1.0  # rms width of the imaging point-spread function
    imaging_noise: float = 0.0
    t_m: float = T_M
    fit_t_min: float = 0.0
    fit_t_max: float = LINEAR_REGIME_MAX_MS
    profile: str = "long-axis"


@dataclass
class RunConfig:
    params: PhysicalParams = field(default_factory=PhysicalParams)
    convention: DensityConvention = DensityConvention.USER
    static_coeff: float = 70.0
    grid: Grid2D = field(default_factory=lambda: Grid2D(64, 512, 0.5, 0.5))
    seed: SeedSpec = field(default_factory=SeedSpec)
    protocol: QuenchProtocol = field(default_factory=lambda: QuenchProtocol(30.0, 2.0, 5.0))
    evolve: EvolutionConfig = field(default_factory=lambda: EvolutionConfig(trap=False))
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    ground_method: str = "thomas-fermi"

    @property
    def trap(self) -> bool:
        return self.evolve.trap

    def with_seed(self, rng_seed: int) -> "RunConfig":
        return dataclasses.replace(self, seed=dataclasses.replace(self.seed, rng_seed=rng_seed))

    def with_qf(self, qf: float) -> "RunConfig":
        return dataclasses.replace(self, protocol=dataclasses.replace(self.protocol, q_final=qf))

    def to_ini(self) -> str:
        return _dump(self)

    def snapshot(self) -> dict:
        cp = configparser.ConfigParser()
        cp.read_string(self.to_ini())
        return {s: dict(cp[s]) for s in cp.sections()}


# --------------------------------------------------------------------------
# presets

BENCHMARK_RECORD_MS = tuple(float(t) for t in range(27, 158, 10))


def preset(name: str) -> RunConfig:
    """Named starting configurations.

    ``uniform``: trap off, periodic 64x512 box at 0.5 um (the default).
    ``trapped``: harmonic trap, 64x512 at 1.0 x 0.75 um so the Thomas-Fermi
    cloud fits with vacuum padding.
    ``benchmark``: ``uniform`` with records every 10 ms from 27 to 157 ms.
    """
    if name == "uniform":
        return RunConfig()
    if name == "benchmark":
        cfg = RunConfig()
        cfg.evolve = dataclasses.replace(cfg.evolve, record_times=BENCHMARK_RECORD_MS)
        return cfg
    if name == "trapped":
        cfg = RunConfig(grid=Grid2D(64, 512, 1.0, 0.75))
        cfg.evolve = dataclasses.replace(cfg.evolve, trap=True, record_times=BENCHMARK_RECORD_MS)
        return cfg
    raise ConfigError([f"preset: unknown preset {name!r} (uniform, benchmark, trapped)"])


PRESETS = ("uniform", "benchmark", "trapped")


# --------------------------------------------------------------------------
# parsing


def _floats(s: str) -> list[float]:
    s = s.strip()
    if not s:
        return []
    return [float(v) for v in re.split(r"[,\s]+", s)]


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


_KEYS = {
    "params": {
        "mass_kg": float, "delta_a_bohr": float, "abar_bohr": float, "n3d_cm3": float,
        "n2d_um2": float, "density_convention": str, "n2d_eff_q0_hz": float,
        "atom_number": float, "trap_hz_x": float, "trap_hz_y": float, "trap_hz_z": float,
        "static_coeff_hz_per_g2": float,
    },
    "grid": {"nx": int, "nz": int, "dx_um": float, "dz_um": float},
    "seed": {
        "mode": str, "rng_seed": int, "n_pm": float, "k_single": _floats,
        "amp_single": float, "scale": float, "basis": str, "q_prep_hz": float,
    },
    "evolve": {
        "dt_ms": float, "ramp_ms": float, "hold_ms": float, "qi_hz": float, "qf_hz": float,
        "record_ms": _floats, "frozen_density": _bool, "trap": _bool, "ramp_shape": str,
        "q_offset_hz": float, "ground_state": str,
    },
    "analysis": {
        "region_um": _floats, "resolution_um": float, "imaging_noise": float,
        "t_m_ms": float, "fit_t_min_ms": float, "fit_t_max_ms": float, "profile": str,
    },
}


def _read(cp: configparser.ConfigParser) -> tuple[dict, list]:
    vals, errors = {}, []
    for sec in cp.sections():
        if sec not in _KEYS:
            errors.append(f"{sec}: unknown section")
            continue
        for key, raw in cp[sec].items():
            conv = _KEYS[sec].get(key)
            if conv is None:
                errors.append(f"{sec}.{key}: unknown key")
                continue
            try:
                vals[(sec, key)] = conv(raw)
            except ValueError as e:
                errors.append(f"{sec}.{key}: {e}")
    return vals, errors


def from_ini_text(text: str, base: RunConfig | None = None) -> RunConfig:
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError([f"syntax: {e}"]) from None
    vals, errors = _read(cp)
    if errors:
        raise ConfigError(errors)
    return _build(vals, base or RunConfig())


def load(path, base: RunConfig | None = None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError([f"{path}: {e.strerror}"]) from None
    return from_ini_text(text, base)


def _build(v: dict, base: RunConfig) -> RunConfig:
    errors = []

    def get(sec, key, default):
        return v.get((sec, key), default)

    def attempt(label, fn):
        try:
            return fn()
        except (ValueError, TypeError) as e:
            errors.append(f"{label}: {e}")
            return None

    p0 = base.params
    wx, wy, wz = (w / TWO_PI for w in p0.trap_frequencies)
    n2d = get("params", "n2d_um2", None)
    params = attempt("params", lambda: PhysicalParams(
        atomic_mass=get("params", "mass_kg", p0.atomic_mass),
        delta_a=get("params", "delta_a_bohr", p0.delta_a / BOHR) * BOHR,
        abar=get("params", "abar_bohr", p0.abar / BOHR) * BOHR,
        peak_density_3d=get("params", "n3d_cm3", p0.peak_density_3d * 1e-6) * 1e6,
        column_density_2d_peak=n2d * 1e12 if n2d is not None else p0.column_density_2d_peak,
        atom_number=get("params", "atom_number", p0.atom_number),
        trap_frequencies=(
            TWO_PI * get("params", "trap_hz_x", wx),
            TWO_PI * get("params", "trap_hz_y", wy),
            TWO_PI * get("params", "trap_hz_z", wz),
        ),
        q0_user_hz=get("params", "n2d_eff_q0_hz", p0.q0_user_hz),
    ))
    convention = attempt("params.density_convention", lambda: DensityConvention(
        get("params", "density_convention", base.convention.value)))
    static_coeff = get("params", "static_coeff_hz_per_g2", base.static_coeff)

    g0 = base.grid
    grid = attempt("grid", lambda: Grid2D(
        get("grid", "nx", g0.nx), get("grid", "nz", g0.nz),
        get("grid", "dx_um", g0.dx), get("grid", "dz_um", g0.dz)))

    s0 = base.seed
    basis = get("seed", "basis", s0.basis)
    q0_seed = s0.q0
    if basis == "bogoliubov" and params is not None and convention is not None:
        q0_seed = derive_scales(params, convention).q0_hz
    k_single = get("seed", "k_single", list(s0.k_single))
    if len(k_single) != 2:
        errors.append("seed.k_single: expected two numbers (kx kz)")
        k_single = s0.k_single
    seed = attempt("seed", lambda: SeedSpec(
        mode=get("seed", "mode", s0.mode),
        rng_seed=get("seed", "rng_seed", s0.rng_seed),
        thermal_population=get("seed", "n_pm", s0.thermal_population),
        k_single=tuple(k_single),
        amp_single=get("seed", "amp_single", s0.amp_single),
        single_mode_q=s0.single_mode_q,
        scale=get("seed", "scale", s0.scale),
        basis=basis,
        q_prep=get("seed", "q_prep_hz", s0.q_prep),
        q0=q0_seed,
    ))

    pr = base.protocol
    protocol = attempt("evolve", lambda: QuenchProtocol(
        q_initial=get("evolve", "qi_hz", pr.q_initial),
        q_final=get("evolve", "qf_hz", pr.q_final),
        ramp_duration=get("evolve", "ramp_ms", pr.ramp_duration),
        hold_duration=get("evolve", "hold_ms", pr.hold_duration),
        shape=get("evolve", "ramp_shape", pr.shape),
        q_offset=get("evolve", "q_offset_hz", pr.q_offset),
    ))
    e0 = base.evolve
    evolve = attempt("evolve", lambda: dataclasses.replace(
        e0,
        dt=get("evolve", "dt_ms", e0.dt),
        record_times=tuple(get("evolve", "record_ms", list(e0.record_times))),
        frozen_density=get("evolve", "frozen_density", e0.frozen_density),
        trap=get("evolve", "trap", e0.trap),
    ))
    ground = get("evolve", "ground_state", base.ground_method)
    if ground not in ("thomas-fermi", "imaginary-time"):
        errors.append(f"evolve.ground_state: unknown method {ground!r}")

    a0 = base.analysis
    region = get("analysis", "region_um", list(a0.region_um))
    if len(region) != 2 or min(region) <= 0:
        errors.append("analysis.region_um: expected two positive numbers (x z)")
        region = a0.region_um
    profile = get("analysis", "profile", a0.profile)
    if profile not in ("long-axis", "radial"):
        errors.append(f"analysis.profile: unknown profile {profile!r}")
    res = get("analysis", "resolution_um", a0.resolution_um)
    if res is not None and res < 0:
        errors.append("analysis.resolution_um: must be non-negative")
    analysis = AnalysisConfig(
        region_um=tuple(region),
        resolution_um=res or None,
        imaging_noise=get("analysis", "imaging_noise", a0.imaging_noise),
        t_m=get("analysis", "t_m_ms", a0.t_m),
        fit_t_min=get("analysis", "fit_t_min_ms", a0.fit_t_min),
        fit_t_max=get("analysis", "fit_t_max_ms", a0.fit_t_max),
        profile=profile,
    )
    if errors:
        raise ConfigError(errors)
    return RunConfig(params, convention, static_coeff, grid, seed, protocol, evolve, analysis,
                     ground)


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (list, tuple, np.ndarray)):
        return " ".join(_fmt(v) for v in x)
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _dump(c: RunConfig) -> str:
    p = c.params
    wx, wy, wz = (w / TWO_PI for w in p.trap_frequencies)
    sec = {
        "params": {
            "mass_kg": p.atomic_mass,
            "delta_a_bohr": p.delta_a / BOHR,
            "abar_bohr": p.abar / BOHR,
            "n3d_cm3": p.peak_density_3d * 1e-6,
            "density_convention": c.convention.value,
            "n2d_eff_q0_hz": p.q0_user_hz,
            "atom_number": p.atom_number,
            "trap_hz_x": wx,
            "trap_hz_y": wy,
            "trap_hz_z": wz,
            "static_coeff_hz_per_g2": c.static_coeff,
        },
        "grid": {"nx": c.grid.nx, "nz": c.grid.nz, "dx_um": c.grid.dx, "dz_um": c.grid.dz},
        "seed": {
            "mode": c.seed.mode,
            "rng_seed": c.seed.rng_seed,
            "n_pm": c.seed.thermal_population,
            "k_single": c.seed.k_single,
            "amp_single": c.seed.amp_single,
            "scale": c.seed.scale,
            "basis": c.seed.basis,
        },
        "evolve": {
            "dt_ms": c.evolve.dt,
            "ramp_ms": c.protocol.ramp_duration,
            "hold_ms": c.protocol.hold_duration,
            "qi_hz": c.protocol.q_initial,
            "qf_hz": c.protocol.q_final,
            "record_ms": list(c.evolve.record_times),
            "frozen_density": c.evolve.frozen_density,
            "trap": c.evolve.trap,
            "ramp_shape": c.protocol.shape,
            "q_offset_hz": c.protocol.q_offset,
            "ground_state": c.ground_method,
        },
        "analysis": {
            "region_um": c.analysis.region_um,
            "resolution_um": c.analysis.resolution_um or 0.0,
            "imaging_noise": c.analysis.imaging_noise,
            "t_m_ms": c.analysis.t_m,
            "fit_t_min_ms": c.analysis.fit_t_min,
            "fit_t_max_ms": c.analysis.fit_t_max,
            "profile": c.analysis.profile,
        },
    }
    if p.column_density_2d_peak is not None:
        sec["params"]["n2d_um2"] = p.column_density_2d_peak * 1e-12
    if c.seed.q_prep is not None:
        sec["seed"]["q_prep_hz"] = c.seed.q_prep
    lines = []
    for name, kv in sec.items():
        lines.append(f"[{name}]")
        lines.extend(f"{k} = {_fmt(val)}" for k, val in kv.items())
        lines.append("")
    return "\n".join(lines)
