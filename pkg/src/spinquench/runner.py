"""Trajectory, sweep, analysis and fit drivers behind the command line.

Every driver writes a ``manifest.json`` listing the configuration snapshot,
the per-trajectory seeds, the package version and every file it produced.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import analysis as an
from .config import AnalysisConfig, RunConfig, from_ini_text
from .dynamics import Couplings, NumericalAbort, evolve, trap_potential
from .field import ObservableMaps, SpinField, observables, read_maps, write_maps
from .params import derive_scales
from .rng import stream_key
from .seed import ground_state, seed_field
from .spectrum import default_k_max, predicted_domain_size, spectrum_table

SWEEP_RECORD_MS = 87.0
_SWEEP_STREAM = 0x5357


@dataclass
class TrajectoryResult:
    times: np.ndarray
    g0: np.ndarray  # G(0) of the analysis region per record time
    populations: np.ndarray  # (n_times, 3)
    maps: list = field(default_factory=list)  # raw ObservableMaps per record time
    g0_seed: float = math.nan  # G(0) of the seeded state before evolution
    longitudinal: np.ndarray | None = None  # longitudinal fraction per record time


def prepare(cfg: RunConfig):
    """Seeded initial field, couplings and trap potential for ``cfg``."""
    scales = derive_scales(cfg.params, cfg.convention)
    couplings = Couplings.from_scales(scales)
    f = ground_state(cfg.params, scales, cfg.grid, trap=cfg.trap, method=cfg.ground_method)
    f = seed_field(f, cfg.seed, scales.kinetic_coeff)
    potential = trap_potential(cfg.grid, cfg.params) if cfg.trap else None
    return f, scales, couplings, potential


def measure(maps: ObservableMaps, acfg: AnalysisConfig, need_domain=True) -> dict:
    """G(0), domain size and longitudinal fraction of one snapshot."""
    region = an.Region.central(maps.grid, acfg.region_um)
    img = maps.imaged(acfg.resolution_um)
    out = {
        "g0": an.g0(img, region, acfg.imaging_noise),
        "longitudinal_fraction": an.longitudinal_fraction(img, region),
        "l_d_um": math.nan,
    }
    if need_domain:
        c = an.correlation(img, region, acfg.imaging_noise)
        try:
            out["l_d_um"] = an.domain_size(c, acfg.profile)
        except an.AnalysisError:
            pass
    return out


def run_trajectory(cfg: RunConfig, keep_maps: bool = True) -> TrajectoryResult:
    f, _, couplings, potential = prepare(cfg)
    acfg = cfg.analysis
    seed_maps = observables(f, time_ms=None)
    g0_seed = measure(seed_maps, acfg, need_domain=False)["g0"]

    def recorder(t, fld: SpinField):
        m = observables(fld, cfg.params.magnetic_moment, time_ms=float(t))
        r = measure(m, acfg, need_domain=False)
        return (m if keep_maps else None, r["g0"], r["longitudinal_fraction"])

    rec = evolve(f, cfg.protocol, cfg.evolve, couplings, potential, recorder=recorder)
    return TrajectoryResult(
        times=np.asarray(rec.times, float),
        g0=np.asarray([s[1] for s in rec.snapshots], float),
        populations=rec.populations_array(),
        maps=[s[0] for s in rec.snapshots] if keep_maps else [],
        g0_seed=g0_seed,
        longitudinal=np.asarray([s[2] for s in rec.snapshots], float),
    )


# --------------------------------------------------------------------------
# manifests


def _stamp(t: float) -> str:
    # file-name safe time label, e.g. 87.0 -> "t0087p000"
    sign = "m" if t < 0 else ""
    whole, frac = divmod(round(abs(t) * 1000), 1000)
    return f"t{sign}{whole:04d}p{frac:03d}"


def _write_manifest(out_dir: Path, kind: str, cfg: RunConfig | None, seeds, outputs, started,
                    extra=None) -> Path:
    manifest = {
        "kind": kind,
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "config_ini": cfg.to_ini() if cfg else None,
        "config": cfg.snapshot() if cfg else None,
        "seeds": seeds,
        "outputs": sorted(str(Path(p).relative_to(out_dir)) for p in outputs),
        "started_unix": started,
        "wall_seconds": time.time() - started,
    }
    if extra:
        manifest.update(extra)
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=1))
    return path


def config_from_manifest(path) -> RunConfig:
    """Rebuild the exact configuration a manifest was produced with."""
    m = json.loads(Path(path).read_text())
    return from_ini_text(m["config_ini"])


# --------------------------------------------------------------------------
# drivers


def run_spectrum(q: float, q0: float, out_path, k_max: float | None = None, n_k: int = 4096,
                 kin: float | None = None, xi_um: float | None = None) -> Path:
    if k_max is None:
        if xi_um is None:
            raise ValueError("need k_max or a spin healing length")
        k_max = default_k_max(xi_um)
    kw = {} if kin is None else {"kin": kin}
    table = spectrum_table(q, q0, k_max, n_k, **kw)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(out_path)
    return out_path


def write_populations(path, res: TrajectoryResult):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_ms", "N_plus", "N_zero", "N_minus", "G0_center"])
        for t, (a, b, c), g in zip(res.times, res.populations, res.g0):
            w.writerow([repr(float(t)), repr(float(a)), repr(float(b)), repr(float(c)),
                        repr(float(g))])


def run_simulate(cfg: RunConfig, out_dir) -> Path:
    """One trajectory: maps at every record time, populations CSV, manifest."""
    started = time.time()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    res = run_trajectory(cfg, keep_maps=True)
    outputs = []
    for m in res.maps:
        outputs.extend(write_maps(out_dir / f"maps_{_stamp(m.time_ms)}", m,
                                  seed=cfg.seed.rng_seed))
    pop = out_dir / "populations.csv"
    write_populations(pop, res)
    outputs.append(pop)
    return _write_manifest(out_dir, "simulate", cfg, [cfg.seed.rng_seed], outputs, started,
                           {"g0_seed": res.g0_seed})


def trajectory_seed(base_seed: int, rep: int) -> int:
    """Deterministic 64-bit seed of repetition ``rep`` of a sweep."""
    a, b = stream_key(base_seed, _SWEEP_STREAM + (int(rep) << 16))
    return (b << 32) | a


def _sweep_cell(cfg: RunConfig, t_record: float):
    try:
        res = run_trajectory(cfg, keep_maps=True)
        m = measure(res.maps[-1], cfg.analysis)
        return {"ok": True, "g0": m["g0"], "l_d_um": m["l_d_um"],
                "longitudinal_fraction": m["longitudinal_fraction"], "error": ""}
    except (NumericalAbort, an.AnalysisError, ValueError) as e:
        return {"ok": False, "g0": math.nan, "l_d_um": math.nan,
                "longitudinal_fraction": math.nan, "error": f"{type(e).__name__}: {e}"}


def _sem(v):
    v = np.asarray([x for x in v if np.isfinite(x)], float)
    if v.size == 0:
        return math.nan, math.nan, 0
    sem = v.std(ddof=1) / math.sqrt(v.size) if v.size > 1 else math.nan
    return float(v.mean()), float(sem), int(v.size)


def default_jobs() -> int:
    return max(1, os.cpu_count() or 1)


def run_sweep(cfg: RunConfig, qf_values, repetitions: int, out_dir, jobs: int | None = None,
              base_seed: int | None = None, t_record: float = SWEEP_RECORD_MS) -> Path:
    """Ensemble over q_f values; the same repetition seeds are reused for every q_f.

    Writes ``trajectories.csv`` (one row per run) and ``sweep.csv`` (one row per
    q_f, in input order) with the ensemble mean and standard error of G(0) and
    l_d at ``t_record`` ms.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    started = time.time()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    base_seed = cfg.seed.rng_seed if base_seed is None else base_seed
    seeds = [trajectory_seed(base_seed, r) for r in range(repetitions)]
    cells = []
    for qf in qf_values:
        for r, s in enumerate(seeds):
            c = cfg.with_qf(float(qf)).with_seed(s)
            c.evolve = dataclasses.replace(c.evolve, record_times=(t_record,))
            cells.append((float(qf), r, s, c))
    jobs = jobs or default_jobs()
    if jobs == 1:
        results = [_sweep_cell(c, t_record) for *_, c in cells]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_cell, [c for *_, c in cells],
                                    [t_record] * len(cells)))

    traj = out_dir / "trajectories.csv"
    with open(traj, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["qf_hz", "rep", "seed", "ok", "G0", "l_d_um", "longitudinal_fraction",
                    "error"])
        for (qf, r, s, _), res in zip(cells, results):
            w.writerow([qf, r, s, int(res["ok"]), repr(res["g0"]), repr(res["l_d_um"]),
                        repr(res["longitudinal_fraction"]), res["error"]])

    scales = derive_scales(cfg.params, cfg.convention)
    summary = out_dir / "sweep.csv"
    rows = []
    for qf in qf_values:
        rs = [res for (q, *_), res in zip(cells, results) if q == float(qf)]
        g_mean, g_sem, _ = _sem([r["g0"] for r in rs])
        l_mean, l_sem, n_l = _sem([r["l_d_um"] for r in rs])
        try:
            pred = predicted_domain_size(float(qf), scales.q0_hz, scales.kinetic_coeff)
        except ValueError:
            pred = math.nan
        rows.append({
            "qf_hz": float(qf),
            "n_ok": sum(r["ok"] for r in rs),
            "n_failed": sum(not r["ok"] for r in rs),
            "G0_mean": g_mean,
            "G0_sem": g_sem,
            "l_d_mean_um": l_mean,
            "l_d_sem_um": l_sem,
            "n_l_d": n_l,
            "l_d_predicted_um": pred,
        })
    with open(summary, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for row in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    _write_manifest(out_dir, "sweep", cfg, seeds, [traj, summary], started,
                    {"qf_values": [float(q) for q in qf_values], "repetitions": repetitions,
                     "t_record_ms": t_record})
    return summary


def read_sweep(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        for k, v in r.items():
            r[k] = float(v)
    return rows


def run_analyze(dump_paths, out_dir, acfg: AnalysisConfig) -> list[Path]:
    """Correlation CSV (dx_um, dz_um, G) and JSON summary per map dump."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for p in dump_paths:
        p = Path(p)
        maps = read_maps(p).imaged(acfg.resolution_um)
        region = an.Region.central(maps.grid, acfg.region_um)
        c = an.correlation(maps, region, acfg.imaging_noise)
        try:
            ld = an.domain_size(c, acfg.profile)
        except an.AnalysisError:
            ld = None
        stem = out_dir / p.with_suffix("").name
        csv_path = stem.parent / (stem.name + "_corr.csv")
        dz, dx = np.meshgrid(c.lag_z, c.lag_x)
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["dx_um", "dz_um", "G"])
            for a, b, g in zip(dx.ravel(), dz.ravel(), c.G.ravel()):
                w.writerow([repr(float(a)), repr(float(b)), repr(float(g))])
        summary = {
            "source": str(p),
            "time_ms": maps.time_ms,
            "g0": c.g0,
            "l_d_um": ld,
            "profile": acfg.profile,
            "region": {"ix": [region.ix0, region.ix1], "iz": [region.iz0, region.iz1],
                       "size_um": list(region.size_um(maps.grid))},
            "resolution_um": acfg.resolution_um,
            "longitudinal_fraction": an.longitudinal_fraction(maps, region),
        }
        json_path = stem.parent / (stem.name + "_summary.json")
        json_path.write_text(json.dumps(summary, indent=1))
        written += [csv_path, json_path]
    return written


def read_series(path):
    """(t, G0, sigma or None) from a CSV with t_ms and G0 columns (G0_center also accepted)."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise an.AnalysisError(f"{path}: empty series")
    keys = rows[0].keys()
    gkey = next((k for k in ("G0", "G0_center", "G0_mean") if k in keys), None)
    if "t_ms" not in keys or gkey is None:
        raise an.AnalysisError(f"{path}: need t_ms and G0 columns")
    skey = next((k for k in ("sigma", "G0_sem") if k in keys), None)
    t = np.array([float(r["t_ms"]) for r in rows])
    g = np.array([float(r[gkey]) for r in rows])
    s = np.array([float(r[skey]) for r in rows]) if skey else None
    return t, g, s


def run_fit(series_path, out_path, t_m: float = an.T_M, t_min: float = 0.0,
            t_max: float = an.LINEAR_REGIME_MAX_MS, weighted: bool = True) -> Path:
    t, g, s = read_series(series_path)
    fit = an.fit_growth(t, g, t_m=t_m, sigma=s if weighted else None, t_min=t_min, t_max=t_max)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(fit.to_dict(), indent=1))
    return out_path
