"""Command line: spectrum, simulate, sweep, analyze, fit.

Exit codes: 0 success, 1 analysis/data error, 2 configuration or usage error,
3 numerical abort.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from . import runner
from .analysis import LINEAR_REGIME_MAX_MS, T_M, AnalysisError
from .config import PRESETS, ConfigError, RunConfig, load, preset
from .dynamics import NumericalAbort
from .params import derive_scales

log = logging.getLogger("spinquench")

EXIT_OK, EXIT_DATA, EXIT_CONFIG, EXIT_ABORT = 0, 1, 2, 3
OUT_ENV = "SPINQUENCH_OUT_DIR"


def _global_flags(p: argparse.ArgumentParser, suppress: bool):
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", type=Path, default=d, help="INI run configuration")
    p.add_argument("--preset", choices=PRESETS, default=d,
                   help="starting configuration the INI file overrides (default uniform)")
    p.add_argument("--out-dir", type=Path, default=d,
                   help=f"output root (default ${OUT_ENV} or ./spinquench-out)")
    p.add_argument("--jobs", type=int, default=d, help="worker processes (default: all cores)")
    p.add_argument("--seed", type=int, default=d, help="override [seed] rng_seed")
    p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS if suppress
                   else False)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spinquench", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    _global_flags(ap, suppress=False)
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)

    sp = sub.add_parser("spectrum", parents=[common], help="tabulate the amplifier spectrum")
    sp.add_argument("--q0-hz", type=float, required=True)
    sp.add_argument("--q-hz", type=float, required=True)
    sp.add_argument("--k-max", type=float, help="1/um (default 4 / spin healing length)")
    sp.add_argument("--n-k", type=int, default=4096)
    sp.add_argument("--out", type=Path, help="CSV path (default <out-dir>/spectrum.csv)")

    sm = sub.add_parser("simulate", parents=[common], help="run one trajectory")
    sm.add_argument("--qf-hz", type=float)
    sm.add_argument("--record-ms", type=float, nargs="+")

    sw = sub.add_parser("sweep", parents=[common], help="ensemble sweep over q_f")
    sw.add_argument("--qf-hz", type=float, nargs="+", default=[0.0, 2.0, 4.0, 6.0])
    sw.add_argument("--reps", type=int, default=5)
    sw.add_argument("--t-record", type=float, default=runner.SWEEP_RECORD_MS,
                    help="amplification time (ms) at which G(0) and l_d are measured")

    an = sub.add_parser("analyze", parents=[common], help="correlation of map dumps")
    an.add_argument("dumps", type=Path, nargs="+", help=".bin or .json map dumps")
    _analysis_flags(an)

    ft = sub.add_parser("fit", parents=[common], help="growth fit of a G(0) series CSV")
    ft.add_argument("series", type=Path)
    ft.add_argument("--t-m", type=float, default=T_M)
    ft.add_argument("--t-min", type=float, default=0.0)
    ft.add_argument("--t-max", type=float, default=LINEAR_REGIME_MAX_MS)
    ft.add_argument("--unweighted", action="store_true")
    ft.add_argument("--out", type=Path, help="JSON path (default <out-dir>/fit.json)")
    return ap


def _analysis_flags(p):
    p.add_argument("--region-um", type=float, nargs=2)
    p.add_argument("--resolution-um", type=float)
    p.add_argument("--imaging-noise", type=float)
    p.add_argument("--profile", choices=("long-axis", "radial"))


def _out_dir(args) -> Path:
    if args.out_dir is not None:
        return args.out_dir
    return Path(os.environ.get(OUT_ENV, "spinquench-out"))


def _config(args) -> RunConfig:
    base = preset(args.preset or "uniform")
    cfg = load(args.config, base) if args.config else base
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _cmd_spectrum(args):
    k_max = args.k_max
    xi = None
    if k_max is None:
        cfg = _config(args)
        xi = derive_scales(cfg.params, cfg.convention).spin_healing_length_um
    out = args.out or _out_dir(args) / "spectrum.csv"
    path = runner.run_spectrum(args.q_hz, args.q0_hz, out, k_max=k_max, n_k=args.n_k, xi_um=xi)
    print(path)


def _cmd_simulate(args):
    cfg = _config(args)
    if args.qf_hz is not None:
        cfg = cfg.with_qf(args.qf_hz)
    if args.record_ms:
        cfg.evolve = dataclasses.replace(cfg.evolve, record_times=tuple(sorted(args.record_ms)))
    out = _out_dir(args) / "simulate"
    print(runner.run_simulate(cfg, out))


def _cmd_sweep(args):
    cfg = _config(args)
    out = _out_dir(args) / "sweep"
    path = runner.run_sweep(cfg, args.qf_hz, args.reps, out, jobs=args.jobs,
                            t_record=args.t_record)
    print(path)


def _cmd_analyze(args):
    cfg = _config(args)
    a = cfg.analysis
    over = {}
    if args.region_um:
        over["region_um"] = tuple(args.region_um)
    if args.resolution_um is not None:
        over["resolution_um"] = args.resolution_um or None
    if args.imaging_noise is not None:
        over["imaging_noise"] = args.imaging_noise
    if args.profile:
        over["profile"] = args.profile
    a = dataclasses.replace(a, **over)
    for p in runner.run_analyze(args.dumps, _out_dir(args) / "analyze", a):
        print(p)


def _cmd_fit(args):
    out = args.out or _out_dir(args) / "fit.json"
    path = runner.run_fit(args.series, out, t_m=args.t_m, t_min=args.t_min, t_max=args.t_max,
                          weighted=not args.unweighted)
    fit = json.loads(Path(path).read_text())
    print(f"g0_tm={fit['g0_tm']:.6g} tau_ms={fit['tau_ms']:.6g}")
    print(path)


COMMANDS = {
    "spectrum": _cmd_spectrum,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "analyze": _cmd_analyze,
    "fit": _cmd_fit,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except ConfigError as e:
        for err in e.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalAbort as e:
        print(f"numerical abort: {e}", file=sys.stderr)
        return EXIT_ABORT
    except AnalysisError as e:
        print(f"analysis error: {e}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as e:
        print(f"missing file: {e}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
