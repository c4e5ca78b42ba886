"""Command-line interface.

Exit codes: 0 success, 2 usage error (argparse), 3 configuration error,
4 computation error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .config import ConfigError, parse_config
from .csvio import write_csv
from .drive import ContinuousWave, PhotonPulse
from .ensemble import EnsembleConfig, run_ensemble, sweep, sweep_rows, SWEEP_COLUMNS
from .experiments import (
    CalibrationError,
    DEFAULT_CALIBRATION_FACTOR,
    ExperimentSpec,
    JUNCTIONS,
    UnknownExperimentError,
    calibrate_noise,
    run_experiment,
)
from .metrics import ThresholdNotFoundError, kc_index, nep_chain, photon_threshold, optimize_bias
from .physics import InvalidParameterError, derive_scales

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_COMPUTE = 4

OUT_ROOT_ENV = "CBJJSIM_OUT_ROOT"


def _out_dir(args) -> Path:
    if args.out:
        return Path(args.out)
    return Path(os.environ.get(OUT_ROOT_ENV, "runs"))


def _load_config(args):
    text = Path(args.config).read_text(encoding="utf-8")
    doc = parse_config(text)
    if args.seed is not None:
        doc.operating["seed"] = args.seed
    if args.calibration is not None:
        doc.noise["calibration_factor"] = args.calibration
    return doc


def _context(doc):
    params = doc.junction_params()
    scales = derive_scales(params)
    op = doc.operating_point()
    sim = doc.sim_config()
    noise = doc.noise_model()
    drive = doc.drive_signal(params, scales)
    return params, scales, op, sim, noise, drive


def _cmd_simulate(args) -> int:
    doc = _load_config(args)
    params, scales, op, sim, noise, drive = _context(doc)
    cfg = EnsembleConfig(op=op, noise=noise, drive=drive, sim=sim,
                         n_runs=args.runs, master_seed=doc.seed)
    stats = run_ensemble(params, scales, cfg)
    out = _out_dir(args)
    rows = [(k, t) for k, t in enumerate(stats.times)]
    path = write_csv(out / "simulate" / "times.csv", ("sample_index", "tau_switch"), rows)
    print(
        f"simulate: n_runs={stats.n_runs} n_switched={stats.n_switched} "
        f"n_censored={stats.n_censored} mean_gamma={stats.mean_gamma:.6g} "
        f"sem_sq_gamma={stats.sem_sq_gamma:.6g} -> {path}"
    )
    return EXIT_OK


def _parse_grid(spec: str):
    if ":" in spec:
        a, b, step = (float(x) for x in spec.split(":"))
        n = int(round((b - a) / step)) + 1
        return [a + k * step for k in range(n)]
    return [float(x) for x in spec.split(",")]


def _cmd_sweep(args) -> int:
    doc = _load_config(args)
    params, scales, op, sim, noise, drive = _context(doc)
    cfg = EnsembleConfig(op=op, noise=noise, drive=drive, sim=sim,
                         n_runs=args.runs, master_seed=doc.seed)
    grid = _parse_grid(args.grid)
    results = sweep(params, scales, cfg, args.axis, grid)
    path = write_csv(_out_dir(args) / "sweep" / f"{args.axis}.csv", SWEEP_COLUMNS, sweep_rows(results))
    last = results[-1][1]
    print(f"sweep: axis={args.axis} points={len(results)} last n_switched={last.n_switched} -> {path}")
    return EXIT_OK


def _cmd_kc(args) -> int:
    doc = _load_config(args)
    params, scales, op, sim, noise, drive = _context(doc)
    if drive is None:
        raise InvalidParameterError("kc requires a drive section (cw or pulse) in the config")
    base = EnsembleConfig(op=op, noise=noise, drive=None, sim=sim,
                          n_runs=args.runs, master_seed=doc.seed)
    stats_off = run_ensemble(params, scales, base)
    stats_on = run_ensemble(params, scales, replace(base, drive=drive))
    res = kc_index(stats_off, stats_on)
    print(
        f"kc: d_kc={res.d_kc:.6g} censored_fractions="
        f"({res.censored_fractions[0]:.3f}, {res.censored_fractions[1]:.3f}) "
        f"means=({stats_off.mean_gamma:.6g}, {stats_on.mean_gamma:.6g})"
    )
    return EXIT_OK


def _cmd_nep(args) -> int:
    doc = _load_config(args)
    params, scales, op, sim, noise, drive = _context(doc)
    if not isinstance(drive, ContinuousWave):
        raise InvalidParameterError("nep requires a cw drive section as the probe")
    report = nep_chain(params, scales, op, noise, drive, sim, n_runs=args.runs, master_seed=doc.seed)
    out = _out_dir(args) / "nep"
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "S_v_V_per_sqrtHz": report.S_v,
        "delta_V_volts": report.delta_V,
        "P_in_W": report.P_in,
        "S_V_per_W": report.S,
        "NEP_W_per_sqrtHz": report.NEP,
        "I_min_A": report.I_min,
        "min_d_kc": report.min_d_kc,
        "f_probe_Hz": report.f_probe,
    }
    (out / "report.json").write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    print(
        f"nep: NEP={report.NEP:.6g} W/sqrtHz I_min={report.I_min:.6g} A "
        f"min_d_kc={report.min_d_kc:.6g} delta_V={report.delta_V:.6g} V -> {out / 'report.json'}"
    )
    return EXIT_OK


def _cmd_photon_threshold(args) -> int:
    doc = _load_config(args)
    params, scales, op, sim, noise, drive = _context(doc)
    if not isinstance(drive, PhotonPulse):
        raise InvalidParameterError("photon-threshold requires a pulse drive section")
    grid = list(range(args.n_start, args.n_max + 1, args.n_step))
    n_min, curve = photon_threshold(
        params, scales, op, noise, drive, args.min_dkc, grid, sim,
        n_runs=args.runs, master_seed=doc.seed,
    )
    path = write_csv(_out_dir(args) / "photon_threshold" / "curve.csv",
                     ("photons", "d_kc"), curve)
    print(f"photon-threshold: N_min={n_min} threshold={args.min_dkc} -> {path}")
    return EXIT_OK


def _cmd_optimize_bias(args) -> int:
    doc = _load_config(args)
    params, scales, op, sim, noise, drive = _context(doc)
    if not isinstance(drive, PhotonPulse):
        raise InvalidParameterError("optimize-bias requires a pulse drive section")
    bias_grid = _parse_grid(args.bias_grid)
    n_grid = list(range(args.n_start, args.n_max + 1, args.n_step))
    best, results = optimize_bias(
        params, scales, op, noise, drive, args.min_dkc, bias_grid, n_grid, sim,
        n_runs=args.runs, master_seed=doc.seed,
    )
    rows = []
    for i_b, n_min, curve in results:
        for N, d in curve:
            rows.append((i_b, N, d, -1 if n_min is None else n_min))
    path = write_csv(_out_dir(args) / "optimize_bias" / "curves.csv",
                     ("i_b", "photons", "d_kc", "n_min"), rows)
    print(f"optimize-bias: best_i_b={best} -> {path}")
    return EXIT_OK


def _cmd_reproduce(args) -> int:
    spec = ExperimentSpec(id=args.experiment, junction=args.junction, master_seed=args.seed)
    manifests = run_experiment(spec, _out_dir(args))
    print(f"reproduce: {args.experiment} wrote {len(manifests)} manifest(s) under {_out_dir(args)}")
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    factor = calibrate_noise(junction=args.junction or "JJ1")
    print(
        f"calibrate: factor={factor:.6g} (frozen default {DEFAULT_CALIBRATION_FACTOR}); "
        f"pass --calibration {factor:.6g} to override configs"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cbjjsim", description=__doc__)
    p.add_argument("--version", action="version", version=f"cbjjsim {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        if config_required:
            sp.add_argument("--config", required=True, help="path to the INI configuration")
        sp.add_argument("--out", help=f"output directory (default ${OUT_ROOT_ENV} or ./runs)")
        sp.add_argument("--seed", type=int, default=None, help="override operating.seed")
        sp.add_argument("--threads", type=int, default=None, help="worker thread count")
        sp.add_argument("--calibration", type=float, default=None,
                        help="override noise calibration factor")
        sp.add_argument("--runs", type=int, default=1000, help="ensemble size")

    sp = sub.add_parser("simulate", help="run one ensemble and write switching times")
    common(sp)
    sp.set_defaults(func=_cmd_simulate)

    sp = sub.add_parser("sweep", help="sweep an axis, one ensemble per grid point")
    common(sp)
    sp.add_argument("--axis", required=True,
                    choices=("bias", "temperature", "photon_number", "drive_amplitude"))
    sp.add_argument("--grid", required=True, help="a:b:step or comma-separated values")
    sp.set_defaults(func=_cmd_sweep)

    sp = sub.add_parser("kc", help="discriminability of the configured drive vs no drive")
    common(sp)
    sp.set_defaults(func=_cmd_kc)

    sp = sub.add_parser("nep", help="noise-equivalent-power chain")
    common(sp)
    sp.set_defaults(func=_cmd_nep)

    sp = sub.add_parser("photon-threshold", help="smallest detectable photon number")
    common(sp)
    sp.add_argument("--min-dkc", type=float, required=True)
    sp.add_argument("--n-start", type=int, default=1)
    sp.add_argument("--n-max", type=int, default=200)
    sp.add_argument("--n-step", type=int, default=1)
    sp.set_defaults(func=_cmd_photon_threshold)

    sp = sub.add_parser("optimize-bias", help="minimize detectable photons over bias")
    common(sp)
    sp.add_argument("--min-dkc", type=float, required=True)
    sp.add_argument("--bias-grid", required=True)
    sp.add_argument("--n-start", type=int, default=1)
    sp.add_argument("--n-max", type=int, default=200)
    sp.add_argument("--n-step", type=int, default=1)
    sp.set_defaults(func=_cmd_optimize_bias)

    sp = sub.add_parser("reproduce", help="run a scripted figure/table experiment")
    sp.add_argument("experiment", help="fig3..fig11, table1, table2")
    sp.add_argument("--junction", default=None, choices=sorted(JUNCTIONS), help="restrict to one junction")
    sp.add_argument("--seed", type=int, default=42)
    sp.add_argument("--out", help=f"output directory (default ${OUT_ROOT_ENV} or ./runs)")
    sp.add_argument("--threads", type=int, default=None)
    sp.set_defaults(func=_cmd_reproduce)

    sp = sub.add_parser("calibrate", help="fit the noise calibration factor")
    sp.add_argument("--junction", default="JJ1", choices=sorted(JUNCTIONS))
    sp.add_argument("--out", default=None)
    sp.add_argument("--threads", type=int, default=None)
    sp.set_defaults(func=_cmd_calibrate)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", None):
        import numba

        numba.set_num_threads(args.threads)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvalidParameterError, UnknownExperimentError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CalibrationError, ThresholdNotFoundError) as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"computation error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    raise SystemExit(main())
