"""Command-line front end (``fms``).

Subcommands write their results into an output directory together with a
single ``manifest.json``.  Exit codes: 0 ok, 2 usage or config error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import run_summary
from .analytic import gain_from_damping_time
from .bloch import integrate, read_series_csv
from .core import ConfigError, ExperimentConfig, load_config, save_config, validate_config
from .integrators import IntegrationError
from .metrology import (AxionParams, ResponseModel, SensitivityCurve, axion_reach, noise_floor,
                        write_axion_csv)
from .scenarios import PRESETS
from .spectral import Peak, amplitude_spectrum, find_peaks, fwhm, psd

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3

# scan parameters that are not config fields
DERIVED_PARAMS = ("td",)


class UsageError(Exception):
    pass


def _emit(args, payload: dict):
    if args.format == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
        return
    width = max(len(k) for k in payload) if payload else 0
    for k, v in payload.items():
        print(f"{k:<{width}}  {v}")


def write_manifest(out_dir: Path, command: str, config_path, inputs, outputs, rng_seed,
                   wall_time: float, extra: dict | None = None) -> Path:
    manifest = {
        "command": command,
        "config_path": None if config_path is None else str(config_path),
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "rng_seed": rng_seed,
        "version": __version__,
        "wall_time_s": round(wall_time, 3),
    }
    if extra:
        manifest.update(extra)
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _load(path) -> ExperimentConfig:
    try:
        cfg = load_config(path)
    except ConfigError as exc:
        raise UsageError(str(exc)) from exc
    except TypeError as exc:
        raise UsageError(f"bad config {path}: {exc}") from exc
    problems = validate_config(cfg)
    if problems:
        raise UsageError("invalid config:\n  " + "\n  ".join(problems))
    return cfg


def _run_one(cfg: ExperimentConfig, out_dir: Path, config_path=None, command="simulate"):
    t_start = time.perf_counter()
    out_dir.mkdir(parents=True, exist_ok=True)
    result = integrate(cfg)
    csv_path = result.to_csv(out_dir / "run.csv")
    cfg_copy = out_dir / "config.json"
    save_config(cfg, cfg_copy)
    write_manifest(out_dir, command, config_path, [] if config_path is None else [config_path],
                   [csv_path.name, csv_path.with_suffix(".json").name, cfg_copy.name],
                   cfg.rng_seed, time.perf_counter() - t_start)
    return result


def cmd_simulate(args) -> int:
    if args.preset:
        cfg = PRESETS[args.preset]()
    elif args.config:
        cfg = _load(args.config)
    else:
        raise UsageError("give a config file or --preset")
    out = Path(args.out)
    result = _run_one(cfg, out, args.config)
    fs = result.final_state()
    _emit(args, {"output": str(out / "run.csv"), "samples": len(result.times),
                 "final_px": fs.px, "final_py": fs.py, "final_pz": fs.pz,
                 "steps": result.meta["integrator"]["steps"]})
    return EXIT_OK


def _peak_table(series, spec, threshold):
    """Peaks of ``spec`` with FWHM taken on the rectangular-window power spectrum."""
    lw_spec = psd(series, "periodogram", "rect", pad=8)
    peaks = find_peaks(spec, threshold, min_separation=2.0 * spec.resolution_hz)
    rows = []
    for pk in peaks:
        j = lw_spec.local_max(pk.freq, lw_spec.resolution_hz)[0]
        ref = Peak(j, lw_spec.value_at(j), index=lw_spec.nearest_bin(j))
        try:
            pk.fwhm = fwhm(lw_spec, ref, search_hz=4.0 * lw_spec.resolution_hz)
        except ValueError:
            pk.fwhm = None
        rows.append(pk.to_dict())
    return rows


def cmd_spectrum(args) -> int:
    t_start = time.perf_counter()
    try:
        series = read_series_csv(args.input, args.column)
    except (OSError, ValueError, IndexError) as exc:
        raise UsageError(f"cannot read time series: {exc}") from exc
    if args.start:
        series = series.window(args.start)
    if len(series) < 16:
        raise UsageError("time series too short for a spectrum")
    if args.kind == "psd":
        spec = psd(series, "periodogram", args.window, pad=args.pad)
    else:
        spec = amplitude_spectrum(series, args.window, pad=args.pad)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    spec_path = spec.to_csv(out / "spectrum.csv")
    rows = _peak_table(series, spec, args.threshold)
    peaks_path = out / "peaks.json"
    peaks_path.write_text(json.dumps(rows, indent=2) + "\n")
    write_manifest(out, "spectrum", None, [args.input],
                   [spec_path.name, spec_path.with_suffix(".json").name, peaks_path.name],
                   None, time.perf_counter() - t_start,
                   {"window": args.window, "kind": args.kind, "pad": args.pad,
                    "start": args.start, "threshold": args.threshold})
    if args.format == "json":
        print(json.dumps(rows, indent=2))
    else:
        print(f"{'freq_hz':>14} {'amplitude':>12} {'fwhm_hz':>12}")
        for r in rows:
            fw = "nan" if r["fwhm_hz"] is None else f"{r['fwhm_hz']:.4g}"
            print(f"{r['freq_hz']:14.6f} {r['amplitude']:12.5g} {fw:>12}")
    return EXIT_OK


def scan_values(args) -> list[float]:
    if args.values is not None:
        vals = [float(v) for v in args.values.split(",") if v.strip()]
    elif args.count is not None:
        if args.start is None or args.stop is None:
            raise UsageError("--count needs --start and --stop")
        vals = list(np.linspace(args.start, args.stop, args.count)) if args.count > 0 else []
    else:
        raise UsageError("give --values or --start/--stop/--count")
    if not vals:
        raise UsageError("scan range is empty")
    return [float(v) for v in vals]


def apply_param(cfg: ExperimentConfig, param: str, value: float) -> ExperimentConfig:
    """Set one scan parameter; ``td`` sets the gain for that damping time at ``p0``."""
    if param == "td":
        return cfg.with_updates(chi=gain_from_damping_time(value, cfg.p0))
    return cfg.with_updates(**{param: value})


def _scan_job(job):
    cfg_dict, out_dir, analysis_start = job
    cfg = ExperimentConfig.from_dict(cfg_dict)
    result = _run_one(cfg, Path(out_dir), command="scan-subrun")
    return run_summary(result, start=analysis_start)


def resolve_jobs(requested: int | None) -> int:
    env = os.environ.get("FMS_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise UsageError(f"FMS_JOBS must be an integer (got {env!r})") from exc
    return max(1, requested or os.cpu_count() or 1)


def cmd_scan(args) -> int:
    t_start = time.perf_counter()
    cfg = PRESETS[args.preset]() if args.preset else _load(args.config)
    known = set(cfg.to_dict()) | set(DERIVED_PARAMS)
    if args.param not in known:
        raise UsageError(f"unknown scan parameter {args.param!r}")
    if args.param in ("integrator", "rng_seed", "noise_in_loop"):
        raise UsageError(f"{args.param} is not a numeric physical parameter")
    values = scan_values(args)
    jobs_list = []
    for i, v in enumerate(values):
        sub = apply_param(cfg, args.param, v).with_updates(rng_seed=cfg.rng_seed ^ i)
        problems = validate_config(sub)
        if problems:
            raise UsageError(f"value {v!r}: " + "; ".join(problems))
        jobs_list.append((sub.to_dict(), str(Path(args.out) / f"run_{i:03d}"), args.analysis_start))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = min(resolve_jobs(args.jobs), len(jobs_list))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            summaries = list(pool.map(_scan_job, jobs_list))
    else:
        summaries = [_scan_job(j) for j in jobs_list]
    agg = out / "aggregate.csv"
    cols = ["index", args.param, "fitted_rate", "sideband_amplitude", "maser_frequency"]
    with agg.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for i, (v, s) in enumerate(zip(values, summaries)):
            w.writerow([i, repr(v)] + [repr(float(s[c])) for c in cols[2:]])
    write_manifest(out, "scan", args.config, [] if args.config is None else [args.config],
                   [agg.name] + [f"run_{i:03d}/" for i in range(len(values))], cfg.rng_seed,
                   time.perf_counter() - t_start,
                   {"param": args.param, "values": values, "jobs": jobs,
                    "analysis_start": args.analysis_start, "preset": args.preset})
    rows = [{"index": i, args.param: v, **s} for i, (v, s) in enumerate(zip(values, summaries))]
    if args.format == "json":
        print(json.dumps(rows, indent=2))
    else:
        print(" ".join(f"{c:>18}" for c in cols))
        for r in rows:
            print(" ".join(f"{r[c]:>18.8g}" for c in cols))
    return EXIT_OK


def _parse_band(text: str) -> tuple[float, float]:
    lo, hi = text.split(":")
    return float(lo), float(hi)


def cmd_sensitivity(args) -> int:
    t_start = time.perf_counter()
    if (args.noise is None) == (args.record is None):
        raise UsageError("give exactly one of --noise or --record")
    inputs = []
    if args.record is not None:
        try:
            series = read_series_csv(args.record)
        except (OSError, ValueError, IndexError) as exc:
            raise UsageError(f"cannot read record: {exc}") from exc
        try:
            spec = psd(series, "averaged-segments")
            noise = noise_floor(spec, [_parse_band(b) for b in args.exclude])
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        inputs.append(args.record)
    else:
        noise = args.noise
        if not noise > 0:
            raise UsageError("--noise must be > 0")
    if args.count < 1:
        raise UsageError("frequency grid is empty")
    if not 0 < args.fmin <= args.fmax:
        raise UsageError("need 0 < fmin <= fmax")
    freqs = (np.geomspace(args.fmin, args.fmax, args.count) if args.log
             else np.linspace(args.fmin, args.fmax, args.count))
    try:
        model = ResponseModel(kappa=args.kappa)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    curve = SensitivityCurve.from_model(noise, model, freqs)
    if args.record is not None:
        curve.source = "measured"
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    curve_path = curve.to_csv(out / "sensitivity.csv")
    rows = axion_reach(curve, args.tm, AxionParams(), quoted_constants=args.quoted_constants)
    axion_path = write_axion_csv(rows, out / "axion.csv")
    write_manifest(out, "sensitivity", None, inputs, [curve_path.name, axion_path.name], None,
                   time.perf_counter() - t_start,
                   {"noise_floor": noise, "kappa": args.kappa, "t_m": args.tm,
                    "quoted_constants": args.quoted_constants, "source": curve.source})
    _emit(args, {"noise_floor": noise, "delta_b_at_fmin": float(curve.delta_b[0]),
                 "g_ann_limit_at_fmin": rows[0][2], "output": str(out)})
    return EXIT_OK


def cmd_preset(args) -> int:
    if args.list or not args.name:
        for name in PRESETS:
            print(name)
        return EXIT_OK
    cfg = PRESETS[args.name]()
    text = json.dumps(cfg.to_dict(), indent=2, sort_keys=True)
    if args.out:
        save_config(cfg, args.out)
    else:
        print(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fms", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--format", choices=("table", "json"), default="table",
                   help="stdout summary format")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="integrate one configuration")
    s.add_argument("config", nargs="?", help="JSON config file")
    s.add_argument("--preset", choices=sorted(PRESETS))
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("spectrum", help="spectrum and peak list of a recorded trace")
    s.add_argument("input", help="CSV with a 't' column")
    s.add_argument("--column", default="detected_v")
    s.add_argument("--window", choices=("rect", "hann"), default="hann")
    s.add_argument("--kind", choices=("amplitude", "psd"), default="amplitude")
    s.add_argument("--pad", type=int, default=4)
    s.add_argument("--start", type=float, default=0.0, help="discard samples before this time")
    s.add_argument("--threshold", type=float, default=0.03, help="peak threshold, fraction of max")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("scan", help="sweep one parameter")
    s.add_argument("config", nargs="?")
    s.add_argument("--preset", choices=sorted(PRESETS))
    s.add_argument("--param", required=True,
                   help="config field, or 'td' to set the gain for a damping time at p0")
    s.add_argument("--values", help="comma-separated list")
    s.add_argument("--start", type=float)
    s.add_argument("--stop", type=float)
    s.add_argument("--count", type=int)
    s.add_argument("--jobs", type=int, default=None, help="worker processes (FMS_JOBS overrides)")
    s.add_argument("--analysis-start", type=float, default=0.0,
                   help="skip this many seconds before per-run analysis")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_scan)

    s = sub.add_parser("sensitivity", help="field sensitivity curve and axion reach")
    s.add_argument("--noise", type=float, help="white noise floor, V/sqrt(Hz)")
    s.add_argument("--record", help="CSV trace to estimate the noise floor from")
    s.add_argument("--exclude", action="append", default=[], metavar="LO:HI",
                   help="frequency band (Hz) left out of the noise estimate")
    s.add_argument("--kappa", type=float, default=ResponseModel().kappa, help="V Hz / nT")
    s.add_argument("--fmin", type=float, default=1e-3)
    s.add_argument("--fmax", type=float, default=1.0)
    s.add_argument("--count", type=int, default=31)
    s.add_argument("--log", action=argparse.BooleanOptionalAction, default=True)
    s.add_argument("--tm", type=float, default=1e4, help="integration time, s")
    s.add_argument("--paper-constants", "--quoted-constants", dest="quoted_constants",
                   action="store_true",
                   help="use the quoted 2.7e-5*nu coupling constant")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sensitivity)

    s = sub.add_parser("preset", help="list presets or write one as a config file")
    s.add_argument("name", nargs="?", choices=sorted(PRESETS))
    s.add_argument("--list", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_preset)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IntegrationError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
