"""Command-line entry point: ``dgles run|optimize|spectra``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .diagnostics import TimeSeries, energy_spectrum, spectrum_filename
from .driver import Simulation
from .les_filter import write_kernel_file
from .mesh import CheckpointError, read_checkpoint
from .optimizer import (default_bounds, default_start, default_times, optimize_kernel,
                        parameter_names)
from .time_integrator import NumericalFailure

log = logging.getLogger("dgles")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def _load(args) -> RunConfig:
    overrides = list(args.override or [])
    if args.seed is not None:
        overrides.append(f"initial.seed={args.seed}")
    cfg = load_config(args.config, overrides=overrides)
    if args.seed is not None and cfg.optimize is not None:
        cfg.optimize.seed = args.seed
    return cfg


def cmd_run(args) -> int:
    cfg = _load(args)
    res = Simulation(cfg).run(args.out_dir)
    log.info("finished: t=%.6g after %d steps, outputs in %s", res.field.time, res.steps,
             args.out_dir)
    return EXIT_OK


def cmd_optimize(args) -> int:
    cfg = _load(args)
    o = cfg.optimize
    if o is None:
        raise ConfigError("[optimize]: section required for the optimize command")
    if not o.reference or not Path(o.reference).is_file():
        raise ConfigError(f"optimize.reference: reference series {o.reference!r} not found")
    reference = TimeSeries.from_csv(o.reference)
    N = cfg.N
    times = np.asarray(o.times) if o.times is not None else default_times(o.window)
    lo, hi = default_bounds(N)
    lower = np.asarray(o.lower) if o.lower is not None else lo
    upper = np.asarray(o.upper) if o.upper is not None else hi
    x0 = np.asarray(o.x0) if o.x0 is not None else default_start(N)
    if np.any(lower >= upper) or np.any(x0 <= lower) or np.any(x0 >= upper):
        raise ConfigError("optimize.x0: start point must lie strictly inside (lower, upper)")
    cfg.model.type = "filter"
    result, record = optimize_kernel(cfg, reference, times, x0, lower, upper,
                                     max_evals=o.max_evals, restart_every=o.restart_every,
                                     seed=o.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    # the error column of the kernel file is in units of 1e-2
    record = type(record)(record.N, record.sigma, record.c, record.c_inf, 100.0 * record.error)
    write_kernel_file(out / o.output, [record])
    result.write_log(out / "optimization_log.csv", parameter_names(N))
    log.info("best objective %.6g after %d evaluations (%d restarts)", result.f_best,
             result.n_evals, result.n_restarts)
    return EXIT_OK


def cmd_spectra(args) -> int:
    try:
        field = read_checkpoint(args.config)
    except (CheckpointError, OSError) as exc:
        raise ConfigError(f"checkpoint {args.config}: {exc}") from None
    spec = energy_spectrum(field)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec.to_csv(out / spectrum_filename(spec.t))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dgles", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, func, target in (("run", cmd_run, "configuration file"),
                               ("optimize", cmd_optimize, "configuration file with [optimize]"),
                               ("spectra", cmd_spectra, "checkpoint file")):
        s = sub.add_parser(name)
        s.add_argument("config", help=target)
        s.add_argument("--override", action="append", metavar="SECTION.KEY=VALUE",
                       help="override a configuration value (repeatable)")
        s.add_argument("--seed", type=int, default=None, help="random seed for init/optimizer")
        s.add_argument("-v", "--verbose", action="store_true", help="log progress")
        s.add_argument("--out-dir", default=".", help="output directory (default: cwd)")
        s.set_defaults(func=func)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
