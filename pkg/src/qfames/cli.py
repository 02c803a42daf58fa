"""Command-line driver: ``qfames run | sweep-T | ancilla-check | preset``."""
from __future__ import annotations

import argparse
import json
import logging
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np

from .experiments import (
    PRESETS,
    SWEEP_COLUMNS,
    WORKERS_ENV,
    ConfigError,
    ExperimentConfig,
    cmd_ancilla_check,
    cmd_run,
    cmd_sweep,
    preset,
)

EXIT_CONFIG = 1
EXIT_NUMERICAL = 2

EPILOG = f"""\
outputs (written to the config's output_dir unless --out is given):
  dods.json              clusters per seed: theta_star (normalized and physical),
                         multiplicity, singular_values, block; config echo, norm_scale
  landscape.csv          theta, theta_physical, frobenius_norm (first seed)
  singular_values.csv    seed, cluster, theta_star, theta_star_physical, index,
                         singular_value, above_tau; rows with seed=mean hold the
                         per-cluster average over seeds
  observable.json        per seed and cluster: theta_star, eigenvalues,
                         residual_imag, range
  sweep.csv              {", ".join(SWEEP_COLUMNS)}
                         (T_max = sigma*T, T_total = L*R*N*T_max)
  reconstruction_report.json   per (l, r): max/mean error at (h, dt) and at
                         (h/2, dt/2), their ratio, or the zero-crossing message
  manifest.json          config, seeds, norm_scale, wall time, parameter report

environment:
  {WORKERS_ENV}         number of worker processes for seeds (default 1);
                         results do not depend on it

exit codes: 0 success, 1 invalid configuration, 2 numerical failure
"""


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qfames",
        description="Locate dominant eigenvalue clusters and their multiplicities from multi-state time-series data.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config", epilog=EPILOG,
                         formatter_class=argparse.RawDescriptionHelpFormatter)
    run.add_argument("config")
    run.add_argument("--out", help="output directory (overrides output_dir)")

    sw = sub.add_parser("sweep-T", help="error versus T for QFAMES and the single-state baseline",
                        epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    sw.add_argument("config")
    sw.add_argument("--T", required=True, help="comma-separated list, e.g. 40,80,160")
    sw.add_argument("--out")

    an = sub.add_parser("ancilla-check", help="verify the ancilla-free reconstruction",
                        epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    an.add_argument("config")
    an.add_argument("--h", type=float, default=0.01)
    an.add_argument("--dt", type=float, default=0.01)
    an.add_argument("--out")

    pr = sub.add_parser("preset", help="run a built-in experiment",
                        epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    pr.add_argument("name", choices=PRESETS)
    pr.add_argument("--out")
    pr.add_argument("--dump-config", action="store_true", help="print the preset config as JSON and exit")
    return p


def _parse_T(raw: str) -> list:
    try:
        Ts = [float(x) for x in raw.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"--T must be comma-separated numbers: {exc}") from exc
    if not Ts:
        raise ConfigError("--T list is empty")
    return Ts


def _staged(out: Path, fn):
    """Write into a temporary sibling directory and move it into place only on
    success, so a failed run leaves no partial outputs."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".qfames-", dir=out.parent))
    try:
        result = fn(tmp)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    out.mkdir(exist_ok=True)
    for f in tmp.iterdir():
        f.replace(out / f.name)
    tmp.rmdir()
    return result


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "preset":
            cfg = preset(args.name)
            if args.dump_config:
                print(json.dumps(cfg.to_json(), indent=2))
                return 0
            out = Path(args.out or cfg.output_dir)
            _staged(out, lambda d: cmd_run(cfg, d))
            print(f"wrote {out}")
            return 0
        cfg = ExperimentConfig.load(args.config)
        out = Path(args.out or cfg.output_dir)
        if args.command == "run":
            _staged(out, lambda d: cmd_run(cfg, d))
        elif args.command == "sweep-T":
            Ts = _parse_T(args.T)
            _staged(out, lambda d: cmd_sweep(cfg, Ts, d))
        else:
            if args.h <= 0 or args.dt <= 0:
                raise ConfigError("--h and --dt must be positive")
            _staged(out, lambda d: cmd_ancilla_check(cfg, args.h, args.dt, d))
        print(f"wrote {out}")
        return 0
    except ConfigError as exc:
        print(f"qfames: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, FloatingPointError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"qfames: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
