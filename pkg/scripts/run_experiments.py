#!/usr/bin/env python3
"""Run one or all bundled sweep configurations.

Each sweep writes a per-trial CSV plus an ``.agg.csv`` aggregate next to it.
Without ``--config`` the four study sweeps under configs/ run back to back,
which takes a few minutes on a laptop-class machine.
"""
import argparse
import pathlib
import sys
import time

from rsmasec import ConfigError, parse_config, run_sweep

REPO_ROOT = pathlib.Path(__file__).resolve().parent.parent
CONFIG_DIR = REPO_ROOT / "configs"
BUNDLED_SWEEPS = (
    "snr_sweep.cfg",
    "eavesdropper_sweep.cfg",
    "separation_sweep.cfg",
    "kappa_sweep.cfg",
)


def run_one(config_path: pathlib.Path, out_arg: str | None, workers: int | None) -> None:
    config = parse_config(str(config_path))
    out = out_arg or config.output_path
    if out is None:
        out = str(REPO_ROOT / "results" / (config_path.stem + ".csv"))
    out_path = pathlib.Path(out)
    if not out_path.is_absolute():
        out_path = REPO_ROOT / out_path
    out_path.parent.mkdir(parents=True, exist_ok=True)

    start = time.perf_counter()
    rows_path, agg_path = run_sweep(config, str(out_path), workers=workers)
    elapsed = time.perf_counter() - start
    print(f"{config_path.name}: wrote {rows_path} and {agg_path} ({elapsed:.1f}s)")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", help="single config file (default: all bundled sweeps)")
    parser.add_argument("--out", help="per-trial CSV path (default: the config's output_path)")
    parser.add_argument("--workers", type=int, default=None,
                        help="worker processes (default: available parallelism)")
    args = parser.parse_args(argv)

    if args.config:
        targets = [pathlib.Path(args.config)]
    else:
        if args.out:
            parser.error("--out needs --config; bundled sweeps use their own output paths")
        targets = [CONFIG_DIR / name for name in BUNDLED_SWEEPS]

    try:
        for target in targets:
            run_one(target, args.out, args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
