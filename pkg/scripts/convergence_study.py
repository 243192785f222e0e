#!/usr/bin/env python3
"""Export per-iteration solver traces across several SNR points.

Writes one CSV row per (snr, trial, iteration): step norm, objective, and
the stationarity multiplier estimate.  Iteration 0 carries the initializer
objective with an empty step, so each trace can be plotted from its start.
"""
import argparse
import pathlib
import sys
import time

from rsmasec import ConfigError, parse_config, run_convergence

REPO_ROOT = pathlib.Path(__file__).resolve().parent.parent
DEFAULT_CONFIG = REPO_ROOT / "configs" / "convergence.cfg"


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=str(DEFAULT_CONFIG),
                        help="experiment config file")
    parser.add_argument("--snr", default="0,10,20,30",
                        help="comma-separated SNR points in dB")
    parser.add_argument("--out", help="trace CSV path (default: the config's output_path)")
    args = parser.parse_args(argv)

    try:
        config = parse_config(args.config)
        snr_list = [float(v) for v in args.snr.split(",") if v.strip()]
        if not snr_list:
            raise ConfigError("--snr list is empty")
        out = args.out or config.output_path
        if out is None:
            out = str(REPO_ROOT / "results" / "convergence.csv")
        out_path = pathlib.Path(out)
        if not out_path.is_absolute():
            out_path = REPO_ROOT / out_path
        out_path.parent.mkdir(parents=True, exist_ok=True)

        start = time.perf_counter()
        written = run_convergence(config, snr_list, str(out_path))
        elapsed = time.perf_counter() - start
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2

    print(f"wrote {written} ({elapsed:.1f}s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
