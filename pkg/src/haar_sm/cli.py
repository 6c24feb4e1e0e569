"""``haar-sm`` command line.

Exit codes: 0 ok, 1 config error, 2 numerical check failure, 3 I/O error.
"""

import argparse
import json
import sys

from .exceptions import ConfigError, HaarSMError
from .harness import EXPERIMENTS, load_config, run

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


def _float_list(text):
    return [float(t) for t in text.split(",") if t]


def _int_list(text):
    return [int(t) for t in text.split(",") if t]


def build_parser():
    ap = argparse.ArgumentParser(prog="haar-sm", description="Haar-series integrals against simulated stochastic measures.")
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", help="JSON config file; flags override its fields")
    ap.add_argument("--seed0", type=int)
    ap.add_argument("--count", type=int)
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--threads", type=int, help="worker threads (default: $HAAR_SM_THREADS or 1)")
    ap.add_argument("--kind", help="lebesgue, wiener, fbm or stable")
    ap.add_argument("--d", type=int)
    ap.add_argument("--K", type=int)
    ap.add_argument("--k", type=int)
    ap.add_argument("--integrand")
    ap.add_argument("--p", type=float)
    ap.add_argument("--alpha", type=_float_list, dest="alpha_besov", help="comma-separated Besov exponents")
    ap.add_argument("--besov-levels", type=_int_list, dest="besov_levels")
    ap.add_argument("--hurst", type=_float_list)
    ap.add_argument("--stable-alpha", type=float, dest="stable_alpha")
    ap.add_argument("--z-grid", type=_float_list, dest="z_grid")
    ap.add_argument("--quiet", action="store_true")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {
        k: getattr(args, k)
        for k in (
            "seed0", "count", "out", "kind", "d", "K", "k", "integrand", "p",
            "alpha_besov", "besov_levels", "hurst", "stable_alpha", "z_grid",
        )
    }
    overrides["experiment"] = args.experiment
    try:
        cfg = load_config(args.config, **overrides)
        if args.seed0 is not None or args.count is not None:
            # an explicit seed range replaces a seed list from the file
            cfg.seeds = None
        report = run(cfg, threads=args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (HaarSMError, ArithmeticError, ValueError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if not args.quiet:
        summary = {"experiment": report.experiment, "rows": len(report.rows), "out": cfg.out, "passed": report.passed}
        if report.experiment == "selftest":
            for name, status, detail in report.rows:
                print(f"{status:4s}  {name}  {detail}")
        print(json.dumps(summary))
    return EXIT_OK if report.passed else EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
