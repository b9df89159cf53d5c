"""Command-line front end: simulate | invert | sweep | noise.

Heavy imports happen after thread limits are applied so that
``LSL_NUM_THREADS`` can cap BLAS parallelism for the whole run.
"""

from __future__ import annotations

import argparse
import os
import sys


def _apply_thread_cap() -> None:
    cap = os.environ.get("LSL_NUM_THREADS")
    if not cap:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(var, cap)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reglsl",
        description="Regularized Lippmann-Schwinger-Lanczos inversion experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--resume", action="store_true",
                       help="skip stages already completed under the same config hash")

    sim = sub.add_parser("simulate", help="write perturbed and background datasets")
    common(sim)

    inv = sub.add_parser("invert", help="run the configured inversion modes")
    common(inv)
    inv.add_argument("--data", default=None, help="perturbed dataset (default: from --out)")
    inv.add_argument("--background", default=None, help="background dataset")

    swp = sub.add_parser("sweep", help="Gramian-threshold sweep")
    common(swp)
    swp.add_argument("--alphas", default=None, help="comma-separated truncation levels")
    swp.add_argument("--pinv", default=None, help="comma-separated paired pseudoinverse cuts")

    noi = sub.add_parser("noise", help="noise sensitivity study")
    common(noi)
    noi.add_argument("--percents", default=None, help="comma-separated noise percents")
    noi.add_argument("--pinv", default=None, help="comma-separated paired pseudoinverse cuts")
    return parser


def _float_list(text):
    if text is None:
        return None
    return [float(tok) for tok in text.replace(",", " ").split()]


def main(argv=None) -> int:
    _apply_thread_cap()
    args = build_parser().parse_args(argv)

    from dataclasses import replace

    from . import experiments
    from .errors import ReglslError

    try:
        config = experiments.parse_config(args.config)
        if args.seed is not None:
            config = replace(config, seed=args.seed)
        if args.command == "simulate":
            run = experiments.cmd_simulate(config, args.out, resume=args.resume)
            for path in run["outputs"]:
                print(path)
        elif args.command == "invert":
            data_path, background_path = experiments.dataset_paths(config, args.out)
            if args.data:
                data_path = args.data
            if args.background:
                background_path = args.background
            experiments.cmd_invert(config, data_path, background_path, args.out,
                                   resume=args.resume)
        elif args.command == "sweep":
            rows = experiments.cmd_sweep(config, args.out,
                                         alphas=_float_list(args.alphas),
                                         pinv=_float_list(args.pinv),
                                         resume=args.resume)
            for alpha, retained, error in rows:
                err = "n/a" if error is None else f"{error:.4f}"
                print(f"alpha {alpha:.1e}: retained {retained}, L2 error {err}")
        elif args.command == "noise":
            rows = experiments.cmd_noise(config, args.out,
                                         percents=_float_list(args.percents),
                                         pinv=_float_list(args.pinv),
                                         resume=args.resume)
            for pct, error in rows:
                err = "n/a" if error is None else f"{error:.4f}"
                print(f"noise {pct:g}%: L2 error {err}")
    except ReglslError as exc:
        print(f"error {exc.category}: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error io: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error invalid-input: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
