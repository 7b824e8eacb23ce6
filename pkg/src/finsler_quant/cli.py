"""Command line entry point ``finsler-quant``."""
from __future__ import annotations

import argparse
import sys

from . import radial
from .experiments import EXPERIMENTS, ConfigError, ExperimentConfig, run

EXIT_OK, EXIT_CONTRACT, EXIT_INPUT = 0, 2, 3


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text):
    return tuple(int(v) for v in text.split(",") if v.strip())


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="finsler-quant",
                                 description="Quantization experiments for L^p Finsler geometry on CP^1.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment and write its CSV table")
    r.add_argument("experiment", choices=EXPERIMENTS)
    r.add_argument("--p", type=float, default=1.0)
    r.add_argument("--k", type=_ints, default=None, help="comma separated levels, e.g. 8,16,32")
    r.add_argument("--k512", action="store_true", help="append k = 512 to the default levels")
    r.add_argument("--t", type=_floats, default=None, help="comma separated times in [0, 1]")
    r.add_argument("--potential", action="append", default=[],
                   help="potential spec (family:value, family:param=value or file:path); repeatable")
    r.add_argument("--grid", type=int, default=radial.DEFAULT_M)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", default=None)
    r.add_argument("--tol", type=float, default=None, help="override the end tolerance")
    r.add_argument("--samples", type=int, default=500, help="random instances for lidskii and matrix-suite")
    r.add_argument("--dim", type=int, default=16, help="largest matrix dimension for random instances")
    r.add_argument("--timing", action="store_true", help="fill the runtime_ms column")
    c = sub.add_parser("check", help="run the acceptance criteria")
    c.add_argument("--only", type=_ints, default=None, help="comma separated criterion numbers")
    return ap


def _config(args) -> ExperimentConfig:
    kw = {}
    if args.k is not None:
        kw["k_list"] = args.k
    elif args.k512:
        from .experiments import DEFAULT_K
        kw["k_list"] = DEFAULT_K + (512,)
    if args.t is not None:
        kw["t_list"] = args.t
    elif args.experiment == "maxprinciple":
        kw["t_list"] = tuple(i / 10 for i in range(1, 10))
    return ExperimentConfig(args.experiment, p=args.p, potentials=tuple(args.potential), grid_m=args.grid,
                            seed=args.seed, out=args.out, tol=args.tol, n_samples=args.samples,
                            dim=args.dim, timing=args.timing, **kw)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "check":
        from .acceptance import run_all
        results = run_all(set(args.only) if args.only else None)
        return EXIT_OK if all(r.passed for r in results) else EXIT_CONTRACT
    try:
        cfg = _config(args)
        res = run(cfg)
    except (ConfigError, radial.NotFiniteEnergyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    for msg in res.messages:
        print(msg)
    print("contract met" if res.passed else "contract VIOLATED")
    return EXIT_OK if res.passed else EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
