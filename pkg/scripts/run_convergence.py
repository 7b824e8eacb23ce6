"""Write the convergence tables of every experiment into one directory.

    python3 scripts/run_convergence.py results/ [--k512]
"""
import argparse
import sys
from pathlib import Path

from finsler_quant.experiments import DEFAULT_K, ExperimentConfig, run

TABLES = [
    ("points-flat", dict(experiment="points", potentials=("flat:0",))),
    ("points-ua", dict(experiment="points", potentials=("ua:0.5",))),
    ("points-shift", dict(experiment="points", potentials=("shift:1",))),
    ("points-cusp", dict(experiment="points", potentials=("cusp:0.5",))),
    ("distance-p1", dict(experiment="distance")),
    ("distance-p2", dict(experiment="distance", p=2.0)),
    ("geodesic", dict(experiment="geodesic")),
    ("rooftop", dict(experiment="rooftop")),
    ("lidskii-matrix", dict(experiment="lidskii-matrix")),
    ("lidskii-potential", dict(experiment="lidskii-potential", n_samples=200)),
    ("maxprinciple", dict(experiment="maxprinciple", k_list=(16, 32, 64, 128),
                          t_list=tuple(i / 10 for i in range(1, 10)))),
]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("outdir", type=Path)
    ap.add_argument("--k512", action="store_true", help="also run k = 512 where levels apply")
    ap.add_argument("--timing", action="store_true")
    args = ap.parse_args(argv)
    args.outdir.mkdir(parents=True, exist_ok=True)
    ok = True
    for name, kw in TABLES:
        if args.k512 and "k_list" not in kw and kw["experiment"] not in ("lidskii-matrix", "lidskii-potential"):
            kw = dict(kw, k_list=DEFAULT_K + (512,))
        res = run(ExperimentConfig(out=str(args.outdir / f"{name}.csv"), timing=args.timing, **kw))
        ok &= res.passed
        print(f"{name:18s} {'ok' if res.passed else 'VIOLATED'}  " + "; ".join(res.messages))
    return 0 if ok else 2


if __name__ == "__main__":
    sys.exit(main())
