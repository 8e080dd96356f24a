"""Joint arm-event schedule on common samples, with power-law fits.

Example::

    python3 scripts/arm_schedule.py --n 4 --N 32 64 128 256 512 --samples 100000 --out runs/joint
"""

import argparse
import json
import warnings
from pathlib import Path

from perco.arms import ArmQuery, SigmaClass
from perco.cli import results_csv
from perco.estimate import fit_exponent, poly_exponent, schedule_estimates
from perco.sample import SeedSpec

QUERIES = [
    ("one_black", 1, SigmaClass.ONE_BLACK, 5 / 48),
    ("poly2", 2, SigmaClass.POLY_ONE_WHITE, poly_exponent(2)),
    ("mono2", 2, SigmaClass.MONO, None),
    ("poly3", 3, SigmaClass.POLY_ONE_WHITE, poly_exponent(3)),
]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--N", type=int, nargs="+", default=[32, 64, 128, 256, 512])
    ap.add_argument("--samples", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--stream", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="runs/joint")
    args = ap.parse_args(argv)

    qs = [ArmQuery(j, s, args.n, args.N[0]) for _, j, s, _ in QUERIES]
    recs = schedule_estimates(qs, args.N, args.samples, SeedSpec(args.seed, args.stream),
                              workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = {}
    for (name, _, _, target), q in zip(QUERIES, qs):
        (out / f"{name}.csv").write_text(results_csv(recs[q]))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fit = fit_exponent(recs[q])
        summary[name] = {"alpha_hat": fit.alpha_hat, "ci95": list(fit.ci95), "target": target,
                         "points": [[r.query.N, r.hits, r.samples] for r in recs[q]]}
        print(f"{name:10s} alpha={fit.alpha_hat:.4f} ci=({fit.ci95[0]:.4f}, {fit.ci95[1]:.4f})"
              + (f" target={target:.4f}" if target is not None else ""))
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")


if __name__ == "__main__":
    main()
