#!/usr/bin/env python3
"""Run the proposition experiments on one preset and print a summary table.

Example:
    python scripts/run_prop_suite.py --preset twist --count 200000
"""

import argparse
import time

from furstlab import get_preset
from furstlab.experiments import (ThetaSpec, exp_boundary_convergence,
                                  exp_direction_cocycle, exp_entropy_increase,
                                  exp_projection_entropy,
                                  exp_uniform_entropy_dim)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--preset", default="twist")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--count", type=int, default=200_000)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    system = get_preset(args.preset)
    n, seed, w = args.count, args.seed, args.workers

    runs = [
        ("uniform-entropy-dim",
         lambda: exp_uniform_entropy_dim(system, count=n, seed=seed, workers=w),
         lambda r: f"fraction {r.summary['fraction']:.3f}"),
        ("projection-entropy",
         lambda: exp_projection_entropy(system, count=n, seed=seed, workers=w),
         lambda r: f"gamma {r.summary['gamma_hat']:+.4f}"),
        ("direction-cocycle",
         lambda: exp_direction_cocycle(system, n=min(n, 10_000), trials=8,
                                       seed=seed),
         lambda r: f"score {r.summary['score']:.3f}"),
        ("entropy-increase",
         lambda: exp_entropy_increase(system, ThetaSpec.four_ball_atoms(0.08),
                                      count=n, seed=seed, workers=w),
         lambda r: f"gap {r.summary['gap']:+.4f}"),
        ("boundary-convergence",
         lambda: exp_boundary_convergence(system, trials=1024, seed=seed,
                                          workers=w),
         lambda r: "min fraction "
                   f"{min(x['fraction'] for x in r.rows):.3f}" if r.rows
                   else "vacuous"),
    ]

    print(f"system {system.name}  count {n}  seed {seed}")
    for name, run, fmt in runs:
        t0 = time.time()
        rep = run()
        print(f"  {name:22s} {rep.verdict:13s} {fmt(rep):24s}"
              f" ({time.time() - t0:.0f}s)")


if __name__ == "__main__":
    main()
