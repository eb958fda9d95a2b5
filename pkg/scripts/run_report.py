#!/usr/bin/env python3
"""Run the full consistency pipeline on a preset and write the JSON report.

Example:
    python scripts/run_report.py --preset twist --seed 7 --count 1000000 \
        --out twist_report.json
"""

import argparse
import sys
import time

from furstlab import get_preset
from furstlab.experiments import PipelineBudget, exp_main_theorem


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--preset", default="twist")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--count", type=int, default=1_000_000)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    system = get_preset(args.preset)
    budget = PipelineBudget()
    if args.count < budget.boundary_samples:
        budget = budget.small(args.count)
    else:
        budget.boundary_samples = args.count

    t0 = time.time()
    report = exp_main_theorem(system, budget, seed=args.seed,
                              workers=args.workers)
    elapsed = time.time() - t0

    text = report.to_json()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        print(f"wrote {args.out} ({elapsed:.0f}s, verdict {report.verdict})")
    else:
        sys.stdout.write(text)
    return report.exit_code()


if __name__ == "__main__":
    raise SystemExit(main())
