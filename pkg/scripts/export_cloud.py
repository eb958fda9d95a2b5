#!/usr/bin/env python3
"""Sample a stationary boundary cloud and export it as CSV for plotting.

Example:
    python scripts/export_cloud.py --preset twist --count 100000 \
        --space c_inf --out twist_cloud.csv
"""

import argparse

from furstlab import get_preset
from furstlab.dyadic import sphere_to_plane
from furstlab.engine import sample_boundary


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--preset", default="twist")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--count", type=int, default=100_000)
    ap.add_argument("--bits", type=float, default=40.0)
    ap.add_argument("--space", choices=["c_inf", "cp1"], default="c_inf")
    ap.add_argument("--transpose", action="store_true")
    ap.add_argument("--out", required=True)
    args = ap.parse_args()

    cloud = sample_boundary(get_preset(args.preset), args.bits, args.count,
                            args.seed, transpose=args.transpose)
    measure = cloud.measure if args.space == "cp1" \
        else sphere_to_plane(cloud.measure)
    measure.to_csv(args.out)
    print(f"wrote {args.out}: {args.count} samples, "
          f"mean stopping length {cloud.steps.mean():.1f}")


if __name__ == "__main__":
    main()
