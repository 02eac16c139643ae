"""Intrusion table for the two-blob layout: how often each generator lands
inside the normal region, per seed.

    python3 scripts/two_blob_intrusion.py [--samples 10000] [--seeds 0 1 2 3 4] [--out intrusion.json]
"""

import argparse
import json

from nngmix.augment import GeneratorConfig
from nngmix.dataset import TWO_BLOB_CLUSTERS
from nngmix.harness import Region, measure_intrusion

KINDS = ("gaussian", "nng_mix", "nng_no_gn", "mixup", "mixup_all")


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--samples", type=int, default=10_000)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    ap.add_argument("--radius", type=float, default=2.0)
    ap.add_argument("--out")
    args = ap.parse_args()

    region = Region("ball", (0.0, 0.0), args.radius)
    rep = measure_intrusion([GeneratorConfig(kind=k) for k in KINDS], TWO_BLOB_CLUSTERS, region,
                            args.samples, args.seeds)
    print(f"{'generator':>10}  {'mean':>7}  per-seed")
    for name, fr in rep.fractions.items():
        print(f"{name:>10}  {rep.mean[name]:7.4f}  {' '.join(f'{f:.4f}' for f in fr)}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(rep.to_dict(), fh, indent=1)


if __name__ == "__main__":
    main()
