"""Geodesic-score benchmark: EmbedOR embeddings of noisy synthetic clouds."""

import argparse
import sys

from embedor.core import RunConfig
from embedor.pipeline import TABLE1_DATASETS, cmd_table1


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--n", type=int, default=5000)
    ap.add_argument("--datasets", default=",".join(TABLE1_DATASETS))
    ap.add_argument("--curvature", choices=("orc", "frc"), default="orc")
    args = ap.parse_args()
    rows = cmd_table1(
        args.seeds, args.n, args.datasets.split(","), RunConfig(curvature=args.curvature),
        log=lambda s: print(s, file=sys.stderr),
    )
    print("dataset        mean    std")
    for r in rows:
        print(f"{r.dataset:<14} {r.mean:.3f}  {r.std:.3f}")


if __name__ == "__main__":
    main()
