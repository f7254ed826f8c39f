"""Bridging edges under adjacency noise: full k-NN graph vs its metric-shortest third."""

import argparse

import numpy as np

from embedor.pipeline import table2_trial


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--beta", type=float, default=0.33)
    args = ap.parse_args()
    print("dataset   full_graph  shortest_edges  s_max")
    for name in ("circles", "tori", "moons"):
        res = np.array([table2_trial(name, args.n, s, beta=args.beta) for s in range(args.seeds)])
        full, short, s_max = res.mean(axis=0)
        print(f"{name:<9} {full:10.1f}  {short:14.1f}  {s_max:.3f}")


if __name__ == "__main__":
    main()
