"""Compare Ollivier-Ricci and normalised Forman-Ricci curvature on one k-NN graph."""

import argparse

from embedor.curvature import frc_all, orc_all
from embedor.evaluation import pearson, spearman
from embedor.graph import build_knn_graph
from embedor.synth import DATASETS, generate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dataset", choices=DATASETS, default="circles")
    ap.add_argument("--n", type=int, default=5000)
    ap.add_argument("--k", type=int, default=15)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    g = build_knn_graph(generate(args.dataset, args.n, seed=args.seed), args.k)
    orc, frc = orc_all(g).kappa, frc_all(g).kappa
    print(f"edges    {g.n_edges}")
    print(f"spearman {spearman(orc, frc):.4f}")
    print(f"pearson  {pearson(orc, frc):.4f}")


if __name__ == "__main__":
    main()
