"""Command-line entry point: ``embedor <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from embedor import io
from embedor.core import RunConfig
from embedor.pipeline import StageError, build_graph, compute_metric, edge_stats, run_embed, stage


def _config_flags(p: argparse.ArgumentParser, sgd: bool = False) -> None:
    g = p.add_argument_group("pipeline")
    g.add_argument("--k", type=int, default=None, help="neighbor count (default 15)")
    g.add_argument("--epsilon", type=float, default=None, help="radius graph instead of k-NN")
    g.add_argument("--p", type=float, default=3.0, help="energy exponent")
    g.add_argument("--curvature", choices=("orc", "frc"), default="orc")
    g.add_argument("--landmarks", type=int, default=0, help="0 means exact all-pairs paths")
    g.add_argument("--landmark-strategy", choices=("random", "betweenness"), default="random")
    if sgd:
        g.add_argument("--perplexity", type=float, default=150.0)
        g.add_argument("--dim", type=int, default=2)
        g.add_argument("--iters", type=int, default=None, help="default 400 * N")
        g.add_argument("--learning-rate", type=float, default=RunConfig.learning_rate)
        g.add_argument("--subsample", type=float, default=1.0)
        g.add_argument("--repulsion-weight", type=float, default=None)


def _config(args) -> RunConfig:
    kw = dict(
        k=args.k if args.k is not None else (None if args.epsilon is not None else 15),
        epsilon=args.epsilon,
        p=args.p,
        curvature=args.curvature,
        landmarks=args.landmarks,
        landmark_strategy=args.landmark_strategy,
        seed=getattr(args, "seed", 0) or 0,
    )
    for name in ("perplexity", "dim", "iters", "learning_rate", "subsample", "repulsion_weight"):
        if hasattr(args, name):
            kw[name] = getattr(args, name)
    return RunConfig(**kw)


def _input_flags(p, labels=True):
    p.add_argument("--input", required=True, help="point cloud CSV")
    if labels:
        p.add_argument("--label-column", default=None)


def _seed(p):
    p.add_argument("--seed", type=int, required=True)


def _load(args):
    with stage("load", {}):
        return io.load_point_cloud(args.input, args.label_column)


def cmd_graph(args) -> int:
    cloud = _load(args)
    cfg = _config(args)
    t: dict = {}
    with stage("graph", t):
        cfg.check_against(cloud.n)
        g = build_graph(cloud, cfg)
    with stage("write", t):
        io.write_edge_list(g, args.output)
    print(f"{g.n_edges} edges", file=sys.stderr)
    return 0


def cmd_metric(args) -> int:
    cloud = _load(args)
    mr = compute_metric(cloud, _config(args))
    with stage("write", {}):
        from embedor.metric import edge_records

        recs = edge_records(mr.graph, mr.metric, mr.curvature, mr.weights, mr.energies)
        io.write_edges(recs, args.output)
        if args.pairs:
            io.write_pair_distances(mr.metric, args.pairs)
    return 0


def _write_report(report, path):
    with open(path, "w") as fh:
        json.dump(
            {
                "timings_ms": report.timings_ms,
                "n_points": report.n_points,
                "n_edges": report.n_edges,
                "added_edges": report.added_edges,
                "s_max": report.s_max,
                "outputs": report.outputs,
                "stats": report.stats,
            },
            fh,
            indent=2,
            default=float,
        )


def _annotations(mr, embedding, beta):
    from embedor.metric import shortest_quantile_edges

    stats = edge_stats(embedding, mr, beta)
    recs = shortest_quantile_edges(mr.graph, mr.metric, beta, mr.curvature, mr.weights, mr.energies)
    # positions (within recs) of edges stretched beyond 3 standard deviations
    flagged = [pos for pos, e in enumerate(stats.selected) if stats.z[e] > 3.0]
    return stats, recs, flagged


def cmd_embed(args) -> int:
    cloud = _load(args)
    cfg = _config(args)
    run = run_embed(cloud, cfg, verbose=args.verbose)
    with stage("write", run.report.timings_ms):
        io.write_embedding(run.state, args.output)
        run.report.outputs["embedding"] = args.output
        stats, recs, flagged = _annotations(run.metric, run.state.Y, args.beta)
        run.report.stats.update(mu_beta=stats.mean, sd_beta=stats.std, beta=args.beta, flagged=len(flagged))
        if args.edges:
            io.write_edges(recs, args.edges)
            run.report.outputs["edges"] = args.edges
        if args.svg:
            io.emit_scatter_svg(run.state, recs, args.svg, flagged=flagged)
            run.report.outputs["svg"] = args.svg
        if args.report:
            _write_report(run.report, args.report)
    return 0


def cmd_annotate(args) -> int:
    cloud = _load(args)
    with stage("load", {}):
        Y, emb_labels = io.load_embedding(args.embedding)
        if Y.shape[0] != cloud.n:
            raise ValueError(f"embedding has {Y.shape[0]} rows but the cloud has {cloud.n}")
    if not 0 < args.beta <= 1:
        raise StageError("annotate", ValueError("beta must lie in (0, 1]"))
    mr = compute_metric(cloud, _config(args))
    with stage("annotate", {}):
        stats, recs, flagged = _annotations(mr, Y, args.beta)
        io.write_edges(recs, args.output)
        labels = cloud.labels if cloud.labels is not None else emb_labels
        if args.svg:
            io.emit_scatter_svg(Y, recs, args.svg, labels=labels, flagged=flagged)
        summary = {"beta": args.beta, "mu_beta": stats.mean, "sd_beta": stats.std, "edges": len(recs), "flagged": len(flagged)}
        if args.report:
            io.write_summary(summary, args.report)
        else:
            for key, v in summary.items():
                print(f"{key},{v}")
    return 0


def cmd_synth(args) -> int:
    from embedor.synth import generate, perturb_ambient

    with stage("synth", {}):
        cloud = generate(args.dataset, args.n, seed=args.seed)
        if args.noise_std:
            cloud = perturb_ambient(cloud, args.noise_std, seed=args.seed)
        io.write_point_cloud(cloud, args.output)
    return 0


def cmd_noise(args) -> int:
    from embedor.synth import NoiseParams, count_bridging_edges, perturb_adjacency, perturb_ambient

    cloud = _load(args)
    if cloud.labels is None:
        raise StageError("noise", ValueError("noise needs --label-column"))
    cfg = _config(args)
    with stage("noise", {}):
        params = NoiseParams(args.model, args.std, args.p_max, args.sigma, args.alpha, args.beta)
        if args.model == "ambient":
            moved = perturb_ambient(cloud, params.std, seed=args.seed)
            cfg.check_against(cloud.n)
            base = build_graph(cloud, cfg)
            g = build_graph(moved, cfg)
            added, s_max = g.n_edges - base.n_edges, float("nan")
            if args.points_output:
                io.write_point_cloud(moved, args.points_output)
        else:
            cfg.check_against(cloud.n)
            res = perturb_adjacency(build_graph(cloud, cfg), cloud, params, seed=args.seed)
            g, added, s_max = res.graph, res.added_edges, res.s_max
        io.write_edge_list(g, args.output)
    print("added_edges,bridging_edges,s_max")
    print(f"{added},{count_bridging_edges(g, cloud.labels)},{io.fmt(s_max)}")
    return 0


def cmd_eval(args) -> int:
    from embedor.evaluation import geodesic_oracle, geodesic_score, permutation_test

    cloud = _load(args)
    with stage("load", {}):
        Y, _ = io.load_embedding(args.embedding)
        if Y.shape[0] != cloud.n:
            raise ValueError(f"embedding has {Y.shape[0]} rows but the cloud has {cloud.n}")
        other = io.load_embedding(args.compare)[0] if args.compare else None
    summary = {}
    with stage("eval", {}):
        if args.clean:
            clean = io.load_point_cloud(args.clean, args.label_column)
            summary["geodesic_score"] = geodesic_score(Y, geodesic_oracle(clean))
    mr = compute_metric(cloud, _config(args))
    with stage("eval", {}):
        mine = edge_stats(Y, mr, args.beta)
        summary["mu_beta"] = mine.mean
        summary["sd_beta"] = mine.std
        if other is not None:
            theirs = edge_stats(other, mr, args.beta)
            summary["mu_beta_compare"] = theirs.mean
            p, reject = permutation_test(
                theirs.z[theirs.selected], mine.z[mine.selected], args.resamples, args.alpha, args.seed
            )
            summary["p_value"] = p
            summary["reject"] = reject
        io.write_summary(summary, args.output)
    return 0


def cmd_table1(args) -> int:
    from embedor.pipeline import TABLE1_DATASETS, cmd_table1 as run_table

    cfg = RunConfig(curvature=args.curvature, landmarks=args.landmarks, subsample=args.subsample)
    datasets = args.datasets.split(",") if args.datasets else TABLE1_DATASETS
    with stage("table1", {}):
        rows = run_table(args.seeds, args.n, datasets, cfg, log=lambda s: print(s, file=sys.stderr), seed0=args.seed)
    lines = ["dataset,mean,std,scores"]
    for r in rows:
        lines.append(f"{r.dataset},{r.mean:.4f},{r.std:.4f}," + " ".join(f"{s:.4f}" for s in r.scores))
    text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="embedor", description="Curvature-aware neighbor embedding.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("graph", help="build the neighbor graph and write an edge list")
    _input_flags(p)
    _config_flags(p)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("metric", help="write per-edge curvature, energy, weight and metric distance")
    _input_flags(p)
    _config_flags(p)
    _seed(p)
    p.add_argument("--output", required=True)
    p.add_argument("--pairs", default=None, help="also dump all i<j metric values")
    p.set_defaults(func=cmd_metric)

    p = sub.add_parser("embed", help="run the full pipeline")
    _input_flags(p)
    _config_flags(p, sgd=True)
    _seed(p)
    p.add_argument("--output", required=True, help="embedding CSV")
    p.add_argument("--edges", default=None, help="annotation CSV of the beta-shortest edges")
    p.add_argument("--svg", default=None)
    p.add_argument("--report", default=None, help="JSON run report with timings")
    p.add_argument("--beta", type=float, default=0.33)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("annotate", help="overlay metric-short edges on an external embedding")
    _input_flags(p)
    _config_flags(p)
    _seed(p)
    p.add_argument("--embedding", required=True)
    p.add_argument("--beta", type=float, default=0.33)
    p.add_argument("--output", required=True)
    p.add_argument("--svg", default=None)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("synth", help="sample a synthetic dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--n", type=int, required=True)
    _seed(p)
    p.add_argument("--noise-std", type=float, default=0.0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("noise", help="perturb a labeled cloud and write the noisy edge list")
    _input_flags(p)
    _config_flags(p)
    _seed(p)
    p.add_argument("--model", choices=("adjacency", "ambient"), default="adjacency")
    p.add_argument("--std", type=float, default=0.0)
    p.add_argument("--p-max", type=float, default=0.1)
    p.add_argument("--sigma", type=float, default=0.7)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--output", required=True)
    p.add_argument("--points-output", default=None, help="perturbed cloud (ambient model)")
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("eval", help="score an embedding and test it against another")
    _input_flags(p)
    _config_flags(p)
    _seed(p)
    p.add_argument("--embedding", required=True)
    p.add_argument("--clean", default=None, help="noiseless labeled cloud for the geodesic score")
    p.add_argument("--compare", default=None, help="second embedding for the permutation test")
    p.add_argument("--beta", type=float, default=0.33)
    p.add_argument("--resamples", type=int, default=10_000)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("table1", help="geodesic-score benchmark on the synthetic datasets")
    p.add_argument("--seeds", type=int, required=True, help="number of trials")
    _seed(p)
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--datasets", default=None)
    p.add_argument("--curvature", choices=("orc", "frc"), default="orc")
    p.add_argument("--landmarks", type=int, default=0)
    p.add_argument("--subsample", type=float, default=1.0)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_table1)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StageError as exc:
        print(f"embedor {args.command}: stage {exc.stage} failed: {exc.cause}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"embedor {args.command}: stage {args.command} failed: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
