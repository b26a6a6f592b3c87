"""Command line interface: stats, run, bench, summarize."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .bench import BenchPlan, build_objective, default_gamma, run_plan, summarize
from .data import SyntheticSpec
from .engine import run_ascd, run_hogwild, run_kromagnon
from .hypergraph import (
    conflict_stats,
    intersection_probability_bound,
    tau_bound_comparison,
)
from .serial import (
    SolverConfig,
    run_scd,
    run_sgm,
    run_svrg_dense,
    run_svrg_sparse,
    trace_to_csv,
)
from .vectors import LinfBall


def _add_data_args(p):
    p.add_argument("--problem", default="logreg",
                   choices=["linreg", "logreg", "vertexcover"])
    p.add_argument("--data", default=None,
                   help="libsvm file (regression) or edge list (vertexcover)")
    p.add_argument("--synthetic", default=None, metavar="N,D,NNZ",
                   help="generate a synthetic dataset of this shape")
    p.add_argument("--synthetic-seed", type=int, default=0)
    p.add_argument("--l2-reg", type=float, default=1e-2)
    p.add_argument("--beta", type=float, default=1.0)


def _plan_from_args(args, **overrides):
    synthetic = None
    if args.synthetic:
        n, d, nnz = (int(t) for t in args.synthetic.split(","))
        model = "logistic" if args.problem == "logreg" else "linear"
        synthetic = SyntheticSpec(
            n=n, d=d, nnz=nnz, label_model=model, seed=args.synthetic_seed
        )
    return BenchPlan(
        problem=args.problem, dataset=args.data, synthetic=synthetic,
        l2_reg=args.l2_reg, beta=args.beta, **overrides,
    )


def cmd_stats(args):
    plan = _plan_from_args(args)
    obj = build_objective(plan)
    edges = [obj.term_support(i) for i in range(obj.n)]
    st = conflict_stats(edges, obj.d)
    this_tau, prior_tau = tau_bound_comparison(st, obj.n)
    print(f"terms (n):              {obj.n}")
    print(f"coordinates (d):        {obj.d}")
    print(f"avg conflict degree:    {st.avg_conflict_degree:.4f}")
    print(f"max conflict degree:    {st.max_conflict_degree}")
    print(f"max left degree:        {st.max_left_degree}")
    print(f"max right degree:       {st.max_right_degree}")
    print(f"intersection P bound:   {intersection_probability_bound(st, obj.n):.6f}")
    print(f"tau budget (avg deg):   {this_tau:.4f}")
    print(f"tau budget (bipartite): {prior_tau:.4f}")
    return 0


def cmd_run(args):
    plan = _plan_from_args(args)
    obj = build_objective(plan)
    gamma = args.gamma
    if gamma is None:
        gamma, rule = default_gamma(args.mode, obj.constants)
        print(f"step size {gamma:.3e} from rule {rule}", file=sys.stderr)
    linf = LinfBall(args.linf_radius)
    epochal = args.mode in ("kromagnon", "svrg_dense", "svrg_sparse")
    if epochal:
        S = args.epoch_size or obj.n
        E = args.epochs or 5
        cfg = SolverConfig(gamma=gamma, epoch_size=S, epochs=E, seed=args.seed,
                           linf=linf, log_every=args.log_every)
    else:
        T = args.iters or (args.epochs or 5) * (args.epoch_size or obj.n)
        cfg = SolverConfig(gamma=gamma, total_iters=T, seed=args.seed, linf=linf,
                           log_every=args.log_every or max(1, T // 20))
    x0 = np.zeros(obj.d)
    if args.mode == "hogwild":
        res, rep = run_hogwild(obj, cfg, x0, workers=args.workers,
                               mode=args.read_mode(), track_f=True,
                               log_updates=False)
    elif args.mode == "ascd":
        res, rep = run_ascd(obj, cfg, x0, workers=args.workers,
                            mode=args.read_mode(), track_f=True,
                            log_updates=False)
    elif args.mode == "kromagnon":
        res, rep = run_kromagnon(obj, None, cfg, x0, workers=args.workers,
                                 mode=args.read_mode(), track_f=True,
                                 log_updates=False)
    else:
        rep = None
        runner = {"sgm": run_sgm, "scd": run_scd,
                  "svrg_dense": run_svrg_dense}.get(args.mode)
        if runner is not None:
            res = runner(obj, cfg, x0, track_f=True)
        else:
            res = run_svrg_sparse(obj, None, cfg, x0, track_f=True)
    final_f = obj.value(res.x)
    print(f"iterations: {res.iters}")
    print(f"final objective: {final_f:.10g}")
    print(f"wall time: {res.wall_time:.3f}s")
    print(f"diverged: {res.diverged}")
    if rep is not None:
        print(f"tau observed: {rep.tau_observed}")
    if args.out:
        trace_to_csv(res, args.out, epoch_size=args.epoch_size)
        print(f"trace written to {args.out}")
    return 1 if res.diverged else 0


def _parse_config_file(path):
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def cmd_bench(args):
    overrides = {}
    if args.config:
        raw = _parse_config_file(args.config)
        for key in ("problem", "dataset", "outdir"):
            if key in raw:
                overrides[key] = raw[key]
        for key in ("epochs", "epoch_size", "snapshot_interval", "stats_budget"):
            if key in raw:
                overrides[key] = int(raw[key])
        for key in ("l2_reg", "beta", "eps", "gamma"):
            if key in raw:
                overrides[key] = float(raw[key])
        if "algorithms" in raw:
            overrides["algorithms"] = tuple(raw["algorithms"].split(","))
        if "workers" in raw:
            overrides["workers"] = tuple(int(t) for t in raw["workers"].split(","))
        if "seeds" in raw:
            overrides["seeds"] = tuple(int(t) for t in raw["seeds"].split(","))
        if "synthetic" in raw:
            n, d, nnz = (int(t) for t in raw["synthetic"].split(","))
            model = "logistic" if overrides.get("problem", "logreg") == "logreg" else "linear"
            overrides["synthetic"] = SyntheticSpec(n=n, d=d, nnz=nnz, label_model=model)
    if args.algorithms:
        overrides["algorithms"] = tuple(args.algorithms.split(","))
    if args.workers:
        overrides["workers"] = tuple(int(t) for t in args.workers.split(","))
    if args.seeds:
        overrides["seeds"] = tuple(int(t) for t in args.seeds.split(","))
    if args.epochs is not None:
        overrides["epochs"] = args.epochs
    if args.epoch_size is not None:
        overrides["epoch_size"] = args.epoch_size
    if args.outdir:
        overrides["outdir"] = args.outdir
    if "problem" in overrides or "dataset" in overrides:
        plan = BenchPlan(
            synthetic=overrides.pop("synthetic", None), **overrides
        )
    else:
        plan = _plan_from_args(args, **overrides)
    outdir = run_plan(plan)
    print(f"benchmark artifacts in {outdir}")
    return 0


def cmd_summarize(args):
    report = summarize(args.dir)
    for w in report["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    if not report["rows"]:
        return 0
    hdr = f"{'algo':<12} {'workers':>7} {'seed':>4} {'best_norm':>10} {'t_999':>9} {'speedup':>8}"
    print(hdr)
    for r in report["rows"]:
        t = f"{r['time_999']:.3f}" if r["time_999"] is not None else "-"
        s = f"{r['speedup_999']:.2f}" if r.get("speedup_999") else "-"
        print(f"{r['algo']:<12} {r['workers']:>7} {r['seed']:>4} "
              f"{r['best_normalized']:>10.4f} {t:>9} {s:>8}")
    if report["kromagnon_vs_dense"] is not None:
        print(f"kromagnon vs dense SVRG time-to-99.9% ratio: "
              f"{report['kromagnon_vs_dense']:.2f}x")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="asyncopt",
        description="Lock-free asynchronous stochastic optimization toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="hypergraph conflict statistics")
    _add_data_args(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("run", help="run a single solver")
    _add_data_args(p)
    p.add_argument("--mode", default="hogwild",
                   choices=["sgm", "scd", "svrg_dense", "svrg_sparse",
                            "hogwild", "ascd", "kromagnon"])
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--read", default="sparse", choices=["sparse", "full"])
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--epoch-size", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--iters", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--linf-radius", type=float, default=None)
    p.add_argument("--log-every", type=int, default=0)
    p.add_argument("--out", default=None, help="write the trace CSV here")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="run a benchmark grid")
    _add_data_args(p)
    p.add_argument("--config", default=None, help="key=value plan file")
    p.add_argument("--algorithms", default=None)
    p.add_argument("--workers", default=None)
    p.add_argument("--seeds", default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--epoch-size", type=int, default=None)
    p.add_argument("--outdir", default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("summarize", help="summarize a benchmark directory")
    p.add_argument("dir")
    p.set_defaults(func=cmd_summarize)

    args = parser.parse_args(argv)
    if hasattr(args, "read"):
        args.read_mode = lambda: (
            "full_consistent_snapshot" if args.read == "full" else "sparse_inconsistent"
        )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
