"""Command line interface: simulate, screen, fit, eval, bench, tree dump."""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from .core import RegParams, standardize
from .io import load_dataset, load_groups, load_matrix, save_groups, save_matrix
from .metrics import score
from .screening import audit_screened_blocks, precompute_correlation, screen
from .simulation import SimConfig, simulate
from .solver import SolverConfig, fit, solve_restricted
from .tree import build_tree, format_tree

__all__ = ["main"]


def _emit(payload: dict, out_path) -> None:
    text = json.dumps(payload, indent=2, default=float)
    if out_path:
        Path(out_path).write_text(text + "\n")
    else:
        print(text)


def _add_lambdas(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda1", type=float, required=True)
    p.add_argument("--lambda2", type=float, required=True)
    p.add_argument("--lambda3", type=float, required=True)


def _add_blocks(p: argparse.ArgumentParser) -> None:
    p.add_argument("--block-inputs", type=int, default=2)
    p.add_argument("--block-outputs", type=int, default=2)


def _load_problem(args):
    ds = standardize(load_dataset(args.x, args.y))
    gs = load_groups(args.groups, num_inputs=ds.n_inputs, num_outputs=ds.n_outputs)
    rp = RegParams(lambda1=args.lambda1, lambda2=args.lambda2, lambda3=args.lambda3)
    return ds, gs, rp


def _cmd_simulate(args) -> int:
    cfg_kw = json.loads(Path(args.config).read_text()) if args.config else {}
    cfg = SimConfig(**cfg_kw)
    inst = simulate(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_matrix(out / "x.csv", inst.dataset.x)
    save_matrix(out / "y.csv", inst.dataset.y)
    save_matrix(out / "btrue.csv", inst.b_true)
    save_groups(out / "groups.txt", inst.groups)
    meta = asdict(cfg)
    meta.update(
        n_inputs=inst.groups.num_inputs,
        n_input_groups=inst.groups.n_input_groups,
        n_output_groups=inst.groups.n_output_groups,
        nonzero_planted=int(np.count_nonzero(inst.b_true)),
        standardized=True,
    )
    _emit(meta, out / "meta.json")
    return 0


def _cmd_screen(args) -> int:
    ds, gs, rp = _load_problem(args)
    t0 = time.perf_counter()
    tree = build_tree(gs, args.block_inputs, args.block_outputs)
    corr = precompute_correlation(ds)
    survivor = screen(tree, corr, gs, rp)
    wall_ms = 1000.0 * (time.perf_counter() - t0)
    payload = {
        "survivor_group_counts": survivor.group_counts(),
        "survivor_coefficient_count": survivor.coefficient_count,
        "nodes_visited": survivor.nodes_visited,
        "nodes_skipped": survivor.nodes_skipped,
        "wall_time_ms": wall_ms,
    }
    if args.safe:
        result = solve_restricted(ds, gs, rp, survivor)
        violations = audit_screened_blocks(tree, survivor, ds, result.b, gs, rp)
        payload["safe_violations"] = [
            {"input_group": m, "output_group": o, "lhs": lhs, "rhs": rhs}
            for m, o, lhs, rhs in violations
        ]
    _emit(payload, args.out)
    return 0


def _cmd_fit(args) -> int:
    ds, gs, rp = _load_problem(args)
    cfg_kw = json.loads(Path(args.config).read_text()) if args.config else {}
    cfg = SolverConfig(**cfg_kw)
    result = fit(
        ds,
        gs,
        rp,
        block_inputs=args.block_inputs,
        block_outputs=args.block_outputs,
        cfg=cfg,
        no_screen=args.no_screen,
        safe=args.safe,
    )
    prefix = Path(args.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    save_matrix(f"{prefix}.beta.csv", result.b)
    payload = {
        "lambda1": rp.lambda1,
        "lambda2": rp.lambda2,
        "lambda3": rp.lambda3,
        "iterations": result.iterations,
        "converged": result.converged,
        "screen_time_s": result.screen_time,
        "solve_time_s": result.solve_time,
        "final_objective": result.objective_trace[-1],
        "objective_trace": result.objective_trace,
        "survivor": {
            **result.survivor.group_counts(),
            "coefficient_count": result.survivor.coefficient_count,
            "input_group_ids": list(result.survivor.input_group_ids),
            "output_group_ids": list(result.survivor.output_group_ids),
        },
        "config": asdict(cfg),
        "prox_residual": result.prox_residual,
    }
    if result.safe_violations is not None:
        payload["safe_violations"] = [
            {"input_group": m, "output_group": o, "lhs": lhs, "rhs": rhs}
            for m, o, lhs, rhs in result.safe_violations
        ]
    _emit(payload, f"{prefix}.result.json")
    return 0


def _cmd_eval(args) -> int:
    b_est = load_matrix(args.est)
    b_true = load_matrix(args.truth)
    _emit(asdict(score(b_est, b_true, threshold=args.threshold)), args.out)
    return 0


def _cmd_bench(args) -> int:
    grid_kw = json.loads(Path(args.grid).read_text())
    grid = bench_mod.BenchGrid(
        axis=grid_kw["axis"],
        values=tuple(grid_kw["values"]),
        fixed=grid_kw.get("fixed", {}),
        replicates=grid_kw.get("replicates", 10),
        methods=tuple(grid_kw.get("methods", ("higt", "no_screen"))),
    )
    rows = bench_mod.run_grid(grid, workers=args.workers, warm_timing=not args.cold)
    csv_path = Path(args.out)
    md_path = csv_path.with_suffix(".md")
    bench_mod.write_report(rows, csv_path, md_path)
    print(f"wrote {csv_path} and {md_path}")
    return 0


def _cmd_tree(args) -> int:
    if args.tree_cmd != "dump":
        raise SystemExit(f"unknown tree subcommand {args.tree_cmd!r}")
    gs = load_groups(args.groups, num_inputs=args.num_inputs, num_outputs=args.num_outputs)
    tree = build_tree(gs, args.block_inputs, args.block_outputs)
    text = format_tree(tree)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="higt",
        description=(
            "Hierarchical group thresholding for multi-task regression with "
            "overlapping input/output group sparsity"
        ),
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("simulate", help="generate a seeded simulation instance")
    p.add_argument("--config", help="JSON file of simulation settings")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("screen", help="run the screening pass only")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--groups", required=True)
    _add_lambdas(p)
    _add_blocks(p)
    p.add_argument("--safe", action="store_true", help="audit screened blocks after a solve")
    p.add_argument("--out", help="JSON output path (default stdout)")
    p.set_defaults(func=_cmd_screen)

    p = sub.add_parser("fit", help="screen then solve; write beta and a result report")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--groups", required=True)
    _add_lambdas(p)
    _add_blocks(p)
    p.add_argument("--config", help="JSON file of solver settings")
    p.add_argument("--no-screen", action="store_true", help="solve without screening")
    p.add_argument("--safe", action="store_true", help="audit screened blocks post-solve")
    p.add_argument("--out", required=True, help="output prefix")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("eval", help="score an estimate against the truth")
    p.add_argument("--est", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--threshold", type=float, default=1e-6)
    p.add_argument("--out", help="JSON output path (default stdout)")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("bench", help="run a benchmark grid")
    p.add_argument("--grid", required=True, help="JSON grid definition")
    p.add_argument("--out", required=True, help="CSV report path")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--cold", action="store_true", help="skip the warm timing repetition")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("tree", help="tree utilities")
    p.add_argument("tree_cmd", choices=["dump"])
    p.add_argument("--groups", required=True)
    p.add_argument("--num-inputs", type=int, required=True)
    p.add_argument("--num-outputs", type=int, required=True)
    _add_blocks(p)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_tree)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
