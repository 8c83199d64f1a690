"""Command-line surface.

Subcommands: ``simulate`` (emit a synthetic data bundle), ``estimate`` (fit
one network), ``evaluate`` (score an estimated coefficient matrix against
the truth), ``replicate`` (factorial Monte Carlo sweep).

Exit codes: 0 success, 2 usage error, 3 data/validation error, 4 numerical
failure.  A JSON config file may supply any long-option value (dashes as
underscores); explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import io as csio
from .core import PenaltyParams, validate
from .dag import is_dag, write_edge_list
from .estimators import EstimatorConfig, fit_nps, fit_pcd_corrected, fit_pcd_naive
from .exceptions import ArgumentError, DataValidationError, NumericalError
from .metrics import evaluate_coefs
from .replicate import (
    METHODS,
    SweepSpec,
    run_sweep,
    write_metrics_csv,
    write_summary_csv,
)
from .simgen import (
    STRUCTURES,
    ContaminationSpec,
    contaminate,
    gen_data,
    random_dag,
    realized_reliability,
)
from .tuning import RcpParams, default_lambda_grid, select_lambda_rcp, select_lambda_sic, write_sweep_csv

CORRECTED_METHODS = ("pcd-corrected", "nps")


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    _apply_config(args)
    try:
        return args.func(args)
    except ArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataValidationError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="csdag",
        description="Directed acyclic Gaussian network estimation from "
        "error-prone node measurements.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="emit a synthetic data bundle")
    sim.add_argument("--config", type=Path)
    sim.add_argument("--p", type=int, default=None)
    sim.add_argument("--edges", type=int, default=None, help="default 3p")
    sim.add_argument("--max-parents", type=int, default=None)
    sim.add_argument("--n-per-node", type=int, default=None)
    sim.add_argument("--tau", type=float, default=None)
    sim.add_argument("--structure", choices=STRUCTURES, default=None)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--out-dir", type=Path, default=None)
    sim.set_defaults(func=cmd_simulate)

    est = sub.add_parser("estimate", help="fit one network from files")
    est.add_argument("--config", type=Path)
    est.add_argument("--data", type=Path, default=None, help="N x p CSV of observations")
    est.add_argument("--interventions", type=Path, default=None)
    est.add_argument("--sigma-u", type=Path, default=None)
    est.add_argument("--method", choices=METHODS, default=None)
    est.add_argument(
        "--lambda",
        dest="lam",
        default=None,
        help="penalty level, or 'auto' for the method's selector",
    )
    est.add_argument(
        "--selector",
        choices=("auto", "sic", "rcp"),
        default=None,
        help="override the method/selector pairing used by --lambda auto",
    )
    est.add_argument("--scad-a", type=float, default=None)
    est.add_argument("--outer-tol", type=float, default=None)
    est.add_argument("--max-outer-iters", type=int, default=None)
    est.add_argument("--zero-threshold", type=float, default=None)
    est.add_argument("--grid-size", type=int, default=None)
    est.add_argument("--grid-ratio", type=float, default=None)
    est.add_argument("--out", type=Path, default=None, help="output prefix")
    est.set_defaults(func=cmd_estimate)

    ev = sub.add_parser("evaluate", help="score an estimate against the truth")
    ev.add_argument("--config", type=Path)
    ev.add_argument("--true-b", type=Path, default=None)
    ev.add_argument("--est-b", type=Path, default=None)
    ev.add_argument("--threshold", type=float, default=None)
    ev.set_defaults(func=cmd_evaluate)

    rep = sub.add_parser("replicate", help="factorial Monte Carlo sweep")
    rep.add_argument("--config", type=Path)
    rep.add_argument("--p", type=int, default=None)
    rep.add_argument("--graphs", type=int, default=None)
    rep.add_argument("--tau", default=None, help="comma-separated levels")
    rep.add_argument("--structures", default=None, help="comma-separated")
    rep.add_argument("--methods", default=None, help="'all' or comma-separated")
    rep.add_argument("--n-per-node", type=int, default=None)
    rep.add_argument("--edges", type=int, default=None)
    rep.add_argument("--max-parents", type=int, default=None)
    rep.add_argument("--grid-size", type=int, default=None)
    rep.add_argument("--seed", type=int, default=None)
    rep.add_argument("--jobs", type=int, default=None, help="default $CSDAG_JOBS or 1")
    rep.add_argument("--out", type=Path, default=None, help="metrics CSV path")
    rep.add_argument("--progress", action="store_true")
    rep.set_defaults(func=cmd_replicate)
    return parser


def _apply_config(args) -> None:
    """Fill unset options from the JSON config file, if any."""
    cfg_path = getattr(args, "config", None)
    if cfg_path is None:
        return
    try:
        table = json.loads(Path(cfg_path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataValidationError(f"config file {cfg_path}: {exc}") from exc
    if not isinstance(table, dict):
        raise DataValidationError(f"config file {cfg_path}: expected a JSON object")
    for key, value in table.items():
        dest = key.replace("-", "_")
        if hasattr(args, dest) and getattr(args, dest) is None:
            setattr(args, dest, value)


def _need(args, name: str):
    value = getattr(args, name.replace("-", "_"))
    if value is None:
        raise ArgumentError(f"--{name} is required")
    return value


def cmd_simulate(args) -> int:
    p = int(_need(args, "p"))
    tau = float(_need(args, "tau"))
    seed = int(_need(args, "seed"))
    structure = args.structure or "diagonal"
    edges = int(args.edges) if args.edges is not None else 3 * p
    max_parents = int(args.max_parents) if args.max_parents is not None else 4
    n_per_node = int(args.n_per_node) if args.n_per_node is not None else 5
    out_dir = Path(args.out_dir) if args.out_dir is not None else Path(".")
    out_dir.mkdir(parents=True, exist_ok=True)

    ss = np.random.SeedSequence(seed)
    s_graph, s_data, s_noise = ss.spawn(3)
    net = random_dag(p, edges, max_parents, s_graph)
    x, intervened = gen_data(net, n_per_node, s_data)
    w, es = contaminate(
        x, ContaminationSpec(structure, tau), s_noise, intervened_node=intervened
    )

    files = {
        "data": "data.csv",
        "interventions": "interventions.txt",
        "true_b": "true_b.csv",
        "sigma_u": "sigma_u.csv",
    }
    csio.write_matrix_csv(out_dir / files["data"], w)
    csio.write_interventions(out_dir / files["interventions"], intervened)
    csio.write_matrix_csv(out_dir / files["true_b"], net.b_star.b)
    csio.write_matrix_csv(out_dir / files["sigma_u"], es.sigma_u)
    sigma2 = float(es.sigma_u[0, 0])
    manifest = {
        "seed": seed,
        "p": p,
        "tau": tau,
        "structure": structure,
        "n_edges": edges,
        "max_parents": max_parents,
        "n_per_node": n_per_node,
        "sigma_u2": sigma2,
        "realized_tau": [float(t) for t in realized_reliability(x, sigma2)],
        "files": files,
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )
    print(f"wrote {len(files) + 1} files to {out_dir}")
    return 0


def _estimator_config(args) -> EstimatorConfig:
    pen = PenaltyParams(1.0, args.scad_a if args.scad_a is not None else 3.7)
    kw = {}
    if args.outer_tol is not None:
        kw["outer_tol"] = float(args.outer_tol)
    if args.max_outer_iters is not None:
        kw["max_outer_iters"] = int(args.max_outer_iters)
    if args.zero_threshold is not None:
        kw["zero_threshold"] = float(args.zero_threshold)
    return EstimatorConfig(pen, **kw)


def cmd_estimate(args) -> int:
    method = _need(args, "method")
    ds = csio.load_dataset(_need(args, "data"), _need(args, "interventions"))
    report = validate(ds)
    if report is not None:
        raise DataValidationError(report)
    if method in CORRECTED_METHODS:
        if args.sigma_u is None:
            raise ArgumentError(f"--sigma-u is required for method {method}")
        es = csio.load_sigma_u(args.sigma_u)
        if es.p != ds.p:
            raise DataValidationError(
                f"sigma_u is {es.p}x{es.p} but data has p={ds.p} columns"
            )
    else:
        if args.sigma_u is not None:
            print("note: --sigma-u is ignored by the naive method", file=sys.stderr)
        es = None
    cfg = _estimator_config(args)
    out = Path(args.out) if args.out is not None else Path("fit")

    lam_arg = args.lam if args.lam is not None else "auto"
    sweep = None
    if str(lam_arg) == "auto":
        grid = default_lambda_grid(
            ds,
            int(args.grid_size) if args.grid_size is not None else 20,
            float(args.grid_ratio) if args.grid_ratio is not None else 0.01,
            "naive" if method == "pcd-naive" else "corrected",
            es,
        )
        selector = args.selector or "auto"
        if selector == "auto":
            selector = "rcp" if method == "pcd-naive" else "sic"
        if selector == "rcp":
            if method != "pcd-naive":
                raise ArgumentError("the RCP selector applies to pcd-naive only")
            sweep = select_lambda_rcp(ds, grid, RcpParams(), cfg)
        else:
            from .core import ErrorSpec

            es_sic = es if es is not None else ErrorSpec.zero(ds.p)
            fit_fn = {
                "pcd-corrected": fit_pcd_corrected,
                "nps": fit_nps,
                "pcd-naive": lambda d, e, c: fit_pcd_naive(d, c),
            }[method]
            sweep = select_lambda_sic(ds, es_sic, grid, fit_fn, cfg)
        result = sweep.fit
    else:
        try:
            lam = float(lam_arg)
        except ValueError as exc:
            raise ArgumentError(f"--lambda must be a number or 'auto', got {lam_arg!r}") from exc
        cfg = cfg.with_lambda(lam)
        if method == "pcd-corrected":
            result = fit_pcd_corrected(ds, es, cfg)
        elif method == "nps":
            result = fit_nps(ds, es, cfg)
        else:
            result = fit_pcd_naive(ds, cfg)

    graph = result.graph(cfg.zero_threshold)
    if not is_dag(graph):
        raise NumericalError("internal error: estimate violated the acyclicity postcondition")
    out.parent.mkdir(parents=True, exist_ok=True)
    Path(f"{out}.json").write_text(result.to_json() + "\n", encoding="utf-8")
    write_edge_list(graph, f"{out}_edges.txt")
    if sweep is not None:
        write_sweep_csv(f"{out}_sweep.csv", sweep)
    print(
        f"method={result.diagnostics.method} lambda={result.diagnostics.lam:.6g} "
        f"edges={graph.n_edges} converged={result.diagnostics.converged}"
    )
    return 0


def cmd_evaluate(args) -> int:
    b_true = csio.load_coef_csv(_need(args, "true-b"))
    b_hat = csio.load_coef_csv(_need(args, "est-b"))
    threshold = float(args.threshold) if args.threshold is not None else 1e-4
    ev = evaluate_coefs(b_true, b_hat, threshold)
    print(
        json.dumps(
            {
                "tpr": ev.tpr,
                "fdr": ev.fdr,
                "specificity": ev.specificity,
                "correctness": ev.correctness,
                "frob_scaled": ev.frob_scaled,
            }
        )
    )
    return 0


def cmd_replicate(args) -> int:
    p = int(_need(args, "p"))
    taus = _parse_floats(args.tau) if args.tau is not None else (0.8, 0.85, 0.9, 0.95, 1.0)
    structures = (
        tuple(args.structures.split(",")) if args.structures is not None else ("diagonal", "ar")
    )
    for s in structures:
        if s not in STRUCTURES:
            raise ArgumentError(f"unknown structure {s!r}")
    if args.methods is None or args.methods == "all":
        methods = METHODS
    else:
        methods = tuple(args.methods.split(","))
        for m in methods:
            if m not in METHODS:
                raise ArgumentError(f"unknown method {m!r}")
    spec = SweepSpec(
        p=p,
        n_graphs=int(args.graphs) if args.graphs is not None else 10,
        taus=taus,
        structures=structures,
        methods=methods,
        n_per_node=int(args.n_per_node) if args.n_per_node is not None else 5,
        n_edges=int(args.edges) if args.edges is not None else None,
        max_parents=int(args.max_parents) if args.max_parents is not None else 4,
        grid_size=int(args.grid_size) if args.grid_size is not None else 20,
        seed=int(args.seed) if args.seed is not None else 0,
    )
    jobs = args.jobs if args.jobs is not None else int(os.environ.get("CSDAG_JOBS", "1"))
    progress = None
    if args.progress:
        total = spec.n_graphs * len(spec.taus) * len(spec.structures) * len(spec.methods)
        progress = lambda done: print(f"rows {done}/{total}", file=sys.stderr)
    rows, summary = run_sweep(spec, jobs=jobs, progress=progress)
    out = Path(args.out) if args.out is not None else Path("metrics.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_metrics_csv(out, rows)
    summary_path = out.with_name(out.stem + "_summary" + out.suffix)
    write_summary_csv(summary_path, summary)
    print(f"wrote {len(rows)} rows to {out} and {len(summary)} to {summary_path}")
    return 0


def _parse_floats(text: str) -> tuple:
    try:
        return tuple(float(tok) for tok in str(text).split(","))
    except ValueError as exc:
        raise ArgumentError(f"expected comma-separated numbers, got {text!r}") from exc


if __name__ == "__main__":
    sys.exit(main())
