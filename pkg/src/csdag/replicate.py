"""Monte Carlo sweep harness: graphs x reliability levels x error
structures x methods, with per-cell metric rows and per-condition
aggregates.

Graphs are pinned by graph index (identical across reliability levels and
structures); data and noise are redrawn per cell.  Within a cell every
method fits the same dataset.  Cells are independent, so they can be
distributed over a process pool; rows are merged in a fixed sort order
either way.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from statistics import mean, median

import numpy as np

from .core import DataSet, ErrorSpec, PenaltyParams
from .estimators import EstimatorConfig, fit_nps, fit_pcd_corrected
from .exceptions import CsdagError
from .metrics import evaluate_coefs
from .simgen import ContaminationSpec, TrueNetwork, contaminate, gen_data, random_dag
from .tuning import (
    RcpParams,
    SelectionResult,
    default_lambda_grid,
    select_lambda_rcp,
    select_lambda_sic,
)

METHODS = ("pcd-naive", "pcd-corrected", "nps")

ROW_FIELDS = (
    "graph",
    "tau",
    "structure",
    "method",
    "status",
    "lambda",
    "n_edges",
    "tpr",
    "fdr",
    "specificity",
    "correctness",
    "frob_scaled",
    "seconds",
)

SUMMARY_FIELDS = (
    "tau",
    "structure",
    "method",
    "n_ok",
    "tpr_mean",
    "fdr_mean",
    "specificity_mean",
    "correctness_mean",
    "frob_mean",
    "frob_median",
)


@dataclass(frozen=True)
class SweepSpec:
    p: int = 10
    n_graphs: int = 10
    taus: tuple = (0.8, 0.85, 0.9, 0.95, 1.0)
    structures: tuple = ("diagonal", "ar")
    methods: tuple = METHODS
    n_per_node: int = 5
    n_edges: int | None = None  # default 3p
    max_parents: int = 4
    grid_size: int = 20
    grid_ratio: float = 0.01
    scad_a: float = 3.7
    seed: int = 0

    def edge_count(self) -> int:
        return 3 * self.p if self.n_edges is None else self.n_edges

    def config(self) -> EstimatorConfig:
        return EstimatorConfig(PenaltyParams(1.0, self.scad_a))


def _graph_for(spec: SweepSpec, graph_idx: int) -> TrueNetwork:
    seed = np.random.SeedSequence([spec.seed, 101, graph_idx])
    return random_dag(spec.p, spec.edge_count(), spec.max_parents, seed)


def _cell_data(spec: SweepSpec, net: TrueNetwork, graph_idx, tau, structure):
    tau_key = int(round(tau * 1000))
    s_idx = list(spec.structures).index(structure) if structure in spec.structures else 0
    s_data = np.random.SeedSequence([spec.seed, 202, graph_idx, tau_key, s_idx])
    s_noise = np.random.SeedSequence([spec.seed, 303, graph_idx, tau_key, s_idx])
    x, intervened = gen_data(net, spec.n_per_node, s_data)
    w, es = contaminate(
        x, ContaminationSpec(structure, tau), s_noise, intervened_node=intervened
    )
    return DataSet(w, intervened), es


def fit_with_selector(
    method: str, ds: DataSet, es: ErrorSpec, cfg: EstimatorConfig, grid
) -> SelectionResult:
    """Method/selector pairing: RCP for the naive method, SIC otherwise."""
    if method == "pcd-naive":
        return select_lambda_rcp(ds, grid, RcpParams(), cfg)
    fit = fit_pcd_corrected if method == "pcd-corrected" else fit_nps
    return select_lambda_sic(ds, es, grid, fit, cfg)


def run_cell(spec: SweepSpec, graph_idx: int, tau: float, structure: str) -> list[dict]:
    """All requested methods on one simulated dataset; one row each."""
    net = _graph_for(spec, graph_idx)
    ds, es = _cell_data(spec, net, graph_idx, tau, structure)
    cfg = spec.config()
    rows = []
    for method in spec.methods:
        base = {
            "graph": graph_idx,
            "tau": tau,
            "structure": structure,
            "method": method,
        }
        t0 = time.perf_counter()
        try:
            objective = "naive" if method == "pcd-naive" else "corrected"
            grid = default_lambda_grid(
                ds, spec.grid_size, spec.grid_ratio, objective, es
            )
            sel = fit_with_selector(method, ds, es, cfg, grid)
            ev = evaluate_coefs(net.b_star, sel.fit.b_hat, cfg.zero_threshold)
            rows.append(
                base
                | {
                    "status": "ok",
                    "lambda": sel.lam,
                    "n_edges": sel.fit.graph(cfg.zero_threshold).n_edges,
                    "tpr": ev.tpr,
                    "fdr": ev.fdr,
                    "specificity": ev.specificity,
                    "correctness": ev.correctness,
                    "frob_scaled": ev.frob_scaled,
                    "seconds": time.perf_counter() - t0,
                }
            )
        except CsdagError as exc:
            rows.append(
                base
                | {
                    "status": f"error: {exc}",
                    "lambda": float("nan"),
                    "n_edges": -1,
                    "tpr": float("nan"),
                    "fdr": float("nan"),
                    "specificity": float("nan"),
                    "correctness": float("nan"),
                    "frob_scaled": float("nan"),
                    "seconds": time.perf_counter() - t0,
                }
            )
    return rows


def _run_cell_star(args):
    return run_cell(*args)


def run_sweep(spec: SweepSpec, jobs: int = 1, progress=None) -> tuple[list, list]:
    """Full factorial; returns (rows, summary_rows) in deterministic order."""
    cells = [
        (spec, g, tau, structure)
        for g in range(spec.n_graphs)
        for tau in spec.taus
        for structure in spec.structures
    ]
    rows: list[dict] = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for cell_rows in pool.map(_run_cell_star, cells):
                rows.extend(cell_rows)
                if progress:
                    progress(len(rows))
    else:
        for cell in cells:
            rows.extend(_run_cell_star(cell))
            if progress:
                progress(len(rows))
    method_rank = {m: k for k, m in enumerate(METHODS)}
    rows.sort(
        key=lambda r: (
            r["graph"],
            r["tau"],
            r["structure"],
            method_rank.get(r["method"], 99),
        )
    )
    return rows, summarize(rows)


def summarize(rows: list) -> list:
    """Per (tau, structure, method): means of the rate metrics, mean and
    median of the scaled Frobenius error, over successful rows."""
    keys = sorted(
        {(r["tau"], r["structure"], r["method"]) for r in rows},
        key=lambda k: (k[0], k[1], k[2]),
    )
    out = []
    for tau, structure, method in keys:
        ok = [
            r
            for r in rows
            if (r["tau"], r["structure"], r["method"]) == (tau, structure, method)
            and r["status"] == "ok"
        ]
        if not ok:
            out.append(
                {
                    "tau": tau,
                    "structure": structure,
                    "method": method,
                    "n_ok": 0,
                    "tpr_mean": float("nan"),
                    "fdr_mean": float("nan"),
                    "specificity_mean": float("nan"),
                    "correctness_mean": float("nan"),
                    "frob_mean": float("nan"),
                    "frob_median": float("nan"),
                }
            )
            continue
        out.append(
            {
                "tau": tau,
                "structure": structure,
                "method": method,
                "n_ok": len(ok),
                "tpr_mean": mean(r["tpr"] for r in ok),
                "fdr_mean": mean(r["fdr"] for r in ok),
                "specificity_mean": mean(r["specificity"] for r in ok),
                "correctness_mean": mean(r["correctness"] for r in ok),
                "frob_mean": mean(r["frob_scaled"] for r in ok),
                "frob_median": median(r["frob_scaled"] for r in ok),
            }
        )
    return out


def _write_rows(path, rows, fields) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(fields) + "\n")
        for r in rows:
            fh.write(",".join(_fmt(r[f]) for f in fields) + "\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v).replace(",", ";")


def write_metrics_csv(path, rows) -> None:
    _write_rows(path, rows, ROW_FIELDS)


def write_summary_csv(path, rows) -> None:
    _write_rows(path, rows, SUMMARY_FIELDS)
