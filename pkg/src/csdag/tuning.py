"""Tuning-parameter selection.

Two selectors: a score-based information criterion (SIC) for the corrected
methods, and the relative change in prediction error (RCP) for the naive
method.  Both walk a strictly decreasing grid of candidate penalty levels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import DataSet, ErrorSpec
from .dag import DirectedGraph
from .estimators import EstimatorConfig, FitResult, fit_pcd_naive
from .exceptions import ArgumentError, NumericalError
from .score import ScoreContext, corrected_ls_embedded, v_quadratic


@dataclass(frozen=True)
class LambdaGrid:
    """Strictly decreasing positive candidate penalty levels, m >= 2."""

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) < 2:
            raise ArgumentError("grid needs at least two candidate values")
        if any(v <= 0 for v in vals):
            raise ArgumentError("grid values must be positive")
        if any(a <= b for a, b in zip(vals, vals[1:])):
            raise ArgumentError("grid values must be strictly decreasing")
        object.__setattr__(self, "values", vals)

    @property
    def m(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class RcpParams:
    """Threshold fraction of the largest observed RCP."""

    alpha: float = 0.1

    def __post_init__(self):
        if not (0 < self.alpha <= 1):
            raise ArgumentError(f"alpha must lie in (0, 1], got {self.alpha}")


def lambda_max(ds: DataSet, objective: str = "corrected", es: ErrorSpec | None = None) -> float:
    """Smallest penalty that keeps every coefficient at zero in the
    single-coordinate case, i.e. the largest level worth putting on a grid.

    A zero coefficient is a local minimum of objective + SCAD exactly when
    the objective's derivative at zero is at most lambda in magnitude, so
    the scale is the largest single-coordinate derivative at B = 0: for the
    corrected sandwich form that derivative is evaluated analytically; for
    the naive log-RSS objective it is n_{-j} |sum W_i W_j| / sum W_j^2.
    """
    from .pcd import PairWorkspace
    from .score import ScoreContext

    if objective not in ("corrected", "naive"):
        raise ArgumentError(f"objective must be 'corrected' or 'naive', got {objective}")
    if objective == "corrected" and es is None:
        es = ErrorSpec.zero(ds.p)
    best = 0.0
    for j in range(ds.p):
        if objective == "naive":
            rows = np.flatnonzero(ds.intervened_node != j)
            wj = ds.w[rows, j]
            denom = float(wj @ wj)
            if denom <= 0:
                continue
            cross = ds.w[rows].T @ wj  # entry i: sum W_i W_j over O_j
            cross[j] = 0.0
            best = max(best, rows.size * float(np.abs(cross).max()) / denom)
        else:
            ctx = ScoreContext.for_node(ds, es, j)
            zero = np.zeros(ds.p - 1)
            for pos in range(ds.p - 1):
                ws = PairWorkspace(ctx, zero, pos)
                d1, _ = ws.v_derivs(0.0)
                best = max(best, abs(d1))
    return best


def default_lambda_grid(
    ds: DataSet,
    m: int = 20,
    ratio: float = 0.01,
    objective: str = "corrected",
    es: ErrorSpec | None = None,
) -> LambdaGrid:
    """m log-spaced values from lambda_max down to ratio * lambda_max."""
    top = lambda_max(ds, objective, es)
    if top <= 0:
        raise ArgumentError("data admits no positive penalty scale (lambda_max = 0)")
    return LambdaGrid(tuple(np.geomspace(top, ratio * top, m)))


def sic(ds: DataSet, es: ErrorSpec, g: DirectedGraph) -> float:
    """Score-based information criterion of a graph.

    Sum over nodes of the sandwich quadratic form at the unpenalized
    corrected estimate restricted to the graph's parent set, plus
    e_j * log(n_{-j}) / n_{-j} for graph complexity.
    """
    total = 0.0
    for j in range(ds.p):
        ctx = ScoreContext.for_node(ds, es, j)
        parents = g.parents(j)
        bj, _ = corrected_ls_embedded(ctx, parents)
        n = ctx.n_obs
        total += v_quadratic(ctx, bj) + len(parents) * math.log(n) / n
    return total


@dataclass(frozen=True)
class SweepRow:
    lam: float
    n_edges: int
    score: float  # SIC, or PE for the RCP sweep
    rcp: float | None
    selected: bool
    failed: bool = False


@dataclass(frozen=True)
class SelectionResult:
    lam: float
    fit: FitResult
    rows: tuple[SweepRow, ...]
    flagged: bool = False  # RCP only: no informative change anywhere


def select_lambda_sic(
    ds: DataSet,
    es: ErrorSpec,
    grid: LambdaGrid,
    fit: Callable[[DataSet, ErrorSpec, EstimatorConfig], FitResult],
    cfg: EstimatorConfig,
) -> SelectionResult:
    """Fit once per grid point and keep the smallest SIC (ties -> larger
    penalty, i.e. the sparser graph).  Failed grid points are skipped."""
    best = None  # (sic, lam, fit)
    entries = []
    for lam in grid.values:
        try:
            res = fit(ds, es, cfg.with_lambda(lam))
            crit = sic(ds, es, res.graph(cfg.zero_threshold))
        except NumericalError:
            entries.append((lam, None, math.nan))
            continue
        entries.append((lam, res, crit))
        if best is None or crit < best[0]:
            best = (crit, lam, res)
    if best is None:
        raise NumericalError("every grid point failed to fit")
    rows = tuple(
        SweepRow(
            lam,
            res.graph(cfg.zero_threshold).n_edges if res is not None else 0,
            crit,
            None,
            res is not None and lam == best[1],
            failed=res is None,
        )
        for lam, res, crit in entries
    )
    return SelectionResult(best[1], best[2], rows)


def prediction_error(ds: DataSet, fit: FitResult) -> float:
    """Observational squared prediction error summed over nodes."""
    total = 0.0
    for j in range(ds.p):
        rows = np.flatnonzero(ds.intervened_node != j)
        bj = fit.b_hat.column(j)
        cols = np.concatenate([np.arange(j), np.arange(j + 1, ds.p)])
        resid = ds.w[rows, j] - ds.w[np.ix_(rows, cols)] @ bj
        total += float(resid @ resid)
    return total


def select_lambda_rcp(
    ds: DataSet,
    grid: LambdaGrid,
    params: RcpParams,
    cfg: EstimatorConfig,
) -> SelectionResult:
    """Naive-method selector trading prediction accuracy against density.

    RCP_{k-1,k} = (PE_{k-1} - PE_k) / (e_k - e_{k-1}) when the edge count
    grows, else 0.  The chosen index is the largest k whose RCP clears
    alpha times the maximum RCP; when every RCP is zero the smallest
    penalty is returned with a flag.
    """
    fits, pes, edges = [], [], []
    for lam in grid.values:
        res = fit_pcd_naive(ds, cfg.with_lambda(lam))
        fits.append(res)
        pes.append(prediction_error(ds, res))
        edges.append(res.graph(cfg.zero_threshold).n_edges)
    m = grid.m
    rcp = [0.0] * m  # rcp[k] pairs grid points k-1 and k, k >= 1
    for k in range(1, m):
        gain = edges[k] - edges[k - 1]
        rcp[k] = (pes[k - 1] - pes[k]) / gain if gain > 0 else 0.0
    top = max(rcp[1:])
    flagged = top <= 0.0
    k_sel = max(k for k in range(1, m) if rcp[k] >= params.alpha * top)
    rows = tuple(
        SweepRow(
            grid.values[k],
            edges[k],
            pes[k],
            rcp[k] if k >= 1 else None,
            k == k_sel,
        )
        for k in range(m)
    )
    return SelectionResult(grid.values[k_sel], fits[k_sel], rows, flagged)


def write_sweep_csv(path, result: SelectionResult) -> None:
    """Sweep report: lambda, edge count, criterion value, selected flag."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("lambda,n_edges,score,rcp,selected,failed\n")
        for row in result.rows:
            rcp = "" if row.rcp is None else f"{row.rcp:.17g}"
            fh.write(
                f"{row.lam:.17g},{row.n_edges},{row.score:.17g},{rcp},"
                f"{int(row.selected)},{int(row.failed)}\n"
            )
