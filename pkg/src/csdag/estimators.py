"""Full network estimation procedures.

All three estimators share the same outer loop:

  Step 1   initialize each column by an unpenalized full-support solve;
  Step 2   update coefficients (pairwise coordinate descent, or one
           penalized score equation per node for the node-wise variant);
  Step 3   refit each implied parent set without penalty and attach an
           M-estimator sandwich p-value to every edge;
  Step 4   run Kahn's sorting with weakest-edge elimination and zero the
           removed coefficients;
  Step 5   stop once the max-norm change of the coefficient matrix is within
           ``outer_tol``, else return to Step 2.

The result always induces a DAG because every iterate passes Step 4.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .core import ZERO_THRESHOLD, CoefMatrix, DataSet, ErrorSpec, PenaltyParams, validate
from .dag import DirectedGraph, TopoResult, graph_from_coefs, kahn_eliminate
from .exceptions import ArgumentError, DataValidationError, NumericalError
from .pcd import PcdState, sweep_corrected, sweep_naive
from .penalty import scad_d1
from .score import (
    ScoreContext,
    corrected_ls_embedded,
    floored_spd,
    sandwich_pvalues,
)


@dataclass(frozen=True)
class EstimatorConfig:
    """Shared knobs of the outer loop and the inner 1-D solvers."""

    penalty: PenaltyParams
    outer_tol: float = 1e-4
    max_outer_iters: int = 100
    nr_tol: float = 1e-8
    nr_max_iters: int = 50
    zero_threshold: float = ZERO_THRESHOLD

    def __post_init__(self):
        if min(self.outer_tol, self.nr_tol, self.zero_threshold) <= 0:
            raise ArgumentError("tolerances must be positive")
        if min(self.max_outer_iters, self.nr_max_iters) < 1:
            raise ArgumentError("iteration caps must be at least 1")

    def with_lambda(self, lam: float) -> "EstimatorConfig":
        return replace(self, penalty=replace(self.penalty, lam=lam))


@dataclass
class FitDiagnostics:
    method: str
    lam: float
    converged: bool = False
    n_outer_iters: int = 0
    removed_per_iteration: list = field(default_factory=list)
    nr_fallbacks: int = 0
    gram_rescues: int = 0
    degenerate_pvalues: int = 0


@dataclass(frozen=True)
class FitResult:
    """Estimated coefficient matrix (DAG-inducing), the topological order of
    the final graph, and per-fit diagnostics."""

    b_hat: CoefMatrix
    order: tuple[int, ...]
    diagnostics: FitDiagnostics

    def graph(self, threshold: float = ZERO_THRESHOLD) -> DirectedGraph:
        return graph_from_coefs(self.b_hat, threshold)

    def to_dict(self) -> dict:
        d = self.diagnostics
        return {
            "method": d.method,
            "lambda": d.lam,
            "p": self.b_hat.p,
            "b_hat": [[float(v) for v in row] for row in self.b_hat.b],
            "order": list(self.order),
            "removed_edges": [list(e) for e in self.removed_edges()],
            "diagnostics": {
                "converged": d.converged,
                "n_outer_iters": d.n_outer_iters,
                "removed_per_iteration": [
                    [list(e) for e in edges] for edges in d.removed_per_iteration
                ],
                "nr_fallbacks": d.nr_fallbacks,
                "gram_rescues": d.gram_rescues,
                "degenerate_pvalues": d.degenerate_pvalues,
            },
        }

    def removed_edges(self) -> list:
        last = self.diagnostics.removed_per_iteration
        return list(last[-1]) if last else []

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _contexts(ds: DataSet, es: ErrorSpec) -> list[ScoreContext]:
    report = validate(ds)
    if report is not None:
        raise DataValidationError(report)
    return [ScoreContext.for_node(ds, es, j) for j in range(ds.p)]


def _init_corrected(ctxs, diag) -> np.ndarray:
    p = len(ctxs)
    b = np.zeros((p, p))
    for j, ctx in enumerate(ctxs):
        bj, rescued = corrected_ls_embedded(ctx, set(ctx.cols))
        if rescued:
            diag.gram_rescues += 1
        b[ctx.cols, j] = bj
    return b


def _init_ols(ctxs) -> np.ndarray:
    p = len(ctxs)
    b = np.zeros((p, p))
    for j, ctx in enumerate(ctxs):
        sol, *_ = np.linalg.lstsq(ctx.wx, ctx.wy, rcond=None)
        b[ctx.cols, j] = sol
    return b


def _edge_pvalues(ctxs, b, g: DirectedGraph, diag):
    """Step 3: sandwich p-values for every edge of the implied graph."""
    weakness, strength = {}, {}
    for j in range(len(ctxs)):
        parents = g.parents(j)
        if not parents:
            continue
        stats = sandwich_pvalues(ctxs[j], parents)
        if stats.gram_rescued:
            diag.gram_rescues += 1
        diag.degenerate_pvalues += int(stats.degenerate.sum())
        for i, pv in zip(stats.parents, stats.pvalue):
            weakness[(i, j)] = float(pv)
            strength[(i, j)] = abs(float(b[i, j]))
    return weakness, strength


def _outer_loop(ctxs, b, sweep, cfg: EstimatorConfig, diag: FitDiagnostics) -> FitResult:
    p = len(ctxs)
    topo: TopoResult | None = None
    for t in range(cfg.max_outer_iters):
        b_prev = b.copy()
        try:
            sweep(b)
            g = graph_from_coefs(CoefMatrix(b), cfg.zero_threshold)
            weakness, strength = _edge_pvalues(ctxs, b, g, diag)
            topo = kahn_eliminate(g, weakness, strength)
        except NumericalError as exc:
            raise NumericalError(f"outer iteration {t}: {exc}") from exc
        for i, j in topo.removed_edges:
            b[i, j] = 0.0
        diag.removed_per_iteration.append(list(topo.removed_edges))
        diag.n_outer_iters = t + 1
        if np.abs(b - b_prev).max() <= cfg.outer_tol:
            diag.converged = True
            break
    assert topo is not None
    return FitResult(CoefMatrix(b.copy()), topo.order, diag)


def fit_pcd_corrected(ds: DataSet, es: ErrorSpec, cfg: EstimatorConfig) -> FitResult:
    """Corrected-score network estimate via pairwise coordinate descent.

    Parameters
    ----------
    ds : DataSet
        Observed data with intervention assignment.
    es : ErrorSpec
        Known measurement-error covariance.
    cfg : EstimatorConfig
        Penalty level and iteration controls.

    Returns
    -------
    FitResult
        Coefficient matrix inducing a DAG, topological order, diagnostics.
        A fit that hits ``max_outer_iters`` is returned with
        ``diagnostics.converged = False`` rather than raised.
    """
    diag = FitDiagnostics("pcd-corrected", cfg.penalty.lam)
    ctxs = _contexts(ds, es)
    b = _init_corrected(ctxs, diag)
    state = PcdState(
        ctxs, b, cfg.penalty, cfg.zero_threshold, cfg.nr_tol, cfg.nr_max_iters
    )

    def sweep(mat):
        sweep_corrected(state)
        diag.nr_fallbacks = state.nr_fallbacks

    return _outer_loop(ctxs, b, sweep, cfg, diag)


def fit_pcd_naive(ds: DataSet, cfg: EstimatorConfig) -> FitResult:
    """Naive penalized log-likelihood estimate (measurement error ignored).

    Same outer skeleton as the corrected fit; 1-D updates use the
    closed-form roots of the log-RSS stationarity equation and Step 3 uses
    ordinary least-squares sandwich variances.
    """
    diag = FitDiagnostics("pcd-naive", cfg.penalty.lam)
    ctxs = _contexts(ds, ErrorSpec.zero(ds.p))
    b = _init_ols(ctxs)
    state = PcdState(
        ctxs, b, cfg.penalty, cfg.zero_threshold, cfg.nr_tol, cfg.nr_max_iters
    )

    def sweep(mat):
        sweep_naive(state)
        diag.nr_fallbacks = state.nr_fallbacks

    return _outer_loop(ctxs, b, sweep, cfg, diag)


def nps_node_solve(
    ctx: ScoreContext, bj0: np.ndarray, pen: PenaltyParams, cfg: EstimatorConfig
) -> tuple[np.ndarray, bool]:
    """Solve one node's penalized score equation by quasi-Newton.

    The penalty Jacobian uses the diagonal local-quadratic approximation
    I(beta != 0) * |P'(|beta|)| / |beta|.  Any coefficient landing below
    ``zero_threshold`` after a step is clamped to zero and frozen for the
    remainder of this solve.  Returns (column, diverged); on divergence the
    caller keeps the previous column.
    """
    n = ctx.n_obs
    a_mat = ctx.wx.T @ ctx.wx / n - ctx.suu
    cvec = ctx.wx.T @ ctx.wy / n
    b = np.asarray(bj0, dtype=float).copy()
    frozen = np.zeros(b.size, dtype=bool)

    def residual(vec):
        return cvec - a_mat @ vec - scad_d1(vec, pen)

    f = residual(b)
    for _ in range(cfg.nr_max_iters):
        free = ~frozen
        if not free.any():
            return b, False
        fr = f[free]
        if np.abs(fr).max() <= cfg.nr_tol * (1.0 + np.abs(b).max()):
            return b, False
        weights = np.zeros(b.size)
        nz = free & (b != 0.0)
        weights[nz] = np.abs(scad_d1(b[nz], pen)) / np.abs(b[nz])
        jac = a_mat[np.ix_(free, free)] + np.diag(weights[free])
        try:
            step = np.linalg.solve(jac, fr)
        except np.linalg.LinAlgError:
            jac, _ = floored_spd(jac)
            try:
                step = np.linalg.solve(jac, fr)
            except np.linalg.LinAlgError:
                return np.asarray(bj0, dtype=float).copy(), True
        norm0 = np.linalg.norm(fr)
        accepted = False
        scale = 1.0
        for _ in range(20):
            cand = b.copy()
            cand[free] += scale * step
            small = free & (np.abs(cand) < cfg.zero_threshold)
            # clamping a coefficient shrinks the active system, which counts
            # as progress on its own; the frozen set only ever grows, so this
            # can occur at most p-1 times per solve
            if small.any() or np.linalg.norm(residual(cand)[free]) < norm0:
                accepted = True
                break
            scale /= 2.0
        if not accepted:
            return np.asarray(bj0, dtype=float).copy(), True
        cand[small] = 0.0
        frozen |= small
        b = cand
        f = residual(b)
    return np.asarray(bj0, dtype=float).copy(), True


def fit_nps(ds: DataSet, es: ErrorSpec, cfg: EstimatorConfig) -> FitResult:
    """Corrected-score network estimate via node-wise parent selection.

    Step 2 solves, for each node, the penalized corrected score equation by
    quasi-Newton starting from the previous iterate; the node solves are
    independent given that iterate.  Steps 3-5 are shared with the pairwise
    estimators.
    """
    diag = FitDiagnostics("nps", cfg.penalty.lam)
    ctxs = _contexts(ds, es)
    b = _init_corrected(ctxs, diag)

    def sweep(mat):
        for j, ctx in enumerate(ctxs):
            col, diverged = nps_node_solve(ctx, mat[ctx.cols, j], cfg.penalty, cfg)
            if diverged:
                diag.nr_fallbacks += 1
            else:
                mat[ctx.cols, j] = col

    return _outer_loop(ctxs, b, sweep, cfg, diag)
