"""Corrected-score kernel for one node's regression model.

For node ``j`` the per-row score at coefficient vector ``bj`` (length p-1,
ordered by ascending node index with ``j`` removed) is

    psi_l(bj) = (W[l, j] - W[l, -j] @ bj) * W[l, -j] + sigma_u[-j, -j] @ bj,

summed over the observational rows O_j.  With sigma_u = 0 this is the
ordinary least-squares score.  The quadratic form V_j sandwiches the mean
score between inverses of its empirical second moment H_j.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.stats import norm

from .core import DataSet, ErrorSpec, minus, observational_rows
from .exceptions import ArgumentError, NumericalError

#: Relative ridge added to H_j before inversion (keeps V_j defined on
#: degenerate iterates without materially shifting well-conditioned solves).
H_RIDGE = 1e-8

#: Relative eigenvalue floor for the corrected Gram matrix, which can be
#: indefinite at small n.
GRAM_FLOOR = 1e-10


@dataclass(frozen=True)
class ScoreContext:
    """Read-only bundle (data, error covariance, node) with cached slices."""

    ds: DataSet
    es: ErrorSpec
    j: int
    rows: np.ndarray  # O_j, ascending
    cols: np.ndarray  # node indices != j, ascending
    wx: np.ndarray  # W[O_j, -j], shape (n_obs, p-1)
    wy: np.ndarray  # W[O_j, j]
    suu: np.ndarray  # sigma_u[-j, -j]

    @classmethod
    def for_node(cls, ds: DataSet, es: ErrorSpec, j: int) -> "ScoreContext":
        if es.p != ds.p:
            raise ArgumentError(
                f"sigma_u is {es.p}x{es.p} but data has p={ds.p} nodes"
            )
        rows = observational_rows(ds, j)
        cols = minus(j, ds.p)
        wx = ds.w[np.ix_(rows, cols)]
        wy = ds.w[rows, j]
        return cls(ds, es, j, rows, cols, wx, wy, es.submatrix(cols))

    @property
    def n_obs(self) -> int:
        return self.rows.shape[0]


def psi(ctx: ScoreContext, row: int, bj: np.ndarray) -> np.ndarray:
    """Corrected score of observational row ``row`` (index into the full data
    matrix) at coefficient vector ``bj``."""
    pos = np.flatnonzero(ctx.rows == row)
    if pos.size == 0:
        raise ArgumentError(f"row {row} is not observational for node {ctx.j}")
    k = int(pos[0])
    resid = ctx.wy[k] - ctx.wx[k] @ bj
    return resid * ctx.wx[k] + ctx.suu @ bj


def score_matrix(ctx: ScoreContext, bj: np.ndarray) -> np.ndarray:
    """All per-row scores stacked as rows: shape (n_obs, p-1)."""
    resid = ctx.wy - ctx.wx @ bj
    return resid[:, None] * ctx.wx + (ctx.suu @ bj)[None, :]


def mean_score(ctx: ScoreContext, bj: np.ndarray) -> np.ndarray:
    return score_matrix(ctx, bj).mean(axis=0)


def h_matrix(ctx: ScoreContext, bj: np.ndarray) -> np.ndarray:
    """Empirical second moment of the scores, symmetric PSD."""
    c = score_matrix(ctx, bj)
    return (c.T @ c) / ctx.n_obs


def v_quadratic(ctx: ScoreContext, bj: np.ndarray) -> float:
    """Sandwich quadratic form psi_bar' H^{-1} psi_bar, nonnegative.

    H receives a relative ridge before inversion; an all-zero H forces an
    all-zero mean score, for which the form is 0 by continuity.
    """
    c = score_matrix(ctx, bj)
    n = ctx.n_obs
    m = c.T @ c  # n * H
    cbar = c.sum(axis=0)  # n * psi_bar
    return quad_form(m, cbar, n, ctx.j)


def quad_form(m: np.ndarray, cbar: np.ndarray, n: int, j: int) -> float:
    """(cbar/n)' (m/n + eps I)^{-1} (cbar/n) with the standard ridge."""
    tr = float(np.trace(m))
    if tr == 0.0:
        return 0.0
    mr = m + (H_RIDGE * tr / m.shape[0]) * np.eye(m.shape[0])
    try:
        sol = cho_solve(cho_factor(mr, lower=True), cbar)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"H matrix singular beyond ridge rescue at node {j}") from exc
    return float(cbar @ sol) / n


def naive_v(ctx: ScoreContext, bj: np.ndarray) -> float:
    """(n_{-j}/2) * log of the residual sum of squares; errors on a perfect fit."""
    resid = ctx.wy - ctx.wx @ bj
    rss = float(resid @ resid)
    if rss <= 0.0:
        raise NumericalError(
            f"zero residual sum of squares at node {ctx.j}: log-RSS undefined"
        )
    return 0.5 * ctx.n_obs * np.log(rss)


def floored_spd(mat: np.ndarray) -> tuple[np.ndarray, bool]:
    """Shift a symmetric matrix so its minimum eigenvalue reaches the
    relative floor; returns (matrix, whether a shift was applied)."""
    ev = np.linalg.eigvalsh(mat)
    scale = float(np.abs(ev).max()) if ev.size else 0.0
    floor = GRAM_FLOOR * scale
    if ev.size and ev[0] < floor:
        return mat + (floor - ev[0]) * np.eye(mat.shape[0]), True
    return mat, False


def _support_positions(ctx: ScoreContext, support) -> np.ndarray:
    parents = np.asarray(sorted(support), dtype=int)
    if parents.size and (
        np.any(parents == ctx.j) or parents.min() < 0 or parents.max() >= ctx.ds.p
    ):
        raise ArgumentError(f"support {sorted(support)} invalid for node {ctx.j}")
    return np.searchsorted(ctx.cols, parents)


def corrected_ls_embedded(ctx: ScoreContext, support) -> tuple[np.ndarray, bool]:
    """Solve the unpenalized corrected score equation restricted to ``support``.

    ``support`` is a collection of candidate-parent node indices.  Returns a
    full (p-1)-vector (zeros off support) and a flag telling whether the
    corrected Gram matrix needed the eigenvalue-floor rescue.
    """
    pos = _support_positions(ctx, support)
    bj = np.zeros(ctx.ds.p - 1)
    if pos.size == 0:
        return bj, False
    ws = ctx.wx[:, pos]
    gram = ws.T @ ws - ctx.n_obs * ctx.suu[np.ix_(pos, pos)]
    gram, rescued = floored_spd(gram)
    rhs = ws.T @ ctx.wy
    try:
        bj[pos] = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"corrected Gram matrix unrectifiably singular at node {ctx.j}"
        ) from exc
    return bj, rescued


def corrected_ls(ctx: ScoreContext, support) -> np.ndarray:
    """Coefficients on ``support`` (sorted by parent index)."""
    bj, _ = corrected_ls_embedded(ctx, support)
    return bj[_support_positions(ctx, support)]


@dataclass(frozen=True)
class SandwichStats:
    """Per-parent corrected estimates with M-estimator sandwich inference."""

    parents: tuple[int, ...]
    estimate: np.ndarray
    std_error: np.ndarray
    pvalue: np.ndarray
    degenerate: np.ndarray  # True where the variance estimate was nonpositive
    gram_rescued: bool

    def pvalue_of(self, i: int) -> float:
        return float(self.pvalue[self.parents.index(i)])


def sandwich_pvalues(ctx: ScoreContext, support) -> SandwichStats:
    """Two-sided normal p-values for H0: beta_ij = 0, i in ``support``.

    Variance is n^{-1} [A^{-1} B A^{-T}]_{ii} with A the average negative
    score derivative and B the second moment of the scores, both evaluated
    at the corrected least-squares solution on the support.
    """
    parents = tuple(sorted(support))
    pos = _support_positions(ctx, parents)
    bj, rescued = corrected_ls_embedded(ctx, parents)
    n = ctx.n_obs
    ws = ctx.wx[:, pos]
    a_mat = ws.T @ ws / n - ctx.suu[np.ix_(pos, pos)]
    a_mat, rescued2 = floored_spd(a_mat)
    scores = score_matrix(ctx, bj)[:, pos]
    b_mat = scores.T @ scores / n
    try:
        ainv_b = np.linalg.solve(a_mat, b_mat)
        cov = np.linalg.solve(a_mat, ainv_b.T).T / n
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"sandwich bread matrix singular at node {ctx.j}"
        ) from exc
    var = np.diagonal(cov).copy()
    degenerate = var <= 0
    var[degenerate] = np.inf
    se = np.sqrt(var)
    est = bj[pos]
    z = np.where(np.isfinite(se), est / se, 0.0)
    pval = 2 * norm.sf(np.abs(z))
    pval[degenerate] = 1.0
    return SandwichStats(
        parents, est, se, pval, degenerate, rescued or rescued2
    )
