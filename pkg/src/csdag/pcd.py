"""Pairwise coordinate descent updates.

One sweep visits every unordered node pair (i, j) and jointly updates the
two coefficients beta_ij (node i as covariate in model j) and beta_ji,
enforcing that at most one of them is nonzero:

  1. minimize model j's objective over beta_ij with everything else fixed;
  2. minimize model i's objective over beta_ji likewise;
  3. compare the summed objectives of the two exclusive configurations
     (beta_ij*, 0) vs (0, beta_ji*);
  4. keep the cheaper configuration, zeroing any survivor below the
     coefficient threshold.

For the corrected-score objective the 1-D minimizations run a safeguarded
Newton-Raphson with analytic first and second derivatives of the sandwich
quadratic form; for the naive log-RSS objective the stationarity equation is
polynomial per SCAD branch and the updates are closed-form root selections.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import PenaltyParams
from .exceptions import NumericalError
from .penalty import scad, scad_d1, scad_d2
from .score import H_RIDGE, ScoreContext, quad_form

#: Newton steps larger than this abort the 1-D solve as divergent.
STEP_LIMIT = 1e6

#: Maximum number of step halvings in the 1-D line searches.
MAX_HALVINGS = 20


class PairWorkspace:
    """Precomputed quantities for 1-D moves of one coefficient.

    With C(beta) the matrix of per-row scores of model j and R = dC/dbeta
    (constant in beta), every derivative of the sandwich form reduces to
    (p-1)-dimensional products of C0'C0, C0'R, R'R and the column sums of C0
    and R; no n x n matrix is ever formed.
    """

    __slots__ = ("n", "dim", "node", "c0v", "r1v", "m00", "m01", "m11", "m01s")

    def __init__(self, ctx: ScoreContext, bj: np.ndarray, pos: int, cache=None):
        self.node = ctx.j
        b0 = np.asarray(bj, dtype=float).copy()
        b0[pos] = 0.0
        r_base = ctx.wy - ctx.wx @ b0
        s0 = ctx.suu @ b0
        c0 = r_base[:, None] * ctx.wx + s0[None, :]
        key = (ctx.j, pos)
        if cache is not None and key in cache:
            r_mat, self.m11, self.r1v = cache[key]
        else:
            x = ctx.wx[:, pos]
            r_mat = -x[:, None] * ctx.wx + ctx.suu[:, pos][None, :]
            self.m11 = r_mat.T @ r_mat
            self.r1v = r_mat.sum(axis=0)
            if cache is not None:
                cache[key] = (r_mat, self.m11, self.r1v)
        self.n = ctx.n_obs
        self.dim = ctx.wx.shape[1]
        self.c0v = c0.sum(axis=0)
        self.m00 = c0.T @ c0
        self.m01 = c0.T @ r_mat
        self.m01s = self.m01 + self.m01.T

    def _assemble(self, beta: float):
        m = self.m00 + beta * self.m01s + beta * beta * self.m11
        cbar = self.c0v + beta * self.r1v
        return m, cbar

    def v_value(self, beta: float) -> float:
        """Sandwich quadratic form of model j at this beta."""
        m, cbar = self._assemble(beta)
        return quad_form(m, cbar, self.n, self.node)

    def v_derivs(self, beta: float) -> tuple[float, float]:
        """Analytic d/dbeta and d^2/dbeta^2 of the sandwich form."""
        m, cbar = self._assemble(beta)
        tr = float(np.trace(m))
        if tr == 0.0:
            return 0.0, 0.0
        mr = m + (H_RIDGE * tr / self.dim) * np.eye(self.dim)
        try:
            k = np.linalg.inv(mr)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("pair-update H matrix singular beyond rescue") from exc
        g = self.m01 + beta * self.m11  # C'R
        u = k @ cbar
        w = k @ self.r1v
        q = g.T @ u
        qp = g @ u
        kq = k @ q
        kqp = k @ qp
        g1 = cbar @ w - u @ q
        a1 = self.r1v @ w - w @ q
        a2 = q @ w - q @ kq
        a3 = qp @ w - qp @ kq
        a4 = qp @ w + u @ (self.m11 @ u) - qp @ kqp - qp @ kq
        return 2.0 * g1 / self.n, 2.0 * (a1 - a2 - a3 - a4) / self.n


def minimize_scad_coordinate(
    ws: PairWorkspace,
    pen: PenaltyParams,
    beta0: float,
    nr_tol: float,
    nr_max_iters: int,
) -> tuple[float, bool]:
    """Safeguarded Newton-Raphson for V(beta) + P(|beta|).

    Returns (minimizer, diverged).  Divergence (oversized step or iteration
    budget exhausted) falls back to the starting value.
    """
    beta = float(beta0)
    f = ws.v_value(beta) + scad(abs(beta), pen)
    for _ in range(nr_max_iters):
        d1, d2 = ws.v_derivs(beta)
        g = d1 + scad_d1(beta, pen)
        if abs(g) <= nr_tol * (1.0 + abs(beta)):
            return beta, False
        h = d2 + scad_d2(beta, pen)
        if np.isfinite(h) and h > 1e-12:
            step = -g / h
        else:
            step = -np.sign(g) * min(abs(g), 1.0 + abs(beta))
        if not np.isfinite(step) or abs(step) > STEP_LIMIT:
            return float(beta0), True
        cand = beta + step
        fc = np.inf
        improved = False
        for _ in range(MAX_HALVINGS):
            fc = ws.v_value(cand) + scad(abs(cand), pen)
            if fc <= f + 1e-12 * (1.0 + abs(f)):
                improved = True
                break
            cand = beta + (cand - beta) / 2.0
        if not improved:
            return beta, False  # no descent left: stationary to line-search resolution
        moved = abs(cand - beta)
        beta, f = cand, fc
        if moved <= nr_tol * (1.0 + abs(beta)):
            return beta, False
    return float(beta0), True


@dataclass
class PcdState:
    """Mutable sweep state shared by the pair updates of one fit."""

    contexts: list  # ScoreContext per node
    b: np.ndarray  # current p x p coefficient matrix, mutated in place
    pen: PenaltyParams
    zero_threshold: float
    nr_tol: float
    nr_max_iters: int
    nr_fallbacks: int = 0
    r_cache: dict = field(default_factory=dict)

    def column(self, j: int) -> np.ndarray:
        return self.b[self.contexts[j].cols, j]

    def shared_penalty(self, j: int, skip: int) -> float:
        col = self.column(j)
        pos = int(np.searchsorted(self.contexts[j].cols, skip))
        total = float(np.sum(scad(np.abs(col), self.pen)))
        return total - float(scad(abs(col[pos]), self.pen))


def pcd_pair_update_corrected(state: PcdState, i: int, j: int) -> tuple[float, float]:
    """Update (beta_ij, beta_ji) for the corrected-score objective."""

    def side(ctx, covariate):
        col = state.b[ctx.cols, ctx.j]
        pos = int(np.searchsorted(ctx.cols, covariate))
        ws = PairWorkspace(ctx, col, pos, state.r_cache)
        start = state.b[covariate, ctx.j]
        beta, diverged = minimize_scad_coordinate(
            ws, state.pen, start, state.nr_tol, state.nr_max_iters
        )
        if diverged:
            state.nr_fallbacks += 1
        return ws, beta

    ctx_j, ctx_i = state.contexts[j], state.contexts[i]
    ws_j, bij = side(ctx_j, i)
    ws_i, bji = side(ctx_i, j)
    shared = state.shared_penalty(j, i) + state.shared_penalty(i, j)
    s1 = ws_i.v_value(0.0) + ws_j.v_value(bij) + scad(abs(bij), state.pen) + shared
    s2 = ws_i.v_value(bji) + scad(abs(bji), state.pen) + ws_j.v_value(0.0) + shared
    if s1 <= s2:
        pair = (bij, 0.0)
    else:
        pair = (0.0, bji)
    pair = tuple(0.0 if abs(v) < state.zero_threshold else v for v in pair)
    state.b[i, j], state.b[j, i] = pair
    return pair


def sweep_corrected(state: PcdState) -> None:
    """One full pass over all i < j pairs, row-major."""
    p = state.b.shape[0]
    for i in range(p):
        for j in range(i + 1, p):
            pcd_pair_update_corrected(state, i, j)


# ---------------------------------------------------------------------------
# Naive (log-RSS) pair updates: closed-form roots per SCAD branch.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NaiveStats:
    """Sufficient statistics of one 1-D naive update: x = covariate column,
    r = partial residual with this coefficient removed."""

    sxx: float
    srx: float
    srr: float
    n: int

    def rss(self, beta: float) -> float:
        return self.srr - 2.0 * beta * self.srx + beta * beta * self.sxx


def naive_stats(ctx: ScoreContext, bj: np.ndarray, pos: int) -> NaiveStats:
    b0 = np.asarray(bj, dtype=float).copy()
    b0[pos] = 0.0
    r = ctx.wy - ctx.wx @ b0
    x = ctx.wx[:, pos]
    return NaiveStats(float(x @ x), float(r @ x), float(r @ r), ctx.n_obs)


def naive_objective(st: NaiveStats, beta: float, pen: PenaltyParams) -> float:
    rss = st.rss(beta)
    if rss <= 0.0:
        return np.inf
    return 0.5 * st.n * np.log(rss) + scad(abs(beta), pen)


def real_cubic_roots(c3: float, c2: float, c1: float, c0: float) -> list[float]:
    """Real roots of c3 x^3 + c2 x^2 + c1 x + c0 via the depressed-cubic
    discriminant, Newton-polished."""
    b, c, d = c2 / c3, c1 / c3, c0 / c3
    pp = c - b * b / 3.0
    qq = 2.0 * b**3 / 27.0 - b * c / 3.0 + d
    disc = (qq / 2.0) ** 2 + (pp / 3.0) ** 3
    scale = (qq / 2.0) ** 2 + abs(pp / 3.0) ** 3
    if abs(disc) <= 1e-12 * scale:
        if pp == 0.0:
            ts = [0.0]
        else:
            ts = [3.0 * qq / pp, -1.5 * qq / pp]
    elif disc > 0.0:
        s = np.sqrt(disc)
        ts = [float(np.cbrt(-qq / 2.0 + s) + np.cbrt(-qq / 2.0 - s))]
    else:
        m = 2.0 * np.sqrt(-pp / 3.0)
        theta = np.arccos(np.clip(3.0 * qq / (pp * m), -1.0, 1.0)) / 3.0
        ts = [m * np.cos(theta - 2.0 * np.pi * k / 3.0) for k in (0, 1, 2)]
    roots = []
    for t in ts:
        r = t - b / 3.0
        for _ in range(3):
            fval = ((c3 * r + c2) * r + c1) * r + c0
            fder = (3.0 * c3 * r + 2.0 * c2) * r + c1
            if fder == 0.0:
                break
            r -= fval / fder
        roots.append(float(r))
    return roots


def naive_candidates(st: NaiveStats, pen: PenaltyParams) -> list[float]:
    """Stationary-point candidates of the three SCAD regimes, plus zero.

    Each polynomial regime carries a sign assumption; a root is kept only
    when its sign and magnitude agree with the regime that produced it.
    """
    cands = [0.0]
    if st.sxx <= 0.0:
        return cands
    lam, a = pen.lam, pen.a
    b_lin = st.srx / st.sxx
    if abs(b_lin) >= a * lam:
        cands.append(b_lin)
    if lam > 0.0:
        n = st.n
        for s in (1.0, -1.0):
            # |beta| <= lam: quadratic stationarity equation
            c2 = s * lam * st.sxx
            c1 = n * st.sxx - 2.0 * lam * s * st.srx
            c0 = lam * s * st.srr - n * st.srx
            disc = c1 * c1 - 4.0 * c2 * c0
            if disc >= 0.0:
                root = (-c1 + np.sqrt(disc)) / (2.0 * c2)
                if root != 0.0 and np.sign(root) == s and abs(root) <= lam:
                    cands.append(float(root))
            # lam < |beta| <= a*lam: cubic stationarity equation
            c3 = st.sxx / (a - 1.0)
            c2c = -s * a * lam * c3 - 2.0 * st.srx / (a - 1.0)
            c1c = -n * st.sxx + 2.0 * s * a * lam * st.srx / (a - 1.0) + st.srr / (a - 1.0)
            c0c = n * st.srx - s * a * lam * st.srr / (a - 1.0)
            for root in real_cubic_roots(c3, c2c, c1c, c0c):
                if np.sign(root) == s and lam < abs(root) <= a * lam:
                    cands.append(root)
    return cands


def naive_coordinate_min(st: NaiveStats, pen: PenaltyParams) -> tuple[float, bool]:
    """Best feasible candidate by objective value; (0, True) when none is."""
    best, best_f = None, np.inf
    for cand in naive_candidates(st, pen):
        f = naive_objective(st, cand, pen)
        if f < best_f:
            best, best_f = cand, f
    if best is None:
        return 0.0, True
    return best, False


def pcd_pair_update_naive(state: PcdState, i: int, j: int) -> tuple[float, float]:
    """Update (beta_ij, beta_ji) for the naive log-RSS objective."""
    ctx_j, ctx_i = state.contexts[j], state.contexts[i]
    pos_i = int(np.searchsorted(ctx_j.cols, i))
    pos_j = int(np.searchsorted(ctx_i.cols, j))
    st_j = naive_stats(ctx_j, state.column(j), pos_i)
    st_i = naive_stats(ctx_i, state.column(i), pos_j)
    bij, bad_j = naive_coordinate_min(st_j, state.pen)
    bji, bad_i = naive_coordinate_min(st_i, state.pen)
    if bad_j or bad_i:
        state.nr_fallbacks += 1

    def v_nv(st: NaiveStats, beta: float) -> float:
        rss = st.rss(beta)
        return 0.5 * st.n * np.log(rss) if rss > 0.0 else np.inf

    shared = state.shared_penalty(j, i) + state.shared_penalty(i, j)
    s1 = v_nv(st_i, 0.0) + v_nv(st_j, bij) + scad(abs(bij), state.pen) + shared
    s2 = v_nv(st_i, bji) + scad(abs(bji), state.pen) + v_nv(st_j, 0.0) + shared
    if s1 <= s2:
        pair = (bij, 0.0)
    else:
        pair = (0.0, bji)
    pair = tuple(0.0 if abs(v) < state.zero_threshold else v for v in pair)
    state.b[i, j], state.b[j, i] = pair
    return pair


def sweep_naive(state: PcdState) -> None:
    p = state.b.shape[0]
    for i in range(p):
        for j in range(i + 1, p):
            pcd_pair_update_naive(state, i, j)
