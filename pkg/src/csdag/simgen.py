"""Synthetic network data: random DAGs, structural-equation sampling with
per-node interventions, and additive measurement-error contamination at a
target average reliability ratio."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CoefMatrix, DataSet, ErrorSpec
from .exceptions import ArgumentError

STRUCTURES = ("diagonal", "ar")


@dataclass(frozen=True)
class TrueNetwork:
    b_star: CoefMatrix
    order: tuple[int, ...]  # topological order used for generation


@dataclass(frozen=True)
class ContaminationSpec:
    """Measurement-error family: sigma_u^2 * I_p, or sigma_u^2 * V_p with
    V_p[j, j'] = rho^|j - j'|.  ``tau`` is the target average reliability
    ratio Var(X) / (Var(X) + sigma_u^2); tau = 1 means error-free."""

    structure: str
    tau: float
    rho: float = 0.5

    def __post_init__(self):
        if self.structure not in STRUCTURES:
            raise ArgumentError(f"structure must be one of {STRUCTURES}")
        if not (0 < self.tau <= 1):
            raise ArgumentError(f"tau must lie in (0, 1], got {self.tau}")


def max_feasible_edges(p: int, max_parents: int) -> int:
    return int(sum(min(k, max_parents) for k in range(p)))


def random_dag(p: int, n_edges: int, max_parents: int, seed) -> TrueNetwork:
    """Random DAG with ``n_edges`` edges and bounded in-degree.

    Draws a random permutation as topological order, then accepts forward
    pairs in shuffled order until the edge budget is met, skipping children
    already at the parent cap.  Coefficients: the first half of the sampled
    edge list gets 0.5, the rest 1.0.
    """
    if n_edges > p * (p - 1) // 2 or n_edges > max_feasible_edges(p, max_parents):
        raise ArgumentError(
            f"cannot place {n_edges} edges on p={p} nodes with "
            f"max_parents={max_parents}"
        )
    rng = np.random.default_rng(seed)
    order = rng.permutation(p)
    pairs = [
        (int(order[k]), int(order[l])) for k in range(p) for l in range(k + 1, p)
    ]
    rng.shuffle(pairs)
    indeg = np.zeros(p, dtype=int)
    chosen = []
    for i, j in pairs:
        if len(chosen) == n_edges:
            break
        if indeg[j] < max_parents:
            indeg[j] += 1
            chosen.append((i, j))
    if len(chosen) < n_edges:
        raise ArgumentError("edge sampling exhausted the forward pairs")
    b = np.zeros((p, p))
    half = len(chosen) // 2
    for k, (i, j) in enumerate(chosen):
        b[i, j] = 0.5 if k < half else 1.0
    return TrueNetwork(CoefMatrix(b), tuple(int(v) for v in order))


def gen_data(net: TrueNetwork, n_per_node: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """Error-free data: p blocks of ``n_per_node`` rows, block j forcing
    X_j ~ N(0,1) while every other node follows its structural equation with
    N(0,1) model error.  Returns (x, intervened_node)."""
    if n_per_node < 1:
        raise ArgumentError("n_per_node must be at least 1")
    rng = np.random.default_rng(seed)
    p = net.b_star.p
    b = net.b_star.b
    n_total = p * n_per_node
    x = np.empty((n_total, p))
    intervened = np.repeat(np.arange(p), n_per_node)
    for j in range(p):
        sl = slice(j * n_per_node, (j + 1) * n_per_node)
        block = np.zeros((n_per_node, p))
        block[:, j] = rng.standard_normal(n_per_node)
        for k in net.order:
            if k == j:
                continue
            noise = rng.standard_normal(n_per_node)
            parents = np.flatnonzero(b[:, k])
            block[:, k] = block[:, parents] @ b[parents, k] + noise
        x[sl] = block
    return x, intervened


def contaminate(
    x: np.ndarray, spec: ContaminationSpec, seed, intervened_node=None
) -> tuple[np.ndarray, ErrorSpec]:
    """Add i.i.d. N_p(0, Sigma_u) measurement error to every row.

    A single error variance cannot hit the target reliability at every node
    when node variances differ, so sigma_u^2 = v * (1 - tau) / tau with v a
    reference node variance.  When ``intervened_node`` is given, v is the
    mean of the per-node variances estimated from each node's interventional
    rows (the forced values are standard normal by design, so v is near 1);
    without it, v falls back to the mean per-column sample variance, which
    on structurally generated data can dwarf the root-node signal.
    Returns the contaminated matrix and the ErrorSpec actually used.
    """
    x = np.asarray(x, dtype=float)
    p = x.shape[1]
    sigma2 = reference_variance(x, intervened_node) * (1.0 - spec.tau) / spec.tau
    sigma_u = sigma2 * _structure_matrix(spec, p)
    es = ErrorSpec(sigma_u)
    if sigma2 == 0.0:
        return x.copy(), es
    rng = np.random.default_rng(seed)
    chol = np.linalg.cholesky(sigma_u)
    u = rng.standard_normal(x.shape) @ chol.T
    return x + u, es


def reference_variance(x: np.ndarray, intervened_node=None) -> float:
    """Node-variance scale used to calibrate sigma_u^2 at a target tau."""
    if intervened_node is None:
        return float(np.mean(np.var(x, axis=0, ddof=1)))
    iv = np.asarray(intervened_node, dtype=int)
    per_node = []
    for j in range(x.shape[1]):
        rows = np.flatnonzero(iv == j)
        if rows.size >= 2:
            per_node.append(np.var(x[rows, j], ddof=1))
    if not per_node:
        return float(np.mean(np.var(x, axis=0, ddof=1)))
    return float(np.mean(per_node))


def _structure_matrix(spec: ContaminationSpec, p: int) -> np.ndarray:
    if spec.structure == "diagonal":
        return np.eye(p)
    idx = np.arange(p)
    return spec.rho ** np.abs(idx[:, None] - idx[None, :])


def realized_reliability(x: np.ndarray, sigma2: float) -> np.ndarray:
    """Per-node reliability ratio actually achieved by a common sigma_u^2."""
    var = np.var(np.asarray(x, dtype=float), axis=0, ddof=1)
    return var / (var + sigma2)


def simulate_dataset(
    p: int,
    n_edges: int,
    max_parents: int,
    n_per_node: int,
    spec: ContaminationSpec,
    seed,
) -> tuple[DataSet, ErrorSpec, TrueNetwork, np.ndarray]:
    """Convenience bundle: graph, data, contamination from one seed.

    Child seeds are spawned so the graph, data, and noise streams stay
    independent.  Returns (dataset, error spec, truth, error-free x).
    """
    ss = np.random.SeedSequence(seed)
    s_graph, s_data, s_noise = ss.spawn(3)
    net = random_dag(p, n_edges, max_parents, s_graph)
    x, intervened = gen_data(net, n_per_node, s_data)
    w, es = contaminate(x, spec, s_noise, intervened_node=intervened)
    return DataSet(w, intervened), es, net, x
