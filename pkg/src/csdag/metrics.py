"""Evaluation metrics comparing an estimated graph against the truth.

Each estimated edge is classified exactly once: correct (in the true edge
set), reversed (its flip is a true edge), or spurious.  Reversed edges count
toward the false discovery rate but not twice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CoefMatrix
from .dag import DirectedGraph
from .exceptions import ArgumentError


@dataclass(frozen=True)
class GraphEval:
    tpr: float
    fdr: float
    specificity: float
    correctness: float
    frob_scaled: float = float("nan")


def evaluate_graph(
    g_hat: DirectedGraph, g_true: DirectedGraph, ordered_correctness: bool = False
) -> GraphEval:
    """Structural metrics of ``g_hat`` against ``g_true``.

    TPR = correct / |E_true| (1 when the true graph is empty); FDR counts
    reversed plus spurious over all discoveries (0 when none); specificity
    is the retained fraction of true ordered non-edges.  The correctness
    rate counts correctly directed edges plus unordered pairs unconnected in
    both graphs, over p(p-1)/2; ``ordered_correctness`` switches the second
    term to ordered non-edge pairs for audit.
    """
    if g_hat.p != g_true.p:
        raise ArgumentError(f"node counts differ: {g_hat.p} vs {g_true.p}")
    p = g_true.p
    eh, et = g_hat.edges, g_true.edges
    correct = len(eh & et)
    reversed_ct = sum(1 for i, j in eh if (i, j) not in et and (j, i) in et)
    spurious = len(eh) - correct - reversed_ct
    tpr = correct / len(et) if et else 1.0
    fdr = (reversed_ct + spurious) / len(eh) if eh else 0.0
    ordered_pairs = p * (p - 1)
    true_nonedges = ordered_pairs - len(et)
    kept = ordered_pairs - len(eh | et)  # ordered pairs absent from both
    specificity = kept / true_nonedges if true_nonedges else 1.0
    if ordered_correctness:
        unconnected = kept
    else:
        pairs_hit = {frozenset(e) for e in eh} | {frozenset(e) for e in et}
        unconnected = p * (p - 1) // 2 - len(pairs_hit)
    correctness = (correct + unconnected) / (p * (p - 1) // 2)
    return GraphEval(tpr, fdr, specificity, correctness)


def frob_scaled(b_true: CoefMatrix, b_hat: CoefMatrix) -> float:
    """Squared Frobenius norm of the coefficient error divided by the number
    of off-diagonal entries p(p-1)."""
    if b_true.p != b_hat.p:
        raise ArgumentError(f"sizes differ: {b_true.p} vs {b_hat.p}")
    diff = b_true.b - b_hat.b
    p = b_true.p
    return float(np.sum(diff * diff)) / (p * (p - 1))


def evaluate_coefs(
    b_true: CoefMatrix, b_hat: CoefMatrix, threshold: float
) -> GraphEval:
    """All five metrics from the two coefficient matrices."""
    from .dag import graph_from_coefs

    ev = evaluate_graph(
        graph_from_coefs(b_hat, threshold), graph_from_coefs(b_true, threshold)
    )
    return GraphEval(
        ev.tpr, ev.fdr, ev.specificity, ev.correctness, frob_scaled(b_true, b_hat)
    )
