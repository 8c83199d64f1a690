"""Observed-data containers, intervention bookkeeping, and coefficient matrices.

Nodes are indexed 0..p-1 throughout the library; file formats use 1-based
labels (see :mod:`csdag.io`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ArgumentError

#: Sentinel in ``intervened_node`` for rows that intervene no node.
NO_INTERVENTION = -1

#: Default magnitude below which a regression coefficient is treated as zero
#: when reading edges off a coefficient matrix.
ZERO_THRESHOLD = 1e-4


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def minus(j: int, p: int) -> np.ndarray:
    """Column indices ``0..p-1`` with ``j`` removed, ascending."""
    return np.concatenate([np.arange(j), np.arange(j + 1, p)])


@dataclass(frozen=True)
class DataSet:
    """Observed N x p surrogate matrix plus per-row intervention assignment.

    ``intervened_node[l]`` is the node whose value row ``l`` forces, or
    ``NO_INTERVENTION`` for a purely observational row.  Rows intervene at
    most one node.
    """

    w: np.ndarray
    intervened_node: np.ndarray

    def __post_init__(self):
        w = np.atleast_2d(np.array(self.w, dtype=float))
        iv = np.array(self.intervened_node, dtype=int).ravel()
        object.__setattr__(self, "w", _freeze(w))
        object.__setattr__(self, "intervened_node", _freeze(iv))

    @property
    def n(self) -> int:
        return self.w.shape[0]

    @property
    def p(self) -> int:
        return self.w.shape[1]

    def n_interventional(self, j: int) -> int:
        """Number of rows intervening node ``j`` (n_j)."""
        _check_node(j, self.p)
        return int(np.sum(self.intervened_node == j))

    def n_observational(self, j: int) -> int:
        """Number of observational rows for node ``j`` (n_{-j})."""
        return self.n - self.n_interventional(j)


def observational_rows(ds: DataSet, j: int) -> np.ndarray:
    """Row indices whose intervened node differs from ``j``, ascending."""
    _check_node(j, ds.p)
    return np.flatnonzero(ds.intervened_node != j)


def validate(ds: DataSet) -> str | None:
    """Check all DataSet invariants.

    Returns ``None`` when the data set is well formed, otherwise a message
    naming the first violated invariant and the offending index.
    """
    if ds.w.ndim != 2:
        return f"data matrix must be 2-dimensional, got ndim={ds.w.ndim}"
    if ds.n < 1:
        return "data matrix has no rows (N >= 1 required)"
    if ds.p < 2:
        return f"need at least two nodes, got p={ds.p}"
    bad = np.argwhere(~np.isfinite(ds.w))
    if bad.size:
        r, c = bad[0]
        return f"non-finite entry at ({r}, {c})"
    if ds.intervened_node.shape[0] != ds.n:
        return (
            f"intervention vector has length {ds.intervened_node.shape[0]}, "
            f"expected N={ds.n}"
        )
    ok = (ds.intervened_node == NO_INTERVENTION) | (
        (ds.intervened_node >= 0) & (ds.intervened_node < ds.p)
    )
    if not ok.all():
        r = int(np.flatnonzero(~ok)[0])
        return f"intervention index out of range at row {r}"
    counts = np.bincount(
        ds.intervened_node[ds.intervened_node >= 0], minlength=ds.p
    )
    short = np.flatnonzero(ds.n - counts < 1)
    if short.size:
        j = int(short[0])
        return f"n_-({j})=0: every row intervenes node {j}"
    return None


@dataclass(frozen=True)
class CoefMatrix:
    """p x p regression-coefficient matrix with an exactly zero diagonal.

    Entry ``b[i, j]`` is the coefficient of node ``i`` in the regression of
    node ``j`` on the remaining nodes; ``|b[i, j]|`` above a threshold reads
    as the directed edge i -> j.
    """

    b: np.ndarray

    def __post_init__(self):
        b = np.atleast_2d(np.array(self.b, dtype=float))
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise ArgumentError(f"coefficient matrix must be square, got {b.shape}")
        if np.any(np.diagonal(b) != 0.0):
            raise ArgumentError("coefficient matrix must have a zero diagonal")
        object.__setattr__(self, "b", _freeze(b))

    @property
    def p(self) -> int:
        return self.b.shape[0]

    def column(self, j: int) -> np.ndarray:
        """B_j = b[-j, j], the (p-1)-vector of coefficients for node ``j``."""
        _check_node(j, self.p)
        return self.b[minus(j, self.p), j]


@dataclass(frozen=True)
class ErrorSpec:
    """Known measurement-error covariance of the p observed nodes."""

    sigma_u: np.ndarray

    def __post_init__(self):
        s = np.atleast_2d(np.array(self.sigma_u, dtype=float))
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise ArgumentError(f"sigma_u must be square, got {s.shape}")
        scale = np.abs(s).max()
        if np.abs(s - s.T).max() > 1e-12 * max(scale, 1e-300):
            raise ArgumentError("sigma_u must be symmetric (1e-12 relative)")
        ev = np.linalg.eigvalsh(s)
        if ev[0] < -1e-10 * max(ev[-1], 0.0):
            raise ArgumentError(
                f"sigma_u must be positive semi-definite, min eigenvalue {ev[0]:g}"
            )
        object.__setattr__(self, "sigma_u", _freeze(s))

    @property
    def p(self) -> int:
        return self.sigma_u.shape[0]

    @classmethod
    def zero(cls, p: int) -> "ErrorSpec":
        """Error-free specification (sigma_u = 0)."""
        return cls(np.zeros((p, p)))

    def submatrix(self, idx: np.ndarray) -> np.ndarray:
        return self.sigma_u[np.ix_(idx, idx)]


@dataclass(frozen=True)
class PenaltyParams:
    """SCAD tuning pair: penalty level ``lam`` and shape ``a`` (> 2)."""

    lam: float
    a: float = 3.7

    def __post_init__(self):
        if not (self.lam >= 0):
            raise ArgumentError(f"lam must be nonnegative, got {self.lam}")
        if not (self.a > 2):
            raise ArgumentError(f"a must exceed 2, got {self.a}")


def _check_node(j: int, p: int) -> None:
    if not (0 <= j < p):
        raise ArgumentError(f"node index {j} out of range for p={p}")
