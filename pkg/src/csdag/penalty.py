"""SCAD penalty and its first two derivatives.

All three functions accept scalars or arrays.  The derivative at the origin
uses the convention sign(0) = 0; subgradient behaviour at zero is handled by
the estimators' thresholding, not here.
"""

from __future__ import annotations

import numpy as np

from .core import PenaltyParams
from .exceptions import ArgumentError


def scad(t, pp: PenaltyParams):
    """Penalty value at nonnegative ``t``.

    Piecewise: ``lam*t`` on [0, lam); a concave quadratic on [lam, a*lam);
    the constant ``(a+1)*lam**2/2`` beyond.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ArgumentError("scad is defined for nonnegative t")
    lam, a = pp.lam, pp.a
    mid = ((a * a - 1) * lam * lam - (t - a * lam) ** 2) / (2 * (a - 1))
    out = np.where(
        t < lam, lam * t, np.where(t < a * lam, mid, (a + 1) * lam * lam / 2)
    )
    return out if out.ndim else float(out)


def scad_d1(t, pp: PenaltyParams):
    """d/dt scad(|t|) for signed ``t``: lam on |t|<=lam, linearly clipped to
    zero over (lam, a*lam], zero beyond, times sign(t)."""
    t = np.asarray(t, dtype=float)
    lam, a = pp.lam, pp.a
    at = np.abs(t)
    mag = np.where(
        at <= lam, lam, np.where(at <= a * lam, (a * lam - at) / (a - 1), 0.0)
    )
    out = mag * np.sign(t)
    return out if out.ndim else float(out)


def scad_d2(t, pp: PenaltyParams):
    """Second derivative: -1/(a-1) when lam < |t| <= a*lam, else 0."""
    t = np.asarray(t, dtype=float)
    lam, a = pp.lam, pp.a
    at = np.abs(t)
    out = np.where((at > lam) & (at <= a * lam), -1.0 / (a - 1), 0.0)
    return out if out.ndim else float(out)
