"""CSV and text ingestion/emission.

Formats (all locale-independent: decimal point, comma separator):
  data file          N rows x p numeric columns, one optional header line;
  intervention file  N lines, each a 1-based node index or the token ``obs``;
  sigma_u file       p x p numeric CSV;
  coefficient file   p x p numeric CSV.
"""

from __future__ import annotations

import numpy as np

from .core import NO_INTERVENTION, CoefMatrix, DataSet, ErrorSpec
from .exceptions import DataValidationError

FLOAT_FMT = "%.17g"


def _load_numeric_csv(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise DataValidationError(f"{path}: empty file")
    start = 0
    try:
        [float(tok) for tok in lines[0].split(",")]
    except ValueError:
        start = 1  # header line
    if start == len(lines):
        raise DataValidationError(f"{path}: no data rows")
    rows = []
    width = None
    for k, ln in enumerate(lines[start:], start=start + 1):
        try:
            row = [float(tok) for tok in ln.split(",")]
        except ValueError as exc:
            raise DataValidationError(f"{path}: non-numeric value on line {k}") from exc
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise DataValidationError(
                f"{path}: line {k} has {len(row)} columns, expected {width}"
            )
        rows.append(row)
    return np.asarray(rows, dtype=float)


def load_data_csv(path) -> np.ndarray:
    return _load_numeric_csv(path)


def load_sigma_u(path) -> ErrorSpec:
    mat = _load_numeric_csv(path)
    if mat.shape[0] != mat.shape[1]:
        raise DataValidationError(f"{path}: sigma_u must be square, got {mat.shape}")
    return ErrorSpec(mat)


def load_coef_csv(path) -> CoefMatrix:
    mat = _load_numeric_csv(path)
    if mat.shape[0] != mat.shape[1]:
        raise DataValidationError(f"{path}: matrix must be square, got {mat.shape}")
    np.fill_diagonal(mat, 0.0)
    return CoefMatrix(mat)


def load_interventions(path, p: int | None = None) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    out = np.empty(len(lines), dtype=int)
    for k, ln in enumerate(lines):
        if ln.lower() == "obs":
            out[k] = NO_INTERVENTION
            continue
        try:
            v = int(ln)
        except ValueError as exc:
            raise DataValidationError(
                f"{path}: line {k + 1} is neither an integer nor 'obs'"
            ) from exc
        if v < 1 or (p is not None and v > p):
            raise DataValidationError(
                f"{path}: node index {v} out of range on line {k + 1}"
            )
        out[k] = v - 1
    return out


def load_dataset(data_path, interventions_path) -> DataSet:
    w = load_data_csv(data_path)
    iv = load_interventions(interventions_path, p=w.shape[1])
    if iv.shape[0] != w.shape[0]:
        raise DataValidationError(
            f"{interventions_path}: {iv.shape[0]} lines for {w.shape[0]} data rows"
        )
    return DataSet(w, iv)


def write_matrix_csv(path, mat: np.ndarray) -> None:
    np.savetxt(path, np.atleast_2d(mat), fmt=FLOAT_FMT, delimiter=",")


def write_interventions(path, intervened_node: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in intervened_node:
            fh.write("obs\n" if v == NO_INTERVENTION else f"{int(v) + 1}\n")
