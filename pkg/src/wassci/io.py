"""Reading samples and covariances from CSV files and writing LP dumps."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from ._errors import DimensionMismatch, ParseError
from .model import ProblemInstance, TransportProblem, LpSolution, pooled_variance, project_psd


def _parse_rows(path, header: bool):
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, raw in enumerate(csv.reader(fh), start=1):
            if header and lineno == 1:
                continue
            if not raw or all(not cell.strip() for cell in raw):
                continue
            values = []
            for col, cell in enumerate(raw, start=1):
                try:
                    val = float(cell)
                except ValueError:
                    raise ParseError(f"not a number: {cell!r}", path, lineno, col) from None
                if not math.isfinite(val):
                    raise ParseError(f"non-finite value: {cell!r}", path, lineno, col)
                values.append(val)
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise ParseError(
                    f"expected {width} columns, found {len(values)}", path, lineno, len(values)
                )
            rows.append(values)
    return rows


def read_sample_csv(path, header: bool = False) -> np.ndarray:
    """One observation per row, ``d`` numeric columns.

    Raises
    ------
    ParseError
        With the 1-based line and column of the offending cell.
    """
    rows = _parse_rows(path, header)
    if not rows:
        raise ParseError("no data rows", path)
    return np.asarray(rows, dtype=float)


def read_covariance_csv(path, size: int) -> np.ndarray:
    """``size x size`` covariance stored as ``size**2`` row-major numbers.

    The matrix is replaced by the PSD projection of its symmetric part.
    """
    rows = _parse_rows_flat(path)
    if len(rows) != size * size:
        raise DimensionMismatch(f"{path}: expected {size * size} numbers, found {len(rows)}")
    return project_psd(np.asarray(rows, dtype=float).reshape(size, size))


def _parse_rows_flat(path):
    values = []
    with open(path, newline="") as fh:
        for lineno, raw in enumerate(csv.reader(fh), start=1):
            for col, cell in enumerate(raw, start=1):
                if not cell.strip():
                    continue
                try:
                    values.append(float(cell))
                except ValueError:
                    raise ParseError(f"not a number: {cell!r}", path, lineno, col) from None
    return values


def _subsample(rows, k, rng, name):
    if k is None:
        return rows
    if not 1 <= k <= rows.shape[0]:
        raise ValueError(f"cannot draw {k} rows from {name} with {rows.shape[0]} rows")
    idx = np.sort(rng.choice(rows.shape[0], size=k, replace=False))
    return rows[idx]


def load_two_sample_csv(
    path_x,
    path_y,
    sigma: float | None = None,
    estimate_sigma: bool = False,
    header: bool = False,
    n: int | None = None,
    m: int | None = None,
    seed: int | None = None,
    cov_x=None,
    cov_y=None,
) -> ProblemInstance:
    """Build a :class:`ProblemInstance` from two CSV samples.

    The noise covariance is ``sigma**2 * I`` (``sigma`` defaults to 1), or the
    pooled variance of the (subsampled) data when ``estimate_sigma`` is set.
    ``cov_x`` / ``cov_y`` are paths to full covariance files and override both.

    Raises
    ------
    ParseError, DimensionMismatch
    """
    if estimate_sigma and sigma is not None:
        raise ValueError("sigma and estimate_sigma are mutually exclusive")
    x = read_sample_csv(path_x, header)
    y = read_sample_csv(path_y, header)
    if x.shape[1] != y.shape[1]:
        raise DimensionMismatch(
            f"{path_x} has {x.shape[1]} columns but {path_y} has {y.shape[1]}"
        )
    rng = np.random.default_rng(seed)
    x = _subsample(x, n, rng, path_x)
    y = _subsample(y, m, rng, path_y)
    d = x.shape[1]
    if estimate_sigma:
        var = pooled_variance(x, y)
    else:
        var = (1.0 if sigma is None else float(sigma)) ** 2
    sx = var * np.eye(x.size)
    sy = var * np.eye(y.size)
    if cov_x is not None:
        sx = read_covariance_csv(cov_x, x.shape[0] * d)
    if cov_y is not None:
        sy = read_covariance_csv(cov_y, y.shape[0] * d)
    return ProblemInstance(x, y, sx, sy)


def write_lp_dump(path, tp: TransportProblem, sol: LpSolution) -> None:
    """Plain-text LP dump: ``n m``, the cost vector, then the 1-based basis."""
    lines = [
        f"{tp.n} {tp.m}",
        " ".join(repr(float(c)) for c in tp.cost_vec),
        " ".join(str(i) for i in sol.basis_1based),
    ]
    Path(path).write_text("\n".join(lines) + "\n")
