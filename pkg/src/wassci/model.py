"""Data model and the deterministic constructions behind the distance.

Samples are vectorized row-major: ``vec(X) = (x_11, ..., x_1d, x_21, ...)`` and
the stacked data vector is ``(vec X, vec Y)``. Cells of the transport plan are
indexed ``r = i * m + j`` (0-based) pairing ``x_i`` with ``y_j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ._errors import DimensionMismatch, SingularBasis, SingularMatrix
from .numerics import solve_dense

SYMMETRY_TOL = 1e-8
PSD_JITTER = 1e-10


def _as_rows(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError(f"{name} must be a vector or a matrix, got ndim={a.ndim}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"{name} must have at least one row and one column")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    return a


def _check_covariance(cov, size, name):
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (size, size):
        raise DimensionMismatch(f"{name} must be {size}x{size}, got {cov.shape}")
    if not np.all(np.isfinite(cov)):
        raise ValueError(f"{name} contains non-finite values")
    if np.max(np.abs(cov - cov.T), initial=0.0) > SYMMETRY_TOL:
        raise ValueError(f"{name} is not symmetric")
    try:
        np.linalg.cholesky(cov + PSD_JITTER * np.eye(size))
    except np.linalg.LinAlgError:
        raise ValueError(f"{name} is not positive semidefinite") from None
    return cov


def project_psd(cov) -> np.ndarray:
    """Symmetric part of ``cov`` with negative eigenvalues clipped to zero."""
    cov = np.asarray(cov, dtype=float)
    sym = 0.5 * (cov + cov.T)
    w, v = np.linalg.eigh(sym)
    if w.min() >= 0.0:
        return sym
    return (v * np.clip(w, 0.0, None)) @ v.T


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Two noisy samples and their noise covariances.

    ``x_rows`` is ``n x d`` and ``y_rows`` is ``m x d``; ``sigma_x`` and
    ``sigma_y`` are the covariances of ``vec(X)`` and ``vec(Y)``.
    """

    x_rows: np.ndarray
    y_rows: np.ndarray
    sigma_x: np.ndarray
    sigma_y: np.ndarray

    def __post_init__(self):
        x = _as_rows(self.x_rows, "x_rows")
        y = _as_rows(self.y_rows, "y_rows")
        if x.shape[1] != y.shape[1]:
            raise DimensionMismatch(
                f"samples have different dimensions: {x.shape[1]} vs {y.shape[1]}"
            )
        d = x.shape[1]
        sx = _check_covariance(self.sigma_x, x.shape[0] * d, "sigma_x")
        sy = _check_covariance(self.sigma_y, y.shape[0] * d, "sigma_y")
        for name, val in (("x_rows", x), ("y_rows", y), ("sigma_x", sx), ("sigma_y", sy)):
            val = val.copy()
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @classmethod
    def isotropic(cls, x_rows, y_rows, sigma: float = 1.0) -> "ProblemInstance":
        """Instance with covariance ``sigma**2 * I`` for both samples."""
        x = _as_rows(x_rows, "x_rows")
        y = _as_rows(y_rows, "y_rows")
        if sigma < 0 or not np.isfinite(sigma):
            raise ValueError(f"sigma must be finite and non-negative, got {sigma}")
        var = float(sigma) ** 2
        return cls(x, y, var * np.eye(x.size), var * np.eye(y.size))

    @property
    def n(self) -> int:
        return self.x_rows.shape[0]

    @property
    def m(self) -> int:
        return self.y_rows.shape[0]

    @property
    def d(self) -> int:
        return self.x_rows.shape[1]

    @property
    def data_vec(self) -> np.ndarray:
        return np.concatenate([self.x_rows.ravel(), self.y_rows.ravel()])

    @property
    def sigma_tilde(self) -> np.ndarray:
        return scipy.linalg.block_diag(self.sigma_x, self.sigma_y)


@dataclass(frozen=True, eq=False)
class CostDecomposition:
    """Vectorized cost and its linear representation ``cost_vec = theta @ data``.

    ``signs`` has shape ``(d, n*m)``; ``omega`` is the ``(n*m) x (n+m)``
    difference operator with ``omega[i*m + j] @ (x, y) = x_i - y_j``.
    """

    cost_vec: np.ndarray
    theta: np.ndarray
    signs: np.ndarray
    omega: np.ndarray
    n: int
    m: int
    d: int

    def omega_k(self, k: int) -> np.ndarray:
        """``omega`` lifted to coordinate ``k`` of the stacked d-dimensional data."""
        return np.kron(self.omega, np.eye(self.d)[k][None, :])


def omega_matrix(n: int, m: int) -> np.ndarray:
    omega = np.zeros((n * m, n + m))
    rows = np.arange(n * m)
    omega[rows, rows // m] = 1.0
    omega[rows, n + rows % m] = -1.0
    return omega


def sign_vector(diff) -> np.ndarray:
    """Elementwise sign with ``sign(0) = +1``."""
    return np.where(np.asarray(diff) >= 0.0, 1.0, -1.0)


def pairwise_differences(x_rows, y_rows) -> np.ndarray:
    """``(d, n*m)`` array of ``x_{i,k} - y_{j,k}`` in cell order."""
    x = np.asarray(x_rows, dtype=float)
    y = np.asarray(y_rows, dtype=float)
    diff = x[:, None, :] - y[None, :, :]
    return diff.reshape(-1, x.shape[1]).T


def build_cost_decomposition(inst: ProblemInstance) -> CostDecomposition:
    """Pairwise l1 cost, its sign vectors, and the linear map ``theta``."""
    n, m, d = inst.n, inst.m, inst.d
    omega = omega_matrix(n, m)
    diffs = pairwise_differences(inst.x_rows, inst.y_rows)
    signs = sign_vector(diffs)
    theta = np.zeros((n * m, (n + m) * d))
    for k in range(d):
        theta[:, k::d] = signs[k][:, None] * omega
    cost_vec = np.abs(diffs).sum(axis=0)
    for arr in (omega, signs, theta, cost_vec):
        arr.setflags(write=False)
    return CostDecomposition(cost_vec, theta, signs, omega, n, m, d)


def constraint_matrix(n: int, m: int, drop_last: bool = True) -> np.ndarray:
    """Row-sum block stacked on column-sum block, optionally without its last row."""
    cells = np.arange(n * m)
    full = np.zeros((n + m, n * m))
    full[cells // m, cells] = 1.0
    full[n + cells % m, cells] = 1.0
    return full[:-1] if drop_last else full


def marginals(n: int, m: int, drop_last: bool = True) -> np.ndarray:
    h = np.concatenate([np.full(n, 1.0 / n), np.full(m, 1.0 / m)])
    return h[:-1] if drop_last else h


@dataclass(frozen=True, eq=False)
class TransportProblem:
    """``min cost_vec @ t`` subject to ``s_mat @ t = h_vec``, ``t >= 0``."""

    s_mat: np.ndarray
    h_vec: np.ndarray
    cost_vec: np.ndarray
    n: int
    m: int

    @classmethod
    def uniform(cls, n: int, m: int, cost_vec) -> "TransportProblem":
        cost = np.asarray(cost_vec, dtype=float).copy()
        if cost.shape != (n * m,):
            raise DimensionMismatch(f"cost_vec must have length {n * m}, got {cost.shape}")
        if not np.all(np.isfinite(cost)):
            raise ValueError("cost_vec contains non-finite values")
        s_mat = constraint_matrix(n, m)
        h_vec = marginals(n, m)
        for arr in (s_mat, h_vec, cost):
            arr.setflags(write=False)
        return cls(s_mat, h_vec, cost, n, m)

    def with_cost(self, cost_vec) -> "TransportProblem":
        return TransportProblem.uniform(self.n, self.m, cost_vec)


def build_transport_problem(inst: ProblemInstance, costs: CostDecomposition) -> TransportProblem:
    """Transport polytope for uniform weights with the last column-sum row dropped."""
    return TransportProblem.uniform(inst.n, inst.m, costs.cost_vec)


@dataclass(frozen=True, eq=False)
class LpSolution:
    """An optimal basic feasible solution.

    ``basis`` holds 0-based cell indices in increasing order; use
    :attr:`basis_1based` for reports.
    """

    basis: np.ndarray
    t_basic: np.ndarray
    objective: float
    t_full: np.ndarray
    degenerate: bool = False
    iterations: int = 0
    min_basic: float = field(default=np.inf)

    @property
    def basis_1based(self) -> list:
        return [int(i) + 1 for i in self.basis]

    @property
    def nonbasis(self) -> np.ndarray:
        mask = np.ones(self.t_full.shape[0], dtype=bool)
        mask[self.basis] = False
        return np.flatnonzero(mask)


def distance_from_basis(sol: LpSolution, costs: CostDecomposition, inst: ProblemInstance) -> float:
    """Distance ``t_M @ theta[M] @ data`` with ``t_M`` re-solved from the basis.

    Raises
    ------
    SingularBasis
        If the basis columns of the constraint matrix are not invertible.
    """
    s_mat = constraint_matrix(inst.n, inst.m)
    basis = np.asarray(sol.basis)
    try:
        t_b = solve_dense(s_mat[:, basis], marginals(inst.n, inst.m))
    except SingularMatrix as exc:
        raise SingularBasis(str(exc)) from None
    return float(t_b @ (costs.theta[basis] @ inst.data_vec))


def pooled_variance(x_rows, y_rows) -> float:
    """Pooled noise variance of two samples about their own coordinate means.

    Uses ``(n - 1) d + (m - 1) d`` degrees of freedom.
    """
    x = _as_rows(x_rows, "x_rows")
    y = _as_rows(y_rows, "y_rows")
    dof = (x.shape[0] - 1) * x.shape[1] + (y.shape[0] - 1) * y.shape[1]
    if dof <= 0:
        raise ValueError("variance estimation needs at least two rows in one sample")
    ss = ((x - x.mean(axis=0)) ** 2).sum() + ((y - y.mean(axis=0)) ** 2).sum()
    return float(ss / dof)
