"""Primal simplex for the uniform-weight transportation LP.

Pivoting follows Bland's rule throughout (smallest entering cell index with a
negative reduced cost, smallest leaving cell index among ratio-test ties), so
the result is deterministic and the method terminates under degeneracy. Basis
systems are solved with a fresh dense LU at every iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._errors import InfeasibleProblem, NumericalFailure, SingularBasis, SingularMatrix
from .model import LpSolution, TransportProblem
from .numerics import DenseLU, ExtendedInterval, linear_inequality_interval


@dataclass(frozen=True)
class SolverOptions:
    """Tolerances of the simplex solver.

    Reduced-cost tolerances are relative to ``max |cost|`` so that rescaling the
    cost leaves every pivot decision unchanged.
    """

    feas_tol: float = 1e-9
    rc_tol: float = 1e-9
    degeneracy_tol: float = 1e-11
    pivot_tol: float = 1e-9
    max_iter: int | None = None
    rcond_min: float = 1e-12


DEFAULT_OPTIONS = SolverOptions()


@dataclass(frozen=True, eq=False)
class RelativeCostPair:
    """Reduced costs ``u_tilde + v_tilde * z`` of the nonbasic cells of a basis."""

    u_tilde: np.ndarray
    v_tilde: np.ndarray
    nonbasis: np.ndarray

    def at(self, z: float) -> np.ndarray:
        return self.u_tilde + self.v_tilde * z


def northwest_corner(n: int, m: int) -> list:
    """Staircase spanning-tree basis of the uniform transport polytope.

    Ties between a row end and a column end (which always happen when
    ``n == m``) add a zero-valued cell to the right so the basis keeps
    ``n + m - 1`` cells.
    """
    i = j = 0
    cells = [0]
    while i < n - 1 or j < m - 1:
        # row i ends at (i+1)/n, column j ends at (j+1)/m
        row_end, col_end = (i + 1) * m, (j + 1) * n
        if (row_end < col_end or j == m - 1) and i < n - 1:
            i += 1
        else:
            j += 1
        cells.append(i * m + j)
    return cells


def _factor(tp: TransportProblem, basis, opts: SolverOptions) -> DenseLU:
    try:
        return DenseLU(tp.s_mat[:, basis], rcond_min=opts.rcond_min)
    except SingularMatrix as exc:
        raise SingularBasis(str(exc)) from None


def _finish(tp: TransportProblem, basis, lu: DenseLU, iterations: int, opts) -> LpSolution:
    order = np.argsort(basis)
    basis = np.asarray(basis, dtype=int)[order]
    t_basic = lu.solve(tp.h_vec)[order]
    if t_basic.min() < -opts.feas_tol:
        raise InfeasibleProblem(f"basic solution is infeasible (min {t_basic.min():.3e})")
    t_basic = np.where(t_basic < 0.0, 0.0, t_basic)
    t_full = np.zeros(tp.n * tp.m)
    t_full[basis] = t_basic
    min_basic = float(t_basic.min())
    for arr in (basis, t_basic, t_full):
        arr.setflags(write=False)
    return LpSolution(
        basis=basis,
        t_basic=t_basic,
        objective=float(tp.cost_vec[basis] @ t_basic),
        t_full=t_full,
        degenerate=bool(min_basic <= opts.degeneracy_tol),
        iterations=iterations,
        min_basic=min_basic,
    )


def solve_transport(tp: TransportProblem, opts: SolverOptions = DEFAULT_OPTIONS) -> LpSolution:
    """Optimal basic feasible solution of ``tp`` by Bland-rule primal simplex.

    Raises
    ------
    NumericalFailure
        If a basis matrix becomes ill conditioned (estimate above 1e12) or the
        iteration cap is hit.
    """
    n, m = tp.n, tp.m
    s_mat, cost = tp.s_mat, tp.cost_vec
    scale = max(float(np.max(np.abs(cost), initial=0.0)), 1e-300)
    rc_tol = opts.rc_tol * scale
    max_iter = opts.max_iter if opts.max_iter is not None else 50 * (n * m + n + m)

    basis = northwest_corner(n, m)
    in_basis = np.zeros(n * m, dtype=bool)
    in_basis[basis] = True
    for it in range(max_iter + 1):
        try:
            lu = _factor(tp, basis, opts)
        except SingularBasis as exc:
            raise NumericalFailure(f"basis became singular at iteration {it}: {exc}") from None
        duals = lu.solve(cost[basis], transpose=True)
        reduced = cost - s_mat.T @ duals
        entering = np.flatnonzero((reduced < -rc_tol) & ~in_basis)
        if entering.size == 0:
            return _finish(tp, basis, lu, it, opts)
        j = int(entering[0])
        direction = lu.solve(s_mat[:, j])
        t_b = lu.solve(tp.h_vec)
        t_b = np.where(t_b < 0.0, 0.0, t_b)
        pos = np.flatnonzero(direction > opts.pivot_tol)
        if pos.size == 0:
            raise NumericalFailure("unbounded direction in a bounded transport polytope")
        ratios = t_b[pos] / direction[pos]
        theta = ratios.min()
        ties = pos[ratios <= theta + opts.feas_tol]
        basis_arr = np.asarray(basis)
        leave = int(ties[np.argmin(basis_arr[ties])])
        in_basis[basis[leave]] = False
        in_basis[j] = True
        basis[leave] = j
    raise NumericalFailure(f"simplex did not converge in {max_iter} iterations")


def reduced_costs(tp: TransportProblem, basis, cost) -> np.ndarray:
    """Reduced cost of every cell for ``cost`` under ``basis`` (zero on the basis)."""
    basis = np.asarray(basis, dtype=int)
    lu = _factor(tp, basis, DEFAULT_OPTIONS)
    cost = np.asarray(cost, dtype=float)
    out = cost - tp.s_mat.T @ lu.solve(cost[basis], transpose=True)
    out[basis] = 0.0
    return out


def relative_costs(tp: TransportProblem, sol: LpSolution, u, v) -> RelativeCostPair:
    """Nonbasic reduced costs of the parametric cost ``u + v z`` for ``sol.basis``.

    ``u_tilde = u_N - (S_B^-T u_B)^T S_N`` and likewise for ``v``.

    Raises
    ------
    SingularBasis
    """
    basis = np.asarray(sol.basis, dtype=int)
    nonbasis = sol.nonbasis
    lu = _factor(tp, basis, DEFAULT_OPTIONS)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    s_n = tp.s_mat[:, nonbasis]
    u_t = u[nonbasis] - s_n.T @ lu.solve(u[basis], transpose=True)
    v_t = v[nonbasis] - s_n.T @ lu.solve(v[basis], transpose=True)
    return RelativeCostPair(u_t, v_t, nonbasis)


def verify_optimality(tp: TransportProblem, sol: LpSolution, feas_tol=1e-9, rc_tol=1e-9) -> bool:
    """Primal feasibility of ``sol.t_full`` and dual feasibility of ``sol.basis``."""
    t = np.asarray(sol.t_full, dtype=float)
    if t.shape != (tp.n * tp.m,) or np.any(t < -feas_tol):
        return False
    if np.max(np.abs(tp.s_mat @ t - tp.h_vec)) > feas_tol:
        return False
    nonbasis = sol.nonbasis
    if np.any(np.abs(t[nonbasis]) > feas_tol):
        return False
    try:
        rc = reduced_costs(tp, sol.basis, tp.cost_vec)
    except SingularBasis:
        return False
    scale = max(float(np.max(np.abs(tp.cost_vec), initial=0.0)), 1.0)
    return bool(np.all(rc[nonbasis] >= -rc_tol * scale))


def basis_interval(pair: RelativeCostPair, zero_tol=1e-12, feas_tol=1e-9):
    """``{z : u_tilde + v_tilde z >= 0}``; ``None`` if empty."""
    return linear_inequality_interval(pair.u_tilde, pair.v_tilde, zero_tol, feas_tol)


def _upper_vertex_end(tp, basis, t_full, u, v, z_start, opts, zero_tol, max_pivots):
    """Largest z up to which the vertex ``t_full`` stays optimal for ``u + v z``.

    Starts from a basis that is dual feasible at ``z_start`` and walks the
    parametric cost upward. At each breakpoint the blocking cell enters; a
    pivot that leaves a zero basic variable keeps the vertex and continues,
    while a pivot with a positive step proves the vertex stops being optimal.
    Entering and leaving choices follow Bland's rule on the cost perturbed
    toward larger z, which rules out cycling among the bases of the vertex.
    """
    s_mat = tp.s_mat
    basis = list(basis)
    in_basis = np.zeros(s_mat.shape[1], dtype=bool)
    in_basis[basis] = True
    z_cur = float(z_start)
    for _ in range(max_pivots):
        lu = _factor(tp, basis, opts)
        u_t = u - s_mat.T @ lu.solve(u[basis], transpose=True)
        v_t = v - s_mat.T @ lu.solve(v[basis], transpose=True)
        falling = np.flatnonzero(~in_basis & (v_t < -zero_tol))
        if falling.size == 0:
            return math.inf
        ratios = -u_t[falling] / v_t[falling]
        z_cur = max(z_cur, float(ratios.min()))
        z_tol = 1e-9 * (1.0 + abs(z_cur))
        j = int(falling[ratios <= z_cur + z_tol].min())
        direction = lu.solve(s_mat[:, j])
        t_b = t_full[basis]
        pos = np.flatnonzero(direction > opts.pivot_tol)
        zero_pos = pos[t_b[pos] <= opts.degeneracy_tol]
        if zero_pos.size == 0:
            return z_cur
        basis_arr = np.asarray(basis)
        leave = int(zero_pos[np.argmin(basis_arr[zero_pos])])
        in_basis[basis[leave]] = False
        in_basis[j] = True
        basis[leave] = j
    raise NumericalFailure("parametric walk over degenerate bases did not terminate")


def vertex_interval(
    tp: TransportProblem,
    sol: LpSolution,
    u,
    v,
    z_ref: float,
    opts: SolverOptions = DEFAULT_OPTIONS,
    zero_tol: float = 1e-12,
    max_pivots: int | None = None,
) -> ExtendedInterval:
    """Interval of z on which the vertex ``sol.t_full`` is optimal for cost ``u + v z``.

    ``sol.basis`` must be dual feasible at ``z_ref``. For a non-degenerate
    solution the result equals :func:`basis_interval`; under primal
    degeneracy it is the union of the intervals of every basis of the same
    vertex, reached by degenerate pivots.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    t_full = np.asarray(sol.t_full, dtype=float)
    if max_pivots is None:
        max_pivots = 20 * (tp.n * tp.m + tp.n + tp.m)
    hi = _upper_vertex_end(tp, sol.basis, t_full, u, v, z_ref, opts, zero_tol, max_pivots)
    lo = -_upper_vertex_end(tp, sol.basis, t_full, u, -v, -z_ref, opts, zero_tol, max_pivots)
    return ExtendedInterval(lo, hi)
