"""Selective confidence intervals for the l1 Wasserstein distance.

The distance is a linear statistic ``eta @ data`` once the sign pattern of the
pairwise differences and the optimal coupling are fixed. Conditioning on both
(and on the component of the data orthogonal to ``eta``) restricts the data
to a line ``a + b z`` and the statistic to a truncated normal on an interval
``Z``; inverting that truncated normal's CDF gives the interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._errors import (
    DegenerateDirection,
    DegenerateSolution,
    EmptyRegion,
    RootNotBracketed,
)
from .model import (
    CostDecomposition,
    LpSolution,
    ProblemInstance,
    TransportProblem,
    build_cost_decomposition,
    build_transport_problem,
)
from .numerics import ExtendedInterval, linear_inequality_interval, log_gauss_mass, normal_quantile
from .transport import (
    DEFAULT_OPTIONS,
    SolverOptions,
    basis_interval,
    relative_costs,
    solve_transport,
    vertex_interval,
)

SCHEMA_VERSION = 1
MIN_VARIANCE = 1e-14
ZERO_DIRECTION = 1e-12
REGION_TOL = 1e-9
BRACKET_SIGMAS = 50.0
BRACKET_WIDENINGS = 2


def _region_tol(z_obs: float) -> float:
    return REGION_TOL * (1.0 + abs(z_obs))


@dataclass(frozen=True, eq=False)
class SelectionLine:
    """Data restricted to ``a_vec + b_vec * z``; ``z_obs = eta @ data``."""

    eta: np.ndarray
    a_vec: np.ndarray
    b_vec: np.ndarray
    z_obs: float
    sigma2: float

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    def point(self, z: float) -> np.ndarray:
        return self.a_vec + self.b_vec * z


@dataclass(frozen=True)
class TruncationRegion:
    z1: ExtendedInterval
    z2: ExtendedInterval
    z: ExtendedInterval
    # interval of the observed basis alone; narrower than z2 only under degeneracy
    z2_basis: ExtendedInterval | None = None

    def to_json(self) -> dict:
        out = {"z1": self.z1.to_json(), "z2": self.z2.to_json(), "z": self.z.to_json()}
        if self.z2_basis is not None:
            out["z2_basis"] = self.z2_basis.to_json()
        return out


@dataclass(frozen=True)
class ConfidenceInterval:
    lo: float
    hi: float
    alpha: float
    kind: str

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"reversed confidence interval [{self.lo}, {self.hi}]")
        if self.kind not in ("naive", "selective"):
            raise ValueError(f"unknown interval kind {self.kind!r}")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains(self, w: float) -> bool:
        return self.lo <= w <= self.hi

    def to_json(self) -> list:
        return ExtendedInterval(self.lo, self.hi).to_json()


def build_eta(costs: CostDecomposition, sol: LpSolution) -> np.ndarray:
    """Direction of interest ``theta[M].T @ t_M``."""
    return costs.theta[np.asarray(sol.basis)].T @ np.asarray(sol.t_basic)


def nuisance_line(eta, sigma_tilde, data_vec) -> SelectionLine:
    """Line through the data along ``b = S eta / (eta' S eta)``.

    Raises
    ------
    DegenerateDirection
        If ``eta' S eta <= 1e-14``.
    """
    eta = np.asarray(eta, dtype=float)
    sigma_tilde = np.asarray(sigma_tilde, dtype=float)
    data_vec = np.asarray(data_vec, dtype=float)
    s_eta = sigma_tilde @ eta
    sigma2 = float(eta @ s_eta)
    if not sigma2 > MIN_VARIANCE:
        raise DegenerateDirection(
            f"variance of the statistic is {sigma2:.3e}; eta lies in the covariance null space"
        )
    b = s_eta / sigma2
    z_obs = float(eta @ data_vec)
    a = data_vec - b * z_obs
    return SelectionLine(eta, a, b, z_obs, sigma2)


def _sign_constraints(costs: CostDecomposition, line: SelectionLine):
    d = costs.d
    a_pts = line.a_vec.reshape(-1, d)
    b_pts = line.b_vec.reshape(-1, d)
    p = np.concatenate([costs.signs[k] * (costs.omega @ a_pts[:, k]) for k in range(d)])
    q = np.concatenate([costs.signs[k] * (costs.omega @ b_pts[:, k]) for k in range(d)])
    return p, q


def compute_z1(costs: CostDecomposition, line: SelectionLine) -> ExtendedInterval:
    """Values of z keeping every per-coordinate sign of ``x_i - y_j`` as observed.

    Raises
    ------
    EmptyRegion
    """
    p, q = _sign_constraints(costs, line)
    region = linear_inequality_interval(p, q, ZERO_DIRECTION, REGION_TOL)
    if region is None or not region.contains(line.z_obs, _region_tol(line.z_obs)):
        raise EmptyRegion(f"sign region {region} excludes z_obs={line.z_obs}")
    return region


def compute_z2(
    tp: TransportProblem,
    costs: CostDecomposition,
    sol: LpSolution,
    line: SelectionLine,
    vertex: bool = True,
    opts: SolverOptions = DEFAULT_OPTIONS,
) -> ExtendedInterval:
    """Values of z for which the observed coupling stays optimal along the line.

    With ``vertex=False`` this is the interval on which the observed basis has
    non-negative reduced costs. With ``vertex=True`` (default) it is extended
    over all bases of the observed optimal vertex, which differs only when the
    solution is degenerate.

    Raises
    ------
    EmptyRegion
    SingularBasis
    """
    u = costs.theta @ line.a_vec
    v = costs.theta @ line.b_vec
    pair = relative_costs(tp, sol, u, v)
    basis_region = basis_interval(pair, ZERO_DIRECTION, _region_tol(line.z_obs) * 10)
    if basis_region is None or not basis_region.contains(line.z_obs, _region_tol(line.z_obs)):
        raise EmptyRegion(f"basis region {basis_region} excludes z_obs={line.z_obs}")
    if not vertex:
        return basis_region
    region = vertex_interval(tp, sol, u, v, line.z_obs, opts=opts, zero_tol=ZERO_DIRECTION)
    # never narrower than the basis interval
    return ExtendedInterval(min(region.lo, basis_region.lo), max(region.hi, basis_region.hi))


def truncation_region(z1: ExtendedInterval, z2: ExtendedInterval, z_obs: float, z2_basis=None) -> TruncationRegion:
    """Intersection of the sign and coupling regions.

    Raises
    ------
    EmptyRegion
        If the intersection is empty or excludes ``z_obs``.
    """
    z = z1.intersect(z2)
    if z is None or not z.contains(z_obs, _region_tol(z_obs)):
        raise EmptyRegion(f"truncation region {z1} & {z2} excludes z_obs={z_obs}")
    return TruncationRegion(z1, z2, z, z2_basis)


def truncated_normal_cdf(x: float, w: float, sigma2: float, region) -> float:
    """CDF at ``x`` of ``N(w, sigma2)`` truncated to ``region``.

    Both masses are evaluated in log space so far-tail truncation does not
    collapse to 0/0. ``x`` is clamped into the region.

    Raises
    ------
    NumericalUnderflow
        If the probability of the region cannot be represented even in log space.
    """
    if not sigma2 > 0.0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    lo, hi = region
    if lo > hi:
        raise ValueError(f"empty region [{lo}, {hi}]")
    sd = math.sqrt(sigma2)
    x = min(max(float(x), lo), hi)
    a_lo, a_x, a_hi = (lo - w) / sd, (x - w) / sd, (hi - w) / sd
    if a_lo == a_hi:
        # point mass
        return 1.0
    log_den = log_gauss_mass(a_lo, a_hi)
    log_num = log_gauss_mass(a_lo, a_x)
    return min(1.0, max(0.0, math.exp(log_num - log_den)))


def _find_mean(pivot, target, z_obs, sd, widenings=BRACKET_WIDENINGS, on_unbracketed="raise"):
    # pivot(w) is decreasing in w
    half = BRACKET_SIGMAS * sd
    for attempt in range(widenings + 1):
        lo, hi = z_obs - half, z_obs + half
        f_lo, f_hi = pivot(lo) - target, pivot(hi) - target
        if f_lo >= 0.0 >= f_hi:
            break
        half *= 10.0
    else:
        if on_unbracketed == "infinite":
            return -math.inf if f_lo < 0.0 else math.inf
        raise RootNotBracketed(
            f"no root of pivot = {target} in [{lo}, {hi}]", bracket=(lo, hi), values=(f_lo, f_hi)
        )
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = pivot(mid) - target
        if abs(f_mid) <= 1e-10 or (hi - lo) <= 1e-10 * sd:
            return mid
        if f_mid > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def selective_ci(line: SelectionLine, region, alpha: float, on_unbracketed: str = "raise") -> ConfidenceInterval:
    """Means ``w`` with ``alpha/2 <= F_w(z_obs) <= 1 - alpha/2`` for the truncated CDF.

    Roots are bracketed in ``z_obs +/- 50 sigma`` and the bracket is widened
    tenfold up to twice. If a root still lies outside, ``on_unbracketed``
    selects between raising :class:`RootNotBracketed` (``"raise"``) and an
    infinite endpoint (``"infinite"``). When both roots fall beyond the same
    end, the interval is cut at that end of the widest bracket. With
    ``z_obs`` on an endpoint of the region the pivot does not depend on ``w``
    and the whole line is returned.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if on_unbracketed not in ("raise", "infinite"):
        raise ValueError(f"unknown on_unbracketed policy {on_unbracketed!r}")
    z_region = region.z if isinstance(region, TruncationRegion) else region
    lo_z, hi_z = z_region
    z_obs = line.z_obs
    sd = line.sigma

    def pivot(w):
        return truncated_normal_cdf(z_obs, w, line.sigma2, (lo_z, hi_z))

    if not lo_z < z_obs < hi_z:
        # z_obs on an endpoint of the region: the pivot is constant in w and
        # excludes no mean
        return ConfidenceInterval(-math.inf, math.inf, alpha, "selective")
    w_hi = _find_mean(pivot, alpha / 2.0, z_obs, sd, on_unbracketed=on_unbracketed)
    w_lo = _find_mean(pivot, 1.0 - alpha / 2.0, z_obs, sd, on_unbracketed=on_unbracketed)
    if math.isinf(w_lo) and w_lo == w_hi:
        # both roots lie beyond the same end of the widest bracket
        edge = BRACKET_SIGMAS * 10.0**BRACKET_WIDENINGS * sd
        if w_lo < 0.0:
            w_hi = z_obs - edge
        else:
            w_lo = z_obs + edge
    if w_lo > w_hi:
        # only possible for alpha == 1 where both targets coincide
        w_lo = w_hi = 0.5 * (w_lo + w_hi)
    return ConfidenceInterval(w_lo, w_hi, alpha, "selective")


def naive_ci(z_obs: float, sigma2: float, alpha: float) -> ConfidenceInterval:
    """``z_obs +/- Phi^-1(1 - alpha/2) * sigma``."""
    if not sigma2 > 0.0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    half = 0.0 if alpha == 1.0 else float(normal_quantile(1.0 - alpha / 2.0)) * math.sqrt(sigma2)
    return ConfidenceInterval(z_obs - half, z_obs + half, alpha, "naive")


@dataclass(frozen=True, eq=False)
class SelectiveResult:
    """Everything produced by one run of the selective pipeline."""

    instance: ProblemInstance
    costs: CostDecomposition
    problem: TransportProblem
    solution: LpSolution
    line: SelectionLine
    region: TruncationRegion
    selective: ConfidenceInterval
    naive: ConfidenceInterval
    alpha: float
    warnings: list = field(default_factory=list)

    @property
    def distance(self) -> float:
        return self.solution.objective

    @property
    def eta(self) -> np.ndarray:
        return self.line.eta

    @property
    def degenerate(self) -> bool:
        return self.solution.degenerate

    def to_report(self) -> dict:
        inst = self.instance
        return {
            "schema": SCHEMA_VERSION,
            "n": inst.n,
            "m": inst.m,
            "d": inst.d,
            "alpha": self.alpha,
            "distance": self.distance,
            "z_obs": self.line.z_obs,
            "sigma2": self.line.sigma2,
            "basis": self.solution.basis_1based,
            "region": self.region.to_json(),
            "ci_selective": self.selective.to_json(),
            "ci_naive": self.naive.to_json(),
            "degenerate": self.degenerate,
            "warnings": list(self.warnings),
        }


def _degeneracy_message(sol: LpSolution, m: int) -> tuple:
    pos = int(np.argmin(sol.t_basic))
    cell = int(sol.basis[pos])
    i, j = divmod(cell, m)
    msg = (
        f"degenerate optimal basis: basic variable t[{cell + 1}] (x_{i + 1}, y_{j + 1}) "
        f"= {float(sol.t_basic[pos]) + 0.0:.3e}"
    )
    return msg, cell + 1, float(sol.t_basic[pos]) + 0.0


def run_algorithm_1(
    inst: ProblemInstance,
    alpha: float = 0.05,
    allow_degenerate: bool = False,
    on_unbracketed: str = "raise",
    opts: SolverOptions = DEFAULT_OPTIONS,
) -> SelectiveResult:
    """Distance, truncation region, and selective and naive intervals for ``inst``.

    Raises
    ------
    DegenerateSolution
        If the optimal basis is degenerate and ``allow_degenerate`` is false.
    EmptyRegion, NumericalFailure, DegenerateDirection, RootNotBracketed
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    costs = build_cost_decomposition(inst)
    tp = build_transport_problem(inst, costs)
    sol = solve_transport(tp, opts)
    warnings = []
    if sol.degenerate:
        msg, index, value = _degeneracy_message(sol, inst.m)
        if not allow_degenerate:
            raise DegenerateSolution(msg, index=index, value=value)
        warnings.append(msg + "; coupling region spans every basis of the optimal vertex")
    eta = build_eta(costs, sol)
    line = nuisance_line(eta, inst.sigma_tilde, inst.data_vec)
    z1 = compute_z1(costs, line)
    z2_basis = compute_z2(tp, costs, sol, line, vertex=False, opts=opts)
    z2 = compute_z2(tp, costs, sol, line, vertex=True, opts=opts) if sol.degenerate else z2_basis
    region = truncation_region(z1, z2, line.z_obs, z2_basis=z2_basis)
    sel = selective_ci(line, region, alpha, on_unbracketed=on_unbracketed)
    if not (math.isfinite(sel.lo) and math.isfinite(sel.hi)):
        warnings.append("selective interval endpoint lies beyond the widened search bracket; reported as infinite")
    naive = naive_ci(line.z_obs, line.sigma2, alpha)
    return SelectiveResult(inst, costs, tp, sol, line, region, sel, naive, alpha, warnings)
