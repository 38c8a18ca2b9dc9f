"""Shared numerical kernels.

Standard-normal CDF, quantile and log-space interval mass, dense LU solves for
basis systems, intervals with infinite endpoints, and seeded per-trial random
streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy import special

from ._errors import NumericalUnderflow, SingularMatrix

__all__ = [
    "normal_cdf",
    "normal_sf",
    "log_normal_cdf",
    "normal_quantile",
    "log_gauss_mass",
    "ExtendedInterval",
    "DenseLU",
    "solve_dense",
    "trial_rng",
    "linear_inequality_interval",
]

_SQRT2 = math.sqrt(2.0)

# Reciprocal condition below which a basis matrix is treated as singular.
RCOND_MIN = 1e-12


def normal_cdf(x):
    """Standard normal CDF (erfc-based, accurate in the lower tail)."""
    return special.ndtr(x)


def normal_sf(x):
    """Standard normal survival function ``1 - Phi(x)`` without cancellation."""
    return special.ndtr(-np.asarray(x, dtype=float))


def log_normal_cdf(x):
    """``log Phi(x)``, finite for any finite ``x``."""
    return special.log_ndtr(x)


def normal_quantile(p):
    """Inverse of :func:`normal_cdf`.

    Raises
    ------
    ValueError
        If any ``p`` lies outside the open interval (0, 1).
    """
    arr = np.asarray(p, dtype=float)
    if np.any(~((arr > 0.0) & (arr < 1.0))):
        raise ValueError(f"normal_quantile requires 0 < p < 1, got {p!r}")
    return special.ndtri(arr)


def log_gauss_mass(lo, hi):
    """Log of the standard normal probability of ``[lo, hi]``.

    Infinite endpoints are allowed. Intervals of width at most 1 are
    integrated by Gauss-Legendre quadrature in log space. Wider tail
    intervals are reflected into the lower tail and evaluated as
    ``log Phi(hi) + log(-expm1(log Phi(lo) - log Phi(hi)))``; wide intervals
    straddling zero use an ``erf`` difference, which has no cancellation there.

    The result stays finite well below ``exp(-745)``; only a mass whose log
    is not representable raises.

    Raises
    ------
    NumericalUnderflow
    """
    lo = float(lo)
    hi = float(hi)
    if math.isnan(lo) or math.isnan(hi):
        raise ValueError("interval endpoints must not be NaN")
    if lo > hi:
        raise ValueError(f"empty interval [{lo}, {hi}]")
    if lo == hi:
        return -math.inf
    if hi - lo <= 1.0:
        return _log_mass_quadrature(lo, hi)
    if lo >= 0.0:
        lo, hi = -hi, -lo
    if hi <= 0.0:
        log_hi = float(special.log_ndtr(hi))
        log_lo = float(special.log_ndtr(lo))
        if log_hi == -math.inf:
            raise NumericalUnderflow(f"Gaussian mass of [{lo}, {hi}] underflows")
        gap = log_lo - log_hi
        if gap == 0.0:
            # the two tail masses agree to machine precision
            raise NumericalUnderflow(
                f"Gaussian mass of [{lo}, {hi}] is below working precision"
            )
        return log_hi + math.log(-math.expm1(gap))
    mass = 0.5 * (math.erf(hi / _SQRT2) - math.erf(lo / _SQRT2))
    return math.log(mass)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _log_mass_quadrature(lo, hi):
    # Gauss-Legendre in log space; exact to rounding for widths up to 1 and
    # free of the cancellation that differences of CDF values suffer
    half = 0.5 * (hi - lo)
    x = 0.5 * (hi + lo) + half * _GL_NODES
    logs = -0.5 * x * x - _LOG_SQRT_2PI + np.log(_GL_WEIGHTS * half)
    top = float(logs.max())
    if not math.isfinite(top):
        raise NumericalUnderflow(f"Gaussian mass of [{lo}, {hi}] underflows")
    return top + math.log(float(np.exp(logs - top).sum()))


@dataclass(frozen=True)
class ExtendedInterval:
    """Closed interval whose endpoints may be ``-inf`` / ``+inf``.

    An empty intersection is reported as ``None``; a reversed interval can
    never be constructed.
    """

    lo: float = -math.inf
    hi: float = math.inf

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("interval endpoints must not be NaN")
        if lo > hi:
            raise ValueError(f"reversed interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= x <= self.hi + tol

    def intersect(self, other: "ExtendedInterval") -> "ExtendedInterval | None":
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if lo > hi:
            return None
        return ExtendedInterval(lo, hi)

    def clamp(self, x: float) -> float:
        return min(max(x, self.lo), self.hi)

    def to_json(self) -> list:
        return [_json_float(self.lo), _json_float(self.hi)]

    def __iter__(self):
        yield self.lo
        yield self.hi


def _json_float(x: float):
    if x == math.inf:
        return "inf"
    if x == -math.inf:
        return "-inf"
    return float(x)


class DenseLU:
    """LU factorization with partial pivoting and a reciprocal-condition estimate.

    Raises :class:`SingularMatrix` if the 1-norm condition estimate exceeds
    ``1 / rcond_min``.
    """

    def __init__(self, a, rcond_min: float = RCOND_MIN):
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        k = a.shape[0]
        if k == 0:
            raise ValueError("empty matrix")
        anorm = float(np.abs(a).sum(axis=0).max())
        if anorm == 0.0 or not np.isfinite(anorm):
            raise SingularMatrix("matrix is zero or non-finite")
        lu, piv, info = scipy.linalg.lapack.dgetrf(a)
        if info > 0:
            raise SingularMatrix(f"exactly singular: zero pivot at position {info}")
        rcond, _ = scipy.linalg.lapack.dgecon(lu, anorm, norm="1")
        if rcond < rcond_min:
            raise SingularMatrix(f"condition estimate {1.0 / max(rcond, 1e-300):.3e} exceeds limit")
        self._lu = lu
        self._piv = piv
        self.rcond = float(rcond)
        self.shape = a.shape

    def solve(self, b, transpose: bool = False) -> np.ndarray:
        x, info = scipy.linalg.lapack.dgetrs(
            self._lu, self._piv, np.asarray(b, dtype=float), trans=1 if transpose else 0
        )
        return x


def solve_dense(a, b) -> np.ndarray:
    """Solve ``a x = b`` by partial-pivoting LU.

    Raises
    ------
    SingularMatrix
        When ``a`` is singular or its condition estimate exceeds 1e12.
    """
    return DenseLU(a).solve(b)


def trial_rng(seed: int, index: int) -> np.random.Generator:
    """Independent PCG64 stream determined only by ``(seed, index)``.

    Streams are derived with :class:`numpy.random.SeedSequence` spawn keys, so
    the result never depends on evaluation order or worker count.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.PCG64(ss))


def linear_inequality_interval(p, q, zero_tol: float = 1e-12, feas_tol: float = 1e-9):
    """Solution set ``{z : p + q z >= 0}`` of a system of scalar inequalities.

    Rows with ``|q| <= zero_tol`` do not depend on ``z``; they only have to
    satisfy ``p >= -feas_tol``. Returns ``None`` when such a row fails or the
    bounds cross.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    flat = np.abs(q) <= zero_tol
    if np.any(p[flat] < -feas_tol):
        return None
    up = q > zero_tol
    down = q < -zero_tol
    lo = float(np.max(-p[up] / q[up])) if up.any() else -math.inf
    hi = float(np.min(-p[down] / q[down])) if down.any() else math.inf
    if lo > hi:
        return None
    return ExtendedInterval(lo, hi)
