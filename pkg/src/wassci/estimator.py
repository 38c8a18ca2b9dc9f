"""Scikit-learn style wrapper around the selective interval pipeline."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from ._errors import DimensionMismatch
from .model import ProblemInstance, pooled_variance
from .selective import run_algorithm_1


def _as_sample(a, name):
    if np.ndim(a) == 1:
        a = np.asarray(a, dtype=float).reshape(-1, 1)
    return check_array(a, dtype=float, ensure_min_samples=1, input_name=name)


class SelectiveWassersteinCI(BaseEstimator):
    """Selective confidence interval for the l1 Wasserstein distance of two samples.

    ``fit(X, Y)`` treats the rows of ``X`` and ``Y`` as two empirical
    measures with uniform weights and Gaussian noise, computes the optimal
    transport distance, and inverts the truncated-normal pivot obtained by
    conditioning on the sign pattern and the optimal coupling.

    Parameters
    ----------
    alpha : float, default=0.05
        Miscoverage level in (0, 1).
    sigma : float or None, default=None
        Noise standard deviation for both samples; ``None`` means 1 unless
        ``estimate_sigma`` is set.
    estimate_sigma : bool, default=False
        Use the pooled within-sample variance instead of ``sigma``.
    cov_x, cov_y : array-like or None
        Full covariances of ``vec(X)`` and ``vec(Y)``; override ``sigma``.
    allow_degenerate : bool, default=True
        Proceed when the optimal vertex is degenerate (always the case for
        equal sample sizes).
    on_unbracketed : {"infinite", "raise"}, default="infinite"
        What to do when an interval endpoint lies beyond the search bracket.

    Attributes
    ----------
    distance_ : float
    ci_ : tuple of float
        Selective interval.
    naive_ci_ : tuple of float
    z_obs_, sigma2_ : float
    eta_ : ndarray
    basis_ : list of int
        1-based cell indices ``i * m + j + 1`` of the optimal basis.
    region_ : TruncationRegion
    degenerate_ : bool
    warnings_ : list of str
    result_ : SelectiveResult
    """

    def __init__(
        self,
        alpha=0.05,
        sigma=None,
        estimate_sigma=False,
        cov_x=None,
        cov_y=None,
        allow_degenerate=True,
        on_unbracketed="infinite",
    ):
        self.alpha = alpha
        self.sigma = sigma
        self.estimate_sigma = estimate_sigma
        self.cov_x = cov_x
        self.cov_y = cov_y
        self.allow_degenerate = allow_degenerate
        self.on_unbracketed = on_unbracketed

    def _validate_params(self):
        if not 0.0 < float(self.alpha) < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.estimate_sigma and self.sigma is not None:
            raise ValueError("sigma and estimate_sigma are mutually exclusive")
        if self.sigma is not None and not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")
        if self.on_unbracketed not in ("infinite", "raise"):
            raise ValueError(f"unknown on_unbracketed policy {self.on_unbracketed!r}")

    def _instance(self, x, y) -> ProblemInstance:
        if x.shape[1] != y.shape[1]:
            raise DimensionMismatch(f"X has {x.shape[1]} features but Y has {y.shape[1]}")
        if self.estimate_sigma:
            var = pooled_variance(x, y)
        else:
            var = 1.0 if self.sigma is None else float(self.sigma) ** 2
        sx = var * np.eye(x.size) if self.cov_x is None else np.asarray(self.cov_x, dtype=float)
        sy = var * np.eye(y.size) if self.cov_y is None else np.asarray(self.cov_y, dtype=float)
        return ProblemInstance(x, y, sx, sy)

    def fit(self, X, Y):
        """Compute the distance and both intervals for samples ``X`` and ``Y``.

        Returns
        -------
        self
        """
        self._validate_params()
        x = _as_sample(X, "X")
        y = _as_sample(Y, "Y")
        res = run_algorithm_1(
            self._instance(x, y),
            float(self.alpha),
            allow_degenerate=self.allow_degenerate,
            on_unbracketed=self.on_unbracketed,
        )
        self.result_ = res
        self.distance_ = res.distance
        self.ci_ = (res.selective.lo, res.selective.hi)
        self.naive_ci_ = (res.naive.lo, res.naive.hi)
        self.z_obs_ = res.line.z_obs
        self.sigma2_ = res.line.sigma2
        self.eta_ = res.eta
        self.basis_ = res.solution.basis_1based
        self.region_ = res.region
        self.degenerate_ = res.degenerate
        self.warnings_ = list(res.warnings)
        self.n_features_in_ = x.shape[1]
        return self

    def report(self) -> dict:
        """JSON-ready report record of the last fit."""
        check_is_fitted(self, "result_")
        return self.result_.to_report()
