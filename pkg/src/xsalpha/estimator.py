"""scikit-learn estimator wrapper around the two-stage allocator.

`ExcessTimingOptimizer` follows the fit/attributes contract of
``sklearn.base.BaseEstimator`` so the allocator composes with pipelines,
`clone`, grid search and friends: hyperparameters in ``__init__``, data in
``fit``, results in trailing-underscore attributes.
"""

from __future__ import annotations

import datetime as dt

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import ValidationError
from .optimize import BoundSet, solve
from .stats import ExcessStats, excess_moments


class ExcessTimingOptimizer(BaseEstimator):
    """Benchmark-relative allocator with a tracking-error budget.

    Fit on a lookback window of daily returns. The estimator converts the
    window to benchmark-relative excess returns, estimates their mean and
    population covariance, and solves the two-stage problem: maximize the
    window-mean excess return subject to the weight box and the daily
    tracking-error variance budget, then minimize the tracking-error
    variance among the maximizers.

    Parameters
    ----------
    sigma_annual : float, default=0.04
        Annual tracking-error budget.
    lower_bounds, upper_bounds : float or array-like of shape (n_assets,)
        Per-index weight box; lower <= 0 <= upper is required so the
        all-benchmark portfolio stays admissible.
    benchmark_bounds : tuple of (float, float), default=(0.0, 1.0)
        Box for the implicit benchmark weight ``1 - sum(index weights)``.

    Attributes
    ----------
    weights_ : ndarray of shape (n_assets,)
        Index weights of the solved portfolio.
    benchmark_weight_ : float
        Benchmark weight, ``1 - weights_.sum()``.
    max_excess_return_ : float
        Stage-1 maximum window-mean excess return, daily units.
    te_variance_ : float
        Daily tracking-error variance of the solved portfolio.
    n_features_in_ : int
        Number of index columns seen during fit.

    Examples
    --------
    >>> import numpy as np
    >>> rng = np.random.default_rng(0)
    >>> bench = rng.normal(3e-4, 0.01, 260)
    >>> assets = bench[:, None] + rng.normal(1e-4, 0.003, (260, 3))
    >>> opt = ExcessTimingOptimizer(sigma_annual=0.04).fit(assets, bench)
    >>> round(float(opt.weights_.sum() + opt.benchmark_weight_), 9)
    1.0
    """

    def __init__(
        self,
        sigma_annual: float = 0.04,
        lower_bounds: float | np.ndarray = 0.0,
        upper_bounds: float | np.ndarray = 1.0,
        benchmark_bounds: tuple[float, float] = (0.0, 1.0),
    ):
        self.sigma_annual = sigma_annual
        self.lower_bounds = lower_bounds
        self.upper_bounds = upper_bounds
        self.benchmark_bounds = benchmark_bounds

    def _bound_set(self, n: int) -> BoundSet:
        lower = np.broadcast_to(np.asarray(self.lower_bounds, dtype=float), (n,))
        upper = np.broadcast_to(np.asarray(self.upper_bounds, dtype=float), (n,))
        return BoundSet.explicit(lower, upper, benchmark=tuple(self.benchmark_bounds))

    def fit(self, X, y):
        """Solve the allocation for one lookback window of daily returns.

        Parameters
        ----------
        X : array-like of shape (n_observations, n_assets)
            Daily arithmetic returns of the indices over the window.
        y : array-like of shape (n_observations,)
            Daily arithmetic returns of the benchmark on the same dates.

        Returns
        -------
        self
        """
        X = check_array(X, dtype=float, ensure_min_samples=2)
        y = check_array(y, dtype=float, ensure_2d=False).reshape(-1)
        if y.shape[0] != X.shape[0]:
            raise ValidationError(
                f"benchmark returns have {y.shape[0]} observations, assets {X.shape[0]}"
            )
        if np.any(y <= -1.0) or np.any(X <= -1.0):
            raise ValidationError("returns at or below -100% do not come from positive levels")

        alpha = (1.0 + X) / (1.0 + y[:, None]) - 1.0
        delta, omega = excess_moments(alpha)
        names = ("benchmark",) + tuple(f"asset{i}" for i in range(X.shape[1]))
        stats = ExcessStats(
            as_of=dt.date.min,
            names=names,
            delta=delta,
            omega=omega,
            window_days=X.shape[0],
            sample_count=X.shape[0],
        )
        outcome = solve(stats, self._bound_set(X.shape[1]), self.sigma_annual)

        self.n_features_in_ = X.shape[1]
        self.weights_ = np.asarray(outcome.weights.weights[1:])
        self.benchmark_weight_ = float(outcome.weights.weights[0])
        self.max_excess_return_ = outcome.max_excess_return
        self.te_variance_ = outcome.realized_te_variance
        return self

    def predict(self, X):
        """Daily portfolio excess returns implied by the fitted weights.

        Parameters
        ----------
        X : array-like of shape (n_observations, n_assets)
            Daily excess returns of the indices versus the benchmark.

        Returns
        -------
        ndarray of shape (n_observations,)
        """
        check_is_fitted(self, "weights_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValidationError(
                f"expected {self.n_features_in_} asset columns, got {X.shape[1]}"
            )
        return X @ self.weights_
