"""Windowed mean and covariance of daily excess returns.

For a window of T calendar days ending at ``as_of`` (half-open on the left,
closed on the right) this module estimates, per index, the mean daily excess
return and the population covariance of excess returns, then embeds them in
vectors/matrices with the benchmark in slot 0 carrying zeros: the benchmark
has no excess return against itself, and giving it a zero row keeps it
risk-free in the tracking-error quadratic form.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np

from .errors import DateNotFoundError, InsufficientDataError, ValidationError
from .panel import AlignedPanel, _frozen

# Eigenvalues of the index covariance block above this floor are treated as
# rounding noise and clipped; anything below is a real data problem.
PSD_TOLERANCE = -1e-10


@dataclass(frozen=True)
class ExcessStats:
    """Window statistics of daily excess returns, benchmark slot zeroed."""

    as_of: dt.date
    names: tuple[str, ...]
    delta: np.ndarray
    omega: np.ndarray
    window_days: int
    sample_count: int

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "delta", _frozen(self.delta))
        object.__setattr__(self, "omega", _frozen(self.omega))
        n1 = len(self.names)
        if self.delta.shape != (n1,) or self.omega.shape != (n1, n1):
            raise ValidationError(
                f"stats shapes {self.delta.shape}/{self.omega.shape} do not "
                f"match {n1} names"
            )
        if self.sample_count < 2:
            raise ValidationError("sample_count must be >= 2")
        if self.window_days < 1:
            raise ValidationError("window_days must be positive")
        if self.delta[0] != 0.0 or np.any(self.omega[0, :]) or np.any(self.omega[:, 0]):
            raise ValidationError("benchmark entries of delta/omega must be zero")
        if not np.allclose(self.omega, self.omega.T, rtol=0.0, atol=1e-15):
            raise ValidationError("omega must be symmetric")
        if n1 > 1:
            min_eig = float(np.linalg.eigvalsh(self.omega[1:, 1:]).min())
            if min_eig < PSD_TOLERANCE:
                raise ValidationError(
                    f"omega is not positive semidefinite (min eigenvalue {min_eig:.3e})"
                )

    @property
    def n_indices(self) -> int:
        return len(self.names) - 1


def excess_moments(alpha: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean vector and population covariance of excess-return observations.

    ``alpha`` is (n_obs, n) with one column per index. Covariance uses the
    two-pass form with divisor n_obs (population estimator) and embeds a zero
    benchmark row/column, returning (delta, omega) of sizes n+1 and
    (n+1, n+1). Eigenvalues of the index block in ``(PSD_TOLERANCE, 0)`` are
    clipped to zero by a diagonal shift; more negative ones raise.
    """
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 2 or alpha.shape[0] < 2:
        raise InsufficientDataError(
            f"need at least 2 excess-return observations, got {alpha.shape[0]}",
            found=int(alpha.shape[0]),
        )
    n_obs, n = alpha.shape
    mean = alpha.mean(axis=0)
    centered = alpha - mean
    cov = centered.T @ centered / n_obs
    cov = 0.5 * (cov + cov.T)

    min_eig = float(np.linalg.eigvalsh(cov).min())
    if min_eig < PSD_TOLERANCE:
        raise ValidationError(
            f"excess covariance is not positive semidefinite "
            f"(min eigenvalue {min_eig:.3e})"
        )
    if min_eig < 0.0:
        cov = cov + (-min_eig) * np.eye(n)

    delta = np.zeros(n + 1)
    delta[1:] = mean
    omega = np.zeros((n + 1, n + 1))
    omega[1:, 1:] = cov
    return delta, omega


def window_alpha(
    panel: AlignedPanel, as_of: dt.date, window_days: int
) -> tuple[np.ndarray, list[dt.date]]:
    """Excess-return observations with dates in (as_of - window_days, as_of].

    Returns the (n_obs, n) matrix of daily excess returns plus the
    observation dates. Each observation at date t_k is the ratio return
    R(t_k)/R(t_{k-1}) - 1, so the first panel date never carries one.
    """
    dates = panel.dates
    if as_of not in dates:
        raise DateNotFoundError(f"{as_of.isoformat()} is not a panel date")
    cutoff = as_of - dt.timedelta(days=window_days)

    levels = panel.levels_matrix()
    ratios = levels[:, 1:] / levels[:, :1]
    alpha_all = ratios[1:] / ratios[:-1] - 1.0  # row k-1 belongs to dates[k]

    keep = [
        k - 1
        for k in range(1, len(dates))
        if cutoff < dates[k] <= as_of
    ]
    if len(keep) < 2:
        raise InsufficientDataError(
            f"window ({cutoff.isoformat()}, {as_of.isoformat()}] holds "
            f"{len(keep)} excess-return observations, need >= 2",
            found=len(keep),
        )
    obs_dates = [dates[k + 1] for k in keep]
    return alpha_all[keep], obs_dates


def compute_excess_stats(
    panel: AlignedPanel, as_of: dt.date, window_days: int
) -> ExcessStats:
    """Window-mean excess returns and their population covariance at ``as_of``.

    The window counts calendar days: every panel observation with date in
    (as_of - window_days, as_of] enters with equal weight.
    """
    if window_days < 1:
        raise ValidationError("window_days must be positive")
    alpha, obs_dates = window_alpha(panel, as_of, window_days)
    delta, omega = excess_moments(alpha)
    return ExcessStats(
        as_of=as_of,
        names=panel.names,
        delta=delta,
        omega=omega,
        window_days=window_days,
        sample_count=len(obs_dates),
    )
