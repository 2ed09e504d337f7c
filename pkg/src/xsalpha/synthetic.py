"""Reproducible synthetic universes with controllable excess-return momentum.

The benchmark follows a geometric walk on daily arithmetic returns. Each
index is built on top of it through its excess-return process: daily excess
returns follow AR(1) dynamics with correlated Gaussian innovations, the
excess-ratio path compounds those returns, and the index level is the
benchmark level times the ratio. Building levels through the excess process
(benchmark first) guarantees the universe's true excess dynamics are exactly
the configured AR(1).

Randomness comes from ``numpy.random.default_rng`` (PCG64), a named,
seedable generator with platform-stable streams: identical seeds produce
bit-identical panels. Draw order is fixed: benchmark shocks first, then the
(days-1, n) innovation matrix.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .panel import AlignedPanel, PriceSeries, _frozen

FIRST_DATE = dt.date(2001, 1, 1)
BENCHMARK_NAME = "BENCH"
_INITIAL_LEVEL = 100.0


def index_name(i: int) -> str:
    """Name of the i-th generated index (1-based)."""
    return f"IDX{i}"


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of one synthetic universe.

    Vector fields accept scalars and are broadcast to ``n_indices``;
    ``correlation`` defaults to the identity. ``excess_vol`` is the standard
    deviation of the AR(1) innovations, so the stationary excess-return
    standard deviation is ``excess_vol / sqrt(1 - excess_ar1**2)``.
    """

    seed: int
    days: int
    n_indices: int
    benchmark_drift: float
    benchmark_vol: float
    excess_drift: np.ndarray
    excess_vol: np.ndarray
    excess_ar1: np.ndarray
    correlation: np.ndarray | None = None

    def __post_init__(self):
        if self.days < 2:
            raise ValidationError("days must be >= 2")
        if self.n_indices < 1:
            raise ValidationError("n_indices must be >= 1")
        n = self.n_indices
        for field in ("excess_drift", "excess_vol", "excess_ar1"):
            arr = np.broadcast_to(np.asarray(getattr(self, field), dtype=float), (n,))
            object.__setattr__(self, field, _frozen(arr))
        corr = self.correlation
        corr = np.eye(n) if corr is None else np.asarray(corr, dtype=float)
        object.__setattr__(self, "correlation", _frozen(corr))

        if self.benchmark_vol < 0.0 or np.any(self.excess_vol < 0.0):
            raise ValidationError("volatilities must be nonnegative")
        if np.any(np.abs(self.excess_ar1) >= 1.0):
            raise ValidationError("AR(1) coefficients must lie in (-1, 1)")
        if self.correlation.shape != (n, n):
            raise ValidationError(f"correlation must be {n}x{n}")
        if not np.allclose(self.correlation, self.correlation.T, atol=1e-12):
            raise ValidationError("correlation must be symmetric")
        if not np.allclose(np.diag(self.correlation), 1.0, atol=1e-12):
            raise ValidationError("correlation must have a unit diagonal")
        if np.linalg.eigvalsh(self.correlation).min() < -1e-10:
            raise ValidationError("correlation must be positive semidefinite")


def _shock_transform(correlation: np.ndarray) -> np.ndarray:
    """Matrix L with L L' = correlation; eigen route for singular inputs."""
    try:
        return np.linalg.cholesky(correlation)
    except np.linalg.LinAlgError:
        eigvals, eigvecs = np.linalg.eigh(correlation)
        return eigvecs @ np.diag(np.sqrt(np.clip(eigvals, 0.0, None)))


def draw_paths(spec: SynthSpec) -> tuple[np.ndarray, np.ndarray]:
    """Benchmark returns (days-1,) and excess returns (days-1, n) for a spec."""
    rng = np.random.default_rng(spec.seed)
    steps = spec.days - 1
    n = spec.n_indices

    bench_returns = spec.benchmark_drift + spec.benchmark_vol * rng.standard_normal(steps)
    shocks = rng.standard_normal((steps, n)) @ _shock_transform(spec.correlation).T
    shocks *= spec.excess_vol

    alpha = np.empty((steps, n))
    deviation = np.zeros(n)
    for t in range(steps):
        deviation = spec.excess_ar1 * deviation + shocks[t]
        alpha[t] = spec.excess_drift + deviation
    return bench_returns, alpha


def generate(spec: SynthSpec) -> AlignedPanel:
    """Generate the aligned level panel for a spec.

    Raises a validation error if a drawn return pushes any level to or below
    zero (possible only with extreme drift/vol settings).
    """
    bench_returns, alpha = draw_paths(spec)
    if np.any(bench_returns <= -1.0) or np.any(alpha <= -1.0):
        raise ValidationError(
            "drawn returns reach -100%; lower the configured vols or drifts"
        )

    bench_levels = _INITIAL_LEVEL * np.concatenate(
        [[1.0], np.cumprod(1.0 + bench_returns)]
    )
    ratios = np.vstack([np.ones(spec.n_indices), np.cumprod(1.0 + alpha, axis=0)])
    index_levels = ratios * bench_levels[:, None]

    dates = tuple(FIRST_DATE + dt.timedelta(days=k) for k in range(spec.days))
    benchmark = PriceSeries(BENCHMARK_NAME, dates, bench_levels)
    indices = tuple(
        PriceSeries(index_name(i + 1), dates, index_levels[:, i])
        for i in range(spec.n_indices)
    )
    return AlignedPanel(benchmark, indices)
