"""Drift-aware rebalancing backtester.

The engine walks the panel's dates once. Between rebalances the portfolio is
buy-and-hold: weights drift with relative asset performance and the daily
gross strategy return is the weight-lagged sum of asset returns. On each
rebalance date the target allocation is recomputed from data up to and
including that date (decision and trade at the close), turnover is the
two-sided weight change versus the drifted portfolio, and the net NAV pays
``cost_spread`` per unit traded.

The first allocation is treated as a rebalance out of a 100% benchmark
position, so its turnover (and cost) is counted like any other.
"""

from __future__ import annotations

import bisect
import datetime as dt
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    EmptyInputError,
    InsufficientDataError,
    ValidationError,
    XsalphaError,
    attach_date,
)
from .optimize import BoundSet, WeightVector, solve
from .panel import AlignedPanel, _frozen
from .stats import compute_excess_stats


@dataclass(frozen=True)
class StrategyConfig:
    """Everything the engine needs besides the panel itself."""

    lookback_days: int
    rebalance_every_days: int
    sigma_annual: float
    bounds: BoundSet
    start: dt.date
    end: dt.date
    cost_spread: float = 0.0005

    def __post_init__(self):
        if self.start >= self.end:
            raise ValidationError(f"start {self.start} must precede end {self.end}")
        if self.lookback_days < 2:
            raise ValidationError("lookback_days must be >= 2")
        if self.rebalance_every_days < 1:
            raise ValidationError("rebalance_every_days must be >= 1")
        if self.sigma_annual <= 0.0:
            raise ValidationError("sigma_annual must be positive")
        if self.cost_spread < 0.0:
            raise ValidationError("cost_spread must be nonnegative")


@dataclass(frozen=True)
class BacktestResult:
    """Daily NAV paths plus the trade record of one strategy run."""

    names: tuple[str, ...]
    dates: tuple[dt.date, ...]
    nav: np.ndarray
    nav_net: np.ndarray
    benchmark_nav: np.ndarray
    weights_history: np.ndarray  # (n_dates, n+1), post-drift pre-trade
    rebalance_dates: tuple[dt.date, ...]
    per_rebalance_turnover: np.ndarray
    target_weights: np.ndarray  # (n_rebalances, n+1), decided targets
    cost_spread: float

    def __post_init__(self):
        for field in ("nav", "nav_net", "benchmark_nav", "per_rebalance_turnover",
                      "weights_history", "target_weights"):
            object.__setattr__(self, field, _frozen(getattr(self, field)))
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "rebalance_dates", tuple(self.rebalance_dates))
        n_dates = len(self.dates)
        if not (self.nav.shape == self.nav_net.shape == self.benchmark_nav.shape == (n_dates,)):
            raise ValidationError("NAV series must have one value per date")
        if np.any(self.nav <= 0) or np.any(self.benchmark_nav <= 0) or np.any(self.nav_net <= 0):
            raise ValidationError("NAV series must stay strictly positive")
        if self.weights_history.shape != (n_dates, len(self.names)):
            raise ValidationError("weights history shape mismatch")
        sums = self.weights_history.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-8):
            raise ValidationError("daily weights must sum to one")
        if np.any(self.per_rebalance_turnover < 0):
            raise ValidationError("turnover cannot be negative")

    @property
    def total_turnover(self) -> float:
        return float(self.per_rebalance_turnover.sum())

    def weight_vector(self, k: int) -> WeightVector:
        """Post-drift pre-trade allocation on date index ``k``."""
        return WeightVector(self.names, self.weights_history[k])


TargetPolicy = Callable[[dt.date], np.ndarray]


def rebalance_schedule(
    panel_dates: tuple[dt.date, ...], first: dt.date, every_days: int, end: dt.date
) -> list[dt.date]:
    """Calendar-stepped targets from ``first``, snapped forward to panel dates."""
    chosen: list[dt.date] = []
    k = 0
    while True:
        target = first + dt.timedelta(days=k * every_days)
        if target > end:
            break
        pos = bisect.bisect_left(panel_dates, target)
        if pos == len(panel_dates) or panel_dates[pos] > end:
            break
        snapped = panel_dates[pos]
        if not chosen or snapped != chosen[-1]:
            chosen.append(snapped)
        k += 1
    return chosen


def _run_engine(
    panel: AlignedPanel, config: StrategyConfig, decide_target: TargetPolicy
) -> BacktestResult:
    all_dates = panel.dates
    in_range = [d for d in all_dates if config.start <= d <= config.end]
    if len(in_range) < 2:
        raise InsufficientDataError(
            f"panel holds {len(in_range)} dates in [{config.start}, {config.end}], need >= 2",
            found=len(in_range),
        )
    first = in_range[0]
    window_start = first - dt.timedelta(days=config.lookback_days)
    if all_dates[0] > window_start:
        raise InsufficientDataError(
            f"first rebalance {first} needs data back to {window_start}, "
            f"panel starts {all_dates[0]}"
        )

    rebalances = rebalance_schedule(all_dates, first, config.rebalance_every_days, config.end)
    rebalance_set = set(rebalances)

    start_pos = all_dates.index(first)
    levels = panel.levels_matrix()[start_pos : start_pos + len(in_range)]
    asset_returns = levels[1:] / levels[:-1] - 1.0

    n1 = panel.n_indices + 1
    n_dates = len(in_range)
    nav = np.empty(n_dates)
    nav_net = np.empty(n_dates)
    history = np.empty((n_dates, n1))
    turnovers: list[float] = []
    targets: list[np.ndarray] = []

    held = np.zeros(n1)
    held[0] = 1.0  # notional pre-history position: all benchmark
    nav[0] = nav_net[0] = 1.0

    for k, date in enumerate(in_range):
        if k > 0:
            growth = held * (1.0 + asset_returns[k - 1])
            day_return = float(growth.sum()) - 1.0
            nav[k] = nav[k - 1] * (1.0 + day_return)
            nav_net[k] = nav_net[k - 1] * (1.0 + day_return)
            held = growth / growth.sum()
        history[k] = held
        if date in rebalance_set:
            try:
                target = np.asarray(decide_target(date), dtype=float)
            except XsalphaError as err:
                raise attach_date(err, date)
            turnover = float(np.abs(target - held).sum())
            turnovers.append(turnover)
            targets.append(target)
            nav_net[k] *= 1.0 - config.cost_spread * turnover
            held = target

    return BacktestResult(
        names=panel.names,
        dates=tuple(in_range),
        nav=nav,
        nav_net=nav_net,
        benchmark_nav=levels[:, 0] / levels[0, 0],
        weights_history=history,
        rebalance_dates=tuple(rebalances),
        per_rebalance_turnover=np.asarray(turnovers),
        target_weights=np.asarray(targets),
        cost_spread=config.cost_spread,
    )


def run_backtest(panel: AlignedPanel, config: StrategyConfig) -> BacktestResult:
    """Run the timing strategy: re-optimize on schedule, drift in between.

    Each rebalance decision uses only panel data up to and including the
    rebalance date (stats window of ``lookback_days`` calendar days), so
    truncating the panel after a date never changes decisions made on or
    before it.
    """

    def decide(date: dt.date) -> np.ndarray:
        stats = compute_excess_stats(panel, date, config.lookback_days)
        outcome = solve(stats, config.bounds, config.sigma_annual)
        return outcome.weights.weights

    return _run_engine(panel, config, decide)


def run_static_backtest(
    panel: AlignedPanel, weights: WeightVector, config: StrategyConfig
) -> BacktestResult:
    """Run the same engine with a constant target allocation.

    The fixed ``weights`` are re-established on every scheduled rebalance
    date, which makes the result directly comparable to a timing run on the
    same schedule.
    """
    if weights.names != panel.names:
        raise ValidationError(
            f"weight names {weights.names} do not match panel names {panel.names}"
        )
    fixed = np.asarray(weights.weights, dtype=float)
    return _run_engine(panel, config, lambda date: fixed)


def mean_weights(result: BacktestResult) -> WeightVector:
    """Arithmetic mean of the daily post-drift weights, renormalized to one.

    The renormalization only corrects the accumulated float residue; the
    daily rows already sum to one within 1e-8.
    """
    if result.weights_history.shape[0] == 0:
        raise EmptyInputError("weights history is empty")
    mean = result.weights_history.mean(axis=0)
    return WeightVector(result.names, mean / mean.sum())
