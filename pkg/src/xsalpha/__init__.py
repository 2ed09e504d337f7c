"""Excess-return timing: signal, two-stage allocator, backtester, analytics."""

from .analytics import (
    PerformanceReport,
    VsMeanReport,
    alpha_and_te,
    alpha_significance,
    allocation_active_split,
    annualized_return,
    annualized_turnover,
    annualized_vol,
    build_report,
    mrdd,
    ter,
)
from .backtest import (
    BacktestResult,
    StrategyConfig,
    mean_weights,
    run_backtest,
    run_static_backtest,
)
from .errors import XsalphaError
from .estimator import ExcessTimingOptimizer
from .optimize import BoundSet, SolveOutcome, WeightVector, brute_force_solve, solve
from .panel import (
    AlignedPanel,
    PriceSeries,
    ReturnSeries,
    daily_excess_returns,
    excess_ratio,
    load_panel,
    write_panel,
)
from .stats import ExcessStats, compute_excess_stats
from .synthetic import SynthSpec, generate

__version__ = "0.1.0"

__all__ = [
    "AlignedPanel",
    "BacktestResult",
    "BoundSet",
    "ExcessStats",
    "ExcessTimingOptimizer",
    "PerformanceReport",
    "PriceSeries",
    "ReturnSeries",
    "SolveOutcome",
    "StrategyConfig",
    "SynthSpec",
    "VsMeanReport",
    "WeightVector",
    "XsalphaError",
    "alpha_and_te",
    "alpha_significance",
    "allocation_active_split",
    "annualized_return",
    "annualized_turnover",
    "annualized_vol",
    "brute_force_solve",
    "build_report",
    "compute_excess_stats",
    "daily_excess_returns",
    "excess_ratio",
    "generate",
    "load_panel",
    "mean_weights",
    "mrdd",
    "run_backtest",
    "run_static_backtest",
    "solve",
    "ter",
    "write_panel",
]
