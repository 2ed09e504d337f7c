"""Performance statistics for backtest results.

Conventions match the reporting side of the model: annualized return is the
mean daily return times 365.25, volatility and tracking error are population
standard deviations times sqrt(365.25), and the information ratio is
annualized alpha over tracking error. Significance uses a one-sided
one-sample Student-t test on the daily difference series (sample standard
deviation for the test statistic, as usual for inference).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .backtest import BacktestResult, mean_weights
from .conventions import DAYS_PER_YEAR, SQRT_DAYS_PER_YEAR
from .errors import (
    AlignmentError,
    DegenerateStatisticError,
    EmptyInputError,
    InsufficientDataError,
)
from .panel import AlignedPanel, PriceSeries, ReturnSeries


def annualized_return(daily: ReturnSeries) -> float:
    """Mean daily return scaled to a 365.25-day year."""
    if len(daily) == 0:
        raise EmptyInputError("return series is empty")
    return float(daily.values.mean()) * DAYS_PER_YEAR


def _population_std(values: np.ndarray) -> float:
    # A constant series has zero spread by definition; np.std can return
    # rounding dust when the mean is not exactly representable.
    if np.all(values == values[0]):
        return 0.0
    return float(values.std(ddof=0))


def annualized_vol(daily: ReturnSeries) -> float:
    """Population standard deviation of daily returns, annualized."""
    if len(daily) < 2:
        raise InsufficientDataError(
            f"volatility needs >= 2 observations, got {len(daily)}", found=len(daily)
        )
    return _population_std(daily.values) * SQRT_DAYS_PER_YEAR


def alpha_and_te(
    strategy: ReturnSeries, benchmark: ReturnSeries
) -> tuple[float, float, float]:
    """Annualized alpha, tracking error and information ratio.

    Alpha is the annualized mean of the daily strategy-minus-benchmark
    difference, tracking error its annualized population standard deviation,
    and IR their ratio. A zero tracking error is only meaningful with zero
    alpha (identical series), in which case all three are zero.
    """
    if strategy.dates != benchmark.dates:
        raise AlignmentError("strategy and benchmark returns are on different dates")
    diff = strategy.values - benchmark.values
    alpha = float(diff.mean()) * DAYS_PER_YEAR
    te = _population_std(diff) * SQRT_DAYS_PER_YEAR
    if te == 0.0:
        if alpha == 0.0:
            return 0.0, 0.0, 0.0
        raise DegenerateStatisticError(
            f"tracking error is zero but alpha is {alpha!r}; IR is undefined"
        )
    return alpha, te, alpha / te


def mrdd(strategy_nav: PriceSeries, benchmark_nav: PriceSeries) -> float:
    """Maximum relative drawdown of the strategy/benchmark NAV ratio.

    With Q(t) the NAV ratio, this is min over t of Q(t)/max_{s<=t} Q(s) - 1:
    the deepest peak-to-trough fall of the strategy relative to the
    benchmark. Always nonpositive.
    """
    if strategy_nav.dates != benchmark_nav.dates:
        raise AlignmentError("NAV series are on different dates")
    ratio = strategy_nav.levels / benchmark_nav.levels
    running_peak = np.maximum.accumulate(ratio)
    return float((ratio / running_peak - 1.0).min())


def ter(turnover_annual: float, cost_spread: float) -> float:
    """Annual cost estimate: annualized two-sided turnover times the spread."""
    if turnover_annual < 0.0 or cost_spread < 0.0:
        raise ValueError("turnover and cost_spread must be nonnegative")
    return turnover_annual * cost_spread


def alpha_significance(strategy: ReturnSeries, reference: ReturnSeries) -> float:
    """One-sided p-value that the daily outperformance mean is positive.

    Student-t test on d(t) = strategy(t) - reference(t) with N-1 degrees of
    freedom; the statistic uses the sample (N-1) standard deviation. Small
    p-values support mean(d) > 0.
    """
    if strategy.dates != reference.dates:
        raise AlignmentError("strategy and reference returns are on different dates")
    diff = strategy.values - reference.values
    n = diff.size
    if n < 30:
        raise InsufficientDataError(
            f"significance test needs >= 30 observations, got {n}", found=n
        )
    if np.all(diff == diff[0]):
        if diff[0] == 0.0:
            raise DegenerateStatisticError("difference series is identically zero")
        # Constant nonzero difference: the one-sided conclusion is immediate.
        return 0.0 if diff[0] > 0.0 else 1.0
    sd = float(diff.std(ddof=1))
    t_stat = float(diff.mean()) / (sd / np.sqrt(n))
    return float(sps.t.sf(t_stat, df=n - 1))


def strategy_returns(result: BacktestResult, net: bool = False) -> ReturnSeries:
    """Daily arithmetic returns of the (gross or net) strategy NAV."""
    nav = result.nav_net if net else result.nav
    return ReturnSeries("strategy_net" if net else "strategy",
                        result.dates[1:], nav[1:] / nav[:-1] - 1.0)


def benchmark_returns(result: BacktestResult) -> ReturnSeries:
    """Daily arithmetic returns of the benchmark NAV."""
    nav = result.benchmark_nav
    return ReturnSeries("benchmark", result.dates[1:], nav[1:] / nav[:-1] - 1.0)


def annualized_turnover(result: BacktestResult) -> float:
    """Total two-sided turnover scaled by calendar time to a 365.25-day year."""
    days = (result.dates[-1] - result.dates[0]).days
    if days <= 0:
        raise InsufficientDataError("turnover annualization needs a positive date span")
    return result.total_turnover * DAYS_PER_YEAR / days


def allocation_active_split(
    result: BacktestResult, panel: AlignedPanel
) -> tuple[float, float]:
    """Split alpha into an allocation part and a timing (active) residual.

    The allocation part is what a constant portfolio at the run's mean
    weights would have earned from each index's mean daily excess return
    over the backtest window; the active part is the run's total alpha minus
    that, attributed to timing. The two parts sum to alpha exactly.
    """
    if len(result.dates) < 2:
        raise EmptyInputError("result must cover at least 2 dates")
    mw = mean_weights(result).weights

    window = panel.restrict(result.dates[0], result.dates[-1])
    levels = window.levels_matrix()
    ratios = levels[:, 1:] / levels[:, :1]
    alpha_obs = ratios[1:] / ratios[:-1] - 1.0
    mean_excess = alpha_obs.mean(axis=0) * DAYS_PER_YEAR

    allocation = float(mw[1:] @ mean_excess)  # benchmark's own excess is zero
    alpha, _, _ = _result_alpha_te_ir(result)
    return allocation, alpha - allocation


def _result_alpha_te_ir(result: BacktestResult) -> tuple[float, float, float]:
    return alpha_and_te(strategy_returns(result), benchmark_returns(result))


@dataclass(frozen=True)
class VsMeanReport:
    """Strategy statistics measured against its static mean-weight twin."""

    alpha_annual: float
    te_annual: float
    ir: float
    pvalue: float | None


@dataclass(frozen=True)
class PerformanceReport:
    """Every reported statistic of one strategy run."""

    annual_return: float
    annual_vol: float
    sharpe: float
    benchmark_return: float
    benchmark_vol: float
    benchmark_sharpe: float
    alpha_annual: float
    te_annual: float
    ir: float
    mrdd: float
    ter: float
    turnover_annual: float
    alpha_pvalue: float | None
    allocation_component: float
    active_component: float
    mean_weights: dict[str, float]
    vs_mean: VsMeanReport | None = None


def _safe_pvalue(strategy: ReturnSeries, reference: ReturnSeries) -> float | None:
    try:
        return alpha_significance(strategy, reference)
    except (DegenerateStatisticError, InsufficientDataError):
        return None


def build_report(
    result: BacktestResult,
    panel: AlignedPanel,
    static_result: BacktestResult | None = None,
) -> PerformanceReport:
    """Assemble the full statistics table for a run.

    Headline return/vol/alpha rows are gross of costs; trading costs appear
    separately through the TER row, mirroring how the strategy tables
    present them. ``static_result`` adds the vs-mean comparison block.
    """
    strat = strategy_returns(result)
    bench = benchmark_returns(result)
    ret = annualized_return(strat)
    vol = annualized_vol(strat)
    b_ret = annualized_return(bench)
    b_vol = annualized_vol(bench)
    alpha, te, ir = alpha_and_te(strat, bench)
    turnover = annualized_turnover(result)
    allocation, active = allocation_active_split(result, panel)

    vs_mean = None
    if static_result is not None:
        static = strategy_returns(static_result)
        m_alpha, m_te, m_ir = alpha_and_te(strat, static)
        vs_mean = VsMeanReport(
            alpha_annual=m_alpha,
            te_annual=m_te,
            ir=m_ir,
            pvalue=_safe_pvalue(strat, static),
        )

    nav_dates = result.dates
    return PerformanceReport(
        annual_return=ret,
        annual_vol=vol,
        sharpe=ret / vol if vol > 0 else 0.0,
        benchmark_return=b_ret,
        benchmark_vol=b_vol,
        benchmark_sharpe=b_ret / b_vol if b_vol > 0 else 0.0,
        alpha_annual=alpha,
        te_annual=te,
        ir=ir,
        mrdd=mrdd(
            PriceSeries("strategy", nav_dates, result.nav),
            PriceSeries("benchmark", nav_dates, result.benchmark_nav),
        ),
        ter=ter(turnover, result.cost_spread),
        turnover_annual=turnover,
        alpha_pvalue=_safe_pvalue(strat, bench),
        allocation_component=allocation,
        active_component=active,
        mean_weights=mean_weights(result).as_dict(),
        vs_mean=vs_mean,
    )
