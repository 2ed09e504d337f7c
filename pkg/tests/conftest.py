import datetime as dt

import numpy as np
import pytest

from xsalpha.panel import AlignedPanel, PriceSeries


def make_dates(n, start=dt.date(2020, 1, 1), step=1):
    return tuple(start + dt.timedelta(days=k * step) for k in range(n))


def series_from_returns(name, dates, returns, initial=100.0):
    """Levels compounding the given daily returns from `initial`."""
    levels = initial * np.concatenate([[1.0], np.cumprod(1.0 + np.asarray(returns))])
    return PriceSeries(name, dates, levels)


def panel_from_alpha(alpha, bench_returns=None, start=dt.date(2020, 1, 1)):
    """Panel whose ratio-based excess returns are exactly `alpha` (n_obs, n)."""
    alpha = np.atleast_2d(np.asarray(alpha, dtype=float))
    if alpha.shape[0] == 1 and alpha.shape[1] > 1 and alpha.ndim == 2:
        pass
    n_obs, n = alpha.shape
    dates = make_dates(n_obs + 1, start=start)
    if bench_returns is None:
        bench_returns = np.zeros(n_obs)
    benchmark = series_from_returns("BM", dates, bench_returns)
    indices = []
    for j in range(n):
        ratio = np.concatenate([[1.0], np.cumprod(1.0 + alpha[:, j])])
        indices.append(PriceSeries(f"X{j + 1}", dates, ratio * benchmark.levels))
    return AlignedPanel(benchmark, tuple(indices))


@pytest.fixture
def rng():
    return np.random.default_rng(20240712)
