"""Shared numeric conventions.

All statistics are computed on daily observations and annualized with a
365.25-day year: means scale by 365.25, standard deviations by sqrt(365.25).
The tracking-error budget uses the same convention, so an annual budget
``sigma`` constrains the daily return variance to ``sigma**2 / 365.25``.
"""

from __future__ import annotations

import math

DAYS_PER_YEAR = 365.25
SQRT_DAYS_PER_YEAR = math.sqrt(DAYS_PER_YEAR)


def daily_te_variance_budget(sigma_annual: float) -> float:
    """Daily excess-return variance implied by an annual tracking-error budget."""
    return sigma_annual * sigma_annual / DAYS_PER_YEAR
