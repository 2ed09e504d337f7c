"""Flat ``key = value`` run configuration.

One file fully describes a run: the data source (a panel CSV or a synthetic
universe, never both), the strategy parameters and the output paths. Unknown
keys are rejected so typos cannot silently change a backtest.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, ValidationError
from .optimize import BoundSet
from .synthetic import SynthSpec

BOUND_MODES = ("long-only", "long-short", "explicit")

_KEYS = {
    "panel", "benchmark", "indices",
    "synth.seed", "synth.days", "synth.n_indices", "synth.benchmark_drift",
    "synth.benchmark_vol", "synth.excess_drift", "synth.excess_vol",
    "synth.excess_ar1", "synth.correlation",
    "lookback_days", "rebalance_every_days", "sigma_annual",
    "bound_mode", "bounds.lower", "bounds.upper",
    "bounds.benchmark_lower", "bounds.benchmark_upper",
    "cost_spread", "start", "end", "compare_static_mean",
    "outputs.report", "outputs.series", "outputs.trades",
    "outputs.static_series", "outputs.panel",
}


@dataclass
class RunConfig:
    """Parsed and validated configuration for one strategy run."""

    panel_path: Path | None = None
    benchmark_column: str | None = None
    index_columns: tuple[str, ...] | None = None
    synth: SynthSpec | None = None
    lookback_days: int = 91
    rebalance_every_days: int = 28
    sigma_annual: float = 0.04
    bound_mode: str = "long-only"
    explicit_lower: tuple[float, ...] | None = None
    explicit_upper: tuple[float, ...] | None = None
    benchmark_lower: float = 0.0
    benchmark_upper: float = 1.0
    cost_spread: float = 0.0005
    start: dt.date | None = None
    end: dt.date | None = None
    compare_static_mean: bool = True
    report_path: Path | None = None
    series_path: Path | None = None
    trades_path: Path | None = None
    static_series_path: Path | None = None
    panel_out_path: Path | None = None

    def bounds_for(self, n_indices: int) -> BoundSet:
        """Materialize the configured bound mode for a universe size."""
        benchmark = (self.benchmark_lower, self.benchmark_upper)
        if self.bound_mode == "long-only":
            return BoundSet.long_only(n_indices, benchmark=benchmark)
        if self.bound_mode == "long-short":
            return BoundSet.long_short(n_indices, benchmark=benchmark)
        lower, upper = self.explicit_lower, self.explicit_upper
        if lower is None or upper is None:
            raise ConfigError("bound_mode=explicit requires bounds.lower and bounds.upper")
        if len(lower) != n_indices or len(upper) != n_indices:
            raise ConfigError(
                f"explicit bounds must list {n_indices} values, "
                f"got {len(lower)}/{len(upper)}"
            )
        return BoundSet.explicit(lower, upper, benchmark=benchmark)


def _parse_scalar(key: str, raw: str, kind):
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"key {key!r}: cannot parse {raw!r} as {kind.__name__}") from None


def _parse_bool(key: str, raw: str) -> bool:
    low = raw.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ConfigError(f"key {key!r}: expected a boolean, got {raw!r}")


def _parse_date(key: str, raw: str) -> dt.date:
    try:
        return dt.date.fromisoformat(raw)
    except ValueError:
        raise ConfigError(f"key {key!r}: expected YYYY-MM-DD, got {raw!r}") from None


def _parse_floats(key: str, raw: str) -> tuple[float, ...]:
    return tuple(_parse_scalar(key, cell.strip(), float) for cell in raw.split(","))


def _parse_correlation(key: str, raw: str) -> np.ndarray | None:
    if raw.strip().lower() == "identity":
        return None
    rows = [
        [_parse_scalar(key, cell.strip(), float) for cell in line.split(",")]
        for line in raw.split(";")
    ]
    return np.asarray(rows, dtype=float)


def read_pairs(path: str | Path) -> dict[str, str]:
    """Read ``key = value`` lines; blank lines and ``#`` comments skipped."""
    pairs: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    for no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}: line {no}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _KEYS:
            raise ConfigError(f"{path}: line {no}: unknown key {key!r}")
        if key in pairs:
            raise ConfigError(f"{path}: line {no}: duplicate key {key!r}")
        pairs[key] = value
    return pairs


def parse_config(path: str | Path) -> RunConfig:
    """Parse and validate a configuration file into a :class:`RunConfig`."""
    pairs = read_pairs(path)
    cfg = RunConfig()

    if "panel" in pairs:
        cfg.panel_path = Path(pairs["panel"])
    if "benchmark" in pairs:
        cfg.benchmark_column = pairs["benchmark"]
    if "indices" in pairs:
        cols = tuple(c.strip() for c in pairs["indices"].split(",") if c.strip())
        cfg.index_columns = cols

    synth_keys = {k for k in pairs if k.startswith("synth.")}
    if synth_keys:
        required = {"synth.seed", "synth.days", "synth.n_indices"}
        missing = required - synth_keys
        if missing:
            raise ConfigError(f"synthetic universe needs keys: {sorted(missing)}")
        n = _parse_scalar("synth.n_indices", pairs["synth.n_indices"], int)

        def vector(key: str, default: float) -> tuple[float, ...] | float:
            if key not in pairs:
                return default
            values = _parse_floats(key, pairs[key])
            return values if len(values) > 1 else values[0]

        try:
            cfg.synth = SynthSpec(
                seed=_parse_scalar("synth.seed", pairs["synth.seed"], int),
                days=_parse_scalar("synth.days", pairs["synth.days"], int),
                n_indices=n,
                benchmark_drift=_parse_scalar(
                    "synth.benchmark_drift", pairs.get("synth.benchmark_drift", "0.0"), float
                ),
                benchmark_vol=_parse_scalar(
                    "synth.benchmark_vol", pairs.get("synth.benchmark_vol", "0.0"), float
                ),
                excess_drift=np.asarray(vector("synth.excess_drift", 0.0)),
                excess_vol=np.asarray(vector("synth.excess_vol", 0.0)),
                excess_ar1=np.asarray(vector("synth.excess_ar1", 0.0)),
                correlation=_parse_correlation(
                    "synth.correlation", pairs.get("synth.correlation", "identity")
                ),
            )
        except ValidationError as err:
            raise ConfigError(f"invalid synth.* settings: {err}") from err

    if (cfg.panel_path is None) == (cfg.synth is None):
        raise ConfigError("exactly one of 'panel' or the 'synth.*' group must be present")
    if cfg.panel_path is not None:
        if cfg.benchmark_column is None or not cfg.index_columns:
            raise ConfigError("panel runs need 'benchmark' and a non-empty 'indices' list")
        if cfg.benchmark_column in cfg.index_columns:
            raise ConfigError(
                f"benchmark column {cfg.benchmark_column!r} cannot appear in 'indices'"
            )
    elif cfg.benchmark_column is not None or cfg.index_columns is not None:
        raise ConfigError("'benchmark'/'indices' apply to panel runs, not synthetic ones")

    if "lookback_days" in pairs:
        cfg.lookback_days = _parse_scalar("lookback_days", pairs["lookback_days"], int)
    if "rebalance_every_days" in pairs:
        cfg.rebalance_every_days = _parse_scalar(
            "rebalance_every_days", pairs["rebalance_every_days"], int
        )
    if "sigma_annual" in pairs:
        cfg.sigma_annual = _parse_scalar("sigma_annual", pairs["sigma_annual"], float)
    if "bound_mode" in pairs:
        if pairs["bound_mode"] not in BOUND_MODES:
            raise ConfigError(
                f"bound_mode must be one of {BOUND_MODES}, got {pairs['bound_mode']!r}"
            )
        cfg.bound_mode = pairs["bound_mode"]
    if "bounds.lower" in pairs:
        cfg.explicit_lower = _parse_floats("bounds.lower", pairs["bounds.lower"])
    if "bounds.upper" in pairs:
        cfg.explicit_upper = _parse_floats("bounds.upper", pairs["bounds.upper"])
    if cfg.bound_mode != "explicit" and (cfg.explicit_lower or cfg.explicit_upper):
        raise ConfigError("bounds.lower/bounds.upper require bound_mode = explicit")
    if "bounds.benchmark_lower" in pairs:
        cfg.benchmark_lower = _parse_scalar(
            "bounds.benchmark_lower", pairs["bounds.benchmark_lower"], float
        )
    if "bounds.benchmark_upper" in pairs:
        cfg.benchmark_upper = _parse_scalar(
            "bounds.benchmark_upper", pairs["bounds.benchmark_upper"], float
        )
    if "cost_spread" in pairs:
        cfg.cost_spread = _parse_scalar("cost_spread", pairs["cost_spread"], float)
    if "start" in pairs:
        cfg.start = _parse_date("start", pairs["start"])
    if "end" in pairs:
        cfg.end = _parse_date("end", pairs["end"])
    if "compare_static_mean" in pairs:
        cfg.compare_static_mean = _parse_bool(
            "compare_static_mean", pairs["compare_static_mean"]
        )

    for key, attr in (
        ("outputs.report", "report_path"),
        ("outputs.series", "series_path"),
        ("outputs.trades", "trades_path"),
        ("outputs.static_series", "static_series_path"),
        ("outputs.panel", "panel_out_path"),
    ):
        if key in pairs:
            setattr(cfg, attr, Path(pairs[key]))

    return cfg
