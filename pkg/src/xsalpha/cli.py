"""Command-line entry point.

``xsalpha run --config <path> [...]`` runs one backtest per config file
(in parallel when several are given; ``XSALPHA_THREADS`` caps the worker
count) and writes a human-readable report plus machine-readable CSVs.
``xsalpha synth --config <path>`` generates a synthetic universe and saves
it in the panel CSV format. All files are written atomically
(temp-then-rename). Relative input paths resolve against the config file's
directory; relative output paths against ``--out-dir`` (default: the config
file's directory too, so a config directory is self-contained).

Exit status: 0 when everything succeeded, 2 for configuration problems,
1 for data or solver errors (messages carry the offending date).
"""

from __future__ import annotations

import argparse
import datetime as dt
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .analytics import PerformanceReport, build_report
from .backtest import BacktestResult, StrategyConfig, mean_weights, run_backtest, run_static_backtest
from .config import RunConfig, parse_config
from .errors import ConfigError, XsalphaError
from .panel import AlignedPanel, load_panel, panel_to_csv
from .synthetic import generate

_EXIT_OK = 0
_EXIT_RUNTIME = 1
_EXIT_CONFIG = 2


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _resolve(path: Path | None, base: Path) -> Path | None:
    if path is None:
        return None
    return path if path.is_absolute() else base / path


def _bases(config_path: str | Path, out_dir: Path | None) -> tuple[Path, Path]:
    """(input base, output base) for one config file."""
    home = Path(config_path).resolve().parent
    return home, out_dir if out_dir is not None else home


def _load_universe(cfg: RunConfig, in_base: Path) -> AlignedPanel:
    if cfg.synth is not None:
        return generate(cfg.synth)
    return load_panel(
        _resolve(cfg.panel_path, in_base),
        cfg.benchmark_column,
        columns=list(cfg.index_columns),
    )


def _date_range(cfg: RunConfig, panel: AlignedPanel) -> tuple[dt.date, dt.date]:
    start = cfg.start
    if start is None:
        start = panel.dates[0] + dt.timedelta(days=cfg.lookback_days)
    end = cfg.end if cfg.end is not None else panel.dates[-1]
    return start, end


def _fmt(value: float | None) -> str:
    return "none" if value is None else repr(float(value))


def _pct(value: float) -> str:
    return f"{100.0 * value:.1f}%"


def render_series_csv(result: BacktestResult) -> str:
    """Daily series: date, gross/net/benchmark NAV and per-asset weights."""
    weight_cols = ",".join(f"w_{name}" for name in result.names)
    lines = [f"date,nav_gross,nav_net,benchmark_nav,{weight_cols}"]
    for k, date in enumerate(result.dates):
        weights = ",".join(repr(float(w)) for w in result.weights_history[k])
        lines.append(
            f"{date.isoformat()},{float(result.nav[k])!r},{float(result.nav_net[k])!r},"
            f"{float(result.benchmark_nav[k])!r},{weights}"
        )
    return "\n".join(lines) + "\n"


def render_trades_csv(result: BacktestResult) -> str:
    """Trade record: one row per rebalance with turnover and target weights."""
    target_cols = ",".join(f"t_{name}" for name in result.names)
    lines = [f"date,turnover,{target_cols}"]
    for k, date in enumerate(result.rebalance_dates):
        targets = ",".join(repr(float(w)) for w in result.target_weights[k])
        lines.append(
            f"{date.isoformat()},{float(result.per_rebalance_turnover[k])!r},{targets}"
        )
    return "\n".join(lines) + "\n"


def render_report(report: PerformanceReport, cfg: RunConfig, result: BacktestResult) -> str:
    """Human-readable table followed by a full-precision [values] section."""
    rows = [
        ("Return", _pct(report.annual_return), _pct(report.benchmark_return)),
        ("VOL", _pct(report.annual_vol), _pct(report.benchmark_vol)),
        ("SR", f"{report.sharpe:.2f}", f"{report.benchmark_sharpe:.2f}"),
        ("Alpha", _pct(report.alpha_annual), "---"),
        ("TE", _pct(report.te_annual), "---"),
        ("IR", f"{report.ir:.2f}", "---"),
        ("MRDD", _pct(report.mrdd), "---"),
        ("p-value", "n/a" if report.alpha_pvalue is None else f"{report.alpha_pvalue:.6f}", "---"),
    ]
    lines = [
        "excess-return timing backtest",
        "=============================",
        f"period: {result.dates[0].isoformat()} to {result.dates[-1].isoformat()}"
        f" ({len(result.dates)} dates, {len(result.rebalance_dates)} rebalances)",
        f"lookback {cfg.lookback_days} days, rebalance every "
        f"{cfg.rebalance_every_days} days, sigma {_pct(cfg.sigma_annual)}, "
        f"cost {10000.0 * cfg.cost_spread:.1f} bp, bounds {cfg.bound_mode}",
        "",
        f"{'':14}{'Strategy':>12}{'Benchmark':>12}",
    ]
    lines += [f"{name:14}{a:>12}{b:>12}" for name, a, b in rows]
    lines += ["", "Mean Weights"]
    lines += [f"  {name:20}{_pct(w):>8}" for name, w in report.mean_weights.items()]
    lines += [
        "",
        f"{'Allocation':14}{_pct(report.allocation_component):>12}",
        f"{'Active':14}{_pct(report.active_component):>12}",
        f"{'TER':14}{_pct(report.ter):>12}",
        f"{'Turnover':14}{_pct(report.turnover_annual):>12}",
    ]
    if report.vs_mean is not None:
        vs = report.vs_mean
        lines += [
            "",
            f"{'Alpha vs. Mean':18}{_pct(vs.alpha_annual):>8}",
            f"{'TE vs. Mean':18}{_pct(vs.te_annual):>8}",
            f"{'IR vs. Mean':18}{vs.ir:>8.2f}",
            f"{'p-value vs. Mean':18}"
            f"{'n/a' if vs.pvalue is None else format(vs.pvalue, '.6f'):>8}",
        ]

    values = {
        "annual_return": report.annual_return,
        "annual_vol": report.annual_vol,
        "sharpe": report.sharpe,
        "benchmark_return": report.benchmark_return,
        "benchmark_vol": report.benchmark_vol,
        "benchmark_sharpe": report.benchmark_sharpe,
        "alpha_annual": report.alpha_annual,
        "te_annual": report.te_annual,
        "ir": report.ir,
        "mrdd": report.mrdd,
        "ter": report.ter,
        "turnover_annual": report.turnover_annual,
        "alpha_pvalue": report.alpha_pvalue,
        "allocation_component": report.allocation_component,
        "active_component": report.active_component,
    }
    for name, weight in report.mean_weights.items():
        values[f"mean_weight.{name}"] = weight
    if report.vs_mean is not None:
        values["vs_mean.alpha_annual"] = report.vs_mean.alpha_annual
        values["vs_mean.te_annual"] = report.vs_mean.te_annual
        values["vs_mean.ir"] = report.vs_mean.ir
        values["vs_mean.pvalue"] = report.vs_mean.pvalue

    lines += ["", "[values]"]
    lines += [f"{key} = {_fmt(val)}" for key, val in values.items()]
    return "\n".join(lines) + "\n"


def read_report_values(path: str | Path) -> dict[str, float | None]:
    """Parse the full-precision [values] section back out of a report file."""
    values: dict[str, float | None] = {}
    in_section = False
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip() == "[values]":
            in_section = True
            continue
        if in_section and "=" in line:
            key, _, raw = line.partition("=")
            raw = raw.strip()
            values[key.strip()] = None if raw == "none" else float(raw)
    return values


def run_one(config_path: str | Path, out_dir: Path | None) -> list[Path]:
    """Execute one config end to end; returns the files written."""
    cfg = parse_config(config_path)
    if cfg.report_path is None or cfg.series_path is None:
        raise ConfigError(f"{config_path}: 'run' needs outputs.report and outputs.series")
    in_base, out_base = _bases(config_path, out_dir)

    panel = _load_universe(cfg, in_base)
    start, end = _date_range(cfg, panel)
    strategy = StrategyConfig(
        lookback_days=cfg.lookback_days,
        rebalance_every_days=cfg.rebalance_every_days,
        sigma_annual=cfg.sigma_annual,
        bounds=cfg.bounds_for(panel.n_indices),
        start=start,
        end=end,
        cost_spread=cfg.cost_spread,
    )
    result = run_backtest(panel, strategy)

    static_result = None
    if cfg.compare_static_mean:
        static_result = run_static_backtest(panel, mean_weights(result), strategy)
    report = build_report(result, panel, static_result)

    series_path = _resolve(cfg.series_path, out_base)
    report_path = _resolve(cfg.report_path, out_base)
    trades_path = _resolve(
        cfg.trades_path or cfg.series_path.with_name(cfg.series_path.stem + "_trades.csv"),
        out_base,
    )
    written = []
    _atomic_write(series_path, render_series_csv(result))
    written.append(series_path)
    _atomic_write(trades_path, render_trades_csv(result))
    written.append(trades_path)
    if static_result is not None:
        static_path = _resolve(
            cfg.static_series_path
            or cfg.series_path.with_name(cfg.series_path.stem + "_static.csv"),
            out_base,
        )
        _atomic_write(static_path, render_series_csv(static_result))
        written.append(static_path)
    if cfg.synth is not None and cfg.panel_out_path is not None:
        panel_path = _resolve(cfg.panel_out_path, out_base)
        _write_panel_atomic(panel, panel_path)
        written.append(panel_path)
    _atomic_write(report_path, render_report(report, cfg, result))
    written.append(report_path)
    return written


def _write_panel_atomic(panel: AlignedPanel, path: Path) -> None:
    _atomic_write(path, panel_to_csv(panel))


def synth_one(config_path: str | Path, out_dir: Path | None) -> list[Path]:
    """Generate a synthetic panel and save it as CSV."""
    cfg = parse_config(config_path)
    if cfg.synth is None:
        raise ConfigError(f"{config_path}: 'synth' needs the synth.* group")
    if cfg.panel_out_path is None:
        raise ConfigError(f"{config_path}: 'synth' needs outputs.panel")
    panel = generate(cfg.synth)
    _, out_base = _bases(config_path, out_dir)
    path = _resolve(cfg.panel_out_path, out_base)
    _write_panel_atomic(panel, path)
    return [path]


def _max_workers(n_jobs: int) -> int:
    raw = os.environ.get("XSALPHA_THREADS", "").strip()
    if raw:
        try:
            cap = int(raw)
        except ValueError:
            raise ConfigError(f"XSALPHA_THREADS must be an integer, got {raw!r}") from None
        if cap < 1:
            raise ConfigError("XSALPHA_THREADS must be >= 1")
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_jobs))


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="xsalpha", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "synth"):
        p = sub.add_parser(name)
        p.add_argument("--config", nargs="+", required=True, help="config file path(s)")
        p.add_argument(
            "--out-dir",
            default=None,
            help="base directory for relative output paths "
                 "(default: each config file's directory)",
        )
    args = parser.parse_args(argv)
    out_dir = Path(args.out_dir) if args.out_dir is not None else None

    worker = run_one if args.command == "run" else synth_one
    try:
        workers = _max_workers(len(args.config))
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return _EXIT_CONFIG

    status = _EXIT_OK
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {path: pool.submit(_guarded, worker, path, out_dir) for path in args.config}
        for path, future in futures.items():
            code, detail = future.result()
            if code == _EXIT_OK:
                print(f"{path}: ok ({detail})")
            else:
                print(f"{path}: error: {detail}", file=sys.stderr)
            status = max(status, code)
    return status


def _guarded(worker, config_path, out_dir: Path) -> tuple[int, str]:
    try:
        written = worker(config_path, out_dir)
        return _EXIT_OK, ", ".join(str(p) for p in written)
    except ConfigError as err:
        return _EXIT_CONFIG, str(err)
    except XsalphaError as err:
        return _EXIT_RUNTIME, str(err)
    except OSError as err:
        return _EXIT_RUNTIME, str(err)


if __name__ == "__main__":
    sys.exit(main())
