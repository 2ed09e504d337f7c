"""Total-return index panels: ingestion, alignment and excess-return series.

The on-disk panel format is UTF-8 CSV with a ``date,<name1>,<name2>,...``
header, ISO-8601 dates, decimal levels and blank cells for missing
observations. :func:`load_panel` keeps only dates on which every column has a
value (strict intersection, no interpolation).
"""

from __future__ import annotations

import datetime as dt
import io
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO

import numpy as np

from .errors import (
    AlignmentError,
    ConfigError,
    InsufficientDataError,
    ParseError,
    ValidationError,
)


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype)
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PriceSeries:
    """One total-return index level series on strictly increasing dates."""

    name: str
    dates: tuple[dt.date, ...]
    levels: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "levels", _frozen(self.levels))
        if len(self.dates) != self.levels.size:
            raise ValidationError(
                f"series {self.name!r}: {len(self.dates)} dates vs "
                f"{self.levels.size} levels"
            )
        for prev, cur in zip(self.dates, self.dates[1:]):
            if cur <= prev:
                raise ValidationError(
                    f"series {self.name!r}: dates not strictly increasing at {cur}"
                )
        if self.levels.size and not np.all(self.levels > 0.0):
            bad = int(np.argmin(self.levels > 0.0))
            raise ValidationError(
                f"series {self.name!r}: non-positive level "
                f"{self.levels[bad]} on {self.dates[bad]}"
            )

    def __len__(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class ReturnSeries:
    """Daily arithmetic returns, one observation per date."""

    name: str
    dates: tuple[dt.date, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "values", _frozen(self.values))
        if len(self.dates) != self.values.size:
            raise ValidationError(
                f"returns {self.name!r}: {len(self.dates)} dates vs "
                f"{self.values.size} values"
            )
        for prev, cur in zip(self.dates, self.dates[1:]):
            if cur <= prev:
                raise ValidationError(
                    f"returns {self.name!r}: dates not strictly increasing at {cur}"
                )

    def __len__(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class AlignedPanel:
    """A benchmark and n >= 1 related indices sharing one date axis."""

    benchmark: PriceSeries
    indices: tuple[PriceSeries, ...]

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(self.indices))
        if len(self.indices) < 1:
            raise ValidationError("panel needs at least one index besides the benchmark")
        names = [s.name for s in self.indices]
        if self.benchmark.name in names:
            raise ValidationError(
                f"benchmark name {self.benchmark.name!r} collides with an index name"
            )
        if len(set(names)) != len(names):
            raise ValidationError("duplicate index names in panel")
        for s in self.indices:
            if s.dates != self.benchmark.dates:
                raise AlignmentError(
                    f"series {s.name!r} is not on the panel's date axis"
                )

    @property
    def dates(self) -> tuple[dt.date, ...]:
        return self.benchmark.dates

    @property
    def names(self) -> tuple[str, ...]:
        """All series names, benchmark first."""
        return (self.benchmark.name, *(s.name for s in self.indices))

    @property
    def n_indices(self) -> int:
        return len(self.indices)

    def levels_matrix(self) -> np.ndarray:
        """(n_dates, n+1) level matrix, benchmark in column 0."""
        cols = [self.benchmark.levels] + [s.levels for s in self.indices]
        return np.column_stack(cols)

    def restrict(self, start: dt.date, end: dt.date) -> "AlignedPanel":
        """Sub-panel on dates d with start <= d <= end."""
        keep = [k for k, d in enumerate(self.dates) if start <= d <= end]
        if not keep:
            raise AlignmentError(f"no panel dates in [{start}, {end}]")
        sel = slice(keep[0], keep[-1] + 1)
        dates = self.dates[sel]

        def cut(s: PriceSeries) -> PriceSeries:
            return PriceSeries(s.name, dates, s.levels[sel])

        return AlignedPanel(cut(self.benchmark), tuple(cut(s) for s in self.indices))


def excess_ratio(series: PriceSeries, benchmark: PriceSeries) -> PriceSeries:
    """Pointwise level ratio series / benchmark on a shared date axis.

    The ratio is flat exactly when the series tracks the benchmark.
    """
    if series.dates != benchmark.dates:
        raise AlignmentError(
            f"series {series.name!r} and benchmark {benchmark.name!r} "
            "are on different date axes"
        )
    return PriceSeries(series.name, series.dates, series.levels / benchmark.levels)


def daily_excess_returns(ratio: PriceSeries) -> ReturnSeries:
    """Daily arithmetic returns of a ratio series: R(t)/R(t-1) - 1."""
    if len(ratio) < 2:
        raise InsufficientDataError(
            f"series {ratio.name!r}: need at least 2 observations, got {len(ratio)}",
            found=len(ratio),
        )
    values = ratio.levels[1:] / ratio.levels[:-1] - 1.0
    return ReturnSeries(ratio.name, ratio.dates[1:], values)


def _parse_date(cell: str, line_no: int) -> dt.date:
    try:
        return dt.date.fromisoformat(cell)
    except ValueError:
        raise ParseError(f"bad date {cell!r}", line=line_no) from None


def load_panel(
    source: TextIO | str | Path,
    benchmark_column: str,
    columns: list[str] | None = None,
) -> AlignedPanel:
    """Load and align a CSV level panel, keeping only fully-populated dates.

    Parameters
    ----------
    source : text stream or path
        CSV with header ``date,<name1>,<name2>,...``; blank cells mark
        missing observations.
    benchmark_column : str
        Header name of the benchmark series.
    columns : list of str, optional
        Index columns to use, in this order. By default every non-benchmark
        column becomes an index, in file order. The date intersection is
        taken over the used columns only.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8", newline="") as handle:
            return load_panel(handle, benchmark_column, columns=columns)

    header_line = source.readline()
    if not header_line.strip():
        raise ParseError("empty panel stream", line=1)
    header = [c.strip() for c in header_line.rstrip("\r\n").split(",")]
    if header[0] != "date":
        raise ParseError(f"first header column must be 'date', got {header[0]!r}", line=1)
    names = header[1:]
    if len(set(names)) != len(names):
        raise ParseError("duplicate column names in header", line=1)
    if benchmark_column not in names:
        raise ConfigError(
            f"benchmark column {benchmark_column!r} not in panel header {names}"
        )
    if columns is not None:
        missing = [c for c in columns if c not in names]
        if missing:
            raise ConfigError(f"index columns {missing} not in panel header {names}")
        if benchmark_column in columns:
            raise ConfigError(f"benchmark column {benchmark_column!r} listed as an index")
        index_names = list(columns)
    else:
        index_names = [n for n in names if n != benchmark_column]
    if not index_names:
        raise ConfigError("panel must contain at least one index column besides the benchmark")

    dates: list[dt.date] = []
    rows: list[list[float]] = []  # NaN marks a missing cell
    line_no = 1
    for raw in source:
        line_no += 1
        if not raw.strip():
            continue
        cells = raw.rstrip("\r\n").split(",")
        if len(cells) != len(header):
            raise ParseError(
                f"expected {len(header)} cells, got {len(cells)}", line=line_no
            )
        date = _parse_date(cells[0].strip(), line_no)
        if dates and date <= dates[-1]:
            raise ParseError(
                f"dates not strictly increasing at {date.isoformat()}", line=line_no
            )
        row: list[float] = []
        for name, cell in zip(names, cells[1:]):
            cell = cell.strip()
            if not cell:
                row.append(np.nan)
                continue
            try:
                level = float(cell)
            except ValueError:
                raise ParseError(f"bad level {cell!r} for {name!r}", line=line_no) from None
            if not np.isfinite(level) or level <= 0.0:
                raise ValidationError(
                    f"non-positive or non-finite level {cell} for series {name!r} "
                    f"on {date.isoformat()}"
                )
            row.append(level)
        dates.append(date)
        rows.append(row)

    if not rows:
        raise ParseError("panel stream has a header but no data rows", line=line_no)

    matrix = np.asarray(rows, dtype=float)
    used = [names.index(benchmark_column)] + [names.index(c) for c in index_names]
    matrix = matrix[:, used]
    full = ~np.isnan(matrix).any(axis=1)
    if not full.any():
        raise AlignmentError("no date on which all used columns have a value")
    kept_dates = tuple(d for d, ok in zip(dates, full) if ok)
    matrix = matrix[full]

    benchmark = PriceSeries(benchmark_column, kept_dates, matrix[:, 0])
    indices = tuple(
        PriceSeries(name, kept_dates, matrix[:, j + 1])
        for j, name in enumerate(index_names)
    )
    return AlignedPanel(benchmark, indices)


def write_panel(panel: AlignedPanel, target: TextIO | str | Path) -> None:
    """Serialize a panel to the CSV format :func:`load_panel` reads."""
    if isinstance(target, (str, Path)):
        with open(target, "w", encoding="utf-8", newline="") as handle:
            write_panel(panel, handle)
        return
    target.write("date," + ",".join(panel.names) + "\n")
    matrix = panel.levels_matrix()
    for k, date in enumerate(panel.dates):
        cells = ",".join(repr(float(v)) for v in matrix[k])
        target.write(f"{date.isoformat()},{cells}\n")


def panel_to_csv(panel: AlignedPanel) -> str:
    """Panel serialized to a CSV string (see :func:`write_panel`)."""
    buf = io.StringIO()
    write_panel(panel, buf)
    return buf.getvalue()
