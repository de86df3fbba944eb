"""Delimited rate files to aligned log-return matrices."""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from .errors import AlignmentGapError, InputFormatError, NonPositiveRateError
from .kernels import ReturnMatrix

MISSING = {"", "na", "nan", "null", "n/a", "-"}

Stamp = Union[dt.date, dt.datetime, int]


@dataclass
class RateTable:
    """Per-series maps timestamp -> rate, plus the full timestamp grid.

    ``timestamps`` is every row of the source file, sorted. A series lacking a
    value at some timestamp simply has no entry for it.
    """

    labels: List[str]
    series: Dict[str, Dict[Stamp, float]]
    timestamps: List[Stamp]

    def scaled(self, factors: Dict[str, float]) -> "RateTable":
        return RateTable(
            labels=list(self.labels),
            series={k: {t: v * factors.get(k, 1.0) for t, v in s.items()} for k, s in self.series.items()},
            timestamps=list(self.timestamps),
        )


def _parse_stamp(text: str) -> Tuple[str, Stamp]:
    text = text.strip()
    try:
        return "int", int(text)
    except ValueError:
        pass
    try:
        if "T" in text or " " in text:
            return "iso", dt.datetime.fromisoformat(text)
        return "iso", dt.date.fromisoformat(text)
    except ValueError:
        raise ValueError(f"unparseable timestamp {text!r}") from None


def format_stamp(stamp) -> Union[str, int]:
    if isinstance(stamp, (dt.date, dt.datetime)):
        return stamp.isoformat()
    return stamp


def _sniff_delimiter(header: str) -> str:
    return "\t" if header.count("\t") > header.count(",") else ","


def load_rates(
    path,
    delimiter: Optional[str] = None,
    timestamp_column: Optional[str] = None,
) -> RateTable:
    """Read a delimited file with a header row: one timestamp column, one column per series.

    ``delimiter`` is auto-detected (tab or comma) when not given; the
    timestamp column defaults to the first one.
    """
    path = Path(path)
    if not path.is_file():
        raise InputFormatError(f"missing file: {path}")
    with path.open(newline="") as fh:
        text = fh.read()
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise InputFormatError("unparseable header: file is empty", line=1)
    delim = delimiter or _sniff_delimiter(lines[0])
    reader = csv.reader(lines, delimiter=delim)
    header = [h.strip() for h in next(reader)]
    if len(header) < 2 or any(not h for h in header):
        raise InputFormatError("unparseable header: need a timestamp column and at least one series", line=1)
    if len(set(header)) != len(header):
        raise InputFormatError("unparseable header: duplicate column names", line=1)
    if timestamp_column is None:
        ts_idx = 0
    elif timestamp_column in header:
        ts_idx = header.index(timestamp_column)
    else:
        raise InputFormatError(f"unparseable header: no timestamp column {timestamp_column!r}", line=1)
    labels = [h for i, h in enumerate(header) if i != ts_idx]
    series: Dict[str, Dict[Stamp, float]] = {lab: {} for lab in labels}
    stamps: List[Stamp] = []
    kind = None
    seen = set()

    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise InputFormatError(f"expected {len(header)} cells, got {len(row)}", line=lineno)
        try:
            this_kind, stamp = _parse_stamp(row[ts_idx])
        except ValueError as exc:
            raise InputFormatError(str(exc), line=lineno, column=header[ts_idx]) from None
        if kind is None:
            kind = this_kind
        elif kind != this_kind:
            raise InputFormatError("mixed timestamp forms (integer and ISO date)", line=lineno, column=header[ts_idx])
        if stamp in seen:
            raise InputFormatError(f"duplicate timestamp {row[ts_idx].strip()!r}", line=lineno)
        seen.add(stamp)
        stamps.append(stamp)
        for i, cell in enumerate(row):
            if i == ts_idx:
                continue
            cell = cell.strip()
            if cell.lower() in MISSING:
                continue
            try:
                rate = float(cell)
            except ValueError:
                raise InputFormatError(f"malformed number {cell!r}", line=lineno, column=header[i]) from None
            if not math.isfinite(rate):
                raise InputFormatError(f"non-finite rate {cell!r}", line=lineno, column=header[i])
            if rate <= 0:
                raise NonPositiveRateError(f"non-positive rate {cell!r}", line=lineno, column=header[i])
            series[header[i]][stamp] = rate

    return RateTable(labels=labels, series=series, timestamps=sorted(stamps))


def to_log_returns(table: RateTable, alignment: str = "intersect", returns: str = "log") -> ReturnMatrix:
    """Difference consecutive aligned rates into an M x (n - 1) return matrix.

    ``returns="log"`` differences log-rates; ``"diff"`` differences the rates
    themselves. Each output column is stamped with the later of its two
    timestamps.
    """
    if alignment not in ("intersect", "error_on_gap"):
        raise ValueError(f"unknown alignment {alignment!r}")
    if returns not in ("log", "diff"):
        raise ValueError(f"unknown returns mode {returns!r}")
    if alignment == "error_on_gap":
        for stamp in table.timestamps:
            for lab in table.labels:
                if stamp not in table.series[lab]:
                    raise AlignmentGapError(f"missing value at {format_stamp(stamp)}", column=lab)
        grid = list(table.timestamps)
    else:
        grid = [s for s in table.timestamps if all(s in table.series[lab] for lab in table.labels)]
    if len(grid) < 3:
        # two returns are the minimum for a return matrix
        raise AlignmentGapError(f"fewer than 3 aligned timestamps ({len(grid)})")
    rates = np.array([[table.series[lab][s] for s in grid] for lab in table.labels])
    if returns == "log":
        values = np.diff(np.log(rates), axis=1)
    else:
        values = np.diff(rates, axis=1)
    stamps = tuple(format_stamp(s) for s in grid[1:])
    return ReturnMatrix(values, labels=tuple(table.labels), timestamps=stamps)
