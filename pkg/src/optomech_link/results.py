"""Tabular run output with CSV and JSON emitters."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

from importlib.metadata import PackageNotFoundError, version as _dist_version

try:
    VERSION = _dist_version("artifact")
except PackageNotFoundError:  # running from a source tree
    VERSION = "0.0.0"

REASON = "reason"


@dataclass
class ResultTable:
    """Rectangular table; cells are floats, ints, bools or short strings.

    A ``reason`` column is appended whenever a numeric cell is NaN so that
    missing values always carry an explanation.
    """

    columns: list[str]
    rows: list[list]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        width = len(self.columns)
        if len(set(self.columns)) != width:
            raise ValueError("column names must be unique")
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise ValueError(f"row {i} has {len(row)} cells, expected {width}")

    def column(self, name: str) -> list:
        j = self.columns.index(name)
        return [row[j] for row in self.rows]

    def with_reasons(self, reasons: list[str]) -> "ResultTable":
        """Attach one explanation per row for rows containing NaN."""
        if REASON in self.columns:
            return self
        has_nan = any(isinstance(v, float) and math.isnan(v) for row in self.rows for v in row)
        if not has_nan:
            return self
        rows = [row + [reasons[i] if _row_has_nan(row) else ""] for i, row in enumerate(self.rows)]
        return ResultTable(self.columns + [REASON], rows, dict(self.meta))

    def data_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_format_cell(v) for v in row])
        return buf.getvalue()

    def to_csv(self) -> str:
        header = "".join(f"# {k}={self.meta[k]}\n" for k in sorted(self.meta))
        return header + self.data_csv()

    def to_json(self) -> str:
        doc = {
            "meta": {k: self.meta[k] for k in sorted(self.meta)},
            "columns": self.columns,
            "rows": [[_json_cell(v) for v in row] for row in self.rows],
        }
        return json.dumps(doc, indent=1, allow_nan=True) + "\n"

    def render(self, fmt: str) -> str:
        if fmt == "csv":
            return self.to_csv()
        if fmt == "json":
            return self.to_json()
        raise ValueError(f"unknown format {fmt!r}")


def _row_has_nan(row) -> bool:
    return any(isinstance(v, float) and math.isnan(v) for v in row)


def _format_cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _json_cell(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)  # "nan" / "inf" keep JSON strict
    return v


def _parse_cell(text: str):
    if text in ("true", "false"):
        return text == "true"
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def parse_csv(text: str) -> ResultTable:
    """Inverse of ``ResultTable.to_csv``."""
    meta, body = {}, []
    for line in text.splitlines(keepends=True):
        if line.startswith("# ") and not body:
            key, _, value = line[2:].rstrip("\n").partition("=")
            meta[key] = value
        else:
            body.append(line)
    reader = csv.reader(io.StringIO("".join(body)))
    columns = next(reader)
    rows = [[_parse_cell(c) for c in row] for row in reader]
    return ResultTable(columns, rows, meta)


def parse_json(text: str) -> ResultTable:
    doc = json.loads(text)
    rows = [
        [float(v) if v in ("nan", "inf", "-inf") else v for v in row] for row in doc["rows"]
    ]
    return ResultTable(doc["columns"], rows, {k: str(v) for k, v in doc["meta"].items()})


def stamp(table: ResultTable, config_digest: str) -> ResultTable:
    table.meta.update(
        {
            "config_sha256": config_digest,
            "version": VERSION,
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }
    )
    return table
