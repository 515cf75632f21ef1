"""Flat-file tables: comma-separated, '.' decimal, UTF-8, '#' comment lines.

Metadata travels in leading comment lines of the form ``# key: value``.
Angles are written in degrees (``chi_deg``); emitted files also carry the exact
radian value (``chi_rad``, shortest round-trip repr) so that reading back a
written series reproduces it bit for bit.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from ..calibration import FringeSeries
from ..errors import ParseError
from ..model import Scenario

VALUE_COLUMNS = ("counts", "probability", "frequency", "value")


@dataclass
class Table:
    columns: list[str]
    rows: list[list[float]]
    meta: dict[str, str] = field(default_factory=dict)
    linenos: list[int] = field(default_factory=list)

    def column(self, name: str) -> list[float]:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def has(self, name: str) -> bool:
        return name in self.columns


def format_value(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def write_table(path_or_file, columns: Sequence[str], rows: Iterable[Sequence],
                meta: Mapping[str, object] | None = None) -> None:
    """Write a table. Rows are rendered with :func:`format_value` unless already strings."""
    own = not hasattr(path_or_file, "write")
    f = open(path_or_file, "w", encoding="utf-8", newline="") if own else path_or_file
    try:
        for key, val in (meta or {}).items():
            f.write(f"# {key}: {val}\n")
        w = csv.writer(f, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([v if isinstance(v, str) else format_value(v) for v in row])
    finally:
        if own:
            f.close()


def read_table(path_or_text, required: Sequence[str] = ()) -> Table:
    """Parse a table from a path or from a file-like object.

    Raises:
        ParseError: for a missing header or column, a ragged or non-numeric row.
    """
    if hasattr(path_or_text, "read"):
        text = path_or_text.read()
    else:
        text = Path(path_or_text).read_text(encoding="utf-8")
    meta: dict[str, str] = {}
    columns: list[str] | None = None
    rows: list[list[float]] = []
    linenos: list[int] = []
    for lineno, line in enumerate(io.StringIO(text), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            body = stripped[1:].strip()
            if ":" in body and columns is None:
                key, _, val = body.partition(":")
                meta[key.strip()] = val.strip()
            continue
        cells = [c.strip() for c in next(csv.reader([stripped]))]
        if columns is None:
            columns = cells
            if len(set(columns)) != len(columns):
                raise ParseError(f"duplicate column names in header {columns}", lineno)
            missing = [c for c in required if c not in columns]
            if missing:
                raise ParseError(f"missing required column(s) {missing}", lineno)
            continue
        if len(cells) != len(columns):
            raise ParseError(f"expected {len(columns)} cells, got {len(cells)}", lineno)
        try:
            row = [float(c) for c in cells]
        except ValueError:
            bad = next(c for c in cells if not _is_number(c))
            raise ParseError(f"non-numeric cell {bad!r}", lineno) from None
        if not all(math.isfinite(v) for v in row):
            raise ParseError("non-finite cell", lineno)
        rows.append(row)
        linenos.append(lineno)
    if columns is None:
        raise ParseError("no header line found")
    return Table(columns, rows, meta, linenos)


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def chi_radians(table: Table) -> list[float]:
    """The chi column in radians: exact ``chi_rad`` if present, else converted ``chi_deg``."""
    deg = table.column("chi_deg")
    if not table.has("chi_rad"):
        return [math.radians(d) for d in deg]
    rad = table.column("chi_rad")
    for d, r, ln in zip(deg, rad, table.linenos):
        if not math.isclose(math.degrees(r), d, rel_tol=1e-9, abs_tol=1e-9):
            raise ParseError(f"chi_rad {r!r} does not match chi_deg {d!r}", ln)
    return rad


def value_column(table: Table, preferred: str | None = None) -> str:
    if preferred is not None:
        if not table.has(preferred):
            raise ParseError(f"missing value column {preferred!r}")
        return preferred
    for name in VALUE_COLUMNS:
        if table.has(name):
            return name
    raise ParseError(f"no value column; expected one of {VALUE_COLUMNS}")


def ingest_series(path_or_file, value: str | None = None, beam: str | None = None,
                  scenario: str | None = None) -> FringeSeries:
    """Read a fringe file into a validated :class:`FringeSeries` (chi in radians).

    ``beam`` and ``scenario`` default to the file's metadata.

    Raises:
        ParseError: on malformed content, duplicate or decreasing chi (naming the line).
    """
    table = read_table(path_or_file, required=("chi_deg",))
    vcol = value_column(table, value)
    chi = chi_radians(table)
    for a, b, ln in zip(chi, chi[1:], table.linenos[1:]):
        if b == a:
            raise ParseError(f"duplicate chi value {math.degrees(b)!r} deg", ln)
        if b < a:
            raise ParseError("chi values must increase", ln)
    values = table.column(vcol)
    for v, ln in zip(values, table.linenos):
        if v < 0:
            raise ParseError(f"negative {vcol} value {v!r}", ln)
    sigma = None
    if table.has("sigma"):
        sigma = table.column("sigma")
        for s, ln in zip(sigma, table.linenos):
            if not s > 0:
                raise ParseError(f"sigma must be positive, got {s!r}", ln)
    beam = beam or table.meta.get("beam", "O")
    if str(beam).upper() not in ("H", "O"):
        raise ParseError(f"beam must be H or O, got {beam!r}")
    scen = scenario or table.meta.get("scenario")
    overrides = {}
    if scen and "overrides" in table.meta:
        try:
            overrides = json.loads(table.meta["overrides"])
        except json.JSONDecodeError as e:
            raise ParseError(f"bad overrides metadata: {e}") from None
    return FringeSeries(tuple(chi), tuple(values), None if sigma is None else tuple(sigma),
                        beam, Scenario(scen, overrides) if scen else None)


def emit_series(path_or_file, series: FringeSeries, meta: Mapping[str, object] | None = None,
                value: str = "counts") -> None:
    """Write ``series`` so that :func:`ingest_series` returns an equal series."""
    meta = dict(meta or {})
    meta.setdefault("beam", series.beam)
    if series.scenario is not None:
        meta.setdefault("scenario", series.scenario.label)
        if series.scenario.overrides:
            meta.setdefault("overrides", json.dumps(dict(series.scenario.overrides), sort_keys=True))
    columns = ["chi_deg", "chi_rad", value] + (["sigma"] if series.sigma is not None else [])
    rows = []
    for i, c in enumerate(series.chi):
        row = [math.degrees(c), c, series.values[i]]
        if series.sigma is not None:
            row.append(series.sigma[i])
        rows.append(row)
    write_table(path_or_file, columns, rows, meta)
