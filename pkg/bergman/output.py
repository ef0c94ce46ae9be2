"""
Table and report writers.

CSV tables have a single header line and numbers printed with 17
significant digits, so a fixed configuration always produces the same
bytes. JSON carries the same rows as a list of objects.
"""

import csv
import json
import math
import sys
from collections.abc import Sequence
from contextlib import contextmanager
from dataclasses import dataclass
from dataclasses import field
from pathlib import Path
from typing import IO
from typing import Any
from typing import Iterator

from bergman.exceptions import OptionError


@dataclass
class Table:
    columns: Sequence[str]
    rows: list[dict[str, Any]] = field(default_factory=list)
    converged: bool = True

    def add(self, **row: Any) -> None:
        if unknown := set(row) - set(self.columns):
            raise KeyError(f"Unknown column(s): {", ".join(sorted(unknown))}")
        self.rows.append(row)


def format_cell(value: Any) -> str:
    match value:
        case None:
            return ""
        case bool():
            return "true" if value else "false"
        case int():
            return str(value)
        case float():
            return "%.17g" % value
        case complex():
            return "%.17g%+.17gj" % (value.real, value.imag)
    return str(value)


def _json_value(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


def write_csv(table: Table, out: IO[str]) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([format_cell(row.get(column)) for column in table.columns])


def write_json(data: Any, out: IO[str]) -> None:
    if isinstance(data, Table):
        data = [{k: _json_value(row.get(k)) for k in data.columns} for row in data.rows]
    json.dump(data, out, indent=2, allow_nan=False)
    out.write("\n")


@contextmanager
def open_output(path: str | None) -> Iterator[IO[str]]:
    """
    The named file, or standard output when `path` is None.
    """
    if path is None:
        yield sys.stdout
        return
    try:
        f = Path(path).expanduser().open("w", encoding="utf-8", newline="")
    except OSError as ex:
        raise OptionError(f"Cannot write output.path {path}: {ex}") from ex
    with f:
        yield f


def write_table(table: Table, fmt: str, path: str | None) -> None:
    with open_output(path) as out:
        if fmt == "json":
            write_json(table, out)
        else:
            write_csv(table, out)
