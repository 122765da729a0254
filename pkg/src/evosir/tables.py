"""CSV and JSON writers shared by the command-line tools.

Every table starts with one comment line echoing the package version and the
full run configuration, so identical configs give byte-identical files.
"""
from __future__ import annotations

import csv
import json
import math
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence, TextIO, Union

from . import __version__

PathLike = Union[str, Path]


def _cell(x: Any) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return repr(float(x))
    if hasattr(x, "item"):  # numpy scalar
        return _cell(x.item())
    return str(x)


def _jsonable(x: Any) -> Any:
    if hasattr(x, "item"):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def header_line(config: Mapping[str, Any]) -> str:
    return f"# evosir {__version__} config={json.dumps(config, sort_keys=True, default=str)}"


@contextmanager
def _sink(path: Optional[PathLike]):
    if path is None or str(path) == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def write_csv(fh: TextIO, columns: Sequence[str], rows: Iterable[Mapping[str, Any]],
              config: Mapping[str, Any]) -> None:
    fh.write(header_line(config) + "\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row.get(c)) for c in columns])


def write_json(fh: TextIO, columns: Sequence[str], rows: Iterable[Mapping[str, Any]],
               config: Mapping[str, Any]) -> None:
    doc = {
        "version": __version__,
        "config": config,
        "columns": list(columns),
        "rows": [{c: _jsonable(r.get(c)) for c in columns} for r in rows],
    }
    json.dump(doc, fh, indent=1, sort_keys=False, default=str)
    fh.write("\n")


def write_table(path: Optional[PathLike], columns: Sequence[str], rows: Iterable[Mapping[str, Any]],
                config: Mapping[str, Any], fmt: str = "csv") -> None:
    writer = write_json if fmt == "json" else write_csv
    with _sink(path) as fh:
        writer(fh, columns, list(rows), config)


def read_csv(path: PathLike):
    """Return ``(config, rows)`` from a table written by :func:`write_csv`."""
    with open(path, newline="") as fh:
        first = fh.readline()
        prefix = "# evosir "
        if not first.startswith(prefix) or " config=" not in first:
            raise ValueError(f"{path} has no evosir header line")
        config = json.loads(first.split(" config=", 1)[1])
        rows = list(csv.DictReader(fh))
    return config, rows
