"""CSV emission and ingestion.

Floats are serialized with 17 significant digits so parse(serialize(x))
round-trips bit-for-bit; headers are a single documented row of column names.
Comment lines starting with '#' above the header carry free-form metadata.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple

from .config import format_number


def rows_to_text(header: Sequence[str], rows: Iterable[Sequence], comments: Sequence[str] = ()) -> str:
    out = io.StringIO()
    for line in comments:
        out.write(f"# {line}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([cell if isinstance(cell, str) else format_number(cell) for cell in row])
    return out.getvalue()


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence], comments: Sequence[str] = ()) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(rows_to_text(header, rows, comments), encoding="utf-8")
    return path


def read_csv(path) -> Tuple[List[str], List[tuple]]:
    """Read back a CSV written by write_csv; numeric cells become floats."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    rows = []
    for raw in reader:
        cells = []
        for cell in raw:
            try:
                cells.append(float(cell))
            except ValueError:
                cells.append(cell)
        rows.append(tuple(cells))
    return header, rows
