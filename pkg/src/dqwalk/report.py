"""CSV documents with a provenance header, gnuplot scripts, atomic writes."""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path

SCHEMA = "dqwalk-csv/1"


def fmt(value) -> str:
    if isinstance(value, (int, str)) and not isinstance(value, bool):
        return str(value)
    return format(float(value), ".17g")


def csv_document(command: str, echo: dict, columns, rows, notes=(), footer=()) -> str:
    """Comment header (schema, command, config echo, notes), then RFC-4180 rows."""
    buf = io.StringIO()
    buf.write(f"# schema: {SCHEMA}\n")
    buf.write(f"# command: {command}\n")
    for key in sorted(echo):
        buf.write(f"# config: {key} = {echo[key]}\n")
    for note in notes:
        buf.write(f"# {note}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    for note in footer:
        buf.write(f"# {note}\n")
    return buf.getvalue()


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def gnuplot_script(csv_path, x_column: str, y_columns, title: str, xlabel: str,
                   ylabel: str, logscale: str = "y") -> str:
    """Script plotting named CSV columns; renders to ``<csv stem>.png`` when run."""
    csv_path = Path(csv_path)
    lines = [
        "set datafile separator ','",
        "set datafile commentschars '#'",
        "set terminal pngcairo size 900,600",
        f"set output '{csv_path.with_suffix('.png').name}'",
        f"set title '{title}'",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
        "set key outside right",
        "set grid",
    ]
    if logscale:
        lines.append(f"set logscale {logscale}")
        lines.append("set format y '%.0e'")
    plots = [
        f"'{csv_path.name}' using '{x_column}':'{col}' with linespoints title '{col}'"
        for col in y_columns
    ]
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"
