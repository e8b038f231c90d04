"""Text serialization of fields, control sequences and diagnostics.

Field files::

    SCHO-FIELD v1
    kind=cc nx=32 ny=32 Lx=1.0 Ly=1.0 t=0.0 step=0
    <row 0: ny values>
    ...

``kind`` is ``cc``, ``face-x`` or ``face-y``; rows run over the first array
index.  Values are written with 17 significant digits, which round-trips
IEEE doubles exactly.  A vector field ``name`` is stored as ``name.fx`` and
``name.fy``.  Every write goes to a temporary file that is renamed into place.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FieldFormatError
from .grid import GridSpec, ScalarField, VectorField

MAGIC = "SCHO-FIELD"
VERSION = "v1"
DIAGNOSTICS_COLUMNS = ("step", "time", "energy", "mean_u", "div_inf",
                       "J_track_v", "J_track_u", "J_reg")


@dataclass(frozen=True)
class FieldMeta:
    kind: str
    grid: GridSpec
    time: float = 0.0
    step: int = 0


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x: float) -> str:
    return f"{x:.16e}"


def _shape(kind: str, grid: GridSpec):
    return {"cc": (grid.nx, grid.ny), "face-x": (grid.nx + 1, grid.ny),
            "face-y": (grid.nx, grid.ny + 1)}[kind]


def _render(arr: np.ndarray, kind: str, grid: GridSpec, t: float, step: int) -> str:
    out = io.StringIO()
    out.write(f"{MAGIC} {VERSION}\n")
    out.write(f"kind={kind} nx={grid.nx} ny={grid.ny} Lx={grid.Lx!r} Ly={grid.Ly!r} "
              f"t={float(t)!r} step={int(step)}\n")
    for row in arr:
        out.write(" ".join(_fmt(x) for x in row))
        out.write("\n")
    return out.getvalue()


def write_field(path, field, time: float = 0.0, step: int = 0) -> list:
    """Write a scalar or vector field; returns the list of files written."""
    path = Path(path)
    if isinstance(field, ScalarField):
        atomic_write_text(path, _render(field.values, "cc", field.grid, time, step))
        return [path]
    if isinstance(field, VectorField):
        px, py = Path(f"{path}.fx"), Path(f"{path}.fy")
        atomic_write_text(px, _render(field.xvals, "face-x", field.grid, time, step))
        atomic_write_text(py, _render(field.yvals, "face-y", field.grid, time, step))
        return [px, py]
    raise TypeError(f"cannot serialize {type(field).__name__}")


def _parse_header(line: str, path) -> dict:
    items = {}
    for tok in line.split():
        key, sep, val = tok.partition("=")
        if not sep:
            raise FieldFormatError(f"{path}: malformed header token {tok!r}")
        items[key] = val
    missing = {"kind", "nx", "ny", "Lx", "Ly", "t", "step"} - items.keys()
    if missing:
        raise FieldFormatError(f"{path}: header lacks {', '.join(sorted(missing))}")
    if items["kind"] not in ("cc", "face-x", "face-y"):
        raise FieldFormatError(f"{path}: unknown kind {items['kind']!r}")
    return items


def read_array(path, expected_grid: GridSpec | None = None):
    """Read one field file; returns ``(array, FieldMeta)``."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except FileNotFoundError:
        raise FieldFormatError(f"{path}: no such field file") from None
    if not lines:
        raise FieldFormatError(f"{path}: empty file")
    magic = lines[0].split()
    if len(magic) != 2 or magic[0] != MAGIC:
        raise FieldFormatError(f"{path}: not a field file (first line {lines[0]!r})")
    if magic[1] != VERSION:
        raise FieldFormatError(f"{path}: unsupported version {magic[1]!r}, expected {VERSION}")
    if len(lines) < 2:
        raise FieldFormatError(f"{path}: missing header line")
    h = _parse_header(lines[1], path)
    try:
        grid = GridSpec(int(h["nx"]), int(h["ny"]), float(h["Lx"]), float(h["Ly"]))
        meta = FieldMeta(h["kind"], grid, float(h["t"]), int(h["step"]))
    except ValueError as exc:
        raise FieldFormatError(f"{path}: bad header value: {exc}") from None
    if expected_grid is not None and (grid.nx, grid.ny) != (expected_grid.nx, expected_grid.ny):
        raise FieldFormatError(f"{path}: dimension mismatch: file is {grid.nx}x{grid.ny}, "
                               f"expected {expected_grid.nx}x{expected_grid.ny}")
    rows, cols = _shape(meta.kind, grid)
    body = lines[2:]
    arr = np.empty((rows, cols))
    for i in range(rows):
        if i >= len(body):
            raise FieldFormatError(f"{path}: malformed row {i}: file truncated "
                                   f"({len(body)} of {rows} rows)")
        parts = body[i].split()
        if len(parts) != cols:
            raise FieldFormatError(f"{path}: malformed row {i}: {len(parts)} values, "
                                   f"expected {cols}")
        try:
            arr[i] = [float(p) for p in parts]
        except ValueError:
            raise FieldFormatError(f"{path}: malformed row {i}: non-numeric entry") from None
    if any(line.strip() for line in body[rows:]):
        raise FieldFormatError(f"{path}: trailing data after row {rows - 1}")
    return arr, meta


def read_field(path, expected_grid: GridSpec | None = None):
    """Read a scalar field file, or the ``.fx``/``.fy`` pair of a vector field.

    Returns ``(field, FieldMeta)``; the meta of a vector field has ``kind="face"``.
    """
    path = Path(path)
    px, py = Path(f"{path}.fx"), Path(f"{path}.fy")
    if not path.exists() and px.exists():
        ax, mx = read_array(px, expected_grid)
        ay, my = read_array(py, expected_grid)
        if mx.kind != "face-x" or my.kind != "face-y":
            raise FieldFormatError(f"{path}: vector components have kinds {mx.kind}, {my.kind}")
        if mx.grid != my.grid:
            raise FieldFormatError(f"{path}: vector components disagree on the grid")
        return VectorField(mx.grid, ax, ay), FieldMeta("face", mx.grid, mx.time, mx.step)
    arr, meta = read_array(path, expected_grid)
    if meta.kind != "cc":
        raise FieldFormatError(f"{path}: holds a {meta.kind} component; "
                               "read the vector by its base name")
    return ScalarField(meta.grid, arr), meta


def sequence_name(directory, prefix: str, n: int) -> Path:
    return Path(directory) / f"{prefix}_{n:05d}"


def write_sequence(directory, prefix: str, fields, times) -> None:
    Path(directory).mkdir(parents=True, exist_ok=True)
    for n, (f, t) in enumerate(zip(fields, times)):
        write_field(sequence_name(directory, prefix, n), f, time=t, step=n)


def read_sequence(directory, prefix: str, count: int, expected_grid=None) -> list:
    """Read ``count`` consecutive fields ``prefix_00000`` ..."""
    return [read_field(sequence_name(directory, prefix, n), expected_grid)[0]
            for n in range(count)]


def format_number(x) -> str:
    """Shortest repr that round-trips; integers stay integers."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path, columns, rows) -> None:
    """Atomically write ``rows`` (dicts or sequences) under ``columns``."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        vals = [row[c] for c in columns] if isinstance(row, dict) else list(row)
        w.writerow([format_number(v) if isinstance(v, (int, float, np.number)) else v
                    for v in vals])
    atomic_write_text(path, out.getvalue())


def read_csv(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
