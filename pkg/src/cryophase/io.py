"""Snapshot, diagnostics, and manifest writers.

Floats are rendered with 17 significant digits so that every value
round-trips bitwise through the text representation; files use LF
line endings unconditionally.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .grid import Field, Grid


def format_float(v: float) -> str:
    return f"{float(v):.17g}"


def write_snapshot(path, theta: Field, beta: Field, xi: Field):
    """Write nodal fields as CSV: x[,y],theta,beta,xi in row-major order."""
    grid = theta.grid
    axes = grid.coordinates()
    lines = []
    if grid.dim == 1:
        lines.append("x,theta,beta,xi")
        for i in range(grid.nodes[0]):
            lines.append(",".join(format_float(v) for v in (
                axes[0][i], theta.values[i], beta.values[i], xi.values[i])))
    else:
        lines.append("x,y,theta,beta,xi")
        for i in range(grid.nodes[0]):
            for j in range(grid.nodes[1]):
                lines.append(",".join(format_float(v) for v in (
                    axes[0][i], axes[1][j], theta.values[i, j],
                    beta.values[i, j], xi.values[i, j])))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def read_snapshot(path, grid: Grid):
    """Read a snapshot CSV back into (theta, beta, xi) fields on `grid`.

    Coordinates must match the grid nodes exactly (they do for files
    written by `write_snapshot` on the same grid, because 17 significant
    digits round-trip).
    """
    text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValidationError(f"{path}: empty snapshot file")
    header = lines[0].split(",")
    expected = ["x", "theta", "beta", "xi"] if grid.dim == 1 \
        else ["x", "y", "theta", "beta", "xi"]
    if header != expected:
        raise ValidationError(
            f"{path}: header {header} does not match expected {expected}")
    rows = [tuple(float(v) for v in ln.split(",")) for ln in lines[1:]]
    if len(rows) != grid.num_nodes:
        raise ValidationError(
            f"{path}: {len(rows)} rows but grid has {grid.num_nodes} nodes")
    data = np.array(rows)
    ncoord = grid.dim
    coords = data[:, :ncoord]
    axes = grid.coordinates()
    if grid.dim == 1:
        expected_coords = axes[0][:, None]
    else:
        xx, yy = np.meshgrid(axes[0], axes[1], indexing="ij")
        expected_coords = np.column_stack([xx.ravel(), yy.ravel()])
    if not np.array_equal(coords, expected_coords):
        raise ValidationError(f"{path}: node coordinates do not match the grid")
    fields = [data[:, ncoord + k].reshape(grid.shape) for k in range(3)]
    return tuple(Field(grid, f) for f in fields)


def write_diagnostics(path, ledger):
    lines = [",".join(ledger.COLUMNS)]
    for row in ledger.rows:
        lines.append(",".join(format_float(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def write_manifest(path, config_dict, wall_time, extra=None):
    from . import __version__
    from .kernels import BACKEND

    manifest = {
        "cryophase_version": __version__,
        "python_version": sys.version.split()[0],
        "numpy_version": np.__version__,
        "kernel_backend": BACKEND,
        "wall_time_s": wall_time,
        "config": config_dict,
    }
    if extra:
        manifest.update(extra)
    Path(path).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", newline="\n")


def write_csv_report(path, columns, rows):
    """Generic small-report writer; empty cells stay empty."""
    lines = [",".join(columns)]
    for row in rows:
        cells = []
        for c in columns:
            v = row.get(c, "")
            cells.append(format_float(v) if isinstance(v, (int, float)) else str(v))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")
