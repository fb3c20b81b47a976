"""Delimited serialization of simulation records and certificates.

The time-series contract is fixed: header `t,x1,x2,r,rdot,e1,e2,u,V,Vdot`,
comma separator, one newline-terminated row per sample, numbers written
as shortest round-trip decimals (Python repr), never locale-dependent.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .certify import Certificate
from .integrator import COLUMNS, TimeSeries

TIMESERIES_HEADER = ",".join(COLUMNS)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_timeseries(ts: TimeSeries, path: str | Path) -> None:
    cols = [ts.column(name) for name in COLUMNS]
    lines = [TIMESERIES_HEADER]
    for row in zip(*cols):
        lines.append(",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii", newline="\n")


def read_timeseries(path: str | Path) -> TimeSeries:
    """Strict reader for the time-series contract; rejects ragged rows
    and unexpected headers."""
    text = Path(path).read_text(encoding="ascii")
    lines = text.splitlines()
    if not lines or lines[0] != TIMESERIES_HEADER:
        raise ValueError(f"{path}: missing or wrong header")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(COLUMNS):
            raise ValueError(f"{path}:{lineno}: expected {len(COLUMNS)} fields")
        rows.append([float(v) for v in parts])
    data = np.array(rows, dtype=float).reshape(len(rows), len(COLUMNS))
    cols = {name: data[:, i].copy() for i, name in enumerate(COLUMNS)}
    dt = float(cols["t"][1] - cols["t"][0]) if len(rows) > 1 else 0.0
    return TimeSeries(**cols, dt=dt)


def write_certificate(cert: Certificate, path: str | Path) -> None:
    """Per-point certificate records: e1, e2, quadform, eig_min, eig_max,
    skipped flag."""
    lines = ["e1,e2,quadform,eig_min,eig_max,skipped"]
    for i, e1 in enumerate(cert.e1_values):
        for j, e2 in enumerate(cert.e2_values):
            if cert.skipped[i, j]:
                lines.append(f"{_fmt(e1)},{_fmt(e2)},nan,nan,nan,1")
            else:
                lines.append(
                    f"{_fmt(e1)},{_fmt(e2)},{_fmt(cert.quadform[i, j])},"
                    f"{_fmt(cert.eig_min[i, j])},{_fmt(cert.eig_max[i, j])},0"
                )
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii", newline="\n")


def write_grid(
    e1_values: np.ndarray,
    e2_values: np.ndarray,
    table: np.ndarray,
    value_name: str,
    path: str | Path,
) -> None:
    """Flattened grid table with columns e1, e2, <value_name>."""
    lines = [f"e1,e2,{value_name}"]
    for i, e1 in enumerate(e1_values):
        for j, e2 in enumerate(e2_values):
            lines.append(f"{_fmt(e1)},{_fmt(e2)},{_fmt(table[i, j])}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii", newline="\n")


def write_table(header: list[str], rows: list[list], path: str | Path) -> None:
    """Small generic table writer (metrics, sweep summaries)."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii", newline="\n")
