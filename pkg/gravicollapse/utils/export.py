"""
File export: CSV time series, JSON reports and state snapshots

Snapshot binary layout (little-endian):
    header  <i d d   n, L, t
    body    n x <d d  Re psi_i, Im psi_i
"""
import csv
import json
import logging
import math
import struct
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np

from ..core.errors import ExportError
from ..core.grid import WaveFunction, make_grid

logger = logging.getLogger(__name__)

SNAPSHOT_HEADER = struct.Struct("<idd")
SNAPSHOT_PAIR = struct.Struct("<dd")

PathLike = Union[str, Path]


def jsonable(value: Any) -> Any:
    """numpy scalars/arrays and non-finite floats to plain JSON values"""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    return value


def _prepare(path: PathLike) -> Path:
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ExportError(f"Cannot create directory {target.parent}: {e}") from None
    return target


def export_json(path: PathLike, data: Dict[str, Any]) -> Path:
    """Write ``data`` as UTF-8 JSON"""
    target = _prepare(path)
    try:
        with open(target, 'w', encoding='utf-8') as f:
            json.dump(jsonable(data), f, indent=2)
    except OSError as e:
        raise ExportError(f"Cannot write {target}: {e}") from None
    logger.debug(f"Wrote {target}")
    return target


def export_csv(path: PathLike, rows: Sequence[Dict[str, Any]],
               columns: Sequence[str] = ()) -> Path:
    """Write dict rows as CSV; the header is ``columns`` or the keys of the first row"""
    target = _prepare(path)
    header = list(columns) or (list(rows[0].keys()) if rows else [])
    try:
        with open(target, 'w', newline='', encoding='utf-8') as f:
            writer = csv.writer(f)
            writer.writerow(header)
            for row in rows:
                writer.writerow([_format_cell(row.get(name, "")) for name in header])
    except OSError as e:
        raise ExportError(f"Cannot write {target}: {e}") from None
    logger.debug(f"Wrote {len(rows)} rows to {target}")
    return target


def _format_cell(value: Any) -> Any:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return int(value)
    return value


def read_csv(path: PathLike) -> List[Dict[str, str]]:
    try:
        with open(path, newline='', encoding='utf-8') as f:
            return list(csv.DictReader(f))
    except OSError as e:
        raise ExportError(f"Cannot read {path}: {e}") from None


def export_snapshot_csv(path: PathLike, psi: WaveFunction) -> Path:
    """Columns x, re, im, abs2"""
    x = psi.grid.x
    rows = [{"x": float(xi), "re": float(v.real), "im": float(v.imag), "abs2": float(abs(v) ** 2)}
            for xi, v in zip(x, psi.psi)]
    return export_csv(path, rows, columns=("x", "re", "im", "abs2"))


def write_snapshot(path: PathLike, psi: WaveFunction, t: float = 0.0) -> Path:
    """Binary snapshot in the documented little-endian layout"""
    target = _prepare(path)
    grid = psi.grid
    interleaved = np.empty(2 * grid.n, dtype="<f8")
    interleaved[0::2] = psi.psi.real
    interleaved[1::2] = psi.psi.imag
    try:
        with open(target, 'wb') as f:
            f.write(SNAPSHOT_HEADER.pack(grid.n, grid.length, float(t)))
            f.write(interleaved.tobytes())
    except OSError as e:
        raise ExportError(f"Cannot write {target}: {e}") from None
    return target


def read_snapshot(path: PathLike, padding: int = 2) -> Tuple[WaveFunction, float]:
    """Inverse of ``write_snapshot``; returns the state and its time stamp"""
    try:
        blob = Path(path).read_bytes()
    except OSError as e:
        raise ExportError(f"Cannot read {path}: {e}") from None
    if len(blob) < SNAPSHOT_HEADER.size:
        raise ExportError(f"{path} is too short for a snapshot header")
    n, length, t = SNAPSHOT_HEADER.unpack_from(blob, 0)
    expected = SNAPSHOT_HEADER.size + n * SNAPSHOT_PAIR.size
    if len(blob) != expected:
        raise ExportError(f"{path}: expected {expected} bytes for n={n}, found {len(blob)}")
    values = np.frombuffer(blob, dtype="<f8", offset=SNAPSHOT_HEADER.size)
    grid = make_grid(n, length, padding)
    return WaveFunction(values[0::2] + 1j * values[1::2], grid), t


def export_series(path: PathLike, rows: Iterable[Dict[str, Any]]) -> Path:
    """Time-series CSV; extra columns present in later rows are appended to the header"""
    rows = list(rows)
    header: List[str] = []
    for row in rows:
        for name in row:
            if name not in header:
                header.append(name)
    return export_csv(path, rows, columns=header)


def emit_report(report, directory: PathLike) -> List[Path]:
    """Write a ScenarioReport as report.json, one CSV per table and every snapshot (CSV + binary)"""
    out = Path(directory)
    written = [export_json(out / "report.json", report.to_dict())]
    for name, rows in report.tables.items():
        written.append(export_series(out / f"{name}.csv", rows))
    for name, (psi, t) in report.snapshots.items():
        written.append(export_snapshot_csv(out / f"{name}.csv", psi))
        written.append(write_snapshot(out / f"{name}.bin", psi, t))
    logger.info(f"Report for {report.scenario} written to {out} ({len(written)} files)")
    return written
