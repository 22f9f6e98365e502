"""
Report emission.

The structured form is a single JSON document; every table is also written
as CSV with a header row and numbers at a fixed number of significant digits,
so identical runs give identical files.
"""

import csv
import json
import math
from pathlib import Path
from typing import Any, List

import numpy as np

from config.constants import CSV_SIGNIFICANT_DIGITS
from models.report import ReportBundle, Table
from utils.errors import EmitError
from utils.logger import dbg

STRUCTURED = "structured"
TABULAR = "tabular"


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return "nan"
        return f"{float(value):.{CSV_SIGNIFICANT_DIGITS}g}"
    return str(value)


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return None if not math.isfinite(float(value)) else float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_table(table: Table, path: Path) -> Path:
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(table.columns)
            for row in table.rows:
                writer.writerow([format_value(v) for v in row])
    except OSError as e:
        raise EmitError(f"cannot write table ({e.strerror})", str(path))
    return path


def emit(bundle: ReportBundle, out_dir: Path, fmt: str = "both") -> List[Path]:
    """
    Write the bundle under out_dir.

    Args:
        bundle: Results of one command
        out_dir: Output directory, created when missing
        fmt: "structured", "tabular" or "both"

    Returns:
        Paths written
    """
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise EmitError(f"cannot create output directory ({e.strerror})", str(out_dir))
    stem = bundle.command.replace("-", "_")
    written = []
    if fmt in (STRUCTURED, "both"):
        path = out_dir / f"{stem}.json"
        try:
            with open(path, "w", encoding="utf-8") as f:
                json.dump(_jsonable(bundle.to_dict()), f, indent=2, ensure_ascii=False)
                f.write("\n")
        except OSError as e:
            raise EmitError(f"cannot write report ({e.strerror})", str(path))
        written.append(path)
    if fmt in (TABULAR, "both"):
        for name, table in bundle.tables.items():
            written.append(write_table(table, out_dir / f"{stem}_{name}.csv"))
    dbg(f"Scritti {len(written)} file in {out_dir}")
    return written
