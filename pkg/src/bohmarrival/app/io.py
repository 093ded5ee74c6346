"""CSV and JSON emission.

Every CSV starts with ``#``-prefixed metadata lines (at least the config
hash), followed by a fixed header row.  Floats are written with 17
significant digits so files round-trip exactly and reruns are byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

__all__ = [
    "ARRIVAL_COLUMNS",
    "BOUNDARY_COLUMNS",
    "EMPIRICAL_COLUMNS",
    "TRAJECTORY_COLUMNS",
    "write_csv",
    "read_csv",
    "write_json",
]

BOUNDARY_COLUMNS = ("t", "j_a", "j_b")
ARRIVAL_COLUMNS = ("t", "f_a", "f_b", "runmax_fa", "runmax_negfb", "P", "Pc", "delta")
EMPIRICAL_COLUMNS = ("t", "P_hat", "stderr", "samples")
TRAJECTORY_COLUMNS = ("trajectory_id", "t", "x")


def write_csv(path, columns, data, meta: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arr = np.column_stack([np.asarray(c, dtype=float) for c in data])
    if arr.shape[1] != len(columns):
        raise ValueError("column count mismatch")
    lines = [f"# {k}={v}" for k, v in (meta or {}).items()]
    lines.append(",".join(columns))
    body = "\n".join(",".join(f"{v:.17g}" for v in row) for row in arr)
    path.write_text("\n".join(lines) + "\n" + body + ("\n" if body else ""))
    return path


def read_csv(path):
    """Return ``(meta, columns)`` where ``columns`` maps header names to arrays."""
    meta: dict[str, str] = {}
    header = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value.strip()
            elif header is None:
                header = [h.strip() for h in line.split(",")]
            else:
                rows.append([float(v) for v in line.split(",")])
    if header is None:
        raise ValueError(f"{path}: no header row")
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    return meta, {name: data[:, i] for i, name in enumerate(header)}


def write_json(path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path
