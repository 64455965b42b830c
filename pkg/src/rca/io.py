"""Matrix files and JSON helpers used by the command line.

A matrix file is plain CSV with a ``# rows cols`` header line followed by
``rows`` lines of ``cols`` comma-separated values (row-major).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ConfigError


def write_matrix(path, M) -> None:
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    if M.ndim != 2:
        raise ConfigError("only 2-d arrays can be written as matrix files")
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"# {M.shape[0]} {M.shape[1]}\n")
        np.savetxt(fh, M, delimiter=",", fmt="%.17g")


def read_matrix(path) -> np.ndarray:
    path = Path(path)
    try:
        with path.open() as fh:
            header = fh.readline()
            body = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    parts = header.lstrip("#").split()
    if not header.startswith("#") or len(parts) != 2:
        raise ConfigError(f"{path}: first line must be '# rows cols'")
    try:
        rows, cols = int(parts[0]), int(parts[1])
    except ValueError:
        raise ConfigError(f"{path}: bad header {header.strip()!r}") from None
    lines = [ln for ln in body.splitlines() if ln.strip()]
    if len(lines) != rows:
        raise ConfigError(f"{path}: header says {rows} rows, found {len(lines)}")
    values = []
    for k, ln in enumerate(lines, start=2):
        row = ln.split(",")
        if len(row) != cols:
            raise ConfigError(f"{path}: line {k} has {len(row)} values, expected {cols}")
        try:
            values.append([float(x) for x in row])
        except ValueError as exc:
            raise ConfigError(f"{path}: line {k}: {exc}") from None
    return np.array(values, dtype=np.float64).reshape(rows, cols)


def read_json(path):
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
