"""Field snapshots and energy logs.

Snapshot layout::

    VCHR1\\n
    <dim> <n1> [<n2> [<n3>]] <L1> [<L2> [<L3>]] <bc>\\n
    <prod(n) little-endian float64 values, row-major, last axis fastest>

Energy logs are CSV with ``\\n`` line endings and floats written with 17
significant digits, which round-trips every float64 exactly.
"""

from __future__ import annotations

import csv
from dataclasses import fields
from pathlib import Path

import numpy as np

from .diagnostics import EnergyRecord
from .grid import BC, GridSpec

MAGIC = b"VCHR1\n"
_MAX_HEADER = 256

CSV_COLUMNS = ("step", "t", "E_original", "E_transformed", "E_discrete",
               "identity_residual", "mass_drift", "psi_mean", "U_deviation", "cg_iters")


class SnapshotFormatError(ValueError):
    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


def snapshot_header(grid: GridSpec) -> str:
    parts = [str(grid.dim), *map(str, grid.n), *map(repr, grid.length), grid.bc.value]
    return " ".join(parts)


def snapshot_bytes(grid: GridSpec, field: np.ndarray) -> bytes:
    field = grid.check(field)
    body = np.ascontiguousarray(field, dtype="<f8").tobytes()
    return MAGIC + (snapshot_header(grid) + "\n").encode("ascii") + body


def snapshot_write(grid: GridSpec, field: np.ndarray, path) -> Path:
    path = Path(path)
    path.write_bytes(snapshot_bytes(grid, field))
    return path


def snapshot_parse(data: bytes) -> tuple[GridSpec, np.ndarray]:
    if not data.startswith(MAGIC):
        raise SnapshotFormatError("bad magic, not a VCHR1 snapshot", 0)
    start = len(MAGIC)
    end = data.find(b"\n", start, start + _MAX_HEADER)
    if end < 0:
        raise SnapshotFormatError("unterminated header line", start)
    try:
        tokens = data[start:end].decode("ascii").split()
        dim = int(tokens[0])
        if not 1 <= dim <= 3 or len(tokens) != 2 + 2 * dim:
            raise ValueError("wrong number of header fields")
        n = tuple(int(v) for v in tokens[1:1 + dim])
        length = tuple(float(v) for v in tokens[1 + dim:1 + 2 * dim])
        grid = GridSpec(n, length, BC(tokens[-1]))
    except (ValueError, IndexError, UnicodeDecodeError) as exc:
        raise SnapshotFormatError(f"malformed header: {exc}", start) from exc
    body = end + 1
    expected = 8 * grid.size
    got = len(data) - body
    if got != expected:
        raise SnapshotFormatError(
            f"payload has {got} bytes, header {grid.shape} needs {expected}", body + min(got, expected))
    values = np.frombuffer(data, dtype="<f8", count=grid.size, offset=body)
    return grid, values.astype(float).reshape(grid.shape)


def snapshot_read(path) -> tuple[GridSpec, np.ndarray]:
    return snapshot_parse(Path(path).read_bytes())


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


class EnergyCsvWriter:
    """Append-only writer for energy records."""

    def __init__(self, path):
        self.path = Path(path)
        self._fh = open(self.path, "w", newline="")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(CSV_COLUMNS)

    def write(self, rec: EnergyRecord):
        self._w.writerow([_fmt(getattr(rec, c)) for c in CSV_COLUMNS])

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_energy_csv(records, path) -> Path:
    with EnergyCsvWriter(path) as w:
        for rec in records:
            w.write(rec)
    return Path(path)


def read_energy_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    ints = {"step", "cg_iters"}
    return [{k: int(v) if k in ints else float(v) for k, v in row.items()} for row in rows]


def record_fields() -> list[str]:
    return [f.name for f in fields(EnergyRecord)]
