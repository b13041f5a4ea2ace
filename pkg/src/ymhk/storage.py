"""Binary snapshots, CSV traces and key = value report files.

Snapshot layout (little-endian)::

    magic "YMHK" | version u32 = 1 | group u8 | n u8 | reserved u16 = 0
    extents u32 x n | h f64 | k u32 | lambda f64 | t f64
    links: site-id order, axes 0..n-1 per site, each element as (re, im) f64
           pairs in row-major order (1 pair for U(1), 4 for SU(2))
    Higgs: site-id order, r (re, im) f64 pairs per site
"""

from __future__ import annotations

import csv
import os
import struct
import tempfile
from pathlib import Path
from typing import Iterable

import numpy as np

from . import algebra as alg
from .energy import FlowParams
from .errors import CorruptSnapshotError, SnapshotFormatError
from .fields import GaugeField, HiggsField
from .flow import FlowState, TraceRecord
from .lattice import LatticeShape

MAGIC = b"YMHK"
VERSION = 1
UNITARITY_TOL = 1e-9

_HEAD = struct.Struct("<4sIBBH")
_TAIL = struct.Struct("<dIdd")


def snapshot_size(group: alg.Group, extents: tuple[int, ...]) -> int:
    sites = int(np.prod(extents))
    n = len(extents)
    return _HEAD.size + 4 * n + _TAIL.size + 16 * sites * (n * group.r ** 2 + group.r)


def encode_snapshot(state: FlowState) -> bytes:
    lat = state.lattice
    grp = state.U.group
    head = _HEAD.pack(MAGIC, VERSION, grp.code, lat.n, 0)
    ext = struct.pack(f"<{lat.n}I", *lat.extents)
    tail = _TAIL.pack(lat.h, state.params.k, state.params.lam, state.t)
    links = lat.to_site_order(state.U.links).astype("<c16", copy=False)
    higgs = lat.to_site_order(state.u.values).astype("<c16", copy=False)
    return b"".join((head, ext, tail, links.tobytes(), higgs.tobytes()))


def save_snapshot(state: FlowState, path: str | Path) -> None:
    """Write atomically: temp file in the target directory, then rename."""
    path = Path(path)
    data = encode_snapshot(state)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, size: int, what: str) -> bytes:
        if self.pos + size > len(self.data):
            raise SnapshotFormatError(f"truncated snapshot while reading {what}", self.pos)
        out = self.data[self.pos:self.pos + size]
        self.pos += size
        return out

    def unpack(self, st: struct.Struct, what: str) -> tuple:
        return st.unpack(self.take(st.size, what))


def decode_snapshot(data: bytes) -> FlowState:
    rd = _Reader(data)
    magic, version, gcode, n, reserved = rd.unpack(_HEAD, "header")
    if magic != MAGIC:
        raise SnapshotFormatError(f"bad magic {magic!r}", 0)
    if version != VERSION:
        raise SnapshotFormatError(f"unsupported version {version}", 4)
    try:
        grp = alg.group_by_code(gcode)
    except KeyError:
        raise SnapshotFormatError(f"unknown group code {gcode}", 8) from None
    if reserved != 0:
        raise SnapshotFormatError("reserved field is not zero", 10)
    if not 1 <= n <= 4:
        raise SnapshotFormatError(f"bad dimension {n}", 9)
    ext_off = rd.pos
    extents = struct.unpack(f"<{n}I", rd.take(4 * n, "extents"))
    tail_off = rd.pos
    h, k, lam, t = rd.unpack(_TAIL, "scalar header")
    try:
        lattice = LatticeShape(n, extents, h)
    except ValueError as exc:
        raise SnapshotFormatError(f"invalid lattice: {exc}", ext_off) from None
    try:
        params = FlowParams(int(k), float(lam))
    except ValueError as exc:
        raise SnapshotFormatError(f"invalid flow parameters: {exc}", tail_off) from None
    sites = lattice.num_sites
    r = grp.r
    link_off = rd.pos
    links = np.frombuffer(rd.take(16 * sites * n * r * r, "links"), dtype="<c16")
    higgs = np.frombuffer(rd.take(16 * sites * r, "Higgs field"), dtype="<c16")
    if rd.pos != len(data):
        raise SnapshotFormatError(f"{len(data) - rd.pos} trailing bytes", rd.pos)
    links = lattice.from_site_order(links.astype(complex).reshape(sites, n, r, r))
    higgs = lattice.from_site_order(higgs.astype(complex).reshape(sites, r))
    if not (np.all(np.isfinite(links)) and np.all(np.isfinite(higgs))):
        raise CorruptSnapshotError("non-finite field values")
    defect = alg.unitarity_defect(links)
    if defect > UNITARITY_TOL:
        raise CorruptSnapshotError(f"links are not unitary (defect {defect:.3e}, link data at byte {link_off})")
    return FlowState(t, GaugeField(lattice, grp, links), HiggsField(lattice, grp, higgs), params)


def load_snapshot(path: str | Path) -> FlowState:
    return decode_snapshot(Path(path).read_bytes())


def snapshot_header(data: bytes) -> dict:
    """Header fields only; does not validate field payloads."""
    rd = _Reader(data)
    magic, version, gcode, n, reserved = rd.unpack(_HEAD, "header")
    if magic != MAGIC:
        raise SnapshotFormatError(f"bad magic {magic!r}", 0)
    if version != VERSION:
        raise SnapshotFormatError(f"unsupported version {version}", 4)
    try:
        grp = alg.group_by_code(gcode)
    except KeyError:
        raise SnapshotFormatError(f"unknown group code {gcode}", 8) from None
    extents = struct.unpack(f"<{n}I", rd.take(4 * n, "extents"))
    h, k, lam, t = rd.unpack(_TAIL, "scalar header")
    return {"group": grp.label, "n": n, "extents": list(extents), "h": h, "k": k,
            "lambda": lam, "t": t, "bytes": len(data),
            "expected_bytes": snapshot_size(grp, extents)}


def fmt_float(v: float) -> str:
    return format(float(v), ".17g")


def trace_columns(k: int, record_derivatives: bool) -> list[str]:
    cols = ["step", "t", "dt", "E_total", "E_curv", "E_higgs", "E_pot", "l2_u", "sup_F",
            "sup_u2", "grad_norm", "E_ymh"]
    if record_derivatives:
        cols += [f"d{q}F_l2" for q in range(k + 1)]
    return cols


class TraceWriter:
    """Append-only CSV trace; every row is flushed as soon as it is written."""

    def __init__(self, path: str | Path, columns: list[str], meta: dict | None = None):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.columns = columns
        self._fh = open(self.path, "w", newline="")
        for key, val in (meta or {}).items():
            self._fh.write(f"# {key} = {val}\n")
        self._fh.write(",".join(columns) + "\n")
        self._fh.flush()

    def write(self, rec: TraceRecord) -> None:
        row = rec.as_row()
        cells = []
        for c in self.columns:
            v = row[c]
            cells.append(str(v) if isinstance(v, (int, np.integer)) else fmt_float(v))
        self._fh.write(",".join(cells) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_trace(path: str | Path) -> tuple[dict, list[dict]]:
    """Return ``(meta, rows)``; a truncated final line is skipped.

    Rows are written whole with a trailing newline, so a last line without
    one was cut mid-write even if its cells happen to parse.
    """
    meta: dict = {}
    body: list[str] = []
    with open(path, newline="") as fh:
        for line in fh:
            if not line.endswith("\n"):
                break
            if line.startswith("#"):
                key, _, val = line[1:].partition("=")
                meta[key.strip()] = val.strip()
            elif line.strip():
                body.append(line)
    rows: list[dict] = []
    if not body:
        return meta, rows
    reader = csv.reader(body)
    header = next(reader)
    for cells in reader:
        if len(cells) != len(header):
            break
        try:
            rows.append({c: (int(v) if c == "step" else float(v)) for c, v in zip(header, cells)})
        except ValueError:
            break
    return meta, rows


def write_report(path: str | Path, items: Iterable[tuple[str, object]]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    for key, val in items:
        if isinstance(val, float):
            val = fmt_float(val)
        elif isinstance(val, (list, tuple)):
            val = ",".join(fmt_float(v) if isinstance(v, float) else str(v) for v in val)
        lines.append(f"{key} = {val}")
    path.write_text("\n".join(lines) + "\n")


class DirectorySink:
    """Run sink writing ``trace.csv`` and snapshots under ``out_dir``."""

    def __init__(self, out_dir: str | Path, columns: list[str], meta: dict):
        self.out_dir = Path(out_dir)
        self.writer = TraceWriter(self.out_dir / "trace.csv", columns, meta)
        self.snapshots: list[Path] = []

    def record(self, rec: TraceRecord) -> None:
        self.writer.write(rec)

    def snapshot(self, state: FlowState, tag: str) -> None:
        path = self.out_dir / f"{tag}.ymhk"
        save_snapshot(state, path)
        self.snapshots.append(path)

    def close(self) -> None:
        self.writer.close()
