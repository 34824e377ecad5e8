"""Event stream and result-series file I/O.

Two interchange formats:

* TEXT_CSV — lines "t,x,y,s" (decimal integers), optional 5th column with a
  ground-truth label ("CLASS" or "CLASS:marker_id").
* BINARY_PACKED — 16-byte header (magic "EVDF", u32 version, u16 width,
  u16 height, 4 reserved bytes), then 13-byte little-endian records:
  u64 t, u16 x, u16 y, u8 s. Labels are never stored in binary.

All writers go through a temp file + rename so readers never observe a
partially written file.
"""

from __future__ import annotations

import os
import struct
from enum import Enum
from typing import Optional

import numpy as np

from .errors import FormatError
from .events import (
    EventStream,
    LabelClass,
    Labels,
    NO_MARKER,
    StreamMeta,
    validate_stream,
)

MAGIC = b"EVDF"
FORMAT_VERSION = 1
HEADER_SIZE = 16
RECORD_DTYPE = np.dtype([("t", "<u8"), ("x", "<u2"), ("y", "<u2"), ("s", "u1")])
assert RECORD_DTYPE.itemsize == 13


class EventFileFormat(Enum):
    TEXT_CSV = "csv"
    BINARY_PACKED = "bin"


def _atomic_write(path: str, data: bytes) -> int:
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)
    return len(data)


def _format_label(cls: int, marker: int) -> str:
    name = LabelClass(cls).name
    return name if marker == NO_MARKER else f"{name}:{marker}"


def _parse_label(text: str, lineno: int) -> tuple[int, int]:
    name, sep, marker = text.partition(":")
    try:
        cls = LabelClass[name]
    except KeyError:
        raise FormatError(f"line {lineno}: unknown label class '{name}'") from None
    if sep:
        try:
            return int(cls), int(marker)
        except ValueError:
            raise FormatError(f"line {lineno}: bad marker id '{marker}'") from None
    return int(cls), NO_MARKER


def write_events(
    path: str,
    stream: EventStream,
    meta: StreamMeta,
    fmt: EventFileFormat,
    labels: Optional[Labels] = None,
) -> int:
    """Write a validated stream to disk; returns the byte count written."""
    if fmt is EventFileFormat.BINARY_PACKED:
        header = struct.pack(
            "<4sIHH4x", MAGIC, FORMAT_VERSION, meta.sensor_width, meta.sensor_height
        )
        rec = np.empty(len(stream), dtype=RECORD_DTYPE)
        rec["t"] = stream.t
        rec["x"] = stream.x
        rec["y"] = stream.y
        rec["s"] = stream.s
        return _atomic_write(path, header + rec.tobytes())

    lines = []
    if labels is not None:
        for i in range(len(stream)):
            lines.append(
                f"{stream.t[i]},{stream.x[i]},{stream.y[i]},{stream.s[i]},"
                f"{_format_label(labels.cls[i], labels.marker_id[i])}"
            )
    else:
        for i in range(len(stream)):
            lines.append(f"{stream.t[i]},{stream.x[i]},{stream.y[i]},{stream.s[i]}")
    data = ("\n".join(lines) + ("\n" if lines else "")).encode()
    return _atomic_write(path, data)


def read_events(
    path: str,
    fmt: EventFileFormat,
    sensor_width: Optional[int] = None,
    sensor_height: Optional[int] = None,
) -> tuple[EventStream, StreamMeta, Optional[Labels]]:
    """Read, validate and sort a stream from disk.

    CSV carries no sensor geometry; pass sensor_width/height or they are
    inferred from the data (max coordinate + 1). Binary carries them in the
    header and ignores the arguments.
    """
    if fmt is EventFileFormat.BINARY_PACKED:
        with open(path, "rb") as fh:
            header = fh.read(HEADER_SIZE)
            if len(header) < HEADER_SIZE:
                raise FormatError(f"{path}: truncated header ({len(header)} bytes)")
            magic, version, width, height = struct.unpack("<4sIHH4x", header)
            if magic != MAGIC:
                raise FormatError(f"{path}: bad magic {magic!r}")
            if version != FORMAT_VERSION:
                raise FormatError(f"{path}: unsupported format version {version}")
            body = fh.read()
        if len(body) % RECORD_DTYPE.itemsize != 0:
            raise FormatError(
                f"{path}: truncated record at offset {HEADER_SIZE + len(body)}"
            )
        rec = np.frombuffer(body, dtype=RECORD_DTYPE)
        stream = EventStream(
            rec["t"].astype(np.int64), rec["x"].astype(np.int32),
            rec["y"].astype(np.int32), rec["s"].astype(np.int8),
        )
        meta = StreamMeta(width, height, _duration(stream), len(stream))
        stream, meta, _ = validate_stream(stream, meta)
        return stream, meta, None

    ts, xs, ys, ss = [], [], [], []
    label_cls, label_marker = [], []
    with open(path, "r") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) not in (4, 5):
                raise FormatError(f"{path}: line {lineno}: expected 4 or 5 fields")
            try:
                ts.append(int(parts[0]))
                xs.append(int(parts[1]))
                ys.append(int(parts[2]))
                ss.append(int(parts[3]))
            except ValueError:
                raise FormatError(
                    f"{path}: line {lineno}: non-integer field"
                ) from None
            if len(parts) == 5:
                cls, marker = _parse_label(parts[4], lineno)
                label_cls.append(cls)
                label_marker.append(marker)
    if label_cls and len(label_cls) != len(ts):
        raise FormatError(f"{path}: label column present on only some lines")
    stream = EventStream(
        np.array(ts, np.int64), np.array(xs, np.int32),
        np.array(ys, np.int32), np.array(ss, np.int8),
    )
    labels = (
        Labels(np.array(label_cls, np.int8), np.array(label_marker, np.int32))
        if label_cls
        else None
    )
    width = sensor_width if sensor_width is not None else _infer_extent(stream.x)
    height = sensor_height if sensor_height is not None else _infer_extent(stream.y)
    meta = StreamMeta(width, height, _duration(stream), len(stream))
    return validate_stream(stream, meta, labels)


def _infer_extent(coords: np.ndarray) -> int:
    return int(coords.max()) + 1 if len(coords) else 1


def _duration(stream: EventStream) -> int:
    return int(stream.t.max()) + 1 if len(stream) else 0


SERIES_HEADER = "t_us,u_px,v_px,dx_mm,dy_mm"


def write_series(path: str, series) -> int:
    """Write a DisplacementSeries as plot-ready CSV; returns bytes written.

    Columns: timestamp (µs), pixel displacement (px), metric displacement
    (mm), 10 significant digits.
    """
    lines = [SERIES_HEADER]
    for i in range(len(series.t)):
        lines.append(
            f"{series.t[i]},{series.du[i]:.10g},{series.dv[i]:.10g},"
            f"{series.dx[i] * 1e3:.10g},{series.dy[i] * 1e3:.10g}"
        )
    return _atomic_write(path, ("\n".join(lines) + "\n").encode())


def read_series(path: str) -> dict[str, np.ndarray]:
    """Read a series CSV back into arrays keyed by column name (mm columns
    converted back to meters as 'dx'/'dy')."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header != SERIES_HEADER:
            raise FormatError(f"{path}: bad series header '{header}'")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    if rows and any(len(r) != 5 for r in rows):
        raise FormatError(f"{path}: malformed series row")
    cols = np.array(rows, dtype=np.float64).reshape(len(rows), 5)
    return {
        "t": cols[:, 0].astype(np.int64),
        "du": cols[:, 1],
        "dv": cols[:, 2],
        "dx": cols[:, 3] * 1e-3,
        "dy": cols[:, 4] * 1e-3,
    }
