"""Core event data model: streams, validation, timestamp binning.

Timestamps are integer microseconds everywhere; there is no floating-point
time in the core. Streams are columnar (one numpy array per field) so the
filter stages can run vectorized.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum
from typing import NamedTuple, Optional

import numpy as np

from .errors import StreamError


class Event(NamedTuple):
    """A single brightness-change sample."""

    x: int
    y: int
    t: int  # microseconds
    s: int  # 1 = brightness increase, 0 = decrease


class LabelClass(IntEnum):
    BLINK_SIGNAL = 0
    MOTION = 1
    BACKGROUND_NOISE = 2
    THERMAL_NOISE = 3


NOISE_CLASSES = (LabelClass.BACKGROUND_NOISE, LabelClass.THERMAL_NOISE)

# marker_id value meaning "no marker" (noise classes)
NO_MARKER = -1


@dataclass
class StreamMeta:
    sensor_width: int
    sensor_height: int
    duration: int  # microseconds
    count: int


@dataclass
class EventStream:
    """Columnar event stream. Arrays share one length and one ordering."""

    t: np.ndarray  # int64, microseconds
    x: np.ndarray  # int32
    y: np.ndarray  # int32
    s: np.ndarray  # int8, {0, 1}

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.int64)
        self.x = np.asarray(self.x, dtype=np.int32)
        self.y = np.asarray(self.y, dtype=np.int32)
        self.s = np.asarray(self.s, dtype=np.int8)
        n = len(self.t)
        if not (len(self.x) == len(self.y) == len(self.s) == n):
            raise StreamError("stream field arrays have mismatched lengths")

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, idx) -> "EventStream":
        return EventStream(self.t[idx], self.x[idx], self.y[idx], self.s[idx])

    def event(self, i: int) -> Event:
        return Event(int(self.x[i]), int(self.y[i]), int(self.t[i]), int(self.s[i]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            np.array_equal(self.t, other.t)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.s, other.s)
        )

    @staticmethod
    def empty() -> "EventStream":
        return EventStream(
            np.empty(0, np.int64), np.empty(0, np.int32),
            np.empty(0, np.int32), np.empty(0, np.int8),
        )

    @staticmethod
    def concatenate(parts: list["EventStream"]) -> "EventStream":
        if not parts:
            return EventStream.empty()
        return EventStream(
            np.concatenate([p.t for p in parts]),
            np.concatenate([p.x for p in parts]),
            np.concatenate([p.y for p in parts]),
            np.concatenate([p.s for p in parts]),
        )


@dataclass
class Labels:
    """Ground-truth provenance labels, aligned index-wise with a stream."""

    cls: np.ndarray        # int8, LabelClass values
    marker_id: np.ndarray  # int32, NO_MARKER for noise classes

    def __post_init__(self):
        self.cls = np.asarray(self.cls, dtype=np.int8)
        self.marker_id = np.asarray(self.marker_id, dtype=np.int32)
        if len(self.cls) != len(self.marker_id):
            raise StreamError("label arrays have mismatched lengths")

    def __len__(self) -> int:
        return len(self.cls)

    def __getitem__(self, idx) -> "Labels":
        return Labels(self.cls[idx], self.marker_id[idx])

    @staticmethod
    def empty() -> "Labels":
        return Labels(np.empty(0, np.int8), np.empty(0, np.int32))

    @staticmethod
    def concatenate(parts: list["Labels"]) -> "Labels":
        if not parts:
            return Labels.empty()
        return Labels(
            np.concatenate([p.cls for p in parts]),
            np.concatenate([p.marker_id for p in parts]),
        )


def validate_stream(
    stream: EventStream,
    meta: StreamMeta,
    labels: Optional[Labels] = None,
) -> tuple[EventStream, StreamMeta, Optional[Labels]]:
    """Sort a stream by timestamp (stable on ties) and enforce sensor bounds.

    Returns the sorted stream and a meta with corrected count. Rejects
    negative timestamps and out-of-bounds pixels (corrupt input). When
    labels are given they are permuted alongside the events.
    """
    n = len(stream)
    if labels is not None and len(labels) != n:
        raise StreamError(f"labels length {len(labels)} != stream length {n}")
    if n > 0:
        if int(stream.t.min()) < 0:
            raise StreamError("negative timestamp in stream")
        if int(stream.x.min()) < 0 or int(stream.x.max()) >= meta.sensor_width:
            raise StreamError(
                f"pixel column out of bounds [0, {meta.sensor_width})"
            )
        if int(stream.y.min()) < 0 or int(stream.y.max()) >= meta.sensor_height:
            raise StreamError(
                f"pixel row out of bounds [0, {meta.sensor_height})"
            )
        bad = (stream.s != 0) & (stream.s != 1)
        if bad.any():
            raise StreamError("polarity outside {0, 1}")
    order = np.argsort(stream.t, kind="stable")
    out = stream[order]
    out_labels = labels[order] if labels is not None else None
    return out, replace(meta, count=n), out_labels


def bin_timestamps(stream: EventStream, bin_width: int) -> np.ndarray:
    """Quantize timestamps to bins of bin_width microseconds.

    Returns the binned timestamp array t' = floor(t / bin_width) * bin_width;
    the stream itself (original timestamps, ordering, count) is untouched.
    """
    if bin_width < 1:
        raise StreamError(f"bin_width must be >= 1, got {bin_width}")
    return (stream.t // bin_width) * bin_width
