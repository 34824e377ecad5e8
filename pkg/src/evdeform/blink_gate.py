"""Motion-event rejection by per-pixel polarity-reversal frequency.

A pixel lit by a blinking LED alternates polarity at the blink rate: the
interval between two successive same-direction reversals is one blink
period. Motion-generated events reverse polarity at the (much lower) sweep
rate, so their measured reversal frequency falls outside the accepted band
around the LED frequency.

Gating decisions are per pixel and per reversal group: when a reversal
closes a full period, all events buffered at that pixel since the previous
flush are kept iff the measured frequency is in band. Events that never see
a closing reversal (stream tail, or pixels with too little history) are
kept — insufficient evidence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from numba import njit

from .errors import StreamError
from .events import EventStream, StreamMeta

US_PER_S = 1_000_000


class ReversalDirection(Enum):
    OF = "on_to_off"   # polarity 1 -> 0
    FO = "off_to_on"   # polarity 0 -> 1


@dataclass
class PixelHistory:
    """Polarity-reversal record of one pixel."""

    last_polarity: Optional[int] = None
    last_of_reversal_t: Optional[int] = None
    prev_of_reversal_t: Optional[int] = None
    last_fo_reversal_t: Optional[int] = None
    prev_fo_reversal_t: Optional[int] = None
    buffered_events: list[int] = field(default_factory=list)

    def observe(self, t: int, s: int, index: int = -1) -> Optional[ReversalDirection]:
        """Record one event; returns the reversal direction if one occurred."""
        direction = None
        if self.last_polarity is not None and s != self.last_polarity:
            if self.last_polarity == 1:
                direction = ReversalDirection.OF
                self.prev_of_reversal_t = self.last_of_reversal_t
                self.last_of_reversal_t = t
            else:
                direction = ReversalDirection.FO
                self.prev_fo_reversal_t = self.last_fo_reversal_t
                self.last_fo_reversal_t = t
        self.last_polarity = s
        if index >= 0:
            self.buffered_events.append(index)
        return direction


def reversal_frequency(
    history: PixelHistory, direction: ReversalDirection
) -> Optional[float]:
    """Frequency from the two most recent same-direction reversals, in Hz.

    Absent (None) while fewer than two reversals are recorded in that
    direction; absence is a value, not an error.
    """
    if direction is ReversalDirection.OF:
        recent, previous = history.last_of_reversal_t, history.prev_of_reversal_t
    else:
        recent, previous = history.last_fo_reversal_t, history.prev_fo_reversal_t
    if recent is None or previous is None:
        return None
    return US_PER_S / (recent - previous)


@dataclass(frozen=True)
class BlinkGateParams:
    f_led: float                      # expected blink frequency, Hz
    f_th: Optional[float] = None      # tolerance half-width, Hz; default 0.2 * f_led
    warmup_reversals: int = 2
    pending_cap: int = 4096           # per-pixel buffered-event bound

    def __post_init__(self):
        if self.f_led <= 0:
            raise StreamError("f_led must be > 0")
        if self.f_th is None:
            object.__setattr__(self, "f_th", 0.2 * self.f_led)
        if not (0 < self.f_th < self.f_led):
            raise StreamError("f_th must satisfy 0 < f_th < f_led")

    @property
    def band(self) -> tuple[float, float]:
        return (self.f_led - self.f_th, self.f_led + self.f_th)


@njit(cache=True)
def _gate_kernel(t, x, y, width, height, f_lo, f_hi, warmup, cap):  # pragma: no cover
    # t here is timestamps; x carries pixel ids, y carries polarities
    # (flattened to keep the signature simple for numba)
    n = t.size
    keep = np.ones(n, np.bool_)
    npix = width * height
    last_pol = np.full(npix, -1, np.int8)
    last_rev = np.full(2 * npix, -1, np.int64)
    rev_count = np.zeros(npix, np.int32)
    head = np.full(npix, -1, np.int64)
    tail = np.full(npix, -1, np.int64)
    pend = np.zeros(npix, np.int32)
    nxt = np.full(n, -1, np.int64)
    evicted = 0
    for i in range(n):
        p = x[i]
        si = y[i]
        ti = t[i]
        lp = last_pol[p]
        if lp >= 0 and si != lp:
            d = 0 if lp == 1 else 1  # 0 = on->off, 1 = off->on
            rev_count[p] += 1
            t_prev = last_rev[d * npix + p]
            last_rev[d * npix + p] = ti
            if t_prev >= 0 and rev_count[p] >= warmup:
                f = US_PER_S / (ti - t_prev)
                decision = f_lo <= f <= f_hi
                j = head[p]
                while j >= 0:
                    keep[j] = decision
                    j = nxt[j]
                head[p] = -1
                tail[p] = -1
                pend[p] = 0
        if tail[p] >= 0:
            nxt[tail[p]] = i
        else:
            head[p] = i
        tail[p] = i
        pend[p] += 1
        if pend[p] > cap:
            old = head[p]
            head[p] = nxt[old]
            keep[old] = True  # evicted unclassified: insufficient evidence
            pend[p] -= 1
            evicted += 1
        last_pol[p] = si
    return keep, evicted


def gate_stream(
    stream: EventStream,
    params: BlinkGateParams,
    meta: Optional[StreamMeta] = None,
) -> tuple[EventStream, EventStream, np.ndarray, int]:
    """Partition a validated stream into blink-frequency-consistent events
    and motion-suspect events.

    Returns (kept, removed, kept_mask, evicted_count); evicted_count is the
    overflow diagnostic from the per-pixel buffer cap.
    """
    if len(stream) == 0:
        return stream, stream, np.zeros(0, dtype=bool), 0
    if meta is not None:
        width, height = meta.sensor_width, meta.sensor_height
    else:
        width, height = int(stream.x.max()) + 1, int(stream.y.max()) + 1
    pixel = stream.y.astype(np.int64) * width + stream.x.astype(np.int64)
    f_lo, f_hi = params.band
    mask, evicted = _gate_kernel(
        stream.t, pixel, stream.s.astype(np.int8), width, height,
        f_lo, f_hi, params.warmup_reversals, params.pending_cap,
    )
    return stream[mask], stream[~mask], mask, evicted
