"""Two-stage observation-noise filter.

Stage 1 (coarse): events whose timestamp bin holds fewer than n_th events
are noise — an LED edge lights up the whole disk at once, so real signal
always arrives in bursts.

Stage 2 (spatiotemporal): among the coarse survivors, an event is kept only
if some other surviving event lies within +-t_x columns, +-t_y rows and
+-t_t microseconds. Noise removed in stage 1 cannot vouch for anything in
stage 2.

The stage-2 search uses per-pixel latest/next timestamp maps swept forward
and backward (numba-compiled), which is exactly equivalent to the O(n^2)
pairwise search but near-linear.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .errors import StreamError
from .events import EventStream, StreamMeta, bin_timestamps


@dataclass(frozen=True)
class DenoiseParams:
    n_th: int = 5          # min events per timestamp bin
    t_x: int = 2           # spatial threshold, columns
    t_y: int = 2           # spatial threshold, rows
    t_t: int = 300         # temporal threshold, us
    bin_width: int = 100   # us

    def __post_init__(self):
        if self.n_th < 1:
            raise StreamError("n_th must be >= 1")
        if self.t_x < 1 or self.t_y < 1 or self.t_t < 1:
            raise StreamError("t_x, t_y, t_t must be >= 1")
        if self.bin_width < 1:
            raise StreamError("bin_width must be >= 1")


@dataclass
class DenoiseResult:
    kept: EventStream
    removed: EventStream
    kept_mask: np.ndarray    # bool, indexes the original stream
    coarse_mask: np.ndarray  # bool, stage-1 survivors in the original stream


def coarse_count_filter(
    stream: EventStream, params: DenoiseParams
) -> tuple[EventStream, EventStream, np.ndarray]:
    """Drop every event whose bin population is below n_th.

    Returns (kept, removed, kept_mask); both outputs preserve input order.
    """
    if len(stream) == 0:
        return stream, stream, np.zeros(0, dtype=bool)
    bins = bin_timestamps(stream, params.bin_width)
    _, inverse, counts = np.unique(bins, return_inverse=True, return_counts=True)
    mask = counts[inverse] >= params.n_th
    return stream[mask], stream[~mask], mask


@njit(cache=True)
def _neighbor_support(t, x, y, width, height, t_x, t_y, t_t):  # pragma: no cover
    n = t.size
    keep = np.zeros(n, np.bool_)
    far = np.int64(1) << 62
    stamp = np.full(width * height, -far, np.int64)
    # forward: does an earlier event lie in the window?
    for i in range(n):
        xi, yi, ti = x[i], y[i], t[i]
        found = False
        for yy in range(max(0, yi - t_y), min(height - 1, yi + t_y) + 1):
            base = yy * width
            for xx in range(max(0, xi - t_x), min(width - 1, xi + t_x) + 1):
                if ti - stamp[base + xx] <= t_t:
                    found = True
                    break
            if found:
                break
        keep[i] = found
        stamp[yi * width + xi] = ti
    # backward: does a later event lie in the window?
    stamp[:] = far
    for i in range(n - 1, -1, -1):
        xi, yi, ti = x[i], y[i], t[i]
        if not keep[i]:
            found = False
            for yy in range(max(0, yi - t_y), min(height - 1, yi + t_y) + 1):
                base = yy * width
                for xx in range(max(0, xi - t_x), min(width - 1, xi + t_x) + 1):
                    if stamp[base + xx] - ti <= t_t:
                        found = True
                        break
                if found:
                    break
            keep[i] = found
        stamp[yi * width + xi] = ti
    return keep


def spatiotemporal_filter(
    stream: EventStream,
    params: DenoiseParams,
    meta: Optional[StreamMeta] = None,
) -> tuple[EventStream, EventStream, np.ndarray]:
    """Keep each event iff a distinct event lies within the
    (t_x, t_y, t_t) window; polarity is ignored. Raw timestamps, not bins.

    Requires the stream sorted by t (the validate_stream contract).
    """
    if len(stream) == 0:
        return stream, stream, np.zeros(0, dtype=bool)
    if meta is not None:
        width, height = meta.sensor_width, meta.sensor_height
    else:
        width, height = int(stream.x.max()) + 1, int(stream.y.max()) + 1
    mask = _neighbor_support(
        stream.t, stream.x.astype(np.int64), stream.y.astype(np.int64),
        width, height, params.t_x, params.t_y, params.t_t,
    )
    return stream[mask], stream[~mask], mask


def denoise_two_stage(
    stream: EventStream,
    params: DenoiseParams,
    meta: Optional[StreamMeta] = None,
) -> DenoiseResult:
    """Coarse count filter, then spatiotemporal refinement of its survivors."""
    kept1, _, coarse_mask = coarse_count_filter(stream, params)
    _, _, mask2 = spatiotemporal_filter(kept1, params, meta)
    kept_mask = coarse_mask.copy()
    kept_mask[coarse_mask] = mask2
    return DenoiseResult(
        kept=stream[kept_mask],
        removed=stream[~kept_mask],
        kept_mask=kept_mask,
        coarse_mask=coarse_mask,
    )
