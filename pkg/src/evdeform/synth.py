"""Labeled synthetic event generator.

Stands in for the physical apparatus: blinking LED disks on a rigid mount,
optional marker motion, and two noise populations. Every generated event
carries a ground-truth label, which is what lets the filter stages be
scored exactly.

Generation model: at each blink rising edge, every pixel whose center lies
inside the LED disk emits `events_per_edge_per_pixel` ON events, each
jittered uniformly within the sensor-latency window; falling edges emit OFF
events likewise. While the marker moves and the LED is lit, pixels entering
the disk emit ON events and pixels leaving emit OFF events (MOTION label).
Noise is uniform background plus a handful of hot pixels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import StreamError
from .events import EventStream, LabelClass, Labels, NO_MARKER, StreamMeta

DEFAULT_JITTER_US = 200  # mimics sensor latency spread
DEFAULT_MOTION_SAMPLE_US = 500


@dataclass(frozen=True)
class LedSpec:
    center: tuple[float, float]  # (column, row), sub-pixel
    radius: float                # pixels
    blink_hz: float
    duty: tuple[int, int] = (2, 3)  # light : dark
    events_per_edge_per_pixel: int = 1
    marker_id: int = 0
    halo_radius: float = 0.0     # extra annulus emitting sparse events; off by default
    halo_fraction: float = 0.1   # per-edge emission probability of a halo pixel

    def __post_init__(self):
        if self.blink_hz <= 0:
            raise StreamError("blink_hz must be > 0")
        if self.radius <= 0:
            raise StreamError("radius must be > 0")
        if self.duty[0] <= 0 or self.duty[1] <= 0:
            raise StreamError("duty components must be > 0")
        if self.events_per_edge_per_pixel < 1:
            raise StreamError("events_per_edge_per_pixel must be >= 1")

    @property
    def period_us(self) -> int:
        return round(1e6 / self.blink_hz)

    @property
    def on_us(self) -> int:
        light, dark = self.duty
        return round(self.period_us * light / (light + dark))

    def is_on(self, t_us: int) -> bool:
        return t_us % self.period_us < self.on_us


@dataclass(frozen=True)
class Static:
    def offset(self, t_us):
        t = np.asarray(t_us, dtype=np.float64)
        z = np.zeros_like(t)
        return z, z


@dataclass(frozen=True)
class Step:
    """Displacement to (dx, dy) starting at `at_us`, reached after `ramp_us`.

    A physical platform cannot teleport, so the step is a constant-velocity
    ramp; ramp_us controls how fast.
    """

    dx_px: float
    dy_px: float
    at_us: int
    ramp_us: int = 500_000

    def offset(self, t_us):
        t = np.asarray(t_us, dtype=np.float64)
        frac = np.clip((t - self.at_us) / max(self.ramp_us, 1), 0.0, 1.0)
        return frac * self.dx_px, frac * self.dy_px


@dataclass(frozen=True)
class Sinusoid:
    amplitude_px: float
    freq_hz: float
    axis: str = "x"  # "x" or "y"
    phase_deg: float = 0.0

    def __post_init__(self):
        if self.freq_hz <= 0:
            raise StreamError("sinusoid freq_hz must be > 0")
        if self.axis not in ("x", "y"):
            raise StreamError("sinusoid axis must be 'x' or 'y'")

    def offset(self, t_us):
        t = np.asarray(t_us, dtype=np.float64)
        val = self.amplitude_px * np.sin(
            2.0 * math.pi * self.freq_hz * t * 1e-6
            + math.radians(self.phase_deg)
        )
        zero = np.zeros_like(val)
        return (val, zero) if self.axis == "x" else (zero, val)


TrajectorySpec = Union[Static, Step, Sinusoid]


@dataclass(frozen=True)
class NoiseSpec:
    background_rate: float = 0.0   # events/s over the whole sensor
    hot_pixel_count: int = 0
    hot_pixel_rate: float = 0.0    # events/s per hot pixel

    def __post_init__(self):
        if self.background_rate < 0 or self.hot_pixel_rate < 0:
            raise StreamError("noise rates must be >= 0")
        if self.hot_pixel_count < 0:
            raise StreamError("hot_pixel_count must be >= 0")


def disk_pixels(cx: float, cy: float, radius: float) -> tuple[np.ndarray, np.ndarray]:
    """Integer pixels whose centers lie inside the circle (inclusive)."""
    x0, x1 = math.floor(cx - radius), math.ceil(cx + radius)
    y0, y1 = math.floor(cy - radius), math.ceil(cy + radius)
    xs, ys = np.meshgrid(np.arange(x0, x1 + 1), np.arange(y0, y1 + 1))
    inside = (xs - cx) ** 2 + (ys - cy) ** 2 <= radius**2
    return xs[inside].astype(np.int32), ys[inside].astype(np.int32)


def _check_bounds(led: LedSpec, cx: float, cy: float, t_us: int, meta: StreamMeta):
    r = led.radius + led.halo_radius
    if cx - r < 0 or cx + r > meta.sensor_width - 1 or cy - r < 0 or cy + r > meta.sensor_height - 1:
        raise StreamError(
            f"LED marker {led.marker_id} leaves sensor bounds at t={t_us} us"
        )


def synth_scene(
    leds: list[LedSpec],
    traj: TrajectorySpec,
    noise: NoiseSpec,
    duration: int,
    meta: StreamMeta,
    seed: int,
    jitter_us: int = DEFAULT_JITTER_US,
    motion_sample_us: int = DEFAULT_MOTION_SAMPLE_US,
) -> tuple[EventStream, Labels]:
    """Generate a labeled scene; deterministic for a given seed.

    Returns the time-sorted stream and its index-aligned labels.
    """
    if duration <= 0:
        raise StreamError("duration must be > 0")
    rng = np.random.default_rng(seed)
    parts: list[EventStream] = []
    label_parts: list[Labels] = []

    def emit(t, x, y, s, cls, marker):
        parts.append(EventStream(t, x, y, np.full(len(t), s, np.int8)))
        label_parts.append(
            Labels(np.full(len(t), cls, np.int8), np.full(len(t), marker, np.int32))
        )

    for led in leds:
        # blink edges
        edges = []
        k = 0
        while k * led.period_us < duration:
            base = k * led.period_us
            edges.append((base, 1))
            if base + led.on_us < duration:
                edges.append((base + led.on_us, 0))
            k += 1
        for te, pol in edges:
            ox, oy = traj.offset(te)
            cx, cy = led.center[0] + float(ox), led.center[1] + float(oy)
            _check_bounds(led, cx, cy, te, meta)
            px, py = disk_pixels(cx, cy, led.radius)
            rep = led.events_per_edge_per_pixel
            n = len(px) * rep
            t = te + rng.integers(0, jitter_us, size=n, dtype=np.int64)
            emit(t, np.repeat(px, rep), np.repeat(py, rep), pol,
                 LabelClass.BLINK_SIGNAL, led.marker_id)
            if led.halo_radius > 0:
                hx, hy = disk_pixels(cx, cy, led.radius + led.halo_radius)
                keys = hx.astype(np.int64) * meta.sensor_height + hy
                core = px.astype(np.int64) * meta.sensor_height + py
                ring = ~np.isin(keys, core)
                hx, hy = hx[ring], hy[ring]
                pick = rng.random(len(hx)) < led.halo_fraction
                hx, hy = hx[pick], hy[pick]
                th = te + rng.integers(0, jitter_us, size=len(hx), dtype=np.int64)
                emit(th, hx, hy, pol, LabelClass.BLINK_SIGNAL, led.marker_id)

        # motion-induced events while the LED is lit
        if not isinstance(traj, Static):
            grid = np.arange(0, duration, motion_sample_us, dtype=np.int64)
            ox, oy = traj.offset(grid)
            moved = np.flatnonzero(
                (np.diff(ox) != 0) | (np.diff(oy) != 0)
            )  # pair (i, i+1) changed
            for i in moved:
                tb = int(grid[i + 1])
                if not led.is_on(tb):
                    continue
                ax, ay = led.center[0] + ox[i], led.center[1] + oy[i]
                bx, by = led.center[0] + ox[i + 1], led.center[1] + oy[i + 1]
                _check_bounds(led, bx, by, tb, meta)
                pa_x, pa_y = disk_pixels(ax, ay, led.radius)
                pb_x, pb_y = disk_pixels(bx, by, led.radius)
                ka = pa_x.astype(np.int64) * meta.sensor_height + pa_y
                kb = pb_x.astype(np.int64) * meta.sensor_height + pb_y
                entering = np.setdiff1d(kb, ka)
                leaving = np.setdiff1d(ka, kb)
                for keys, pol in ((entering, 1), (leaving, 0)):
                    if len(keys) == 0:
                        continue
                    x = (keys // meta.sensor_height).astype(np.int32)
                    y = (keys % meta.sensor_height).astype(np.int32)
                    t = tb + rng.integers(0, jitter_us, size=len(keys), dtype=np.int64)
                    emit(t, x, y, pol, LabelClass.MOTION, led.marker_id)

    dur_s = duration * 1e-6
    if noise.background_rate > 0:
        n = int(rng.poisson(noise.background_rate * dur_s))
        emit(
            rng.integers(0, duration, size=n, dtype=np.int64),
            rng.integers(0, meta.sensor_width, size=n, dtype=np.int32),
            rng.integers(0, meta.sensor_height, size=n, dtype=np.int32),
            0, LabelClass.BACKGROUND_NOISE, NO_MARKER,
        )
        # random polarity (emit() fills a constant; overwrite)
        parts[-1].s = rng.integers(0, 2, size=n, dtype=np.int8)

    if noise.hot_pixel_count > 0 and noise.hot_pixel_rate > 0:
        for _ in range(noise.hot_pixel_count):
            hx = int(rng.integers(0, meta.sensor_width))
            hy = int(rng.integers(0, meta.sensor_height))
            n = int(rng.poisson(noise.hot_pixel_rate * dur_s))
            emit(
                rng.integers(0, duration, size=n, dtype=np.int64),
                np.full(n, hx, np.int32), np.full(n, hy, np.int32),
                0, LabelClass.THERMAL_NOISE, NO_MARKER,
            )
            parts[-1].s = rng.integers(0, 2, size=n, dtype=np.int8)

    stream = EventStream.concatenate(parts)
    labels = Labels.concatenate(label_parts)
    order = np.argsort(stream.t, kind="stable")
    return stream[order], labels[order]


@dataclass
class FilterScore:
    noise_removal_rate: float
    signal_loss_rate: float
    motion_removal_rate: float


def eval_filter(labels: Labels, kept_mask: np.ndarray) -> FilterScore:
    """Score a filter decision against ground truth.

    kept_mask[i] is True when event i survived the filter. Rates with an
    empty denominator are reported as 0.
    """
    kept_mask = np.asarray(kept_mask, dtype=bool)
    if len(kept_mask) != len(labels):
        raise StreamError(
            f"mask length {len(kept_mask)} != label length {len(labels)}"
        )
    removed = ~kept_mask

    def rate(class_mask: np.ndarray) -> float:
        total = int(class_mask.sum())
        return float((removed & class_mask).sum() / total) if total else 0.0

    noise = (labels.cls == LabelClass.BACKGROUND_NOISE) | (
        labels.cls == LabelClass.THERMAL_NOISE
    )
    return FilterScore(
        noise_removal_rate=rate(noise),
        signal_loss_rate=rate(labels.cls == LabelClass.BLINK_SIGNAL),
        motion_removal_rate=rate(labels.cls == LabelClass.MOTION),
    )
