"""Pixel-to-metric conversion and vibration statistics.

Two markers on a rigid rod of known length give the magnification
(meters per pixel) as rod_length / imaged separation; marker pixel
displacements scale linearly into planar metric deformation. A moving-
average high-pass removes sub-Hz drift (zero phase, so the waveform used
for the accelerometer-style comparison is undistorted).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import StreamError
from .tracker import CenterTrajectory

log = logging.getLogger(__name__)

REFERENCE_SAMPLES = 10  # displacement origin: mean of the first 10 samples


@dataclass(frozen=True)
class Calibration:
    rod_length: float        # meters
    pixel_separation: float  # pixels, mean imaged inter-center distance
    separation_std: float    # rigidity diagnostic, pixels

    @property
    def magnification(self) -> float:
        return self.rod_length / self.pixel_separation


@dataclass
class DisplacementSeries:
    t: np.ndarray   # int64 us
    du: np.ndarray  # px
    dv: np.ndarray  # px
    dx: np.ndarray  # meters
    dy: np.ndarray  # meters
    reference: tuple[float, float]
    magnification: float

    def __len__(self) -> int:
        return len(self.t)

    def sample_period(self) -> int:
        if len(self.t) < 2:
            raise StreamError("series too short to have a sample period")
        steps = np.diff(self.t)
        if not np.all(steps == steps[0]):
            raise StreamError("series is not uniformly sampled")
        return int(steps[0])


@dataclass
class VibrationStats:
    mean: float
    range: float
    std_dev: float
    oscillation_count: int
    dominant_freq: float


def calibrate(
    traj_a: CenterTrajectory,
    traj_b: CenterTrajectory,
    rod_length: float,
) -> Calibration:
    """Magnification from the mean imaged separation of two rod-linked markers."""
    if rod_length <= 0:
        raise StreamError("rod_length must be > 0")
    common = min(len(traj_a), len(traj_b))
    if common < 1:
        raise StreamError("trajectories share no samples")
    if not np.array_equal(traj_a.t[:common], traj_b.t[:common]):
        raise StreamError("trajectories are not time-aligned")
    sep = np.hypot(
        traj_a.u[:common] - traj_b.u[:common],
        traj_a.v[:common] - traj_b.v[:common],
    )
    mean_sep = float(sep.mean())
    if not math.isfinite(mean_sep) or mean_sep <= 0:
        raise StreamError("degenerate marker separation")
    return Calibration(rod_length, mean_sep, float(sep.std()))


def to_metric(traj: CenterTrajectory, cal: Calibration) -> DisplacementSeries:
    """Pixel trajectory to metric displacement about its startup reference."""
    k = min(REFERENCE_SAMPLES, len(traj))
    if k == 0:
        raise StreamError("empty trajectory")
    u0 = float(traj.u[:k].mean())
    v0 = float(traj.v[:k].mean())
    du = traj.u - u0
    dv = traj.v - v0
    mag = cal.magnification
    return DisplacementSeries(
        t=traj.t.copy(), du=du, dv=dv, dx=mag * du, dy=mag * dv,
        reference=(u0, v0), magnification=mag,
    )


def _moving_average(values: np.ndarray, half: int) -> np.ndarray:
    """Centered moving average with shrinking windows at the edges."""
    n = len(values)
    csum = np.concatenate(([0.0], np.cumsum(values)))
    idx = np.arange(n)
    lo = np.maximum(0, idx - half)
    hi = np.minimum(n, idx + half + 1)
    return (csum[hi] - csum[lo]) / (hi - lo)


def highpass_detrend(series: DisplacementSeries, cutoff_hz: float) -> DisplacementSeries:
    """Subtract a centered moving average of window ~ 1/cutoff_hz.

    Zero phase; DC and sub-cutoff drift are removed while the vibration
    band passes essentially unchanged.
    """
    if cutoff_hz <= 0:
        raise StreamError("cutoff_hz must be > 0")
    period = series.sample_period()
    window = round(1e6 / cutoff_hz / period)
    if window > len(series):
        raise StreamError(
            f"detrend window ({window} samples) exceeds series length ({len(series)})"
        )
    half = window // 2
    du = series.du - _moving_average(series.du, half)
    dv = series.dv - _moving_average(series.dv, half)
    return replace(
        series, du=du, dv=dv,
        dx=series.magnification * du, dy=series.magnification * dv,
    )


def _count_oscillations(values: np.ndarray) -> int:
    """Positive-going zero crossings with 10%-of-amplitude hysteresis.

    Plain crossings double-count when noise flickers around zero; the
    counter arms below -h and fires above +h, h = 10% of the half range.
    """
    h = 0.1 * (values.max() - values.min()) / 2.0
    armed = True
    count = 0
    for val in values:
        if armed and val > h:
            count += 1
            armed = False
        elif not armed and val < -h:
            armed = True
    return count


def vibration_stats(series: DisplacementSeries, axis: str = "x") -> VibrationStats:
    """Vibration summary of one metric displacement axis.

    Dominant frequency comes from the oscillation count; a discrete
    spectrum peak cross-checks it and a >5% mismatch logs a diagnostic.
    """
    if len(series) < 4:
        raise StreamError("series too short for vibration statistics")
    values = series.dx if axis == "x" else series.dy
    period_s = series.sample_period() * 1e-6
    duration_s = (len(values) - 1) * period_s
    count = _count_oscillations(values)
    dominant = count / duration_s if duration_s > 0 else 0.0

    if count > 0:
        spectrum = np.abs(np.fft.rfft(values - values.mean()))
        freqs = np.fft.rfftfreq(len(values), d=period_s)
        peak = float(freqs[int(np.argmax(spectrum[1:])) + 1])
        if dominant > 0 and abs(peak - dominant) / dominant > 0.05:
            log.warning(
                "dominant frequency mismatch: zero-crossing %.3f Hz vs spectrum peak %.3f Hz",
                dominant, peak,
            )
    return VibrationStats(
        mean=float(values.mean()),
        range=float(values.max() - values.min()),
        std_dev=float(values.std()),
        oscillation_count=count,
        dominant_freq=dominant,
    )
