"""End-to-end runs: synth/read -> denoise -> gate -> track -> measure.

Each stage is timed and counted; the report echoes the full config so a run
can be reproduced byte-identically from the report alone.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import stream_io
from .blink_gate import gate_stream
from .config import RunConfig, dump_config
from .deform import calibrate, highpass_detrend, to_metric, vibration_stats
from .denoise import denoise_two_stage
from .errors import EvdeformError, StageError
from .events import EventStream, Labels, StreamMeta, validate_stream
from .stream_io import EventFileFormat
from .synth import eval_filter
from .tracker import TrackResult, track


@dataclass
class StageRecord:
    name: str
    events_in: int
    events_out: int
    seconds: float


@dataclass
class RunReport:
    stages: list[StageRecord] = field(default_factory=list)
    scores: dict[str, dict] = field(default_factory=dict)
    trajectory_stats: dict = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    config_echo: str = ""
    complete: bool = False

    def text(self, include_timing: bool = True) -> str:
        """Render the report; the on-disk copy omits timings so identical
        (config, seed) runs produce byte-identical files."""
        lines = ["# evdeform run report", ""]
        lines.append("## stages")
        for st in self.stages:
            timing = f" in {st.seconds:.3f} s" if include_timing else ""
            lines.append(
                f"{st.name}: {st.events_in} -> {st.events_out} events{timing}"
            )
        if self.scores:
            lines.append("")
            lines.append("## filter scores (vs ground-truth labels)")
            for name, sc in self.scores.items():
                lines.append(
                    f"{name}: noise_removal={sc['noise_removal_rate']:.4f} "
                    f"signal_loss={sc['signal_loss_rate']:.4f} "
                    f"motion_removal={sc['motion_removal_rate']:.4f}"
                )
        if self.trajectory_stats:
            lines.append("")
            lines.append("## trajectories")
            for mid, st in self.trajectory_stats.items():
                lines.append(f"marker {mid}: {st}")
        if self.outputs:
            lines.append("")
            lines.append("## outputs")
            lines.extend(self.outputs)
        lines.append("")
        lines.append("## config (reproduces this run)")
        lines.append(self.config_echo.rstrip())
        lines.append("")
        lines.append(f"complete: {self.complete}")
        return "\n".join(lines) + "\n"


def _score_dict(labels: Labels, mask: np.ndarray) -> dict:
    score = eval_filter(labels, mask)
    return {
        "noise_removal_rate": score.noise_removal_rate,
        "signal_loss_rate": score.signal_loss_rate,
        "motion_removal_rate": score.motion_removal_rate,
    }


def run_pipeline(config: RunConfig) -> RunReport:
    """Execute the full chain per the config; raises StageError on failure."""
    report = RunReport(config_echo=dump_config(config))
    os.makedirs(config.out_dir, exist_ok=True)

    # --- acquire ---------------------------------------------------------
    labels: Optional[Labels] = None
    try:
        t0 = time.perf_counter()
        if config.input:
            fmt = (
                EventFileFormat.TEXT_CSV
                if config.input_format == "csv"
                else EventFileFormat.BINARY_PACKED
            )
            stream, meta, labels = stream_io.read_events(config.input, fmt)
            name = "read"
        else:
            scene = config.scene.build()
            stream, labels = scene.generate(config.seed)
            meta = StreamMeta(
                scene.meta.sensor_width, scene.meta.sensor_height,
                scene.duration, len(stream),
            )
            stream, meta, labels = validate_stream(stream, meta, labels)
            name = "synth"
        report.stages.append(
            StageRecord(name, len(stream), len(stream), time.perf_counter() - t0)
        )
    except EvdeformError as exc:
        raise StageError("acquire", str(exc)) from exc

    if config.write_intermediate:
        path = os.path.join(config.out_dir, "raw.csv")
        stream_io.write_events(path, stream, meta, EventFileFormat.TEXT_CSV, labels)
        report.outputs.append(path)

    # --- denoise ---------------------------------------------------------
    try:
        t0 = time.perf_counter()
        den = denoise_two_stage(stream, config.denoise, meta)
        report.stages.append(
            StageRecord("denoise", len(stream), len(den.kept), time.perf_counter() - t0)
        )
    except EvdeformError as exc:
        raise StageError("denoise", str(exc)) from exc
    if labels is not None:
        report.scores["denoise"] = _score_dict(labels, den.kept_mask)
        labels_kept = labels[den.kept_mask]
    else:
        labels_kept = None
    if config.write_intermediate:
        path = os.path.join(config.out_dir, "denoised.csv")
        stream_io.write_events(path, den.kept, meta, EventFileFormat.TEXT_CSV, labels_kept)
        report.outputs.append(path)

    # --- gate ------------------------------------------------------------
    if config.gate_enabled:
        try:
            t0 = time.perf_counter()
            kept, _, gate_mask, evicted = gate_stream(den.kept, config.gate_params(), meta)
            report.stages.append(
                StageRecord("gate", len(den.kept), len(kept), time.perf_counter() - t0)
            )
        except EvdeformError as exc:
            raise StageError("gate", str(exc)) from exc
        if labels is not None:
            combined = den.kept_mask.copy()
            combined[den.kept_mask] = gate_mask
            report.scores["denoise+gate"] = _score_dict(labels, combined)
            labels_kept = labels[combined]
        if config.write_intermediate:
            path = os.path.join(config.out_dir, "gated.csv")
            stream_io.write_events(path, kept, meta, EventFileFormat.TEXT_CSV, labels_kept)
            report.outputs.append(path)
    else:
        kept = den.kept

    # --- track -----------------------------------------------------------
    try:
        t0 = time.perf_counter()
        tracked: TrackResult = track(kept, config.tracker, config.markers)
        report.stages.append(
            StageRecord("track", len(kept), len(tracked.trajectories), time.perf_counter() - t0)
        )
    except EvdeformError as exc:
        raise StageError("track", str(exc)) from exc

    # --- measure ---------------------------------------------------------
    try:
        t0 = time.perf_counter()
        trajs = tracked.trajectories
        series_by_marker = {}
        if config.markers >= 2 and len(trajs) >= 2:
            ids = sorted(trajs)
            cal = calibrate(trajs[ids[0]], trajs[ids[1]], config.rod_length)
            for mid in ids:
                series = to_metric(trajs[mid], cal)
                series_by_marker[mid] = series
                path = os.path.join(config.out_dir, f"displacement_marker{mid}.csv")
                stream_io.write_series(path, series)
                report.outputs.append(path)
                stats = vibration_stats(highpass_detrend(series, config.cutoff_hz))
                report.trajectory_stats[mid] = {
                    "mean_m": stats.mean, "range_m": stats.range,
                    "std_m": stats.std_dev,
                    "oscillations": stats.oscillation_count,
                    "dominant_hz": stats.dominant_freq,
                    "pixel_separation": cal.pixel_separation,
                }
        report.stages.append(
            StageRecord("measure", len(trajs), len(series_by_marker), time.perf_counter() - t0)
        )
    except EvdeformError as exc:
        raise StageError("measure", str(exc)) from exc

    report.complete = True
    report_path = os.path.join(config.out_dir, "report.txt")
    tmp = report_path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(report.text(include_timing=False))
    os.replace(tmp, report_path)
    report.outputs.append(report_path)
    return report


@dataclass
class BenchReport:
    stage_rates: dict[str, float]   # events/second
    n_events: int
    deterministic: bool
    peak_bytes_estimate: int

    def text(self) -> str:
        lines = [f"benchmark over {self.n_events} events"]
        for name, rate in self.stage_rates.items():
            lines.append(f"{name}: {rate:,.0f} events/s")
        lines.append(f"deterministic: {self.deterministic}")
        lines.append(f"peak memory estimate: {self.peak_bytes_estimate / 1e6:.1f} MB")
        return "\n".join(lines)


def bench(stream: EventStream, params, meta: StreamMeta, repeats: int = 3) -> BenchReport:
    """Throughput of the denoise stages on a large stream.

    Runs each stage `repeats` times (after a jit warm-up on a slice) and
    reports the best rate; also verifies the outputs are bit-identical
    across runs.
    """
    from .denoise import coarse_count_filter, spatiotemporal_filter

    if len(stream) < 1_000_000:
        raise StageError("bench", f"need >= 1e6 events, got {len(stream)}")
    warm = stream[: 10_000]
    coarse_count_filter(warm, params)
    spatiotemporal_filter(warm, params, meta)

    rates = {}
    baseline_masks = {}
    deterministic = True
    for name, fn in (
        ("coarse", lambda s: coarse_count_filter(s, params)[2]),
        ("spatiotemporal", lambda s: spatiotemporal_filter(s, params, meta)[2]),
        ("two_stage", lambda s: denoise_two_stage(s, params, meta).kept_mask),
    ):
        best = float("inf")
        for _ in range(repeats):
            t0 = time.perf_counter()
            mask = fn(stream)
            best = min(best, time.perf_counter() - t0)
            if name in baseline_masks:
                deterministic &= bool(np.array_equal(mask, baseline_masks[name]))
            else:
                baseline_masks[name] = mask
        rates[name] = len(stream) / best
    per_event = stream.t.nbytes + stream.x.nbytes + stream.y.nbytes + stream.s.nbytes
    maps = 2 * meta.sensor_width * meta.sensor_height * 8
    return BenchReport(
        stage_rates=rates,
        n_events=len(stream),
        deterministic=deterministic,
        peak_bytes_estimate=2 * per_event + maps,
    )
