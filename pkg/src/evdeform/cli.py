"""Command-line front end.

Subcommands: synth, denoise, gate, track, measure, pipeline, stats, bench.
Exit codes: 0 success, 2 config error, 3 data error, 4 stage failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import stream_io
from .blink_gate import BlinkGateParams, gate_stream
from .config import RunConfig, apply_setting, load_config
from .deform import (
    DisplacementSeries,
    calibrate,
    highpass_detrend,
    to_metric,
    vibration_stats,
)
from .denoise import DenoiseParams, denoise_two_stage
from .errors import ConfigError, FormatError, StageError, StreamError
from .events import StreamMeta
from .scenes import PRESETS
from .stream_io import EventFileFormat
from .synth import eval_filter
from .tracker import TrackerParams, track

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_STAGE = 4


def _fmt(name: str) -> EventFileFormat:
    return EventFileFormat.TEXT_CSV if name == "csv" else EventFileFormat.BINARY_PACKED


def _add_io(parser, output=True):
    parser.add_argument("--in", dest="input", required=True, help="input stream path")
    parser.add_argument("--format", choices=["csv", "bin"], default="csv")
    if output:
        parser.add_argument("--out", required=True, help="output stream path")


def cmd_synth(args) -> int:
    try:
        scene = PRESETS[args.preset]()
    except KeyError:
        raise ConfigError(
            f"unknown preset '{args.preset}' (choices: {', '.join(sorted(PRESETS))})"
        ) from None
    stream, labels = scene.generate(args.seed)
    meta = StreamMeta(
        scene.meta.sensor_width, scene.meta.sensor_height, scene.duration, len(stream)
    )
    fmt = _fmt(args.format)
    written = stream_io.write_events(
        args.out, stream, meta, fmt,
        labels if fmt is EventFileFormat.TEXT_CSV and not args.no_labels else None,
    )
    print(f"synth: {len(stream)} events ({written} bytes) -> {args.out}")
    return EXIT_OK


def cmd_denoise(args) -> int:
    stream, meta, labels = stream_io.read_events(args.input, _fmt(args.format))
    params = DenoiseParams(
        n_th=args.n_th, t_x=args.t_x, t_y=args.t_y, t_t=args.t_t,
        bin_width=args.bin_width,
    )
    result = denoise_two_stage(stream, params, meta)
    stream_io.write_events(args.out, result.kept, meta, _fmt(args.format))
    removed = len(stream) - len(result.kept)
    pct = 100.0 * removed / len(stream) if len(stream) else 0.0
    print(f"denoise: {len(stream)} -> {len(result.kept)} events "
          f"(removed {removed}, {pct:.2f}%)")
    if labels is not None:
        score = eval_filter(labels, result.kept_mask)
        print(f"denoise: noise_removal={score.noise_removal_rate:.4f} "
              f"signal_loss={score.signal_loss_rate:.4f} "
              f"motion_removal={score.motion_removal_rate:.4f}")
    return EXIT_OK


def cmd_gate(args) -> int:
    stream, meta, labels = stream_io.read_events(args.input, _fmt(args.format))
    params = BlinkGateParams(f_led=args.f_led, f_th=args.f_th)
    kept, _, mask, evicted = gate_stream(stream, params, meta)
    stream_io.write_events(args.out, kept, meta, _fmt(args.format))
    print(f"gate: {len(stream)} -> {len(kept)} events (evicted {evicted})")
    if labels is not None:
        score = eval_filter(labels, mask)
        print(f"gate: noise_removal={score.noise_removal_rate:.4f} "
              f"signal_loss={score.signal_loss_rate:.4f} "
              f"motion_removal={score.motion_removal_rate:.4f}")
    return EXIT_OK


def cmd_track(args) -> int:
    stream, meta, _ = stream_io.read_events(args.input, _fmt(args.format))
    params = TrackerParams(
        d_th=args.d_th, t_su=args.t_su, sample_period=args.sample_period
    )
    result = track(stream, params, args.markers)
    for mid, traj in sorted(result.trajectories.items()):
        zeros = np.zeros(len(traj))
        series = DisplacementSeries(
            t=traj.t, du=traj.u, dv=traj.v, dx=zeros, dy=zeros,
            reference=(0.0, 0.0), magnification=0.0,
        )
        path = args.out.replace("{marker}", str(mid))
        stream_io.write_series(path, series)
        print(f"track: marker {mid}: {len(traj)} samples -> {path}")
    print(f"track: discarded {result.discarded} events")
    return EXIT_OK


def _read_trajectory(path: str):
    from .tracker import CenterTrajectory

    cols = stream_io.read_series(path)
    n = len(cols["t"])
    return CenterTrajectory(
        marker_id=0, t=cols["t"], u=cols["du"], v=cols["dv"],
        stale=np.zeros(n, dtype=bool),
    )


def cmd_measure(args) -> int:
    traj_a = _read_trajectory(args.traj_a)
    traj_b = _read_trajectory(args.traj_b)
    cal = calibrate(traj_a, traj_b, args.rod_length)
    series = to_metric(traj_a, cal)
    detrended = highpass_detrend(series, args.cutoff_hz)
    stream_io.write_series(args.out, detrended)
    stats = vibration_stats(detrended)
    print(f"measure: magnification {cal.magnification * 1e3:.6f} mm/px "
          f"(separation {cal.pixel_separation:.3f} px)")
    print(f"measure: mean={stats.mean * 1e3:.4f} mm range={stats.range * 1e3:.4f} mm "
          f"std={stats.std_dev * 1e3:.4f} mm oscillations={stats.oscillation_count} "
          f"dominant={stats.dominant_freq:.2f} Hz")
    return EXIT_OK


def cmd_stats(args) -> int:
    cols = stream_io.read_series(args.input)
    series = DisplacementSeries(
        t=cols["t"], du=cols["du"], dv=cols["dv"], dx=cols["dx"], dy=cols["dy"],
        reference=(0.0, 0.0), magnification=1.0,
    )
    stats = vibration_stats(series, axis=args.axis)
    print(f"stats: mean={stats.mean * 1e3:.4f} mm range={stats.range * 1e3:.4f} mm "
          f"std={stats.std_dev * 1e3:.4f} mm oscillations={stats.oscillation_count} "
          f"dominant={stats.dominant_freq:.2f} Hz")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    from .pipeline import run_pipeline

    config = load_config(args.config) if args.config else RunConfig()
    for setting in args.set or []:
        target, _, raw = setting.partition("=")
        section, _, key = target.strip().partition(".")
        if not raw or not key:
            raise ConfigError(f"--set expects section.key=value, got '{setting}'")
        apply_setting(config, section, key.strip(), raw.strip())
    if args.out_dir:
        config.out_dir = args.out_dir
    if args.seed is not None:
        config.seed = args.seed
    report = run_pipeline(config)
    sys.stdout.write(report.text())
    return EXIT_OK


def cmd_bench(args) -> int:
    from .pipeline import bench
    from .scenes import throughput

    scene = throughput(args.events)
    stream, _ = scene.generate(args.seed)
    meta = StreamMeta(
        scene.meta.sensor_width, scene.meta.sensor_height, scene.duration, len(stream)
    )
    report = bench(stream, DenoiseParams(), meta)
    print(report.text())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evdeform",
        description="Event-camera LED marker pipeline: denoise, gate, track, measure.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a labeled synthetic scene")
    p.add_argument("--preset", default="standard_noisy")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["csv", "bin"], default="csv")
    p.add_argument("--no-labels", action="store_true")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("denoise", help="two-stage observation-noise filter")
    _add_io(p)
    p.add_argument("--n-th", type=int, default=5)
    p.add_argument("--t-x", type=int, default=2)
    p.add_argument("--t-y", type=int, default=2)
    p.add_argument("--t-t", type=int, default=300)
    p.add_argument("--bin-width", type=int, default=100)
    p.set_defaults(fn=cmd_denoise)

    p = sub.add_parser("gate", help="reject motion events by reversal frequency")
    _add_io(p)
    p.add_argument("--f-led", type=float, required=True)
    p.add_argument("--f-th", type=float, default=None)
    p.set_defaults(fn=cmd_gate)

    p = sub.add_parser("track", help="track marker centers")
    _add_io(p, output=False)
    p.add_argument("--markers", type=int, required=True)
    p.add_argument("--out", required=True,
                   help="per-marker series path; '{marker}' expands to the id")
    p.add_argument("--d-th", type=float, default=3.0)
    p.add_argument("--t-su", type=int, default=10_000)
    p.add_argument("--sample-period", type=int, default=1000)
    p.set_defaults(fn=cmd_track)

    p = sub.add_parser("measure", help="pixel trajectories to metric deformation")
    p.add_argument("--traj-a", required=True)
    p.add_argument("--traj-b", required=True)
    p.add_argument("--rod-length", type=float, required=True, help="meters")
    p.add_argument("--cutoff-hz", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_measure)

    p = sub.add_parser("pipeline", help="full run from a config file")
    p.add_argument("--config", default=None)
    p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE")
    p.add_argument("--out-dir", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=cmd_pipeline)

    p = sub.add_parser("stats", help="vibration statistics of a series CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--axis", choices=["x", "y"], default="x")
    p.set_defaults(fn=cmd_stats)

    p = sub.add_parser("bench", help="denoise throughput benchmark")
    p.add_argument("--events", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FormatError, StreamError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except StageError as exc:
        print(f"stage failure: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
