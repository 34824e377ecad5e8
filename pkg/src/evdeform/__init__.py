"""evdeform: event-camera LED marker pipeline for planar deformation
measurement — denoising, blink-frequency gating, sub-pixel cluster
tracking, pixel-to-metric conversion, and a labeled synthetic oracle."""

from .blink_gate import BlinkGateParams, PixelHistory, ReversalDirection, gate_stream, reversal_frequency
from .config import RunConfig, SceneConfig, apply_setting, dump_config, load_config, parse_config_text
from .deform import (
    Calibration,
    DisplacementSeries,
    VibrationStats,
    calibrate,
    highpass_detrend,
    to_metric,
    vibration_stats,
)
from .denoise import DenoiseParams, coarse_count_filter, denoise_two_stage, spatiotemporal_filter
from .events import (
    Event,
    EventStream,
    LabelClass,
    Labels,
    StreamMeta,
    bin_timestamps,
    validate_stream,
)
from .stream_io import EventFileFormat, read_events, read_series, write_events, write_series
from .synth import (
    FilterScore,
    LedSpec,
    NoiseSpec,
    Sinusoid,
    Static,
    Step,
    disk_pixels,
    eval_filter,
    synth_scene,
)
from .pipeline import RunReport, bench, run_pipeline
from .scenes import PRESETS, Scene
from .tracker import (
    CenterTrajectory,
    ClusterState,
    TrackerParams,
    admit_event,
    expire_members,
    mahalanobis,
    seed_clusters,
    track,
)

__version__ = "0.1.0"
