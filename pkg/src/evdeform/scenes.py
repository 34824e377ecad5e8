"""Named synthetic scenes: the test matrix used by the acceptance suite and
the CLI presets.

Geometry convention shared by all presets: 1280x720 sensor, 100 Hz LEDs
with 2:3 duty, and (for two-marker scenes) a 1 m rod imaged at 250 px
separation, i.e. 4 mm/px.
"""

from __future__ import annotations

from dataclasses import dataclass

from .events import EventStream, Labels, StreamMeta
from .synth import (
    LedSpec,
    NoiseSpec,
    Sinusoid,
    Static,
    Step,
    TrajectorySpec,
    synth_scene,
)

SENSOR = StreamMeta(sensor_width=1280, sensor_height=720, duration=0, count=0)
ROD_LENGTH_M = 1.0
ROD_SEPARATION_PX = 250.0
MM_PER_PX = ROD_LENGTH_M / ROD_SEPARATION_PX * 1e3  # 4 mm/px
BLINK_HZ = 100.0
DUTY = (2, 3)
RADIUS = 6.0
EVENTS_PER_EDGE = 3

STANDARD_NOISE = NoiseSpec(
    background_rate=5e3, hot_pixel_count=5, hot_pixel_rate=1e3
)


@dataclass
class Scene:
    leds: list[LedSpec]
    traj: TrajectorySpec
    noise: NoiseSpec
    duration: int
    meta: StreamMeta

    def generate(self, seed: int) -> tuple[EventStream, Labels]:
        return synth_scene(
            self.leds, self.traj, self.noise, self.duration, self.meta, seed
        )


def _led(center, marker_id, eppp=EVENTS_PER_EDGE) -> LedSpec:
    return LedSpec(
        center=center, radius=RADIUS, blink_hz=BLINK_HZ, duty=DUTY,
        events_per_edge_per_pixel=eppp, marker_id=marker_id,
    )


def standard_noisy() -> Scene:
    """Two static 100 Hz LEDs under the standard noise load, 3 s."""
    return Scene(
        leds=[_led((500.0, 360.0), 0), _led((750.0, 360.0), 1)],
        traj=Static(),
        noise=STANDARD_NOISE,
        duration=3_000_000,
        meta=SENSOR,
    )


def standard_moving() -> Scene:
    """One large LED sweeping sinusoidally: the motion-rejection benchmark."""
    led = LedSpec(
        center=(640.0, 360.0), radius=12.0, blink_hz=BLINK_HZ, duty=DUTY,
        events_per_edge_per_pixel=EVENTS_PER_EDGE, marker_id=0,
    )
    return Scene(
        leds=[led],
        traj=Sinusoid(amplitude_px=2.0, freq_hz=5.0, axis="x"),
        noise=NoiseSpec(),
        duration=4_000_000,
        meta=SENSOR,
    )


def static_jitter() -> Scene:
    """One static LED at an integer pixel center with standard noise, 3 s."""
    return Scene(
        leds=[_led((640.0, 360.0), 0)],
        traj=Static(),
        noise=STANDARD_NOISE,
        duration=3_000_000,
        meta=SENSOR,
    )


def step_mm(displacement_mm: float, seed_axis: str = "x") -> Scene:
    """Two rod-linked markers under a common metric step along x.

    The step runs as a <= 250 px/s ramp starting at 0.4 s, then settles.
    """
    step_px = displacement_mm / MM_PER_PX
    ramp_us = max(200_000, int(abs(step_px) / 250.0 * 1e6))
    settle_us = 800_000
    return Scene(
        leds=[_led((640.0, 200.0), 0), _led((640.0, 450.0), 1)],
        traj=Step(dx_px=-step_px, dy_px=0.0, at_us=400_000, ramp_us=ramp_us),
        noise=STANDARD_NOISE,
        duration=400_000 + ramp_us + settle_us,
        meta=SENSOR,
    )


def sinusoid_50hz(amplitude_px: float = 1.5) -> Scene:
    """Two rod-linked markers vibrating at 50 Hz for 2.5 s (shaker analogue).

    The 90 degree phase puts the blink edges on the waveform peaks, so the
    sampled positions span the full stroke.
    """
    return Scene(
        leds=[
            _led((640.0, 260.0), 0, eppp=5),
            _led((640.0, 510.0), 1, eppp=5),
        ],
        traj=Sinusoid(amplitude_px=amplitude_px, freq_hz=50.0, axis="x", phase_deg=90.0),
        noise=NoiseSpec(),
        # 20 ms tracker seed lead-in plus the 2.5 s measurement window
        duration=2_520_000,
        meta=SENSOR,
    )


def throughput(n_target: int = 1_000_000) -> Scene:
    """Dense stream for benchmarking: heavy background over many LEDs."""
    duration = 2_000_000
    leds = [
        _led((200.0 + 120.0 * i, 200.0 + 50.0 * (i % 2), ), i, eppp=4)
        for i in range(8)
    ]
    # expected LED events: 8 disks * ~113 px * 4 * 2 edges * 100 Hz * 2 s ~ 1.45M
    background = max(0.0, (n_target - 1_450_000)) / (duration * 1e-6)
    return Scene(
        leds=leds,
        traj=Static(),
        noise=NoiseSpec(background_rate=background + 5e4),
        duration=duration,
        meta=SENSOR,
    )


PRESETS = {
    "standard_noisy": standard_noisy,
    "standard_moving": standard_moving,
    "static_jitter": static_jitter,
    "step_50mm": lambda: step_mm(50.0),
    "step_100mm": lambda: step_mm(100.0),
    "step_500mm": lambda: step_mm(500.0),
    "step_800mm": lambda: step_mm(800.0),
    "sinusoid_50hz": sinusoid_50hz,
    "throughput": throughput,
}
