"""Run configuration: flat `key = value` sections, strict about unknown keys.

Every key has a default; anything not understood is rejected so typos fail
loudly instead of silently running with defaults. CLI flags override file
values (flag wins).
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields
from typing import Optional

from .blink_gate import BlinkGateParams
from .denoise import DenoiseParams
from .errors import ConfigError
from .events import StreamMeta
from .scenes import PRESETS, Scene
from .synth import LedSpec, NoiseSpec, Sinusoid, Static, Step
from .tracker import TrackerParams


@dataclass
class SceneConfig:
    preset: str = "standard_noisy"
    # explicit-scene keys; used only when preset == "custom"
    width: int = 1280
    height: int = 720
    duration_us: int = 3_000_000
    led_centers: str = "500,360;750,360"   # "x,y;x,y;..."
    radius: float = 6.0
    blink_hz: float = 100.0
    duty: str = "2:3"
    events_per_edge: int = 3
    trajectory: str = "static"  # static | step:dx,dy,at_us,ramp_us | sine:amp,hz,axis[,phase_deg]
    background_rate: float = 0.0
    hot_pixel_count: int = 0
    hot_pixel_rate: float = 0.0

    def build(self) -> Scene:
        if self.preset != "custom":
            try:
                return PRESETS[self.preset]()
            except KeyError:
                raise ConfigError(
                    f"unknown scene preset '{self.preset}' "
                    f"(choices: {', '.join(sorted(PRESETS))}, custom)"
                ) from None
        try:
            light, dark = (int(v) for v in self.duty.split(":"))
            leds = []
            for i, pair in enumerate(self.led_centers.split(";")):
                cx, cy = (float(v) for v in pair.split(","))
                leds.append(
                    LedSpec(
                        center=(cx, cy), radius=self.radius, blink_hz=self.blink_hz,
                        duty=(light, dark),
                        events_per_edge_per_pixel=self.events_per_edge, marker_id=i,
                    )
                )
            kind, _, args = self.trajectory.partition(":")
            if kind == "static":
                traj = Static()
            elif kind == "step":
                dx, dy, at_us, ramp_us = (float(v) for v in args.split(","))
                traj = Step(dx, dy, int(at_us), int(ramp_us))
            elif kind == "sine":
                parts = args.split(",")
                amp, hz, axis = parts[:3]
                phase = float(parts[3]) if len(parts) > 3 else 0.0
                traj = Sinusoid(float(amp), float(hz), axis, phase)
            else:
                raise ConfigError(f"unknown trajectory kind '{kind}'")
        except (ValueError, IndexError) as exc:
            raise ConfigError(f"bad scene value: {exc}") from None
        noise = NoiseSpec(self.background_rate, self.hot_pixel_count, self.hot_pixel_rate)
        meta = StreamMeta(self.width, self.height, 0, 0)
        return Scene(leds, traj, noise, self.duration_us, meta)


@dataclass
class RunConfig:
    seed: int = 0
    out_dir: str = "."
    write_intermediate: bool = False
    markers: int = 2
    input: str = ""          # path to a pre-recorded stream; empty = synthesize
    input_format: str = "csv"
    rod_length: float = 1.0  # meters
    cutoff_hz: float = 1.0
    scene: SceneConfig = field(default_factory=SceneConfig)
    denoise: DenoiseParams = field(default_factory=DenoiseParams)
    gate_enabled: bool = True
    gate_f_led: float = 100.0
    gate_f_th: float = 20.0
    gate_warmup_reversals: int = 2
    gate_pending_cap: int = 4096
    tracker: TrackerParams = field(default_factory=TrackerParams)

    def gate_params(self) -> BlinkGateParams:
        return BlinkGateParams(
            f_led=self.gate_f_led, f_th=self.gate_f_th,
            warmup_reversals=self.gate_warmup_reversals,
            pending_cap=self.gate_pending_cap,
        )


_SECTIONS = {
    "run": {
        "seed": int, "out_dir": str, "write_intermediate": bool, "markers": int,
        "input": str, "input_format": str,
    },
    "scene": {f.name: f.type for f in fields(SceneConfig)},
    "denoise": {"n_th": int, "t_x": int, "t_y": int, "t_t": int, "bin_width": int},
    "gate": {
        "enabled": bool, "f_led": float, "f_th": float,
        "warmup_reversals": int, "pending_cap": int,
    },
    "tracker": {
        "d_th": float, "t_su": int, "var_floor": float, "sample_period": int,
        "min_seed_events": int, "seed_window": int,
    },
    "measure": {"rod_length": float, "cutoff_hz": float},
}

_TYPE_NAMES = {"int": int, "float": float, "str": str, "bool": bool}


def _coerce(raw: str, typ, section: str, key: str):
    if isinstance(typ, str):  # dataclass field types arrive as strings
        typ = _TYPE_NAMES.get(typ, str)
    try:
        if typ is bool:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return typ(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot parse '{raw}'") from None


def apply_setting(config: RunConfig, section: str, key: str, raw: str) -> None:
    """Set one `section.key = value`, rejecting unknown keys."""
    if section not in _SECTIONS:
        raise ConfigError(f"unknown config section '[{section}]'")
    if key not in _SECTIONS[section]:
        raise ConfigError(f"unknown key '{key}' in section '[{section}]'")
    value = _coerce(raw, _SECTIONS[section][key], section, key)
    if section == "run":
        setattr(config, key, value)
    elif section == "scene":
        setattr(config.scene, key, value)
    elif section == "denoise":
        config.denoise = _replace_frozen(config.denoise, DenoiseParams, key, value)
    elif section == "gate":
        setattr(config, f"gate_{key}", value)
    elif section == "tracker":
        config.tracker = _replace_frozen(config.tracker, TrackerParams, key, value)
    elif section == "measure":
        setattr(config, key, value)


def _replace_frozen(current, cls, key, value):
    kwargs = {f.name: getattr(current, f.name) for f in fields(cls)}
    kwargs[key] = value
    return cls(**kwargs)


def load_config(path: str) -> RunConfig:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file '{path}'")
    return _from_parser(parser)


def parse_config_text(text: str) -> RunConfig:
    parser = configparser.ConfigParser()
    parser.read_string(text)
    return _from_parser(parser)


def _from_parser(parser: configparser.ConfigParser) -> RunConfig:
    config = RunConfig()
    for section in parser.sections():
        for key, raw in parser.items(section):
            apply_setting(config, section, key, raw)
    return config


def dump_config(config: RunConfig) -> str:
    """Echo a config as INI text; reloading it reproduces the run exactly."""
    parser = configparser.ConfigParser()
    parser["run"] = {
        "seed": str(config.seed), "out_dir": config.out_dir,
        "write_intermediate": str(config.write_intermediate).lower(),
        "markers": str(config.markers), "input": config.input,
        "input_format": config.input_format,
    }
    parser["scene"] = {
        f.name: str(getattr(config.scene, f.name)) for f in fields(SceneConfig)
    }
    parser["denoise"] = {
        key: str(getattr(config.denoise, key)) for key in _SECTIONS["denoise"]
    }
    parser["gate"] = {key: str(getattr(config, f"gate_{key}")) for key in _SECTIONS["gate"]}
    parser["tracker"] = {
        key: str(getattr(config.tracker, key)) for key in _SECTIONS["tracker"]
    }
    parser["measure"] = {
        "rod_length": str(config.rod_length), "cutoff_hz": str(config.cutoff_hz),
    }
    out = io.StringIO()
    parser.write(out)
    return out.getvalue()
