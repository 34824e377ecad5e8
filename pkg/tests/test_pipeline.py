import os

import numpy as np
import pytest

from evdeform.cli import main
from evdeform.config import (
    RunConfig,
    apply_setting,
    dump_config,
    parse_config_text,
)
from evdeform.errors import ConfigError
from evdeform.pipeline import run_pipeline

SMALL_SCENE = """
[run]
seed = 7
markers = 2

[scene]
preset = custom
duration_us = 400000
led_centers = 300,360;550,360
radius = 5
trajectory = static
background_rate = 2000

[measure]
rod_length = 1.0
cutoff_hz = 5.0
"""


# --- config ------------------------------------------------------------------

def test_parse_config_round_trip():
    config = parse_config_text(SMALL_SCENE)
    assert config.seed == 7
    assert config.scene.preset == "custom"
    assert config.scene.led_centers == "300,360;550,360"
    echoed = parse_config_text(dump_config(config))
    assert echoed.seed == config.seed
    assert echoed.scene.duration_us == config.scene.duration_us
    assert echoed.denoise == config.denoise
    assert echoed.tracker == config.tracker
    assert echoed.gate_enabled == config.gate_enabled


def test_unknown_key_rejected_by_name():
    with pytest.raises(ConfigError, match="n_thh"):
        parse_config_text("[denoise]\nn_thh = 5\n")


def test_unknown_section_rejected():
    with pytest.raises(ConfigError, match="wibble"):
        parse_config_text("[wibble]\nx = 1\n")


def test_unparseable_value_rejected():
    with pytest.raises(ConfigError, match="seed"):
        parse_config_text("[run]\nseed = banana\n")


def test_apply_setting_overrides():
    config = RunConfig()
    apply_setting(config, "tracker", "t_su", "4000")
    assert config.tracker.t_su == 4000
    apply_setting(config, "gate", "enabled", "false")
    assert config.gate_enabled is False
    apply_setting(config, "measure", "cutoff_hz", "2.5")
    assert config.cutoff_hz == 2.5


def test_bool_coercion_strict():
    config = RunConfig()
    apply_setting(config, "run", "write_intermediate", "yes")
    assert config.write_intermediate is True
    with pytest.raises(ConfigError):
        apply_setting(config, "run", "write_intermediate", "maybe")


def test_custom_scene_builds():
    config = parse_config_text(SMALL_SCENE)
    scene = config.scene.build()
    assert len(scene.leds) == 2
    assert scene.duration == 400_000


def test_unknown_preset_rejected():
    config = parse_config_text("[scene]\npreset = nope\n")
    with pytest.raises(ConfigError, match="nope"):
        config.scene.build()


# --- run_pipeline ------------------------------------------------------------

def run_small(tmp_path, subdir="out", overrides=()):
    config = parse_config_text(SMALL_SCENE)
    config.out_dir = str(tmp_path / subdir)
    config.write_intermediate = True
    for section, key, value in overrides:
        apply_setting(config, section, key, value)
    return config, run_pipeline(config)


def test_pipeline_produces_outputs_and_report(tmp_path):
    config, report = run_small(tmp_path)
    assert report.complete
    stage_names = [s.name for s in report.stages]
    assert stage_names == ["synth", "denoise", "gate", "track", "measure"]
    for name in ("raw.csv", "denoised.csv", "gated.csv",
                 "displacement_marker0.csv", "displacement_marker1.csv",
                 "report.txt"):
        assert os.path.exists(os.path.join(config.out_dir, name)), name
    text = (tmp_path / "out" / "report.txt").read_text()
    assert "complete: True" in text
    assert "[scene]" in text  # config echo present


def test_pipeline_scores_against_labels(tmp_path):
    _, report = run_small(tmp_path)
    assert report.scores["denoise"]["signal_loss_rate"] <= 0.01
    assert report.scores["denoise"]["noise_removal_rate"] >= 0.9


def test_pipeline_gate_can_be_disabled(tmp_path):
    config, report = run_small(tmp_path, overrides=[("gate", "enabled", "false")])
    assert [s.name for s in report.stages] == ["synth", "denoise", "track", "measure"]
    assert not os.path.exists(os.path.join(config.out_dir, "gated.csv"))


def test_pipeline_outputs_are_deterministic(tmp_path):
    config1, _ = run_small(tmp_path, "a")
    first = {
        name: open(os.path.join(config1.out_dir, name), "rb").read()
        for name in os.listdir(config1.out_dir)
    }
    config2, _ = run_small(tmp_path, "a")
    for name, data in first.items():
        again = open(os.path.join(config2.out_dir, name), "rb").read()
        assert again == data, f"{name} differs between identical runs"


# --- CLI ---------------------------------------------------------------------

def test_cli_synth_denoise_chain(tmp_path):
    raw = str(tmp_path / "raw.csv")
    den = str(tmp_path / "den.csv")
    assert main(["synth", "--preset", "static_jitter", "--seed", "1",
                 "--out", raw]) == 0
    assert os.path.exists(raw)
    assert main(["denoise", "--in", raw, "--out", den]) == 0
    assert os.path.getsize(den) > 0


def test_cli_unknown_preset_is_config_error():
    assert main(["synth", "--preset", "nonesuch", "--out", "/tmp/x.csv"]) == 2


def test_cli_missing_input_is_data_error(tmp_path):
    missing = str(tmp_path / "missing.csv")
    assert main(["denoise", "--in", missing, "--out", str(tmp_path / "o.csv")]) == 3


def test_cli_bad_set_flag_is_config_error(tmp_path):
    assert main(["pipeline", "--set", "nonsense", "--out-dir", str(tmp_path)]) == 2


def test_cli_pipeline_with_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text(SMALL_SCENE)
    out_dir = str(tmp_path / "run_out")
    code = main(["pipeline", "--config", str(cfg), "--out-dir", out_dir])
    assert code == 0
    assert os.path.exists(os.path.join(out_dir, "report.txt"))
    captured = capsys.readouterr()
    assert "complete: True" in captured.out


def test_cli_gate_and_track_and_measure(tmp_path):
    raw = str(tmp_path / "raw.csv")
    den = str(tmp_path / "den.csv")
    gated = str(tmp_path / "gated.csv")
    series = str(tmp_path / "traj{marker}.csv")
    out = str(tmp_path / "meas.csv")
    assert main(["synth", "--preset", "standard_noisy", "--seed", "0",
                 "--out", raw, "--no-labels"]) == 0
    assert main(["denoise", "--in", raw, "--out", den]) == 0
    assert main(["gate", "--in", den, "--out", gated, "--f-led", "100"]) == 0
    assert main(["track", "--in", gated, "--markers", "2", "--out", series]) == 0
    assert main(["measure",
                 "--traj-a", str(tmp_path / "traj0.csv"),
                 "--traj-b", str(tmp_path / "traj1.csv"),
                 "--rod-length", "1.0", "--out", out]) == 0
    assert os.path.getsize(out) > 0
    assert main(["stats", "--in", out]) == 0
