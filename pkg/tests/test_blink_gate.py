import numpy as np
import pytest

from evdeform.blink_gate import (
    BlinkGateParams,
    PixelHistory,
    ReversalDirection,
    gate_stream,
    reversal_frequency,
)
from evdeform.errors import StreamError
from evdeform.events import EventStream, LabelClass, StreamMeta
from evdeform.synth import LedSpec, NoiseSpec, Static, synth_scene

META = StreamMeta(sensor_width=1280, sensor_height=720, duration=0, count=0)


def stream_from(rows):
    """rows: (t, x, y, s) tuples, already time-sorted."""
    t, x, y, s = zip(*rows)
    return EventStream(np.array(t), np.array(x), np.array(y), np.array(s))


# --- reversal frequency ------------------------------------------------------

def test_of_reversals_at_standard_cadence_give_100hz():
    history = PixelHistory()
    # 100 Hz, duty 2:3: ON at 0, OFF at 4 ms, ON at 10 ms, OFF at 14 ms
    for t, s in ((0, 1), (4000, 0), (10_000, 1), (14_000, 0)):
        history.observe(t, s)
    assert reversal_frequency(history, ReversalDirection.OF) == 100.0
    assert reversal_frequency(history, ReversalDirection.FO) is None


def test_both_directions_exact_on_jitter_free_input():
    history = PixelHistory()
    for k in range(5):
        history.observe(k * 10_000, 1)
        history.observe(k * 10_000 + 4000, 0)
    assert reversal_frequency(history, ReversalDirection.OF) == 100.0
    assert reversal_frequency(history, ReversalDirection.FO) == 100.0


def test_single_reversal_has_no_frequency():
    history = PixelHistory()
    history.observe(0, 1)
    history.observe(100, 0)
    assert reversal_frequency(history, ReversalDirection.OF) is None


def test_one_second_interval_is_one_hz():
    history = PixelHistory()
    for t, s in ((0, 1), (10, 0), (1_000_000, 1), (1_000_010, 0)):
        history.observe(t, s)
    assert reversal_frequency(history, ReversalDirection.OF) == 1.0


def test_repeated_polarity_is_not_a_reversal():
    history = PixelHistory()
    assert history.observe(0, 1) is None
    assert history.observe(10, 1) is None
    assert history.observe(20, 0) is ReversalDirection.OF
    assert history.observe(30, 1) is ReversalDirection.FO


# --- params ------------------------------------------------------------------

def test_default_band_is_twenty_percent():
    params = BlinkGateParams(f_led=100.0)
    assert params.band == (80.0, 120.0)


def test_param_validation():
    with pytest.raises(StreamError):
        BlinkGateParams(f_led=0.0)
    with pytest.raises(StreamError):
        BlinkGateParams(f_led=100.0, f_th=100.0)


# --- gate_stream -------------------------------------------------------------

def jitter_free_blink(pixel, periods, period=10_000, on=4000):
    rows = []
    for k in range(periods):
        rows.append((k * period, pixel[0], pixel[1], 1))
        rows.append((k * period + on, pixel[0], pixel[1], 0))
    return rows


def test_blink_at_f_led_fully_kept():
    stream = stream_from(jitter_free_blink((10, 10), 20))
    kept, removed, mask, evicted = gate_stream(stream, BlinkGateParams(f_led=100.0), META)
    assert len(removed) == 0
    assert evicted == 0


def test_off_band_pixel_removed_except_trailing():
    # polarity reversals every 50 ms -> 20 Hz, far out of the 100 +- 20 band
    rows = []
    for k in range(10):
        rows.append((k * 100_000, 5, 5, 1))
        rows.append((k * 100_000 + 50_000, 5, 5, 0))
    stream = stream_from(rows)
    kept, removed, mask, _ = gate_stream(stream, BlinkGateParams(f_led=100.0), META)
    assert len(removed) > 0
    # trailing events after the last closing reversal stay kept
    assert mask[-1]


def test_pixels_are_independent():
    good = jitter_free_blink((10, 10), 20)
    bad = []
    for k in range(4):
        bad.append((k * 100_000 + 7, 600, 600, 1))
        bad.append((k * 100_000 + 50_007, 600, 600, 0))
    merged = sorted(good + bad)
    stream = stream_from(merged)
    _, _, mask, _ = gate_stream(stream, BlinkGateParams(f_led=100.0), META)
    good_idx = np.flatnonzero(stream.x == 10)
    solo_good = stream_from(good)
    _, _, solo_mask, _ = gate_stream(solo_good, BlinkGateParams(f_led=100.0), META)
    assert np.array_equal(mask[good_idx], solo_mask)


def test_warmup_defers_first_decision():
    # first measurable OF period is out of band; with warmup_reversals high
    # enough the early group is never judged and stays kept
    rows = []
    for k in range(3):
        rows.append((k * 100_000, 5, 5, 1))
        rows.append((k * 100_000 + 50_000, 5, 5, 0))
    stream = stream_from(rows)
    _, _, strict_mask, _ = gate_stream(
        stream, BlinkGateParams(f_led=100.0, warmup_reversals=2), META
    )
    _, _, lax_mask, _ = gate_stream(
        stream, BlinkGateParams(f_led=100.0, warmup_reversals=100), META
    )
    assert strict_mask.sum() < lax_mask.sum()
    assert lax_mask.all()


def test_pending_cap_evicts_oldest_as_kept():
    n = 5000
    cap = 4096
    stream = EventStream(
        np.arange(n, dtype=np.int64),
        np.full(n, 7, np.int32), np.full(n, 7, np.int32),
        np.ones(n, np.int8),  # never reverses
    )
    kept, removed, mask, evicted = gate_stream(
        stream, BlinkGateParams(f_led=100.0), META
    )
    assert evicted == n - cap
    assert mask.all()


def test_gate_on_static_synthetic_led_keeps_blink_signal():
    led = LedSpec(center=(640.0, 360.0), radius=5.0, blink_hz=100.0,
                  events_per_edge_per_pixel=3)
    stream, labels = synth_scene([led], Static(), NoiseSpec(), 1_000_000, META, 0)
    _, removed, mask, _ = gate_stream(stream, BlinkGateParams(f_led=100.0, f_th=20.0), META)
    blink = labels.cls == LabelClass.BLINK_SIGNAL
    assert (~mask & blink).sum() == 0


def test_gate_empty_stream():
    kept, removed, mask, evicted = gate_stream(
        EventStream.empty(), BlinkGateParams(f_led=100.0), META
    )
    assert len(kept) == 0 and len(removed) == 0 and evicted == 0
