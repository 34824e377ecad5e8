import math

import numpy as np
import pytest

from evdeform.errors import StreamError
from evdeform.events import EventStream, StreamMeta
from evdeform.synth import LedSpec, NoiseSpec, Static, Step, synth_scene
from evdeform.tracker import (
    ClusterState,
    TrackerParams,
    admit_event,
    expire_members,
    mahalanobis,
    seed_clusters,
    track,
)

META = StreamMeta(sensor_width=1280, sensor_height=720, duration=0, count=0)


def cluster_with(members, var_floor=1e-12):
    cluster = ClusterState(0, var_floor)
    for t, x, y in members:
        cluster.admit(t, x, y)
    return cluster


# --- mahalanobis -------------------------------------------------------------

def test_distance_zero_at_mean():
    cluster = cluster_with([(0, -1, -1), (0, 1, 1)])
    assert mahalanobis((0.0, 0.0), cluster) == 0.0


def test_distance_identity_covariance_is_euclidean():
    # members give unit variance on both axes; offset (3, 4) -> distance 5
    cluster = cluster_with([(0, -1, -1), (0, 1, 1)])
    assert cluster.var_x == 1.0 and cluster.var_y == 1.0
    assert mahalanobis((3.0, 4.0), cluster) == pytest.approx(5.0)


def test_distance_anisotropic():
    # sigma_x = 2, sigma_y = 1; offset (2, 1) -> sqrt(1 + 1) = sqrt(2)
    cluster = cluster_with([(0, -2, -1), (0, 2, 1)])
    assert cluster.var_x == 4.0 and cluster.var_y == 1.0
    assert mahalanobis((2.0, 1.0), cluster) == pytest.approx(math.sqrt(2))


def test_variance_floor_applies():
    cluster = cluster_with([(0, 5, 5)], var_floor=0.25)
    assert cluster.var_x == 0.25 and cluster.var_y == 0.25


# --- admit -------------------------------------------------------------------

def test_event_joins_nearest_cluster():
    params = TrackerParams()
    a = cluster_with([(0, 99, 100), (0, 101, 100)], var_floor=1.0)
    a.marker_id = 0
    b = cluster_with([(0, 499, 100), (0, 501, 100)], var_floor=1.0)
    b.marker_id = 1
    hit = admit_event((10, 100, 100), [a, b], params)
    assert hit is a
    assert a.n == 3


def test_gate_is_strictly_less_than():
    params = TrackerParams(d_th=3.0)
    # single member, var = floor 1.0 -> sigma 1; dx = 3 -> d = 3.0 exactly
    cluster = cluster_with([(0, 100, 100)], var_floor=1.0)
    assert admit_event((1, 103, 100), [cluster], params) is None
    assert admit_event((1, 102, 100), [cluster], params) is cluster  # d = 2 < 3


def test_gate_boundary_exact():
    params = TrackerParams(d_th=2.0)
    cluster = cluster_with([(0, 100, 100)], var_floor=1.0)
    # offset exactly d_th -> rejected; just under -> admitted
    assert admit_event((1, 102, 100), [cluster], params) is None
    assert admit_event((1, 101, 100), [cluster], params) is cluster


def test_incremental_stats_match_batch_oracle():
    rng = np.random.default_rng(0)
    params = TrackerParams(t_su=500, var_floor=1e-12)
    cluster = ClusterState(0, 1e-12)
    t = 0
    for _ in range(1000):
        t += int(rng.integers(1, 50))
        cluster.admit(t, int(rng.integers(90, 110)), int(rng.integers(190, 210)))
        cluster.expire(t, params.t_su)
        xs = np.array([m[1] for m in cluster.members], dtype=np.float64)
        ys = np.array([m[2] for m in cluster.members], dtype=np.float64)
        mx, my = cluster.mean
        assert mx == pytest.approx(xs.mean(), abs=1e-9)
        assert my == pytest.approx(ys.mean(), abs=1e-9)
        assert cluster.var_x == pytest.approx(xs.var(), abs=1e-9)
        assert cluster.var_y == pytest.approx(ys.var(), abs=1e-9)


# --- expiry ------------------------------------------------------------------

def test_fresh_members_unchanged():
    cluster = cluster_with([(100, 1, 1), (200, 2, 2)])
    expire_members(cluster, 250, TrackerParams(t_su=1000))
    assert cluster.n == 2


def test_zero_lifetime_keeps_only_newest():
    cluster = cluster_with([(100, 1, 1), (200, 2, 2), (300, 3, 3)])
    expire_members(cluster, 300, TrackerParams(t_su=0))
    assert cluster.n == 1
    assert cluster.members[0] == (300, 3, 3)


def test_newest_member_survives_any_age():
    cluster = cluster_with([(0, 5, 5)])
    expire_members(cluster, 10_000_000, TrackerParams(t_su=10))
    assert cluster.n == 1


def test_expiry_matches_brute_force_age_filter():
    rng = np.random.default_rng(4)
    members = sorted((int(rng.integers(0, 10_000)), int(rng.integers(0, 50)),
                      int(rng.integers(0, 50))) for _ in range(200))
    cluster = cluster_with(members)
    now, t_su = 9_000, 2_000
    cluster.expire(now, t_su)
    oracle = [m for m in members if now - m[0] <= t_su]
    if not oracle:
        oracle = [members[-1]]
    assert list(cluster.members) == oracle
    xs = np.array([m[1] for m in oracle], dtype=np.float64)
    assert cluster.mean[0] == pytest.approx(xs.mean(), abs=1e-9)


# --- seeding -----------------------------------------------------------------

def two_led_prefix(seed=0):
    leds = [
        LedSpec(center=(300.0, 360.0), radius=5.0, blink_hz=100.0,
                events_per_edge_per_pixel=3, marker_id=0),
        LedSpec(center=(700.0, 360.0), radius=5.0, blink_hz=100.0,
                events_per_edge_per_pixel=3, marker_id=1),
    ]
    stream, _ = synth_scene(leds, Static(), NoiseSpec(), 20_000, META, seed)
    return stream


def test_seeds_land_on_true_centers():
    clusters = seed_clusters(two_led_prefix(), 2, TrackerParams())
    assert [c.marker_id for c in clusters] == [0, 1]
    assert abs(clusters[0].mean[0] - 300.0) < 0.5
    assert abs(clusters[1].mean[0] - 700.0) < 0.5
    assert abs(clusters[0].mean[1] - 360.0) < 0.5


def test_seeding_fails_when_markers_missing():
    led = LedSpec(center=(300.0, 360.0), radius=5.0, blink_hz=100.0,
                  events_per_edge_per_pixel=3)
    stream, _ = synth_scene([led], Static(), NoiseSpec(), 20_000, META, 0)
    with pytest.raises(StreamError, match="insufficient markers"):
        seed_clusters(stream, 2, TrackerParams())


def test_seeding_fails_on_empty_prefix():
    with pytest.raises(StreamError):
        seed_clusters(EventStream.empty(), 1, TrackerParams())


# --- tracking ----------------------------------------------------------------

def test_static_led_tracks_true_center():
    led = LedSpec(center=(640.0, 360.0), radius=5.0, blink_hz=100.0,
                  events_per_edge_per_pixel=3)
    stream, _ = synth_scene([led], Static(), NoiseSpec(), 1_000_000, META, 0)
    result = track(stream, TrackerParams(), 1)
    traj = result.trajectories[0]
    assert len(traj) > 900
    dev = np.hypot(traj.u - 640.0, traj.v - 360.0)
    assert dev.max() <= 0.1
    assert not traj.stale.any()


def test_sample_grid_is_uniform():
    led = LedSpec(center=(640.0, 360.0), radius=5.0, blink_hz=100.0,
                  events_per_edge_per_pixel=3)
    stream, _ = synth_scene([led], Static(), NoiseSpec(), 200_000, META, 0)
    traj = track(stream, TrackerParams(sample_period=1000), 1).trajectories[0]
    assert np.all(np.diff(traj.t) == 1000)


def test_step_converges_within_three_blink_periods():
    led = LedSpec(center=(400.0, 360.0), radius=5.0, blink_hz=100.0,
                  events_per_edge_per_pixel=3)
    # 20 px move over one blink period starting at 300 ms
    traj_spec = Step(dx_px=20.0, dy_px=0.0, at_us=300_000, ramp_us=10_000)
    stream, _ = synth_scene([led], traj_spec, NoiseSpec(), 600_000, META, 0)
    result = track(stream, TrackerParams(), 1)
    traj = result.trajectories[0]
    after = traj.u[traj.t >= 340_000]  # step end + 3 blink periods
    assert np.all(np.abs(after - 420.0) < 0.5)


def test_track_empty_stream():
    result = track(EventStream.empty(), TrackerParams(), 1)
    assert result.trajectories == {}


def test_params_validation():
    with pytest.raises(StreamError):
        TrackerParams(d_th=0.0)
    with pytest.raises(StreamError):
        TrackerParams(var_floor=0.0)
    with pytest.raises(StreamError):
        TrackerParams(sample_period=0)
