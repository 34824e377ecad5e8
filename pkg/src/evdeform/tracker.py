"""Gaussian event-cluster tracking of LED marker centers.

One cluster per marker: a running 2-D Gaussian with diagonal covariance
(the optical axis is perpendicular to the markers, so the clusters are
circular and the cross terms vanish). Events are admitted by Mahalanobis
gate, stale members are expired against the newest admitted timestamp, and
the cluster mean is the sub-pixel marker center.

Coordinate sums are kept as exact Python integers (pixel coordinates are
integers), so the incremental mean/variance equal a batch recomputation to
floating rounding only.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import StreamError
from .events import EventStream

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrackerParams:
    d_th: float = 3.0          # Mahalanobis gate
    t_su: int = 10_000         # member lifetime, us (one blink period at 100 Hz)
    var_floor: float = 0.25    # px^2
    sample_period: int = 1000  # us (1 kHz trajectory)
    min_seed_events: int = 20
    seed_window: int = 20_000  # us of stream prefix used for seeding

    def __post_init__(self):
        if self.d_th <= 0 or self.t_su < 0 or self.sample_period <= 0:
            raise StreamError("d_th > 0, t_su >= 0, sample_period > 0 required")
        if self.var_floor <= 0:
            raise StreamError("var_floor must be > 0")


class ClusterState:
    """Running Gaussian model of one marker's event cluster."""

    def __init__(self, marker_id: int, var_floor: float):
        self.marker_id = marker_id
        self.var_floor = var_floor
        self.members: deque[tuple[int, int, int]] = deque()  # (t, x, y)
        self.t_new = 0
        self._sx = 0
        self._sy = 0
        self._sxx = 0
        self._syy = 0

    @property
    def n(self) -> int:
        return len(self.members)

    @property
    def mean(self) -> tuple[float, float]:
        n = len(self.members)
        return self._sx / n, self._sy / n

    @property
    def var_x(self) -> float:
        n = len(self.members)
        return max(self.var_floor, (n * self._sxx - self._sx * self._sx) / (n * n))

    @property
    def var_y(self) -> float:
        n = len(self.members)
        return max(self.var_floor, (n * self._syy - self._sy * self._sy) / (n * n))

    def admit(self, t: int, x: int, y: int) -> None:
        x, y, t = int(x), int(y), int(t)
        self.members.append((t, x, y))
        self._sx += x
        self._sy += y
        self._sxx += x * x
        self._syy += y * y
        if t > self.t_new:
            self.t_new = t

    def expire(self, now: int, t_su: int) -> int:
        """Drop members older than t_su relative to `now`; the newest member
        is always retained. Returns the number of members removed."""
        dropped = 0
        while len(self.members) > 1 and now - self.members[0][0] > t_su:
            _, x, y = self.members.popleft()
            self._sx -= x
            self._sy -= y
            self._sxx -= x * x
            self._syy -= y * y
            dropped += 1
        return dropped


def mahalanobis(point: tuple[float, float], cluster: ClusterState) -> float:
    """Diagonal-covariance Mahalanobis distance from a point to a cluster."""
    mx, my = cluster.mean
    dx, dy = point[0] - mx, point[1] - my
    return math.sqrt(dx * dx / cluster.var_x + dy * dy / cluster.var_y)


def expire_members(cluster: ClusterState, now: int, params: TrackerParams) -> ClusterState:
    cluster.expire(now, params.t_su)
    return cluster


def admit_event(
    event: tuple[int, int, int],
    clusters: list[ClusterState],
    params: TrackerParams,
) -> Optional[ClusterState]:
    """Assign one event (t, x, y) to the nearest gating cluster, or discard.

    Gate is strict (d < d_th); ties break to the lowest marker_id. On
    admission the cluster statistics update and stale members expire.
    """
    t, x, y = event
    best = None
    best_d = math.inf
    for cluster in clusters:
        d = mahalanobis((x, y), cluster)
        if d < params.d_th and (
            d < best_d or (d == best_d and best is not None and cluster.marker_id < best.marker_id)
        ):
            best, best_d = cluster, d
    if best is None:
        return None
    best.admit(t, x, y)
    best.expire(best.t_new, params.t_su)
    return best


def seed_clusters(
    prefix: EventStream, expected_markers: int, params: TrackerParams
) -> list[ClusterState]:
    """Seed one cluster per marker from a stream prefix.

    Occupied pixels are grouped by 8-connected components; the
    expected_markers largest (by event count) become clusters, with
    marker_ids assigned left to right.
    """
    if expected_markers < 1:
        raise StreamError("expected_markers must be >= 1")
    if len(prefix) < expected_markers * params.min_seed_events:
        raise StreamError(
            f"insufficient markers visible: prefix holds {len(prefix)} events, "
            f"need {expected_markers * params.min_seed_events}"
        )
    keys = prefix.x.astype(np.int64) * (int(prefix.y.max()) + 2) + prefix.y
    stride = int(prefix.y.max()) + 2
    occupied, counts = np.unique(keys, return_counts=True)
    count_of = dict(zip(occupied.tolist(), counts.tolist()))
    pixels = {(int(k // stride), int(k % stride)) for k in occupied}

    components: list[list[tuple[int, int]]] = []
    remaining = set(pixels)
    while remaining:
        start = min(remaining)  # deterministic traversal
        stack = [start]
        remaining.discard(start)
        comp = []
        while stack:
            px, py = stack.pop()
            comp.append((px, py))
            for ddx in (-1, 0, 1):
                for ddy in (-1, 0, 1):
                    nb = (px + ddx, py + ddy)
                    if nb in remaining:
                        remaining.discard(nb)
                        stack.append(nb)
        components.append(comp)

    if len(components) < expected_markers:
        raise StreamError(
            f"insufficient markers visible: found {len(components)} components, "
            f"expected {expected_markers}"
        )
    weight = lambda comp: sum(count_of[px * stride + py] for px, py in comp)
    components.sort(key=lambda c: (-weight(c), min(c)))
    chosen = components[:expected_markers]
    # stable geometric ordering: marker 0 is the leftmost
    chosen.sort(key=lambda c: (np.mean([p[0] for p in c]), np.mean([p[1] for p in c])))

    clusters = []
    for mid, comp in enumerate(chosen):
        member_of = set(comp)
        cluster = ClusterState(mid, params.var_floor)
        for i in range(len(prefix)):
            if (int(prefix.x[i]), int(prefix.y[i])) in member_of:
                cluster.admit(int(prefix.t[i]), int(prefix.x[i]), int(prefix.y[i]))
        clusters.append(cluster)
    return clusters


@dataclass
class CenterTrajectory:
    marker_id: int
    t: np.ndarray       # int64, us, uniform sample_period grid
    u: np.ndarray       # float64, column of the cluster mean
    v: np.ndarray       # float64, row of the cluster mean
    stale: np.ndarray   # bool, sample taken during a starvation gap

    def __len__(self) -> int:
        return len(self.t)


@dataclass
class TrackResult:
    trajectories: dict[int, CenterTrajectory]
    discarded: int = 0
    starvation_gaps: int = 0


def track(
    stream: EventStream,
    params: TrackerParams,
    expected_markers: int,
) -> TrackResult:
    """Track marker centers through a denoised, gated stream.

    Returns one trajectory per marker, sampled every sample_period
    microseconds from the first to the last event timestamp.
    """
    if len(stream) == 0:
        return TrackResult(trajectories={})
    t0 = int(stream.t[0])
    prefix_end = int(np.searchsorted(stream.t, t0 + params.seed_window, side="right"))
    clusters = seed_clusters(stream[:prefix_end], expected_markers, params)

    t_end = int(stream.t[-1])
    # half-period offset keeps samples away from burst onsets, where the
    # cluster is momentarily mid-update
    grid = np.arange(
        t0 + params.sample_period // 2, t_end + 1, params.sample_period,
        dtype=np.int64,
    )
    samples = {c.marker_id: ([], [], []) for c in clusters}  # u, v, stale
    last_admit = {c.marker_id: c.t_new for c in clusters}
    starvation = 0
    discarded = 0
    gi = 0

    def record_until(t_limit: int):
        nonlocal gi
        while gi < len(grid) and grid[gi] <= t_limit:
            for c in clusters:
                u, v = c.mean
                us, vs, st = samples[c.marker_id]
                us.append(u)
                vs.append(v)
                st.append(grid[gi] - last_admit[c.marker_id] > 10 * params.t_su)
            gi += 1

    for i in range(prefix_end, len(stream)):
        ti = int(stream.t[i])
        record_until(ti - 1)
        hit = admit_event((ti, int(stream.x[i]), int(stream.y[i])), clusters, params)
        if hit is None:
            discarded += 1
        else:
            gap = ti - last_admit[hit.marker_id]
            if gap > 10 * params.t_su:
                starvation += 1
                log.warning(
                    "marker %d starved for %d us (> 10 * t_su)", hit.marker_id, gap
                )
            last_admit[hit.marker_id] = ti
    record_until(t_end)

    trajectories = {}
    for c in clusters:
        us, vs, st = samples[c.marker_id]
        trajectories[c.marker_id] = CenterTrajectory(
            marker_id=c.marker_id,
            t=grid[: len(us)],
            u=np.array(us),
            v=np.array(vs),
            stale=np.array(st, dtype=bool),
        )
    return TrackResult(trajectories, discarded=discarded, starvation_gaps=starvation)
