"""Moving-obstacle recovery from raw scans.

Pipeline per frame: scan -> world-frame points -> adjacent-beam chains ->
wall/obstacle labels -> frame-to-frame association (Kuhn-Munkres) ->
finite-difference velocity. Ground-truth obstacle state is never consulted.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import Pose, Vec2, wrap_angle
from .world import N_BEAMS, OBSTACLE_RADIUS, ScanFrame

GAP_THRESHOLD = 0.08
WALL_ANGLE_TOLERANCE = 0.1
MIN_WALL_POINTS = 3
ASSOCIATION_GATE = 0.3
VELOCITY_SMOOTHING = 0.5
TRACK_TIMEOUT = 3
EDGE_BAND = 0.005  # tiny clusters this close to max range are wall slivers, not obstacles


class Kind(str, enum.Enum):
    WALL = "wall"
    OBSTACLE = "obstacle"
    UNKNOWN = "unknown"


@dataclass(frozen=True, slots=True)
class ScanPoint:
    position: Vec2
    beam: int
    range: float


@dataclass(frozen=True)
class ScanPointCloud:
    points: tuple[ScanPoint, ...]
    frame_time: float = 0.0
    max_range: float = 0.6


@dataclass(frozen=True)
class Cluster:
    points: tuple[ScanPoint, ...]
    kind: Kind = Kind.UNKNOWN

    def __post_init__(self) -> None:
        if not self.points:
            raise ValueError("a cluster needs at least one point")

    @property
    def centroid(self) -> Vec2:
        n = len(self.points)
        return Vec2(sum(p.position.x for p in self.points) / n, sum(p.position.y for p in self.points) / n)

    @property
    def center_scan(self) -> Vec2:
        return self.points[len(self.points) // 2].position

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class Track:
    """A tracked obstacle.

    ``position`` is the center scan of the latest matched cluster. ``anchor``
    is the point differenced for velocity: the estimated disk center (see
    :func:`estimate_center`). Differencing the visible surface point instead
    under-reads tangential motion by roughly (d - r) / d. Without a
    viewpoint the two coincide.
    """

    id: int
    position: Vec2
    velocity: Vec2
    last_seen: int
    age: int = 1
    anchor: Vec2 | None = None

    def __post_init__(self) -> None:
        if self.age < 1:
            raise ValueError("track age must be >= 1")
        if self.anchor is None:
            object.__setattr__(self, "anchor", self.position)


def scan_to_points(scan: ScanFrame, robot_pose: Pose, frame_time: float = 0.0) -> ScanPointCloud:
    """Project non-sentinel beams into world coordinates."""
    pts = []
    for i, r in enumerate(scan.ranges):
        r = float(r)
        if r >= scan.max_range:
            continue
        theta = robot_pose.heading + math.radians(i)
        pts.append(ScanPoint(robot_pose.position + Vec2.polar(r, theta), i, r))
    return ScanPointCloud(tuple(pts), frame_time, scan.max_range)


def cluster_points(cloud: ScanPointCloud, gap: float = GAP_THRESHOLD) -> list[Cluster]:
    """Chain consecutive-beam points whose spacing is at most ``gap``.

    Beam indices wrap (359 is adjacent to 0). Points are compared only with
    their predecessor in beam order, so a missing beam breaks the chain.
    """
    pts = cloud.points
    if not pts:
        return []

    def linked(p: ScanPoint, q: ScanPoint) -> bool:
        return (q.beam - p.beam) % N_BEAMS == 1 and (q.position - p.position).norm() <= gap

    n = len(pts)
    breaks = [i for i in range(n) if not linked(pts[i - 1], pts[i])] if n > 1 else [0]
    if not breaks:
        # one closed ring of points all the way round
        return [Cluster(pts)]
    clusters = []
    for j, start in enumerate(breaks):
        end = breaks[(j + 1) % len(breaks)]
        if end > start:
            chain = pts[start:end]
        else:
            chain = pts[start:] + pts[:end]
        clusters.append(Cluster(tuple(chain)))
    return clusters


def _direction_spread(points) -> float:
    """Largest deviation of segment directions from their circular mean."""
    dirs = []
    for p, q in zip(points, points[1:]):
        d = q.position - p.position
        dirs.append(math.atan2(d.y, d.x))
    mean = math.atan2(sum(math.sin(a) for a in dirs), sum(math.cos(a) for a in dirs))
    return max(abs(wrap_angle(a - mean)) for a in dirs)


def is_collinear(points, tol: float = WALL_ANGLE_TOLERANCE) -> bool:
    return len(points) >= MIN_WALL_POINTS and _direction_spread(points) < tol


def classify_cluster(c: Cluster) -> Kind:
    """Wall when the chain is straight (segment directions agree within 0.1 rad)."""
    return Kind.WALL if is_collinear(c.points) else Kind.OBSTACLE


def _chord_split_index(points) -> int:
    a, b = points[0].position, points[-1].position
    chord = b - a
    length = chord.norm()
    if length == 0.0:
        return len(points) // 2
    return max(range(1, len(points) - 1),
               key=lambda i: abs(chord.cross(points[i].position - a)) / length)


def _split_corner(c: Cluster) -> list[Cluster] | None:
    """Try to explain a chain as two straight legs meeting at a corner.

    A leg of at most two points is accepted as the stub of a wall that is
    just entering range.
    """
    pts = c.points
    if len(pts) < MIN_WALL_POINTS + 1:
        return None
    k = _chord_split_index(pts)
    for left, right in ((pts[:k + 1], pts[k + 1:]), (pts[:k], pts[k:])):
        if not left or not right:
            continue
        ok_l = is_collinear(left) or (len(left) <= 2 and len(right) >= MIN_WALL_POINTS)
        ok_r = is_collinear(right) or (len(right) <= 2 and len(left) >= MIN_WALL_POINTS)
        if ok_l and ok_r and (len(left) >= MIN_WALL_POINTS or len(right) >= MIN_WALL_POINTS):
            return [Cluster(left, Kind.WALL), Cluster(right, Kind.WALL)]
    return None


def label_clusters(clusters: list[Cluster], max_range: float) -> list[Cluster]:
    """Assign Wall/Obstacle/Unknown labels to raw chains.

    Beyond :func:`classify_cluster` this splits L-shaped chains at arena
    corners and marks one- and two-point chains sitting at the very edge of
    the range as Unknown (a wall grazing max range shows up that way).
    """
    out: list[Cluster] = []
    for c in clusters:
        kind = classify_cluster(c)
        if kind is Kind.WALL:
            out.append(replace(c, kind=kind))
            continue
        legs = _split_corner(c)
        if legs is not None:
            out.extend(legs)
        elif len(c) < MIN_WALL_POINTS and min(p.range for p in c.points) >= max_range - EDGE_BAND:
            out.append(replace(c, kind=Kind.UNKNOWN))
        else:
            out.append(replace(c, kind=Kind.OBSTACLE))
    return out


def detect_obstacles(scan: ScanFrame, robot_pose: Pose) -> tuple[list[Cluster], list[Cluster]]:
    """Run the per-frame part of the pipeline; returns (all labelled clusters, obstacle clusters)."""
    cloud = scan_to_points(scan, robot_pose)
    labelled = label_clusters(cluster_points(cloud), scan.max_range)
    return labelled, [c for c in labelled if c.kind is Kind.OBSTACLE]


# --------------------------------------------------------------------------- assignment


def assign_min_cost(cost) -> list[tuple[int, int]]:
    """Minimum-cost assignment (Kuhn-Munkres with row/column potentials).

    Rectangular inputs are padded to square with a constant larger than any
    real entry; pairs involving padding are dropped, so the result always
    has min(n, m) pairs, sorted by row.
    """
    rows = [list(map(float, r)) for r in cost]
    n = len(rows)
    m = len(rows[0]) if n else 0
    if n == 0 or m == 0:
        return []
    if any(len(r) != m for r in rows):
        raise ValueError("cost matrix rows have unequal lengths")
    for r in rows:
        for v in r:
            if not math.isfinite(v) or v < 0:
                raise ValueError("costs must be finite and nonnegative")

    size = max(n, m)
    pad = max(max(r) for r in rows) + 1.0
    a = [[rows[i][j] if i < n and j < m else pad for j in range(size)] for i in range(size)]

    inf = math.inf
    u = [0.0] * (size + 1)
    v = [0.0] * (size + 1)
    owner = [0] * (size + 1)  # owner[j]: row (1-based) matched to column j
    way = [0] * (size + 1)
    for i in range(1, size + 1):
        owner[0] = i
        j0 = 0
        minv = [inf] * (size + 1)
        used = [False] * (size + 1)
        while True:
            used[j0] = True
            i0 = owner[j0]
            delta = inf
            j1 = 0
            row = a[i0 - 1]
            for j in range(1, size + 1):
                if used[j]:
                    continue
                cur = row[j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(size + 1):
                if used[j]:
                    u[owner[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if owner[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            owner[j0] = owner[j1]
            j0 = j1

    pairs = [(owner[j] - 1, j - 1) for j in range(1, size + 1)]
    return sorted((r, c) for r, c in pairs if r < n and c < m)


# --------------------------------------------------------------------------- tracking


def estimate_center(c: Cluster, viewpoint: Vec2 | None, radius: float = OBSTACLE_RADIUS) -> Vec2:
    """Disk center behind a cluster, assuming a known disk radius.

    Seeded at the center scan pushed ``radius`` along its beam, then refined
    by a few Gauss-Newton steps on the point-to-circle residuals. Falls back
    to the seed when the fit is ill-posed or wanders off. Without a
    viewpoint the center scan itself is returned.
    """
    p = c.center_scan
    if viewpoint is None:
        return p
    ray = p - viewpoint
    n = ray.norm()
    if n == 0.0:
        return p
    seed = p + ray * (radius / n)
    if len(c) < 3:
        return seed
    pts = np.array([q.position.as_tuple() for q in c.points])
    center = np.array(seed.as_tuple())
    for _ in range(8):
        diff = pts - center
        dist = np.hypot(diff[:, 0], diff[:, 1])
        if np.any(dist == 0.0):
            return seed
        jac = -diff / dist[:, None]
        res = dist - radius
        step, *_ = np.linalg.lstsq(jac, -res, rcond=None)
        center = center + step
        if np.linalg.norm(step) < 1e-12:
            break
    fitted = Vec2(float(center[0]), float(center[1]))
    if not math.isfinite(fitted.x) or (fitted - seed).norm() > radius:
        return seed
    return fitted


def update_tracks(tracks: list[Track], detections: list[Cluster], dt: float, gate: float = ASSOCIATION_GATE,
                  step: int = 0, next_id: int | None = None, *, viewpoint: Vec2 | None = None,
                  radius: float = OBSTACLE_RADIUS, smoothing: float = VELOCITY_SMOOTHING,
                  timeout: int = TRACK_TIMEOUT) -> list[Track]:
    """Associate detections to tracks and refresh their velocity estimates.

    ``step`` is the index of the current frame. New tracks take ids from
    ``next_id`` (default: one past the largest id in ``tracks``).
    ``viewpoint`` is the sensor position for this frame; when given, velocity
    is differenced on estimated disk centers (see :class:`Track`).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if next_id is None:
        next_id = max((t.id for t in tracks), default=-1) + 1

    positions = [d.center_scan for d in detections]
    anchors = [estimate_center(d, viewpoint, radius) for d in detections]
    matched: dict[int, int] = {}
    if tracks and positions:
        cost = [[(p - t.position).norm() for p in positions] for t in tracks]
        for ti, di in assign_min_cost(cost):
            if cost[ti][di] <= gate:
                matched[ti] = di

    out: list[Track] = []
    used = set(matched.values())
    for ti, t in enumerate(tracks):
        if ti in matched:
            di = matched[ti]
            elapsed = dt * max(1, step - t.last_seen)
            raw = (anchors[di] - t.anchor) * (1.0 / elapsed)
            vel = raw * smoothing + t.velocity * (1.0 - smoothing)
            out.append(Track(t.id, positions[di], vel, step, t.age + 1, anchors[di]))
        elif step - t.last_seen <= timeout:
            out.append(t)
    for di, p in enumerate(positions):
        if di not in used:
            out.append(Track(next_id, p, Vec2(0.0, 0.0), step, 1, anchors[di]))
            next_id += 1
    return out


@dataclass
class Tracker:
    """Stateful wrapper that owns the track list and id counter for one episode."""

    dt: float
    gate: float = ASSOCIATION_GATE
    radius: float = OBSTACLE_RADIUS
    tracks: list[Track] = field(default_factory=list)
    step: int = 0
    next_id: int = 0

    def update(self, detections: list[Cluster], viewpoint: Vec2 | None = None) -> list[Track]:
        self.step += 1
        self.tracks = update_tracks(self.tracks, detections, self.dt, self.gate, self.step, self.next_id,
                                    viewpoint=viewpoint, radius=self.radius)
        self.next_id = max([self.next_id - 1] + [t.id for t in self.tracks]) + 1
        return self.tracks

    def reset(self) -> None:
        self.tracks = []
        self.step = 0
        self.next_id = 0
