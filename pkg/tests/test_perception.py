import itertools
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from oracles import brute_force_min, random_waypoint_walk
from rcnav.geometry import Pose, Vec2
from rcnav.perception import (
    Cluster,
    Kind,
    ScanPoint,
    ScanPointCloud,
    Track,
    Tracker,
    assign_min_cost,
    classify_cluster,
    cluster_points,
    detect_obstacles,
    estimate_center,
    scan_to_points,
    update_tracks,
    _direction_spread,
)
from rcnav.world import (
    ArenaSpec,
    ObstacleState,
    RobotState,
    ScanFrame,
    WorldState,
    detect_collision,
    simulate_lidar,
    step_obstacles,
)


def total(cost, pairs):
    return sum(cost[r][c] for r, c in pairs)


def sentinel_scan(**beams):
    ranges = np.full(360, 0.6)
    for k, v in beams.items():
        ranges[int(k[1:])] = v
    return ScanFrame(ranges)


def points_on(xy):
    return tuple(ScanPoint(Vec2(x, y), i, math.hypot(x, y)) for i, (x, y) in enumerate(xy))


# --------------------------------------------------------------------------- scan_to_points


def test_scan_to_points_all_sentinel():
    assert scan_to_points(sentinel_scan(), Pose(Vec2(0, 0), 0)).points == ()


def test_scan_to_points_axis_rotation():
    cloud = scan_to_points(sentinel_scan(b90=0.3), Pose(Vec2(1, 1), 0))
    (p,) = cloud.points
    assert p.beam == 90
    assert p.position.x == pytest.approx(1.0, abs=1e-12)
    assert p.position.y == pytest.approx(1.3, abs=1e-12)


def test_scan_to_points_heading_offset_matches_rotation_matrix():
    th = math.pi / 2
    (p,) = scan_to_points(sentinel_scan(b0=0.5), Pose(Vec2(0, 0), th)).points
    rot = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    expected = rot @ np.array([0.5, 0.0])
    assert p.position.x == pytest.approx(expected[0], abs=1e-12)
    assert p.position.y == pytest.approx(expected[1], abs=1e-12)


# --------------------------------------------------------------------------- clustering


def _cloud(beams_ranges, pose=Pose(Vec2(0, 0), 0)):
    ranges = np.full(360, 0.6)
    for b, r in beams_ranges:
        ranges[b] = r
    return scan_to_points(ScanFrame(ranges), pose)


def test_cluster_two_separated_groups():
    cloud = _cloud([(b, 0.3) for b in range(10, 15)] + [(b, 0.5) for b in range(15, 20)])
    assert len(cluster_points(cloud)) == 2


def test_cluster_wraparound_single_arc():
    cloud = _cloud([(358, 0.3), (359, 0.3), (0, 0.3), (1, 0.3)])
    clusters = cluster_points(cloud)
    assert len(clusters) == 1
    assert [p.beam for p in clusters[0].points] == [358, 359, 0, 1]


def test_cluster_missing_beam_breaks_chain():
    cloud = _cloud([(10, 0.3), (11, 0.3), (13, 0.3)])
    assert [len(c) for c in cluster_points(cloud)] == [2, 1]


def test_cluster_empty():
    assert cluster_points(ScanPointCloud(())) == []


def test_cluster_full_ring():
    cloud = _cloud([(b, 0.3) for b in range(360)])
    (c,) = cluster_points(cloud)
    assert len(c) == 360


# --------------------------------------------------------------------------- classification


def test_classify_collinear_wall():
    c = Cluster(points_on([(x, 0.4) for x in np.linspace(-0.2, 0.2, 10)]))
    assert classify_cluster(c) is Kind.WALL


def test_classify_arc_obstacle():
    angles = np.linspace(0, math.radians(70), 10)
    c = Cluster(points_on([(0.5 + 0.1 * math.cos(a), 0.1 * math.sin(a)) for a in angles]))
    # 9 chords turning 70/9 degrees each: the end chords sit 35 degrees * 8/9 from the mean
    assert _direction_spread(c.points) == pytest.approx(math.radians(70) * 4 / 9, rel=1e-9)
    assert classify_cluster(c) is Kind.OBSTACLE


def test_classify_degenerate_clusters():
    assert classify_cluster(Cluster(points_on([(0.3, 0.0)]))) is Kind.OBSTACLE
    assert classify_cluster(Cluster(points_on([(0.3, 0.0), (0.3, 0.01)]))) is Kind.OBSTACLE


@settings(max_examples=200)
@given(st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=1, max_size=12),
       st.floats(-math.pi, math.pi), st.floats(-5, 5), st.floats(-5, 5))
def test_classify_rigid_invariance(xy, rot, tx, ty):
    c = Cluster(points_on(xy))
    if len(xy) >= 3:
        assume(all(math.dist(a, b) > 1e-3 for a, b in zip(xy, xy[1:])))
        assume(abs(_direction_spread(c.points) - 0.1) > 1e-6)
    cr, sr = math.cos(rot), math.sin(rot)
    moved = Cluster(points_on([(cr * x - sr * y + tx, sr * x + cr * y + ty) for x, y in xy]))
    assert classify_cluster(moved) is classify_cluster(c)


# --------------------------------------------------------------------------- assignment


def test_assign_examples():
    assert assign_min_cost([[0.0]]) == [(0, 0)]
    cost = [[1, 2], [2, 4]]
    pairs = assign_min_cost(cost)
    assert pairs == [(0, 1), (1, 0)]
    assert total(cost, pairs) == 4 == brute_force_min(cost)


def test_assign_5x5_matches_permutation_oracle():
    rng = np.random.default_rng(0)
    cost = rng.uniform(0, 10, (5, 5)).tolist()
    assert total(cost, assign_min_cost(cost)) == brute_force_min(cost)


@pytest.mark.parametrize("shape", [(2, 4), (4, 2), (3, 5), (6, 1), (1, 3)])
def test_assign_rectangular(shape):
    rng = np.random.default_rng(sum(shape))
    for _ in range(50):
        cost = rng.integers(0, 20, shape).astype(float).tolist()
        pairs = assign_min_cost(cost)
        assert len(pairs) == min(shape)
        assert len({r for r, _ in pairs}) == len({c for _, c in pairs}) == min(shape)
        assert total(cost, pairs) == brute_force_min(cost)


def test_assign_rejects_bad_costs():
    with pytest.raises(ValueError):
        assign_min_cost([[1.0, -1.0]])
    with pytest.raises(ValueError):
        assign_min_cost([[1.0, math.inf]])
    assert assign_min_cost([]) == []


@settings(max_examples=300)
@given(st.integers(1, 6).flatmap(lambda n: st.lists(
    st.lists(st.integers(0, 9), min_size=n, max_size=n), min_size=n, max_size=n)))
def test_assign_property_integer_costs(cost):
    assert total(cost, assign_min_cost(cost)) == brute_force_min(cost)


# --------------------------------------------------------------------------- tracking


def _det(x, y):
    return Cluster(points_on([(x, y)]), Kind.OBSTACLE)


def test_update_tracks_cold_start():
    tracks = update_tracks([], [_det(0.3, 0.0)], 0.15)
    assert len(tracks) == 1
    assert tracks[0].velocity == Vec2(0.0, 0.0)
    assert tracks[0].age == 1


def test_update_tracks_velocity_ema():
    t = Track(0, Vec2(0, 0), Vec2(0, 0), last_seen=0)
    (nt,) = update_tracks([t], [_det(0.03, 0.0)], 0.15, step=1)
    assert nt.position == Vec2(0.03, 0.0)
    assert nt.velocity.x == pytest.approx(0.1, abs=1e-12)  # raw 0.2, halved by the EMA
    assert nt.velocity.y == 0.0
    assert nt.age == 2


def test_update_tracks_crossed_matches_oracle():
    tracks = [Track(0, Vec2(0, 0), Vec2(0, 0), 0), Track(1, Vec2(0.2, 0), Vec2(0, 0), 0)]
    dets = [_det(0.19, 0.02), _det(0.01, 0.02)]
    out = update_tracks(tracks, dets, 0.15, step=1)
    cost = [[(d.center_scan - t.position).norm() for d in dets] for t in tracks]
    best = min(itertools.permutations(range(2)), key=lambda p: sum(cost[i][p[i]] for i in range(2)))
    by_id = {t.id: t for t in out}
    assert len(out) == 2
    for ti, di in enumerate(best):
        assert by_id[ti].position == dets[di].center_scan


def test_update_tracks_gate_and_timeout():
    t = Track(0, Vec2(0, 0), Vec2(0, 0), last_seen=0)
    out = update_tracks([t], [_det(0.5, 0.0)], 0.15, step=1)
    assert {x.id for x in out} == {0, 1}  # beyond the 0.3 m gate: new track, old one kept
    out = update_tracks([t], [], 0.15, step=3)
    assert [x.id for x in out] == [0]
    assert update_tracks([t], [], 0.15, step=4) == []


def test_update_tracks_rejects_bad_dt():
    with pytest.raises(ValueError):
        update_tracks([], [], 0.0)


def test_estimate_center_exact_on_noise_free_arc():
    center = Vec2(0.4, 0.1)
    w = WorldState(RobotState(Pose(Vec2(0, 0), 0.0)), [ObstacleState(0, center, Vec2(0, 0), 0.1)],
                   Vec2(1, 1), ArenaSpec(5.0))
    _, (det,) = detect_obstacles(simulate_lidar(w), w.robot.pose)
    est = estimate_center(det, Vec2(0, 0), 0.1)
    assert (est - center).norm() < 1e-9
    assert estimate_center(det, None) == det.center_scan


# --------------------------------------------------------------------------- pipeline properties


@pytest.mark.parametrize("seed", range(4))
def test_wall_suppression_empty_arena(seed):
    tracker = Tracker(0.15)
    saw_wall = False
    for w in random_waypoint_walk(seed):
        assert detect_collision(w) is None
        labelled, dets = detect_obstacles(simulate_lidar(w), w.robot.pose)
        saw_wall |= any(c.kind is Kind.WALL for c in labelled)
        tracker.update(dets, w.robot.position)
        assert tracker.tracks == []
    assert saw_wall


def test_speed_converges_for_visible_obstacle():
    rng = np.random.default_rng(5)
    done = 0
    while done < 40:
        speed = rng.uniform(0.02, 0.2)
        p0 = Vec2.polar(rng.uniform(0.3, 0.6), rng.uniform(-math.pi, math.pi))
        v = Vec2.polar(speed, rng.uniform(-math.pi, math.pi))
        if any(not 0.3 <= (p0 + v * (0.15 * k)).norm() <= 0.6 for k in range(11)):
            continue
        w = WorldState(RobotState(Pose(Vec2(0, 0), rng.uniform(-3, 3))), [ObstacleState(0, p0, v, 0.1)],
                       Vec2(1, 1), ArenaSpec(5.0))
        tracker = Tracker(0.15)
        for k in range(11):
            _, dets = detect_obstacles(simulate_lidar(w), w.robot.pose)
            tracker.update(dets, w.robot.position)
            w = step_obstacles(w)
        (t,) = tracker.tracks
        assert abs(t.velocity.norm() - speed) <= 0.15 * speed
        done += 1
