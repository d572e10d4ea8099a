import math

import numpy as np
import pytest

from oracles import euler_unicycle
from rcnav.geometry import Pose, Vec2
from rcnav.world import (
    ArenaSpec,
    Behavior,
    ObstacleState,
    RobotState,
    ScenarioSpec,
    SpawnError,
    WorldState,
    detect_collision,
    eval_scenario,
    reset_scenario,
    simulate_lidar,
    step_obstacles,
    step_robot,
    training_scenario,
)


def robot_at(x, y, th=0.0):
    return RobotState(Pose(Vec2(x, y), th))


def world_with(robot, obstacles=(), half=1.0):
    return WorldState(robot, list(obstacles), Vec2(0.9, 0.0), ArenaSpec(half))


# --------------------------------------------------------------------------- kinematics


def test_step_robot_straight():
    r = step_robot(robot_at(0, 0), (0.22, 0.0), 0.15)
    assert r.position.x == pytest.approx(0.033, abs=1e-12)
    assert r.position.y == pytest.approx(0.0, abs=1e-12)
    assert r.pose.heading == 0.0


def test_step_robot_pure_rotation():
    r = step_robot(robot_at(0, 0), (0.0, 2.0), 0.15)
    assert r.position == Vec2(0.0, 0.0)
    assert r.pose.heading == pytest.approx(0.3, abs=1e-12)


def test_step_robot_arc_matches_euler_oracle():
    r = step_robot(robot_at(0, 0), (0.22, 2.0), 0.15)
    ex, ey, _ = euler_unicycle(0.0, 0.0, 0.0, 0.22, 2.0, 0.15)
    assert r.position.x == pytest.approx(0.11 * math.sin(0.3), abs=1e-12)
    assert r.position.y == pytest.approx(0.11 * (1 - math.cos(0.3)), abs=1e-12)
    assert r.position.x == pytest.approx(0.0325072, abs=1e-7)
    assert r.position.y == pytest.approx(0.0049130, abs=1e-7)
    assert math.hypot(r.position.x - ex, r.position.y - ey) <= 1e-6


def test_step_robot_clamps_and_records():
    r = step_robot(robot_at(0, 0), (1.0, -5.0), 0.15)
    assert r.linear_vel == 0.22
    assert r.angular_vel == -2.0


def test_step_robot_rejects_non_finite():
    with pytest.raises(ValueError):
        step_robot(robot_at(0, 0), (math.nan, 0.0))


def test_robot_speed_bound_random_actions():
    rng = np.random.default_rng(3)
    r = robot_at(0, 0)
    for _ in range(2000):
        nxt = step_robot(r, (rng.uniform(-0.5, 0.5), rng.uniform(-3, 3)), 0.15)
        assert (nxt.position - r.position).norm() <= 0.22 * 0.15 + 1e-9
        r = nxt


# --------------------------------------------------------------------------- obstacles


def test_step_obstacles_linear():
    w = world_with(robot_at(-0.5, 0), [ObstacleState(0, Vec2(0, 0), Vec2(0.044, 0))])
    o = step_obstacles(w, 0.15).obstacles[0]
    assert o.position.x == pytest.approx(0.0066, abs=1e-12)
    assert o.position.y == 0.0


def test_step_obstacles_reflects_and_conserves_speed():
    # disk surface 0.001 m from the right wall, heading into it
    o = ObstacleState(0, Vec2(1.0 - 0.1 - 0.001, 0.2), Vec2(0.2, 0.05))
    nxt = step_obstacles(world_with(robot_at(-0.5, 0), [o]), 0.15).obstacles[0]
    assert nxt.velocity.x < 0
    assert nxt.velocity.y == 0.05
    assert abs(nxt.velocity.norm() - o.velocity.norm()) <= 1e-12


def test_step_obstacles_non_cooperative_overlap_allowed():
    a = ObstacleState(0, Vec2(-0.1, 0), Vec2(0.2, 0))
    b = ObstacleState(1, Vec2(0.1, 0), Vec2(-0.2, 0))
    w = world_with(robot_at(-0.8, -0.8), [a, b])
    for _ in range(3):
        w = step_obstacles(w, 0.15)
    pa, pb = w.obstacles[0].position, w.obstacles[1].position
    assert pa.x == pytest.approx(-0.1 + 0.09)
    assert pb.x == pytest.approx(0.1 - 0.09)


def test_speed_conserved_over_long_run():
    w = reset_scenario(training_scenario(obstacle_count=6, seed=11))
    speeds = [o.velocity.norm() for o in w.obstacles]
    for _ in range(400):
        w = step_obstacles(w, 0.15)
    for o, s in zip(w.obstacles, speeds):
        assert abs(o.velocity.norm() - s) <= 1e-12


# --------------------------------------------------------------------------- collisions


def test_detect_collision_examples():
    r = robot_at(0, 0)
    assert detect_collision(world_with(r, [ObstacleState(0, Vec2(0.3, 0), Vec2(0, 0))])) is None
    hit = detect_collision(world_with(r, [ObstacleState(0, Vec2(0.15, 0), Vec2(0, 0))]))
    assert hit is not None and hit.kind == "obstacle"
    wall_hit = detect_collision(world_with(robot_at(0.95, 0), []))
    assert wall_hit is not None and wall_hit.kind == "wall"


# --------------------------------------------------------------------------- scenarios


def test_reset_empty_crowd():
    w = reset_scenario(eval_scenario("random", obstacle_count=0))
    assert w.obstacles == []
    assert w.robot.pose.heading == pytest.approx(0.0)


def test_reset_towards_aims_at_start():
    spec = eval_scenario(Behavior.TOWARDS, obstacle_count=1, obstacle_speed=0.22 / 5, seed=5)
    o = reset_scenario(spec).obstacles[0]
    assert o.velocity.norm() == pytest.approx(0.044)
    to_start = spec.start - o.position
    ang = abs(math.remainder(o.velocity.angle() - to_start.angle(), 2 * math.pi))
    assert ang <= math.radians(10)


@pytest.mark.parametrize("behavior", list(Behavior))
def test_reset_deterministic(behavior):
    spec = eval_scenario(behavior, seed=42) if behavior is not Behavior.TRAINING_RANDOM \
        else training_scenario(seed=42)
    a, b = reset_scenario(spec), reset_scenario(spec)
    assert a == b


@pytest.mark.parametrize("behavior", [b for b in Behavior if b is not Behavior.TRAINING_RANDOM])
def test_spawns_are_valid(behavior):
    spec = eval_scenario(behavior, seed=9)
    w = reset_scenario(spec)
    assert len(w.obstacles) == 20
    assert detect_collision(w) is None
    for i, o in enumerate(w.obstacles):
        assert spec.arena.contains(o.position, o.radius)
        assert o.velocity.norm() == pytest.approx(spec.obstacle_speed)
        for q in w.obstacles[i + 1:]:
            assert (o.position - q.position).norm() >= o.radius + q.radius


def test_behavior_velocity_patterns():
    along = Vec2(1, 0)
    ahead = reset_scenario(eval_scenario("ahead", seed=1))
    assert all(o.velocity.unit() == along for o in ahead.obstacles)
    assert all(o.position.x > -1.0 for o in ahead.obstacles)
    crossing = reset_scenario(eval_scenario("crossing", seed=1))
    for o in crossing.obstacles:
        assert o.velocity.x == pytest.approx(0.0, abs=1e-15)
        assert o.position.y * o.velocity.y < 0  # moving toward the start-goal line


def test_training_random_speeds():
    w = reset_scenario(training_scenario(obstacle_count=6, obstacle_speed=0.2, seed=2))
    assert all(0 < o.velocity.norm() <= 0.2 for o in w.obstacles)


def test_spawn_failure_reported():
    spec = ScenarioSpec(Behavior.RANDOM, 200, 0.1, ArenaSpec(1.0), Vec2(-0.5, 0), Vec2(0.5, 0))
    with pytest.raises(SpawnError, match="too dense"):
        reset_scenario(spec)


def test_trajectory_determinism():
    spec = eval_scenario("crossing", seed=77)
    rng = np.random.default_rng(0)
    actions = [(rng.uniform(0, 0.22), rng.uniform(-2, 2)) for _ in range(50)]

    def rollout():
        w = reset_scenario(spec)
        out = []
        for a in actions:
            w.robot = step_robot(w.robot, a)
            w = step_obstacles(w)
            out.append((w.robot, tuple(w.obstacles)))
        return out

    assert rollout() == rollout()


# --------------------------------------------------------------------------- lidar


def test_lidar_empty_center_of_training_arena():
    scan = simulate_lidar(world_with(robot_at(0, 0), [], half=1.0))
    assert scan.ranges.shape == (360,)
    assert scan.ranges[0] == 0.6
    assert np.all(scan.ranges == 0.6)


def test_lidar_sees_obstacle_ahead():
    w = world_with(robot_at(0, 0), [ObstacleState(0, Vec2(0.3, 0), Vec2(0, 0), 0.1)], half=1.0)
    scan = simulate_lidar(w)
    assert scan.ranges[0] == pytest.approx(0.2, abs=1e-12)
    assert scan.ranges[180] == 0.6


def test_lidar_beam_order_counter_clockwise():
    w = world_with(robot_at(0, 0, math.pi / 2), [ObstacleState(0, Vec2(-0.3, 0), Vec2(0, 0), 0.1)])
    scan = simulate_lidar(w)
    # obstacle to the world -x side = 90 degrees counter-clockwise of a +y heading
    assert scan.ranges[90] == pytest.approx(0.2, abs=1e-12)


def test_lidar_dead_zone_reports_sentinel():
    w = world_with(robot_at(0, 0), [ObstacleState(0, Vec2(0.19, 0), Vec2(0, 0), 0.1)])
    assert simulate_lidar(w).ranges[0] == 0.6


def _inside_any(px, py, world):
    h = world.arena.half_extent
    out = (np.abs(px) >= h) | (np.abs(py) >= h)
    for o in world.obstacles:
        out |= (px - o.position.x) ** 2 + (py - o.position.y) ** 2 <= o.radius ** 2
    return out


def test_lidar_soundness_against_dense_sampling():
    rng = np.random.default_rng(12)
    for trial in range(8):
        w = reset_scenario(eval_scenario("random", seed=trial))
        w.robot = RobotState(Pose(Vec2(*rng.uniform(-1.6, 1.6, 2)), rng.uniform(-3, 3)))
        if detect_collision(w) is not None:
            continue
        scan = simulate_lidar(w)
        samples = np.arange(0.0, 0.6, 1e-4)
        for i in range(0, 360, 3):
            th = w.robot.pose.heading + math.radians(i)
            px = w.robot.pose.x + samples * math.cos(th)
            py = w.robot.pose.y + samples * math.sin(th)
            blocked = _inside_any(px, py, w)
            first = samples[np.argmax(blocked)] if blocked.any() else None
            r = scan.ranges[i]
            if r < 0.6:
                assert first is not None and abs(first - r) <= 1e-4 + 1e-6
            else:
                assert first is None or first < 0.105 or first > 0.6 - 2e-4
