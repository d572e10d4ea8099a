"""Independent reference computations used by the unit and acceptance tests.

Reference computations never import the code under test; the trajectory
generator at the bottom only drives the simulator to produce test inputs.
"""

import itertools
import math

import numpy as np


def brute_force_min(cost):
    """Exhaustive minimum over all maximal matchings of a rectangular cost matrix."""
    n, m = len(cost), len(cost[0])
    if n <= m:
        return min(sum(cost[i][c] for i, c in enumerate(cols)) for cols in itertools.permutations(range(m), n))
    return min(sum(cost[r][j] for j, r in enumerate(rows)) for rows in itertools.permutations(range(n), m))


def euler_unicycle(x, y, th, v, w, dt, substeps=10_000):
    h = dt / substeps
    for _ in range(substeps):
        x += v * math.cos(th) * h
        y += v * math.sin(th) * h
        th += w * h
    return x, y, th


def disks_ever_touch(offsets, rel_vels, combined_radius, horizon=10.0, step=1e-3):
    """Forward-integrate relative motion; True where the two disks ever overlap.

    ``offsets`` are obstacle-minus-robot positions (n, 2); ``rel_vels`` are
    robot-minus-obstacle velocities (n, 2), so the gap evolves as
    offset - rel_vel * t. ``combined_radius`` is scalar or (n,).
    """
    t = np.arange(0.0, horizon + step / 2, step)
    r = np.broadcast_to(np.asarray(combined_radius, dtype=float), (len(offsets),))
    out = np.empty(len(offsets), dtype=bool)
    for i, (d, v) in enumerate(zip(offsets, rel_vels)):
        gx = d[0] - v[0] * t
        gy = d[1] - v[1] * t
        out[i] = bool(np.any(gx * gx + gy * gy < r[i] * r[i]))
    return out


def central_difference(f, params, eps=1e-4):
    """Numerical gradient of scalar f() wrt each array in ``params`` (perturbed in place)."""
    grads = []
    for p in params:
        g = np.zeros_like(p, dtype=np.float64)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + eps
            hi = f()
            p[idx] = orig - eps
            lo = f()
            p[idx] = orig
            g[idx] = (hi - lo) / (2 * eps)
        grads.append(g)
    return grads


def brute_force_min_np(cost: np.ndarray, perms: np.ndarray | None = None) -> float:
    """Square-matrix exhaustive minimum, vectorized; totals summed in row order."""
    n = cost.shape[0]
    if perms is None:
        perms = np.array(list(itertools.permutations(range(n))))
    totals = cost[0, perms[:, 0]].copy()
    for i in range(1, n):
        totals += cost[i, perms[:, i]]
    return float(totals.min())


def euler_unicycle_np(x, y, th, v, w, dt, substeps=10_000):
    """Vectorized forward Euler over arrays of poses and actions."""
    x, y, th = (np.array(a, dtype=np.float64) for a in (x, y, th))
    h = dt / substeps
    for _ in range(substeps):
        x += v * np.cos(th) * h
        y += v * np.sin(th) * h
        th += w * h
    return x, y, th


def random_waypoint_walk(seed, half=1.0, margin=0.17, steps=500):
    """Yield worlds along a random-waypoint trajectory in an empty square arena.

    Drives at full speed toward uniformly drawn targets kept ``margin`` from
    the walls, turning in place when the heading error is large.
    """
    from rcnav.geometry import Pose, Vec2
    from rcnav.world import ArenaSpec, RobotState, WorldState, step_robot

    rng = np.random.default_rng(seed)
    lim = half - margin
    w = WorldState(RobotState(Pose(Vec2(0, 0), rng.uniform(-3, 3))), [], Vec2(0, 0), ArenaSpec(half))
    target = Vec2(*rng.uniform(-lim, lim, 2))
    for _ in range(steps):
        d = target - w.robot.position
        if d.norm() < 0.05:
            target = Vec2(*rng.uniform(-lim, lim, 2))
            d = target - w.robot.position
        err = math.remainder(d.angle() - w.robot.pose.heading, 2 * math.pi)
        w.robot = step_robot(w.robot, (0.22 if abs(err) < 0.3 else 0.0, max(-2.0, min(2.0, 4 * err))))
        yield w
