import pytest

from rcnav.env import NavEnv
from rcnav.metrics import EpisodeLog, run_episode
from rcnav.policies import ScriptedPolicy
from rcnav.render import render_svg
from rcnav.world import eval_scenario


def header(n_obstacles=2):
    return {"type": "episode", "arena_half_extent": 2.0, "start": [-1.5, 0.0], "goal": [1.5, 0.0],
            "robot": [-1.5, 0.0, 0.0], "robot_radius": 0.089, "obstacle_radius": 0.1,
            "obstacles": [[0.1 * i, 1.0] for i in range(n_obstacles)]}


def step(i, n_obstacles=2, reached=None):
    return {"type": "step", "step": i, "robot": [-1.5 + 0.033 * i, 0.0, 0.0],
            "obstacles": [[0.1 * j, 1.0 - 0.01 * i] for j in range(n_obstacles)], "waypoint_reached": reached}


def test_one_step_log_has_one_robot_marker():
    svg = render_svg(EpisodeLog(header(), [step(1)], "running"))
    assert svg.count('class="robot-pos"') == 1
    assert svg.count('class="robot-path"') == 1
    assert svg.count('class="obstacle-path"') == 2


def test_waypoint_markers_count():
    steps = [step(i, reached=[-1.0 + 0.6 * i, 0.0] if i in (3, 6, 9) else None) for i in range(1, 11)]
    svg = render_svg(EpisodeLog(header(), steps, "running"))
    assert svg.count('class="waypoint"') == 3


def test_render_is_byte_deterministic():
    env = NavEnv(eval_scenario("random", seed=1))
    log = run_episode(env, ScriptedPolicy(), seed=1)
    assert render_svg(log) == render_svg(log)
    assert render_svg(log).count('class="obstacle-path"') == 20


def test_empty_log_rejected():
    with pytest.raises(ValueError):
        render_svg(EpisodeLog(header(), [], "running"))
