"""Static SVG rendering of a logged episode.

Output is a pure function of the log: same records, same bytes.
"""

from __future__ import annotations

from .metrics import EpisodeLog

SCALE = 100.0  # pixels per meter
MARGIN = 20.0

STYLE = (".arena{fill:#fafafa;stroke:#333;stroke-width:2}"
         ".robot-path{fill:none;stroke:#1f77b4;stroke-width:2}"
         ".obstacle-path{fill:none;stroke:#d62728;stroke-width:1;opacity:.6}"
         ".robot-pos{fill:#1f77b4;opacity:.35}"
         ".obstacle-end{fill:none;stroke:#d62728}"
         ".waypoint{fill:#2ca02c}"
         ".start{fill:#555}.goal{fill:none;stroke:#2ca02c;stroke-width:2}")


def _n(x: float) -> str:
    s = f"{x:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def render_svg(log: EpisodeLog) -> str:
    if not log.steps:
        raise ValueError("cannot render an empty episode log")
    h = log.header
    half = float(h["arena_half_extent"])
    size = 2 * half * SCALE + 2 * MARGIN

    def px(x: float, y: float) -> tuple[str, str]:
        return _n(MARGIN + (x + half) * SCALE), _n(MARGIN + (half - y) * SCALE)

    def pts(seq) -> str:
        return " ".join(",".join(px(x, y)) for x, y in seq)

    robot_r = _n(float(h.get("robot_radius", 0.089)) * SCALE)
    obst_r = _n(float(h.get("obstacle_radius", 0.1)) * SCALE)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_n(size)}" height="{_n(size)}" '
        f'viewBox="0 0 {_n(size)} {_n(size)}">',
        f"<style>{STYLE}</style>",
        f'<rect class="arena" x="{_n(MARGIN)}" y="{_n(MARGIN)}" width="{_n(2 * half * SCALE)}" '
        f'height="{_n(2 * half * SCALE)}"/>',
    ]
    for i, start in enumerate(h["obstacles"]):
        path = [start] + [s["obstacles"][i] for s in log.steps]
        out.append(f'<polyline class="obstacle-path" points="{pts(path)}"/>')
        x, y = px(*path[-1])
        out.append(f'<circle class="obstacle-end" cx="{x}" cy="{y}" r="{obst_r}"/>')
    robot = [h["robot"][:2]] + [s["robot"][:2] for s in log.steps]
    out.append(f'<polyline class="robot-path" points="{pts(robot)}"/>')
    for s in log.steps:
        x, y = px(*s["robot"][:2])
        out.append(f'<circle class="robot-pos" cx="{x}" cy="{y}" r="{robot_r}"/>')
    for s in log.steps:
        if s.get("waypoint_reached") is not None:
            x, y = px(*s["waypoint_reached"])
            out.append(f'<circle class="waypoint" cx="{x}" cy="{y}" r="4"/>')
    x, y = px(*h["start"])
    out.append(f'<rect class="start" x="{_n(float(x) - 5)}" y="{_n(float(y) - 5)}" width="10" height="10"/>')
    x, y = px(*h["goal"])
    out.append(f'<circle class="goal" cx="{x}" cy="{y}" r="8"/>')
    out.append(f"<!-- outcome: {log.outcome}, steps: {len(log.steps)} -->")
    out.append("</svg>")
    return "\n".join(out) + "\n"
