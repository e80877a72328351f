"""Deterministic SVG rendering of an instance and a walk.

Depots are red, task vertices green. Each sub-walk between consecutive depot
visits is a separate polyline, grouped under the depot it leaves from, and
every leg carries its 1-based order as a label.
"""

from __future__ import annotations

from collections import defaultdict
from typing import Optional
from xml.sax.saxutils import escape

from .core import Walk
from .errors import ValidationError
from .instance import Instance

SIZE = 640
MARGIN = 32


def _fmt(x: float) -> str:
    s = f"{x:.2f}"
    return "0.00" if s == "-0.00" else s


def render_svg(instance: Instance, walk: Optional[Walk] = None, title: Optional[str] = None,
               labels: bool = True) -> str:
    if instance.coords is None:
        raise ValidationError("instance has no coordinates to plot")
    pts = instance.coords
    if walk is not None:
        for s in walk.steps:
            if not 0 <= s.node < len(pts):
                raise ValidationError(f"walk node {s.node} is not part of instance {instance.name}")
    xmin, ymin = pts.min(axis=0)
    xmax, ymax = pts.max(axis=0)
    span = max(xmax - xmin, ymax - ymin, 1e-9)
    scale = (SIZE - 2 * MARGIN) / span

    def xy(v):
        x, y = pts[v]
        return MARGIN + (x - xmin) * scale, SIZE - MARGIN - (y - ymin) * scale

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" '
        f'viewBox="0 0 {SIZE} {SIZE}">',
        f"<title>{escape(title or instance.name)}</title>",
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    if walk is not None and len(walk.steps) > 1:
        nodes = walk.nodes
        groups = defaultdict(list)
        start, leg = 0, 0
        legs = []
        for i in range(1, len(nodes)):
            leg += 1
            legs.append((leg, nodes[i - 1], nodes[i]))
            if instance.is_depot[nodes[i]] or i == len(nodes) - 1:
                groups[nodes[start]].append(nodes[start:i + 1])
                start = i
        out.append('<g id="walk" fill="none" stroke="#1f4e9c" stroke-width="1.5">')
        for q in sorted(groups):
            out.append(f'<g class="depot-group" data-depot="{q}">')
            for sub in groups[q]:
                coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in map(xy, sub))
                out.append(f'<polyline points="{coords}"/>')
            out.append("</g>")
        out.append("</g>")
        if labels:
            out.append('<g id="leg-labels" font-family="sans-serif" font-size="8" fill="#444">')
            for k, a, b in legs:
                (x1, y1), (x2, y2) = xy(a), xy(b)
                out.append(f'<text x="{_fmt((x1 + x2) / 2)}" y="{_fmt((y1 + y2) / 2)}">{k}</text>')
            out.append("</g>")
    out.append('<g id="tasks" fill="green">')
    for v in instance.task_ids:
        x, y = xy(v)
        out.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="3"><title>{v}</title></circle>')
    out.append("</g>")
    out.append('<g id="depots" fill="red">')
    for q in instance.depot_ids:
        x, y = xy(q)
        out.append(f'<rect x="{_fmt(x - 4)}" y="{_fmt(y - 4)}" width="8" height="8">'
                   f"<title>{q}</title></rect>")
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
