"""Floor-plan inference from walked trajectories.

Everything a walker traverses is a Passage by default. Closed paths upgrade to
either a dead-end block (the loop doubles back on itself) or a Room with one
Entrance (the loop encloses area); long turns that two segments cannot
approximate become Rooms with an Entrance at each end. Components an operator
corrected and locked are never touched by inference again.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from chi_walk.geometry import Point2, point_segment_distance, polyline_length


@dataclass(frozen=True)
class PlanRuleConfig:
    closure_radius: float = 1.5
    overlap_tolerance: float = 1.0
    turn_length_threshold: float = 5.0
    polyline_fit_tolerance: float = 1.0
    grid_spacing: float = 2.0

    def __post_init__(self):
        for name in ("closure_radius", "overlap_tolerance",
                     "turn_length_threshold", "polyline_fit_tolerance",
                     "grid_spacing"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")


@dataclass(frozen=True)
class FloorComponent:
    """One plan element.

    kind 'passage' carries a polyline, 'room' a polygon (hull or snapped
    rectangle), 'entrance' a point plus opening width. Locked components are
    immutable to inference; source records whether an operator drew it.
    """

    component_id: str
    kind: str                 # passage | room | entrance
    geometry: tuple           # polyline / polygon: ((x, y), ...); entrance: ((x, y),)
    width: float = 0.0        # entrances only
    locked: bool = False
    source: str = "inferred"  # inferred | corrected

    def __post_init__(self):
        if self.kind not in ("passage", "room", "entrance"):
            raise ValueError(f"unknown component kind {self.kind!r}")
        if self.source not in ("inferred", "corrected"):
            raise ValueError(f"unknown source {self.source!r}")


@dataclass
class FloorPlan:
    components: dict = field(default_factory=dict)  # id -> FloorComponent
    blocks: list = field(default_factory=list)      # dead-end block points (x, y)
    next_id: int = 0

    def allocate_id(self) -> str:
        cid = f"c{self.next_id:04d}"
        self.next_id += 1
        return cid

    def add(self, component: FloorComponent) -> str:
        self.components[component.component_id] = component
        return component.component_id


# ---------------------------------------------------------------------------
# loop detection and classification


def detect_closed_paths(points, closure_radius: float) -> list:
    """Maximal time-disjoint sub-paths whose endpoints close within the radius.

    A closure must travel somewhere: sub-paths that never leave the closure
    disk are ignored.
    """
    loops = []
    n = len(points)
    i = 0
    while i < n - 2:
        best_j = None
        for j in range(n - 1, i + 1, -1):
            if points[i].distance_to(points[j]) <= closure_radius:
                far = max(points[k].distance_to(points[i]) for k in range(i, j + 1))
                if far > closure_radius:
                    best_j = j
                    break
        if best_j is None:
            i += 1
        else:
            loops.append((i, best_j))
            i = best_j
    return loops


def _directed_polyline_gap(a, b) -> float:
    """Max distance from a vertex of polyline a to its nearest point on b."""
    worst = 0.0
    for p in a:
        if len(b) == 1:
            d = p.distance_to(b[0])
        else:
            d = min(point_segment_distance(p, u, v) for u, v in zip(b, b[1:]))
        if d > worst:
            worst = d
    return worst


def overlap_gap(forward, backward) -> float:
    """Symmetric gap between two polylines (directed Hausdorff both ways)."""
    return max(_directed_polyline_gap(forward, backward),
               _directed_polyline_gap(backward, forward))


def convex_hull(points) -> list:
    """Andrew's monotone chain; returns hull vertices counter-clockwise."""
    pts = sorted({(p.x, p.y) for p in points})
    if len(pts) <= 2:
        return [Point2(x, y) for x, y in pts]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    return [Point2(x, y) for x, y in hull]


def _polygon_area(pts) -> float:
    area = 0.0
    n = len(pts)
    for i in range(n):
        a, b = pts[i], pts[(i + 1) % n]
        area += a.x * b.y - b.x * a.y
    return abs(area) / 2.0


def room_geometry(points) -> tuple:
    """Hull of the walked region, snapped to its bounding rectangle when the
    hull already fills most of it (plans draw rectangular rooms)."""
    hull = convex_hull(points)
    if len(hull) < 3:
        return tuple((p.x, p.y) for p in hull)
    xs = [p.x for p in hull]
    ys = [p.y for p in hull]
    rect = [(min(xs), min(ys)), (max(xs), min(ys)),
            (max(xs), max(ys)), (min(xs), max(ys))]
    rect_area = (max(xs) - min(xs)) * (max(ys) - min(ys))
    if rect_area > 0 and _polygon_area(hull) >= 0.9 * rect_area:
        return tuple(rect)
    return tuple((p.x, p.y) for p in hull)


def classify_loop(points, config: PlanRuleConfig):
    """('dead_end', block point) or ('room', geometry, entrance point).

    The loop splits at its farthest point from the closure; when the outbound
    and return halves run within the overlap tolerance of each other the walk
    doubled back (dead end), otherwise it enclosed a room entered and left
    through the closure point.
    """
    closure = Point2(0.5 * (points[0].x + points[-1].x),
                     0.5 * (points[0].y + points[-1].y))
    far_idx = max(range(len(points)), key=lambda k: points[k].distance_to(closure))
    forward = points[:far_idx + 1]
    backward = points[far_idx:][::-1]
    if overlap_gap(forward, backward) <= config.overlap_tolerance:
        return ("dead_end", points[far_idx])
    return ("room", room_geometry(points), closure)


def best_two_segment_fit(points) -> float:
    """Max deviation of the best single-breakpoint two-segment approximation."""
    if len(points) < 3:
        return 0.0
    best = None
    for k in range(1, len(points) - 1):
        worst = 0.0
        for i, p in enumerate(points):
            if i <= k:
                d = point_segment_distance(p, points[0], points[k])
            else:
                d = point_segment_distance(p, points[k], points[-1])
            worst = max(worst, d)
        if best is None or worst < best:
            best = worst
    return best


def classify_turn(points, config: PlanRuleConfig):
    """('room', geometry, entrance_a, entrance_b) when a long turn cannot be
    drawn as a broken line, else None."""
    if len(points) < 3:
        return None
    if polyline_length(points) <= config.turn_length_threshold:
        return None
    if best_two_segment_fit(points) <= config.polyline_fit_tolerance:
        return None
    return ("room", room_geometry(points), points[0], points[-1])


# ---------------------------------------------------------------------------
# turn extraction (which stretches of a walk are candidate turns)


def _straight_runs(points, heading_tolerance_deg: float = 20.0) -> list:
    """Indices (start, end) of maximal near-straight runs of the polyline."""
    if len(points) < 2:
        return []
    runs = []
    run_start = 0
    base = None
    for i in range(len(points) - 1):
        seg = math.degrees(math.atan2(points[i + 1].y - points[i].y,
                                      points[i + 1].x - points[i].x))
        if base is None:
            base = seg
        else:
            diff = abs((seg - base + 180.0) % 360.0 - 180.0)
            if diff > heading_tolerance_deg:
                runs.append((run_start, i))
                run_start = i
                base = seg
    runs.append((run_start, len(points) - 1))
    return runs


def extract_turns(points, min_straight_length: float = 2.0) -> list:
    """Sub-paths bounded by two straight segments (the candidate turns).

    Each turn keeps a short stretch of its bounding straights so the
    two-segment fit judges the bend in context; a bare arc with no approaches
    is always two-segment representable.
    """
    runs = _straight_runs(points)
    long_runs = [r for r in runs
                 if polyline_length(points[r[0]:r[1] + 1]) >= min_straight_length]
    turns = []
    for (s0, e0), (s1, e1) in zip(long_runs, long_runs[1:]):
        if s1 <= e0:
            continue
        # tails grow with the bend so run-grouping cannot starve the fit of
        # its approach context
        core = polyline_length(points[e0:s1 + 1])
        tail_budget = max(min_straight_length, core)
        lo = e0
        tail = 0.0
        while lo > s0 and tail < tail_budget:
            tail += points[lo].distance_to(points[lo - 1])
            lo -= 1
        hi = s1
        tail = 0.0
        while hi < e1 and tail < tail_budget:
            tail += points[hi].distance_to(points[hi + 1])
            hi += 1
        turns.append(points[lo:hi + 1])
    return turns


# ---------------------------------------------------------------------------
# inference over a plan


def apply_inference(plan: FloorPlan, trajectories, config: PlanRuleConfig) -> FloorPlan:
    """Re-derive inferred components from the trajectories.

    Inference is a pure function of the walked trajectories: each call drops
    previously inferred components and rebuilds them, so reruns on unchanged
    input are identical. Corrected and locked components pass through
    untouched, and no inferred geometry replaces them.
    """
    kept = {cid: comp for cid, comp in plan.components.items()
            if comp.locked or comp.source == "corrected"}
    out = FloorPlan(components=dict(kept), blocks=[], next_id=plan.next_id)

    locked_rooms = [comp for comp in kept.values() if comp.kind == "room"]

    def inside_locked(p: Point2) -> bool:
        for room in locked_rooms:
            xs = [x for x, _ in room.geometry]
            ys = [y for _, y in room.geometry]
            if min(xs) <= p.x <= max(xs) and min(ys) <= p.y <= max(ys):
                return True
        return False

    inferred = []
    blocks = []
    for traj in trajectories:
        if len(traj) < 2:
            continue
        inferred.append(("passage", tuple((p.x, p.y) for p in traj)))
        for i, j in detect_closed_paths(traj, config.closure_radius):
            loop = traj[i:j + 1]
            verdict = classify_loop(loop, config)
            if verdict[0] == "dead_end":
                if not inside_locked(verdict[1]):
                    blocks.append((verdict[1].x, verdict[1].y))
            else:
                _, geometry, entrance = verdict
                if not inside_locked(entrance):
                    inferred.append(("room", geometry))
                    inferred.append(("entrance", ((entrance.x, entrance.y),)))
        for turn in extract_turns(traj):
            verdict = classify_turn(turn, config)
            if verdict is not None:
                _, geometry, ent_a, ent_b = verdict
                if inside_locked(ent_a) or inside_locked(ent_b):
                    continue
                inferred.append(("room", geometry))
                inferred.append(("entrance", ((ent_a.x, ent_a.y),)))
                inferred.append(("entrance", ((ent_b.x, ent_b.y),)))

    # deterministic ids: content-ordered allocation, never touching an id a
    # kept (corrected or locked) component already owns
    inferred.sort()
    seen = set()
    counter = 0
    for kind, geometry in inferred:
        key = (kind, geometry)
        if key in seen:
            continue
        seen.add(key)
        while f"i{counter:04d}" in out.components:
            counter += 1
        cid = f"i{counter:04d}"
        counter += 1
        out.components[cid] = FloorComponent(
            component_id=cid, kind=kind, geometry=geometry,
            width=config.grid_spacing if kind == "entrance" else 0.0)
    out.blocks = sorted(set(blocks))
    return out


def correct_component(plan: FloorPlan, component_id: str,
                      geometry=None, kind: str | None = None,
                      lock: bool = False) -> FloorPlan:
    """Operator correction: replace geometry/kind, optionally lock forever.

    Locked components reject further modification; there is no unlock.
    """
    comp = plan.components.get(component_id)
    if comp is None:
        raise KeyError(f"unknown component {component_id!r}")
    if comp.locked:
        raise ValueError(f"component {component_id} is locked")
    new = replace(comp,
                  geometry=tuple(tuple(xy) for xy in geometry) if geometry is not None else comp.geometry,
                  kind=kind if kind is not None else comp.kind,
                  locked=bool(lock),
                  source="corrected")
    plan.components[component_id] = new
    return plan


# ---------------------------------------------------------------------------
# export


def plan_to_dict(plan: FloorPlan) -> dict:
    return {
        "components": [
            {"id": comp.component_id, "kind": comp.kind,
             "geometry": [list(xy) for xy in comp.geometry],
             "width": comp.width, "locked": comp.locked, "source": comp.source}
            for _, comp in sorted(plan.components.items())
        ],
        "blocks": [list(b) for b in plan.blocks],
    }


def export_plan_json(plan: FloorPlan, path) -> None:
    with open(path, "w") as fh:
        json.dump(plan_to_dict(plan), fh, indent=2, sort_keys=True)


def export_plan_svg(plan: FloorPlan, path, scale: float = 6.0) -> None:
    xs = [x for comp in plan.components.values() for x, _ in comp.geometry]
    ys = [y for comp in plan.components.values() for _, y in comp.geometry]
    if not xs:
        xs, ys = [0.0], [0.0]
    pad = 2.0
    x0, y0 = min(xs) - pad, min(ys) - pad
    w = (max(xs) - x0 + pad) * scale
    h = (max(ys) - y0 + pad) * scale

    def sx(x):
        return (x - x0) * scale

    def sy(y):
        return h - (y - y0) * scale

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0f}" height="{h:.0f}">']
    for _, comp in sorted(plan.components.items()):
        pts = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in comp.geometry)
        if comp.kind == "room":
            stroke = "#7a1fa2" if comp.locked else "#1565c0"
            parts.append(f'<polygon points="{pts}" fill="#bbdefb" fill-opacity="0.5" '
                         f'stroke="{stroke}" stroke-width="2"/>')
        elif comp.kind == "passage":
            parts.append(f'<polyline points="{pts}" fill="none" stroke="#666" '
                         f'stroke-width="1.5"/>')
        else:
            x, y = comp.geometry[0]
            parts.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="4" '
                         f'fill="#2e7d32"/>')
    for bx, by in plan.blocks:
        parts.append(f'<rect x="{sx(bx) - 4:.1f}" y="{sy(by) - 4:.1f}" width="8" '
                     f'height="8" fill="#c62828"/>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))
