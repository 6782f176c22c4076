"""Coverage pathway planning, sector-gap suggestions, and tracked-walk
calibration.

The coverage planner lays a lattice over the area, orders it as a Hamilton
path (exact serpentine on full lattices, nearest-neighbor plus 2-opt
otherwise), and strips points and path edges as the walker covers ground or
obstacles turn up. Tracking dead-reckons the reported steps and snaps mark
points onto known AP positions, spreading each residual linearly over the
walked length between anchors.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from chi_walk.geometry import (
    Point2,
    point_segment_distance,
    sector_of_bearing,
)
from chi_walk.world import point_in_any_obstacle, segment_hits_obstacle

TWO_OPT_PASS_CAP = 10_000


# ---------------------------------------------------------------------------
# lattice + Hamilton path


def grid_points(x0: float, y0: float, x1: float, y1: float, spacing: float,
                obstacles=()) -> list:
    """Axis-aligned lattice from the lower-left corner, skipping obstacles."""
    if spacing <= 0:
        raise ValueError("spacing must be > 0")
    if x1 <= x0 or y1 <= y0:
        raise ValueError("degenerate area")
    nx = int(math.floor((x1 - x0) / spacing + 1e-9)) + 1
    ny = int(math.floor((y1 - y0) / spacing + 1e-9)) + 1
    pts = []
    for j in range(ny):
        for i in range(nx):
            p = Point2(x0 + i * spacing, y0 + j * spacing)
            if not point_in_any_obstacle(p, obstacles):
                pts.append(p)
    return pts


def _as_lattice(points):
    """Detect a full rectangular lattice; returns (xs, ys) or None."""
    xs = sorted({p.x for p in points})
    ys = sorted({p.y for p in points})
    if len(xs) * len(ys) != len(points):
        return None
    want = {(x, y) for x in xs for y in ys}
    have = {(p.x, p.y) for p in points}
    if want != have:
        return None
    if len(xs) > 1:
        dx = [b - a for a, b in zip(xs, xs[1:])]
        if max(dx) - min(dx) > 1e-9:
            return None
    if len(ys) > 1:
        dy = [b - a for a, b in zip(ys, ys[1:])]
        if max(dy) - min(dy) > 1e-9:
            return None
    return xs, ys


def _serpentine(xs, ys):
    path = []
    for j, y in enumerate(ys):
        row = xs if j % 2 == 0 else xs[::-1]
        path.extend(Point2(x, y) for x in row)
    return path


def path_length(path) -> float:
    return sum(a.distance_to(b) for a, b in zip(path, path[1:]))


def _start_index(points) -> int:
    """Lower-left start: minimal y, then minimal x."""
    return min(range(len(points)), key=lambda i: (points[i].y, points[i].x))


def _nearest_neighbor_order(points, start: int):
    n = len(points)
    xy = np.array([(p.x, p.y) for p in points])
    unvisited = set(range(n)) - {start}
    order = [start]
    cur = start
    while unvisited:
        rest = list(unvisited)
        d = np.linalg.norm(xy[rest] - xy[cur], axis=1)
        nxt = rest[int(np.argmin(d))]
        order.append(nxt)
        unvisited.remove(nxt)
        cur = nxt
    return order


def _distance_matrix(points) -> np.ndarray:
    xy = np.array([(p.x, p.y) for p in points])
    diff = xy[:, None, :] - xy[None, :, :]
    return np.sqrt((diff * diff).sum(axis=2))


def _local_search(dmat: np.ndarray, order):
    """Reversal (2-opt) and relocation (or-opt) improvement until no move
    helps; the start point stays fixed."""
    n = len(order)
    for _ in range(TWO_OPT_PASS_CAP):
        improved = False
        for i in range(0, n - 2):
            a, b = order[i], order[i + 1]
            d_ab = dmat[a, b]
            for j in range(i + 2, n):
                # replace edges (i,i+1) and (j,j+1) by (i,j) and (i+1,j+1);
                # at j == n-1 the path simply ends at order[i+1] instead
                c = order[j]
                if j + 1 < n:
                    e = order[j + 1]
                    delta = dmat[a, c] + dmat[b, e] - d_ab - dmat[c, e]
                else:
                    delta = dmat[a, c] - d_ab
                if delta < -1e-12:
                    order[i + 1:j + 1] = order[i + 1:j + 1][::-1]
                    improved = True
                    b = order[i + 1]
                    d_ab = dmat[a, b]
        # or-opt: relocate short runs of 1-3 points somewhere better
        for seg_len in (1, 2, 3):
            s = 1
            while s + seg_len <= len(order):
                prev = order[s - 1]
                first = order[s]
                last = order[s + seg_len - 1]
                nxt = order[s + seg_len] if s + seg_len < n else None
                if nxt is not None:
                    remove_gain = dmat[prev, first] + dmat[last, nxt] - dmat[prev, nxt]
                else:
                    remove_gain = dmat[prev, first]
                rest = order[:s] + order[s + seg_len:]
                best = None
                for k in range(len(rest)):
                    if rest[k] == prev and nxt is not None and k + 1 < len(rest) \
                       and rest[k + 1] == nxt:
                        continue  # reinserting in place
                    u = rest[k]
                    if k + 1 < len(rest):
                        v = rest[k + 1]
                        cost = dmat[u, first] + dmat[last, v] - dmat[u, v]
                    else:
                        cost = dmat[u, first]
                    if cost - remove_gain < -1e-12 and (best is None or cost < best[0]):
                        best = (cost, k)
                if best is not None:
                    seg = order[s:s + seg_len]
                    order[:] = rest[:best[1] + 1] + seg + rest[best[1] + 1:]
                    improved = True
                else:
                    s += 1
        if not improved:
            break
    return order


def shortest_hamilton_path(points, start: Point2 | None = None) -> list:
    """Order the points into a short open path visiting each exactly once.

    Starts at the lower-left point (or the given start) heading left-to-right.
    A full unobstructed lattice gets the serpentine sweep, which meets the
    (n-1)*spacing lower bound; anything else gets nearest-neighbor order
    improved by 2-opt until no reversal helps.
    """
    if not points:
        raise ValueError("no points to order")
    points = list(points)
    if len(points) == 1:
        return points

    lattice = _as_lattice(points)
    if lattice is not None and (start is None or
                                (start.x == lattice[0][0] and start.y == lattice[1][0])):
        return _serpentine(*lattice)

    if start is not None:
        start_idx = min(range(len(points)),
                        key=lambda i: points[i].distance_to(start))
    else:
        start_idx = _start_index(points)
    dmat = _distance_matrix(points)
    order = _local_search(dmat, _nearest_neighbor_order(points, start_idx))

    def length_of(o):
        return float(sum(dmat[a, b] for a, b in zip(o, o[1:])))

    # seeded double-bridge kicks shake the local optimum; keep the best result
    best_len = length_of(order)
    rng = np.random.default_rng(0)
    kicks = 8 if len(points) <= 40 else 3
    for _ in range(kicks):
        n = len(order)
        if n < 5:
            break
        cuts = sorted(rng.choice(np.arange(1, n), size=3, replace=False))
        a, b, c = (int(x) for x in cuts)
        kicked = order[:a] + order[b:c] + order[a:b] + order[c:]
        kicked = _local_search(dmat, kicked)
        kicked_len = length_of(kicked)
        if kicked_len < best_len - 1e-12:
            order, best_len = kicked, kicked_len
    return [points[i] for i in order]


# ---------------------------------------------------------------------------
# coverage plan maintenance


@dataclass
class CoveragePlan:
    """Pending lattice points organized as ordered path components."""

    components: list  # list of [Point2, ...]
    spacing: float
    start: Point2

    def pending_points(self) -> set:
        return {p.as_tuple() for comp in self.components for p in comp}

    def is_complete(self) -> bool:
        return not any(self.components)


def make_coverage_plan(x0, y0, x1, y1, spacing, obstacles=()) -> CoveragePlan:
    pts = grid_points(x0, y0, x1, y1, spacing, obstacles)
    path = shortest_hamilton_path(pts)
    return CoveragePlan(components=[path] if path else [],
                        spacing=spacing, start=path[0] if path else Point2(x0, y0))


def update_coverage(plan: CoveragePlan, trajectory, radius: float,
                    new_obstacles=()) -> CoveragePlan:
    """Strip covered points and obstacle-blocked path edges.

    Points within radius of the walked polyline disappear (their neighbors in
    the same component are re-spliced); path edges crossing a new obstacle are
    cut, splitting the component. Components are never re-joined.
    """
    def covered(p: Point2) -> bool:
        if not trajectory:
            return False
        if len(trajectory) == 1:
            return p.distance_to(trajectory[0]) <= radius
        return any(point_segment_distance(p, a, b) <= radius
                   for a, b in zip(trajectory, trajectory[1:]))

    new_components = []
    for comp in plan.components:
        kept = [p for p in comp if not covered(p)]
        # cut edges through new obstacles
        current = []
        for p in kept:
            if current and segment_hits_obstacle(current[-1], p, new_obstacles):
                new_components.append(current)
                current = [p]
            else:
                current.append(p)
        if current:
            new_components.append(current)
    return CoveragePlan(components=[c for c in new_components if c],
                        spacing=plan.spacing, start=plan.start)


# ---------------------------------------------------------------------------
# sector gaps and retracing


def sector_index(frm: Point2, to: Point2) -> int:
    if frm.x == to.x and frm.y == to.y:
        raise ValueError("coincident points have no bearing")
    return sector_of_bearing(math.degrees(math.atan2(to.y - frm.y, to.x - frm.x)))


@dataclass
class SectorSlot:
    neighbor: str | None = None
    status: str = "empty"  # empty | missing | collected | converged


@dataclass
class SectorGapReport:
    """Per AP: the nearest constellation neighbor in each of the 8 sectors and
    the collection status of the pool joining them."""

    slots: dict  # ap_id -> [SectorSlot x 8]


def build_sector_report(constellation_positions: dict, pools,
                        convergence_theta: float = 1.0) -> SectorGapReport:
    pool_status = {}
    for pool in pools:
        pair = frozenset((pool.ap_a, pool.ap_b))
        status = "collected"
        if pool.iteration >= 2:
            prev, cur = pool.fused_history[-2], pool.fused_history[-1]
            if math.hypot(cur[0] - prev[0], cur[1] - prev[1]) < convergence_theta:
                status = "converged"
        best = pool_status.get(pair)
        if best is None or (best == "collected" and status == "converged"):
            pool_status[pair] = status

    slots = {}
    ids = sorted(constellation_positions)
    for aid in ids:
        ax, ay = constellation_positions[aid]
        per_sector = [SectorSlot() for _ in range(8)]
        best_dist = [float("inf")] * 8
        for bid in ids:
            if bid == aid:
                continue
            bx, by = constellation_positions[bid]
            if bx == ax and by == ay:
                continue
            s = sector_index(Point2(ax, ay), Point2(bx, by))
            d = math.hypot(bx - ax, by - ay)
            if d < best_dist[s]:
                best_dist[s] = d
                per_sector[s].neighbor = bid
        for slot in per_sector:
            if slot.neighbor is not None:
                slot.status = pool_status.get(frozenset((aid, slot.neighbor)),
                                              "missing")
        slots[aid] = per_sector
    return SectorGapReport(slots=slots)


def _astar_grid(start: Point2, goal: Point2, spacing: float, blocked) -> list | None:
    """8-connected grid search between two points; blocked(p) marks keep-out."""
    def snap(p: Point2):
        return (round(p.x / spacing), round(p.y / spacing))

    def unsnap(c):
        return Point2(c[0] * spacing, c[1] * spacing)

    s, g = snap(start), snap(goal)
    limit = 8 * (abs(s[0] - g[0]) + abs(s[1] - g[1]) + 20)
    open_q = [(0.0, s)]
    best_g = {s: 0.0}
    came = {}
    moves = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)]
    visited = 0
    while open_q:
        _, cur = heapq.heappop(open_q)
        if cur == g:
            path = [goal]
            node = cur
            while node in came:
                node = came[node]
                path.append(unsnap(node))
            path.reverse()
            path[0] = start
            return path
        visited += 1
        if visited > limit * limit:
            return None
        for mx, my in moves:
            nxt = (cur[0] + mx, cur[1] + my)
            p = unsnap(nxt)
            if nxt != g and blocked(p):
                continue
            step = spacing * math.hypot(mx, my)
            cand = best_g[cur] + step
            if cand < best_g.get(nxt, float("inf")):
                best_g[nxt] = cand
                came[nxt] = cur
                h = spacing * math.hypot(nxt[0] - g[0], nxt[1] - g[1])
                heapq.heappush(open_q, (cand + h, nxt))
    return None


def sector_gap_paths(constellation_positions: dict, pools, obstacles=(),
                     mark_radius: float = 10.0, spacing: float | None = None) -> list:
    """Suggested walks for AP pairs whose sector slot has no collected pool.

    Each path avoids known obstacles and keeps outside the mark disk of every
    third AP so the walk cannot record a stray mark; pairs that cannot be
    joined are omitted.
    """
    if spacing is None:
        spacing = mark_radius / 2.0
    report = build_sector_report(constellation_positions, pools)
    suggestions = []
    seen = set()
    for aid in sorted(report.slots):
        for slot in report.slots[aid]:
            if slot.neighbor is None or slot.status != "missing":
                continue
            pair = frozenset((aid, slot.neighbor))
            if pair in seen:
                continue
            seen.add(pair)
            a = Point2(*constellation_positions[aid])
            b = Point2(*constellation_positions[slot.neighbor])
            third = [Point2(*constellation_positions[cid])
                     for cid in constellation_positions
                     if cid not in (aid, slot.neighbor)]

            def blocked(p: Point2) -> bool:
                if point_in_any_obstacle(p, obstacles):
                    return True
                return any(p.distance_to(t) <= mark_radius for t in third)

            if not segment_hits_obstacle(a, b, obstacles) and \
               not any(point_segment_distance(t, a, b) <= mark_radius for t in third):
                suggestions.append(((aid, slot.neighbor), [a, b]))
                continue
            path = _astar_grid(a, b, spacing, blocked)
            if path is not None:
                suggestions.append(((aid, slot.neighbor), path))
    return suggestions


def retrace_suggestions(pools, selected_keys, theta: float) -> list:
    """Positioning-selected pools that have not converged, oldest fuse first."""
    out = []
    for pool in pools:
        if pool.key not in selected_keys:
            continue
        if pool.iteration < 2:
            out.append((pool.last_fused_at, pool.key))
            continue
        prev, cur = pool.fused_history[-2], pool.fused_history[-1]
        if math.hypot(cur[0] - prev[0], cur[1] - prev[1]) >= theta:
            out.append((pool.last_fused_at, pool.key))
    out.sort()
    return [key for _, key in out]


# ---------------------------------------------------------------------------
# tracking with AP calibration


@dataclass(frozen=True)
class TrackQuery:
    t_start: float
    t_end: float
    area: tuple | None = None  # (x0, y0, x1, y1)

    def __post_init__(self):
        if self.t_start > self.t_end:
            raise ValueError("time range reversed")


@dataclass
class TrackedWalk:
    points: list          # calibrated Point2 per retained step boundary
    timestamps: list
    anchors: list         # (index, ap_id)
    dead_reckoned: list   # uncalibrated counterpart


def _dead_reckon(steps, origin: Point2):
    pts = [origin]
    for v in steps:
        dx, dy = v.offset()
        last = pts[-1]
        pts.append(Point2(last.x + dx, last.y + dy))
    return pts


def track(query: TrackQuery, steps, timestamps, marks, known_positions: dict,
          origin: Point2 = Point2(0.0, 0.0)) -> TrackedWalk:
    """Calibrated trajectory for a time range.

    steps[i] spans timestamps[i] -> timestamps[i+1]. Marks at APs with known
    positions become anchors: the mark point snaps onto the AP and the residual
    spreads linearly (by walked length) back to the previous anchor and forward
    to the next. Stretches with no anchor stay pure dead reckoning. Points
    outside the query area are dropped from the result.
    """
    if len(timestamps) != len(steps) + 1:
        raise ValueError("need one timestamp per step boundary")
    if not steps:
        raise ValueError("empty walk history")
    lo = 0
    while lo < len(steps) and timestamps[lo + 1] <= query.t_start:
        lo += 1
    hi = len(steps)
    while hi > lo and timestamps[hi - 1] >= query.t_end:
        hi -= 1
    if hi <= lo:
        raise ValueError("walk history does not cover the query range")
    steps = steps[lo:hi]
    times = timestamps[lo:hi + 1]

    dr = _dead_reckon(steps, origin)
    # arc length at each boundary
    arclen = [0.0]
    for v in steps:
        arclen.append(arclen[-1] + v.length)

    anchors = []
    for mark in marks:
        if mark.ap_id not in known_positions:
            continue
        t = mark.mark_time
        if not times[0] <= t <= times[-1]:
            continue
        idx = min(range(len(times)), key=lambda i: abs(times[i] - t))
        anchors.append((idx, mark.ap_id))
    anchors.sort()

    calibrated = [Point2(p.x, p.y) for p in dr]
    if anchors:
        # residual at each anchor index, interpolated by arc length between
        bounds = [(0, (0.0, 0.0))]
        for idx, ap in anchors:
            target = known_positions[ap]
            tx = target.x if isinstance(target, Point2) else target[0]
            ty = target.y if isinstance(target, Point2) else target[1]
            bounds.append((idx, (tx - dr[idx].x, ty - dr[idx].y)))
        calibrated = []
        for i, p in enumerate(dr):
            # locate the anchor interval containing i
            prev_i, prev_r = bounds[0]
            next_entry = None
            for idx, r in bounds[1:]:
                if idx <= i:
                    prev_i, prev_r = idx, r
                else:
                    next_entry = (idx, r)
                    break
            if next_entry is None:
                shift = prev_r  # past the last anchor: carry its residual
            else:
                ni, nr = next_entry
                span = arclen[ni] - arclen[prev_i]
                frac = 0.0 if span <= 0 else (arclen[i] - arclen[prev_i]) / span
                shift = (prev_r[0] + frac * (nr[0] - prev_r[0]),
                         prev_r[1] + frac * (nr[1] - prev_r[1]))
            calibrated.append(Point2(p.x + shift[0], p.y + shift[1]))

    keep = list(range(len(dr)))
    if query.area is not None:
        x0, y0, x1, y1 = query.area
        keep = [i for i in keep
                if x0 <= calibrated[i].x <= x1 and y0 <= calibrated[i].y <= y1]
    return TrackedWalk(points=[calibrated[i] for i in keep],
                       timestamps=[times[i] for i in keep],
                       anchors=anchors,
                       dead_reckoned=[dr[i] for i in keep])
