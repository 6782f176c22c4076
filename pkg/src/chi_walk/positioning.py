"""Relative AP positioning from displacement edges, and the rigid-alignment
error metric the evaluation scores with.

Positioning runs an anchored neighborhood-averaging relaxation: every AP moves
to the average of the positions its incident edges imply, with one anchor per
connected component pinned at the origin to remove the translational gauge.
Each sweep updates an independent (non-adjacent) set of APs at a time, so every
update exactly minimizes that AP's local squared residual and the total squared
edge residual never increases.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from chi_walk.geometry import DisplacementEdge, Point2

DEFAULT_MAX_ITERATIONS = 100
DEFAULT_MOVE_TOLERANCE = 1e-6


@dataclass
class ApConstellation:
    positions: dict  # ap_id -> (x, y)
    iterations: int = 0
    components: list = field(default_factory=list)  # list of ap_id lists
    converged: bool = False

    def as_points(self) -> dict:
        return {aid: Point2(x, y) for aid, (x, y) in self.positions.items()}


@dataclass(frozen=True)
class RigidAlignment:
    rotation_deg: float
    translation: tuple
    reflected: bool

    def apply(self, xy: np.ndarray) -> np.ndarray:
        r = math.radians(self.rotation_deg)
        c, s = math.cos(r), math.sin(r)
        rot = np.array([[c, -s], [s, c]])
        if self.reflected:
            rot = rot @ np.array([[1.0, 0.0], [0.0, -1.0]])
        return xy @ rot.T + np.asarray(self.translation)


def select_positioning_pools(pools) -> list:
    """One pool per AP pair: the one whose best member walked the least.

    Shorter walks accumulate less error, so among all pools joining the same
    two APs the one with the least walked length wins; ties fall back to the
    lexicographically earliest (start AP, other AP, signature) key.
    """
    by_pair = {}
    for pool in pools:
        if not pool.members:
            continue
        pair = frozenset((pool.ap_a, pool.ap_b))
        rank = (pool.min_walked_length(), pool.ap_a, pool.ap_b, pool.signature)
        if pair not in by_pair or rank < by_pair[pair][0]:
            by_pair[pair] = (rank, pool)
    return sorted((pool for _, pool in by_pair.values()),
                  key=lambda p: (p.ap_a, p.ap_b, p.signature))


def select_positioning_edges(pools) -> list:
    """Displacement edges of the per-pair selected pools (fused compounds)."""
    edges = []
    for pool in select_positioning_pools(pools):
        compound = pool.fused if pool.fused is not None else pool.fuse()
        edges.append(DisplacementEdge(
            ap_a=pool.ap_a, ap_b=pool.ap_b,
            dx=float(compound[0]), dy=float(compound[1]),
            source_count=len(pool.members),
            walked_length=pool.min_walked_length()))
    return edges


def _greedy_coloring(n: int, adjacency) -> list:
    """Split vertices into independent sets (same-color nodes share no edge)."""
    order = sorted(range(n), key=lambda i: -len(adjacency[i]))
    color = [-1] * n
    for v in order:
        used = {color[u] for u in adjacency[v] if color[u] >= 0}
        c = 0
        while c in used:
            c += 1
        color[v] = c
    n_colors = max(color) + 1 if n else 0
    classes = [[] for _ in range(n_colors)]
    for v, c in enumerate(color):
        classes[c].append(v)
    return classes


def position_aps(edges, max_iterations: int = DEFAULT_MAX_ITERATIONS,
                 move_tolerance: float = DEFAULT_MOVE_TOLERANCE,
                 initial_positions: dict | None = None) -> ApConstellation:
    """Solve the displacement graph by anchored relaxation.

    Every AP starts at the origin (or at its entry in initial_positions, which
    lets an incremental caller resume from the previous estimate). Each
    iteration sweeps all APs in independent batches, moving each to the mean
    of (neighbor position minus the signed edge displacement toward that
    neighbor); the lowest-id AP of each connected component stays pinned at
    the origin. Stops after max_iterations or when no AP moved more than
    move_tolerance.
    """
    if not edges:
        raise ValueError("empty edge set")

    ids = sorted({e.ap_a for e in edges} | {e.ap_b for e in edges})
    index = {aid: i for i, aid in enumerate(ids)}
    n = len(ids)

    adjacency = [[] for _ in range(n)]
    # per node: arrays of (neighbor index, offset to add to neighbor position)
    nbr = [[] for _ in range(n)]
    off = [[] for _ in range(n)]
    for e in edges:
        a, b = index[e.ap_a], index[e.ap_b]
        adjacency[a].append(b)
        adjacency[b].append(a)
        # pos[b] - pos[a] = d  =>  a sees (pos[b] - d), b sees (pos[a] + d)
        nbr[a].append(b)
        off[a].append((-e.dx, -e.dy))
        nbr[b].append(a)
        off[b].append((e.dx, e.dy))

    # connected components; anchor = lowest id per component
    comp = [-1] * n
    components = []
    for start in range(n):
        if comp[start] >= 0:
            continue
        stack = [start]
        comp[start] = len(components)
        members = []
        while stack:
            v = stack.pop()
            members.append(v)
            for u in adjacency[v]:
                if comp[u] < 0:
                    comp[u] = len(components)
                    stack.append(u)
        components.append(sorted(members))
    anchors = {min(ms) for ms in components}

    classes = _greedy_coloring(n, adjacency)
    # flatten per class into vectorizable gather/reduce arrays
    plans = []
    for cls in classes:
        nodes = [v for v in cls if v not in anchors]
        if not nodes:
            continue
        counts = np.array([len(nbr[v]) for v in nodes])
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        gather = np.concatenate([nbr[v] for v in nodes])
        offsets = np.concatenate([off[v] for v in nodes]).reshape(-1, 2)
        plans.append((np.array(nodes), gather, offsets, starts,
                      counts.astype(float)[:, None]))

    pos = np.zeros((n, 2))
    if initial_positions:
        for aid, i in index.items():
            xy = initial_positions.get(aid)
            if xy is not None and i not in anchors:
                pos[i] = xy
    iterations = 0
    converged = False
    for iterations in range(1, max_iterations + 1):
        max_move_sq = 0.0
        for nodes, gather, offsets, starts, counts in plans:
            est = pos[gather] + offsets
            sums = np.add.reduceat(est, starts, axis=0)
            new = sums / counts
            delta = new - pos[nodes]
            move = float((delta * delta).sum(axis=1).max())
            if move > max_move_sq:
                max_move_sq = move
            pos[nodes] = new
        if max_move_sq <= move_tolerance * move_tolerance:
            converged = True
            break

    return ApConstellation(
        positions={aid: (float(pos[i, 0]), float(pos[i, 1])) for aid, i in index.items()},
        iterations=iterations,
        components=[[ids[v] for v in ms] for ms in components],
        converged=converged)


def edge_residual_sq(edges, positions: dict) -> float:
    """Sum of squared displacement residuals of a candidate constellation."""
    total = 0.0
    for e in edges:
        ax, ay = positions[e.ap_a]
        bx, by = positions[e.ap_b]
        rx = bx - ax - e.dx
        ry = by - ay - e.dy
        total += rx * rx + ry * ry
    return total


def align_to_truth(est: ApConstellation | dict, truth: dict):
    """Least-squares rigid alignment of an estimated constellation onto truth.

    Rotation and translation only (displacements carry absolute lengths, so no
    scaling); both chiralities are tried and the better one kept. Returns
    (RigidAlignment, average error), the mean per-AP distance after alignment.
    """
    positions = est.positions if isinstance(est, ApConstellation) else est
    if set(positions) != set(truth):
        raise ValueError("estimate and truth must cover the same AP ids")
    ids = sorted(positions)
    if len(ids) < 2:
        raise ValueError("need at least 2 APs to align")

    p = np.array([positions[i] for i in ids], dtype=float)
    q = np.array([[truth[i].x, truth[i].y] if isinstance(truth[i], Point2)
                  else truth[i] for i in ids], dtype=float)
    pc = p.mean(axis=0)
    qc = q.mean(axis=0)
    p0 = p - pc
    q0 = q - qc
    h = p0.T @ q0
    u, _, vt = np.linalg.svd(h)

    best = None
    for sign in (1.0, -1.0):
        d = np.sign(np.linalg.det(vt.T @ u.T))
        if d == 0.0:
            d = 1.0
        rot = vt.T @ np.diag([1.0, sign * d]) @ u.T
        if sign * d < 0 and np.linalg.det(rot) > 0:
            continue  # duplicate of the proper branch when h is singular
        aligned = p0 @ rot.T + qc
        err = float(np.linalg.norm(aligned - q, axis=1).mean())
        reflected = np.linalg.det(rot) < 0
        if best is None or err < best[0] - 1e-12:
            best = (err, rot, reflected)

    err, rot, reflected = best
    if reflected:
        base = rot @ np.array([[1.0, 0.0], [0.0, -1.0]])
    else:
        base = rot
    rotation_deg = math.degrees(math.atan2(base[1, 0], base[0, 0]))
    translation = qc - rot @ pc
    alignment = RigidAlignment(rotation_deg=rotation_deg,
                               translation=(float(translation[0]), float(translation[1])),
                               reflected=bool(reflected))
    return alignment, err


def export_constellation_csv(constellation: ApConstellation, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ap_id", "x", "y"])
        for aid in sorted(constellation.positions):
            x, y = constellation.positions[aid]
            w.writerow([aid, repr(x), repr(y)])


def export_alignment_json(alignment: RigidAlignment, average_error: float, path) -> None:
    with open(path, "w") as fh:
        json.dump({"rotation_deg": alignment.rotation_deg,
                   "translation": list(alignment.translation),
                   "reflected": alignment.reflected,
                   "average_error": average_error}, fh, indent=2)
