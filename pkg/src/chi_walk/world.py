"""Ground-truth synthetic floors, RSS propagation, and walker kinematics.

Everything here is seeded and deterministic: the same seed gives bit-identical
floors, walks, and scans. The walker's true motion is exact; only the reported
displacement carries the configured IMU error (heading uniform within a bound,
length uniform within a fraction), which is the error model the evaluation
assumes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from chi_walk.geometry import (
    DisplacementVector,
    Point2,
    normalize_heading,
    sector_of_bearing,
)

SCENARIO_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class RssModel:
    """Log-distance path loss with optional Gaussian dB noise.

    rss(d) = tx_power - 10 * exponent * log10(max(d, d0) / d0) + N(0, sigma),
    and nothing is heard beyond coverage_radius.
    """

    tx_power: float = -30.0
    path_loss_exponent: float = 3.0
    reference_distance: float = 1.0
    coverage_radius: float = 10.0
    noise_sigma: float = 0.0

    def __post_init__(self):
        if self.coverage_radius <= 0:
            raise ValueError("coverage_radius must be > 0")
        if self.path_loss_exponent <= 0:
            raise ValueError("path_loss_exponent must be > 0")


@dataclass(frozen=True)
class ImuNoiseModel:
    """Reported-step error bounds: +-heading_error_bound degrees, +-length_error_fraction."""

    heading_error_bound: float = 30.0
    length_error_fraction: float = 0.10

    def __post_init__(self):
        if self.heading_error_bound < 0 or self.length_error_fraction < 0:
            raise ValueError("noise bounds must be >= 0")

    def scaled(self, factor: float) -> "ImuNoiseModel":
        return ImuNoiseModel(self.heading_error_bound * factor,
                             self.length_error_fraction * factor)


@dataclass(frozen=True)
class Room:
    """Axis-aligned room; entrances are gaps (segments) in its walls."""

    x0: float
    y0: float
    x1: float
    y1: float
    entrances: tuple = ()


@dataclass
class GroundTruthFloor:
    width: float
    height: float
    aps: list  # [(ap_id, Point2)]
    rooms: list = field(default_factory=list)
    obstacles: list = field(default_factory=list)  # [[Point2, ...]] closed polygons

    def __post_init__(self):
        for ap_id, p in self.aps:
            if not (0 <= p.x <= self.width and 0 <= p.y <= self.height):
                raise ValueError(f"AP {ap_id} outside floor bounds")

    def ap_position(self, ap_id: str) -> Point2:
        for aid, p in self.aps:
            if aid == ap_id:
                return p
        raise KeyError(f"unknown AP id {ap_id!r}")

    def ap_ids(self) -> list:
        return [aid for aid, _ in self.aps]


@dataclass
class WalkerState:
    true_position: Point2
    true_heading: float = 0.0
    clock: float = 0.0
    speed: float = 1.0  # length-units per time-unit; 1 keeps time == walked length


@dataclass(frozen=True)
class StepResult:
    state: WalkerState
    reported: DisplacementVector
    scan: tuple  # ((ap_id, rss), ...) sorted by ap_id
    clipped: bool = False


def _point_in_polygon(p: Point2, poly) -> bool:
    # ray casting; boundary points count as inside
    n = len(poly)
    inside = False
    j = n - 1
    for i in range(n):
        xi, yi = poly[i].x, poly[i].y
        xj, yj = poly[j].x, poly[j].y
        if (yi > p.y) != (yj > p.y):
            x_int = (xj - xi) * (p.y - yi) / (yj - yi) + xi
            if p.x < x_int:
                inside = not inside
        j = i
    return inside


def _segment_intersection_t(px, py, dx, dy, ax, ay, bx, by):
    """Parameter t in [0,1] where p + t*d crosses segment ab, or None."""
    ex, ey = bx - ax, by - ay
    denom = dx * ey - dy * ex
    if denom == 0.0:
        return None
    t = ((ax - px) * ey - (ay - py) * ex) / denom
    u = ((ax - px) * dy - (ay - py) * dx) / denom
    if 0.0 <= t <= 1.0 and 0.0 <= u <= 1.0:
        return t
    return None


def _first_obstacle_hit(start: Point2, end: Point2, obstacles):
    """Earliest parameter t in (0,1] where segment start->end enters an obstacle edge."""
    dx, dy = end.x - start.x, end.y - start.y
    best = None
    for poly in obstacles:
        n = len(poly)
        for i in range(n):
            a = poly[i]
            b = poly[(i + 1) % n]
            t = _segment_intersection_t(start.x, start.y, dx, dy, a.x, a.y, b.x, b.y)
            if t is not None and t > 1e-12:
                if best is None or t < best:
                    best = t
    return best


def rss_at(ap_id: str, p: Point2, floor: GroundTruthFloor, model: RssModel,
           rng: np.random.Generator | None = None):
    """Received signal strength of one AP at a point, or None when out of range."""
    ap_pos = floor.ap_position(ap_id)
    d = p.distance_to(ap_pos)
    if d > model.coverage_radius:
        return None
    d_eff = max(d, model.reference_distance)
    rss = model.tx_power - 10.0 * model.path_loss_exponent * math.log10(
        d_eff / model.reference_distance)
    if model.noise_sigma > 0.0:
        if rng is None:
            raise ValueError("noisy RSS model needs an rng")
        rss += model.noise_sigma * rng.normal()
    return rss


def scan_at(p: Point2, floor: GroundTruthFloor, model: RssModel,
            rng: np.random.Generator | None = None) -> tuple:
    """All in-range (ap_id, rss), sorted by ap_id for determinism."""
    out = []
    for ap_id, _ in floor.aps:
        r = rss_at(ap_id, p, floor, model, rng)
        if r is not None:
            out.append((ap_id, r))
    out.sort(key=lambda kv: kv[0])
    return tuple(out)


def step_walker(state: WalkerState, heading: float, distance: float,
                floor: GroundTruthFloor, rss_model: RssModel,
                noise: ImuNoiseModel, rng: np.random.Generator) -> StepResult:
    """Advance the walker by a commanded step.

    The true state moves exactly by the command, clipped at the floor boundary
    and at obstacle edges. The reported vector perturbs the command per the
    noise model; the clock advances by the distance actually walked.
    """
    if distance < 0:
        raise ValueError("step distance must be >= 0")
    heading = normalize_heading(heading)
    rad = math.radians(heading)
    target = Point2(state.true_position.x + distance * math.cos(rad),
                    state.true_position.y + distance * math.sin(rad))

    clipped = False
    # floor bounds first; snap float-epsilon overshoot (walking along a wall)
    tx, ty = target.x, target.y
    eps = 1e-9
    if -eps <= tx < 0.0:
        tx = 0.0
    elif floor.width < tx <= floor.width + eps:
        tx = floor.width
    if -eps <= ty < 0.0:
        ty = 0.0
    elif floor.height < ty <= floor.height + eps:
        ty = floor.height
    target = Point2(tx, ty)
    if not (0.0 <= tx <= floor.width and 0.0 <= ty <= floor.height):
        clipped = True
        t_best = 1.0
        dx, dy = tx - state.true_position.x, ty - state.true_position.y
        for bound, pos, delta in ((0.0, state.true_position.x, dx),
                                  (floor.width, state.true_position.x, dx),
                                  (0.0, state.true_position.y, dy),
                                  (floor.height, state.true_position.y, dy)):
            if delta != 0.0:
                t = (bound - pos) / delta
                if 1e-12 < t < t_best:
                    cand = Point2(state.true_position.x + t * dx,
                                  state.true_position.y + t * dy)
                    if (-1e-9 <= cand.x <= floor.width + 1e-9
                            and -1e-9 <= cand.y <= floor.height + 1e-9):
                        t_best = t
        tx = state.true_position.x + t_best * dx
        ty = state.true_position.y + t_best * dy
        tx = min(max(tx, 0.0), floor.width)
        ty = min(max(ty, 0.0), floor.height)
        target = Point2(tx, ty)

    hit = _first_obstacle_hit(state.true_position, target, floor.obstacles)
    if hit is not None:
        clipped = True
        back = max(hit - 1e-9, 0.0)
        target = Point2(
            state.true_position.x + back * (target.x - state.true_position.x),
            state.true_position.y + back * (target.y - state.true_position.y))

    actual = state.true_position.distance_to(target)
    rep_heading = heading
    rep_length = actual
    if noise.heading_error_bound > 0.0:
        rep_heading = normalize_heading(
            heading + rng.uniform(-noise.heading_error_bound,
                                  noise.heading_error_bound))
    if noise.length_error_fraction > 0.0:
        rep_length = actual * rng.uniform(1.0 - noise.length_error_fraction,
                                          1.0 + noise.length_error_fraction)

    new_state = WalkerState(true_position=target,
                            true_heading=heading,
                            clock=state.clock + actual / state.speed,
                            speed=state.speed)
    scan = scan_at(target, floor, rss_model, rng)
    return StepResult(new_state, DisplacementVector(rep_heading, rep_length),
                      scan, clipped)


def perturb_displacement(dx: float, dy: float, noise: ImuNoiseModel,
                         rng: np.random.Generator) -> tuple[float, float]:
    """Apply the reported-step error model to a true planar offset."""
    length = math.hypot(dx, dy)
    heading = math.degrees(math.atan2(dy, dx))
    if noise.heading_error_bound > 0.0:
        heading += rng.uniform(-noise.heading_error_bound, noise.heading_error_bound)
    if noise.length_error_fraction > 0.0:
        length *= rng.uniform(1.0 - noise.length_error_fraction,
                              1.0 + noise.length_error_fraction)
    rad = math.radians(heading)
    return (length * math.cos(rad), length * math.sin(rad))


# ---------------------------------------------------------------------------
# random scenario generation


@dataclass
class Scenario:
    """A floor plus the ground-truth AP displacement graph and the error models."""

    floor: GroundTruthFloor
    edges: list  # [(ap_a, ap_b)] with ap_a < ap_b
    rss_model: RssModel = field(default_factory=RssModel)
    imu_noise: ImuNoiseModel = field(default_factory=ImuNoiseModel)
    seed: int = 0
    name: str = "scenario"

    def true_edge_offset(self, ap_a: str, ap_b: str) -> tuple[float, float]:
        pa = self.floor.ap_position(ap_a)
        pb = self.floor.ap_position(ap_b)
        return (pb.x - pa.x, pb.y - pa.y)

    def adjacency(self) -> dict:
        adj = {aid: [] for aid in self.floor.ap_ids()}
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        for neighbors in adj.values():
            neighbors.sort()
        return adj


def generate_random_scenario(n_aps: int, width: float, height: float,
                             sector_edge_prob: float, seed: int,
                             rss_model: RssModel | None = None,
                             imu_noise: ImuNoiseModel | None = None,
                             neighbor_radius: float | None = None,
                             ensure_connected: bool = False) -> Scenario:
    """Deploy APs uniformly and build the sector-growth displacement graph.

    For each AP and each of its 8 bearing sectors that contains at least one
    other AP, an edge to the nearest AP in that sector is kept with the given
    probability. Any AP left isolated afterwards is connected to its global
    nearest neighbor, so no vertex ends up isolated.

    When neighbor_radius is set, only APs within that distance count as sector
    neighbors (the isolation repair stays unbounded). The builtin evaluation
    scenario uses twice the coverage radius: two APs are neighbors when their
    coverage disks touch, so the walk between their marks keeps signal contact.
    """
    if n_aps < 2:
        raise ValueError("need at least 2 APs")
    if width <= 0 or height <= 0:
        raise ValueError("degenerate area")
    rng = np.random.default_rng(seed)
    xs = rng.uniform(0.0, width, size=n_aps)
    ys = rng.uniform(0.0, height, size=n_aps)
    ids = [f"ap{i:03d}" for i in range(n_aps)]
    positions = {ids[i]: Point2(float(xs[i]), float(ys[i])) for i in range(n_aps)}

    edges = set()
    for i, aid in enumerate(ids):
        # nearest other AP per sector
        nearest = {}
        for j, bid in enumerate(ids):
            if j == i:
                continue
            dx = xs[j] - xs[i]
            dy = ys[j] - ys[i]
            d = math.hypot(dx, dy)
            if neighbor_radius is not None and d > neighbor_radius:
                continue
            s = sector_of_bearing(math.degrees(math.atan2(dy, dx)))
            if s not in nearest or d < nearest[s][0]:
                nearest[s] = (d, bid)
        for s in range(8):
            if s in nearest and rng.uniform() < sector_edge_prob:
                bid = nearest[s][1]
                edges.add((min(aid, bid), max(aid, bid)))

    # repair: connect every isolated AP to its global nearest neighbor
    degree = {aid: 0 for aid in ids}
    for a, b in edges:
        degree[a] += 1
        degree[b] += 1
    for i, aid in enumerate(ids):
        if degree[aid] == 0:
            best = None
            for j, bid in enumerate(ids):
                if j == i:
                    continue
                d = math.hypot(xs[j] - xs[i], ys[j] - ys[i])
                if best is None or d < best[0]:
                    best = (d, bid)
            bid = best[1]
            edges.add((min(aid, bid), max(aid, bid)))
            degree[aid] += 1
            degree[bid] += 1

    if ensure_connected:
        # join remaining components through their globally closest pairs
        idx = {aid: i for i, aid in enumerate(ids)}
        while True:
            comp = _components(ids, edges)
            if len(comp) <= 1:
                break
            best = None
            for ci in range(len(comp)):
                for cj in range(ci + 1, len(comp)):
                    for a in comp[ci]:
                        for b in comp[cj]:
                            d = math.hypot(xs[idx[a]] - xs[idx[b]],
                                           ys[idx[a]] - ys[idx[b]])
                            if best is None or d < best[0]:
                                best = (d, min(a, b), max(a, b))
            edges.add((best[1], best[2]))

    floor = GroundTruthFloor(width=width, height=height,
                             aps=[(aid, positions[aid]) for aid in ids])
    return Scenario(floor=floor, edges=sorted(edges),
                    rss_model=rss_model or RssModel(),
                    imu_noise=imu_noise or ImuNoiseModel(),
                    seed=seed, name=f"random{n_aps}")


def _components(ids, edges):
    adj = {aid: [] for aid in ids}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    seen = set()
    out = []
    for start in ids:
        if start in seen:
            continue
        stack = [start]
        seen.add(start)
        comp = []
        while stack:
            v = stack.pop()
            comp.append(v)
            for u in adj[v]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        out.append(sorted(comp))
    return out


# ---------------------------------------------------------------------------
# synthetic accelerometer traces (input for step counting)

GRAVITY = 9.81


def synth_accel_trace(step_frequency: float, duration: float, sample_rate: float,
                      noise_sigma: float = 0.0, amplitude: float = 2.0,
                      seed: int = 0) -> np.ndarray:
    """Accelerometer-magnitude trace of steady walking.

    Sinusoid at the step frequency on top of gravity, plus seeded Gaussian
    noise. sample_rate must exceed twice the step frequency.
    """
    if duration < 0:
        raise ValueError("duration must be >= 0")
    if step_frequency > 0 and sample_rate <= 2.0 * step_frequency:
        raise ValueError("sample_rate must exceed 2 * step_frequency")
    n = int(round(duration * sample_rate))
    if n == 0:
        return np.zeros(0)
    t = np.arange(n) / sample_rate
    trace = GRAVITY + amplitude * np.sin(2.0 * math.pi * step_frequency * t)
    if noise_sigma > 0.0:
        rng = np.random.default_rng(seed)
        trace = trace + noise_sigma * rng.normal(size=n)
    return trace


# ---------------------------------------------------------------------------
# scenario files (round-trip stable JSON)


def _point_to_json(p: Point2):
    return [p.x, p.y]


def scenario_to_dict(sc: Scenario) -> dict:
    return {
        "version": SCENARIO_SCHEMA_VERSION,
        "name": sc.name,
        "seed": sc.seed,
        "floor": {
            "width": sc.floor.width,
            "height": sc.floor.height,
            "aps": [[aid, _point_to_json(p)] for aid, p in sc.floor.aps],
            "rooms": [{"rect": [r.x0, r.y0, r.x1, r.y1],
                       "entrances": [[_point_to_json(a), _point_to_json(b)]
                                     for a, b in r.entrances]}
                      for r in sc.floor.rooms],
            "obstacles": [[_point_to_json(p) for p in poly]
                          for poly in sc.floor.obstacles],
        },
        "edges": [list(e) for e in sc.edges],
        "rss_model": {
            "tx_power": sc.rss_model.tx_power,
            "path_loss_exponent": sc.rss_model.path_loss_exponent,
            "reference_distance": sc.rss_model.reference_distance,
            "coverage_radius": sc.rss_model.coverage_radius,
            "noise_sigma": sc.rss_model.noise_sigma,
        },
        "imu_noise": {
            "heading_error_bound": sc.imu_noise.heading_error_bound,
            "length_error_fraction": sc.imu_noise.length_error_fraction,
        },
    }


def scenario_from_dict(data: dict) -> Scenario:
    version = data.get("version")
    if version != SCENARIO_SCHEMA_VERSION:
        raise ValueError(f"unsupported scenario version {version!r}; "
                         f"expected {SCENARIO_SCHEMA_VERSION}")
    f = data["floor"]
    floor = GroundTruthFloor(
        width=f["width"], height=f["height"],
        aps=[(aid, Point2(*xy)) for aid, xy in f["aps"]],
        rooms=[Room(*r["rect"],
                    entrances=tuple((Point2(*a), Point2(*b))
                                    for a, b in r.get("entrances", [])))
               for r in f.get("rooms", [])],
        obstacles=[[Point2(*xy) for xy in poly] for poly in f.get("obstacles", [])],
    )
    rm = data["rss_model"]
    im = data["imu_noise"]
    return Scenario(
        floor=floor,
        edges=[tuple(e) for e in data["edges"]],
        rss_model=RssModel(**rm),
        imu_noise=ImuNoiseModel(**im),
        seed=data.get("seed", 0),
        name=data.get("name", "scenario"),
    )


def save_scenario(sc: Scenario, path) -> None:
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(sc), fh, indent=2, sort_keys=True)


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))


def point_in_any_obstacle(p: Point2, obstacles) -> bool:
    return any(_point_in_polygon(p, poly) for poly in obstacles)


def segment_hits_obstacle(a: Point2, b: Point2, obstacles) -> bool:
    if _first_obstacle_hit(a, b, obstacles) is not None:
        return True
    mid = Point2(0.5 * (a.x + b.x), 0.5 * (a.y + b.y))
    return point_in_any_obstacle(mid, obstacles)
