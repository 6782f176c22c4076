"""Headless comparison of localization processes on synthetic scenarios.

Three processes collect displacement observations over the AP graph and feed
the same positioning pipeline:

* guided ("chi"): walks the Hamilton path over the APs, collecting each graph
  edge once at 1 time unit per length; every planned pass is straight, so
  every AP yields a valid mark.
* fingerprinting ("fp:p,c"): same route, measurement errors scaled by p but
  time scaled by c per length.
* crowdsourcing ("crowd:k"): k walkers do uniform random walks on the graph in
  parallel. A mark at an AP is only valid when the walker passes through it
  within the direction threshold, so an AP whose incident edges all meet at a
  sharp angle never gets marked and never enters the displacement graph; the
  walk segments between consecutive valid marks become (possibly multi-hop)
  observations.

At each checkpoint the APs are positioned from everything collected so far
(all APs start at the origin, 100 relaxation iterations) and scored by rigid
alignment against ground truth.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from chi_walk.geometry import (
    DisplacementEdge,
    Point2,
    heading_diff,
    sector_of_bearing,
)
from chi_walk.positioning import align_to_truth, position_aps, select_positioning_edges
from chi_walk.planner import shortest_hamilton_path
from chi_walk.trajectory import (
    DIRECTION_THRESHOLD_DEG,
    FusionPool,
    PRUNE_TRIGGER,
    prune_pool,
)
from chi_walk.world import ImuNoiseModel, Scenario, perturb_displacement

DEFAULT_CHECKPOINT_EVERY = 250.0
POSITIONING_ITERATIONS = 100


@dataclass(frozen=True)
class ApproachConfig:
    kind: str                      # "chi" | "fp" | "crowd"
    error_scale: float = 1.0       # p: scales both IMU error bounds
    time_per_length: float = 1.0   # c: time units to walk one length unit
    crowds: int = 1

    def __post_init__(self):
        if self.kind not in ("chi", "fp", "crowd"):
            raise ValueError(f"unknown approach kind {self.kind!r}")
        if self.kind == "fp" and not 0.0 < self.error_scale < 1.0:
            raise ValueError("fingerprinting error scale must be in (0, 1)")
        if self.kind == "fp" and self.time_per_length <= 1.0:
            raise ValueError("fingerprinting time per length must be > 1")
        if self.crowds < 1:
            raise ValueError("crowd count must be >= 1")

    @property
    def label(self) -> str:
        if self.kind == "chi":
            return "chi"
        if self.kind == "fp":
            # 1/p is the usual way these are quoted
            return f"fp:{self.error_scale:g},{self.time_per_length:g}"
        return f"crowd:{self.crowds}"


def parse_approach(text: str) -> ApproachConfig:
    """Parse 'chi', 'fp:p,c' (p may be a fraction like 1/5), or 'crowd:k'."""
    text = text.strip()
    if text == "chi":
        return ApproachConfig("chi")
    if text.startswith("fp:"):
        try:
            p_str, c_str = text[3:].split(",")
            p = eval_fraction(p_str)
            c = float(c_str)
        except Exception as exc:
            raise ValueError(f"bad fingerprinting spec {text!r}") from exc
        return ApproachConfig("fp", error_scale=p, time_per_length=c)
    if text.startswith("crowd:"):
        return ApproachConfig("crowd", crowds=int(text[6:]))
    raise ValueError(f"unknown approach {text!r}")


def eval_fraction(text: str) -> float:
    text = text.strip()
    if "/" in text:
        num, den = text.split("/")
        return float(num) / float(den)
    return float(text)


@dataclass(frozen=True)
class CostParams:
    e_l: float   # expense per laborer time unit
    e_d: float   # expense per device
    b: int = 1   # device count

    def __post_init__(self):
        if self.e_l < 0 or self.e_d < 0 or self.b < 0:
            raise ValueError("cost parameters must be >= 0")


def expense(t: float, params: CostParams) -> float:
    return t * params.e_l + params.b * params.e_d


def default_cost_params(approach: ApproachConfig) -> CostParams:
    if approach.kind == "chi":
        return CostParams(e_l=0.1, e_d=36.0, b=1)
    if approach.kind == "fp":
        return CostParams(e_l=0.1, e_d=36.0 / approach.error_scale, b=1)
    # crowds join with their own devices during normal activity; their cost
    # is negligible
    return CostParams(e_l=0.0, e_d=0.0, b=approach.crowds)


def random_walk_policy(current_ap: str, adjacency: dict,
                       rng: np.random.Generator) -> str:
    """Uniform choice among the incident edges of the trajectory graph."""
    neighbors = adjacency[current_ap]
    if not neighbors:
        raise ValueError(f"AP {current_ap} has no incident edges")
    return neighbors[int(rng.integers(len(neighbors)))]


# ---------------------------------------------------------------------------
# measurement streams


@dataclass(frozen=True)
class Measurement:
    time: float
    ap_a: str
    ap_b: str
    dx: float
    dy: float
    walked_length: float
    signature: int


def _bearing(pa: Point2, pb: Point2) -> float:
    return math.degrees(math.atan2(pb.y - pa.y, pb.x - pa.x))


def guided_measurements(scenario: Scenario, noise: ImuNoiseModel,
                        time_per_length: float, horizon: float,
                        rng: np.random.Generator) -> list:
    """Measurement stream of the Hamilton-path collection walk.

    The walker follows the AP sequence of the Hamilton path; a leg that is
    itself an uncollected graph edge doubles as its measurement, and on
    arrival at an AP each remaining incident edge is collected in sector
    order at its length's time cost.
    """
    truth = {aid: p for aid, p in scenario.floor.aps}
    adjacency = scenario.adjacency()
    ap_order = _hamilton_ap_order(scenario)

    untraversed = {frozenset(e) for e in scenario.edges}
    out = []
    clock = 0.0

    def measure(a: str, b: str, when: float):
        pa, pb = truth[a], truth[b]
        dx, dy = perturb_displacement(pb.x - pa.x, pb.y - pa.y, noise, rng)
        sig = sector_of_bearing(_bearing(pa, pb))
        length = pa.distance_to(pb)
        out.append(Measurement(when, a, b, dx, dy, length, sig))

    prev = None
    for ap in ap_order:
        if clock > horizon:
            break
        if prev is not None:
            leg = truth[prev].distance_to(truth[ap])
            clock += leg * time_per_length
            pair = frozenset((prev, ap))
            if pair in untraversed:
                untraversed.discard(pair)
                measure(prev, ap, clock)
        incident = [b for b in adjacency[ap] if frozenset((ap, b)) in untraversed]
        incident.sort(key=lambda b: (sector_of_bearing(_bearing(truth[ap], truth[b])), b))
        for b in incident:
            if clock > horizon:
                break
            length = truth[ap].distance_to(truth[b])
            clock += length * time_per_length
            untraversed.discard(frozenset((ap, b)))
            measure(ap, b, clock)
        prev = ap
    return out


_HAMILTON_CACHE = {}


def _hamilton_ap_order(scenario: Scenario) -> list:
    key = (scenario.name, scenario.seed, len(scenario.floor.aps))
    if key not in _HAMILTON_CACHE:
        pts = {aid: p for aid, p in scenario.floor.aps}
        path = shortest_hamilton_path(list(pts.values()), start=Point2(0.0, 0.0))
        by_xy = {}
        for aid, p in pts.items():
            by_xy.setdefault((p.x, p.y), []).append(aid)
        order = []
        for p in path:
            order.append(by_xy[(p.x, p.y)].pop(0))
        _HAMILTON_CACHE[key] = order
    return _HAMILTON_CACHE[key]


def crowd_measurements(scenario: Scenario, noise: ImuNoiseModel, crowds: int,
                       horizon: float, rng: np.random.Generator,
                       direction_threshold: float = DIRECTION_THRESHOLD_DEG) -> list:
    """Measurement stream of k parallel random walkers.

    Each walker accumulates noisy per-hop offsets between consecutive valid
    marks; a mark is valid only when the turn through the AP stays within the
    direction threshold. Walks at dead ends reverse (a 180-degree turn), so
    degree-1 APs never produce marks.
    """
    truth = {aid: p for aid, p in scenario.floor.aps}
    adjacency = scenario.adjacency()
    ids = scenario.floor.ap_ids()

    out = []
    walker_seeds = [int(s) for s in rng.integers(0, 2 ** 63, size=crowds)]
    for walker_seed in walker_seeds:
        rng = np.random.default_rng(walker_seed)
        clock = 0.0
        ap = ids[int(rng.integers(len(ids)))]
        in_heading = None
        acc = None  # (start_ap, sig, [sum dx, sum dy], reported_length)
        while clock < horizon:
            nxt = random_walk_policy(ap, adjacency, rng)
            out_heading = _bearing(truth[ap], truth[nxt])
            if in_heading is not None:
                mark_valid = heading_diff(in_heading, out_heading) <= direction_threshold
            else:
                mark_valid = False
            if mark_valid:
                if acc is not None and acc[0] != ap:
                    out.append(Measurement(clock, acc[0], ap, acc[2][0], acc[2][1],
                                           acc[3], acc[1]))
                acc = (ap, sector_of_bearing(out_heading), [0.0, 0.0], 0.0)
            pa, pb = truth[ap], truth[nxt]
            ddx, ddy = perturb_displacement(pb.x - pa.x, pb.y - pa.y, noise, rng)
            hop = pa.distance_to(pb)
            clock += hop
            if acc is not None:
                acc = (acc[0], acc[1], [acc[2][0] + ddx, acc[2][1] + ddy],
                       acc[3] + hop)
            in_heading = out_heading
            ap = nxt
    out.sort(key=lambda m: (m.time, m.ap_a, m.ap_b))
    return out


def measurements_for(scenario: Scenario, approach: ApproachConfig,
                     horizon: float, seed: int) -> list:
    rng = np.random.default_rng(seed)
    base = scenario.imu_noise
    if approach.kind == "chi":
        return guided_measurements(scenario, base, 1.0, horizon, rng)
    if approach.kind == "fp":
        scaled = base.scaled(approach.error_scale)
        return guided_measurements(scenario, scaled, approach.time_per_length,
                                   horizon, rng)
    return crowd_measurements(scenario, base, approach.crowds, horizon, rng)


# ---------------------------------------------------------------------------
# the error-over-time process


def run_process(scenario: Scenario, approach: ApproachConfig, horizon: float,
                seed: int,
                checkpoint_every: float = DEFAULT_CHECKPOINT_EVERY) -> list:
    """Error-over-time series [(t, average_error)] for one seeded run."""
    truth = {aid: p for aid, p in scenario.floor.aps}
    all_ids = scenario.floor.ap_ids()
    stream = measurements_for(scenario, approach, horizon, seed)

    pools = {}
    dirty = set()

    def add_measurement(m: Measurement):
        key = (m.ap_a, m.ap_b, m.signature)
        pool = pools.get(key)
        if pool is None:
            pool = FusionPool(m.ap_a, m.ap_b, m.signature)
            pools[key] = pool
        pool.add_member(m.dx, m.dy, m.walked_length, m.time)
        if len(pool.members) > PRUNE_TRIGGER:
            prune_pool(pool)
        dirty.add(key)

    series = []
    idx = 0
    last_error = None
    warm = {}
    checkpoints = [0.0]
    t = checkpoint_every
    while t <= horizon + 1e-9:
        checkpoints.append(round(t, 9))
        t += checkpoint_every

    for cp in checkpoints:
        while idx < len(stream) and stream[idx].time <= cp:
            add_measurement(stream[idx])
            idx += 1
        if dirty or last_error is None:
            for key in dirty:
                pools[key].fuse(timestamp=cp)
            dirty.clear()
            last_error, warm = _score(pools, truth, all_ids, warm)
        series.append((cp, last_error))
    return series


def _score(pools: dict, truth: dict, all_ids, warm: dict):
    """Position everything collected so far (resuming from the previous
    estimate; all APs start the process at the origin) and score it."""
    if pools:
        edges = select_positioning_edges(pools.values())
        const = position_aps(edges, max_iterations=POSITIONING_ITERATIONS,
                             initial_positions=warm)
        positions = dict(const.positions)
    else:
        positions = {}
    full = {aid: positions.get(aid, (0.0, 0.0)) for aid in all_ids}
    _, err = align_to_truth(full, truth)
    return err, positions


# ---------------------------------------------------------------------------
# aggregation across seeds, expense conversion, CSV output


def run_matrix(scenario_builder, approaches, seeds, horizon: float,
               checkpoint_every: float = DEFAULT_CHECKPOINT_EVERY) -> dict:
    """{approach label: {seed: [(t, err), ...]}} over a seeded scenario builder.

    scenario_builder(seed) supplies the per-seed scenario; the walk noise seed
    is derived from the same seed so a run is one number to reproduce.
    """
    results = {}
    for approach in approaches:
        per_seed = {}
        for seed in seeds:
            scenario = scenario_builder(seed)
            per_seed[seed] = run_process(scenario, approach, horizon,
                                         seed=seed * 7919 + 13,
                                         checkpoint_every=checkpoint_every)
        results[approach.label] = per_seed
    return results


def mean_series(per_seed: dict) -> list:
    seeds = sorted(per_seed)
    length = min(len(per_seed[s]) for s in seeds)
    out = []
    for i in range(length):
        t = per_seed[seeds[0]][i][0]
        out.append((t, float(np.mean([per_seed[s][i][1] for s in seeds]))))
    return out


def laborer_time(approach: ApproachConfig, wall_time: float) -> float:
    """Total working time of all laborers at a wall-clock time."""
    if approach.kind == "crowd":
        return approach.crowds * wall_time
    return wall_time


def error_vs_expense(results: dict, approaches, error_targets,
                     cost_params: dict | None = None) -> list:
    """Rows (approach, target, first time reached or None, expense or None).

    Targets must be given in descending order; a target is reached at the
    first checkpoint where the mean error falls at or below it.
    """
    targets = list(error_targets)
    if targets != sorted(targets, reverse=True):
        raise ValueError("targets must be descending")
    rows = []
    for approach in approaches:
        series = mean_series(results[approach.label])
        params = (cost_params or {}).get(approach.label) or default_cost_params(approach)
        for target in targets:
            hit = next((t for t, err in series if err <= target), None)
            if hit is None:
                rows.append((approach.label, target, None, None))
            else:
                rows.append((approach.label, target, hit,
                             expense(laborer_time(approach, hit), params)))
    return rows


def write_curves_csv(path, results: dict) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seed", "approach", "t", "avg_error"])
        for label in sorted(results):
            for seed in sorted(results[label]):
                for t, err in results[label][seed]:
                    w.writerow([seed, label, repr(float(t)), repr(float(err))])


def write_expense_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["approach", "error_target", "time_reached", "expense"])
        for label, target, t, e in rows:
            w.writerow([label, target,
                        "unreached" if t is None else repr(float(t)),
                        "unreached" if e is None else repr(float(e))])


def plot_curves_svg(path, results: dict) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label in sorted(results):
        series = mean_series(results[label])
        ax.plot([t for t, _ in series], [e for _, e in series], label=label)
    ax.set_xlabel("time units")
    ax.set_ylabel("average localization error")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
