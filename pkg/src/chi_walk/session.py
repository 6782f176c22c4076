"""Interactive session engine: the objective-driven walk loop.

A session owns one simulated world and applies operator commands strictly in
order. Every command is appended to an event log; replaying the log against
the same scenario and seed reproduces the exact state, byte for byte, which is
what the save file stores and what the HTTP service exposes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from chi_walk.floorplan import (
    FloorPlan,
    PlanRuleConfig,
    apply_inference,
    correct_component,
    plan_to_dict,
)
from chi_walk.geometry import (
    MarkRecord,
    Point2,
    sector_of_bearing,
)
from chi_walk.planner import (
    CoveragePlan,
    TrackQuery,
    make_coverage_plan,
    retrace_suggestions,
    sector_gap_paths,
    track,
    update_coverage,
)
from chi_walk.positioning import (
    position_aps,
    select_positioning_edges,
    select_positioning_pools,
)
from chi_walk.trajectory import (
    DIRECTION_THRESHOLD_DEG,
    FusionPool,
    PRUNE_TRIGGER,
    detect_ap_mark,
    prune_pool,
)
from chi_walk.world import (
    Scenario,
    WalkerState,
    scenario_from_dict,
    scenario_to_dict,
    step_walker,
)

SESSION_SCHEMA_VERSION = 1
FUSION_THETA = 1.0
SUBSTEP_LENGTH = 1.0


@dataclass
class Objective:
    kind: str          # locate_aps | refine_trajectories | track_movement | floor_plan
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": self.params}

    @staticmethod
    def from_dict(data: dict) -> "Objective":
        kind = data["kind"]
        if kind not in ("locate_aps", "refine_trajectories", "track_movement",
                        "floor_plan"):
            raise ValueError(f"unknown objective kind {kind!r}")
        return Objective(kind=kind, params=dict(data.get("params", {})))


class SessionError(Exception):
    pass


class Session:
    """Single-writer session over one scenario."""

    def __init__(self, scenario: Scenario, seed: int = 0):
        self.scenario = scenario
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.walker = WalkerState(true_position=Point2(0.0, 0.0))
        self.open = True

        self.events: list = []
        self.steps: list = []          # reported DisplacementVector per substep
        self.step_spans: list = []     # (t0, t1) per substep
        self.true_path: list = [Point2(0.0, 0.0)]
        self.reported_path: list = [Point2(0.0, 0.0)]
        self.scans: list = []

        self.record_buffers: dict = {}  # ap_id -> [MarkRecord]
        self.marks: list = []
        self.pools: dict = {}           # key -> FusionPool
        self.constellation: dict = {}   # ap_id -> (x, y)
        self.positioned = False

        self.objectives: list = []
        self.plan: CoveragePlan | None = None
        self.plan_radius: float = scenario.rss_model.coverage_radius
        self.floor_plan = FloorPlan()
        self.plan_config = PlanRuleConfig()
        self.tracked: dict | None = None
        self.completed_log: list = []

    # ------------------------------------------------------------------
    # command entry point

    def tick(self, command: dict) -> dict:
        if not self.open:
            raise SessionError("session is closed")
        kind = command.get("type")
        handler = {
            "walk": self._cmd_walk,
            "terminate": self._cmd_terminate,
            "objectives": self._cmd_objectives,
            "correct": self._cmd_correct,
            "close": self._cmd_close,
        }.get(kind)
        if handler is None:
            raise SessionError(f"malformed command {command!r}")
        delta = handler(command)
        self.events.append(command)
        removed = self._check_completion()
        if removed:
            delta["completed"] = removed
        return delta

    # ------------------------------------------------------------------
    # commands

    def _cmd_walk(self, command: dict) -> dict:
        heading = float(command["heading"])
        distance = float(command["distance"])
        if distance < 0:
            raise SessionError("negative walk distance")
        new_marks = []
        clipped = False
        remaining = distance
        while remaining > 1e-9:
            step = min(SUBSTEP_LENGTH, remaining)
            remaining -= step
            t0 = self.walker.clock
            res = step_walker(self.walker, heading, step, self.scenario.floor,
                              self.scenario.rss_model, self.scenario.imu_noise,
                              self.rng)
            self.walker = res.state
            clipped = clipped or res.clipped
            self.steps.append(res.reported)
            self.step_spans.append((t0, self.walker.clock))
            self.true_path.append(self.walker.true_position)
            last = self.reported_path[-1]
            dx, dy = res.reported.offset()
            self.reported_path.append(Point2(last.x + dx, last.y + dy))
            self.scans.append(res.scan)
            new_marks.extend(self._ingest_scan(res.scan, res.reported.heading))
            if res.clipped:
                break
        self._update_plans()
        self._infer_floor_plan()
        return {"new_marks": [(m.ap_id, m.mark_time) for m in new_marks],
                "clipped": clipped,
                "clock": self.walker.clock}

    def _cmd_terminate(self, command: dict) -> dict:
        flushed = self._flush_buffers()
        if self.objectives:
            obj = self.objectives.pop(0)
            self.completed_log.append(obj.to_dict())
            self._on_objective_complete(obj)
            self._activate_head()
            return {"terminated": obj.to_dict(),
                    "new_marks": [(m.ap_id, m.mark_time) for m in flushed]}
        return {"terminated": None}

    def _cmd_objectives(self, command: dict) -> dict:
        objectives = [Objective.from_dict(o) for o in command.get("objectives", [])]
        self.objectives = objectives
        self._activate_head()
        return {"objectives": [o.to_dict() for o in self.objectives]}

    def _cmd_correct(self, command: dict) -> dict:
        try:
            correct_component(self.floor_plan, command["component_id"],
                              geometry=command.get("geometry"),
                              kind=command.get("kind"),
                              lock=bool(command.get("lock", False)))
        except (KeyError, ValueError) as exc:
            raise SessionError(str(exc)) from exc
        return {"corrected": command["component_id"],
                "locked": bool(command.get("lock", False))}

    def _cmd_close(self, command: dict) -> dict:
        self.open = False
        return {"closed": True}

    # ------------------------------------------------------------------
    # pipeline pieces

    def _ingest_scan(self, scan, reported_heading: float) -> list:
        now = self.walker.clock
        in_range = set()
        for ap_id, rss in scan:
            in_range.add(ap_id)
            nearby = tuple((b, r) for b, r in scan if b != ap_id)
            rec = MarkRecord(timestamp=now, heading=reported_heading,
                             ap_id=ap_id, rss=rss, nearby=nearby)
            self.record_buffers.setdefault(ap_id, []).append(rec)
        finalized = []
        for ap_id in sorted(self.record_buffers):
            if ap_id not in in_range:
                finalized.extend(self._finalize_buffer(ap_id))
        return finalized

    def _flush_buffers(self) -> list:
        out = []
        for ap_id in sorted(self.record_buffers):
            out.extend(self._finalize_buffer(ap_id))
        return out

    def _finalize_buffer(self, ap_id: str) -> list:
        window = self.record_buffers.pop(ap_id, [])
        if len(window) < 2:
            return []
        mark = detect_ap_mark(window, DIRECTION_THRESHOLD_DEG)
        if mark is None:
            return []
        self.marks.append(mark)
        self.marks.sort(key=lambda m: m.mark_time)
        self._build_trajectory_to(mark)
        return [mark]

    def _build_trajectory_to(self, mark) -> None:
        idx = self.marks.index(mark)
        if idx == 0:
            return
        prev = self.marks[idx - 1]
        if prev.ap_id == mark.ap_id:
            return
        t0, t1 = prev.mark_time, mark.mark_time
        if t1 <= t0:
            return
        offsets = [0.0, 0.0]
        walked = 0.0
        for vec, (s0, s1) in zip(self.steps, self.step_spans):
            if s1 <= t0 or s0 >= t1 or s1 <= s0:
                continue
            frac = (min(s1, t1) - max(s0, t0)) / (s1 - s0)
            dx, dy = vec.offset()
            offsets[0] += dx * frac
            offsets[1] += dy * frac
            walked += vec.length * frac
        key = (prev.ap_id, mark.ap_id, sector_of_bearing(prev.mark_heading))
        pool = self.pools.get(key)
        if pool is None:
            pool = FusionPool(*key)
            self.pools[key] = pool
        pool.add_member(offsets[0], offsets[1], walked, t1)
        if len(pool.members) > PRUNE_TRIGGER:
            prune_pool(pool)
        pool.fuse(timestamp=t1)

    def _update_plans(self) -> None:
        if self.plan is None or len(self.reported_path) < 2:
            return
        recent = self.reported_path[-2:]
        self.plan = update_coverage(self.plan, recent, self.plan_radius)

    def _infer_floor_plan(self) -> None:
        if self._head_kind() == "floor_plan" and len(self.reported_path) >= 2:
            self.floor_plan = apply_inference(self.floor_plan,
                                              [self.reported_path],
                                              self.plan_config)

    def _position_aps(self) -> None:
        if not self.pools:
            return
        edges = select_positioning_edges(self.pools.values())
        const = position_aps(edges, max_iterations=100,
                             initial_positions=self.constellation)
        self.constellation = dict(const.positions)
        self.positioned = True

    # ------------------------------------------------------------------
    # objectives

    def _head_kind(self) -> str | None:
        return self.objectives[0].kind if self.objectives else None

    def _activate_head(self) -> None:
        head = self.objectives[0] if self.objectives else None
        self.plan = None
        if head is None:
            return
        if head.kind == "locate_aps":
            scope = head.params.get("scope", "all")
            spacing = self.scenario.rss_model.coverage_radius
            self.plan_radius = spacing
            if scope == "all":
                self.plan = make_coverage_plan(
                    0.0, 0.0, self.scenario.floor.width,
                    self.scenario.floor.height, spacing,
                    self.scenario.floor.obstacles)
            elif isinstance(scope, dict) and "area" in scope:
                x0, y0, x1, y1 = scope["area"]
                self.plan = make_coverage_plan(x0, y0, x1, y1, spacing,
                                               self.scenario.floor.obstacles)
            # ap-set scope has no lattice plan; completion tracks mark counts
        elif head.kind == "floor_plan":
            width = float(head.params.get("width", self.scenario.floor.width))
            height = float(head.params.get("height", self.scenario.floor.height))
            spacing = self.plan_config.grid_spacing
            self.plan_radius = spacing
            self.plan = make_coverage_plan(0.0, 0.0, width, height, spacing,
                                           self.scenario.floor.obstacles)
        elif head.kind == "track_movement":
            self._compute_track(head.params)

    def _compute_track(self, params: dict) -> None:
        if not self.steps:
            self.tracked = {"points": [], "timestamps": []}
            return
        query = TrackQuery(float(params.get("t_start", 0.0)),
                           float(params.get("t_end", self.walker.clock)),
                           tuple(params["area"]) if params.get("area") else None)
        timestamps = [self.step_spans[0][0]] + [s1 for _, s1 in self.step_spans]
        known = {aid: Point2(*xy) for aid, xy in self.constellation.items()}
        try:
            walk = track(query, self.steps, timestamps, self.marks, known)
        except ValueError:
            self.tracked = {"points": [], "timestamps": []}
            return
        self.tracked = {
            "points": [[p.x, p.y] for p in walk.points],
            "timestamps": list(walk.timestamps),
            "anchors": [[i, ap] for i, ap in walk.anchors],
        }

    def _check_completion(self) -> list:
        removed = []
        while self.objectives:
            head = self.objectives[0]
            if not self._objective_complete(head):
                break
            self.objectives.pop(0)
            self.completed_log.append(head.to_dict())
            removed.append(head.to_dict())
            self._on_objective_complete(head)
            self._activate_head()
        return removed

    def _objective_complete(self, obj: Objective) -> bool:
        if obj.kind in ("locate_aps", "floor_plan"):
            scope = obj.params.get("scope", "all")
            if obj.kind == "locate_aps" and isinstance(scope, dict) and "aps" in scope:
                need = int(obj.params.get("marks_required", 1))
                counts = {}
                for m in self.marks:
                    counts[m.ap_id] = counts.get(m.ap_id, 0) + 1
                return all(counts.get(aid, 0) >= need for aid in scope["aps"])
            return self.plan is not None and self.plan.is_complete()
        if obj.kind == "refine_trajectories":
            selected = {e_key for e_key in self._selected_pool_keys()}
            return not retrace_suggestions(self.pools.values(), selected,
                                           FUSION_THETA)
        if obj.kind == "track_movement":
            return self.tracked is not None
        return False

    def _on_objective_complete(self, obj: Objective) -> None:
        if obj.kind in ("locate_aps", "refine_trajectories"):
            self._flush_buffers()
            self._position_aps()
        if obj.kind == "track_movement":
            self.tracked = None

    def _selected_pool_keys(self) -> set:
        return {pool.key for pool in select_positioning_pools(self.pools.values())}

    # ------------------------------------------------------------------
    # suggestions and snapshots

    def suggestions(self) -> dict:
        """Pathways for the active objective; JSON-native types only, since
        this travels over the wire and into save files."""
        head = self._head_kind()
        out = {"objective": head}
        if head in ("locate_aps", "floor_plan") and self.plan is not None:
            out["paths"] = [[[p.x, p.y] for p in comp]
                            for comp in self.plan.components]
            out["pending_points"] = sorted([list(xy) for xy
                                            in self.plan.pending_points()])
        elif head == "refine_trajectories":
            selected = self._selected_pool_keys()
            out["retrace"] = [list(k) for k in
                              retrace_suggestions(self.pools.values(), selected,
                                                  FUSION_THETA)]
            if self.constellation:
                out["gap_paths"] = [
                    {"pair": list(pair), "path": [[p.x, p.y] for p in path]}
                    for pair, path in sector_gap_paths(
                        self.constellation, self.pools.values(),
                        self.scenario.floor.obstacles,
                        mark_radius=self.scenario.rss_model.coverage_radius)]
        elif head == "track_movement" and self.tracked is not None:
            out["track"] = self.tracked
        return out

    def pool_status(self) -> list:
        """Red/green per pool: converged pools are good, the rest need work."""
        out = []
        for key in sorted(self.pools):
            pool = self.pools[key]
            if pool.iteration >= 2:
                prev, cur = pool.fused_history[-2], pool.fused_history[-1]
                good = math.hypot(cur[0] - prev[0], cur[1] - prev[1]) < FUSION_THETA
            else:
                good = False
            compound = pool.fused
            out.append({"pair": [pool.ap_a, pool.ap_b],
                        "signature": pool.signature,
                        "members": len(pool.members),
                        "compound": None if compound is None
                        else [float(compound[0]), float(compound[1])],
                        "good": good})
        return out

    def state_dict(self) -> dict:
        """Materialized snapshot; identical schema to the save file."""
        return {
            "version": SESSION_SCHEMA_VERSION,
            "scenario": scenario_to_dict(self.scenario),
            "seed": self.seed,
            "events": list(self.events),
            "state": {
                "open": self.open,
                "clock": self.walker.clock,
                "true_position": [self.walker.true_position.x,
                                  self.walker.true_position.y],
                "reported_path": [[p.x, p.y] for p in self.reported_path],
                "true_path": [[p.x, p.y] for p in self.true_path],
                "marks": [[m.ap_id, m.mark_time, m.mark_heading]
                          for m in self.marks],
                "pools": self.pool_status(),
                "constellation": {aid: [x, y] for aid, (x, y)
                                  in sorted(self.constellation.items())},
                "positioned": self.positioned,
                "objectives": [o.to_dict() for o in self.objectives],
                "completed": list(self.completed_log),
                "floor_plan": plan_to_dict(self.floor_plan),
                "suggestions": self.suggestions(),
                "tracked": self.tracked,
            },
        }

    def canonical_bytes(self) -> bytes:
        return json.dumps(self.state_dict(), sort_keys=True).encode()

    def export_walk_log(self, path) -> None:
        from chi_walk.trajectory import WalkLogEntry, export_walk_log

        entries = [WalkLogEntry(timestamp=t1, heading=v.heading,
                                step_length=v.length, scan=scan)
                   for v, (_, t1), scan in zip(self.steps, self.step_spans,
                                               self.scans)]
        export_walk_log(path, entries)


# ---------------------------------------------------------------------------
# persistence and replay


def save_session(session: Session, path) -> None:
    with open(path, "w") as fh:
        json.dump(session.state_dict(), fh, indent=2, sort_keys=True)


def replay_events(scenario: Scenario, seed: int, events) -> Session:
    session = Session(scenario, seed=seed)
    for command in events:
        session.tick(command)
    return session


def load_session(path) -> Session:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"corrupt session file: {exc}") from exc
    known = {"version", "scenario", "seed", "events", "state"}
    unknown = set(data) - known
    if data.get("version") != SESSION_SCHEMA_VERSION or unknown:
        raise ValueError(
            f"unsupported session file (version {data.get('version')!r}, "
            f"unexpected fields {sorted(unknown)}); expected version "
            f"{SESSION_SCHEMA_VERSION}")
    scenario = scenario_from_dict(data["scenario"])
    return replay_events(scenario, data.get("seed", 0), data.get("events", []))
