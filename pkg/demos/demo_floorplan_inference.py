"""Floor-plan inference rules on three walks: an out-and-back corridor (dead
end), a rectangular room loop (room + one entrance), and a long U-turn (room
with two entrances). Writes plan.svg next to this script."""

import math
import pathlib

import numpy as np

from chi_walk.floorplan import FloorPlan, PlanRuleConfig, apply_inference, \
    export_plan_svg
from chi_walk.geometry import Point2

cfg = PlanRuleConfig()

dead_end = [Point2(x * 0.5, 20.0) for x in range(17)]
dead_end = dead_end + dead_end[-2::-1]

room_loop = []
for x in np.arange(0, 8, 0.5):
    room_loop.append(Point2(float(x), 0.0))
for y in np.arange(0, 6, 0.5):
    room_loop.append(Point2(8.0, float(y)))
for x in np.arange(8, 0, -0.5):
    room_loop.append(Point2(float(x), 6.0))
for y in np.arange(6, -0.5, -0.5):
    room_loop.append(Point2(0.0, float(y)))

r = 6.0 / math.pi
u_turn = [Point2(14.0, float(y)) for y in np.arange(-4.0, 0.0, 0.5)]
for k in range(25):
    a = math.pi * k / 24
    u_turn.append(Point2(14.0 + r - r * math.cos(a), r * math.sin(a)))
u_turn.extend(Point2(14.0 + 2 * r, float(y)) for y in np.arange(-0.5, -4.25, -0.5))

plan = apply_inference(FloorPlan(), [dead_end, room_loop, u_turn], cfg)
kinds = {}
for comp in plan.components.values():
    kinds[comp.kind] = kinds.get(comp.kind, 0) + 1
print(f"inferred components: {kinds}")
print(f"dead-end blocks at: {plan.blocks}")

out = pathlib.Path(__file__).with_name("plan.svg")
export_plan_svg(plan, out)
print(f"wrote {out}")
