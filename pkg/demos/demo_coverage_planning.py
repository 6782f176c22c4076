"""Coverage pathway suggestion: lattice points at the coverage radius, the
serpentine sweep on the full lattice, and how the plan sheds covered points
and splits at a discovered obstacle without re-joining."""

from chi_walk.geometry import Point2
from chi_walk.planner import make_coverage_plan, path_length, update_coverage

plan = make_coverage_plan(0, 0, 100, 100, spacing=10.0)
path = plan.components[0]
print(f"lattice: {len(path)} points")
print(f"serpentine length: {path_length(path):.0f} "
      f"(lower bound {(len(path) - 1) * 10.0:.0f})")

# the walker covers the first row and a half
walked = [Point2(0, 0), Point2(100, 0), Point2(100, 10), Point2(50, 10)]
plan = update_coverage(plan, walked, radius=10.0)
print(f"after walking {path_length(walked):.0f} units: "
      f"{len(plan.pending_points())} points pending")

# a wall turns up across the middle of the floor
wall = [Point2(45, 30), Point2(55, 30), Point2(55, 95), Point2(45, 95)]
plan = update_coverage(plan, [], radius=10.0, new_obstacles=[wall])
print(f"after the wall is discovered: {len(plan.components)} separate "
      f"path components (left unconnected on purpose)")
for i, comp in enumerate(plan.components):
    print(f"  component {i}: {len(comp)} points, length {path_length(comp):.0f}")
