"""Builtin scenarios: the 100-AP random square used by the evaluation and a
fixed 17-AP office floor for interactive sessions and demos."""

from __future__ import annotations

from chi_walk.geometry import Point2
from chi_walk.world import (
    GroundTruthFloor,
    ImuNoiseModel,
    Room,
    RssModel,
    Scenario,
    generate_random_scenario,
)


def grid100(seed: int = 1) -> Scenario:
    """100 APs uniform in a 100x100 square; sector edges kept with prob 0.5.

    APs count as sector neighbors when their coverage disks touch (distance
    within twice the coverage radius); isolated APs are wired to their global
    nearest neighbor afterwards.
    """
    rss = RssModel()
    sc = generate_random_scenario(
        100, 100.0, 100.0, 0.5, seed=seed,
        rss_model=rss,
        imu_noise=ImuNoiseModel(30.0, 0.10),
        neighbor_radius=2.0 * rss.coverage_radius,
        ensure_connected=True)
    return Scenario(floor=sc.floor, edges=sc.edges, rss_model=sc.rss_model,
                    imu_noise=sc.imu_noise, seed=seed, name="grid100")


def office17() -> Scenario:
    """Fixed synthetic office floor: a corridor spine with rooms each side,
    17 APs, walls modeled as thin obstacles with door gaps."""
    width, height = 60.0, 36.0
    wall = 0.4

    def h_wall(x0, x1, y):
        return [Point2(x0, y - wall / 2), Point2(x1, y - wall / 2),
                Point2(x1, y + wall / 2), Point2(x0, y + wall / 2)]

    def v_wall(x, y0, y1):
        return [Point2(x - wall / 2, y0), Point2(x + wall / 2, y0),
                Point2(x + wall / 2, y1), Point2(x - wall / 2, y1)]

    obstacles = []
    rooms = []
    # corridor between y=15 and y=21; rooms along both sides, 12 wide
    for i in range(5):
        x0 = i * 12.0
        x1 = x0 + 12.0
        door_lo = (x0 + 4.0, x0 + 8.0)
        # bottom rooms: walls along y=15 except the door gap
        obstacles.append(h_wall(x0, door_lo[0], 15.0))
        obstacles.append(h_wall(door_lo[1], x1, 15.0))
        # top rooms: walls along y=21 with a door gap
        obstacles.append(h_wall(x0, door_lo[0], 21.0))
        obstacles.append(h_wall(door_lo[1], x1, 21.0))
        if i > 0:
            obstacles.append(v_wall(x0, 0.0, 15.0))
            obstacles.append(v_wall(x0, 21.0, height))
        rooms.append(Room(x0, 0.0, x1, 15.0,
                          entrances=((Point2(door_lo[0], 15.0), Point2(door_lo[1], 15.0)),)))
        rooms.append(Room(x0, 21.0, x1, height,
                          entrances=((Point2(door_lo[0], 21.0), Point2(door_lo[1], 21.0)),)))

    aps = []
    spots = [
        (6, 7), (18, 7), (30, 7), (42, 7), (54, 7),            # bottom rooms
        (6, 29), (18, 29), (30, 29), (42, 29), (54, 29),       # top rooms
        (10, 18), (22, 18), (34, 18), (46, 18), (58, 18),      # corridor
        (2, 18), (30, 12),                                     # extras
    ]
    for i, (x, y) in enumerate(spots):
        aps.append((f"ap{i:03d}", Point2(float(x), float(y))))

    floor = GroundTruthFloor(width=width, height=height, aps=aps,
                             rooms=rooms, obstacles=obstacles)
    # displacement graph: corridor chain plus each room AP to the two nearest
    # corridor APs
    edges = set()
    corridor = [f"ap{i:03d}" for i in range(10, 15)] + ["ap015", "ap016"]
    pos = dict(aps)
    for a, b in zip(corridor, corridor[1:]):
        edges.add((min(a, b), max(a, b)))
    for i in range(10):
        aid = f"ap{i:03d}"
        near = sorted(corridor, key=lambda c: pos[aid].distance_to(pos[c]))[:2]
        for c in near:
            edges.add((min(aid, c), max(aid, c)))
    return Scenario(floor=floor, edges=sorted(edges),
                    rss_model=RssModel(coverage_radius=12.0),
                    imu_noise=ImuNoiseModel(30.0, 0.10),
                    seed=0, name="office17")


def builtin_scenario(name: str, seed: int = 1) -> Scenario:
    if name == "grid100":
        return grid100(seed)
    if name == "office17":
        return office17()
    raise ValueError(f"unknown builtin scenario {name!r}")
