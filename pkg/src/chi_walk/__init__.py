"""chi-walk: walker-in-the-loop indoor localization engine.

A deterministic simulator plus the algorithm stack that runs on top of it:
AP-mark detection, trajectory segmentation and robust fusing, relative AP
positioning, coverage path planning, floor-plan inference, an interactive
session service, and a seeded evaluation harness comparing walking strategies
on time and expense cost.
"""

from chi_walk.geometry import (
    ApMarkVector,
    ApToApTrajectory,
    DisplacementEdge,
    DisplacementVector,
    MarkRecord,
    Point2,
    heading_diff,
    normalize_heading,
    offset_to_vector,
    polyline_length,
    sum_displacements,
)

__version__ = "0.1.0"
