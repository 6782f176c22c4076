"""Trajectory pipeline: AP-mark detection, vector segmentation, step counting,
AP-to-AP trajectory construction, and robust fusing of overlapping observations.

Fusing selects the half-plus subset of overlapping displacement observations
whose sample covariance has minimum determinant and averages it; pools are
pruned back to that subset whenever they grow past 10 members.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from chi_walk.geometry import (
    ApMarkVector,
    ApToApTrajectory,
    DisplacementVector,
    MarkRecord,
    heading_diff,
    offset_to_vector,
    sum_displacements,
)

DIRECTION_THRESHOLD_DEG = 20.0
PRUNE_TRIGGER = 10          # prune when more than this many members overlap
CADENCE_BAND_HZ = (0.8, 3.0)
WALKING_CORRELATION = 0.7


# ---------------------------------------------------------------------------
# AP-mark detection


def detect_ap_mark(window, direction_threshold: float = DIRECTION_THRESHOLD_DEG):
    """Locate the strongest-RSS record of a single-AP window and validate it.

    The strongest record is a mark point only if the heading change against its
    adjacent records stays within the threshold (a sharp turn at the peak means
    the peak is an artifact of the turn, not of closest approach). On success
    the records are trimmed to the maximal contiguous span whose headings stay
    within the threshold of the mark-point heading.
    """
    if not window:
        raise ValueError("empty record window")
    ap_id = window[0].ap_id
    peak = 0
    for i, rec in enumerate(window):
        if rec.ap_id != ap_id:
            raise ValueError("window mixes APs")
        if rec.rss > window[peak].rss:
            peak = i

    mark_heading = window[peak].heading
    if peak > 0 and heading_diff(window[peak - 1].heading, mark_heading) > direction_threshold:
        return None
    if peak + 1 < len(window) and heading_diff(window[peak + 1].heading, mark_heading) > direction_threshold:
        return None

    lo = peak
    while lo > 0 and heading_diff(window[lo - 1].heading, mark_heading) <= direction_threshold:
        lo -= 1
    hi = peak
    while hi + 1 < len(window) and heading_diff(window[hi + 1].heading, mark_heading) <= direction_threshold:
        hi += 1
    return ApMarkVector(ap_id=ap_id, records=tuple(window[lo:hi + 1]),
                        mark_point_index=peak - lo)


# ---------------------------------------------------------------------------
# vector segmentation


@dataclass
class SegmentedWalk:
    """Reported steps collapsed into near-straight vectors.

    spans[i] gives the (start_time, end_time) the i-th vector covers; when the
    raw steps carry no timestamps, step indices stand in for times.
    """

    vectors: list
    spans: list

    def total_offset(self) -> tuple[float, float]:
        return sum_displacements(self.vectors)


def segment_vectors(steps, threshold: float = DIRECTION_THRESHOLD_DEG,
                    spans=None) -> SegmentedWalk:
    """Greedy left-to-right grouping of steps into near-straight vectors.

    A new vector starts when a step's heading deviates more than the threshold
    from the heading that opened the current vector. Each group collapses into
    one vector (the sum of its steps), so total displacement is preserved.
    """
    if spans is None:
        spans = [(float(i), float(i + 1)) for i in range(len(steps))]
    if len(spans) != len(steps):
        raise ValueError("spans must align with steps")

    vectors = []
    out_spans = []
    group = []
    group_start = None
    start_heading = 0.0

    def flush(end_idx):
        dx, dy = sum_displacements(group)
        vectors.append(offset_to_vector(dx, dy))
        out_spans.append((spans[group_start][0], spans[end_idx][1]))

    for i, step in enumerate(steps):
        if not group:
            group = [step]
            group_start = i
            start_heading = step.heading
        elif heading_diff(step.heading, start_heading) <= threshold:
            group.append(step)
        else:
            flush(i - 1)
            group = [step]
            group_start = i
            start_heading = step.heading
    if group:
        flush(len(steps) - 1)
    return SegmentedWalk(vectors=vectors, spans=out_spans)


# ---------------------------------------------------------------------------
# step counting (normalized auto-correlation) and stride length


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    sa = a.std()
    sb = b.std()
    # a flat signal's std is rounding noise, not periodicity
    floor = 1e-9 * max(1.0, abs(float(a.mean())), abs(float(b.mean())))
    if sa <= floor or sb <= floor:
        return 0.0
    return float(((a - a.mean()) * (b - b.mean())).mean() / (sa * sb))


def count_steps_nasc(trace, sample_rate: float,
                     band_hz: tuple = CADENCE_BAND_HZ,
                     walking_threshold: float = WALKING_CORRELATION):
    """Count steps via normalized auto-correlation periodicity.

    Returns (step_count, step_frequency_hz). The lag maximizing correlation
    within the cadence band sets the frequency; duration is measured as the
    union of window positions whose local correlation clears the walking
    threshold, and count = duration * frequency.
    """
    trace = np.asarray(trace, dtype=float)
    lag_min = max(2, int(math.ceil(sample_rate / band_hz[1])))
    lag_max = int(math.floor(sample_rate / band_hz[0]))
    if len(trace) < 2 * lag_max:
        raise ValueError("trace shorter than 2 periods of the slowest cadence")

    corrs = np.empty(lag_max - lag_min + 1)
    for k, lag in enumerate(range(lag_min, lag_max + 1)):
        corrs[k] = _pearson(trace[:-lag], trace[lag:])
    best = float(corrs.max())
    if best <= walking_threshold:
        return (0, 0.0)
    # near-ties resolve to the smallest lag so period harmonics cannot halve
    # the frequency estimate
    lag = lag_min + int(np.argmax(corrs >= best - 0.01))
    frequency = sample_rate / lag

    walking = np.zeros(len(trace), dtype=bool)
    hop = max(1, lag // 2)
    for m in range(0, len(trace) - 2 * lag + 1, hop):
        if _pearson(trace[m:m + lag], trace[m + lag:m + 2 * lag]) > walking_threshold:
            walking[m:m + 2 * lag] = True
    duration = walking.sum() / sample_rate
    return (int(round(duration * frequency)), frequency)


@dataclass(frozen=True)
class StrideModel:
    """Linear step-frequency -> stride-length map over a supported band."""

    slope: float
    intercept: float
    freq_range: tuple = CADENCE_BAND_HZ

    def __post_init__(self):
        lo, hi = self.freq_range
        if self.slope * lo + self.intercept <= 0 or self.slope * hi + self.intercept <= 0:
            raise ValueError("stride model predicts non-positive stride in range")


def stride_length(step_frequency: float, model: StrideModel) -> float:
    lo, hi = model.freq_range
    if not lo <= step_frequency <= hi:
        raise ValueError(f"step frequency {step_frequency} outside supported "
                         f"range [{lo}, {hi}]")
    return model.slope * step_frequency + model.intercept


def fit_stride_model(frequencies, strides,
                     freq_range: tuple = CADENCE_BAND_HZ) -> StrideModel:
    """Least-squares fit of the linear frequency->stride relationship."""
    f = np.asarray(frequencies, dtype=float)
    s = np.asarray(strides, dtype=float)
    if len(f) < 2:
        raise ValueError("need at least two (frequency, stride) pairs")
    a = np.vstack([f, np.ones_like(f)]).T
    slope, intercept = np.linalg.lstsq(a, s, rcond=None)[0]
    return StrideModel(float(slope), float(intercept), freq_range)


# ---------------------------------------------------------------------------
# AP-to-AP trajectory construction


def build_ap_to_ap(walk: SegmentedWalk, marks) -> list:
    """One trajectory per consecutive mark pair of distinct APs.

    Vectors are clipped proportionally to the inter-mark time span, assuming
    constant speed within each vector.
    """
    out = []
    for m_start, m_end in zip(marks, marks[1:]):
        if m_start.ap_id == m_end.ap_id:
            continue
        t0 = m_start.mark_time
        t1 = m_end.mark_time
        clipped = []
        for vec, (s0, s1) in zip(walk.vectors, walk.spans):
            if s1 <= t0 or s0 >= t1 or s1 <= s0:
                continue
            overlap = min(s1, t1) - max(s0, t0)
            frac = overlap / (s1 - s0)
            clipped.append(DisplacementVector(vec.heading, vec.length * frac))
        out.append(ApToApTrajectory(start_mark=m_start, end_mark=m_end,
                                    vectors=tuple(clipped),
                                    start_time=t0, end_time=t1))
    return out


# ---------------------------------------------------------------------------
# minimum-covariance-determinant fusing

EXACT_ENUMERATION_LIMIT = 12


def mcd_subset_size(n: int, d: int = 2) -> int:
    """Half-plus subset size floor((n + d + 1) / 2)."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    return min(n, (n + d + 1) // 2)


def _subset_det_and_mean(pts: np.ndarray):
    mu = pts.mean(axis=0)
    c = pts - mu
    cov = c.T @ c / (len(pts) - 1)
    det = cov[0, 0] * cov[1, 1] - cov[0, 1] * cov[1, 0]
    return det, mu


def _tie_key(members: np.ndarray, idx) -> tuple:
    # permutation-invariant tie break: compare the selected points themselves
    return tuple(sorted(map(tuple, members[list(idx)])))


def fuse_mcd(members, h: int | None = None, seed: int = 0,
             n_starts: int = 20, max_csteps: int = 50):
    """Fuse overlapping planar offsets into a compound offset.

    Finds the h-subset minimizing the determinant of the sample covariance and
    returns (compound, selected_indices) where compound is the subset mean.
    Up to 12 members this is exact enumeration; beyond that, concentration
    iterations from several seeded starts keep the best determinant found.
    """
    pts = np.asarray(members, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("members must be (n, 2) planar offsets")
    n = len(pts)
    if n < 2:
        raise ValueError("need at least 2 members to fuse")
    if not np.isfinite(pts).all():
        raise ValueError("non-finite member offset")
    if h is None:
        h = mcd_subset_size(n, 2)
    h = min(h, n)

    if np.allclose(pts, pts[0], atol=0.0):
        return pts[0].copy(), tuple(range(h))

    if n <= EXACT_ENUMERATION_LIMIT:
        combos = np.array(list(itertools.combinations(range(n), h)))
        sub = pts[combos]                          # (C, h, 2)
        mu = sub.mean(axis=1, keepdims=True)
        c = sub - mu
        cov = np.einsum("chi,chj->cij", c, c) / (h - 1)
        dets = cov[:, 0, 0] * cov[:, 1, 1] - cov[:, 0, 1] * cov[:, 1, 0]
        best_det = dets.min()
        near = np.nonzero(dets <= best_det + 1e-12 * max(1.0, abs(best_det)))[0]
        pick = min(near, key=lambda k: _tie_key(pts, combos[k]))
        chosen = combos[pick]
        return sub[pick].mean(axis=0), tuple(int(i) for i in chosen)

    rng = np.random.default_rng(seed)
    best = None  # ((det, tie_key), idx tuple, mean)
    for _ in range(n_starts):
        subset = np.sort(rng.choice(n, size=3, replace=False))
        for _ in range(max_csteps):
            _, mu = _subset_det_and_mean(pts[subset])
            c = pts[subset] - mu
            cov = c.T @ c / (len(subset) - 1)
            dists = _mahalanobis_sq(pts, mu, cov)
            new_subset = np.sort(np.argsort(dists, kind="stable")[:h])
            if np.array_equal(new_subset, subset):
                break
            subset = new_subset
        det, mu = _subset_det_and_mean(pts[subset])
        key = (det, _tie_key(pts, subset))
        if best is None or key < best[0]:
            best = (key, tuple(int(i) for i in subset), mu)
    return best[2], best[1]


def _mahalanobis_sq(pts: np.ndarray, mu: np.ndarray, cov: np.ndarray) -> np.ndarray:
    det = cov[0, 0] * cov[1, 1] - cov[0, 1] * cov[1, 0]
    if det <= 1e-14:
        inv = np.linalg.pinv(cov + 1e-12 * np.eye(2))
    else:
        inv = np.array([[cov[1, 1], -cov[0, 1]], [-cov[1, 0], cov[0, 0]]]) / det
    c = pts - mu
    return np.einsum("ni,ij,nj->n", c, inv, c)


# ---------------------------------------------------------------------------
# fusion pools


@dataclass
class PoolMember:
    dx: float
    dy: float
    walked_length: float
    timestamp: float


@dataclass
class FusionPool:
    """Overlapping displacement observations for one AP pair and approach.

    The key's signature is the 45-degree bin of the approach heading at the
    start mark, which is what distinguishes physically different routes
    between the same AP pair.
    """

    ap_a: str
    ap_b: str
    signature: int
    members: list = field(default_factory=list)
    fused_history: list = field(default_factory=list)  # compound after each fuse
    discarded_timestamps: list = field(default_factory=list)
    last_fused_at: float = 0.0

    @property
    def key(self):
        return (self.ap_a, self.ap_b, self.signature)

    @property
    def iteration(self) -> int:
        return len(self.fused_history)

    @property
    def fused(self):
        return self.fused_history[-1] if self.fused_history else None

    def min_walked_length(self) -> float:
        return min(m.walked_length for m in self.members)

    def add_member(self, dx: float, dy: float, walked_length: float,
                   timestamp: float) -> None:
        self.members.append(PoolMember(dx, dy, walked_length, timestamp))

    def offsets(self) -> np.ndarray:
        return np.array([[m.dx, m.dy] for m in self.members])

    def fuse(self, timestamp: float | None = None) -> np.ndarray:
        """Recompute the compound offset and append it to the history."""
        if not self.members:
            raise ValueError("cannot fuse an empty pool")
        if len(self.members) == 1:
            compound = np.array([self.members[0].dx, self.members[0].dy])
        else:
            compound, _ = fuse_mcd(self.offsets())
        self.fused_history.append(compound)
        if timestamp is not None:
            self.last_fused_at = timestamp
        return compound


def prune_pool(pool: FusionPool, trigger: int = PRUNE_TRIGGER) -> FusionPool:
    """Discard members outside the MCD-selected subset once n exceeds the trigger.

    Discarded members' timestamps are tagged on the pool so later queries can
    still see when the dropped walks happened.
    """
    n = len(pool.members)
    if n <= trigger:
        return pool
    _, selected = fuse_mcd(pool.offsets())
    keep = set(selected)
    pool.discarded_timestamps.extend(
        m.timestamp for i, m in enumerate(pool.members) if i not in keep)
    pool.members = [m for i, m in enumerate(pool.members) if i in keep]
    return pool


def fusion_converged(pool: FusionPool, theta: float) -> bool:
    """True when the last two compound offsets moved less than theta apart."""
    if pool.iteration < 2:
        raise ValueError("need at least two fusion iterations")
    prev, cur = pool.fused_history[-2], pool.fused_history[-1]
    return float(np.hypot(cur[0] - prev[0], cur[1] - prev[1])) < theta


# ---------------------------------------------------------------------------
# walk logs (CSV)


@dataclass(frozen=True)
class WalkLogEntry:
    timestamp: float
    heading: float
    step_length: float
    scan: tuple = ()  # ((ap_id, rss), ...)


WALK_LOG_COLUMNS = ["timestamp", "reported_heading_deg", "reported_step_len", "scans"]


def export_walk_log(path, entries) -> None:
    """CSV with columns timestamp, reported_heading_deg, reported_step_len, scans;
    scans is semicolon-separated ap_id:rss pairs."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(WALK_LOG_COLUMNS)
        for e in entries:
            scans = ";".join(f"{ap}:{rss:.6g}" for ap, rss in e.scan)
            w.writerow([repr(e.timestamp), repr(e.heading), repr(e.step_length), scans])


def import_walk_log(path) -> list:
    entries = []
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != WALK_LOG_COLUMNS:
            raise ValueError(f"unexpected walk log header {header}")
        for row in r:
            ts, heading, length, scans = row
            scan = []
            if scans:
                for pair in scans.split(";"):
                    ap, rss = pair.rsplit(":", 1)
                    scan.append((ap, float(rss)))
            entries.append(WalkLogEntry(float(ts), float(heading), float(length),
                                        tuple(scan)))
    return entries
