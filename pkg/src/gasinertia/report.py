"""Aggregations for reporting: threshold sweep and hexagonal binning.

The sweep grades component longest-path values against a ladder of
absolute thresholds and attaches a mean occurrence interval.  The hexbin
summarizes per-pipe data points on the log10 plane spanned by the
length-normalized inertia term and the inertia/friction ratio.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

from .model import BAR
from .components import Component
from .temporal import OccurrenceRate, occurrence_rate


@dataclass(frozen=True)
class SweepRow:
    threshold_pa: float
    n_components: int
    n_pipe_datapoints: int
    interval: OccurrenceRate


def sweep_table(components: list[Component], thresholds_pa: list[float],
                horizon_s: float) -> list[SweepRow]:
    """Component counts above each threshold with mean spacing in time."""
    rows = []
    for threshold in thresholds_pa:
        selected = [c for c in components if abs(c.longest_path_pa) >= threshold]
        count = len(selected)
        rows.append(SweepRow(
            threshold_pa=threshold,
            n_components=count,
            n_pipe_datapoints=sum(len(c.pipe_ids) for c in selected),
            interval=occurrence_rate(count, horizon_s),
        ))
    return rows


DEFAULT_THRESHOLDS_PA = [i / 10 * BAR for i in range(1, 11)]


@dataclass(frozen=True)
class HexBin:
    cx: float
    cy: float
    count: int


@dataclass
class HexBinResult:
    bins: list[HexBin]
    resolution: float
    suppressed_points: int     # points in bins below min_count
    sentinel_points: int       # points without finite log coordinates
    total_points: int


def hex_center(x: float, y: float, resolution: float) -> tuple[float, float]:
    """Center of the pointy-top hexagon of circumradius r containing (x, y).

    Row pitch is 1.5 r and column pitch sqrt(3) r with odd rows shifted
    half a column.  The nearest of the 3x3 candidate lattice neighborhood
    wins; exact distance ties go to the lexicographically smallest center.
    """
    dy = 1.5 * resolution
    dx = math.sqrt(3.0) * resolution
    j0 = round(y / dy)
    i0 = round(x / dx - 0.5 * (j0 & 1))
    best: tuple[float, float, float] | None = None
    for j in (j0 - 1, j0, j0 + 1):
        cy = j * dy
        for i in (i0 - 1, i0, i0 + 1):
            cx = (i + 0.5 * (j & 1)) * dx
            key = ((x - cx) ** 2 + (y - cy) ** 2, cx, cy)
            if best is None or key < best:
                best = key
    assert best is not None
    return best[1], best[2]


def hexbin(points: list[tuple[float, float]], resolution: float = 0.1,
           min_count: int = 1) -> HexBinResult:
    """Bin (alpha per 10 km [bar], ratio) pairs in log10-log10 space.

    Points whose coordinates have no finite logarithm (zero or infinite
    ratio, zero alpha) are tallied under sentinel_points instead of being
    dropped silently, and bins with fewer than min_count points are
    suppressed but stay accounted for, so that

        binned + suppressed + sentinel == total
    """
    if not resolution > 0.0:
        raise ValueError(f"resolution must be positive, got {resolution}")
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    counts: dict[tuple[float, float], int] = {}
    sentinel = 0
    for alpha_per_10km, ratio in points:
        magnitude = abs(alpha_per_10km)
        if not (magnitude > 0.0 and ratio > 0.0
                and math.isfinite(magnitude) and math.isfinite(ratio)):
            sentinel += 1
            continue
        center = hex_center(math.log10(magnitude), math.log10(ratio), resolution)
        counts[center] = counts.get(center, 0) + 1

    bins = []
    suppressed = 0
    for (cx, cy), count in sorted(counts.items()):
        if count >= min_count:
            bins.append(HexBin(cx, cy, count))
        else:
            suppressed += count
    return HexBinResult(bins, resolution, suppressed, sentinel, len(points))


SWEEP_COLUMNS = ["threshold_bar", "n_components", "n_pipe_datapoints",
                 "avg_interval_human", "avg_interval_seconds"]
HEXBIN_COLUMNS = ["cx", "cy", "count"]


def sweep_rows(rows: list[SweepRow]) -> list[list[str]]:
    out = []
    for row in rows:
        seconds = row.interval.seconds
        out.append([repr(row.threshold_pa / BAR), str(row.n_components),
                    str(row.n_pipe_datapoints), row.interval.text,
                    repr(seconds) if math.isfinite(seconds) else "inf"])
    return out


def hexbin_rows(result: HexBinResult) -> list[list[str]]:
    return [[repr(b.cx), repr(b.cy), str(b.count)] for b in result.bins]
