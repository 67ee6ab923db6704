"""Persistence of relevant components across consecutive time pairs.

A component stream is a chronological list of (time pair, components)
entries.  Two adjacent entries are consecutive when the first ends where
the second begins; gaps break every persistence notion and are tallied
as diagnostics rather than silently bridged.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

from .model import Diagnostics, SECONDS_PER_DAY, TimePair
from .components import Component
from .thresholds import RelevanceClass, ThresholdConfig

Stream = list[tuple[TimePair, list[Component]]]


@dataclass(frozen=True)
class EventSeries:
    """Maximal run of consecutive pairs in which one pipe stays graded."""

    pipe_id: str
    start_index: int
    length: int


@dataclass(frozen=True)
class ComponentChain:
    """Greedy chain of pipe-sharing components at consecutive pairs."""

    members: tuple[tuple[int, int], ...]   # (pair index, component index)

    @property
    def length(self) -> int:
        return len(self.members)


@dataclass
class RunLengthResult:
    series: list[EventSeries]
    histogram: dict[int, int]
    share_by_length: dict[int, float]
    total_points: int


@dataclass
class ChainResult:
    chains: list[ComponentChain]
    participating: int
    upper_bound: int


def _validate_stream(stream: Stream, diag: Diagnostics | None) -> list[bool]:
    """Chronology check; returns per-boundary consecutiveness flags."""
    consecutive: list[bool] = []
    for k in range(len(stream) - 1):
        left, right = stream[k][0], stream[k + 1][0]
        if right.t0 < left.t1:
            raise ValueError(
                f"component stream out of order at {left.t1} vs {right.t0}")
        is_consecutive = right.t0 == left.t1
        if not is_consecutive and diag is not None:
            diag.time_gaps += 1
        consecutive.append(is_consecutive)
    return consecutive


def pipe_run_lengths(stream: Stream,
                     min_class: RelevanceClass = RelevanceClass.HIGH,
                     diag: Diagnostics | None = None) -> RunLengthResult:
    """Per-pipe maximal runs of membership in graded components.

    A run of length k means a pipe sat in a component of at least
    min_class for k consecutive pairs.  The histogram counts series per
    length; share_by_length spreads the graded data points over the
    lengths (length * count / total graded points).
    """
    consecutive = _validate_stream(stream, diag)
    membership: dict[str, list[int]] = {}
    for k, (_pair, comps) in enumerate(stream):
        for comp in comps:
            if comp.relevance >= min_class:
                for pipe_id in comp.pipe_ids:
                    membership.setdefault(pipe_id, []).append(k)

    series: list[EventSeries] = []
    for pipe_id in sorted(membership):
        indices = membership[pipe_id]
        start = indices[0]
        length = 1
        for prev, cur in zip(indices, indices[1:]):
            if cur == prev + 1 and consecutive[prev]:
                length += 1
            else:
                series.append(EventSeries(pipe_id, start, length))
                start, length = cur, 1
        series.append(EventSeries(pipe_id, start, length))

    histogram: dict[int, int] = {}
    for s in series:
        histogram[s.length] = histogram.get(s.length, 0) + 1
    total = sum(length * count for length, count in histogram.items())
    shares = {length: datapoint_share(length * count, total)
              for length, count in sorted(histogram.items())}
    return RunLengthResult(series, dict(sorted(histogram.items())), shares, total)


def component_chains(stream: Stream,
                     min_class: RelevanceClass = RelevanceClass.HIGH,
                     min_length: int = 2,
                     diag: Diagnostics | None = None) -> ChainResult:
    """Chain components that share pipes across consecutive pairs.

    Greedy in chronological order with components visited in pipe-id
    order, so the matching is deterministic; every component lands in at
    most one chain.  participating counts components that share a pipe
    with any component of an adjacent consecutive pair, and since a chain
    consumes at least two such components, floor(participating / 2) is an
    upper bound for the number of chains of length >= 2.
    """
    consecutive = _validate_stream(stream, diag)
    graded: list[list[tuple[int, Component]]] = []
    for _pair, comps in stream:
        entry = [(ci, comp) for ci, comp in enumerate(comps)
                 if comp.relevance >= min_class]
        entry.sort(key=lambda item: item[1].pipe_ids[0])
        graded.append(entry)

    def intersects(a: Component, b: Component) -> bool:
        return bool(set(a.pipe_ids) & set(b.pipe_ids))

    participating_keys: set[tuple[int, int]] = set()
    for k in range(len(stream) - 1):
        if not consecutive[k]:
            continue
        for ci, left in graded[k]:
            for cj, right in graded[k + 1]:
                if intersects(left, right):
                    participating_keys.add((k, ci))
                    participating_keys.add((k + 1, cj))

    # growing chains keyed by their tail component
    open_chains: dict[tuple[int, int], list[tuple[int, int]]] = {}
    finished: list[list[tuple[int, int]]] = []
    for k in range(len(stream)):
        extended: dict[tuple[int, int], list[tuple[int, int]]] = {}
        taken: set[tuple[int, int]] = set()
        for ci, comp in graded[k]:
            matched = None
            if k > 0 and consecutive[k - 1]:
                for key in sorted(open_chains):
                    if key[0] != k - 1 or key in taken:
                        continue
                    tail_comp = stream[k - 1][1][key[1]]
                    if intersects(tail_comp, comp):
                        matched = key
                        break
            if matched is None:
                extended[(k, ci)] = [(k, ci)]
            else:
                taken.add(matched)
                chain = open_chains.pop(matched)
                chain.append((k, ci))
                extended[(k, ci)] = chain
        finished.extend(open_chains.values())
        open_chains = extended
    finished.extend(open_chains.values())

    chains = [ComponentChain(tuple(members)) for members in finished
              if len(members) >= min_length]
    chains.sort(key=lambda c: c.members[0])
    participating = len(participating_keys)
    return ChainResult(chains, participating, participating // 2)


def chain_relevance(stream: Stream, chain: ComponentChain) -> RelevanceClass:
    return max(stream[k][1][ci].relevance for k, ci in chain.members)


def realism_filter(stream: Stream, cfg: ThresholdConfig) -> tuple[Stream, int]:
    """Drop components whose largest flow change is physically implausible.

    A component moved by a flow change beyond the realistic limit is
    treated as a data artifact.  Filtering is idempotent and only ever
    removes components; pairs are kept even when they become empty.
    """
    dropped = 0
    filtered: Stream = []
    for pair, comps in stream:
        kept = [c for c in comps if c.max_abs_dflow_m3s <= cfg.realistic_flow_change_m3s]
        dropped += len(comps) - len(kept)
        filtered.append((pair, kept))
    return filtered, dropped


@dataclass(frozen=True)
class OccurrenceRate:
    seconds: float
    text: str


def occurrence_rate(event_count: int, horizon_s: float) -> OccurrenceRate:
    """Mean spacing of events over a horizon, with a humanized rendering."""
    if event_count < 0:
        raise ValueError(f"event count must be >= 0, got {event_count}")
    if not horizon_s > 0.0:
        raise ValueError(f"horizon must be positive, got {horizon_s}")
    if event_count == 0:
        return OccurrenceRate(math.inf, "never")
    seconds = horizon_s / event_count
    return OccurrenceRate(seconds, humanize_interval(seconds))


_INTERVAL_UNITS = (
    ("days", SECONDS_PER_DAY),
    ("hours", 3600.0),
    ("minutes", 60.0),
    ("seconds", 1.0),
)

# A unit is chosen once the value reaches this multiple of it, so that
# e.g. 25 hours stays in hours but 31 hours becomes 1.3 days.
_UNIT_PICKUP = 1.05


def humanize_interval(seconds: float) -> str:
    """Render a duration with its natural unit and two significant digits."""
    if not seconds > 0.0:
        raise ValueError(f"interval must be positive, got {seconds}")
    for name, size in _INTERVAL_UNITS:
        value = seconds / size
        if value >= _UNIT_PICKUP or name == "seconds":
            rounded = round_sig(value, 2)
            if rounded >= 10.0:
                return f"{rounded:.0f} {name}"
            return f"{rounded:.1f} {name}"
    raise AssertionError("unreachable")


def round_sig(value: float, digits: int) -> float:
    if value == 0.0 or not math.isfinite(value):
        return value
    return float(f"{value:.{digits}g}")


def datapoint_share(contained: int, total: int) -> float:
    """Fraction of data points contained in some selection."""
    if contained < 0 or total < 0 or contained > total:
        raise ValueError(f"invalid share arguments {contained}/{total}")
    if total == 0:
        return 0.0
    return contained / total


def format_share_percent(fraction: float) -> str:
    """Two-significant-digit percentage, e.g. 0.00036 -> '0.036%'."""
    pct = round_sig(100.0 * fraction, 2)
    return f"{pct:g}%"
