"""Connected structures of relevant pipes and their longest-path measure.

For one time pair, pipes with a relevant inertia term are grouped into
connected components.  Open valves and resistors bridge groups without
contributing weight; regulators and compressors never bridge.  Each
component is then read as a directed multigraph (pipes oriented by the
sign of alpha) and summarized by the value of its longest directed path,
a bound on the pressure difference error explained by neglecting the
inertia terms along one route.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
import math

from .model import (
    ACTIVE_KINDS,
    BAR,
    Diagnostics,
    ElementKind,
    KNM3H,
    Network,
    StateFrame,
    TimePair,
)
from .physics import TermRecord
from .thresholds import RelevanceClass, ThresholdConfig, classify_absolute, pipe_relevant


@dataclass(frozen=True)
class DirectedArc:
    from_node: str
    to_node: str
    weight_pa: float
    element_id: str

    def __post_init__(self) -> None:
        if self.weight_pa < 0.0:
            raise ValueError(f"arc weight must be >= 0, got {self.weight_pa}")


@dataclass(frozen=True)
class Component:
    """One connected group of relevant pipes over one time pair."""

    pair: TimePair
    pipe_ids: tuple[str, ...]
    arcs: tuple[DirectedArc, ...]
    longest_path_pa: float
    cycle_correction_pa: float
    relevance: RelevanceClass
    max_abs_dflow_m3s: float


class _UnionFind:
    def __init__(self) -> None:
        self.parent: dict[str, str] = {}

    def find(self, x: str) -> str:
        root = x
        while self.parent.setdefault(root, root) != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def group_records(network: Network, records: list[TermRecord],
                  frame_t1: StateFrame,
                  diag: Diagnostics | None = None) -> list[list[TermRecord]]:
    """Partition relevant-pipe records into connected groups.

    Nodes are merged through relevant pipes, through valves that are open
    at t1 (missing state counts as closed, with a diagnostic) and through
    resistors.  Actively controlled elements never merge nodes.  Returns
    one record list per group, ordered by smallest pipe id, each list
    sorted by pipe id.
    """
    uf = _UnionFind()
    by_pipe: dict[str, TermRecord] = {}
    for rec in records:
        element = network.elements[rec.pipe_id]
        uf.union(element.from_node, element.to_node)
        by_pipe[rec.pipe_id] = rec

    for element_id in sorted(network.elements):
        element = network.elements[element_id]
        if element.kind is ElementKind.VALVE:
            state = frame_t1.valve_open.get(element_id)
            if state is None:
                if diag is not None:
                    diag.missing_valve_state += 1
                continue
            if state:
                uf.union(element.from_node, element.to_node)
        elif element.kind is ElementKind.RESISTOR:
            uf.union(element.from_node, element.to_node)
        # pipes without relevant records and ACTIVE_KINDS stay apart

    groups: dict[str, list[TermRecord]] = {}
    for pipe_id in sorted(by_pipe):
        root = uf.find(network.elements[pipe_id].from_node)
        groups.setdefault(root, []).append(by_pipe[pipe_id])
    return sorted(groups.values(), key=lambda recs: recs[0].pipe_id)


def orient_arcs(network: Network, group: list[TermRecord],
                frame_t0: StateFrame, frame_t1: StateFrame,
                diag: Diagnostics | None = None) -> list[DirectedArc]:
    """Directed arc set for one group.

    Pipes point with the sign of alpha (positive alpha keeps the from/to
    direction) and weigh |alpha|.  Bridging elements contribute zero
    weight: an open valve in both directions, a resistor in the direction
    its pressure drop moved between t0 and t1, or both when the endpoint
    pressures are unavailable or the drop did not change.
    """
    nodes = set()
    arcs: list[DirectedArc] = []
    for rec in group:
        element = network.elements[rec.pipe_id]
        nodes.add(element.from_node)
        nodes.add(element.to_node)
        if rec.alpha_pa >= 0.0:
            arcs.append(DirectedArc(element.from_node, element.to_node,
                                    abs(rec.alpha_pa), rec.pipe_id))
        else:
            arcs.append(DirectedArc(element.to_node, element.from_node,
                                    abs(rec.alpha_pa), rec.pipe_id))

    for element_id in sorted(network.elements):
        element = network.elements[element_id]
        if element.kind in ACTIVE_KINDS or element.kind is ElementKind.PIPE:
            continue
        if not (element.from_node in nodes and element.to_node in nodes):
            continue
        if element.kind is ElementKind.VALVE:
            if frame_t1.valve_open.get(element_id):
                arcs.append(DirectedArc(element.from_node, element.to_node, 0.0, element_id))
                arcs.append(DirectedArc(element.to_node, element.from_node, 0.0, element_id))
            continue
        # resistor: orient by the change of its pressure drop
        drops = []
        for frame in (frame_t0, frame_t1):
            p_from = frame.node_pressure_pa.get(element.from_node)
            p_to = frame.node_pressure_pa.get(element.to_node)
            drops.append(None if p_from is None or p_to is None else p_from - p_to)
        if drops[0] is None or drops[1] is None:
            if diag is not None:
                diag.missing_resistor_pressure += 1
            forward = backward = True
        else:
            forward = drops[1] >= drops[0]
            backward = drops[1] <= drops[0]
        if forward:
            arcs.append(DirectedArc(element.from_node, element.to_node, 0.0, element_id))
        if backward:
            arcs.append(DirectedArc(element.to_node, element.from_node, 0.0, element_id))
    return arcs


def longest_path_value(arcs: list[DirectedArc]) -> tuple[float, float]:
    """Longest directed path weight over a non-negative multigraph.

    Works on negated weights with Bellman-Ford.  Negative cycles are
    removed first: starting from all-zero distances (a virtual source),
    relaxation rounds that still update after n passes expose a cycle
    through the parent arcs; its absolute weight is added to a correction
    term and its arcs are zeroed, then the search repeats.  The final
    value is the best source-independent shortest distance, negated, plus
    the accumulated correction.  Exact on acyclic inputs; with cycles the
    result can only overestimate, never underestimate.

    Returns (value_pa, cycle_correction_pa).
    """
    if not arcs:
        raise ValueError("longest_path_value requires at least one arc")
    node_ids = sorted({a.from_node for a in arcs} | {a.to_node for a in arcs})
    index = {node: i for i, node in enumerate(node_ids)}
    n = len(node_ids)
    edges = [(index[a.from_node], index[a.to_node], -a.weight_pa) for a in arcs]
    weights = [w for _, _, w in edges]

    correction = 0.0
    while True:
        dist = [0.0] * n
        parent_arc = [-1] * n
        touched = -1
        for _ in range(n):
            touched = -1
            for ai, (u, v, _w) in enumerate(edges):
                cand = dist[u] + weights[ai]
                if cand < dist[v]:
                    dist[v] = cand
                    parent_arc[v] = ai
                    touched = v
        if touched < 0:
            break
        # walk n parents back to land inside the cycle, then extract it
        node = touched
        for _ in range(n):
            node = edges[parent_arc[node]][0]
        cycle_arcs = []
        cursor = node
        while True:
            ai = parent_arc[cursor]
            cycle_arcs.append(ai)
            cursor = edges[ai][0]
            if cursor == node:
                break
        cycle_weight = sum(weights[ai] for ai in cycle_arcs)
        correction += -cycle_weight
        for ai in cycle_arcs:
            weights[ai] = 0.0

    best = 0.0
    for source in range(n):
        dist = [math.inf] * n
        dist[source] = 0.0
        for _ in range(n - 1):
            changed = False
            for ai, (u, v, _w) in enumerate(edges):
                if dist[u] + weights[ai] < dist[v]:
                    dist[v] = dist[u] + weights[ai]
                    changed = True
            if not changed:
                break
        for target in range(n):
            if target != source and dist[target] < math.inf:
                best = max(best, -dist[target])
    return best + correction, correction


def classify_component(longest_path_pa: float, cfg: ThresholdConfig) -> RelevanceClass:
    return classify_absolute(longest_path_pa, cfg)


COMPONENTS_COLUMNS = ["t0", "t1", "component_id", "n_pipes", "longest_path_bar",
                      "cycle_correction_bar", "class", "max_abs_flow_change"]
MEMBERS_COLUMNS = ["component_id", "pipe_id"]


def write_components(stream: list[tuple[TimePair, list[Component]]],
                     path: str, members_path: str | None = None) -> None:
    """Serialize a component stream; ids number components chronologically.

    max_abs_flow_change is written in 1000 Nm^3/h like every flow column.
    The optional companion file lists each component's member pipes,
    which the persistence step needs to follow pipes through time.
    """
    from .ingest import format_timestamp

    member_rows: list[list[str]] = []
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(COMPONENTS_COLUMNS)
        component_id = 0
        for pair, comps in stream:
            for comp in comps:
                writer.writerow([
                    format_timestamp(pair.t0),
                    format_timestamp(pair.t1),
                    str(component_id),
                    str(len(comp.pipe_ids)),
                    repr(comp.longest_path_pa / BAR),
                    repr(comp.cycle_correction_pa / BAR),
                    comp.relevance.label,
                    repr(comp.max_abs_dflow_m3s / KNM3H),
                ])
                member_rows.extend([str(component_id), pipe_id]
                                   for pipe_id in comp.pipe_ids)
                component_id += 1
    if members_path is not None:
        with open(members_path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(MEMBERS_COLUMNS)
            writer.writerows(member_rows)


def read_components(path: str,
                    members_path: str | None = None
                    ) -> list[tuple[TimePair, list[Component]]]:
    """Rebuild a component stream from its CSV form.

    Arc data is not serialized, so the returned components carry empty
    arc tuples; pipe membership comes from the companion file when given,
    otherwise the pipe sets are empty and only counts survive.
    """
    from .ingest import ParseError, parse_timestamp

    members: dict[str, list[str]] = {}
    if members_path is not None:
        with open(members_path, newline="") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header != MEMBERS_COLUMNS:
                raise ParseError(members_path, 1,
                                 f"expected header {','.join(MEMBERS_COLUMNS)}")
            for row in reader:
                if row:
                    members.setdefault(row[0], []).append(row[1])

    stream: list[tuple[TimePair, list[Component]]] = []
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != COMPONENTS_COLUMNS:
            raise ParseError(path, 1, f"expected header {','.join(COMPONENTS_COLUMNS)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(COMPONENTS_COLUMNS):
                raise ParseError(path, lineno,
                                 f"expected {len(COMPONENTS_COLUMNS)} columns, got {len(row)}")
            pair = TimePair(parse_timestamp(row[0], path, lineno),
                            parse_timestamp(row[1], path, lineno))
            try:
                comp = Component(
                    pair=pair,
                    pipe_ids=tuple(members.get(row[2], ())),
                    arcs=(),
                    longest_path_pa=float(row[4]) * BAR,
                    cycle_correction_pa=float(row[5]) * BAR,
                    relevance=RelevanceClass.from_label(row[6]),
                    max_abs_dflow_m3s=float(row[7]) * KNM3H,
                )
            except (ValueError, KeyError) as exc:
                raise ParseError(path, lineno, f"bad component row: {exc}") from None
            if int(row[3]) != len(comp.pipe_ids) and members_path is not None:
                raise ParseError(path, lineno,
                                 f"n_pipes {row[3]} disagrees with member list "
                                 f"({len(comp.pipe_ids)} pipes)")
            if not stream or stream[-1][0] != pair:
                stream.append((pair, []))
            stream[-1][1].append(comp)
    return stream


def build_pair_components(network: Network, relevant_records: list[TermRecord],
                          frame_t0: StateFrame, frame_t1: StateFrame,
                          cfg: ThresholdConfig,
                          diag: Diagnostics | None = None) -> list[Component]:
    """Group, orient and measure records already screened for relevance."""
    components: list[Component] = []
    for group in group_records(network, relevant_records, frame_t1, diag):
        arcs = orient_arcs(network, group, frame_t0, frame_t1, diag)
        value, cycle_correction = longest_path_value(arcs)
        components.append(Component(
            pair=group[0].pair,
            pipe_ids=tuple(rec.pipe_id for rec in group),
            arcs=tuple(arcs),
            longest_path_pa=value,
            cycle_correction_pa=cycle_correction,
            relevance=classify_component(value, cfg),
            max_abs_dflow_m3s=max(abs(rec.dflow_m3s) for rec in group),
        ))
    return components


def analyze_pair(network: Network, records: list[TermRecord],
                 frame_t0: StateFrame, frame_t1: StateFrame,
                 cfg: ThresholdConfig,
                 diag: Diagnostics | None = None) -> list[Component]:
    """Full per-pair component pipeline over already-evaluated records."""
    relevant = [rec for rec in records if pipe_relevant(rec, cfg)]
    return build_pair_components(network, relevant, frame_t0, frame_t1, cfg, diag)
