"""Command line pipeline: derive-threshold, scan, components, persistence,
report and synth.

Stages communicate through CSV files only, so any stage can be rerun or
replaced.  Outputs are deterministic: rows follow sorted ids and
chronological pairs, and worker results merge in submission order no
matter how many threads run.
"""

from __future__ import annotations

import argparse
from concurrent.futures import ThreadPoolExecutor
import csv
import math
import os
import sys

from .model import (
    BAR,
    KNM3H,
    SECONDS_PER_DAY,
    Diagnostics,
    GasParams,
    ModelError,
    Network,
    StateFrame,
    TimePair,
)
from .physics import TermRecord
from .thresholds import ThresholdConfig, derive_min_flow_change, pipe_relevant, prefilter
from .components import (
    Component,
    build_pair_components,
    read_components,
    write_components,
)
from .temporal import (
    RelevanceClass,
    chain_relevance,
    component_chains,
    format_share_percent,
    occurrence_rate,
    pipe_run_lengths,
    realism_filter,
)
from .ingest import (
    ParseError,
    format_timestamp,
    frame_pairs,
    index_exclusions,
    is_excluded,
    parse_exclusions,
    parse_states,
    parse_topology,
    read_terms,
    write_terms,
)
from .report import (
    DEFAULT_THRESHOLDS_PA,
    HEXBIN_COLUMNS,
    SWEEP_COLUMNS,
    hexbin,
    hexbin_rows,
    sweep_rows,
    sweep_table,
)
from . import synth as synth_mod

RUNS_COLUMNS = ["length", "series_count", "datapoint_share"]
CHAINS_COLUMNS = ["chain_id", "start_t0", "end_t1", "n_components", "class"]
EVENTS_COLUMNS = ["event_id", "start_t0", "end_t1", "n_components", "class", "realistic"]

CONFIG_KEYS = {
    "abs_small_bar", "abs_high_bar", "ratio_min", "reference_length_km",
    "min_flow_change_kNm3h", "realistic_flow_change_kNm3h", "temperature_K",
}


def load_config_file(path: str) -> dict[str, float]:
    values: dict[str, float] = {}
    with open(path) as handle:
        for lineno, raw in enumerate(handle, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ParseError(path, lineno, f"expected key = value, got {text!r}")
            key, value = (part.strip() for part in text.split("=", 1))
            if key not in CONFIG_KEYS:
                raise ParseError(path, lineno, f"unknown config key {key!r}")
            try:
                values[key] = float(value)
            except ValueError:
                raise ParseError(path, lineno, f"invalid number {value!r}") from None
    return values


def build_threshold_config(values: dict[str, float]) -> ThresholdConfig:
    kwargs = {}
    if "abs_small_bar" in values:
        kwargs["abs_small_pa"] = values["abs_small_bar"] * BAR
    if "abs_high_bar" in values:
        kwargs["abs_high_pa"] = values["abs_high_bar"] * BAR
    if "ratio_min" in values:
        kwargs["ratio_min"] = values["ratio_min"]
    if "reference_length_km" in values:
        kwargs["reference_length_m"] = values["reference_length_km"] * 1e3
    if "min_flow_change_kNm3h" in values:
        kwargs["min_flow_change_m3s"] = values["min_flow_change_kNm3h"] * KNM3H
    if "realistic_flow_change_kNm3h" in values:
        kwargs["realistic_flow_change_m3s"] = values["realistic_flow_change_kNm3h"] * KNM3H
    return ThresholdConfig(**kwargs)


def _configs_from_args(args: argparse.Namespace) -> tuple[ThresholdConfig, GasParams]:
    values = load_config_file(args.config) if getattr(args, "config", None) else {}
    cfg = build_threshold_config(values)
    temperature = values.get("temperature_K", 283.15)
    if getattr(args, "temperature", None) is not None:
        temperature = args.temperature
    return cfg, GasParams(temperature_k=temperature)


def parse_length(text: str) -> float:
    """Length with optional km/m/mm suffix, in meters."""
    text = text.strip()
    for suffix, factor in (("km", 1e3), ("mm", 1e-3), ("m", 1.0)):
        if text.endswith(suffix):
            return float(text[: -len(suffix)]) * factor
    return float(text)


def _out_path(args: argparse.Namespace, name: str) -> str:
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _write_csv(path: str, columns: list[str], rows: list[list[str]]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# derive-threshold

def cmd_derive_threshold(args: argparse.Namespace) -> int:
    dq_m3s = derive_min_flow_change(
        l_max_m=parse_length(args.Lmax),
        tau_min_s=args.tau_min,
        d_min_m=parse_length(args.Dmin),
        rho_max_kgm3=args.rho_max,
        abs_small_pa=args.abs_small * BAR,
    )
    dq_knm3h = dq_m3s / KNM3H
    safe = math.floor(dq_knm3h * 2.0) / 2.0
    print(f"minimal relevant flow change: {dq_knm3h:.3f} kNm3/h ({dq_m3s!r} m3/s)")
    if safe > 0.0:
        print(f"safe screening threshold: {safe:g} kNm3/h")
    else:
        print(f"safe screening threshold: {dq_knm3h:.3f} kNm3/h (too small to round down)")
    return 0


# ---------------------------------------------------------------------------
# scan

def _scan_pair(network: Network, pair: TimePair, frame_t0: StateFrame,
               frame_t1: StateFrame, gas: GasParams, cfg: ThresholdConfig,
               excl_index) -> tuple[list[tuple[TermRecord, bool]], dict[str, int], Diagnostics]:
    diag = Diagnostics()
    counts = {"total": 0, "excluded": 0, "missing": 0, "below_prefilter": 0,
              "evaluated": 0, "relevant": 0}
    rows: list[tuple[TermRecord, bool]] = []
    for pipe_id in sorted(network.pipes()):
        counts["total"] += 1
        if is_excluded(pipe_id, pair, excl_index):
            counts["excluded"] += 1
            continue
        element = network.elements[pipe_id]
        flow_t0 = frame_t0.arc_flow_m3s.get(pipe_id)
        flow_t1 = frame_t1.arc_flow_m3s.get(pipe_id)
        rho = frame_t1.pipe_rho_n_kgm3.get(pipe_id)
        if flow_t0 is None or flow_t1 is None or rho is None:
            counts["missing"] += 1
            diag.missing_data += 1
            continue
        if not prefilter(flow_t0, flow_t1, cfg):
            counts["below_prefilter"] += 1
            continue
        p_left = frame_t1.node_pressure_pa.get(element.from_node)
        p_right = frame_t1.node_pressure_pa.get(element.to_node)
        if p_left is None or p_right is None:
            counts["missing"] += 1
            diag.missing_data += 1
            continue
        record = TermRecord.evaluate(pipe_id, element.geometry, gas, rho, pair,
                                     flow_t0, flow_t1, p_left, p_right, diag)
        counts["evaluated"] += 1
        relevant = pipe_relevant(record, cfg)
        if relevant:
            counts["relevant"] += 1
        rows.append((record, relevant))
    return rows, counts, diag


def _run_pairs(tasks, worker, threads: int):
    """Ordered map over per-pair tasks, optionally on a thread pool."""
    if threads <= 1:
        return [worker(task) for task in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, tasks))


def cmd_scan(args: argparse.Namespace) -> int:
    cfg, gas = _configs_from_args(args)
    network = parse_topology(args.topology)
    frames = parse_states(args.states, network)
    windows = parse_exclusions(args.exclusions, network) if args.exclusions else []
    excl_index = index_exclusions(windows)
    pairs = frame_pairs(frames)

    def worker(task):
        pair, frame_t0, frame_t1 = task
        return _scan_pair(network, pair, frame_t0, frame_t1, gas, cfg, excl_index)

    results = _run_pairs(pairs, worker, args.threads)

    all_rows: list[tuple[TermRecord, bool]] = []
    totals = {"total": 0, "excluded": 0, "missing": 0, "below_prefilter": 0,
              "evaluated": 0, "relevant": 0}
    diag = Diagnostics()
    for rows, counts, part in results:
        all_rows.extend(rows)
        for key, value in counts.items():
            totals[key] += value
        diag.merge(part)

    write_terms(all_rows, _out_path(args, "terms.csv"))
    print(f"frames: {len(frames)}, pairs: {len(pairs)}, pipes: {len(network.pipes())}")
    print(f"data points: {totals['total']}, excluded: {totals['excluded']}, "
          f"missing: {totals['missing']}, below prefilter: {totals['below_prefilter']}, "
          f"evaluated: {totals['evaluated']}, relevant: {totals['relevant']}")
    print(f"diagnostics: {diag.as_dict()}")
    conserved = (totals["excluded"] + totals["missing"] + totals["below_prefilter"]
                 + totals["evaluated"])
    if conserved != totals["total"]:
        print("warning: data point accounting mismatch", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# components

def cmd_components(args: argparse.Namespace) -> int:
    cfg, _gas = _configs_from_args(args)
    network = parse_topology(args.topology)
    frames = parse_states(args.states, network)
    terms = read_terms(args.terms)

    frames_by_stamp = {frame.timestamp: frame for frame in frames}
    grouped: dict[TimePair, list[TermRecord]] = {}
    for record, relevant in terms:
        if relevant:
            grouped.setdefault(record.pair, []).append(record)

    tasks = []
    for pair in sorted(grouped, key=lambda p: p.t0):
        frame_t0 = frames_by_stamp.get(pair.t0)
        frame_t1 = frames_by_stamp.get(pair.t1)
        if frame_t0 is None or frame_t1 is None:
            raise ParseError(args.terms, 0,
                             f"pair {format_timestamp(pair.t0)} .. "
                             f"{format_timestamp(pair.t1)} has no matching states")
        tasks.append((pair, grouped[pair], frame_t0, frame_t1))

    diags = [Diagnostics() for _ in tasks]

    def worker(indexed):
        index, (pair, records, frame_t0, frame_t1) = indexed
        comps = build_pair_components(network, records, frame_t0, frame_t1,
                                      cfg, diags[index])
        return pair, comps

    results = _run_pairs(list(enumerate(tasks)), worker, args.threads)
    stream = [(pair, comps) for pair, comps in results]
    diag = Diagnostics()
    for part in diags:
        diag.merge(part)

    write_components(stream, _out_path(args, "components.csv"),
                     _out_path(args, "components_pipes.csv"))
    n_components = sum(len(comps) for _, comps in stream)
    by_class = {"none": 0, "small": 0, "high": 0}
    for _, comps in stream:
        for comp in comps:
            by_class[comp.relevance.label] += 1
    print(f"pairs with relevant pipes: {len(stream)}, components: {n_components}")
    print(f"classes: none: {by_class['none']}, small: {by_class['small']}, "
          f"high: {by_class['high']}")
    print(f"diagnostics: {diag.as_dict()}")
    return 0


# ---------------------------------------------------------------------------
# persistence

def _runs_csv_rows(result) -> list[list[str]]:
    return [[str(length), str(result.histogram[length]),
             repr(result.share_by_length[length])]
            for length in sorted(result.histogram)]


def cmd_persistence(args: argparse.Namespace) -> int:
    cfg, _gas = _configs_from_args(args)
    stream = read_components(args.components, args.members)
    diag = Diagnostics()

    runs_high = pipe_run_lengths(stream, RelevanceClass.HIGH, diag)
    filtered, dropped = realism_filter(stream, cfg)
    runs_high_realistic = pipe_run_lengths(filtered, RelevanceClass.HIGH)
    chains_high = component_chains(stream, RelevanceClass.HIGH, min_length=2)

    _write_csv(_out_path(args, "runs_high.csv"), RUNS_COLUMNS, _runs_csv_rows(runs_high))
    _write_csv(_out_path(args, "runs_high_realistic.csv"), RUNS_COLUMNS,
               _runs_csv_rows(runs_high_realistic))

    chain_rows = []
    for chain_id, chain in enumerate(chains_high.chains):
        first_pair = stream[chain.members[0][0]][0]
        last_pair = stream[chain.members[-1][0]][0]
        grade = chain_relevance(stream, chain)
        chain_rows.append([str(chain_id), format_timestamp(first_pair.t0),
                           format_timestamp(last_pair.t1), str(chain.length),
                           grade.label])
    _write_csv(_out_path(args, "chains.csv"), CHAINS_COLUMNS, chain_rows)

    # events: every relevant component belongs to exactly one greedy chain
    events = component_chains(stream, RelevanceClass.SMALL, min_length=1)
    event_rows = []
    realistic_counts = {"small": 0, "high": 0}
    for event_id, chain in enumerate(events.chains):
        first_pair = stream[chain.members[0][0]][0]
        last_pair = stream[chain.members[-1][0]][0]
        grade = chain_relevance(stream, chain)
        realistic = all(
            stream[k][1][ci].max_abs_dflow_m3s <= cfg.realistic_flow_change_m3s
            for k, ci in chain.members)
        if realistic:
            realistic_counts[grade.label] += 1
        event_rows.append([str(event_id), format_timestamp(first_pair.t0),
                           format_timestamp(last_pair.t1), str(chain.length),
                           grade.label, "1" if realistic else "0"])
    _write_csv(_out_path(args, "events.csv"), EVENTS_COLUMNS, event_rows)

    relevant_instances = sum(1 for _, comps in stream for c in comps
                             if c.relevance >= RelevanceClass.SMALL)
    high_instances = sum(1 for _, comps in stream for c in comps
                         if c.relevance >= RelevanceClass.HIGH)
    kept_relevant = sum(1 for _, comps in filtered for c in comps
                        if c.relevance >= RelevanceClass.SMALL)
    kept_high = sum(1 for _, comps in filtered for c in comps
                    if c.relevance >= RelevanceClass.HIGH)
    total_events = len(events.chains)
    realistic_events = realistic_counts["small"] + realistic_counts["high"]

    print(f"relevant component instances: {relevant_instances} "
          f"(high: {high_instances})")
    print(f"realism filter dropped {dropped} components, keeping "
          f"{kept_relevant} relevant ({kept_high} high)")
    print(f"high run lengths: {runs_high.histogram} "
          f"(realistic: {runs_high_realistic.histogram})")
    print(f"chain-participating high components: {chains_high.participating}, "
          f"chain count upper bound: {chains_high.upper_bound}, "
          f"chains found: {len(chains_high.chains)}")
    print(f"events: {total_events} ({realistic_events} realistic, "
          f"{realistic_counts['high']} realistic high)")
    print(f"diagnostics: {diag.as_dict()}")
    return 0


# ---------------------------------------------------------------------------
# report

def cmd_report(args: argparse.Namespace) -> int:
    stream = read_components(args.components, args.members)
    instances = [comp for _, comps in stream for comp in comps]

    if args.horizon_days is not None:
        horizon_s = args.horizon_days * SECONDS_PER_DAY
    elif stream:
        horizon_s = (stream[-1][0].t1 - stream[0][0].t0).total_seconds()
        print(f"horizon taken from component span: {horizon_s / SECONDS_PER_DAY:g} days")
    else:
        print("error: empty component stream and no --horizon-days", file=sys.stderr)
        return 1

    if args.thresholds:
        thresholds_pa = [float(part) * BAR for part in args.thresholds.split(",")]
    else:
        thresholds_pa = list(DEFAULT_THRESHOLDS_PA)
    table = sweep_table(instances, thresholds_pa, horizon_s)
    _write_csv(_out_path(args, "sweep.csv"), SWEEP_COLUMNS, sweep_rows(table))
    for row in table:
        spacing = ("never" if not math.isfinite(row.interval.seconds)
                   else f"every {row.interval.text}")
        print(f"threshold {row.threshold_pa / BAR:.2f} bar: "
              f"{row.n_components} components, {row.n_pipe_datapoints} pipe points, "
              f"{spacing}")

    if args.terms:
        terms = read_terms(args.terms)
        from .ingest import PER_10KM
        points = [(record.alpha_per_length_pam / PER_10KM, record.ratio)
                  for record, _relevant in terms]
        result = hexbin(points, resolution=args.resolution, min_count=args.min_count)
        _write_csv(_out_path(args, "hexbin.csv"), HEXBIN_COLUMNS, hexbin_rows(result))
        binned = sum(b.count for b in result.bins)
        print(f"hexbin: {binned} points in {len(result.bins)} bins, "
              f"{result.suppressed_points} suppressed, "
              f"{result.sentinel_points} without finite coordinates, "
              f"{format_share_percent(binned / result.total_points) if result.total_points else '0%'} binned")
    return 0


# ---------------------------------------------------------------------------
# synth

def cmd_synth(args: argparse.Namespace) -> int:
    scenario = synth_mod.parse_scenario(args.scenario)
    frames = synth_mod.simulate(scenario)
    from .ingest import serialize_states, serialize_topology
    serialize_topology(scenario.network, _out_path(args, "topology.csv"))
    serialize_states(frames, _out_path(args, "states.csv"))
    print(f"scenario {scenario.name}: {len(frames)} frames, "
          f"{len(scenario.network.pipes())} pipes, "
          f"{len(scenario.network.elements)} elements, seed {scenario.seed}")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gasinertia",
        description="Screen gas network state histories for relevant inertia terms.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("derive-threshold",
                       help="minimal flow change that can matter")
    p.add_argument("--Lmax", default="200km", help="largest pipe length (default 200km)")
    p.add_argument("--Dmin", default="150mm", help="smallest pipe diameter (default 150mm)")
    p.add_argument("--tau-min", type=float, default=180.0,
                   help="shortest time step in seconds (default 180)")
    p.add_argument("--rho-max", type=float, default=0.9,
                   help="largest normal density in kg/m3 (default 0.9)")
    p.add_argument("--abs-small", type=float, default=0.1,
                   help="absolute relevance threshold in bar (default 0.1)")
    p.set_defaults(func=cmd_derive_threshold)

    def common(p: argparse.ArgumentParser, topology=False, states=False,
               exclusions=False, terms_in=False, components_in=False) -> None:
        if topology:
            p.add_argument("--topology", required=True, help="topology CSV")
        if states:
            p.add_argument("--states", required=True, help="state history CSV")
        if exclusions:
            p.add_argument("--exclusions", help="exclusion windows CSV")
        if terms_in:
            p.add_argument("--terms", required=True, help="terms CSV from scan")
        if components_in:
            p.add_argument("--components", required=True, help="components CSV")
            p.add_argument("--members", required=True,
                           help="component membership CSV (components_pipes.csv)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads over time pairs (default 1)")

    p = sub.add_parser("scan", help="evaluate terms for every pipe and pair")
    common(p, topology=True, states=True, exclusions=True)
    p.add_argument("--temperature", type=float, help="gas temperature in K (default 283.15)")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("components", help="group relevant pipes and measure paths")
    common(p, topology=True, states=True, terms_in=True)
    p.set_defaults(func=cmd_components)

    p = sub.add_parser("persistence", help="runs, chains and realism filter")
    common(p, components_in=True)
    p.set_defaults(func=cmd_persistence)

    p = sub.add_parser("report", help="threshold sweep and hexbin aggregation")
    common(p, components_in=True)
    p.add_argument("--terms", help="terms CSV for the hexbin (optional)")
    p.add_argument("--horizon-days", type=float,
                   help="observation horizon for occurrence rates")
    p.add_argument("--thresholds", help="comma separated thresholds in bar")
    p.add_argument("--resolution", type=float, default=0.1,
                   help="hexagon circumradius in log10 units (default 0.1)")
    p.add_argument("--min-count", type=int, default=1,
                   help="suppress hexagons with fewer points (default 1)")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("synth", help="generate a synthetic history")
    p.add_argument("--scenario", required=True, help="scenario file")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ModelError, synth_mod.SimulationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
