"""Synthetic state histories from small reference networks.

A scenario picks a fixture topology, a frame count and a boundary
schedule.  Each hydraulically connected island needs one pressure
reference node; the remaining boundary nodes carry signed inflow
setpoints (negative = offtake).  Frame 0 is solved as a steady state;
every later frame solves the implicit Euler system in which each pipe
obeys the discretized momentum balance against the previous frame and
every free node balances its flows.  Open valves equalize endpoint
pressures, resistors add a small quadratic drop, closed valves block
flow, and actively controlled elements transfer nothing.

The solver is a damped Newton iteration on a vectorized residual with a
finite-difference Jacobian that is reused while it keeps working.
Frames whose residual is already converged are emitted without a solve,
so long quiet stretches cost one function evaluation per frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
import math

import numpy as np

from .model import (
    BAR,
    GRAVITY_MS2,
    KNM3H,
    Element,
    ElementKind,
    Network,
    Node,
    PipeGeometry,
    StateFrame,
)
from .physics import (
    RE_LAMINAR_LIMIT,
    Z_FLOOR,
    specific_gas_constant,
)
from .ingest import ParseError, parse_timestamp

# fixed quadratic drop coefficient of synthetic resistors, Pa/(m^3/s)^2
RESISTOR_DROP_COEFF = 1.0e3

NEWTON_TOL = 1.0e-11
NEWTON_MAX_ITER = 50
# a cached Jacobian is refreshed when the entry residual exceeds this
JACOBIAN_REFRESH_NORM = 1.0e-4

DEFAULT_START = datetime(2026, 1, 1, tzinfo=timezone.utc)


class SimulationError(RuntimeError):
    """Raised when the implicit solve fails; carries the frame index."""

    def __init__(self, frame_index: int, message: str) -> None:
        super().__init__(f"frame {frame_index}: {message}")
        self.frame_index = frame_index


@dataclass(frozen=True)
class BoundaryEvent:
    """From frame_index onward the node's inflow setpoint becomes value."""

    node_id: str
    frame_index: int
    inflow_m3s: float


@dataclass(frozen=True)
class Scenario:
    name: str
    network: Network
    reference_pressure_pa: dict[str, float]
    base_inflow_m3s: dict[str, float]
    events: tuple[BoundaryEvent, ...] = ()
    frames: int = 10
    tau_s: float = 180.0
    start: datetime = DEFAULT_START
    rho_n_kgm3: float = 0.85
    temperature_k: float = 283.15
    noise: float = 0.0
    seed: int = 0
    closed_valves: frozenset[str] = frozenset()

    def inflow_at(self, node_id: str, frame_index: int) -> float:
        value = self.base_inflow_m3s.get(node_id, 0.0)
        for event in self.events:
            if event.node_id == node_id and event.frame_index <= frame_index:
                value = event.inflow_m3s
        return value


# ---------------------------------------------------------------------------
# fixtures

def _chain(prefix: str, count: int, length_m: float, diameter_m: float,
           roughness_m: float = 1e-5) -> tuple[list[Node], list[Element]]:
    nodes = [Node(f"{prefix}{i}") for i in range(count + 1)]
    geometry = PipeGeometry(length_m=length_m, diameter_m=diameter_m,
                            roughness_m=roughness_m)
    elements = [Element(f"{prefix}p{i}", ElementKind.PIPE,
                        f"{prefix}{i}", f"{prefix}{i + 1}", geometry)
                for i in range(count)]
    return nodes, elements


def fixture_single50() -> tuple[Network, dict[str, float], dict[str, float]]:
    """One flat 50 km pipe, reference upstream, offtake downstream."""
    nodes, elements = _chain("s", 1, 50e3, 0.9)
    network = Network.build(nodes, elements)
    return network, {"s0": 60.0 * BAR}, {"s1": -20.0 * KNM3H}


def fixture_line3() -> tuple[Network, dict[str, float], dict[str, float]]:
    """Three 10 km pipes in a row."""
    nodes, elements = _chain("n", 3, 10e3, 0.5)
    network = Network.build(nodes, elements)
    return network, {"n0": 60.0 * BAR}, {"n3": -10.0 * KNM3H}


def fixture_funnel50() -> tuple[Network, dict[str, float], dict[str, float]]:
    """Fifty pipes in seven hydraulically independent islands.

    Chains a and g and ring f provide bulk and transients, single-pipe
    islands b, c, d host cleanly shaped flow-change events, and island e
    carries a valve and a resistor.  Regulators and compressors tie the
    islands into one drawing without transferring gas.
    """
    nodes: list[Node] = []
    elements: list[Element] = []

    for prefix, count, length_m, diameter_m in (
            ("a", 15, 10e3, 0.6),
            ("b", 1, 40e3, 0.6),
            ("c", 1, 50e3, 0.8),
            ("d", 1, 20e3, 0.9),
            ("g", 11, 8e3, 0.4)):
        ns, es = _chain(prefix, count, length_m, diameter_m)
        nodes.extend(ns)
        elements.extend(es)

    # island e: two chains joined by a valve and a resistor
    nodes.extend(Node(f"e{i}") for i in range(8))
    e_geo = PipeGeometry(length_m=5e3, diameter_m=0.3, roughness_m=1e-5)
    e_pipes = [("ep0", "e0", "e1"), ("ep1", "e2", "e3"), ("ep2", "e4", "e5"),
               ("ep3", "e5", "e6"), ("ep4", "e6", "e7")]
    elements.extend(Element(eid, ElementKind.PIPE, a, b, e_geo) for eid, a, b in e_pipes)
    elements.append(Element("ev", ElementKind.VALVE, "e1", "e2"))
    elements.append(Element("er", ElementKind.RESISTOR, "e3", "e4"))

    # island f: ring of 16 pipes
    nodes.extend(Node(f"f{i}") for i in range(16))
    f_geo = PipeGeometry(length_m=5e3, diameter_m=0.4, roughness_m=1e-5)
    elements.extend(Element(f"fp{i}", ElementKind.PIPE, f"f{i}", f"f{(i + 1) % 16}", f_geo)
                    for i in range(16))

    # inert couplings between the islands
    elements.append(Element("reg_ab", ElementKind.REGULATOR, "a15", "b0"))
    elements.append(Element("reg_bc", ElementKind.REGULATOR, "b1", "c0"))
    elements.append(Element("comp_cd", ElementKind.COMPRESSOR, "c1", "d0"))
    elements.append(Element("reg_de", ElementKind.REGULATOR, "d1", "e0"))
    elements.append(Element("comp_ef", ElementKind.COMPRESSOR, "e7", "f0"))
    elements.append(Element("reg_fg", ElementKind.REGULATOR, "f8", "g0"))

    network = Network.build(nodes, elements)
    references = {name: 60.0 * BAR for name in ("a0", "b0", "c0", "d0", "e0", "f0", "g0")}
    inflow = {"a15": -14.4 * KNM3H, "b1": -14.4 * KNM3H, "c1": -14.4 * KNM3H,
              "d1": -14.4 * KNM3H, "e7": -3.6 * KNM3H, "f8": -7.2 * KNM3H,
              "g11": -5.4 * KNM3H}
    return network, references, inflow


FIXTURES = {
    "single50": fixture_single50,
    "line3": fixture_line3,
    "funnel50": fixture_funnel50,
}


def parse_scenario(path: str) -> Scenario:
    """Read a key = value scenario file.

    Recognized keys: fixture, frames, tau_s, temperature_K, rho_n_kgNm3,
    noise, seed, start, closed_valve (repeatable), pressure (node bar,
    repeatable) and event (node frame inflow_kNm3h, repeatable).
    """
    fixture_name = None
    scalars: dict[str, str] = {}
    events: list[BoundaryEvent] = []
    pressures: list[tuple[str, float]] = []
    closed: set[str] = set()
    with open(path) as handle:
        for lineno, raw in enumerate(handle, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ParseError(path, lineno, f"expected key = value, got {text!r}")
            key, value = (part.strip() for part in text.split("=", 1))
            if key == "event":
                parts = value.split()
                if len(parts) != 3:
                    raise ParseError(path, lineno,
                                     "event takes: node frame inflow_kNm3h")
                try:
                    events.append(BoundaryEvent(parts[0], int(parts[1]),
                                                float(parts[2]) * KNM3H))
                except ValueError:
                    raise ParseError(path, lineno, f"bad event {value!r}") from None
            elif key == "pressure":
                parts = value.split()
                if len(parts) != 2:
                    raise ParseError(path, lineno, "pressure takes: node bar")
                try:
                    pressures.append((parts[0], float(parts[1]) * BAR))
                except ValueError:
                    raise ParseError(path, lineno, f"bad pressure {value!r}") from None
            elif key == "closed_valve":
                closed.add(value)
            elif key == "fixture":
                fixture_name = value
            else:
                scalars[key] = value
    if fixture_name is None:
        raise ParseError(path, 0, "scenario requires a fixture key")
    if fixture_name not in FIXTURES:
        raise ParseError(path, 0,
                         f"unknown fixture {fixture_name!r}, "
                         f"available: {', '.join(sorted(FIXTURES))}")
    network, references, inflow = FIXTURES[fixture_name]()
    references.update(pressures)
    try:
        scenario = Scenario(
            name=fixture_name,
            network=network,
            reference_pressure_pa=references,
            base_inflow_m3s=inflow,
            events=tuple(events),
            frames=int(scalars.pop("frames", "10")),
            tau_s=float(scalars.pop("tau_s", "180")),
            start=parse_timestamp(scalars.pop("start", "2026-01-01T00:00:00Z"), path),
            rho_n_kgm3=float(scalars.pop("rho_n_kgNm3", "0.85")),
            temperature_k=float(scalars.pop("temperature_K", "283.15")),
            noise=float(scalars.pop("noise", "0")),
            seed=int(scalars.pop("seed", "0")),
            closed_valves=frozenset(closed),
        )
    except ValueError as exc:
        raise ParseError(path, 0, f"bad scalar value: {exc}") from None
    if scalars:
        raise ParseError(path, 0, f"unknown keys: {', '.join(sorted(scalars))}")
    for event in scenario.events:
        if event.node_id not in scenario.network.nodes:
            raise ParseError(path, 0, f"event references unknown node {event.node_id!r}")
        if not 0 <= event.frame_index < scenario.frames:
            raise ParseError(path, 0,
                             f"event frame {event.frame_index} outside 0..{scenario.frames - 1}")
    for valve_id in scenario.closed_valves:
        element = scenario.network.elements.get(valve_id)
        if element is None or element.kind is not ElementKind.VALVE:
            raise ParseError(path, 0, f"closed_valve {valve_id!r} is not a valve")
    return scenario


# ---------------------------------------------------------------------------
# implicit solver

class _System:
    """Index layout and vectorized residual of one scenario."""

    def __init__(self, scenario: Scenario) -> None:
        network = scenario.network
        self.scenario = scenario
        self.pipe_ids = sorted(network.pipes())
        self.valve_ids = sorted(network.of_kind(ElementKind.VALVE))
        self.resistor_ids = sorted(network.of_kind(ElementKind.RESISTOR))
        passive = self.pipe_ids + self.valve_ids + self.resistor_ids

        node_set: set[str] = set()
        for element_id in passive:
            element = network.elements[element_id]
            node_set.add(element.from_node)
            node_set.add(element.to_node)
        self.hydraulic_nodes = sorted(node_set)
        for node_id in scenario.reference_pressure_pa:
            if node_id not in node_set:
                raise ValueError(f"reference node {node_id!r} touches no passive element")

        self.node_index = {n: i for i, n in enumerate(self.hydraulic_nodes)}
        self.free_nodes = [n for n in self.hydraulic_nodes
                           if n not in scenario.reference_pressure_pa]
        self.flow_nodes = sorted(scenario.base_inflow_m3s)
        self.free_pos = {n: i for i, n in enumerate(self.free_nodes)}
        for node_id in self.flow_nodes:
            if node_id not in self.free_pos:
                raise ValueError(
                    f"inflow node {node_id!r} must be a free hydraulic node")

        n_nodes = len(self.hydraulic_nodes)
        self.p_fixed = np.zeros(n_nodes)
        self.fixed_mask = np.zeros(n_nodes, dtype=bool)
        for node_id, pressure in scenario.reference_pressure_pa.items():
            self.p_fixed[self.node_index[node_id]] = pressure
            self.fixed_mask[self.node_index[node_id]] = True
        self.free_index = np.array([self.node_index[n] for n in self.free_nodes],
                                   dtype=int)

        pipes = [network.elements[pid] for pid in self.pipe_ids]
        geo = [p.geometry for p in pipes]
        self.length = np.array([g.length_m for g in geo])
        self.diameter = np.array([g.diameter_m for g in geo])
        self.area = np.pi * self.diameter ** 2 / 4.0
        self.rel_rough = np.array([g.roughness_m for g in geo]) / self.diameter
        self.slope = np.array([g.slope for g in geo])
        self.pipe_from = np.array([self.node_index[p.from_node] for p in pipes], dtype=int)
        self.pipe_to = np.array([self.node_index[p.to_node] for p in pipes], dtype=int)

        valves = [network.elements[vid] for vid in self.valve_ids]
        self.valve_from = np.array([self.node_index[v.from_node] for v in valves], dtype=int)
        self.valve_to = np.array([self.node_index[v.to_node] for v in valves], dtype=int)
        self.valve_open = np.array([vid not in scenario.closed_valves
                                    for vid in self.valve_ids], dtype=bool)

        resistors = [network.elements[rid] for rid in self.resistor_ids]
        self.res_from = np.array([self.node_index[r.from_node] for r in resistors], dtype=int)
        self.res_to = np.array([self.node_index[r.to_node] for r in resistors], dtype=int)

        self.n_free = len(self.free_nodes)
        self.n_pipe = len(self.pipe_ids)
        self.n_valve = len(self.valve_ids)
        self.n_res = len(self.resistor_ids)
        self.n_unknowns = self.n_free + self.n_pipe + self.n_valve + self.n_res

        self.rho = scenario.rho_n_kgm3
        self.r_s = specific_gas_constant(self.rho)
        gas_t = scenario.temperature_k
        self.rt = self.r_s * gas_t
        self.t_r = gas_t / 192.0
        self.p_pc = 46.4 * BAR
        self.eta = 1.1e-5
        self.beta_coeff = (self.rt * self.length * self.rho ** 2
                           / (2.0 * self.area ** 2 * self.diameter))
        self.alpha_coeff = self.length * self.rho / self.area
        self.grav_coeff = GRAVITY_MS2 * self.slope * self.length / self.rt
        self.kin_coeff = self.rt / self.area ** 2

        # free-node balance as a sparse triple list over all passive arcs
        self.balance_rows: list[tuple[int, int, float]] = []
        free_pos = {ni: k for k, ni in enumerate(self.free_index)}
        arcs = ([(self.pipe_from[i], self.pipe_to[i], i) for i in range(self.n_pipe)]
                + [(self.valve_from[i], self.valve_to[i], self.n_pipe + i)
                   for i in range(self.n_valve)]
                + [(self.res_from[i], self.res_to[i], self.n_pipe + self.n_valve + i)
                   for i in range(self.n_res)])
        for from_i, to_i, flow_col in arcs:
            if from_i in free_pos:
                self.balance_rows.append((free_pos[from_i], flow_col, -1.0))
            if to_i in free_pos:
                self.balance_rows.append((free_pos[to_i], flow_col, +1.0))
        self.incidence = np.zeros((self.n_free, self.n_pipe + self.n_valve + self.n_res))
        for row, col, sign in self.balance_rows:
            self.incidence[row, col] = self.incidence[row, col] + sign

    def papay(self, p: np.ndarray) -> np.ndarray:
        p_r = p / self.p_pc
        z = (1.0 - 3.52 * p_r * np.exp(-2.26 * self.t_r)
             + 0.274 * p_r * p_r * np.exp(-1.878 * self.t_r))
        return np.maximum(z, Z_FLOOR)

    def friction(self, q_kgs: np.ndarray) -> np.ndarray:
        re = np.abs(q_kgs) * self.diameter / (self.area * self.eta)
        lam = np.zeros_like(re)
        laminar = (re > 0.0) & (re < RE_LAMINAR_LIMIT)
        if np.any(laminar):
            lam[laminar] = 64.0 / re[laminar]
        turbulent = re >= RE_LAMINAR_LIMIT
        if np.any(turbulent):
            ret = re[turbulent]
            rrt = self.rel_rough[turbulent]
            inner = rrt ** 1.1098 / 2.8257 + 5.8506 / ret ** 0.8981
            arg = rrt / 3.7065 - (5.0452 / ret) * np.log10(inner)
            lam[turbulent] = (-2.0 * np.log10(arg)) ** -2.0
        return lam

    def split(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        a = self.n_free
        b = a + self.n_pipe
        c = b + self.n_valve
        return x[:a], x[a:b], x[b:c], x[c:]

    def pressures(self, p_free: np.ndarray) -> np.ndarray:
        p = self.p_fixed.copy()
        p[self.free_index] = p_free
        return p

    def residual(self, x: np.ndarray, q_prev: np.ndarray | None,
                 tau_s: float, inflow: np.ndarray) -> np.ndarray:
        """Scaled residual: momentum rows in bar, balance rows in m^3/s."""
        p_free, q_pipe, q_valve, q_res = self.split(x)
        p = self.pressures(p_free)
        p_l = p[self.pipe_from]
        p_r = p[self.pipe_to]
        p_m = 0.5 * (p_l + p_r)
        mass_q = self.rho * q_pipe
        lam = self.friction(mass_q)
        beta = self.beta_coeff * lam * np.abs(q_pipe) * q_pipe * self.papay(p_m) / p_m
        kinetic = self.kin_coeff * mass_q * mass_q * (self.papay(p_r) / p_r
                                                      - self.papay(p_l) / p_l)
        gravity = self.grav_coeff * p_m / self.papay(p_m)
        drop = beta + kinetic + gravity
        if q_prev is not None:
            drop = drop + self.alpha_coeff / tau_s * (q_pipe - q_prev)
        parts = [(p_l - p_r - drop) / BAR]
        if self.n_valve:
            valve_rows = np.where(self.valve_open,
                                  (p[self.valve_from] - p[self.valve_to]) / BAR,
                                  q_valve)
            parts.append(valve_rows)
        if self.n_res:
            parts.append((p[self.res_from] - p[self.res_to]
                          - RESISTOR_DROP_COEFF * np.abs(q_res) * q_res) / BAR)
        if self.n_free:
            flows = np.concatenate([q_pipe, q_valve, q_res])
            parts.append(inflow + self.incidence @ flows)
        return np.concatenate(parts)


def _fd_jacobian(system: _System, x: np.ndarray, r0: np.ndarray,
                 q_prev: np.ndarray | None, tau_s: float,
                 inflow: np.ndarray) -> np.ndarray:
    n = x.size
    jac = np.empty((r0.size, n))
    scale = np.ones(n)
    scale[:system.n_free] = BAR
    for i in range(n):
        h = 1e-7 * max(abs(x[i]), scale[i])
        xp = x.copy()
        xp[i] += h
        jac[:, i] = (system.residual(xp, q_prev, tau_s, inflow) - r0) / h
    return jac


def _solve_frame(system: _System, x: np.ndarray, q_prev: np.ndarray | None,
                 tau_s: float, inflow: np.ndarray, frame_index: int,
                 jac_cache: list) -> np.ndarray:
    r = system.residual(x, q_prev, tau_s, inflow)
    norm = float(np.max(np.abs(r)))
    if norm < NEWTON_TOL:
        return x

    def refresh() -> np.ndarray:
        jac = _fd_jacobian(system, x, r, q_prev, tau_s, inflow)
        jac_cache[:] = [jac]
        return jac

    # small residuals track well on the cached Jacobian of earlier frames
    if jac_cache and norm <= JACOBIAN_REFRESH_NORM:
        jac = jac_cache[0]
        fresh = False
    else:
        jac = refresh()
        fresh = True

    for _iteration in range(NEWTON_MAX_ITER):
        try:
            dx = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            raise SimulationError(
                frame_index,
                "singular system; every hydraulic island needs a pressure "
                "reference and an open path to it") from None
        accepted = False
        step = 1.0
        for _halving in range(12):
            x_new = x + step * dx
            r_new = system.residual(x_new, q_prev, tau_s, inflow)
            norm_new = float(np.max(np.abs(r_new)))
            if norm_new < norm or norm_new < NEWTON_TOL:
                x, r, norm = x_new, r_new, norm_new
                accepted = True
                break
            step *= 0.5
        if not accepted:
            if fresh:
                raise SimulationError(frame_index,
                                      f"line search stalled at |r| = {norm:.3e}")
            jac = refresh()
            fresh = True
            continue
        if norm < NEWTON_TOL:
            return x
        # the Jacobian now refers to a previous iterate; keep it while the
        # line search accepts full or damped steps
        fresh = False
    raise SimulationError(frame_index,
                          f"no convergence in {NEWTON_MAX_ITER} iterations, |r| = {norm:.3e}")


def simulate(scenario: Scenario) -> list[StateFrame]:
    """Generate the state history of a scenario.

    Returns one frame per time step with pressures at hydraulic nodes,
    flows on passive arcs, valve states and per-pipe normal density.
    Identical scenarios (including seed) produce identical histories.
    """
    system = _System(scenario)
    rng = np.random.default_rng(scenario.seed)
    mean_ref = float(np.mean(list(scenario.reference_pressure_pa.values())))

    x = np.empty(system.n_unknowns)
    x[:system.n_free] = mean_ref
    x[system.n_free:] = 0.1

    frames: list[StateFrame] = []
    q_prev: np.ndarray | None = None
    jac_cache: list = []
    for k in range(scenario.frames):
        inflow = np.zeros(system.n_free)
        for node_id in system.flow_nodes:
            value = scenario.inflow_at(node_id, k)
            if scenario.noise > 0.0:
                value *= 1.0 + scenario.noise * rng.standard_normal()
            inflow[system.free_pos[node_id]] = value

        x = _solve_frame(system, x, q_prev, scenario.tau_s, inflow, k, jac_cache)
        p_free, q_pipe, q_valve, q_res = system.split(x)
        if q_prev is None:
            # the inertia rows activate after the steady frame and change
            # the Jacobian structure, so the cached one must go
            jac_cache.clear()
        q_prev = q_pipe.copy()

        p = system.pressures(p_free)
        pressures = {node_id: float(p[system.node_index[node_id]])
                     for node_id in system.hydraulic_nodes}
        flows = {pid: float(q_pipe[i]) for i, pid in enumerate(system.pipe_ids)}
        flows.update({vid: float(q_valve[i]) for i, vid in enumerate(system.valve_ids)})
        flows.update({rid: float(q_res[i]) for i, rid in enumerate(system.resistor_ids)})
        frames.append(StateFrame(
            timestamp=scenario.start + timedelta(seconds=k * scenario.tau_s),
            node_pressure_pa=pressures,
            arc_flow_m3s=flows,
            valve_open={vid: vid not in scenario.closed_valves
                        for vid in system.valve_ids},
            pipe_rho_n_kgm3={pid: scenario.rho_n_kgm3 for pid in system.pipe_ids},
        ))
    return frames


def inject_step(scenario: Scenario, pipe_id: str, dflow_m3s: float,
                at_frame: int) -> Scenario:
    """Adjust the boundary schedule so one pipe's flow steps by about dflow.

    Finds a flow boundary node whose supply path to a pressure reference
    crosses the pipe and shifts its setpoints from at_frame onward.  On
    tree-shaped islands the realized step is exact up to solver
    tolerance; on meshed islands part of the step spreads elsewhere.
    """
    if dflow_m3s == 0.0:
        return scenario
    network = scenario.network
    element = network.elements.get(pipe_id)
    if element is None or element.kind is not ElementKind.PIPE:
        raise ValueError(f"{pipe_id!r} is not a pipe")
    if not 0 <= at_frame < scenario.frames:
        raise ValueError(f"frame {at_frame} outside 0..{scenario.frames - 1}")

    adjacency: dict[str, list[tuple[str, str, str]]] = {}
    for eid in sorted(network.elements):
        el = network.elements[eid]
        if el.kind in (ElementKind.REGULATOR, ElementKind.COMPRESSOR):
            continue
        if el.kind is ElementKind.VALVE and eid in scenario.closed_valves:
            continue
        adjacency.setdefault(el.from_node, []).append((el.to_node, eid, "fwd"))
        adjacency.setdefault(el.to_node, []).append((el.from_node, eid, "rev"))

    references = set(scenario.reference_pressure_pa)
    for boundary in sorted(scenario.base_inflow_m3s):
        # breadth-first path from the boundary node to any reference
        parents: dict[str, tuple[str, str, str]] = {}
        queue = [boundary]
        seen = {boundary}
        hit = None
        while queue:
            current = queue.pop(0)
            if current in references:
                hit = current
                break
            for neighbor, eid, direction in adjacency.get(current, ()):
                if neighbor not in seen:
                    seen.add(neighbor)
                    parents[neighbor] = (current, eid, direction)
                    queue.append(neighbor)
        if hit is None:
            continue
        node = hit
        on_path = None
        while node != boundary:
            came_from, eid, direction = parents[node]
            if eid == pipe_id:
                # walking boundary -> reference traverses the pipe in its
                # own direction exactly when direction is fwd
                on_path = (direction == "fwd")
                break
            node = came_from
        if on_path is None:
            continue
        sign = 1.0 if on_path else -1.0
        delta = sign * dflow_m3s
        base_value = scenario.inflow_at(boundary, at_frame)
        new_events = [event if event.node_id != boundary or event.frame_index <= at_frame
                      else replace(event, inflow_m3s=event.inflow_m3s + delta)
                      for event in scenario.events]
        new_events.append(BoundaryEvent(boundary, at_frame, base_value + delta))
        return replace(scenario, events=tuple(new_events))
    raise ValueError(f"no boundary node supplies pipe {pipe_id!r} through a reference path")
