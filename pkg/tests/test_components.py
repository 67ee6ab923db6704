import math
import random

import pytest

from gasinertia.components import (
    COMPONENTS_COLUMNS,
    Component,
    DirectedArc,
    build_pair_components,
    classify_component,
    group_records,
    longest_path_value,
    orient_arcs,
    read_components,
    write_components,
)
from gasinertia.ingest import ParseError
from gasinertia.model import (
    BAR,
    Diagnostics,
    Element,
    ElementKind,
    Network,
    Node,
    PipeGeometry,
    StateFrame,
)
from gasinertia.physics import TermRecord, term_ratio
from gasinertia.thresholds import RelevanceClass, ThresholdConfig

from conftest import make_component, make_pair, make_stream, stamp
from oracles import enumerate_longest_path

GEOM = PipeGeometry(10_000.0, 0.5)


def build_network(extra: list[Element] = ()) -> Network:
    nodes = [Node(f"n{i}") for i in range(8)]
    elements = [
        Element("pa", ElementKind.PIPE, "n0", "n1", GEOM),
        Element("pb", ElementKind.PIPE, "n1", "n2", GEOM),
        Element("pc", ElementKind.PIPE, "n3", "n4", GEOM),
        Element("pd", ElementKind.PIPE, "n5", "n6", GEOM),
        *extra,
    ]
    return Network.build(nodes, elements)


def record(pipe_id: str, alpha_pa: float, dflow_m3s: float = 1.0) -> TermRecord:
    return TermRecord(
        pipe_id=pipe_id,
        pair=make_pair(0),
        flow_t0_m3s=0.0,
        flow_t1_m3s=dflow_m3s,
        alpha_pa=alpha_pa,
        beta_pa=alpha_pa / 10.0,
        alpha_per_length_pam=alpha_pa / GEOM.length_m,
        ratio=term_ratio(alpha_pa, alpha_pa / 10.0),
    )


def frame(index: int, pressures=None, valves=None) -> StateFrame:
    return StateFrame(stamp(index), dict(pressures or {}), {}, dict(valves or {}), {})


class TestGrouping:
    def test_shared_node_merges(self):
        net = build_network()
        groups = group_records(net, [record("pa", 1.0), record("pb", 2.0)], frame(1))
        assert [[r.pipe_id for r in g] for g in groups] == [["pa", "pb"]]

    def test_disjoint_pipes_stay_apart(self):
        net = build_network()
        groups = group_records(net, [record("pc", 1.0), record("pa", 2.0)], frame(1))
        assert [[r.pipe_id for r in g] for g in groups] == [["pa"], ["pc"]]

    def test_open_valve_bridges(self):
        net = build_network([Element("v", ElementKind.VALVE, "n1", "n3")])
        recs = [record("pa", 1.0), record("pc", 2.0)]
        groups = group_records(net, recs, frame(1, valves={"v": True}))
        assert len(groups) == 1

    def test_closed_valve_does_not_bridge(self):
        net = build_network([Element("v", ElementKind.VALVE, "n1", "n3")])
        recs = [record("pa", 1.0), record("pc", 2.0)]
        groups = group_records(net, recs, frame(1, valves={"v": False}))
        assert len(groups) == 2

    def test_missing_valve_state_counts_as_closed(self):
        net = build_network([Element("v", ElementKind.VALVE, "n1", "n3")])
        diag = Diagnostics()
        groups = group_records(net, [record("pa", 1.0), record("pc", 2.0)],
                               frame(1), diag)
        assert len(groups) == 2
        assert diag.missing_valve_state == 1

    def test_resistor_always_bridges(self):
        net = build_network([Element("r", ElementKind.RESISTOR, "n1", "n3")])
        groups = group_records(net, [record("pa", 1.0), record("pc", 2.0)], frame(1))
        assert len(groups) == 1

    def test_active_elements_never_bridge(self):
        for kind in (ElementKind.REGULATOR, ElementKind.COMPRESSOR):
            net = build_network([Element("x", kind, "n1", "n3")])
            groups = group_records(net, [record("pa", 1.0), record("pc", 2.0)],
                                   frame(1, valves={"x": True}))
            assert len(groups) == 2

    def test_irrelevant_pipe_does_not_bridge(self):
        # pb carries no record, so pa and a pipe beyond it stay apart
        net = build_network([Element("pe", ElementKind.PIPE, "n2", "n3", GEOM)])
        groups = group_records(net, [record("pa", 1.0), record("pc", 2.0)], frame(1))
        assert len(groups) == 2

    def test_group_order_is_by_smallest_pipe_id(self):
        net = build_network()
        groups = group_records(net, [record("pd", 1.0), record("pa", 2.0),
                                     record("pc", 3.0)], frame(1))
        assert [g[0].pipe_id for g in groups] == ["pa", "pc", "pd"]


class TestOrientation:
    def test_pipe_follows_alpha_sign(self):
        net = build_network()
        arcs = orient_arcs(net, [record("pa", 5.0)], frame(0), frame(1))
        assert arcs == [DirectedArc("n0", "n1", 5.0, "pa")]
        arcs = orient_arcs(net, [record("pa", -5.0)], frame(0), frame(1))
        assert arcs == [DirectedArc("n1", "n0", 5.0, "pa")]

    def test_open_valve_both_directions(self):
        net = build_network([Element("v", ElementKind.VALVE, "n1", "n2")])
        arcs = orient_arcs(net, [record("pa", 1.0), record("pb", 1.0)],
                           frame(0), frame(1, valves={"v": True}))
        valve_arcs = [a for a in arcs if a.element_id == "v"]
        assert {(a.from_node, a.to_node) for a in valve_arcs} == {("n1", "n2"), ("n2", "n1")}
        assert all(a.weight_pa == 0.0 for a in valve_arcs)

    def test_resistor_oriented_by_drop_change(self):
        net = build_network([Element("r", ElementKind.RESISTOR, "n1", "n2")])
        recs = [record("pa", 1.0), record("pb", 1.0)]
        rising = frame(1, pressures={"n1": 60.0 * BAR, "n2": 50.0 * BAR})
        flat = frame(0, pressures={"n1": 55.0 * BAR, "n2": 50.0 * BAR})
        arcs = [a for a in orient_arcs(net, recs, flat, rising) if a.element_id == "r"]
        assert [(a.from_node, a.to_node) for a in arcs] == [("n1", "n2")]
        arcs = [a for a in orient_arcs(net, recs, rising, flat) if a.element_id == "r"]
        assert [(a.from_node, a.to_node) for a in arcs] == [("n2", "n1")]

    def test_resistor_unchanged_drop_gets_both(self):
        net = build_network([Element("r", ElementKind.RESISTOR, "n1", "n2")])
        recs = [record("pa", 1.0), record("pb", 1.0)]
        state = {"n1": 60.0 * BAR, "n2": 50.0 * BAR}
        arcs = [a for a in orient_arcs(net, recs, frame(0, state), frame(1, state))
                if a.element_id == "r"]
        assert len(arcs) == 2

    def test_resistor_missing_pressure_gets_both_and_diag(self):
        net = build_network([Element("r", ElementKind.RESISTOR, "n1", "n2")])
        recs = [record("pa", 1.0), record("pb", 1.0)]
        diag = Diagnostics()
        arcs = [a for a in orient_arcs(net, recs, frame(0), frame(1), diag)
                if a.element_id == "r"]
        assert len(arcs) == 2
        assert diag.missing_resistor_pressure == 1

    def test_bridge_outside_group_ignored(self):
        net = build_network([Element("r", ElementKind.RESISTOR, "n6", "n7")])
        arcs = orient_arcs(net, [record("pa", 1.0)], frame(0), frame(1))
        assert [a.element_id for a in arcs] == ["pa"]


class TestLongestPath:
    def test_empty_raises(self):
        with pytest.raises(ValueError):
            longest_path_value([])

    def test_single_arc(self):
        value, corr = longest_path_value([DirectedArc("a", "b", 7.0, "p")])
        assert value == 7.0
        assert corr == 0.0

    def test_chain_sums(self):
        arcs = [DirectedArc("a", "b", 3.0, "x"), DirectedArc("b", "c", 4.0, "y")]
        assert longest_path_value(arcs)[0] == 7.0

    def test_head_to_head_takes_maximum(self):
        arcs = [DirectedArc("a", "b", 3.0, "x"), DirectedArc("c", "b", 4.0, "y")]
        assert longest_path_value(arcs)[0] == 4.0

    def test_parallel_arcs_take_maximum(self):
        arcs = [DirectedArc("a", "b", 3.0, "x"), DirectedArc("a", "b", 4.0, "y")]
        assert longest_path_value(arcs)[0] == 4.0

    def test_zero_weight_bridge_joins(self):
        arcs = [DirectedArc("a", "b", 3.0, "x"),
                DirectedArc("b", "c", 0.0, "v"),
                DirectedArc("c", "d", 4.0, "y")]
        assert longest_path_value(arcs)[0] == 7.0

    def test_two_cycle_corrected(self):
        arcs = [DirectedArc("a", "b", 3.0, "x"), DirectedArc("b", "a", 4.0, "y")]
        value, corr = longest_path_value(arcs)
        assert corr == 7.0
        assert value >= enumerate_longest_path([("a", "b", 3.0), ("b", "a", 4.0)])

    def test_matches_enumeration_on_random_dags(self):
        rng = random.Random(20260814)
        for _ in range(200):
            n = rng.randint(2, 7)
            arcs = []
            for _ in range(rng.randint(1, 10)):
                u, v = sorted(rng.sample(range(n), 2))
                arcs.append(DirectedArc(f"n{u}", f"n{v}", rng.uniform(0.0, 10.0),
                                        f"e{len(arcs)}"))
            expected = enumerate_longest_path(
                [(a.from_node, a.to_node, a.weight_pa) for a in arcs])
            value, corr = longest_path_value(arcs)
            assert corr == 0.0
            assert value == pytest.approx(expected, rel=1e-12, abs=1e-12)

    def test_never_underestimates_with_cycles(self):
        rng = random.Random(99)
        for _ in range(200):
            n = rng.randint(2, 6)
            arcs = []
            for _ in range(rng.randint(2, 9)):
                u, v = rng.sample(range(n), 2)
                arcs.append(DirectedArc(f"n{u}", f"n{v}", rng.uniform(0.0, 10.0),
                                        f"e{len(arcs)}"))
            expected = enumerate_longest_path(
                [(a.from_node, a.to_node, a.weight_pa) for a in arcs])
            value, _ = longest_path_value(arcs)
            assert value >= expected - 1e-9


class TestArcValidation:
    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError):
            DirectedArc("a", "b", -1.0, "p")


class TestBuildComponents:
    def test_fields(self):
        net = build_network()
        cfg = ThresholdConfig()
        recs = [record("pa", 0.2 * BAR, dflow_m3s=2.0),
                record("pb", 0.4 * BAR, dflow_m3s=1.0)]
        comps = build_pair_components(net, recs, frame(0), frame(1), cfg)
        assert len(comps) == 1
        comp = comps[0]
        assert comp.pipe_ids == ("pa", "pb")
        assert comp.longest_path_pa == pytest.approx(0.6 * BAR)
        assert comp.relevance is RelevanceClass.HIGH
        assert comp.max_abs_dflow_m3s == 2.0
        assert comp.cycle_correction_pa == 0.0

    def test_opposed_arcs_do_not_add(self):
        net = build_network()
        cfg = ThresholdConfig()
        recs = [record("pa", 0.2 * BAR), record("pb", -0.3 * BAR)]
        comps = build_pair_components(net, recs, frame(0), frame(1), cfg)
        # both point at n1's side: pa n0->n1, pb n2->n1
        assert comps[0].longest_path_pa == pytest.approx(0.3 * BAR)
        assert comps[0].relevance is RelevanceClass.SMALL


def test_classify_component_uses_absolute_grading():
    cfg = ThresholdConfig()
    assert classify_component(0.05 * BAR, cfg) is RelevanceClass.NONE
    assert classify_component(0.1 * BAR, cfg) is RelevanceClass.SMALL
    assert classify_component(0.7 * BAR, cfg) is RelevanceClass.HIGH


class TestSerialization:
    def sample_stream(self):
        return make_stream([
            (0, [make_component(0, ("pa", "pb"), value_bar=0.61,
                                relevance=RelevanceClass.HIGH, dflow_knm3h=36.0),
                 make_component(0, ("pc",), value_bar=0.11,
                                relevance=RelevanceClass.SMALL, dflow_knm3h=4.0)]),
            (2, [make_component(2, ("pa",), value_bar=0.02,
                                relevance=RelevanceClass.NONE, dflow_knm3h=2.5)]),
        ])

    def test_round_trip(self, tmp_path):
        stream = self.sample_stream()
        comp_path = tmp_path / "components.csv"
        members_path = tmp_path / "members.csv"
        write_components(stream, str(comp_path), str(members_path))
        back = read_components(str(comp_path), str(members_path))
        assert len(back) == len(stream)
        for (pair_a, comps_a), (pair_b, comps_b) in zip(stream, back):
            assert pair_a == pair_b
            for ca, cb in zip(comps_a, comps_b):
                assert ca.pipe_ids == cb.pipe_ids
                assert ca.longest_path_pa == cb.longest_path_pa
                assert ca.relevance is cb.relevance
                assert ca.max_abs_dflow_m3s == cb.max_abs_dflow_m3s

    def test_read_without_members_keeps_counts_only(self, tmp_path):
        stream = self.sample_stream()
        comp_path = tmp_path / "components.csv"
        write_components(stream, str(comp_path), str(tmp_path / "members.csv"))
        back = read_components(str(comp_path))
        assert back[0][1][0].pipe_ids == ()

    def test_header_checked(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("nope\n")
        with pytest.raises(ParseError):
            read_components(str(bad))

    def test_member_count_mismatch_detected(self, tmp_path):
        stream = self.sample_stream()
        comp_path = tmp_path / "components.csv"
        members_path = tmp_path / "members.csv"
        write_components(stream, str(comp_path), str(members_path))
        lines = members_path.read_text().splitlines()
        members_path.write_text("\n".join(lines[:-1]) + "\n")
        with pytest.raises(ParseError):
            read_components(str(comp_path), str(members_path))

    def test_columns_pinned(self):
        assert COMPONENTS_COLUMNS == ["t0", "t1", "component_id", "n_pipes",
                                      "longest_path_bar", "cycle_correction_bar",
                                      "class", "max_abs_flow_change"]
