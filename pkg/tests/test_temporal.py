import math

import pytest

from gasinertia.model import Diagnostics, SECONDS_PER_DAY
from gasinertia.temporal import (
    component_chains,
    chain_relevance,
    datapoint_share,
    format_share_percent,
    humanize_interval,
    occurrence_rate,
    pipe_run_lengths,
    realism_filter,
    round_sig,
)
from gasinertia.thresholds import RelevanceClass, ThresholdConfig

from conftest import make_component, make_stream
from oracles import brute_runs

HIGH = RelevanceClass.HIGH
SMALL = RelevanceClass.SMALL
NONE = RelevanceClass.NONE


def c(k, pipes, relevance=HIGH, dflow=10.0):
    return make_component(k, pipes, relevance=relevance, dflow_knm3h=dflow)


class TestRunLengths:
    def test_single_run(self):
        stream = make_stream([(k, [c(k, ("p1",))]) for k in range(3)])
        result = pipe_run_lengths(stream)
        assert result.histogram == {3: 1}
        assert result.total_points == 3
        assert result.share_by_length == {3: 1.0}

    def test_absence_breaks_run(self):
        stream = make_stream([
            (0, [c(0, ("p1",))]),
            (1, []),
            (2, [c(2, ("p1",))]),
        ])
        result = pipe_run_lengths(stream)
        assert result.histogram == {1: 2}

    def test_time_gap_breaks_run(self):
        stream = make_stream([(0, [c(0, ("p1",))]), (2, [c(2, ("p1",))])])
        diag = Diagnostics()
        result = pipe_run_lengths(stream, diag=diag)
        assert result.histogram == {1: 2}
        assert diag.time_gaps == 1

    def test_min_class_filters(self):
        stream = make_stream([
            (0, [c(0, ("p1",), relevance=SMALL)]),
            (1, [c(1, ("p1",), relevance=HIGH)]),
        ])
        assert pipe_run_lengths(stream, min_class=HIGH).histogram == {1: 1}
        assert pipe_run_lengths(stream, min_class=SMALL).histogram == {2: 1}

    def test_component_hops_still_count(self):
        # the pipe stays graded even though its component changes shape
        stream = make_stream([
            (0, [c(0, ("p1", "p2"))]),
            (1, [c(1, ("p1",)), c(1, ("p2",))]),
        ])
        result = pipe_run_lengths(stream)
        assert result.histogram == {2: 2}
        assert result.total_points == 4

    def test_shares(self):
        stream = make_stream([
            (0, [c(0, ("p1", "p2"))]),
            (1, [c(1, ("p1",))]),
        ])
        result = pipe_run_lengths(stream)
        assert result.histogram == {1: 1, 2: 1}
        assert result.share_by_length[1] == pytest.approx(1.0 / 3.0)
        assert result.share_by_length[2] == pytest.approx(2.0 / 3.0)

    def test_out_of_order_rejected(self):
        stream = make_stream([(2, []), (0, [])])
        with pytest.raises(ValueError):
            pipe_run_lengths(stream)

    def test_matches_brute_scan(self):
        # membership pattern with holes and a stream gap after index 3
        entries = []
        membership = {
            "p1": [0, 1, 2, 3, 4, 6],
            "p2": [1, 3, 4, 5],
            "p3": [6],
        }
        indices = [0, 1, 2, 3, 4, 5, 6]
        for k in indices:
            comps = [c(k, (pid,)) for pid, ks in sorted(membership.items()) if k in ks]
            entries.append((k if k <= 3 else k + 1, comps))
        stream = make_stream(entries)
        consecutive = [True, True, True, False, True, True]
        # remap membership to positional indices used by the oracle
        result = pipe_run_lengths(stream)
        assert result.histogram == brute_runs(membership, consecutive)


class TestChains:
    def test_simple_chain(self):
        stream = make_stream([(k, [c(k, ("p1", "p2"))]) for k in range(3)])
        result = component_chains(stream)
        assert len(result.chains) == 1
        assert result.chains[0].members == ((0, 0), (1, 0), (2, 0))
        assert result.participating == 3
        assert result.upper_bound == 1

    def test_no_shared_pipe_no_chain(self):
        stream = make_stream([(0, [c(0, ("p1",))]), (1, [c(1, ("p2",))])])
        result = component_chains(stream)
        assert result.chains == []
        assert result.participating == 0

    def test_gap_blocks_chaining(self):
        stream = make_stream([(0, [c(0, ("p1",))]), (2, [c(2, ("p1",))])])
        result = component_chains(stream)
        assert result.chains == []
        assert result.participating == 0

    def test_min_length_one_keeps_singletons(self):
        stream = make_stream([(0, [c(0, ("p1",))]), (1, [c(1, ("p2",))])])
        result = component_chains(stream, min_length=1)
        assert [ch.members for ch in result.chains] == [((0, 0),), ((1, 0),)]

    def test_min_class(self):
        stream = make_stream([
            (0, [c(0, ("p1",), relevance=SMALL)]),
            (1, [c(1, ("p1",), relevance=SMALL)]),
        ])
        assert component_chains(stream, min_class=HIGH).chains == []
        assert len(component_chains(stream, min_class=SMALL).chains) == 1

    def test_each_component_used_once(self):
        # two left components share a pipe with the single right one; the
        # earliest-listed tail wins (the pipeline lists components by
        # first pipe id), the other stays unchained
        stream = make_stream([
            (0, [c(0, ("p2", "p9")), c(0, ("p1", "p8"))]),
            (1, [c(1, ("p8", "p9"))]),
        ])
        result = component_chains(stream)
        assert len(result.chains) == 1
        assert result.chains[0].members == ((0, 0), (1, 0))
        assert result.participating == 3
        assert result.upper_bound == 1

    def test_split_continues_one_branch(self):
        stream = make_stream([
            (0, [c(0, ("p1", "p2"))]),
            (1, [c(1, ("p1",)), c(1, ("p2",))]),
        ])
        result = component_chains(stream)
        assert len(result.chains) == 1
        assert result.chains[0].members == ((0, 0), (1, 0))

    def test_bound_holds_on_dense_overlap(self):
        stream = make_stream([
            (0, [c(0, ("p1",)), c(0, ("p2",))]),
            (1, [c(1, ("p1", "p2"))]),
            (2, [c(2, ("p1",)), c(2, ("p2",))]),
        ])
        result = component_chains(stream)
        assert len(result.chains) <= result.upper_bound
        assert result.participating == 5
        assert result.upper_bound == 2

    def test_chain_relevance_is_max(self):
        stream = make_stream([
            (0, [c(0, ("p1",), relevance=SMALL)]),
            (1, [c(1, ("p1",), relevance=HIGH)]),
        ])
        result = component_chains(stream, min_class=SMALL)
        assert chain_relevance(stream, result.chains[0]) is HIGH


class TestRealismFilter:
    def test_drops_implausible(self):
        cfg = ThresholdConfig()
        stream = make_stream([
            (0, [c(0, ("p1",), dflow=100.0), c(0, ("p2",), dflow=2500.0)]),
        ])
        filtered, dropped = realism_filter(stream, cfg)
        assert dropped == 1
        assert [comp.pipe_ids for comp in filtered[0][1]] == [("p1",)]

    def test_boundary_inclusive(self):
        cfg = ThresholdConfig()
        stream = make_stream([(0, [c(0, ("p1",), dflow=2000.0)])])
        filtered, dropped = realism_filter(stream, cfg)
        assert dropped == 0
        assert len(filtered[0][1]) == 1

    def test_idempotent(self):
        cfg = ThresholdConfig()
        stream = make_stream([
            (0, [c(0, ("p1",), dflow=100.0), c(0, ("p2",), dflow=2500.0)]),
        ])
        once, _ = realism_filter(stream, cfg)
        twice, dropped = realism_filter(once, cfg)
        assert dropped == 0
        assert twice == once


class TestOccurrenceRate:
    def test_zero_events(self):
        rate = occurrence_rate(0, 1250.0 * SECONDS_PER_DAY)
        assert math.isinf(rate.seconds)
        assert rate.text == "never"

    def test_mean_spacing(self):
        rate = occurrence_rate(125, 1250.0 * SECONDS_PER_DAY)
        assert rate.seconds == pytest.approx(10.0 * SECONDS_PER_DAY)
        assert rate.text == "10 days"

    def test_validation(self):
        with pytest.raises(ValueError):
            occurrence_rate(-1, 100.0)
        with pytest.raises(ValueError):
            occurrence_rate(1, 0.0)


class TestHumanize:
    def test_unit_selection(self):
        assert humanize_interval(45.0) == "45 seconds"
        assert humanize_interval(62.0) == "62 seconds"
        # 63 s sits right at the 1.05x pickup point for minutes
        assert humanize_interval(63.0) == "1.1 minutes"
        assert humanize_interval(22.0 * 60.0) == "22 minutes"
        assert humanize_interval(4.0 * 3600.0) == "4.0 hours"
        assert humanize_interval(25.0 * 3600.0) == "25 hours"
        assert humanize_interval(1.344 * SECONDS_PER_DAY) == "1.3 days"
        assert humanize_interval(4.386 * SECONDS_PER_DAY) == "4.4 days"

    def test_two_significant_digits(self):
        assert humanize_interval(22.78 * 60.0) == "23 minutes"
        assert humanize_interval(1.579 * 3600.0) == "1.6 hours"
        assert humanize_interval(2.155 * SECONDS_PER_DAY) == "2.2 days"

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            humanize_interval(0.0)

    def test_round_sig(self):
        assert round_sig(22.78, 2) == 23.0
        assert round_sig(0.0, 2) == 0.0
        assert round_sig(math.inf, 2) == math.inf
        assert round_sig(0.0361111, 2) == 0.036


class TestShares:
    def test_fraction(self):
        assert datapoint_share(1, 4) == 0.25
        assert datapoint_share(0, 0) == 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            datapoint_share(5, 4)
        with pytest.raises(ValueError):
            datapoint_share(-1, 4)

    def test_percent_formatting(self):
        assert format_share_percent(datapoint_share(1_300_000, 3_600_000_000)) == "0.036%"
        assert format_share_percent(datapoint_share(51_000, 3_600_000_000)) == "0.0014%"
        assert format_share_percent(0.92) == "92%"
