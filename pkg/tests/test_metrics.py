"""Pipeline-duration analytics and incident statistics."""

from __future__ import annotations

from datetime import timedelta

import pytest
from hypothesis import given, settings, strategies as st

from railshop.clock import from_iso
from railshop.errors import InvalidWindow, StageMismatch, ZeroBaseline
from railshop.metrics import (
    Stage,
    StageTiming,
    compare_pipelines,
    incident_stats,
    stage_durations,
)
from railshop.permits import PermitEvent
from railshop.types import IncidentCategory, IncidentState, PermitType, Role, Severity

from conftest import T0
from driver import TraceDriver
from test_permits import draft, walk


def timings(**minutes):
    return [StageTiming(stage=Stage[name], duration_minutes=m)
            for name, m in minutes.items()]


ALL_STAGES = {s.name: 100.0 for s in Stage}


class TestStageDurations:
    def test_empty_log_all_zero(self, rig):
        durations = stage_durations([], T0, T0 + timedelta(days=1))
        assert durations == {stage: 0.0 for stage in Stage}

    def test_single_permit_approval_duration(self, rig):
        p = draft(rig)
        p = walk(rig, p, (PermitEvent.SUBMIT, rig.requester_session))
        rig.clock.advance(minutes=30)
        walk(rig, p, (PermitEvent.APPROVE, rig.sessions[Role.SAFETY_OFFICER]))
        durations = stage_durations(rig.shop.store.entries, T0, rig.clock.now())
        assert durations[Stage.PERMIT_APPROVAL] == pytest.approx(30.0)

    def test_two_permits_sum(self, rig):
        # brute-force pairing says 30 + 50 = 80
        p1 = draft(rig)
        p1 = walk(rig, p1, (PermitEvent.SUBMIT, rig.requester_session))
        rig.clock.advance(minutes=30)
        walk(rig, p1, (PermitEvent.APPROVE, rig.sessions[Role.SAFETY_OFFICER]))
        p2 = draft(rig, zone="ZA")
        p2 = walk(rig, p2, (PermitEvent.SUBMIT, rig.requester_session))
        rig.clock.advance(minutes=50)
        walk(rig, p2, (PermitEvent.APPROVE, rig.sessions[Role.SAFETY_OFFICER]))
        durations = stage_durations(rig.shop.store.entries, T0, rig.clock.now())
        assert durations[Stage.PERMIT_APPROVAL] == pytest.approx(80.0)

    def test_incomplete_lifecycles_excluded(self, rig):
        p = draft(rig)
        walk(rig, p, (PermitEvent.SUBMIT, rig.requester_session))  # never approved
        durations = stage_durations(rig.shop.store.entries, T0, rig.clock.now())
        assert durations[Stage.PERMIT_APPROVAL] == 0.0

    def test_window_excludes_out_of_range_lifecycles(self, rig):
        p = draft(rig)
        p = walk(rig, p, (PermitEvent.SUBMIT, rig.requester_session))
        rig.clock.advance(minutes=30)
        walk(rig, p, (PermitEvent.APPROVE, rig.sessions[Role.SAFETY_OFFICER]))
        cutoff = rig.clock.now() - timedelta(minutes=10)
        durations = stage_durations(rig.shop.store.entries, T0, cutoff)
        assert durations[Stage.PERMIT_APPROVAL] == 0.0

    def test_invalid_window(self):
        with pytest.raises(InvalidWindow):
            stage_durations([], T0, T0 - timedelta(seconds=1))

    def test_machine_allocation_only_for_machine_bearing_permits(self, rig):
        p = draft(rig, machine_id=rig.low_machine.machine_id)
        p = walk(rig, p,
                 (PermitEvent.SUBMIT, rig.requester_session),
                 (PermitEvent.APPROVE, rig.sessions[Role.SAFETY_OFFICER]))
        rig.clock.advance(minutes=12)
        walk(rig, p, (PermitEvent.ACTIVATE, rig.sessions[Role.SUPERVISOR]))
        q = draft(rig, zone="ZA")
        q = walk(rig, q,
                 (PermitEvent.SUBMIT, rig.requester_session),
                 (PermitEvent.APPROVE, rig.sessions[Role.SAFETY_OFFICER]))
        rig.clock.advance(minutes=5)
        walk(rig, q, (PermitEvent.ACTIVATE, rig.sessions[Role.SUPERVISOR]))
        durations = stage_durations(rig.shop.store.entries, T0, rig.clock.now())
        assert durations[Stage.MACHINE_ALLOCATION] == pytest.approx(12.0)

    def test_incident_logging_stage(self, rig):
        incident, _ = rig.shop.incidents.report_incident(
            rig.sessions[Role.TECHNICIAN], "t", "d", Severity.MINOR,
            IncidentCategory.OTHER, "ZA")
        rig.clock.advance(minutes=7)
        rig.shop.incidents.advance(rig.sessions[Role.SAFETY_OFFICER],
                                   incident.incident_id,
                                   IncidentState.UNDER_INVESTIGATION,
                                   incident.version)
        durations = stage_durations(rig.shop.store.entries, T0, rig.clock.now())
        assert durations[Stage.INCIDENT_LOGGING] == pytest.approx(7.0)

    def test_matches_per_entity_pairing_oracle(self, rig):
        """Single-pass accumulation equals per-entity trace pairing."""
        driver = TraceDriver(rig, seed=37)
        driver.run(250)
        entries = rig.shop.store.entries
        got = stage_durations(entries, T0, rig.clock.now())

        def pair(kind, start_action, end_action, predicate=lambda e: True):
            total = 0.0
            ids = {e.entity_id for e in entries if e.entity_kind == kind}
            for eid in ids:
                trace = [e for e in entries if e.entity_kind == kind and e.entity_id == eid]
                starts = [e.at for e in trace if e.action == start_action and predicate(e)]
                ends = [e.at for e in trace if e.action == end_action and predicate(e)]
                if starts and ends and T0 <= starts[0] and ends[0] <= rig.clock.now():
                    total += (ends[0] - starts[0]).total_seconds() / 60.0
            return total

        assert got[Stage.PERMIT_APPROVAL] == pytest.approx(
            pair("permit", "permit.submit", "permit.approve"))
        assert got[Stage.TASK_EXECUTION_MONITORING] == pytest.approx(
            pair("permit", "permit.activate", "permit.close"))

        machine_bearing = {
            p.permit_id for p in rig.shop.store.kind("permit").values()
            if p.machine_id is not None}
        total_alloc = 0.0
        for pid in machine_bearing:
            trace = [e for e in entries if e.entity_kind == "permit" and e.entity_id == pid]
            approve = [e.at for e in trace if e.action == "permit.approve"]
            activate = [e.at for e in trace if e.action == "permit.activate"]
            if approve and activate and T0 <= approve[0] and activate[0] <= rig.clock.now():
                total_alloc += (activate[0] - approve[0]).total_seconds() / 60.0
        assert got[Stage.MACHINE_ALLOCATION] == pytest.approx(total_alloc)


class TestComparePipelines:
    def test_headline_35_percent(self):
        report = compare_pipelines(timings(PERMIT_APPROVAL=200.0),
                                   timings(PERMIT_APPROVAL=130.0))
        assert report.per_stage[Stage.PERMIT_APPROVAL].reduction_pct == \
            pytest.approx(35.0, abs=1e-9)

    def test_headline_40_percent(self):
        report = compare_pipelines(timings(INCIDENT_LOGGING=50.0),
                                   timings(INCIDENT_LOGGING=30.0))
        assert report.per_stage[Stage.INCIDENT_LOGGING].reduction_pct == \
            pytest.approx(40.0, abs=1e-9)

    def test_identity_gives_zero(self):
        manual = timings(**ALL_STAGES)
        report = compare_pipelines(manual, timings(**ALL_STAGES))
        for cmp in report.per_stage.values():
            assert cmp.reduction_pct == 0.0
        assert report.cumulative.reduction_pct == 0.0

    def test_stage_mismatch(self):
        with pytest.raises(StageMismatch):
            compare_pipelines(timings(PERMIT_APPROVAL=10.0),
                              timings(INCIDENT_LOGGING=10.0))

    def test_zero_baseline(self):
        with pytest.raises(ZeroBaseline):
            compare_pipelines(timings(PERMIT_APPROVAL=0.0),
                              timings(PERMIT_APPROVAL=0.0))

    def test_cumulative_fields_are_sums(self):
        manual = timings(PERMIT_APPROVAL=100.0, INCIDENT_LOGGING=60.0)
        digital = timings(PERMIT_APPROVAL=50.0, INCIDENT_LOGGING=30.0)
        report = compare_pipelines(manual, digital)
        assert report.cumulative.manual_minutes == 160.0
        assert report.cumulative.digital_minutes == 80.0

    @settings(max_examples=100, deadline=None)
    @given(st.dictionaries(
        st.sampled_from(list(Stage)),
        st.tuples(st.floats(0.1, 1e4), st.floats(0.0, 1e4)),
        min_size=1, max_size=5))
    def test_cumulative_is_duration_weighted_mean(self, table):
        manual = [StageTiming(s, m) for s, (m, _) in table.items()]
        digital = [StageTiming(s, d) for s, (_, d) in table.items()]
        report = compare_pipelines(manual, digital)
        total_manual = sum(m for m, _ in table.values())
        weighted = sum(
            report.per_stage[s].reduction_pct * m
            for s, (m, _) in table.items()) / total_manual
        assert report.cumulative.reduction_pct == pytest.approx(weighted, abs=1e-6)


class TestIncidentStats:
    class FakeIncident:
        def __init__(self, category):
            self.category = category

    def test_paper_ratios(self):
        incidents = (
            [self.FakeIncident(IncidentCategory.LACERATION)] * 287
            + [self.FakeIncident(IncidentCategory.ABRASION)] * 210
            + [self.FakeIncident(IncidentCategory.OTHER)] * 503
        )
        stats = incident_stats(incidents)
        assert stats[IncidentCategory.LACERATION] == pytest.approx(28.7, abs=1e-9)
        assert stats[IncidentCategory.ABRASION] == pytest.approx(21.0, abs=1e-9)
        assert stats[IncidentCategory.OTHER] == pytest.approx(50.3, abs=1e-9)

    def test_single_incident_is_100(self):
        stats = incident_stats([self.FakeIncident(IncidentCategory.BURN)])
        assert stats == {IncidentCategory.BURN: 100.0}

    def test_empty_is_empty(self):
        assert incident_stats([]) == {}

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.sampled_from(list(IncidentCategory)), min_size=1, max_size=400))
    def test_percentages_sum_to_100(self, categories):
        stats = incident_stats([self.FakeIncident(c) for c in categories])
        assert sum(stats.values()) == pytest.approx(100.0, abs=1e-9)
