"""Permit-to-work lifecycle engine.

State machine (events in caps):

    DRAFT --SUBMIT--> SUBMITTED --APPROVE--> APPROVED --ACTIVATE--> ACTIVE
    SUBMITTED --REJECT--> REJECTED
    ACTIVE --SUSPEND--> SUSPENDED --RESUME--> ACTIVE
    ACTIVE --CLOSE--> CLOSED
    DRAFT|SUBMITTED --CANCEL--> CANCELLED

CLOSED, REJECTED, EXPIRED and CANCELLED are terminal. Guards:

    G1  contractor eligible at this instant (when a contractor is named)
    G2  machine operational (when a machine is named)
    G3  no spatial/temporal conflict against APPROVED ∪ ACTIVE permits
    G4  now < valid_to
    G5  activation inside [valid_from - grace, valid_to]
    G6  every linked incident closed or in corrective action

APPROVE and RESUME check G1–G4 in that order (first failure reported),
ACTIVATE checks G5, CLOSE checks G6. The requester of a permit can never
be its approver (four-eyes rule), and expiry is swept before any guard
evaluation so guards never see stale non-expired permits.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from enum import Enum
from typing import TYPE_CHECKING, Optional

from .access import AccessControl, Action, Session, new_id
from .audit import SYSTEM_ACTOR
from .clock import Clock, from_iso, to_iso
from .errors import (
    FourEyesViolation,
    GuardViolation,
    IllegalTransition,
    InvalidWindow,
    Unauthorized,
    UnknownContractor,
    UnknownMachine,
    UnknownPermit,
    UnknownUser,
    UnknownZone,
    ValidationError,
    VersionConflict,
)
from .geometry import ConflictPolicy, PermitView, ZoneIndex, permit_conflicts
from .store import AuditDraft, Mutation, Store
from .types import (
    MachineStatus,
    PermitState,
    PermitType,
    Role,
    TERMINAL_PERMIT_STATES,
)

if TYPE_CHECKING:
    from .contracts import ContractorRegistry


class PermitEvent(str, Enum):
    SUBMIT = "SUBMIT"
    APPROVE = "APPROVE"
    REJECT = "REJECT"
    ACTIVATE = "ACTIVATE"
    SUSPEND = "SUSPEND"
    RESUME = "RESUME"
    CLOSE = "CLOSE"
    CANCEL = "CANCEL"


TRANSITIONS: dict[tuple[PermitState, PermitEvent], PermitState] = {
    (PermitState.DRAFT, PermitEvent.SUBMIT): PermitState.SUBMITTED,
    (PermitState.SUBMITTED, PermitEvent.APPROVE): PermitState.APPROVED,
    (PermitState.SUBMITTED, PermitEvent.REJECT): PermitState.REJECTED,
    (PermitState.APPROVED, PermitEvent.ACTIVATE): PermitState.ACTIVE,
    (PermitState.ACTIVE, PermitEvent.SUSPEND): PermitState.SUSPENDED,
    (PermitState.SUSPENDED, PermitEvent.RESUME): PermitState.ACTIVE,
    (PermitState.ACTIVE, PermitEvent.CLOSE): PermitState.CLOSED,
    (PermitState.DRAFT, PermitEvent.CANCEL): PermitState.CANCELLED,
    (PermitState.SUBMITTED, PermitEvent.CANCEL): PermitState.CANCELLED,
}

EVENT_ACTION: dict[PermitEvent, Action] = {
    PermitEvent.SUBMIT: Action.PERMIT_SUBMIT,
    PermitEvent.APPROVE: Action.PERMIT_APPROVE,
    PermitEvent.REJECT: Action.PERMIT_REJECT,
    PermitEvent.ACTIVATE: Action.PERMIT_ACTIVATE,
    PermitEvent.SUSPEND: Action.PERMIT_SUSPEND,
    PermitEvent.RESUME: Action.PERMIT_RESUME,
    PermitEvent.CLOSE: Action.PERMIT_CLOSE,
    PermitEvent.CANCEL: Action.PERMIT_CANCEL,
}

# incident states that no longer block permit closure
_G6_SETTLED = frozenset({"CORRECTIVE_ACTION", "CLOSED"})


@dataclass
class Permit:
    permit_id: str
    permit_type: PermitType
    requester_id: str
    zone_id: str
    description: str
    valid_from: datetime
    valid_to: datetime
    state: PermitState
    machine_id: Optional[str] = None
    contractor_id: Optional[str] = None
    state_history: list[dict] = field(default_factory=list)
    version: int = 1

    def to_dict(self) -> dict:
        return {
            "permit_id": self.permit_id,
            "permit_type": self.permit_type.value,
            "requester_id": self.requester_id,
            "zone_id": self.zone_id,
            "description": self.description,
            "valid_from": to_iso(self.valid_from),
            "valid_to": to_iso(self.valid_to),
            "state": self.state.value,
            "machine_id": self.machine_id,
            "contractor_id": self.contractor_id,
            "state_history": list(self.state_history),
            "version": self.version,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Permit":
        return cls(
            permit_id=data["permit_id"],
            permit_type=PermitType(data["permit_type"]),
            requester_id=data["requester_id"],
            zone_id=data["zone_id"],
            description=data["description"],
            valid_from=from_iso(data["valid_from"]),
            valid_to=from_iso(data["valid_to"]),
            state=PermitState(data["state"]),
            machine_id=data.get("machine_id"),
            contractor_id=data.get("contractor_id"),
            state_history=list(data.get("state_history", [])),
            version=data["version"],
        )

    def view(self) -> PermitView:
        return PermitView(
            permit_id=self.permit_id,
            permit_type=self.permit_type,
            zone_id=self.zone_id,
            valid_from=self.valid_from,
            valid_to=self.valid_to,
        )


class ZoneCatalog:
    """Current zone set + conflict policy, rebuilt on admin reload."""

    def __init__(self):
        self.index = ZoneIndex([])
        self.policy = ConflictPolicy.default()

    def rebuild(self, zones, policy: Optional[ConflictPolicy] = None) -> None:
        self.index = ZoneIndex(zones)
        if policy is not None:
            self.policy = policy


class PermitEngine:
    def __init__(self, store: Store, access: AccessControl, clock: Clock,
                 catalog: ZoneCatalog, activation_grace: timedelta = timedelta(0)):
        self.store = store
        self.access = access
        self.clock = clock
        self.catalog = catalog
        self.activation_grace = activation_grace
        self.contracts: Optional["ContractorRegistry"] = None  # wired by the engine
        # derived indexes, maintained through the store's mutation observer so
        # cascades committed by other services can't leave them stale
        self._conflict_set: set[str] = set()
        self._next_expiry: Optional[datetime] = None  # None = must rescan
        for permit in store.kind("permit").values():
            self._observe("permit", permit.permit_id, permit)
        store.observers.append(self._observe)

    def _observe(self, kind: str, entity_id: str, entity) -> None:
        if kind != "permit":
            return
        if entity.state in (PermitState.APPROVED, PermitState.ACTIVE):
            self._conflict_set.add(entity_id)
        else:
            self._conflict_set.discard(entity_id)
        if entity.state not in TERMINAL_PERMIT_STATES:
            if self._next_expiry is not None and entity.valid_to < self._next_expiry:
                self._next_expiry = entity.valid_to

    # -- queries -----------------------------------------------------------

    def permit(self, permit_id: str) -> Permit:
        permit = self.store.get("permit", permit_id)
        if permit is None:
            raise UnknownPermit(f"unknown permit {permit_id!r}")
        return permit

    def permits_by_user(self, user_id: str) -> list[Permit]:
        if self.store.get("user", user_id) is None:
            raise UnknownUser(f"unknown user {user_id!r}")
        return [p for p in self.store.kind("permit").values() if p.requester_id == user_id]

    def list_permits(self, state: Optional[PermitState] = None,
                     user: Optional[str] = None,
                     zone: Optional[str] = None) -> list[Permit]:
        result = []
        for p in self.store.kind("permit").values():
            if state is not None and p.state != state:
                continue
            if user is not None and p.requester_id != user:
                continue
            if zone is not None and p.zone_id != zone:
                continue
            result.append(p)
        return result

    def active_views(self, exclude: Optional[str] = None) -> list[PermitView]:
        """The conflict-relevant set: APPROVED and ACTIVE permits."""
        permits = self.store.kind("permit")
        return [permits[pid].view() for pid in self._conflict_set if pid != exclude]

    def probe_conflicts(self, zone_id: str, permit_type: PermitType,
                        valid_from: datetime, valid_to: datetime):
        """Dry-run conflict check used by the what-if endpoint."""
        if self.catalog.index.get(zone_id) is None:
            raise UnknownZone(f"unknown zone {zone_id!r}")
        if valid_from >= valid_to:
            raise InvalidWindow("valid_from must precede valid_to")
        candidate = PermitView(permit_id="__probe__", permit_type=permit_type,
                               zone_id=zone_id, valid_from=valid_from, valid_to=valid_to)
        return permit_conflicts(candidate, self.active_views(),
                                self.catalog.index, self.catalog.policy)

    # -- creation -----------------------------------------------------------

    def create_draft(self, session: Optional[Session], permit_type: PermitType,
                     zone_id: str, valid_from: datetime, valid_to: datetime,
                     description: str = "", machine_id: Optional[str] = None,
                     contractor_id: Optional[str] = None) -> Permit:
        with self.store.lock:
            actor = self.access.require(session, Action.PERMIT_CREATE)
            if self.store.get("zone", zone_id) is None:
                raise UnknownZone(f"unknown zone {zone_id!r}")
            if machine_id is not None and self.store.get("machine", machine_id) is None:
                raise UnknownMachine(f"unknown machine {machine_id!r}")
            if valid_from >= valid_to:
                raise InvalidWindow("valid_from must precede valid_to")
            if actor.role == Role.CONTRACTOR and contractor_id is None:
                raise ValidationError("contractor requesters must name their contractor")
            permit = Permit(
                permit_id=new_id("pmt"), permit_type=permit_type,
                requester_id=actor.user_id, zone_id=zone_id,
                description=description, valid_from=valid_from, valid_to=valid_to,
                state=PermitState.DRAFT, machine_id=machine_id,
                contractor_id=contractor_id,
            )
            draft = AuditDraft(
                actor=actor.user_id, action=Action.PERMIT_CREATE.value,
                entity_kind="permit", entity_id=permit.permit_id,
                args={"permit_type": permit_type.value, "zone_id": zone_id,
                      "machine_id": machine_id, "contractor_id": contractor_id,
                      "valid_from": to_iso(valid_from), "valid_to": to_iso(valid_to)},
                mutations=(Mutation("permit", permit.permit_id, permit),),
            )
            self.store.commit([draft], version_checks=[("permit", permit.permit_id, None)])
            return permit

    # -- transitions -----------------------------------------------------------

    def transition(self, session: Optional[Session], permit_id: str,
                   event: PermitEvent, expected_version: int) -> Permit:
        with self.store.lock:
            actor = self.access.require(session, EVENT_ACTION[event])
            self.expire_sweep()
            permit = self.permit(permit_id)
            target = TRANSITIONS.get((permit.state, event))
            if target is None:
                raise IllegalTransition(
                    f"event {event.value} not allowed in state {permit.state.value}",
                    {"state": permit.state.value, "event": event.value})
            if event == PermitEvent.APPROVE and actor.user_id == permit.requester_id:
                raise FourEyesViolation("the requester of a permit may not approve it")
            if event == PermitEvent.CANCEL and actor.user_id != permit.requester_id \
                    and actor.role not in (Role.SUPERVISOR, Role.ADMIN):
                raise Unauthorized("only the requester or a supervisor may cancel",
                                   {"action": Action.PERMIT_CANCEL.value})
            if permit.version != expected_version:
                raise VersionConflict(
                    f"permit {permit_id} is at version {permit.version}, "
                    f"caller had {expected_version}")
            now = self.clock.now()
            self._check_guards(permit, event, now)
            updated = self._advance(permit, target, event.value, actor.user_id, now)
            draft = AuditDraft(
                actor=actor.user_id, action=EVENT_ACTION[event].value,
                entity_kind="permit", entity_id=permit_id,
                args={"event": event.value, "from": permit.state.value, "to": target.value},
                mutations=(Mutation("permit", permit_id, updated),),
            )
            self.store.commit([draft], version_checks=[("permit", permit_id, expected_version)])
            return updated

    def _advance(self, permit: Permit, target: PermitState, event_name: str,
                 actor_id: str, at: datetime) -> Permit:
        history = list(permit.state_history)
        history.append({
            "from": permit.state.value,
            "to": target.value,
            "event": event_name,
            "actor": actor_id,
            "at": to_iso(at),
        })
        return replace(permit, state=target, state_history=history,
                       version=permit.version + 1)

    def _check_guards(self, permit: Permit, event: PermitEvent, now: datetime) -> None:
        if event in (PermitEvent.APPROVE, PermitEvent.RESUME):
            self._guard_contractor(permit, now)
            self._guard_machine(permit)
            self._guard_conflicts(permit)
            if not now < permit.valid_to:
                raise GuardViolation("G4", "permit validity window has ended",
                                     {"valid_to": to_iso(permit.valid_to)})
        elif event == PermitEvent.ACTIVATE:
            earliest = permit.valid_from - self.activation_grace
            if not earliest <= now <= permit.valid_to:
                raise GuardViolation("G5", "activation outside the validity window",
                                     {"valid_from": to_iso(permit.valid_from),
                                      "valid_to": to_iso(permit.valid_to)})
        elif event == PermitEvent.CLOSE:
            open_incidents = sorted(
                i.incident_id for i in self.store.kind("incident").values()
                if i.permit_id == permit.permit_id and i.state.value not in _G6_SETTLED
            )
            if open_incidents:
                raise GuardViolation("G6", "permit has unresolved linked incidents",
                                     {"incident_ids": open_incidents})

    def _guard_contractor(self, permit: Permit, now: datetime) -> None:
        if permit.contractor_id is None:
            return
        assert self.contracts is not None
        try:
            result = self.contracts.check_eligibility(
                permit.contractor_id, permit.permit_type, now)
        except UnknownContractor:
            raise GuardViolation("G1", "named contractor does not exist",
                                 {"reason": "UNKNOWN_CONTRACTOR"})
        if not result.eligible:
            raise GuardViolation("G1", f"contractor ineligible: {result.reason}",
                                 {"reason": result.reason})

    def _guard_machine(self, permit: Permit) -> None:
        if permit.machine_id is None:
            return
        machine = self.store.get("machine", permit.machine_id)
        if machine is None:
            raise GuardViolation("G2", "named machine does not exist",
                                 {"reason": "UNKNOWN_MACHINE"})
        if machine.status != MachineStatus.OPERATIONAL:
            raise GuardViolation("G2", "machine is not operational",
                                 {"status": machine.status.value})

    def _guard_conflicts(self, permit: Permit) -> None:
        reports = permit_conflicts(permit.view(), self.active_views(exclude=permit.permit_id),
                                   self.catalog.index, self.catalog.policy)
        if reports:
            raise GuardViolation("G3", "conflicting permits in overlapping zones", {
                "conflicts": [{"permit_id": r.permit_id, "rule": r.rule} for r in reports]})

    # -- system transitions -----------------------------------------------------

    def expire_sweep(self, now: Optional[datetime] = None) -> list[str]:
        """Expire every non-terminal permit whose window has passed. Idempotent."""
        with self.store.lock:
            now = now or self.clock.now()
            if self._next_expiry is not None and now <= self._next_expiry:
                return []
            live = [p for p in self.store.kind("permit").values()
                    if p.state not in TERMINAL_PERMIT_STATES]
            stale = sorted(p.permit_id for p in live if p.valid_to < now)
            remaining = [p.valid_to for p in live if not p.valid_to < now]
            self._next_expiry = min(remaining) if remaining else datetime.max.replace(
                tzinfo=now.tzinfo)
            if not stale:
                return []
            drafts = []
            for permit_id in stale:
                permit = self.store.get("permit", permit_id)
                updated = self._advance(permit, PermitState.EXPIRED, "EXPIRE",
                                        SYSTEM_ACTOR, now)
                drafts.append(AuditDraft(
                    actor=SYSTEM_ACTOR, action="permit.expire",
                    entity_kind="permit", entity_id=permit_id,
                    args={"from": permit.state.value, "valid_to": to_iso(permit.valid_to)},
                    mutations=(Mutation("permit", permit_id, updated),),
                ))
            self.store.commit(drafts)
            return stale

    def suspension_drafts(self, permit_ids: list[str], cause: dict) -> list[AuditDraft]:
        """SYSTEM suspension drafts for currently ACTIVE permits (no commit)."""
        drafts = []
        now = self.clock.now()
        for permit_id in sorted(set(permit_ids)):
            permit = self.store.get("permit", permit_id)
            if permit is None or permit.state != PermitState.ACTIVE:
                continue
            updated = self._advance(permit, PermitState.SUSPENDED, PermitEvent.SUSPEND.value,
                                    SYSTEM_ACTOR, now)
            drafts.append(AuditDraft(
                actor=SYSTEM_ACTOR, action=Action.PERMIT_SUSPEND.value,
                entity_kind="permit", entity_id=permit_id,
                args=dict(cause, event=PermitEvent.SUSPEND.value),
                mutations=(Mutation("permit", permit_id, updated),),
            ))
        return drafts

    def contractor_ineligible_drafts(self, contractor_id: str) -> list[AuditDraft]:
        """Cascade when a contractor stops being APPROVED: submitted permits
        naming it are rejected, active ones suspended (no commit)."""
        now = self.clock.now()
        drafts = []
        named = sorted(
            (p for p in self.store.kind("permit").values() if p.contractor_id == contractor_id),
            key=lambda p: p.permit_id,
        )
        for permit in named:
            if permit.state == PermitState.SUBMITTED:
                updated = self._advance(permit, PermitState.REJECTED,
                                        PermitEvent.REJECT.value, SYSTEM_ACTOR, now)
                drafts.append(AuditDraft(
                    actor=SYSTEM_ACTOR, action=Action.PERMIT_REJECT.value,
                    entity_kind="permit", entity_id=permit.permit_id,
                    args={"event": PermitEvent.REJECT.value,
                          "reason": "CONTRACTOR_INELIGIBLE",
                          "contractor_id": contractor_id},
                    mutations=(Mutation("permit", permit.permit_id, updated),),
                ))
            elif permit.state == PermitState.ACTIVE:
                updated = self._advance(permit, PermitState.SUSPENDED,
                                        PermitEvent.SUSPEND.value, SYSTEM_ACTOR, now)
                drafts.append(AuditDraft(
                    actor=SYSTEM_ACTOR, action=Action.PERMIT_SUSPEND.value,
                    entity_kind="permit", entity_id=permit.permit_id,
                    args={"event": PermitEvent.SUSPEND.value,
                          "reason": "CONTRACTOR_INELIGIBLE",
                          "contractor_id": contractor_id},
                    mutations=(Mutation("permit", permit.permit_id, updated),),
                ))
        return drafts
