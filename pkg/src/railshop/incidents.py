"""Incident management: severity-classified reporting, a strictly forward
investigation workflow, and zone-scoped auto-suspension of active permits.

A MAJOR or FATAL report suspends the linked permit (when active) plus every
active permit whose zone overlaps the incident zone, all in one atomic
commit with the incident itself. MINOR incidents never touch permits.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import datetime
from typing import TYPE_CHECKING, Optional

from .access import AccessControl, Action, Session, new_id
from .clock import Clock, from_iso, to_iso
from .errors import (
    GuardViolation,
    IllegalTransition,
    Unauthorized,
    UnknownIncident,
    UnknownPermit,
    UnknownZone,
    VersionConflict,
)
from .store import AuditDraft, Mutation, Store
from .types import IncidentCategory, IncidentState, PermitState, Role, Severity

if TYPE_CHECKING:
    from .permits import PermitEngine, ZoneCatalog

_ORDER = [IncidentState.REPORTED, IncidentState.UNDER_INVESTIGATION,
          IncidentState.CORRECTIVE_ACTION, IncidentState.CLOSED]
_NEXT = {a: b for a, b in zip(_ORDER, _ORDER[1:])}

_ADVANCE_ACTION = {
    IncidentState.UNDER_INVESTIGATION: Action.INCIDENT_INVESTIGATE,
    IncidentState.CORRECTIVE_ACTION: Action.INCIDENT_INVESTIGATE,
    IncidentState.CLOSED: Action.INCIDENT_CLOSE,
}


@dataclass
class Incident:
    incident_id: str
    title: str
    description: str
    severity: Severity
    category: IncidentCategory
    zone_id: str
    reported_by: str
    reported_at: datetime
    state: IncidentState
    permit_id: Optional[str] = None
    corrective_actions: list[dict] = field(default_factory=list)
    version: int = 1

    def to_dict(self) -> dict:
        return {
            "incident_id": self.incident_id,
            "title": self.title,
            "description": self.description,
            "severity": self.severity.value,
            "category": self.category.value,
            "zone_id": self.zone_id,
            "reported_by": self.reported_by,
            "reported_at": to_iso(self.reported_at),
            "state": self.state.value,
            "permit_id": self.permit_id,
            "corrective_actions": list(self.corrective_actions),
            "version": self.version,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Incident":
        return cls(
            incident_id=data["incident_id"],
            title=data["title"],
            description=data["description"],
            severity=Severity(data["severity"]),
            category=IncidentCategory(data["category"]),
            zone_id=data["zone_id"],
            reported_by=data["reported_by"],
            reported_at=from_iso(data["reported_at"]),
            state=IncidentState(data["state"]),
            permit_id=data.get("permit_id"),
            corrective_actions=list(data.get("corrective_actions", [])),
            version=data["version"],
        )


class IncidentService:
    def __init__(self, store: Store, access: AccessControl, clock: Clock,
                 catalog: "ZoneCatalog"):
        self.store = store
        self.access = access
        self.clock = clock
        self.catalog = catalog
        self.permits: Optional["PermitEngine"] = None  # wired by the engine

    # -- queries -----------------------------------------------------------

    def incident(self, incident_id: str) -> Incident:
        incident = self.store.get("incident", incident_id)
        if incident is None:
            raise UnknownIncident(f"unknown incident {incident_id!r}")
        return incident

    def incidents_for_permit(self, permit_id: str) -> list[Incident]:
        if self.store.get("permit", permit_id) is None:
            raise UnknownPermit(f"unknown permit {permit_id!r}")
        linked = [i for i in self.store.kind("incident").values() if i.permit_id == permit_id]
        linked.sort(key=lambda i: i.reported_at)
        return linked

    def list_incidents(self, severity: Optional[Severity] = None,
                       state: Optional[IncidentState] = None,
                       permit: Optional[str] = None) -> list[Incident]:
        result = []
        for i in self.store.kind("incident").values():
            if severity is not None and i.severity != severity:
                continue
            if state is not None and i.state != state:
                continue
            if permit is not None and i.permit_id != permit:
                continue
            result.append(i)
        return result

    # -- mutations -----------------------------------------------------------

    def report_incident(self, session: Optional[Session], title: str, description: str,
                        severity: Severity, category: IncidentCategory, zone_id: str,
                        permit_id: Optional[str] = None) -> tuple[Incident, list[str]]:
        """Returns the incident and the ids of permits it auto-suspended."""
        assert self.permits is not None
        with self.store.lock:
            actor = self.access.require(session, Action.INCIDENT_REPORT)
            self.permits.expire_sweep()
            if self.store.get("zone", zone_id) is None:
                raise UnknownZone(f"unknown zone {zone_id!r}")
            if permit_id is not None and self.store.get("permit", permit_id) is None:
                raise UnknownPermit(f"unknown permit {permit_id!r}")
            incident = Incident(
                incident_id=new_id("inc"), title=title, description=description,
                severity=severity, category=category, zone_id=zone_id,
                reported_by=actor.user_id, reported_at=self.clock.now(),
                state=IncidentState.REPORTED, permit_id=permit_id,
            )
            drafts = [AuditDraft(
                actor=actor.user_id, action=Action.INCIDENT_REPORT.value,
                entity_kind="incident", entity_id=incident.incident_id,
                args={"severity": severity.value, "category": category.value,
                      "zone_id": zone_id, "permit_id": permit_id},
                mutations=(Mutation("incident", incident.incident_id, incident),),
            )]
            suspended: list[str] = []
            if severity in (Severity.MAJOR, Severity.FATAL):
                targets = self._suspension_targets(zone_id, permit_id)
                suspension = self.permits.suspension_drafts(
                    targets, cause={"incident_id": incident.incident_id,
                                    "severity": severity.value})
                suspended = [d.entity_id for d in suspension]
                drafts.extend(suspension)
            self.store.commit(drafts, version_checks=[
                ("incident", incident.incident_id, None)])
            return incident, suspended

    def _suspension_targets(self, zone_id: str, permit_id: Optional[str]) -> list[str]:
        targets = []
        for p in self.store.kind("permit").values():
            if p.state != PermitState.ACTIVE:
                continue
            if p.permit_id == permit_id or self.catalog.index.overlap(zone_id, p.zone_id):
                targets.append(p.permit_id)
        return targets

    def advance(self, session: Optional[Session], incident_id: str,
                target_state: IncidentState, expected_version: int,
                note: Optional[str] = None) -> Incident:
        with self.store.lock:
            action = _ADVANCE_ACTION.get(target_state)
            if action is None:
                raise IllegalTransition(f"{target_state.value} is not a forward target")
            actor = self.access.require(session, action)
            incident = self.incident(incident_id)
            if _NEXT.get(incident.state) != target_state:
                raise IllegalTransition(
                    f"incident state {incident.state.value} -> {target_state.value} "
                    "must advance one step forward",
                    {"state": incident.state.value, "target": target_state.value})
            if incident.version != expected_version:
                raise VersionConflict(
                    f"incident {incident_id} is at version {incident.version}, "
                    f"caller had {expected_version}")
            if target_state == IncidentState.CLOSED:
                if incident.severity == Severity.FATAL and actor.role != Role.SAFETY_OFFICER:
                    raise Unauthorized("fatal incidents may only be closed by a safety officer",
                                       {"severity": incident.severity.value})
                if incident.severity in (Severity.MAJOR, Severity.FATAL) \
                        and not incident.corrective_actions:
                    raise GuardViolation(
                        "CORRECTIVE_ACTION_REQUIRED",
                        "major and fatal incidents need a recorded corrective action before closure")
            actions = list(incident.corrective_actions)
            if note and target_state in (IncidentState.CORRECTIVE_ACTION, IncidentState.CLOSED):
                actions.append({"text": note, "at": to_iso(self.clock.now()),
                                "by": actor.user_id})
            updated = replace(incident, state=target_state, corrective_actions=actions,
                              version=incident.version + 1)
            draft = AuditDraft(
                actor=actor.user_id, action=action.value,
                entity_kind="incident", entity_id=incident_id,
                args={"target": target_state.value, "note": note},
                mutations=(Mutation("incident", incident_id, updated),),
            )
            self.store.commit([draft], version_checks=[
                ("incident", incident_id, expected_version)])
            return updated
