"""Machine and plant management: asset registration, status lifecycle,
maintenance history, and fault reporting."""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import datetime
from typing import Optional

from .access import AccessControl, Action, Session, new_id
from .clock import Clock, from_iso, to_iso
from .errors import (
    DuplicateAssetCode,
    GuardViolation,
    PermitConflict,
    UnknownMachine,
    UnknownZone,
    ValidationError,
    VersionConflict,
)
from .store import AuditDraft, Mutation, Store
from .types import Criticality, MachineStatus, PermitState


@dataclass
class MachinePlant:
    machine_id: str
    asset_code: str
    maker: str
    year: int
    classification: str
    criticality: Criticality
    status: MachineStatus
    zone_id: str
    version: int = 1
    out_of_service_since: Optional[datetime] = None

    def to_dict(self) -> dict:
        return {
            "machine_id": self.machine_id,
            "asset_code": self.asset_code,
            "manufacture": {"maker": self.maker, "year": self.year},
            "classification": self.classification,
            "criticality": self.criticality.value,
            "status": self.status.value,
            "zone_id": self.zone_id,
            "version": self.version,
            "out_of_service_since": to_iso(self.out_of_service_since) if self.out_of_service_since else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MachinePlant":
        oos = data.get("out_of_service_since")
        return cls(
            machine_id=data["machine_id"],
            asset_code=data["asset_code"],
            maker=data["manufacture"]["maker"],
            year=data["manufacture"]["year"],
            classification=data["classification"],
            criticality=Criticality(data["criticality"]),
            status=MachineStatus(data["status"]),
            zone_id=data["zone_id"],
            version=data["version"],
            out_of_service_since=from_iso(oos) if oos else None,
        )


@dataclass
class MaintenanceRecord:
    record_id: str
    machine_id: str
    performed_at: datetime
    description: str
    performed_by: str

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "machine_id": self.machine_id,
            "performed_at": to_iso(self.performed_at),
            "description": self.description,
            "performed_by": self.performed_by,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MaintenanceRecord":
        return cls(
            record_id=data["record_id"],
            machine_id=data["machine_id"],
            performed_at=from_iso(data["performed_at"]),
            description=data["description"],
            performed_by=data["performed_by"],
        )


class MachineRegistry:
    def __init__(self, store: Store, access: AccessControl, clock: Clock):
        self.store = store
        self.access = access
        self.clock = clock

    # -- queries -----------------------------------------------------------

    def machine(self, machine_id: str) -> MachinePlant:
        machine = self.store.get("machine", machine_id)
        if machine is None:
            raise UnknownMachine(f"unknown machine {machine_id!r}")
        return machine

    def list_machines(self, status: Optional[MachineStatus] = None,
                      zone_id: Optional[str] = None,
                      criticality: Optional[Criticality] = None) -> list[MachinePlant]:
        """All machines matching every provided predicate, ordered by asset_code."""
        result = []
        for machine in self.store.kind("machine").values():
            if status is not None and machine.status != status:
                continue
            if zone_id is not None and machine.zone_id != zone_id:
                continue
            if criticality is not None and machine.criticality != criticality:
                continue
            result.append(machine)
        result.sort(key=lambda m: m.asset_code)
        return result

    def maintenance_for(self, machine_id: str) -> list[MaintenanceRecord]:
        records = [r for r in self.store.kind("maintenance").values()
                   if r.machine_id == machine_id]
        records.sort(key=lambda r: (r.performed_at, r.record_id))
        return records

    def _booked_permits_naming(self, machine_id: str) -> list[str]:
        # APPROVED counts as booked, not just ACTIVE: otherwise a machine
        # could be decommissioned between approval and activation and the
        # activation (which only rechecks the window) would start work on it
        return sorted(
            p.permit_id for p in self.store.kind("permit").values()
            if p.machine_id == machine_id
            and p.state in (PermitState.APPROVED, PermitState.ACTIVE)
        )

    # -- mutations -----------------------------------------------------------

    def register_machine(self, session: Optional[Session], asset_code: str,
                         maker: str, year: int, classification: str,
                         criticality: Criticality, zone_id: str) -> MachinePlant:
        with self.store.lock:
            actor = self.access.require(session, Action.MACHINE_REGISTER)
            return self._register(actor.user_id, asset_code, maker, year,
                                  classification, criticality, zone_id)

    def seed_machine(self, asset_code: str, maker: str, year: int, classification: str,
                     criticality: Criticality, zone_id: str) -> MachinePlant:
        with self.store.lock:
            return self._register("SYSTEM", asset_code, maker, year,
                                  classification, criticality, zone_id)

    def _register(self, actor_id: str, asset_code: str, maker: str, year: int,
                  classification: str, criticality: Criticality, zone_id: str) -> MachinePlant:
        if not asset_code or not asset_code.strip():
            raise ValidationError("asset_code must be non-empty")
        if self.store.get("zone", zone_id) is None:
            raise UnknownZone(f"unknown zone {zone_id!r}")
        for existing in self.store.kind("machine").values():
            if existing.asset_code == asset_code:
                raise DuplicateAssetCode(f"asset code {asset_code!r} already registered")
        machine = MachinePlant(
            machine_id=new_id("mch"), asset_code=asset_code, maker=maker,
            year=int(year), classification=classification, criticality=criticality,
            status=MachineStatus.OPERATIONAL, zone_id=zone_id,
        )
        draft = AuditDraft(
            actor=actor_id, action=Action.MACHINE_REGISTER.value,
            entity_kind="machine", entity_id=machine.machine_id,
            args={"asset_code": asset_code, "zone_id": zone_id,
                  "criticality": criticality.value},
            mutations=(Mutation("machine", machine.machine_id, machine),),
        )
        self.store.commit([draft], version_checks=[("machine", machine.machine_id, None)])
        return machine

    def set_machine_status(self, session: Optional[Session], machine_id: str,
                           new_status: MachineStatus, expected_version: int) -> MachinePlant:
        with self.store.lock:
            actor = self.access.require(session, Action.MACHINE_UPDATE)
            machine = self.machine(machine_id)
            if machine.version != expected_version:
                raise VersionConflict(
                    f"machine {machine_id} is at version {machine.version}, caller had {expected_version}")
            self._check_status_guards(machine, new_status)
            updated = self._with_status(machine, new_status)
            draft = AuditDraft(
                actor=actor.user_id, action=Action.MACHINE_UPDATE.value,
                entity_kind="machine", entity_id=machine_id,
                args={"new_status": new_status.value, "previous": machine.status.value},
                mutations=(Mutation("machine", machine_id, updated),),
            )
            self.store.commit([draft], version_checks=[("machine", machine_id, expected_version)])
            return updated

    def _check_status_guards(self, machine: MachinePlant, new_status: MachineStatus) -> None:
        if (machine.criticality == Criticality.HIGH
                and machine.status == MachineStatus.OUT_OF_SERVICE
                and new_status == MachineStatus.OPERATIONAL):
            since = machine.out_of_service_since
            serviced = any(
                r.machine_id == machine.machine_id and (since is None or r.performed_at >= since)
                for r in self.store.kind("maintenance").values()
            )
            if not serviced:
                raise GuardViolation(
                    "HIGH_CRITICALITY_MAINTENANCE",
                    "high-criticality machine needs a maintenance record before returning to service")
        if new_status == MachineStatus.OUT_OF_SERVICE:
            holders = self._booked_permits_naming(machine.machine_id)
            if holders:
                raise PermitConflict(
                    f"machine {machine.asset_code} is referenced by an approved or active permit",
                    {"permit_ids": holders})

    def _with_status(self, machine: MachinePlant, new_status: MachineStatus) -> MachinePlant:
        oos_since = machine.out_of_service_since
        if new_status == MachineStatus.OUT_OF_SERVICE and machine.status != MachineStatus.OUT_OF_SERVICE:
            oos_since = self.clock.now()
        elif new_status != MachineStatus.OUT_OF_SERVICE:
            oos_since = None
        return replace(machine, status=new_status, version=machine.version + 1,
                       out_of_service_since=oos_since)

    def record_maintenance(self, session: Optional[Session], machine_id: str,
                           description: str) -> MaintenanceRecord:
        with self.store.lock:
            actor = self.access.require(session, Action.MACHINE_UPDATE)
            machine = self.machine(machine_id)
            record = MaintenanceRecord(
                record_id=new_id("rec"), machine_id=machine.machine_id,
                performed_at=self.clock.now(), description=description,
                performed_by=actor.user_id,
            )
            draft = AuditDraft(
                actor=actor.user_id, action=Action.MACHINE_UPDATE.value,
                entity_kind="maintenance", entity_id=record.record_id,
                args={"machine_id": machine_id, "description": description},
                mutations=(Mutation("maintenance", record.record_id, record),),
            )
            self.store.commit([draft])
            return record

    def report_fault(self, session: Optional[Session], machine_id: str,
                     description: str) -> MachinePlant:
        """Force the machine under maintenance. Idempotent; a decommissioned
        (out-of-service) machine stays as it is — the fault is only logged."""
        with self.store.lock:
            actor = self.access.require(session, Action.MACHINE_FAULT_REPORT)
            machine = self.machine(machine_id)
            mutations: tuple[Mutation, ...] = ()
            result = machine
            if machine.status == MachineStatus.OPERATIONAL:
                result = replace(machine, status=MachineStatus.UNDER_MAINTENANCE,
                                 version=machine.version + 1)
                mutations = (Mutation("machine", machine_id, result),)
            draft = AuditDraft(
                actor=actor.user_id, action=Action.MACHINE_FAULT_REPORT.value,
                entity_kind="machine", entity_id=machine_id,
                args={"description": description, "status_after": result.status.value},
                mutations=mutations,
            )
            self.store.commit([draft])
            return result
