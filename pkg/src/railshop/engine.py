"""Engine facade: wires the store, services, and zone catalog into one
object the gateway, CLI, and tests drive."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Any, Optional

from .access import AccessControl, Action, Decision, Session, User
from .audit import ChainReport, SYSTEM_ACTOR, trace, verify_entries, verify_journal_bytes
from .clock import Clock, SystemClock, from_iso
from .contracts import Contractor, ContractorRegistry
from .errors import UnknownMachine, ValidationError
from .geometry import Zone, load_zones_document
from .incidents import Incident, IncidentService
from .metrics import PipelineReport, Stage, StageTiming, compare_pipelines, stage_durations
from .permits import Permit, PermitEngine, ZoneCatalog
from .registry import MachinePlant, MachineRegistry, MaintenanceRecord
from .store import AuditDraft, Journal, Mutation, Store, load_store
from .types import ApprovalStatus, Criticality, PermitState, PermitType, Role

ENTITY_CODEC = {
    "user": User.from_dict,
    "session": Session.from_dict,
    "zone": Zone.from_dict,
    "machine": MachinePlant.from_dict,
    "maintenance": MaintenanceRecord.from_dict,
    "contractor": Contractor.from_dict,
    "permit": Permit.from_dict,
    "incident": Incident.from_dict,
}

JOURNAL_FILE = "journal.ndjson"
SNAPSHOT_FILE = "state.snapshot.json"


@dataclass
class EngineConfig:
    session_ttl: timedelta = timedelta(hours=8)
    activation_grace: timedelta = timedelta(0)
    sweep_interval_s: float = 60.0
    min_safety_rating: Optional[int] = None
    data_dir: Optional[str] = None


class Workshop:
    """One workshop's governance engine over a single shared store."""

    def __init__(self, store: Store, clock: Optional[Clock] = None,
                 config: Optional[EngineConfig] = None):
        self.config = config or EngineConfig()
        self.clock = clock or store.clock
        store.clock = self.clock
        self.store = store
        self.catalog = ZoneCatalog()
        self.access = AccessControl(store, self.clock, session_ttl=self.config.session_ttl)
        self.registry = MachineRegistry(store, self.access, self.clock)
        self.contracts = ContractorRegistry(store, self.access, self.clock,
                                            min_safety_rating=self.config.min_safety_rating)
        self.permits = PermitEngine(store, self.access, self.clock, self.catalog,
                                    activation_grace=self.config.activation_grace)
        self.incidents = IncidentService(store, self.access, self.clock, self.catalog)
        self.contracts.permits = self.permits
        self.incidents.permits = self.permits
        self.permits.contracts = self.contracts
        self.catalog.rebuild(list(store.kind("zone").values()))

    # -- construction ------------------------------------------------------------

    @classmethod
    def in_memory(cls, clock: Optional[Clock] = None,
                  config: Optional[EngineConfig] = None) -> "Workshop":
        return cls(Store(journal=Journal(None), clock=clock or SystemClock()),
                   clock=clock, config=config)

    @classmethod
    def open(cls, data_dir: str, clock: Optional[Clock] = None,
             config: Optional[EngineConfig] = None) -> "Workshop":
        """Open (or initialize) the data directory: journal + optional snapshot."""
        os.makedirs(data_dir, exist_ok=True)
        journal_path = os.path.join(data_dir, JOURNAL_FILE)
        snapshot_path = os.path.join(data_dir, SNAPSHOT_FILE)
        store = load_store(journal_path, ENTITY_CODEC,
                           snapshot_path if os.path.exists(snapshot_path) else None,
                           clock=clock or SystemClock())
        config = config or EngineConfig()
        config.data_dir = data_dir
        return cls(store, clock=clock, config=config)

    # -- zones ------------------------------------------------------------------

    def load_zones(self, doc: dict, actor: str = SYSTEM_ACTOR) -> list[Zone]:
        """Load or replace the zone set from a zones document (journaled)."""
        zones, policy = load_zones_document(doc)
        with self.store.lock:
            current = {z.zone_id: z.to_dict() for z in self.store.kind("zone").values()}
            incoming = {z.zone_id: z.to_dict() for z in zones}
            if current != incoming:
                draft = AuditDraft(
                    actor=actor, action=Action.ZONE_LOAD.value,
                    entity_kind="zones", entity_id="catalog",
                    args={"count": len(zones)},
                    mutations=tuple(Mutation("zone", z.zone_id, z) for z in zones),
                )
                self.store.commit([draft])
            self.catalog.rebuild(zones, policy)
        return zones

    def load_zones_file(self, path: str, actor: str = SYSTEM_ACTOR) -> list[Zone]:
        with open(path, "r", encoding="utf-8") as fh:
            return self.load_zones(json.load(fh), actor=actor)

    def zones(self) -> list[Zone]:
        return sorted(self.store.kind("zone").values(), key=lambda z: z.zone_id)

    # -- cross-module queries ------------------------------------------------------

    def may_operate(self, machine_id: str) -> Decision:
        """Machine work is allowed only under an ACTIVE permit naming the machine."""
        if self.store.get("machine", machine_id) is None:
            raise UnknownMachine(f"unknown machine {machine_id!r}")
        for p in self.store.kind("permit").values():
            if p.machine_id == machine_id and p.state == PermitState.ACTIVE:
                return Decision(True)
        return Decision(False, "NO_ACTIVE_PERMIT")

    # -- audit / persistence -------------------------------------------------------

    def verify_chain(self) -> ChainReport:
        journal_path = self.store.journal.path
        if journal_path and os.path.exists(journal_path):
            with open(journal_path, "rb") as fh:
                return verify_journal_bytes(fh.read())
        return verify_entries(self.store.entries)

    def trace(self, entity_kind: str, entity_id: str):
        return trace(self.store.entries, entity_kind, entity_id)

    def create_snapshot(self) -> dict:
        if not self.config.data_dir:
            raise ValidationError("snapshots need a data directory")
        return self.store.write_snapshot(os.path.join(self.config.data_dir, SNAPSHOT_FILE))

    # -- reports --------------------------------------------------------------------

    def pipeline_report(self, baseline_minutes: dict[str, float],
                        window_from: Optional[datetime] = None,
                        window_to: Optional[datetime] = None) -> PipelineReport:
        window_from = window_from or datetime.min.replace(tzinfo=self.clock.now().tzinfo)
        window_to = window_to or self.clock.now()
        digital = stage_durations(self.store.entries, window_from, window_to)
        manual: list[StageTiming] = []
        for name, minutes in baseline_minutes.items():
            try:
                stage = Stage(name)
            except ValueError:
                raise ValidationError(f"unknown pipeline stage {name!r}")
            manual.append(StageTiming(stage=stage, duration_minutes=float(minutes)))
        digital_timings = [StageTiming(stage=s, duration_minutes=m)
                           for s, m in digital.items() if s in {t.stage for t in manual}]
        return compare_pipelines(manual, digital_timings)

    def incident_report(self) -> dict[str, float]:
        from .metrics import incident_stats

        stats = incident_stats(list(self.store.kind("incident").values()))
        return {category.value: pct for category, pct in stats.items()}

    # -- seeding ---------------------------------------------------------------------

    def seed(self, fixture: dict, base_dir: str = ".") -> dict[str, Any]:
        """Load master data (users, zones, machines, contractors) as SYSTEM.

        Returns name→id maps the scenario runner uses to resolve references.
        """
        created: dict[str, Any] = {"users": {}, "machines": {}, "contractors": {}}
        zones_file = fixture.get("zones_file")
        if zones_file:
            path = zones_file if os.path.isabs(zones_file) else os.path.join(base_dir, zones_file)
            self.load_zones_file(path)
        if "zones" in fixture:
            self.load_zones({"zones": fixture["zones"]})
        for raw in fixture.get("users", []):
            user = self.access.seed_user(raw["name"], Role(raw["role"]), raw["credential"])
            created["users"][user.name] = user.user_id
        for raw in fixture.get("machines", []):
            machine = self.registry.seed_machine(
                asset_code=raw["asset_code"], maker=raw["manufacture"]["maker"],
                year=raw["manufacture"]["year"], classification=raw["classification"],
                criticality=Criticality(raw["criticality"]), zone_id=raw["zone_id"])
            created["machines"][machine.asset_code] = machine.machine_id
        for raw in fixture.get("contractors", []):
            cert = raw["certification"]
            contractor = self.contracts.seed_contractor(
                vendor_code=raw["vendor_code"], name=raw["name"],
                work_categories={PermitType(c) for c in raw["work_categories"]},
                cert_id=cert["cert_id"], cert_valid_from=from_iso(cert["valid_from"]),
                cert_valid_to=from_iso(cert["valid_to"]),
                safety_rating=raw["safety_rating"], workforce_size=raw["workforce_size"],
                approval_status=ApprovalStatus(raw.get("approval_status", "PENDING")))
            created["contractors"][contractor.vendor_code] = contractor.contractor_id
        return created

    def close(self) -> None:
        self.store.journal.close()
