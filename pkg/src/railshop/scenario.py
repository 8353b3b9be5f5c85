"""Scripted scenario execution for demos, seeding, and duration studies.

Scenario document shape:

    {
      "start": "2026-03-02T07:30:00.000Z",        # clock at seed time
      "users": [...], "zones_file": "zones.json",  # master data (see seed)
      "machines": [...], "contractors": [...],
      "script": [
        {"at": "...", "actor": "Tech One", "op": "permit.create",
         "args": {"ref": "p1", "type": "GENERAL", "zone": "Z1",
                  "from": "...", "to": "...", "machine": "LATHE-042"}},
        {"at": "...", "actor": "Safety One", "op": "permit.approve",
         "args": {"permit": "p1"}},
        ...
      ]
    }

Machines are referenced by asset code, contractors by vendor code, permits
and incidents by the "ref" label their creating step declared. Steps run on
a manual clock set to each step's "at", which must be non-decreasing.
"""

from __future__ import annotations

import json
import os
from typing import Any, Optional

from .access import Session
from .clock import ManualClock, from_iso
from .engine import Workshop
from .errors import ValidationError
from .permits import PermitEvent
from .types import ApprovalStatus, IncidentCategory, IncidentState, PermitType, Severity

_TRANSITION_OPS = {
    "permit.submit": PermitEvent.SUBMIT,
    "permit.approve": PermitEvent.APPROVE,
    "permit.reject": PermitEvent.REJECT,
    "permit.activate": PermitEvent.ACTIVATE,
    "permit.suspend": PermitEvent.SUSPEND,
    "permit.resume": PermitEvent.RESUME,
    "permit.close": PermitEvent.CLOSE,
    "permit.cancel": PermitEvent.CANCEL,
}


class ScenarioRunner:
    def __init__(self, shop: Workshop, doc: dict, base_dir: str = "."):
        if not isinstance(shop.clock, ManualClock):
            raise ValidationError("scenarios need an engine on a manual clock")
        self.shop = shop
        self.doc = doc
        self.base_dir = base_dir
        self.clock: ManualClock = shop.clock
        self.credentials: dict[str, str] = {}
        self.sessions: dict[str, Session] = {}
        self.permit_refs: dict[str, str] = {}
        self.incident_refs: dict[str, str] = {}
        self.machines: dict[str, str] = {}
        self.contractors: dict[str, str] = {}
        self.ops_run = 0

    # -- reference resolution -------------------------------------------------

    def _actor(self, name: str) -> Session:
        session = self.sessions.get(name)
        if session is None or self.clock.now() >= session.expires_at:
            credential = self.credentials.get(name)
            if credential is None:
                raise ValidationError(f"script actor {name!r} is not in the users section")
            session = self.shop.access.login(name, credential)
            self.sessions[name] = session
        return session

    def _permit(self, ref: str) -> str:
        if ref not in self.permit_refs:
            raise ValidationError(f"unknown permit ref {ref!r}")
        return self.permit_refs[ref]

    def _machine(self, asset_code: Optional[str]) -> Optional[str]:
        if asset_code is None:
            return None
        if asset_code not in self.machines:
            raise ValidationError(f"unknown machine {asset_code!r}")
        return self.machines[asset_code]

    def _contractor(self, vendor_code: Optional[str]) -> Optional[str]:
        if vendor_code is None:
            return None
        if vendor_code not in self.contractors:
            raise ValidationError(f"unknown contractor {vendor_code!r}")
        return self.contractors[vendor_code]

    # -- execution ----------------------------------------------------------------

    def run(self) -> dict[str, Any]:
        start = self.doc.get("start")
        if start:
            self.clock.set(from_iso(start))
        created = self.shop.seed(self.doc, base_dir=self.base_dir)
        self.machines = created["machines"]
        self.contractors = created["contractors"]
        self.credentials = {u["name"]: u["credential"]
                            for u in self.doc.get("users", [])}
        last_at = self.clock.now()
        for i, step in enumerate(self.doc.get("script", [])):
            at = from_iso(step["at"])
            if at < last_at:
                raise ValidationError(f"script step {i} goes back in time")
            self.clock.set(at)
            last_at = at
            self._run_step(step)
            self.ops_run += 1
        return {
            "ops": self.ops_run,
            "permits": dict(self.permit_refs),
            "incidents": dict(self.incident_refs),
            "last_seq": self.shop.store.last_seq(),
        }

    def _run_step(self, step: dict) -> None:
        op = step.get("op")
        args = step.get("args", {})
        if op == "sweep":
            self.shop.permits.expire_sweep()
            return
        session = self._actor(step["actor"])
        if op == "permit.create":
            permit = self.shop.permits.create_draft(
                session, PermitType(args["type"]), args["zone"],
                from_iso(args["from"]), from_iso(args["to"]),
                args.get("description", ""),
                machine_id=self._machine(args.get("machine")),
                contractor_id=self._contractor(args.get("contractor")))
            self.permit_refs[args["ref"]] = permit.permit_id
        elif op in _TRANSITION_OPS:
            permit_id = self._permit(args["permit"])
            current = self.shop.permits.permit(permit_id)
            self.shop.permits.transition(session, permit_id, _TRANSITION_OPS[op],
                                         current.version)
        elif op == "machine.status":
            machine_id = self._machine(args["machine"])
            current = self.shop.registry.machine(machine_id)
            from .types import MachineStatus

            self.shop.registry.set_machine_status(
                session, machine_id, MachineStatus(args["status"]), current.version)
        elif op == "machine.fault":
            self.shop.registry.report_fault(
                session, self._machine(args["machine"]), args.get("description", ""))
        elif op == "machine.maintenance":
            self.shop.registry.record_maintenance(
                session, self._machine(args["machine"]), args.get("description", ""))
        elif op == "contract.approval":
            contractor_id = self._contractor(args["contractor"])
            current = self.shop.contracts.contractor(contractor_id)
            self.shop.contracts.set_approval(
                session, contractor_id, ApprovalStatus(args["status"]), current.version)
        elif op == "incident.report":
            incident, _ = self.shop.incidents.report_incident(
                session, args["title"], args.get("description", ""),
                Severity(args["severity"]), IncidentCategory(args["category"]),
                args["zone"],
                permit_id=self._permit(args["permit"]) if args.get("permit") else None)
            if "ref" in args:
                self.incident_refs[args["ref"]] = incident.incident_id
        elif op == "incident.advance":
            incident_id = self.incident_refs.get(args["incident"])
            if incident_id is None:
                raise ValidationError(f"unknown incident ref {args['incident']!r}")
            current = self.shop.incidents.incident(incident_id)
            self.shop.incidents.advance(
                session, incident_id, IncidentState(args["target"]),
                current.version, note=args.get("note"))
        else:
            raise ValidationError(f"unknown script op {op!r}")


def run_scenario_file(shop: Workshop, path: str) -> dict[str, Any]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return ScenarioRunner(shop, doc, base_dir=os.path.dirname(os.path.abspath(path))).run()
