"""HTTP/JSON gateway exposing every module endpoint.

Envelope rules: responses are canonical JSON (sorted keys, compact
separators) so a representation re-serializes byte-identically; every 4xx
carries {code, message, details?} and maps per the table:

    validation 400 | auth 401 | permission 403 | unknown entity 404
    illegal transition / guard / version / permit conflict 409
"""

from __future__ import annotations

import asyncio
import contextlib
import json
import os
from datetime import datetime
from typing import Any, Optional

from fastapi import Depends, FastAPI, Header, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .access import Action, Session
from .clock import from_iso, to_iso
from .engine import Workshop
from .errors import DomainError, SessionRejected, ValidationError
from .permits import PermitEvent
from .types import (
    ApprovalStatus,
    Criticality,
    IncidentCategory,
    IncidentState,
    MachineStatus,
    PermitState,
    PermitType,
    Severity,
)


class CanonicalJSONResponse(JSONResponse):
    def render(self, content: Any) -> bytes:
        return json.dumps(content, sort_keys=True, separators=(",", ":"),
                          ensure_ascii=False).encode("utf-8")


def _parse_enum(enum_cls, raw: str, label: str):
    try:
        return enum_cls(raw)
    except ValueError:
        raise ValidationError(f"{label} must be one of "
                              f"{[e.value for e in enum_cls]}, got {raw!r}")


def _parse_ts(raw: str, label: str) -> datetime:
    try:
        return from_iso(raw)
    except ValueError:
        raise ValidationError(f"{label} is not an ISO-8601 timestamp: {raw!r}")


# -- request bodies -----------------------------------------------------------


class LoginBody(BaseModel):
    name: str
    credential: str


class MachineBody(BaseModel):
    asset_code: str
    maker: str
    year: int
    classification: str
    criticality: str
    zone_id: str


class MachineStatusBody(BaseModel):
    new_status: str
    expected_version: int


class DescriptionBody(BaseModel):
    description: str


class ContractorBody(BaseModel):
    vendor_code: str
    name: str
    work_categories: list[str]
    cert_id: str
    cert_valid_from: str
    cert_valid_to: str
    safety_rating: int
    workforce_size: int


class ApprovalBody(BaseModel):
    new_status: str
    expected_version: int


class PermitBody(BaseModel):
    permit_type: str
    zone_id: str
    valid_from: str
    valid_to: str
    description: str = ""
    machine_id: Optional[str] = None
    contractor_id: Optional[str] = None


class TransitionBody(BaseModel):
    event: str
    expected_version: int


class IncidentBody(BaseModel):
    title: str
    description: str
    severity: str
    category: str
    zone_id: str
    permit_id: Optional[str] = None


class AdvanceBody(BaseModel):
    target_state: str
    note: Optional[str] = None
    expected_version: int


def create_app(shop: Workshop, console_dir: Optional[str] = None,
               sweep_interval_s: Optional[float] = None) -> FastAPI:
    interval = sweep_interval_s if sweep_interval_s is not None \
        else shop.config.sweep_interval_s

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        async def sweep_loop():
            while True:
                await asyncio.sleep(interval)
                shop.permits.expire_sweep()

        task = asyncio.create_task(sweep_loop())
        try:
            yield
        finally:
            task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await task

    app = FastAPI(title="railshop", lifespan=lifespan,
                  default_response_class=CanonicalJSONResponse)

    @app.exception_handler(DomainError)
    async def domain_error_handler(request: Request, err: DomainError):
        return CanonicalJSONResponse(err.to_payload(), status_code=err.http_status)

    @app.exception_handler(RequestValidationError)
    async def body_error_handler(request: Request, err: RequestValidationError):
        return CanonicalJSONResponse(
            {"code": "VALIDATION", "message": "malformed request body",
             "details": {"errors": [str(e.get("msg", e)) for e in err.errors()]}},
            status_code=400)

    def current_session(authorization: Optional[str] = Header(default=None)) -> Session:
        if not authorization or not authorization.startswith("Bearer "):
            raise SessionRejected("UNAUTHENTICATED", "missing bearer token")
        session = shop.access.resolve(authorization[len("Bearer "):])
        if session is None:
            raise SessionRejected("UNKNOWN_SESSION")
        return session

    # -- auth / health ---------------------------------------------------------

    @app.post("/api/auth/login")
    def login(body: LoginBody):
        session = shop.access.login(body.name, body.credential)
        user = shop.access.user(session.user_id)
        return {"token": session.token, "expires_at": to_iso(session.expires_at),
                "user_id": user.user_id, "name": user.name, "role": user.role.value}

    @app.get("/api/health")
    def health():
        return {"status": "ok", "seq": shop.store.last_seq()}

    # -- zones -------------------------------------------------------------------

    @app.get("/api/zones")
    def zones(session: Session = Depends(current_session)):
        return {"zones": [z.to_dict() for z in shop.zones()]}

    # "from" is a reserved word, so the window params come off the raw query string
    @app.get("/api/zones/{zone_id}/conflicts")
    def zone_conflicts(zone_id: str, request: Request,
                       session: Session = Depends(current_session)):
        params = request.query_params
        for key in ("from", "to", "type"):
            if key not in params:
                raise ValidationError(f"query parameter {key!r} is required")
        reports = shop.permits.probe_conflicts(
            zone_id,
            _parse_enum(PermitType, params["type"], "type"),
            _parse_ts(params["from"], "from"),
            _parse_ts(params["to"], "to"))
        return {"conflicts": [{"permit_id": r.permit_id, "rule": r.rule}
                              for r in reports]}

    # -- machines ----------------------------------------------------------------

    @app.get("/api/machines")
    def list_machines(status: Optional[str] = None, zone: Optional[str] = None,
                      criticality: Optional[str] = None,
                      session: Session = Depends(current_session)):
        machines = shop.registry.list_machines(
            status=_parse_enum(MachineStatus, status, "status") if status else None,
            zone_id=zone,
            criticality=_parse_enum(Criticality, criticality, "criticality")
            if criticality else None)
        return {"machines": [m.to_dict() for m in machines]}

    @app.get("/api/machines/{machine_id}")
    def get_machine(machine_id: str, session: Session = Depends(current_session)):
        return shop.registry.machine(machine_id).to_dict()

    @app.get("/api/machines/{machine_id}/may_operate")
    def may_operate(machine_id: str, session: Session = Depends(current_session)):
        decision = shop.may_operate(machine_id)
        return {"allow": decision.allow, "reason": decision.reason}

    @app.post("/api/machines", status_code=201)
    def register_machine(body: MachineBody, session: Session = Depends(current_session)):
        machine = shop.registry.register_machine(
            session, body.asset_code, body.maker, body.year, body.classification,
            _parse_enum(Criticality, body.criticality, "criticality"), body.zone_id)
        return machine.to_dict()

    @app.post("/api/machines/{machine_id}/status")
    def set_machine_status(machine_id: str, body: MachineStatusBody,
                           session: Session = Depends(current_session)):
        machine = shop.registry.set_machine_status(
            session, machine_id,
            _parse_enum(MachineStatus, body.new_status, "new_status"),
            body.expected_version)
        return machine.to_dict()

    @app.post("/api/machines/{machine_id}/faults")
    def report_fault(machine_id: str, body: DescriptionBody,
                     session: Session = Depends(current_session)):
        return shop.registry.report_fault(session, machine_id, body.description).to_dict()

    @app.post("/api/machines/{machine_id}/maintenance", status_code=201)
    def record_maintenance(machine_id: str, body: DescriptionBody,
                           session: Session = Depends(current_session)):
        return shop.registry.record_maintenance(session, machine_id, body.description).to_dict()

    # -- contractors ---------------------------------------------------------------

    @app.get("/api/contractors")
    def list_contractors(approved: Optional[bool] = None,
                         available_at: Optional[str] = None,
                         session: Session = Depends(current_session)):
        contractors = shop.contracts.list_contractors(
            approved=approved,
            available_at=_parse_ts(available_at, "available_at") if available_at else None)
        return {"contractors": [c.to_dict() for c in contractors]}

    @app.get("/api/contractors/available_count")
    def available_count(at: Optional[str] = None,
                        session: Session = Depends(current_session)):
        instant = _parse_ts(at, "at") if at else shop.clock.now()
        return {"at": to_iso(instant), "count": shop.contracts.available_count(instant)}

    @app.get("/api/contractors/{contractor_id}")
    def get_contractor(contractor_id: str, session: Session = Depends(current_session)):
        return shop.contracts.contractor(contractor_id).to_dict()

    @app.post("/api/contractors", status_code=201)
    def register_contractor(body: ContractorBody,
                            session: Session = Depends(current_session)):
        contractor = shop.contracts.register_contractor(
            session, body.vendor_code, body.name,
            {_parse_enum(PermitType, c, "work_categories") for c in body.work_categories},
            body.cert_id, _parse_ts(body.cert_valid_from, "cert_valid_from"),
            _parse_ts(body.cert_valid_to, "cert_valid_to"),
            body.safety_rating, body.workforce_size)
        return contractor.to_dict()

    @app.post("/api/contractors/{contractor_id}/approval")
    def set_approval(contractor_id: str, body: ApprovalBody,
                     session: Session = Depends(current_session)):
        contractor = shop.contracts.set_approval(
            session, contractor_id,
            _parse_enum(ApprovalStatus, body.new_status, "new_status"),
            body.expected_version)
        return contractor.to_dict()

    # -- permits --------------------------------------------------------------------

    @app.get("/api/permits")
    def list_permits(state: Optional[str] = None, user: Optional[str] = None,
                     zone: Optional[str] = None,
                     session: Session = Depends(current_session)):
        permits = shop.permits.list_permits(
            state=_parse_enum(PermitState, state, "state") if state else None,
            user=user, zone=zone)
        return {"permits": [p.to_dict() for p in permits]}

    @app.get("/api/permits/{permit_id}")
    def get_permit(permit_id: str, session: Session = Depends(current_session)):
        return shop.permits.permit(permit_id).to_dict()

    @app.get("/api/permits/{permit_id}/history")
    def permit_history(permit_id: str, session: Session = Depends(current_session)):
        permit = shop.permits.permit(permit_id)
        return {"permit_id": permit.permit_id, "state": permit.state.value,
                "state_history": permit.state_history}

    @app.post("/api/permits", status_code=201)
    def create_permit(body: PermitBody, session: Session = Depends(current_session)):
        permit = shop.permits.create_draft(
            session, _parse_enum(PermitType, body.permit_type, "permit_type"),
            body.zone_id, _parse_ts(body.valid_from, "valid_from"),
            _parse_ts(body.valid_to, "valid_to"), body.description,
            machine_id=body.machine_id, contractor_id=body.contractor_id)
        return permit.to_dict()

    @app.post("/api/permits/{permit_id}/transitions")
    def transition_permit(permit_id: str, body: TransitionBody,
                          session: Session = Depends(current_session)):
        permit = shop.permits.transition(
            session, permit_id, _parse_enum(PermitEvent, body.event, "event"),
            body.expected_version)
        return permit.to_dict()

    # -- incidents ---------------------------------------------------------------------

    @app.get("/api/incidents")
    def list_incidents(severity: Optional[str] = None, state: Optional[str] = None,
                       permit: Optional[str] = None,
                       session: Session = Depends(current_session)):
        incidents = shop.incidents.list_incidents(
            severity=_parse_enum(Severity, severity, "severity") if severity else None,
            state=_parse_enum(IncidentState, state, "state") if state else None,
            permit=permit)
        return {"incidents": [i.to_dict() for i in incidents]}

    @app.get("/api/incidents/{incident_id}")
    def get_incident(incident_id: str, session: Session = Depends(current_session)):
        return shop.incidents.incident(incident_id).to_dict()

    @app.post("/api/incidents", status_code=201)
    def report_incident(body: IncidentBody, session: Session = Depends(current_session)):
        incident, suspended = shop.incidents.report_incident(
            session, body.title, body.description,
            _parse_enum(Severity, body.severity, "severity"),
            _parse_enum(IncidentCategory, body.category, "category"),
            body.zone_id, permit_id=body.permit_id)
        return {"incident": incident.to_dict(), "suspended_permits": suspended}

    @app.post("/api/incidents/{incident_id}/advance")
    def advance_incident(incident_id: str, body: AdvanceBody,
                         session: Session = Depends(current_session)):
        incident = shop.incidents.advance(
            session, incident_id,
            _parse_enum(IncidentState, body.target_state, "target_state"),
            body.expected_version, note=body.note)
        return incident.to_dict()

    # -- audit / reports -----------------------------------------------------------------

    @app.get("/api/audit")
    def audit_entries(entity_kind: Optional[str] = None,
                      entity_id: Optional[str] = None,
                      session: Session = Depends(current_session)):
        if entity_kind and entity_id:
            entries = shop.trace(entity_kind, entity_id)
        else:
            entries = shop.store.entries
        return {"entries": [e.to_api_dict() for e in entries]}

    @app.get("/api/audit/verify")
    def audit_verify(session: Session = Depends(current_session)):
        return shop.verify_chain().to_dict()

    @app.get("/api/reports/pipeline")
    def pipeline_report(request: Request, baseline: Optional[str] = None,
                        session: Session = Depends(current_session)):
        shop.access.require(session, Action.REPORTS_VIEW)
        params = request.query_params
        window_from = _parse_ts(params["from"], "from") if "from" in params else None
        window_to = _parse_ts(params["to"], "to") if "to" in params else None
        baseline_minutes = _load_baseline(shop, baseline)
        report = shop.pipeline_report(baseline_minutes, window_from, window_to)
        return report.to_dict()

    @app.get("/api/reports/incidents")
    def incidents_report(session: Session = Depends(current_session)):
        shop.access.require(session, Action.REPORTS_VIEW)
        return {"by_category_pct": shop.incident_report()}

    # -- console static assets --------------------------------------------------------

    if console_dir and os.path.isdir(console_dir):
        index_path = os.path.join(console_dir, "index.html")

        @app.get("/console")
        def console_index():
            return FileResponse(index_path)

        app.mount("/console", StaticFiles(directory=console_dir, html=True),
                  name="console")

    return app


def _load_baseline(shop: Workshop, baseline: Optional[str]) -> dict[str, float]:
    if not baseline:
        raise ValidationError("a baseline scenario file name is required")
    path = baseline
    if not os.path.isabs(path) and shop.config.data_dir:
        candidate = os.path.join(shop.config.data_dir, baseline)
        if os.path.exists(candidate):
            path = candidate
    if not os.path.exists(path):
        raise ValidationError(f"baseline file {baseline!r} not found")
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    minutes = doc.get("manual_minutes")
    if not isinstance(minutes, dict) or not minutes:
        raise ValidationError("baseline file needs a 'manual_minutes' table")
    return {str(k): float(v) for k, v in minutes.items()}
