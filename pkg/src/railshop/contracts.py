"""Contract management: contractor registration, approval lifecycle, and
workforce eligibility checks.

Eligibility is the literal conjunction: approval_status APPROVED, the permit
type in the contractor's work categories, and the certification window
containing the instant (closed on both ends). Safety rating is informational
unless a minimum-rating gate is configured.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import datetime
from typing import TYPE_CHECKING, Optional

from .access import AccessControl, Action, Session, new_id
from .clock import Clock, from_iso, to_iso
from .errors import (
    DuplicateVendorCode,
    IllegalTransition,
    InvalidCertWindow,
    UnknownContractor,
    ValidationError,
    VersionConflict,
)
from .store import AuditDraft, Mutation, Store
from .types import ApprovalStatus, PermitType

if TYPE_CHECKING:
    from .permits import PermitEngine

_APPROVAL_TRANSITIONS: dict[ApprovalStatus, frozenset[ApprovalStatus]] = {
    ApprovalStatus.PENDING: frozenset({ApprovalStatus.APPROVED, ApprovalStatus.REVOKED}),
    ApprovalStatus.APPROVED: frozenset({ApprovalStatus.SUSPENDED, ApprovalStatus.REVOKED}),
    ApprovalStatus.SUSPENDED: frozenset({ApprovalStatus.APPROVED, ApprovalStatus.REVOKED}),
    ApprovalStatus.REVOKED: frozenset(),  # terminal
}

# eligibility denial reasons
NOT_APPROVED = "NOT_APPROVED"
CATEGORY_MISMATCH = "CATEGORY_MISMATCH"
CERT_NOT_STARTED = "CERT_NOT_STARTED"
CERT_EXPIRED = "CERT_EXPIRED"
RATING_BELOW_MINIMUM = "RATING_BELOW_MINIMUM"


@dataclass(frozen=True)
class Eligibility:
    eligible: bool
    reason: Optional[str] = None


@dataclass
class Contractor:
    contractor_id: str
    vendor_code: str
    name: str
    work_categories: frozenset[PermitType]
    cert_id: str
    cert_valid_from: datetime
    cert_valid_to: datetime
    safety_rating: int
    approval_status: ApprovalStatus
    workforce_size: int
    version: int = 1

    def to_dict(self) -> dict:
        return {
            "contractor_id": self.contractor_id,
            "vendor_code": self.vendor_code,
            "name": self.name,
            "work_categories": sorted(c.value for c in self.work_categories),
            "certification": {
                "cert_id": self.cert_id,
                "valid_from": to_iso(self.cert_valid_from),
                "valid_to": to_iso(self.cert_valid_to),
            },
            "safety_rating": self.safety_rating,
            "approval_status": self.approval_status.value,
            "workforce_size": self.workforce_size,
            "version": self.version,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Contractor":
        cert = data["certification"]
        return cls(
            contractor_id=data["contractor_id"],
            vendor_code=data["vendor_code"],
            name=data["name"],
            work_categories=frozenset(PermitType(c) for c in data["work_categories"]),
            cert_id=cert["cert_id"],
            cert_valid_from=from_iso(cert["valid_from"]),
            cert_valid_to=from_iso(cert["valid_to"]),
            safety_rating=data["safety_rating"],
            approval_status=ApprovalStatus(data["approval_status"]),
            workforce_size=data["workforce_size"],
            version=data["version"],
        )


class ContractorRegistry:
    def __init__(self, store: Store, access: AccessControl, clock: Clock,
                 min_safety_rating: Optional[int] = None):
        self.store = store
        self.access = access
        self.clock = clock
        self.min_safety_rating = min_safety_rating
        self.permits: Optional["PermitEngine"] = None  # wired by the engine

    # -- queries -----------------------------------------------------------

    def contractor(self, contractor_id: str) -> Contractor:
        contractor = self.store.get("contractor", contractor_id)
        if contractor is None:
            raise UnknownContractor(f"unknown contractor {contractor_id!r}")
        return contractor

    def check_eligibility(self, contractor_id: str, permit_type: PermitType,
                          at: datetime) -> Eligibility:
        contractor = self.contractor(contractor_id)
        if contractor.approval_status != ApprovalStatus.APPROVED:
            return Eligibility(False, NOT_APPROVED)
        if permit_type not in contractor.work_categories:
            return Eligibility(False, CATEGORY_MISMATCH)
        if at < contractor.cert_valid_from:
            return Eligibility(False, CERT_NOT_STARTED)
        if at > contractor.cert_valid_to:
            return Eligibility(False, CERT_EXPIRED)
        if self.min_safety_rating is not None and contractor.safety_rating < self.min_safety_rating:
            return Eligibility(False, RATING_BELOW_MINIMUM)
        return Eligibility(True)

    def available_count(self, at: datetime) -> int:
        """Contractors approved and certified at the given instant."""
        return sum(
            1 for c in self.store.kind("contractor").values()
            if c.approval_status == ApprovalStatus.APPROVED
            and c.cert_valid_from <= at <= c.cert_valid_to
        )

    def list_contractors(self, approved: Optional[bool] = None,
                         available_at: Optional[datetime] = None) -> list[Contractor]:
        result = []
        for c in self.store.kind("contractor").values():
            if approved is not None and (c.approval_status == ApprovalStatus.APPROVED) != approved:
                continue
            if available_at is not None:
                if c.approval_status != ApprovalStatus.APPROVED:
                    continue
                if not (c.cert_valid_from <= available_at <= c.cert_valid_to):
                    continue
            result.append(c)
        result.sort(key=lambda c: c.vendor_code)
        return result

    # -- mutations -----------------------------------------------------------

    def register_contractor(self, session: Optional[Session], vendor_code: str, name: str,
                            work_categories: set[PermitType], cert_id: str,
                            cert_valid_from: datetime, cert_valid_to: datetime,
                            safety_rating: int, workforce_size: int) -> Contractor:
        with self.store.lock:
            actor = self.access.require(session, Action.CONTRACT_REGISTER)
            return self._register(actor.user_id, vendor_code, name, work_categories,
                                  cert_id, cert_valid_from, cert_valid_to,
                                  safety_rating, workforce_size)

    def seed_contractor(self, vendor_code: str, name: str, work_categories: set[PermitType],
                        cert_id: str, cert_valid_from: datetime, cert_valid_to: datetime,
                        safety_rating: int, workforce_size: int,
                        approval_status: ApprovalStatus = ApprovalStatus.PENDING) -> Contractor:
        with self.store.lock:
            contractor = self._register("SYSTEM", vendor_code, name, work_categories,
                                        cert_id, cert_valid_from, cert_valid_to,
                                        safety_rating, workforce_size)
            if approval_status != ApprovalStatus.PENDING:
                contractor = self._apply_approval("SYSTEM", contractor, approval_status)
            return contractor

    def _register(self, actor_id: str, vendor_code: str, name: str,
                  work_categories: set[PermitType], cert_id: str,
                  cert_valid_from: datetime, cert_valid_to: datetime,
                  safety_rating: int, workforce_size: int) -> Contractor:
        if not vendor_code or not vendor_code.strip():
            raise ValidationError("vendor_code must be non-empty")
        for existing in self.store.kind("contractor").values():
            if existing.vendor_code == vendor_code:
                raise DuplicateVendorCode(f"vendor code {vendor_code!r} already registered")
        if cert_valid_from > cert_valid_to:
            raise InvalidCertWindow("certification valid_from is after valid_to")
        if not 1 <= int(safety_rating) <= 5:
            raise ValidationError("safety_rating must be between 1 and 5")
        if int(workforce_size) < 0:
            raise ValidationError("workforce_size must be non-negative")
        contractor = Contractor(
            contractor_id=new_id("ctr"), vendor_code=vendor_code, name=name,
            work_categories=frozenset(work_categories), cert_id=cert_id,
            cert_valid_from=cert_valid_from, cert_valid_to=cert_valid_to,
            safety_rating=int(safety_rating),
            approval_status=ApprovalStatus.PENDING,
            workforce_size=int(workforce_size),
        )
        draft = AuditDraft(
            actor=actor_id, action=Action.CONTRACT_REGISTER.value,
            entity_kind="contractor", entity_id=contractor.contractor_id,
            args={"vendor_code": vendor_code, "name": name},
            mutations=(Mutation("contractor", contractor.contractor_id, contractor),),
        )
        self.store.commit([draft], version_checks=[("contractor", contractor.contractor_id, None)])
        return contractor

    def set_approval(self, session: Optional[Session], contractor_id: str,
                     new_status: ApprovalStatus, expected_version: int) -> Contractor:
        with self.store.lock:
            actor = self.access.require(session, Action.CONTRACT_APPROVE)
            contractor = self.contractor(contractor_id)
            if contractor.version != expected_version:
                raise VersionConflict(
                    f"contractor {contractor_id} is at version {contractor.version}, "
                    f"caller had {expected_version}")
            return self._apply_approval(actor.user_id, contractor, new_status)

    def _apply_approval(self, actor_id: str, contractor: Contractor,
                        new_status: ApprovalStatus) -> Contractor:
        allowed = _APPROVAL_TRANSITIONS[contractor.approval_status]
        if new_status not in allowed:
            raise IllegalTransition(
                f"contractor approval {contractor.approval_status.value} -> {new_status.value} not allowed")
        updated = replace(contractor, approval_status=new_status,
                          version=contractor.version + 1)
        drafts = [AuditDraft(
            actor=actor_id, action=Action.CONTRACT_APPROVE.value,
            entity_kind="contractor", entity_id=contractor.contractor_id,
            args={"new_status": new_status.value, "previous": contractor.approval_status.value},
            mutations=(Mutation("contractor", contractor.contractor_id, updated),),
        )]
        leaving_approved = (contractor.approval_status == ApprovalStatus.APPROVED
                            and new_status != ApprovalStatus.APPROVED)
        if leaving_approved and self.permits is not None:
            drafts.extend(self.permits.contractor_ineligible_drafts(contractor.contractor_id))
        self.store.commit(drafts, version_checks=[
            ("contractor", contractor.contractor_id, contractor.version)])
        return updated
