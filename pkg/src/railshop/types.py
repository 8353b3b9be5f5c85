"""Closed domain enums shared across module boundaries."""

from __future__ import annotations

from enum import Enum


class Role(str, Enum):
    ADMIN = "ADMIN"
    SUPERVISOR = "SUPERVISOR"
    SAFETY_OFFICER = "SAFETY_OFFICER"
    ENGINEER = "ENGINEER"
    TECHNICIAN = "TECHNICIAN"
    CONTRACTOR = "CONTRACTOR"


class PermitType(str, Enum):
    """Hazardous-work categories a permit (and a contractor) can carry."""

    HOT_WORK = "HOT_WORK"
    ELECTRICAL = "ELECTRICAL"
    CONFINED_SPACE = "CONFINED_SPACE"
    WORKING_AT_HEIGHT = "WORKING_AT_HEIGHT"
    GENERAL = "GENERAL"


class PermitState(str, Enum):
    DRAFT = "DRAFT"
    SUBMITTED = "SUBMITTED"
    APPROVED = "APPROVED"
    ACTIVE = "ACTIVE"
    SUSPENDED = "SUSPENDED"
    CLOSED = "CLOSED"
    REJECTED = "REJECTED"
    EXPIRED = "EXPIRED"
    CANCELLED = "CANCELLED"


TERMINAL_PERMIT_STATES = frozenset({
    PermitState.CLOSED,
    PermitState.REJECTED,
    PermitState.EXPIRED,
    PermitState.CANCELLED,
})


class MachineStatus(str, Enum):
    OPERATIONAL = "OPERATIONAL"
    UNDER_MAINTENANCE = "UNDER_MAINTENANCE"
    OUT_OF_SERVICE = "OUT_OF_SERVICE"


class Criticality(str, Enum):
    LOW = "LOW"
    MEDIUM = "MEDIUM"
    HIGH = "HIGH"


class ApprovalStatus(str, Enum):
    PENDING = "PENDING"
    APPROVED = "APPROVED"
    SUSPENDED = "SUSPENDED"
    REVOKED = "REVOKED"


class Severity(str, Enum):
    MINOR = "MINOR"
    MAJOR = "MAJOR"
    FATAL = "FATAL"


class IncidentCategory(str, Enum):
    LACERATION = "LACERATION"
    ABRASION = "ABRASION"
    BURN = "BURN"
    FALL = "FALL"
    ELECTRIC_SHOCK = "ELECTRIC_SHOCK"
    OTHER = "OTHER"


class IncidentState(str, Enum):
    REPORTED = "REPORTED"
    UNDER_INVESTIGATION = "UNDER_INVESTIGATION"
    CORRECTIVE_ACTION = "CORRECTIVE_ACTION"
    CLOSED = "CLOSED"
