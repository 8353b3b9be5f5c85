"""Domain error hierarchy.

Every error carries a machine-readable ``code`` and an HTTP status used by
the gateway's error envelope. Module code raises these directly; the API
layer never invents its own.
"""

from __future__ import annotations

from typing import Any, Optional


class DomainError(Exception):
    """Base for all domain-level failures."""

    code = "DOMAIN_ERROR"
    http_status = 500

    def __init__(self, message: str = "", details: Optional[dict[str, Any]] = None):
        super().__init__(message or self.code)
        self.message = message or self.code
        self.details = details or {}

    def to_payload(self) -> dict[str, Any]:
        payload: dict[str, Any] = {"code": self.code, "message": self.message}
        if self.details:
            payload["details"] = self.details
        return payload


# -- 400: validation ---------------------------------------------------------

class ValidationError(DomainError):
    code = "VALIDATION"
    http_status = 400


class InvalidWindow(ValidationError):
    code = "INVALID_WINDOW"


class InvalidCertWindow(ValidationError):
    code = "INVALID_CERT_WINDOW"


class InvalidZone(ValidationError):
    code = "INVALID_ZONE"


class DuplicateName(ValidationError):
    code = "DUPLICATE_NAME"


class DuplicateAssetCode(ValidationError):
    code = "DUPLICATE_ASSET_CODE"


class DuplicateVendorCode(ValidationError):
    code = "DUPLICATE_VENDOR_CODE"


class StageMismatch(ValidationError):
    code = "STAGE_MISMATCH"


class ZeroBaseline(ValidationError):
    code = "ZERO_BASELINE"


# -- 401: authentication -----------------------------------------------------

class AuthError(DomainError):
    code = "AUTH"
    http_status = 401


class BadCredentials(AuthError):
    code = "BAD_CREDENTIALS"


class InactiveUser(AuthError):
    code = "INACTIVE_USER"


class SessionRejected(AuthError):
    """Missing, unknown, or expired session token."""

    code = "UNKNOWN_SESSION"

    def __init__(self, reason: str, message: str = ""):
        super().__init__(message or f"session rejected: {reason}")
        self.code = reason


# -- 403: permission ---------------------------------------------------------

class Unauthorized(DomainError):
    code = "FORBIDDEN"
    http_status = 403


class FourEyesViolation(Unauthorized):
    code = "FOUR_EYES_VIOLATION"


# -- 404: unknown entities ---------------------------------------------------

class NotFound(DomainError):
    code = "NOT_FOUND"
    http_status = 404


class UnknownUser(NotFound):
    code = "UNKNOWN_USER"


class UnknownZone(NotFound):
    code = "UNKNOWN_ZONE"


class UnknownMachine(NotFound):
    code = "UNKNOWN_MACHINE"


class UnknownContractor(NotFound):
    code = "UNKNOWN_CONTRACTOR"


class UnknownPermit(NotFound):
    code = "UNKNOWN_PERMIT"


class UnknownIncident(NotFound):
    code = "UNKNOWN_INCIDENT"


# -- 409: state conflicts ----------------------------------------------------

class ConflictError(DomainError):
    code = "CONFLICT"
    http_status = 409


class IllegalTransition(ConflictError):
    code = "ILLEGAL_TRANSITION"


class GuardViolation(ConflictError):
    code = "GUARD_VIOLATION"

    def __init__(self, guard: str, message: str = "", details: Optional[dict[str, Any]] = None):
        merged = {"guard": guard}
        merged.update(details or {})
        super().__init__(message or f"guard {guard} failed", merged)
        self.guard = guard


class VersionConflict(ConflictError):
    code = "VERSION_CONFLICT"


class PermitConflict(ConflictError):
    code = "PERMIT_CONFLICT"


# -- persistence / integrity -------------------------------------------------

class CorruptJournal(DomainError):
    code = "CORRUPT_JOURNAL"

    def __init__(self, first_bad_seq: int, message: str = ""):
        super().__init__(message or f"journal invalid at seq {first_bad_seq}",
                         {"first_bad_seq": first_bad_seq})
        self.first_bad_seq = first_bad_seq


class SnapshotJournalGap(DomainError):
    code = "SNAPSHOT_JOURNAL_GAP"
