"""Users, sessions, and the static permission matrix.

Every state-changing operation in every module is gated by authorize(),
a total function over (session, action): it never raises, it returns an
allow/deny decision with a machine-readable reason. ADMIN is allowed every
action; safety approvals are restricted to supervisory roles.
"""

from __future__ import annotations

import hashlib
import secrets
from dataclasses import dataclass
from datetime import datetime, timedelta
from enum import Enum
from typing import Optional

from .clock import Clock, from_iso, to_iso
from .errors import (
    BadCredentials,
    DuplicateName,
    InactiveUser,
    SessionRejected,
    Unauthorized,
    UnknownUser,
    ValidationError,
)
from .store import AuditDraft, Mutation, Store
from .types import Role

SESSION_TTL = timedelta(hours=8)  # one work shift

_SCRYPT_N = 2 ** 13
_SCRYPT_R = 8
_SCRYPT_P = 1


class Action(str, Enum):
    USER_CREATE = "user.create"
    USER_UPDATE = "user.update"
    MACHINE_REGISTER = "machine.register"
    MACHINE_UPDATE = "machine.update"
    MACHINE_FAULT_REPORT = "machine.fault_report"
    CONTRACT_REGISTER = "contract.register"
    CONTRACT_APPROVE = "contract.approve"
    PERMIT_CREATE = "permit.create"
    PERMIT_SUBMIT = "permit.submit"
    PERMIT_APPROVE = "permit.approve"
    PERMIT_REJECT = "permit.reject"
    PERMIT_ACTIVATE = "permit.activate"
    PERMIT_SUSPEND = "permit.suspend"
    PERMIT_RESUME = "permit.resume"
    PERMIT_CLOSE = "permit.close"
    PERMIT_CANCEL = "permit.cancel"
    INCIDENT_REPORT = "incident.report"
    INCIDENT_INVESTIGATE = "incident.investigate"
    INCIDENT_CLOSE = "incident.close"
    REPORTS_VIEW = "reports.view"
    ZONE_LOAD = "zone.load"


_ALL_ROLES = frozenset(Role)
_REQUESTER_ROLES = frozenset({Role.TECHNICIAN, Role.ENGINEER, Role.CONTRACTOR, Role.SUPERVISOR})

# rows = actions, cells = roles allowed in addition to ADMIN
PERMISSION_MATRIX: dict[Action, frozenset[Role]] = {
    Action.USER_CREATE: frozenset({Role.ADMIN}),
    Action.USER_UPDATE: frozenset({Role.ADMIN}),
    Action.MACHINE_REGISTER: frozenset({Role.ENGINEER, Role.SUPERVISOR}),
    Action.MACHINE_UPDATE: frozenset({Role.ENGINEER, Role.SUPERVISOR}),
    Action.MACHINE_FAULT_REPORT: _ALL_ROLES,
    Action.CONTRACT_REGISTER: frozenset({Role.ADMIN}),
    Action.CONTRACT_APPROVE: frozenset({Role.SUPERVISOR, Role.SAFETY_OFFICER}),
    Action.PERMIT_CREATE: _REQUESTER_ROLES,
    Action.PERMIT_SUBMIT: _REQUESTER_ROLES,
    Action.PERMIT_APPROVE: frozenset({Role.SUPERVISOR, Role.SAFETY_OFFICER}),
    Action.PERMIT_REJECT: frozenset({Role.SUPERVISOR, Role.SAFETY_OFFICER}),
    Action.PERMIT_ACTIVATE: frozenset({Role.SUPERVISOR}),
    Action.PERMIT_SUSPEND: frozenset({Role.SUPERVISOR, Role.SAFETY_OFFICER}),
    Action.PERMIT_RESUME: frozenset({Role.SUPERVISOR, Role.SAFETY_OFFICER}),
    Action.PERMIT_CLOSE: frozenset({Role.SUPERVISOR}),
    Action.PERMIT_CANCEL: _REQUESTER_ROLES,
    Action.INCIDENT_REPORT: _ALL_ROLES,
    Action.INCIDENT_INVESTIGATE: frozenset({Role.SAFETY_OFFICER}),
    Action.INCIDENT_CLOSE: frozenset({Role.SAFETY_OFFICER}),
    Action.REPORTS_VIEW: frozenset({Role.SUPERVISOR, Role.SAFETY_OFFICER, Role.ADMIN}),
    Action.ZONE_LOAD: frozenset({Role.ADMIN}),
}


def is_allowed(role: Role, action: Action) -> bool:
    return role == Role.ADMIN or role in PERMISSION_MATRIX[action]


@dataclass(frozen=True)
class Decision:
    allow: bool
    reason: Optional[str] = None


ALLOW = Decision(True)

# deny reason codes
REASON_UNKNOWN_SESSION = "UNKNOWN_SESSION"
REASON_SESSION_EXPIRED = "SESSION_EXPIRED"
REASON_USER_INACTIVE = "USER_INACTIVE"
REASON_ROLE_FORBIDDEN = "ROLE_FORBIDDEN"


@dataclass
class User:
    user_id: str
    name: str
    role: Role
    active: bool
    credential_hash: str
    version: int = 1

    def to_dict(self) -> dict:
        return {
            "user_id": self.user_id,
            "name": self.name,
            "role": self.role.value,
            "active": self.active,
            "credential_hash": self.credential_hash,
            "version": self.version,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "User":
        return cls(
            user_id=data["user_id"],
            name=data["name"],
            role=Role(data["role"]),
            active=data["active"],
            credential_hash=data["credential_hash"],
            version=data["version"],
        )


@dataclass
class Session:
    token: str
    user_id: str
    issued_at: datetime
    expires_at: datetime

    def to_dict(self) -> dict:
        return {
            "token": self.token,
            "user_id": self.user_id,
            "issued_at": to_iso(self.issued_at),
            "expires_at": to_iso(self.expires_at),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Session":
        return cls(
            token=data["token"],
            user_id=data["user_id"],
            issued_at=from_iso(data["issued_at"]),
            expires_at=from_iso(data["expires_at"]),
        )


def hash_credential(credential: str, salt: Optional[bytes] = None) -> str:
    salt = salt if salt is not None else secrets.token_bytes(16)
    key = hashlib.scrypt(credential.encode("utf-8"), salt=salt,
                         n=_SCRYPT_N, r=_SCRYPT_R, p=_SCRYPT_P)
    return f"scrypt${salt.hex()}${key.hex()}"


def verify_credential(credential: str, stored: str) -> bool:
    try:
        scheme, salt_hex, key_hex = stored.split("$")
        if scheme != "scrypt":
            return False
        recomputed = hashlib.scrypt(credential.encode("utf-8"), salt=bytes.fromhex(salt_hex),
                                    n=_SCRYPT_N, r=_SCRYPT_R, p=_SCRYPT_P)
        return secrets.compare_digest(recomputed.hex(), key_hex)
    except ValueError:
        return False


def new_id(prefix: str) -> str:
    return f"{prefix}-{secrets.token_hex(8)}"


class AccessControl:
    """User and session management over the shared store."""

    def __init__(self, store: Store, clock: Clock, session_ttl: timedelta = SESSION_TTL):
        self.store = store
        self.clock = clock
        self.session_ttl = session_ttl

    # -- queries ---------------------------------------------------------------

    def user(self, user_id: str) -> User:
        user = self.store.get("user", user_id)
        if user is None:
            raise UnknownUser(f"unknown user {user_id!r}")
        return user

    def resolve(self, token: Optional[str]) -> Optional[Session]:
        if not token:
            return None
        return self.store.get("session", token)

    def authorize(self, session: Optional[Session], action: Action) -> Decision:
        """Total permission lookup: never raises, unknown tokens just deny."""
        if session is None:
            return Decision(False, REASON_UNKNOWN_SESSION)
        stored = self.store.get("session", session.token)
        if stored is None:
            return Decision(False, REASON_UNKNOWN_SESSION)
        if self.clock.now() >= stored.expires_at:
            return Decision(False, REASON_SESSION_EXPIRED)
        user = self.store.get("user", stored.user_id)
        if user is None or not user.active:
            return Decision(False, REASON_USER_INACTIVE)
        if not is_allowed(user.role, action):
            return Decision(False, REASON_ROLE_FORBIDDEN)
        return ALLOW

    def require(self, session: Optional[Session], action: Action) -> User:
        """authorize() or raise; returns the acting user on allow."""
        decision = self.authorize(session, action)
        if not decision.allow:
            if decision.reason in (REASON_UNKNOWN_SESSION, REASON_SESSION_EXPIRED):
                raise SessionRejected(decision.reason or REASON_UNKNOWN_SESSION)
            if decision.reason == REASON_USER_INACTIVE:
                raise InactiveUser("user is inactive")
            raise Unauthorized(f"role not permitted for {action.value}",
                               {"action": action.value, "reason": decision.reason})
        assert session is not None
        return self.user(self.store.get("session", session.token).user_id)

    # -- mutations ---------------------------------------------------------------

    def create_user(self, session: Optional[Session], name: str, role: Role,
                    credential: str) -> User:
        with self.store.lock:
            actor = self.require(session, Action.USER_CREATE)
            return self._create_user(actor.user_id, name, role, credential)

    def bootstrap_admin(self, name: str, credential: str) -> User:
        """First-run escape hatch: only valid while the user store is empty."""
        with self.store.lock:
            if self.store.kind("user"):
                raise ValidationError("bootstrap only allowed on an empty user store")
            return self._create_user("SYSTEM", name, Role.ADMIN, credential)

    def seed_user(self, name: str, role: Role, credential: str) -> User:
        """Fixture loading path; journaled with the SYSTEM actor."""
        with self.store.lock:
            return self._create_user("SYSTEM", name, role, credential)

    def _create_user(self, actor_id: str, name: str, role: Role, credential: str) -> User:
        if not name or not name.strip():
            raise ValidationError("user name must be non-empty")
        for existing in self.store.kind("user").values():
            if existing.name == name and existing.role == role:
                raise DuplicateName(f"user {name!r} with role {role.value} already exists")
        user = User(user_id=new_id("usr"), name=name, role=role, active=True,
                    credential_hash=hash_credential(credential))
        draft = AuditDraft(
            actor=actor_id, action=Action.USER_CREATE.value,
            entity_kind="user", entity_id=user.user_id,
            args={"name": name, "role": role.value},
            mutations=(Mutation("user", user.user_id, user),),
        )
        self.store.commit([draft], version_checks=[("user", user.user_id, None)])
        return user

    def set_user_active(self, session: Optional[Session], user_id: str, active: bool) -> User:
        with self.store.lock:
            actor = self.require(session, Action.USER_UPDATE)
            user = self.user(user_id)
            updated = User(user_id=user.user_id, name=user.name, role=user.role,
                           active=active, credential_hash=user.credential_hash,
                           version=user.version + 1)
            draft = AuditDraft(
                actor=actor.user_id, action=Action.USER_UPDATE.value,
                entity_kind="user", entity_id=user.user_id,
                args={"active": active},
                mutations=(Mutation("user", user.user_id, updated),),
            )
            self.store.commit([draft], version_checks=[("user", user.user_id, user.version)])
            return updated

    def login(self, name: str, credential: str) -> Session:
        with self.store.lock:
            candidates = [u for u in self.store.kind("user").values() if u.name == name]
            matched: Optional[User] = None
            for user in candidates:
                if verify_credential(credential, user.credential_hash):
                    matched = user
                    break
            if matched is None:
                raise BadCredentials("unknown user or wrong credential")
            if not matched.active:
                raise InactiveUser(f"user {name!r} is deactivated")
            now = self.clock.now()
            session = Session(
                token=secrets.token_urlsafe(32),
                user_id=matched.user_id,
                issued_at=now,
                expires_at=now + self.session_ttl,
            )
            draft = AuditDraft(
                actor=matched.user_id, action="auth.login",
                entity_kind="session", entity_id=session.token,
                args={"user_id": matched.user_id},
                mutations=(Mutation("session", session.token, session),),
            )
            self.store.commit([draft])
            return session
