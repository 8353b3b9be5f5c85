"""Shared fixtures: a fully seeded engine rig with one user per role."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

import pytest

from railshop.access import Session, User
from railshop.clock import ManualClock
from railshop.contracts import Contractor
from railshop.engine import EngineConfig, Workshop
from railshop.registry import MachinePlant
from railshop.types import Role

T0 = datetime(2026, 3, 2, 8, 0, tzinfo=timezone.utc)

PASSWORDS = {role: f"pw-{role.value.lower()}" for role in Role}

ZONES_DOC = {
    "zones": [
        {"zone_id": "Z1", "name": "Machine Shed 1", "kind": "MACHINE_SHED",
         "polygon": [[0, 0], [10, 0], [10, 10], [0, 10]]},
        {"zone_id": "Z2", "name": "Machine Shed 2", "kind": "MACHINE_SHED",
         "polygon": [[10, 0], [20, 0], [20, 10], [10, 10]]},
        {"zone_id": "Z3", "name": "Maintenance Bay", "kind": "MAINTENANCE_BAY",
         "polygon": [[30, 30], [40, 30], [40, 40], [30, 40]]},
        {"zone_id": "ZS", "name": "Storage", "kind": "STORAGE_AREA",
         "polygon": [[0, 20], [10, 20], [10, 30], [0, 30]]},
        {"zone_id": "ZA", "name": "Admin Block", "kind": "ADMIN_SECTION",
         "polygon": [[50, 20], [60, 20], [60, 30], [50, 30]]},
    ]
}

SEED_FIXTURE = {
    "users": [
        {"name": "Admin One", "role": "ADMIN", "credential": PASSWORDS[Role.ADMIN]},
        {"name": "Sup One", "role": "SUPERVISOR", "credential": PASSWORDS[Role.SUPERVISOR]},
        {"name": "Safety One", "role": "SAFETY_OFFICER", "credential": PASSWORDS[Role.SAFETY_OFFICER]},
        {"name": "Eng One", "role": "ENGINEER", "credential": PASSWORDS[Role.ENGINEER]},
        {"name": "Tech One", "role": "TECHNICIAN", "credential": PASSWORDS[Role.TECHNICIAN]},
        {"name": "Con One", "role": "CONTRACTOR", "credential": PASSWORDS[Role.CONTRACTOR]},
        {"name": "Tech Requester", "role": "TECHNICIAN", "credential": "pw-requester"},
    ],
    "machines": [
        {"asset_code": "LATHE-042", "manufacture": {"maker": "HMT", "year": 2009},
         "classification": "heavy lathe", "criticality": "HIGH", "zone_id": "Z1"},
        {"asset_code": "DRILL-007", "manufacture": {"maker": "BFW", "year": 2015},
         "classification": "radial drill", "criticality": "LOW", "zone_id": "Z2"},
    ],
    "contractors": [
        {"vendor_code": "VC-001", "name": "Apex Industrial Services",
         "work_categories": ["HOT_WORK", "ELECTRICAL", "GENERAL"],
         "certification": {"cert_id": "CERT-9", "valid_from": "2026-01-01T00:00:00.000Z",
                           "valid_to": "2027-01-01T00:00:00.000Z"},
         "safety_rating": 4, "workforce_size": 25, "approval_status": "APPROVED"},
    ],
}


@dataclass
class Rig:
    shop: Workshop
    clock: ManualClock
    users: dict[Role, User]
    sessions: dict[Role, Session]
    requester: User
    requester_session: Session
    machine: MachinePlant
    low_machine: MachinePlant
    contractor: Contractor

    def login(self, role: Role) -> Session:
        return self.shop.access.login(self.users[role].name, PASSWORDS[role])

    def refresh_machine(self) -> MachinePlant:
        return self.shop.registry.machine(self.machine.machine_id)


def build_rig(journal_path=None, config: EngineConfig | None = None,
              start: datetime = T0) -> Rig:
    clock = ManualClock(start)
    if journal_path is None:
        shop = Workshop.in_memory(clock=clock, config=config)
    else:
        import os

        from railshop.store import Journal, Store

        store = Store(journal=Journal(str(journal_path)), clock=clock)
        config = config or EngineConfig()
        config.data_dir = os.path.dirname(str(journal_path))
        shop = Workshop(store, clock=clock, config=config)
    shop.load_zones(ZONES_DOC)
    shop.seed(SEED_FIXTURE)

    users: dict[Role, User] = {}
    sessions: dict[Role, Session] = {}
    all_users = list(shop.store.kind("user").values())
    for role in Role:
        user = next(u for u in all_users if u.role == role and u.name != "Tech Requester")
        users[role] = user
        sessions[role] = shop.access.login(user.name, PASSWORDS[role])
    requester = next(u for u in all_users if u.name == "Tech Requester")
    requester_session = shop.access.login("Tech Requester", "pw-requester")

    machines = {m.asset_code: m for m in shop.store.kind("machine").values()}
    contractor = next(iter(shop.store.kind("contractor").values()))
    return Rig(shop=shop, clock=clock, users=users, sessions=sessions,
               requester=requester, requester_session=requester_session,
               machine=machines["LATHE-042"], low_machine=machines["DRILL-007"],
               contractor=contractor)


@pytest.fixture()
def rig() -> Rig:
    return build_rig()


@pytest.fixture()
def disk_rig(tmp_path) -> Rig:
    return build_rig(journal_path=tmp_path / "journal.ndjson")
