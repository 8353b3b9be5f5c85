"""Durable entity store: in-memory state + append-only journal + snapshots.

The journal IS the audit log (one stream, dual purpose). A commit appends
one or more audit entries — each carrying the entity mutations it caused —
in a single write, then applies the mutations to memory. Nothing becomes
visible unless the journal write succeeded, and anything the journal holds
is reproducible by replay, which is what the crash-recovery tests check.

Entity state lives in plain dicts keyed kind → id → dataclass instance.
Mutated entities are always fresh instances (copy-on-write discipline), so
readers holding references never observe half-applied changes.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Optional, Sequence

from .audit import AuditEntry, GENESIS_HASH, canonical_json, verify_journal_bytes
from .clock import Clock, SystemClock, to_iso
from .errors import CorruptJournal, SnapshotJournalGap, ValidationError, VersionConflict

SNAPSHOT_FORMAT = 1


class CrashInjected(RuntimeError):
    """Raised by test hooks to simulate a process death mid-commit."""


@dataclass(frozen=True)
class Mutation:
    kind: str
    entity_id: str
    entity: Any  # must expose to_dict()


@dataclass(frozen=True)
class AuditDraft:
    actor: str
    action: str
    entity_kind: str
    entity_id: str
    args: dict
    mutations: tuple[Mutation, ...] = ()

    def payload(self) -> dict:
        return {
            "args": self.args,
            "mutations": [
                {"kind": m.kind, "id": m.entity_id, "data": m.entity.to_dict()}
                for m in self.mutations
            ],
        }


class Journal:
    """Append-only NDJSON file. Each commit's lines go out in one write."""

    def __init__(self, path: Optional[str], fsync: bool = False):
        self.path = path
        self.fsync = fsync
        # test hooks — when set, raise CrashInjected at the given stage
        self.crash_before_write = False
        self.crash_after_write = False
        self._fh = open(path, "ab") if path else None

    def append(self, lines: Sequence[bytes]) -> None:
        if self.crash_before_write:
            raise CrashInjected("crash injected before journal write")
        if self._fh is not None:
            self._fh.write(b"".join(lines))
            self._fh.flush()
            if self.fsync:
                os.fsync(self._fh.fileno())
        if self.crash_after_write:
            raise CrashInjected("crash injected after journal write")

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


class Store:
    """Single-writer committed state. All mutations funnel through commit()."""

    def __init__(self, journal: Optional[Journal] = None, clock: Optional[Clock] = None):
        self.clock = clock or SystemClock()
        self.journal = journal or Journal(None)
        self.state: dict[str, dict[str, Any]] = {}
        self.entries: list[AuditEntry] = []
        self.tip = GENESIS_HASH
        self.lock = threading.RLock()
        # called as (kind, entity_id, entity) after each applied mutation;
        # services hang derived indexes off this single choke point
        self.observers: list[Callable[[str, str, Any], None]] = []
        # test hook: die after the commit fully applied (caller never sees success)
        self.crash_after_apply = False

    # -- reads ---------------------------------------------------------------

    def kind(self, kind: str) -> dict[str, Any]:
        return self.state.setdefault(kind, {})

    def get(self, kind: str, entity_id: str) -> Optional[Any]:
        return self.state.get(kind, {}).get(entity_id)

    def last_seq(self) -> int:
        return len(self.entries)

    # -- commit ----------------------------------------------------------------

    def commit(self, drafts: Sequence[AuditDraft],
               version_checks: Iterable[tuple[str, str, Optional[int]]] = ()) -> int:
        """Apply all drafts' mutations and append their audit entries atomically.

        ``version_checks`` holds (kind, id, expected_version) tuples; expected
        None asserts the entity does not exist yet. Any stale check aborts the
        whole set. Returns the seq of the first appended entry.
        """
        if not drafts:
            raise ValidationError("commit requires at least one audit draft")
        with self.lock:
            for kind, entity_id, expected in version_checks:
                current = self.get(kind, entity_id)
                if expected is None:
                    if current is not None:
                        raise VersionConflict(f"{kind} {entity_id} already exists")
                else:
                    actual = getattr(current, "version", None)
                    if current is None or actual != expected:
                        raise VersionConflict(
                            f"{kind} {entity_id} expected version {expected}, found {actual}")
            at = self.clock.now()
            seq = len(self.entries) + 1
            prev = self.tip
            entries = []
            for i, draft in enumerate(drafts):
                entry = AuditEntry.build(
                    seq=seq + i, at=at, actor=draft.actor, action=draft.action,
                    entity_kind=draft.entity_kind, entity_id=draft.entity_id,
                    payload=draft.payload(), prev_hash=prev)
                entries.append(entry)
                prev = entry.entry_hash
            self.journal.append([e.to_line() for e in entries])
            for draft in drafts:
                for m in draft.mutations:
                    self.kind(m.kind)[m.entity_id] = m.entity
                    for observe in self.observers:
                        observe(m.kind, m.entity_id, m.entity)
            self.entries.extend(entries)
            self.tip = prev
            if self.crash_after_apply:
                raise CrashInjected("crash injected after commit applied")
            return seq

    # -- serialization ---------------------------------------------------------

    def export_state(self) -> dict:
        """Canonical serialized form of all entity stores (deep-equality probe)."""
        return {
            kind: {eid: entity.to_dict() for eid, entity in table.items()}
            for kind, table in sorted(self.state.items())
            if table
        }

    def write_snapshot(self, path: str) -> dict:
        with self.lock:
            doc = {
                "format": SNAPSHOT_FORMAT,
                "created_at": to_iso(self.clock.now()),
                "last_seq": self.last_seq(),
                "version_vector": {kind: len(table) for kind, table in sorted(self.state.items()) if table},
                "entities": self.export_state(),
            }
        tmp = path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(canonical_json(doc))
        os.replace(tmp, path)
        return doc


EntityCodec = dict[str, Callable[[dict], Any]]


def _apply_record_mutations(state: dict[str, dict[str, Any]], record_payload: dict,
                            codec: EntityCodec, seq: int) -> None:
    for m in record_payload.get("mutations", []):
        build = codec.get(m["kind"])
        if build is None:
            raise CorruptJournal(seq, f"journal names unknown entity kind {m['kind']!r}")
        state.setdefault(m["kind"], {})[m["id"]] = build(m["data"])


def load_store(journal_path: str, codec: EntityCodec,
               snapshot_path: Optional[str] = None,
               clock: Optional[Clock] = None) -> Store:
    """Rebuild a store from snapshot ⊕ journal replay.

    Refuses to load when the chain does not verify or when the snapshot
    references entries the journal no longer covers.
    """
    data = b""
    if os.path.exists(journal_path):
        with open(journal_path, "rb") as fh:
            data = fh.read()
    report = verify_journal_bytes(data)
    if not report.valid:
        raise CorruptJournal(report.first_bad_seq or 0)

    records = []
    for line in data.split(b"\n"):
        if line:
            records.append(json.loads(line.decode("utf-8")))

    state: dict[str, dict[str, Any]] = {}
    replay_from = 0
    if snapshot_path and os.path.exists(snapshot_path):
        with open(snapshot_path, "r", encoding="utf-8") as fh:
            snap = json.load(fh)
        if snap.get("format") != SNAPSHOT_FORMAT:
            raise ValidationError(f"unsupported snapshot format {snap.get('format')!r}")
        last_seq = int(snap["last_seq"])
        if last_seq > len(records):
            raise SnapshotJournalGap(
                f"snapshot covers seq {last_seq} but journal ends at {len(records)}")
        for kind, table in snap.get("entities", {}).items():
            build = codec.get(kind)
            if build is None:
                raise ValidationError(f"snapshot names unknown entity kind {kind!r}")
            state[kind] = {eid: build(item) for eid, item in table.items()}
        declared = snap.get("version_vector", {})
        actual = {kind: len(table) for kind, table in state.items() if table}
        if declared != actual:
            raise ValidationError("snapshot version_vector does not match its entities")
        replay_from = last_seq

    for record in records[replay_from:]:
        _apply_record_mutations(state, record["payload"], codec, record["seq"])

    store = Store(journal=Journal(journal_path), clock=clock)
    store.state = state
    store.entries = [AuditEntry.from_record(r) for r in records]
    store.tip = store.entries[-1].entry_hash if store.entries else GENESIS_HASH
    return store
