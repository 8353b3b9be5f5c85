"""Tamper-evident, hash-chained audit trail.

Each entry's SHA-256 hash covers the previous entry's hash, so any mutation
of the serialized log is detectable. The hash input is a canonical byte
serialization: fields in fixed order, integers as 8-byte big-endian,
text as 4-byte-length-prefixed UTF-8, digests as raw 32-byte values.

On disk the log is newline-delimited JSON, one entry per line, with the
keys in canonical field order. Lines additionally carry the full operation
payload (the journal doubles as the persistence journal of record); the
payload is covered by ``payload_digest``, which the entry hash covers in
turn, so payload bytes are tamper-protected as well.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Iterable, Optional

from .clock import from_iso, to_iso

GENESIS_HASH = "0" * 64
SYSTEM_ACTOR = "SYSTEM"


def canonical_json(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def payload_digest(payload: dict) -> str:
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def _enc_int(n: int) -> bytes:
    return n.to_bytes(8, "big")


def _enc_text(s: str) -> bytes:
    raw = s.encode("utf-8")
    return len(raw).to_bytes(4, "big") + raw


def compute_entry_hash(seq: int, at_iso: str, actor: str, action: str,
                       entity_kind: str, entity_id: str,
                       payload_digest_hex: str, prev_hash_hex: str) -> str:
    buf = (
        _enc_int(seq)
        + _enc_text(at_iso)
        + _enc_text(actor)
        + _enc_text(action)
        + _enc_text(entity_kind)
        + _enc_text(entity_id)
        + bytes.fromhex(payload_digest_hex)
        + bytes.fromhex(prev_hash_hex)
    )
    return hashlib.sha256(buf).hexdigest()


@dataclass
class AuditEntry:
    seq: int
    at: datetime
    actor: str
    action: str
    entity_kind: str
    entity_id: str
    payload_digest: str
    prev_hash: str
    entry_hash: str
    payload: dict = field(default_factory=dict)

    @classmethod
    def build(cls, seq: int, at: datetime, actor: str, action: str,
              entity_kind: str, entity_id: str, payload: dict,
              prev_hash: str) -> "AuditEntry":
        digest = payload_digest(payload)
        entry_hash = compute_entry_hash(seq, to_iso(at), actor, action,
                                        entity_kind, entity_id, digest, prev_hash)
        return cls(seq=seq, at=at, actor=actor, action=action,
                   entity_kind=entity_kind, entity_id=entity_id,
                   payload_digest=digest, prev_hash=prev_hash,
                   entry_hash=entry_hash, payload=payload)

    def to_line(self) -> bytes:
        record = {
            "seq": self.seq,
            "at": to_iso(self.at),
            "actor": self.actor,
            "action": self.action,
            "entity": {"kind": self.entity_kind, "id": self.entity_id},
            "payload": self.payload,
            "payload_digest": self.payload_digest,
            "prev_hash": self.prev_hash,
            "entry_hash": self.entry_hash,
        }
        return (json.dumps(record, separators=(",", ":"), ensure_ascii=False) + "\n").encode("utf-8")

    def to_api_dict(self) -> dict:
        # the payload stays off the wire; the digest pins it
        return {
            "seq": self.seq,
            "at": to_iso(self.at),
            "actor": self.actor,
            "action": self.action,
            "entity": {"kind": self.entity_kind, "id": self.entity_id},
            "payload_digest": self.payload_digest,
            "prev_hash": self.prev_hash,
            "entry_hash": self.entry_hash,
        }

    @classmethod
    def from_record(cls, record: dict) -> "AuditEntry":
        entity = record["entity"]
        return cls(
            seq=record["seq"],
            at=from_iso(record["at"]),
            actor=record["actor"],
            action=record["action"],
            entity_kind=entity["kind"],
            entity_id=entity["id"],
            payload_digest=record["payload_digest"],
            prev_hash=record["prev_hash"],
            entry_hash=record["entry_hash"],
            payload=record.get("payload", {}),
        )


@dataclass(frozen=True)
class ChainReport:
    valid: bool
    entries: int
    first_bad_seq: Optional[int] = None

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"valid": self.valid, "entries": self.entries}
        if self.first_bad_seq is not None:
            out["first_bad_seq"] = self.first_bad_seq
        return out


def _verify_record(record: dict, expected_seq: int, prev_hash: str) -> bool:
    try:
        if record["seq"] != expected_seq:
            return False
        entity = record["entity"]
        digest = record["payload_digest"]
        if payload_digest(record["payload"]) != digest:
            return False
        if record["prev_hash"] != prev_hash:
            return False
        recomputed = compute_entry_hash(
            record["seq"], record["at"], record["actor"], record["action"],
            entity["kind"], entity["id"], digest, record["prev_hash"])
        return recomputed == record["entry_hash"]
    except (KeyError, TypeError, ValueError):
        return False


def verify_journal_bytes(data: bytes) -> ChainReport:
    """Recompute every hash over the serialized log; report the lowest bad seq."""
    lines = data.split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()
    prev = GENESIS_HASH
    for i, line in enumerate(lines):
        seq = i + 1
        try:
            record = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            return ChainReport(valid=False, entries=len(lines), first_bad_seq=seq)
        if not isinstance(record, dict) or not _verify_record(record, seq, prev):
            return ChainReport(valid=False, entries=len(lines), first_bad_seq=seq)
        prev = record["entry_hash"]
    return ChainReport(valid=True, entries=len(lines))


def verify_entries(entries: Iterable[AuditEntry]) -> ChainReport:
    """Verify an in-memory chain (same laws as the on-disk form)."""
    prev = GENESIS_HASH
    count = 0
    for i, entry in enumerate(entries):
        count += 1
        seq = i + 1
        ok = (
            entry.seq == seq
            and entry.prev_hash == prev
            and entry.payload_digest == payload_digest(entry.payload)
            and compute_entry_hash(seq, to_iso(entry.at), entry.actor, entry.action,
                                   entry.entity_kind, entry.entity_id,
                                   entry.payload_digest, entry.prev_hash) == entry.entry_hash
        )
        if not ok:
            return ChainReport(valid=False, entries=count, first_bad_seq=seq)
        prev = entry.entry_hash
    return ChainReport(valid=True, entries=count)


def trace(entries: Iterable[AuditEntry], entity_kind: str, entity_id: str) -> list[AuditEntry]:
    """All entries for one entity, in seq order (a subsequence of the log)."""
    return [e for e in entries if e.entity_kind == entity_kind and e.entity_id == entity_id]
