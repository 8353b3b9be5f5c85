"""Pipeline-duration analytics and incident statistics.

Stage boundaries are derived from audit timestamps:

    PERMIT_APPROVAL           permit.submit  -> permit.approve
    MACHINE_ALLOCATION        permit.approve -> permit.activate (machine-bearing permits)
    CONTRACTOR_VERIFICATION   contract.register -> first approval to APPROVED
    TASK_EXECUTION_MONITORING permit.activate -> permit.close
    INCIDENT_LOGGING          incident.report -> advance to UNDER_INVESTIGATION

Durations are minutes. A lifecycle counts only when both endpoints fall
inside the query window; incomplete lifecycles are excluded.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Iterable, Sequence

from .audit import AuditEntry
from .errors import InvalidWindow, StageMismatch, ZeroBaseline
from .types import ApprovalStatus, IncidentCategory, IncidentState


class Stage(str, Enum):
    PERMIT_APPROVAL = "PERMIT_APPROVAL"
    MACHINE_ALLOCATION = "MACHINE_ALLOCATION"
    CONTRACTOR_VERIFICATION = "CONTRACTOR_VERIFICATION"
    TASK_EXECUTION_MONITORING = "TASK_EXECUTION_MONITORING"
    INCIDENT_LOGGING = "INCIDENT_LOGGING"


@dataclass(frozen=True)
class StageTiming:
    stage: Stage
    duration_minutes: float


@dataclass(frozen=True)
class StageComparison:
    manual_minutes: float
    digital_minutes: float
    reduction_pct: float


@dataclass(frozen=True)
class PipelineReport:
    per_stage: dict[Stage, StageComparison]
    cumulative: StageComparison

    def to_dict(self) -> dict:
        return {
            "per_stage": {
                stage.value: {
                    "manual_minutes": cmp.manual_minutes,
                    "digital_minutes": cmp.digital_minutes,
                    "reduction_pct": cmp.reduction_pct,
                }
                for stage, cmp in self.per_stage.items()
            },
            "cumulative": {
                "manual_minutes": self.cumulative.manual_minutes,
                "digital_minutes": self.cumulative.digital_minutes,
                "reduction_pct": self.cumulative.reduction_pct,
            },
        }


def _minutes(start: datetime, end: datetime) -> float:
    return (end - start).total_seconds() / 60.0


def _entity_mutation(entry: AuditEntry) -> dict:
    for m in entry.payload.get("mutations", []):
        if m["kind"] == entry.entity_kind and m["id"] == entry.entity_id:
            return m.get("data", {})
    return {}


def stage_durations(entries: Sequence[AuditEntry], window_from: datetime,
                    window_to: datetime) -> dict[Stage, float]:
    """Total minutes spent per stage, summed over lifecycles completed
    inside [window_from, window_to]."""
    if window_from > window_to:
        raise InvalidWindow("window start must not exceed its end")

    permit_submit: dict[str, datetime] = {}
    permit_approve: dict[str, datetime] = {}
    permit_activate: dict[str, datetime] = {}
    permit_close: dict[str, datetime] = {}
    permit_has_machine: dict[str, bool] = {}
    contractor_register: dict[str, datetime] = {}
    contractor_approved: dict[str, datetime] = {}
    incident_report: dict[str, datetime] = {}
    incident_investigate: dict[str, datetime] = {}

    for entry in entries:
        key = entry.entity_id
        if entry.action == "permit.submit":
            permit_submit.setdefault(key, entry.at)
        elif entry.action == "permit.approve":
            permit_approve.setdefault(key, entry.at)
        elif entry.action == "permit.activate":
            permit_activate.setdefault(key, entry.at)
        elif entry.action == "permit.close":
            permit_close.setdefault(key, entry.at)
        elif entry.action == "contract.register":
            contractor_register.setdefault(key, entry.at)
        elif entry.action == "contract.approve":
            if entry.payload.get("args", {}).get("new_status") == ApprovalStatus.APPROVED.value:
                contractor_approved.setdefault(key, entry.at)
        elif entry.action == "incident.report":
            incident_report.setdefault(key, entry.at)
        elif entry.action == "incident.investigate":
            target = entry.payload.get("args", {}).get("target")
            if target == IncidentState.UNDER_INVESTIGATION.value:
                incident_investigate.setdefault(key, entry.at)
        if entry.action in ("permit.create", "permit.approve"):
            data = _entity_mutation(entry)
            if data:
                permit_has_machine[key] = data.get("machine_id") is not None

    def in_window(start: datetime, end: datetime) -> bool:
        return window_from <= start and end <= window_to

    totals = {stage: 0.0 for stage in Stage}
    for pid, submitted in permit_submit.items():
        approved = permit_approve.get(pid)
        if approved is not None and in_window(submitted, approved):
            totals[Stage.PERMIT_APPROVAL] += _minutes(submitted, approved)
    for pid, approved in permit_approve.items():
        activated = permit_activate.get(pid)
        if activated is not None and permit_has_machine.get(pid) \
                and in_window(approved, activated):
            totals[Stage.MACHINE_ALLOCATION] += _minutes(approved, activated)
    for cid, registered in contractor_register.items():
        approved = contractor_approved.get(cid)
        if approved is not None and in_window(registered, approved):
            totals[Stage.CONTRACTOR_VERIFICATION] += _minutes(registered, approved)
    for pid, activated in permit_activate.items():
        closed = permit_close.get(pid)
        if closed is not None and in_window(activated, closed):
            totals[Stage.TASK_EXECUTION_MONITORING] += _minutes(activated, closed)
    for iid, reported in incident_report.items():
        investigated = incident_investigate.get(iid)
        if investigated is not None and in_window(reported, investigated):
            totals[Stage.INCIDENT_LOGGING] += _minutes(reported, investigated)
    return totals


def _aggregate(timings: Iterable[StageTiming]) -> dict[Stage, float]:
    out: dict[Stage, float] = {}
    for t in timings:
        out[t.stage] = out.get(t.stage, 0.0) + float(t.duration_minutes)
    return out


def compare_pipelines(manual: Sequence[StageTiming],
                      digital: Sequence[StageTiming]) -> PipelineReport:
    """Per-stage and cumulative manual-vs-digital comparison.

    reduction_pct = 100 * (manual - digital) / manual. Both inputs must
    cover the same stage set and every manual duration must be positive.
    """
    manual_by = _aggregate(manual)
    digital_by = _aggregate(digital)
    if set(manual_by) != set(digital_by):
        raise StageMismatch(
            f"stage sets differ: manual={sorted(s.value for s in manual_by)} "
            f"digital={sorted(s.value for s in digital_by)}")
    per_stage: dict[Stage, StageComparison] = {}
    for stage in Stage:
        if stage not in manual_by:
            continue
        m, d = manual_by[stage], digital_by[stage]
        if m <= 0.0:
            raise ZeroBaseline(f"manual duration for {stage.value} must be positive")
        per_stage[stage] = StageComparison(
            manual_minutes=m, digital_minutes=d,
            reduction_pct=100.0 * (m - d) / m)
    total_m = sum(c.manual_minutes for c in per_stage.values())
    total_d = sum(c.digital_minutes for c in per_stage.values())
    cumulative = StageComparison(
        manual_minutes=total_m, digital_minutes=total_d,
        reduction_pct=100.0 * (total_m - total_d) / total_m if total_m > 0 else 0.0)
    return PipelineReport(per_stage=per_stage, cumulative=cumulative)


def incident_stats(incidents: Sequence) -> dict[IncidentCategory, float]:
    """Percentage of incidents per category; sums to 100 for non-empty input."""
    if not incidents:
        return {}
    counts: dict[IncidentCategory, int] = {}
    for incident in incidents:
        counts[incident.category] = counts.get(incident.category, 0) + 1
    total = len(incidents)
    return {category: 100.0 * count / total for category, count in counts.items()}
