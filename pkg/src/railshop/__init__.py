"""Workshop safety workflow governance engine."""

from .access import Action, Decision, PERMISSION_MATRIX, Session, User
from .clock import Clock, ManualClock, SystemClock, from_iso, to_iso
from .contracts import Contractor, ContractorRegistry, Eligibility
from .engine import EngineConfig, Workshop
from .geometry import (
    ConflictPolicy,
    ConflictReport,
    PermitView,
    Point,
    Zone,
    ZoneIndex,
    ZoneKind,
    load_zones_document,
    permit_conflicts,
    point_in_zone,
    zones_overlap,
)
from .incidents import Incident, IncidentService
from .metrics import (
    PipelineReport,
    Stage,
    StageTiming,
    compare_pipelines,
    incident_stats,
    stage_durations,
)
from .permits import Permit, PermitEngine, PermitEvent, TRANSITIONS
from .registry import MachinePlant, MachineRegistry, MaintenanceRecord
from .store import Journal, Store, load_store
from .types import (
    ApprovalStatus,
    Criticality,
    IncidentCategory,
    IncidentState,
    MachineStatus,
    PermitState,
    PermitType,
    Role,
    Severity,
)

__version__ = "0.1.0"
