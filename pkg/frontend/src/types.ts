// Client-side mirrors of the gateway's JSON representations.

export type Role =
  | "ADMIN"
  | "SUPERVISOR"
  | "SAFETY_OFFICER"
  | "ENGINEER"
  | "TECHNICIAN"
  | "CONTRACTOR";

export type PermitType =
  | "HOT_WORK"
  | "ELECTRICAL"
  | "CONFINED_SPACE"
  | "WORKING_AT_HEIGHT"
  | "GENERAL";

export type PermitState =
  | "DRAFT"
  | "SUBMITTED"
  | "APPROVED"
  | "ACTIVE"
  | "SUSPENDED"
  | "CLOSED"
  | "REJECTED"
  | "EXPIRED"
  | "CANCELLED";

export type PermitEvent =
  | "SUBMIT"
  | "APPROVE"
  | "REJECT"
  | "ACTIVATE"
  | "SUSPEND"
  | "RESUME"
  | "CLOSE"
  | "CANCEL";

export type Severity = "MINOR" | "MAJOR" | "FATAL";

export type IncidentCategory =
  | "LACERATION"
  | "ABRASION"
  | "BURN"
  | "FALL"
  | "ELECTRIC_SHOCK"
  | "OTHER";

export type IncidentState =
  | "REPORTED"
  | "UNDER_INVESTIGATION"
  | "CORRECTIVE_ACTION"
  | "CLOSED";

export type ZoneKind =
  | "MACHINE_SHED"
  | "MAINTENANCE_BAY"
  | "STORAGE_AREA"
  | "ADMIN_SECTION";

export interface HistoryStep {
  from: string;
  to: string;
  event: string;
  actor: string;
  at: string;
}

export interface Permit {
  permit_id: string;
  permit_type: PermitType;
  requester_id: string;
  zone_id: string;
  description: string;
  valid_from: string;
  valid_to: string;
  state: PermitState;
  machine_id: string | null;
  contractor_id: string | null;
  state_history: HistoryStep[];
  version: number;
}

export interface Zone {
  zone_id: string;
  name: string;
  kind: ZoneKind;
  polygon: [number, number][];
}

export interface MachinePlant {
  machine_id: string;
  asset_code: string;
  manufacture: { maker: string; year: number };
  classification: string;
  criticality: "LOW" | "MEDIUM" | "HIGH";
  status: "OPERATIONAL" | "UNDER_MAINTENANCE" | "OUT_OF_SERVICE";
  zone_id: string;
  version: number;
}

export interface Contractor {
  contractor_id: string;
  vendor_code: string;
  name: string;
  work_categories: PermitType[];
  certification: { cert_id: string; valid_from: string; valid_to: string };
  safety_rating: number;
  approval_status: "PENDING" | "APPROVED" | "SUSPENDED" | "REVOKED";
  workforce_size: number;
  version: number;
}

export interface Incident {
  incident_id: string;
  title: string;
  description: string;
  severity: Severity;
  category: IncidentCategory;
  zone_id: string;
  reported_by: string;
  reported_at: string;
  state: IncidentState;
  permit_id: string | null;
  corrective_actions: { text: string; at: string; by: string }[];
  version: number;
}

export interface ConflictReport {
  permit_id: string;
  rule: string;
}

export interface LoginResponse {
  token: string;
  expires_at: string;
  user_id: string;
  name: string;
  role: Role;
}

export interface IncidentReportResponse {
  incident: Incident;
  suspended_permits: string[];
}

export interface ApiErrorPayload {
  code: string;
  message: string;
  details?: Record<string, unknown>;
}
