// Thin typed client over the gateway's JSON endpoints. The console performs
// no domain computation: every state change round-trips through here.

import type {
  ApiErrorPayload,
  ConflictReport,
  Contractor,
  Incident,
  IncidentCategory,
  IncidentReportResponse,
  LoginResponse,
  MachinePlant,
  Permit,
  PermitEvent,
  PermitType,
  Severity,
  Zone,
} from "./types.js";

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly details: Record<string, unknown>;

  constructor(status: number, payload: ApiErrorPayload) {
    super(payload.message);
    this.status = status;
    this.code = payload.code;
    this.details = payload.details ?? {};
  }
}

export class ApiClient {
  private token: string | null = null;

  constructor(readonly baseUrl: string = "") {}

  setToken(token: string | null): void {
    this.token = token;
  }

  get authenticated(): boolean {
    return this.token !== null;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    const response = await fetch(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    const payload = text ? JSON.parse(text) : null;
    if (!response.ok) {
      throw new ApiError(response.status, payload as ApiErrorPayload);
    }
    return payload as T;
  }

  login(name: string, credential: string): Promise<LoginResponse> {
    return this.request<LoginResponse>("POST", "/api/auth/login", { name, credential });
  }

  health(): Promise<{ status: string; seq: number }> {
    return this.request("GET", "/api/health");
  }

  zones(): Promise<{ zones: Zone[] }> {
    return this.request("GET", "/api/zones");
  }

  permits(state?: string): Promise<{ permits: Permit[] }> {
    const suffix = state ? `?state=${encodeURIComponent(state)}` : "";
    return this.request("GET", `/api/permits${suffix}`);
  }

  createPermit(body: {
    permit_type: PermitType;
    zone_id: string;
    valid_from: string;
    valid_to: string;
    description?: string;
    machine_id?: string | null;
    contractor_id?: string | null;
  }): Promise<Permit> {
    return this.request("POST", "/api/permits", body);
  }

  transition(permitId: string, event: PermitEvent, expectedVersion: number): Promise<Permit> {
    return this.request("POST", `/api/permits/${permitId}/transitions`, {
      event,
      expected_version: expectedVersion,
    });
  }

  machines(): Promise<{ machines: MachinePlant[] }> {
    return this.request("GET", "/api/machines");
  }

  contractors(): Promise<{ contractors: Contractor[] }> {
    return this.request("GET", "/api/contractors");
  }

  incidents(): Promise<{ incidents: Incident[] }> {
    return this.request("GET", "/api/incidents");
  }

  reportIncident(body: {
    title: string;
    description: string;
    severity: Severity;
    category: IncidentCategory;
    zone_id: string;
    permit_id?: string | null;
  }): Promise<IncidentReportResponse> {
    return this.request("POST", "/api/incidents", body);
  }

  probeConflicts(
    zoneId: string,
    type: PermitType,
    from: string,
    to: string,
  ): Promise<{ conflicts: ConflictReport[] }> {
    const params = new URLSearchParams({ from, to, type });
    return this.request("GET", `/api/zones/${zoneId}/conflicts?${params.toString()}`);
  }
}
