// Console state: last fetched server snapshot plus explicit optimistic
// overlays that reconcile when the next response or poll arrives.

import type { ApiClient } from "./api.js";
import type { Incident, Permit, PermitState, Role, Zone } from "./types.js";

export interface Snapshot {
  zones: Zone[];
  permits: Permit[];
  incidents: Incident[];
}

export type Listener = (store: ConsoleStore) => void;

export class ConsoleStore {
  snapshot: Snapshot = { zones: [], permits: [], incidents: [] };
  role: Role | null = null;
  userName: string | null = null;
  degraded = false;
  private overlays = new Map<string, PermitState>();
  private listeners: Listener[] = [];
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(readonly client: ApiClient) {}

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this);
  }

  /** Server state with optimistic permit-state overlays applied. */
  permits(): Permit[] {
    return this.snapshot.permits.map((p) => {
      const overlay = this.overlays.get(p.permit_id);
      return overlay ? { ...p, state: overlay } : p;
    });
  }

  overlayPermit(permitId: string, state: PermitState): void {
    this.overlays.set(permitId, state);
    this.emit();
  }

  /** A server response for this permit replaces the optimistic guess. */
  reconcilePermit(permit: Permit): void {
    this.overlays.delete(permit.permit_id);
    const index = this.snapshot.permits.findIndex(
      (p) => p.permit_id === permit.permit_id,
    );
    if (index >= 0) this.snapshot.permits[index] = permit;
    else this.snapshot.permits.push(permit);
    this.emit();
  }

  dropOverlay(permitId: string): void {
    this.overlays.delete(permitId);
    this.emit();
  }

  async refresh(): Promise<void> {
    try {
      const [zones, permits, incidents] = await Promise.all([
        this.client.zones(),
        this.client.permits(),
        this.client.incidents(),
      ]);
      this.snapshot = {
        zones: zones.zones,
        permits: permits.permits,
        incidents: incidents.incidents,
      };
      this.overlays.clear();
      this.degraded = false;
    } catch (err) {
      // degraded read-only mode: keep showing the last snapshot
      this.degraded = true;
    }
    this.emit();
  }

  startPolling(intervalMs = 5000): void {
    this.stopPolling();
    this.timer = setInterval(() => void this.refresh(), intervalMs);
  }

  stopPolling(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
