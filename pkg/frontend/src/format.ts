// Pure view helpers: polygon geometry for SVG, queue partitioning, role gates.

import type { Permit, PermitState, Role, Zone, ZoneKind } from "./types.js";

export const ZONE_FILL: Record<ZoneKind, string> = {
  MACHINE_SHED: "#b3cde0",
  MAINTENANCE_BAY: "#ccebc5",
  STORAGE_AREA: "#fed9a6",
  ADMIN_SECTION: "#decbe4",
};

export function polygonPoints(zone: Zone): string {
  return zone.polygon.map(([x, y]) => `${x},${y}`).join(" ");
}

export function centroid(zone: Zone): { x: number; y: number } {
  const n = zone.polygon.length;
  let sx = 0;
  let sy = 0;
  for (const [x, y] of zone.polygon) {
    sx += x;
    sy += y;
  }
  return { x: sx / n, y: sy / n };
}

export function viewBox(zones: Zone[], margin = 2): string {
  if (zones.length === 0) return "0 0 100 100";
  const xs = zones.flatMap((z) => z.polygon.map((p) => p[0]));
  const ys = zones.flatMap((z) => z.polygon.map((p) => p[1]));
  const minX = Math.min(...xs) - margin;
  const minY = Math.min(...ys) - margin;
  const width = Math.max(...xs) - minX + margin;
  const height = Math.max(...ys) - minY + margin;
  return `${minX} ${minY} ${width} ${height}`;
}

const QUEUE_ORDER: PermitState[] = ["SUBMITTED", "APPROVED", "ACTIVE", "SUSPENDED"];

export function partitionQueue(permits: Permit[]): Map<PermitState, Permit[]> {
  const result = new Map<PermitState, Permit[]>();
  for (const state of QUEUE_ORDER) result.set(state, []);
  for (const permit of permits) {
    const bucket = result.get(permit.state);
    if (bucket) bucket.push(permit);
  }
  return result;
}

// Mirror of the server-side permission matrix rows the console needs; the
// server still enforces every action independently.
const APPROVER_ROLES: Role[] = ["SUPERVISOR", "SAFETY_OFFICER", "ADMIN"];
const ACTIVATOR_ROLES: Role[] = ["SUPERVISOR", "ADMIN"];

export function canApprove(role: Role): boolean {
  return APPROVER_ROLES.includes(role);
}

export function canActivate(role: Role): boolean {
  return ACTIVATOR_ROLES.includes(role);
}

export function shortId(id: string): string {
  return id.length > 12 ? `${id.slice(0, 12)}…` : id;
}

export function fmtWindow(from: string, to: string): string {
  const f = new Date(from);
  const t = new Date(to);
  const hh = (d: Date) =>
    `${String(d.getUTCHours()).padStart(2, "0")}:${String(d.getUTCMinutes()).padStart(2, "0")}`;
  return `${f.toISOString().slice(0, 10)} ${hh(f)}–${hh(t)} UTC`;
}
