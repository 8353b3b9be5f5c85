// Zone map: vector polygons colored by kind, overlays for active permits
// and open incidents, plus the what-if conflict probe backed by the
// dry-run endpoint.

import { ApiError } from "./api.js";
import { ZONE_FILL, centroid, polygonPoints, viewBox } from "./format.js";
import type { ConsoleStore } from "./state.js";
import type { PermitType, Zone } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export class ZoneMapView {
  onZonePicked: (zoneId: string) => void = () => undefined;
  private highlightedZones = new Set<string>();
  private conflictZones = new Set<string>();

  constructor(
    private readonly root: HTMLElement,
    private readonly store: ConsoleStore,
  ) {
    store.subscribe(() => this.render());
  }

  /** Highlight the zones of the given permits (used for G3 failures). */
  highlightPermits(permitIds: string[]): void {
    this.highlightedZones = new Set(
      this.store.permits()
        .filter((p) => permitIds.includes(p.permit_id))
        .map((p) => p.zone_id),
    );
    this.render();
  }

  paintConflicts(zoneIds: string[]): void {
    this.conflictZones = new Set(zoneIds);
    this.render();
  }

  async probe(zoneId: string, type: PermitType, from: string, to: string): Promise<string[]> {
    const result = await this.store.client.probeConflicts(zoneId, type, from, to);
    const permits = this.store.permits();
    const zones = result.conflicts
      .map((c) => permits.find((p) => p.permit_id === c.permit_id)?.zone_id)
      .filter((z): z is string => z !== undefined);
    this.paintConflicts(zones.concat(result.conflicts.length > 0 ? [zoneId] : []));
    return result.conflicts.map((c) => `${c.permit_id} (${c.rule})`);
  }

  render(): void {
    const zones = this.store.snapshot.zones;
    this.root.innerHTML = "";
    if (this.store.degraded) {
      const banner = document.createElement("div");
      banner.className = "degraded-banner";
      banner.textContent = "API unreachable — read-only view of the last snapshot";
      this.root.appendChild(banner);
    }
    const svg = document.createElementNS(SVG_NS, "svg");
    svg.setAttribute("viewBox", viewBox(zones));
    svg.setAttribute("class", "zone-map");

    const activeByZone = new Map<string, number>();
    for (const permit of this.store.permits()) {
      if (permit.state === "ACTIVE") {
        activeByZone.set(permit.zone_id, (activeByZone.get(permit.zone_id) ?? 0) + 1);
      }
    }
    const openIncidents = this.store.snapshot.incidents.filter(
      (i) => i.state !== "CLOSED");

    for (const zone of zones) {
      svg.appendChild(this.renderZone(zone, activeByZone.get(zone.zone_id) ?? 0));
    }
    for (const incident of openIncidents) {
      const zone = zones.find((z) => z.zone_id === incident.zone_id);
      if (!zone) continue;
      const { x, y } = centroid(zone);
      const marker = document.createElementNS(SVG_NS, "circle");
      marker.setAttribute("cx", String(x));
      marker.setAttribute("cy", String(y));
      marker.setAttribute("r", "0.8");
      marker.setAttribute("class", `incident-marker severity-${incident.severity}`);
      marker.dataset.incidentId = incident.incident_id;
      svg.appendChild(marker);
    }
    this.root.appendChild(svg);
  }

  private renderZone(zone: Zone, activeCount: number): SVGElement {
    const group = document.createElementNS(SVG_NS, "g");
    const polygon = document.createElementNS(SVG_NS, "polygon");
    polygon.setAttribute("points", polygonPoints(zone));
    polygon.setAttribute("fill", ZONE_FILL[zone.kind]);
    polygon.setAttribute("stroke", "#333");
    polygon.setAttribute("stroke-width", "0.15");
    polygon.dataset.zoneId = zone.zone_id;
    let klass = "zone";
    if (activeCount > 0) klass += " zone-active";
    if (this.highlightedZones.has(zone.zone_id)) klass += " zone-highlight";
    if (this.conflictZones.has(zone.zone_id)) {
      klass += " zone-conflict";
      polygon.setAttribute("fill", "#fbb4ae");
    }
    polygon.setAttribute("class", klass);
    polygon.addEventListener("click", () => this.onZonePicked(zone.zone_id));
    group.appendChild(polygon);

    const { x, y } = centroid(zone);
    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", String(x));
    label.setAttribute("y", String(y));
    label.setAttribute("class", "zone-label");
    label.setAttribute("font-size", "1");
    label.setAttribute("text-anchor", "middle");
    label.textContent = activeCount > 0
      ? `${zone.zone_id} ⚒${activeCount}` : zone.zone_id;
    group.appendChild(label);
    return group;
  }
}

export class ProbeForm {
  constructor(
    private readonly root: HTMLElement,
    private readonly map: ZoneMapView,
    private readonly getSelectedZone: () => string | null,
  ) {
    this.render();
  }

  private render(): void {
    this.root.innerHTML = `
      <h3>What-if probe</h3>
      <label>type <select name="probe-type">
        <option>HOT_WORK</option><option>ELECTRICAL</option>
        <option>CONFINED_SPACE</option><option>WORKING_AT_HEIGHT</option>
        <option>GENERAL</option>
      </select></label>
      <label>from <input name="probe-from" type="text" placeholder="ISO timestamp"></label>
      <label>to <input name="probe-to" type="text" placeholder="ISO timestamp"></label>
      <button name="probe-run">probe</button>
      <div class="probe-result"></div>`;
    const button = this.root.querySelector<HTMLButtonElement>("[name=probe-run]")!;
    button.addEventListener("click", () => void this.run());
  }

  async run(): Promise<void> {
    const result = this.root.querySelector<HTMLElement>(".probe-result")!;
    const zone = this.getSelectedZone();
    if (!zone) {
      result.textContent = "pick a zone on the map first";
      return;
    }
    const type = this.root.querySelector<HTMLSelectElement>("[name=probe-type]")!.value;
    const from = this.root.querySelector<HTMLInputElement>("[name=probe-from]")!.value;
    const to = this.root.querySelector<HTMLInputElement>("[name=probe-to]")!.value;
    try {
      const conflicts = await this.map.probe(zone, type as PermitType, from, to);
      result.textContent = conflicts.length === 0
        ? `no conflicts for ${type} in ${zone}`
        : `conflicts: ${conflicts.join(", ")}`;
      result.dataset.conflictCount = String(conflicts.length);
    } catch (err) {
      result.textContent = err instanceof ApiError
        ? `${err.code}: ${err.message}` : "probe failed";
    }
  }
}
