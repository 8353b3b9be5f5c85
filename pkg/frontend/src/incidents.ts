// Incident submission form. Severity and category come from the closed
// enums, the zone is picked on the map, and client-side checks mirror the
// server rules before anything is sent. MAJOR/FATAL responses show the
// permits the server suspended.

import { ApiError } from "./api.js";
import type { ConsoleStore } from "./state.js";
import type { IncidentCategory, Severity } from "./types.js";

const SEVERITIES: Severity[] = ["MINOR", "MAJOR", "FATAL"];
const CATEGORIES: IncidentCategory[] = [
  "LACERATION", "ABRASION", "BURN", "FALL", "ELECTRIC_SHOCK", "OTHER",
];

export class IncidentForm {
  selectedZone: string | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly store: ConsoleStore,
  ) {
    this.render();
  }

  setZone(zoneId: string): void {
    this.selectedZone = zoneId;
    const slot = this.root.querySelector<HTMLElement>(".incident-zone");
    if (slot) slot.textContent = zoneId;
  }

  private render(): void {
    this.root.innerHTML = `
      <h3>Report incident</h3>
      <label>title <input name="incident-title" type="text"></label>
      <label>description <input name="incident-description" type="text"></label>
      <label>severity <select name="incident-severity">
        ${SEVERITIES.map((s) => `<option>${s}</option>`).join("")}
      </select></label>
      <label>category <select name="incident-category">
        ${CATEGORIES.map((c) => `<option>${c}</option>`).join("")}
      </select></label>
      <div>zone (click the map): <span class="incident-zone">none</span></div>
      <label>linked permit <input name="incident-permit" type="text" placeholder="optional id"></label>
      <button name="incident-submit">submit</button>
      <div class="incident-validation"></div>
      <div class="incident-result"></div>`;
    this.root.querySelector<HTMLButtonElement>("[name=incident-submit]")!
      .addEventListener("click", () => void this.submit());
  }

  private value(name: string): string {
    return this.root.querySelector<HTMLInputElement | HTMLSelectElement>(
      `[name=${name}]`)!.value.trim();
  }

  validate(): string | null {
    if (!this.value("incident-title")) return "title is required";
    if (!this.selectedZone) return "pick a zone on the map";
    return null;
  }

  async submit(): Promise<void> {
    const validation = this.root.querySelector<HTMLElement>(".incident-validation")!;
    const result = this.root.querySelector<HTMLElement>(".incident-result")!;
    validation.textContent = "";
    const problem = this.validate();
    if (problem) {
      validation.textContent = problem;
      return;
    }
    try {
      const response = await this.store.client.reportIncident({
        title: this.value("incident-title"),
        description: this.value("incident-description"),
        severity: this.value("incident-severity") as Severity,
        category: this.value("incident-category") as IncidentCategory,
        zone_id: this.selectedZone!,
        permit_id: this.value("incident-permit") || null,
      });
      if (response.suspended_permits.length > 0) {
        result.textContent =
          `reported ${response.incident.incident_id}; suspended permits: ` +
          response.suspended_permits.join(", ");
      } else {
        result.textContent = `reported ${response.incident.incident_id}`;
      }
      result.dataset.suspended = JSON.stringify(response.suspended_permits);
      await this.store.refresh();
    } catch (err) {
      result.textContent = err instanceof ApiError
        ? `${err.code}: ${err.message}` : "report failed";
    }
  }
}
