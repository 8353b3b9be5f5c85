// Permit queue board: submitted permits with approve/reject actions, plus
// tabs for approved/active/suspended. Guard failures render the ApiError
// details; version conflicts offer a refresh instead of a silent retry.

import { ApiError } from "./api.js";
import { canActivate, canApprove, fmtWindow, partitionQueue, shortId } from "./format.js";
import type { ConsoleStore } from "./state.js";
import type { Permit, PermitEvent } from "./types.js";

export class PermitQueueView {
  onConflicts: (permitIds: string[]) => void = () => undefined;

  constructor(
    private readonly root: HTMLElement,
    private readonly store: ConsoleStore,
  ) {
    store.subscribe(() => this.render());
  }

  render(): void {
    const buckets = partitionQueue(this.store.permits());
    this.root.innerHTML = "";
    for (const [state, permits] of buckets) {
      const section = document.createElement("section");
      section.className = "queue-section";
      section.dataset.state = state;
      const heading = document.createElement("h3");
      heading.textContent = `${state} (${permits.length})`;
      section.appendChild(heading);
      for (const permit of permits) {
        section.appendChild(this.renderRow(permit));
      }
      this.root.appendChild(section);
    }
  }

  private renderRow(permit: Permit): HTMLElement {
    const row = document.createElement("div");
    row.className = "permit-row";
    row.dataset.permitId = permit.permit_id;
    const label = document.createElement("span");
    label.textContent =
      `${shortId(permit.permit_id)} ${permit.permit_type} @ ${permit.zone_id} ` +
      `· ${fmtWindow(permit.valid_from, permit.valid_to)}`;
    row.appendChild(label);

    const role = this.store.role;
    if (permit.state === "SUBMITTED" && role && canApprove(role)) {
      row.appendChild(this.actionButton(permit, "APPROVE", "approve"));
      row.appendChild(this.actionButton(permit, "REJECT", "reject"));
    }
    if (permit.state === "APPROVED" && role && canActivate(role)) {
      row.appendChild(this.actionButton(permit, "ACTIVATE", "activate"));
    }
    const notice = document.createElement("div");
    notice.className = "row-notice";
    row.appendChild(notice);
    return row;
  }

  private actionButton(permit: Permit, event: PermitEvent, label: string): HTMLButtonElement {
    const button = document.createElement("button");
    button.textContent = label;
    button.dataset.action = label;
    button.addEventListener("click", () => void this.act(permit, event));
    return button;
  }

  async act(permit: Permit, event: PermitEvent): Promise<void> {
    const optimistic = event === "APPROVE" ? "APPROVED"
      : event === "REJECT" ? "REJECTED"
      : event === "ACTIVATE" ? "ACTIVE" : permit.state;
    this.store.overlayPermit(permit.permit_id, optimistic);
    try {
      const updated = await this.store.client.transition(
        permit.permit_id, event, permit.version);
      this.store.reconcilePermit(updated);
    } catch (err) {
      this.store.dropOverlay(permit.permit_id);
      this.showError(permit.permit_id, err);
    }
  }

  private showError(permitId: string, err: unknown): void {
    const row = this.root.querySelector<HTMLElement>(
      `[data-permit-id="${permitId}"] .row-notice`);
    if (!(err instanceof ApiError)) {
      if (row) row.textContent = "request failed";
      return;
    }
    if (err.code === "VERSION_CONFLICT") {
      if (row) {
        row.textContent = "changed elsewhere — refresh to retry";
        const refresh = document.createElement("button");
        refresh.textContent = "refresh";
        refresh.addEventListener("click", () => void this.store.refresh());
        row.appendChild(refresh);
      }
      return;
    }
    if (err.code === "GUARD_VIOLATION") {
      const details = err.details as { guard?: string; conflicts?: { permit_id: string }[] };
      if (row) row.textContent = `guard ${details.guard ?? "?"} failed: ${err.message}`;
      if (details.guard === "G3" && details.conflicts) {
        this.onConflicts(details.conflicts.map((c) => c.permit_id));
      }
      return;
    }
    if (row) row.textContent = `${err.code}: ${err.message}`;
  }
}
