// Console bootstrap: login, wiring between the board views, 5 s polling.

import { ApiClient, ApiError } from "./api.js";
import { IncidentForm } from "./incidents.js";
import { ProbeForm, ZoneMapView } from "./map.js";
import { PermitQueueView } from "./queue.js";
import { ConsoleStore } from "./state.js";

export interface Console {
  store: ConsoleStore;
  queue: PermitQueueView;
  map: ZoneMapView;
  incidents: IncidentForm;
  probe: ProbeForm;
}

export function buildConsole(rootEl: HTMLElement, client: ApiClient): Console {
  rootEl.innerHTML = `
    <header>
      <strong>workshop console</strong>
      <span class="whoami"></span>
    </header>
    <div class="login-panel">
      <label>name <input name="login-name" type="text"></label>
      <label>credential <input name="login-credential" type="password"></label>
      <button name="login-submit">sign in</button>
      <span class="login-error"></span>
    </div>
    <main class="board" hidden>
      <section class="panel queue-panel"></section>
      <section class="panel map-panel"></section>
      <aside class="panel side-panel">
        <div class="probe-slot"></div>
        <div class="incident-slot"></div>
      </aside>
    </main>`;

  const store = new ConsoleStore(client);
  const queue = new PermitQueueView(
    rootEl.querySelector<HTMLElement>(".queue-panel")!, store);
  const map = new ZoneMapView(
    rootEl.querySelector<HTMLElement>(".map-panel")!, store);
  const incidents = new IncidentForm(
    rootEl.querySelector<HTMLElement>(".incident-slot")!, store);
  const probe = new ProbeForm(
    rootEl.querySelector<HTMLElement>(".probe-slot")!, map,
    () => incidents.selectedZone);

  queue.onConflicts = (permitIds) => map.highlightPermits(permitIds);
  map.onZonePicked = (zoneId) => incidents.setZone(zoneId);

  const loginButton = rootEl.querySelector<HTMLButtonElement>("[name=login-submit]")!;
  loginButton.addEventListener("click", async () => {
    const name = rootEl.querySelector<HTMLInputElement>("[name=login-name]")!.value;
    const credential = rootEl.querySelector<HTMLInputElement>(
      "[name=login-credential]")!.value;
    const errorSlot = rootEl.querySelector<HTMLElement>(".login-error")!;
    try {
      const login = await client.login(name, credential);
      client.setToken(login.token);
      store.role = login.role;
      store.userName = login.name;
      rootEl.querySelector<HTMLElement>(".whoami")!.textContent =
        `${login.name} (${login.role})`;
      rootEl.querySelector<HTMLElement>(".login-panel")!.hidden = true;
      rootEl.querySelector<HTMLElement>(".board")!.hidden = false;
      await store.refresh();
      store.startPolling(5000);
    } catch (err) {
      errorSlot.textContent = err instanceof ApiError ? err.message : "login failed";
    }
  });

  return { store, queue, map, incidents, probe };
}

declare global {
  interface Window {
    railshopConsole?: Console;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  const client = new ApiClient("");
  window.railshopConsole = buildConsole(document.getElementById("app")!, client);
}
