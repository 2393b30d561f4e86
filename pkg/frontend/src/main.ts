/**
 * Page wiring: loads `federation.json`, then routes clicks and form
 * submits to the fetch-and-render functions. All data shown comes from
 * the endpoints at render time; this file only decides when to refetch.
 */

import { assertOutcome, ExecutionPoller, startExecution, type ExecutionSnapshot } from "./execution.js";
import { exploreEntity } from "./explore.js";
import { FederationUnavailableError, loadFederation, type EndpointInfo } from "./federation.js";
import {
  escapeHtml,
  renderExecutionDashboard,
  renderFailureBanner,
  renderNeighborhood,
  renderSearchResults,
  renderToast,
} from "./render.js";
import { searchEntities } from "./search.js";
import { UiSession } from "./session.js";

interface AppState {
  session: UiSession;
  publishTarget: string;
  poller?: ExecutionPoller;
  lastSnapshot?: ExecutionSnapshot;
  highlight: Set<string>;
  staleError?: string;
  pollTimer?: number;
}

function byId(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing page element #${id}`);
  return el;
}

function showToast(message: string): void {
  const host = byId("toasts");
  const wrapper = document.createElement("div");
  wrapper.innerHTML = renderToast(message);
  const toast = wrapper.firstElementChild as HTMLElement;
  host.appendChild(toast);
  setTimeout(() => toast.remove(), 6000);
}

function renderError(message: string): void {
  byId("view").innerHTML = `<div class="banner banner-error" role="alert">${escapeHtml(message)}</div>`;
}

async function runSearch(state: AppState, keywords: string[]): Promise<void> {
  try {
    const outcome = await searchEntities(state.session.endpoints, keywords);
    byId("view").innerHTML = renderSearchResults(outcome);
  } catch (exc) {
    if (exc instanceof FederationUnavailableError) {
      renderError(`Search failed: ${exc.message}`);
    } else {
      renderError(String(exc));
    }
  }
}

async function showEntity(state: AppState, iri: string): Promise<void> {
  stopPolling(state);
  state.session.selectedEntity = iri;
  try {
    const neighborhood = await exploreEntity(state.session.endpoints, iri);
    byId("view").innerHTML = renderNeighborhood(neighborhood);
  } catch (exc) {
    renderError(`Cannot explore ${iri}: ${String(exc)}`);
  }
}

function renderDashboard(state: AppState): void {
  if (state.lastSnapshot === undefined) return;
  const options: { highlight: Set<string>; staleError?: string } = { highlight: state.highlight };
  if (state.staleError !== undefined) options.staleError = state.staleError;
  byId("view").innerHTML = renderExecutionDashboard(state.lastSnapshot, options);
}

async function pollOnce(state: AppState): Promise<void> {
  if (state.poller === undefined) return;
  const outcome = await state.poller.poll();
  if (outcome.ok && outcome.snapshot !== undefined) {
    state.lastSnapshot = outcome.snapshot;
    delete state.staleError;
    state.highlight = new Set(outcome.newlyReady.map((n) => n.task));
  } else {
    state.staleError = outcome.error ?? "poll failed";
  }
  renderDashboard(state);
}

function stopPolling(state: AppState): void {
  if (state.pollTimer !== undefined) {
    clearInterval(state.pollTimer);
    delete state.pollTimer;
  }
  delete state.poller;
}

function startPolling(state: AppState, execution: string): void {
  stopPolling(state);
  state.session.activeExecution = execution;
  state.poller = new ExecutionPoller(state.session.endpoints, execution);
  state.highlight = new Set();
  delete state.lastSnapshot;
  delete state.staleError;
  void pollOnce(state);
  state.pollTimer = window.setInterval(() => void pollOnce(state), state.session.pollInterval * 1000);
}

async function beginExecution(state: AppState, goal: string): Promise<void> {
  try {
    const execution = await startExecution(state.session.endpoints, state.publishTarget, goal);
    showToast(`Execution started: ${execution}`);
    startPolling(state, execution);
  } catch (exc) {
    showToast(`Could not start execution: ${String(exc)}`);
  }
}

async function mark(state: AppState, task: string, outcome: "succeeded" | "failed"): Promise<void> {
  const execution = state.session.activeExecution;
  if (execution === undefined) return;
  try {
    await assertOutcome(state.session.endpoints, state.publishTarget, execution, task, outcome);
    showToast(`Marked ${outcome}: ${task}`);
    await pollOnce(state);
  } catch (exc) {
    showToast(`Publish failed: ${String(exc)}`);
  }
}

function wireEvents(state: AppState): void {
  byId("search-form").addEventListener("submit", (event) => {
    event.preventDefault();
    const input = byId("search-input") as HTMLInputElement;
    const keywords = input.value.split(/\s+/).filter((k) => k.length > 0);
    if (keywords.length === 0) return;
    stopPolling(state);
    void runSearch(state, keywords);
  });

  byId("poll-interval").addEventListener("change", (event) => {
    const input = event.target as HTMLInputElement;
    try {
      state.session.pollInterval = Number(input.value);
      if (state.poller !== undefined && state.session.activeExecution !== undefined) {
        startPolling(state, state.session.activeExecution);
      }
    } catch (exc) {
      showToast(String(exc));
      input.value = String(state.session.pollInterval);
    }
  });

  byId("publish-target").addEventListener("change", (event) => {
    state.publishTarget = (event.target as HTMLSelectElement).value;
  });

  document.addEventListener("click", (event) => {
    const target = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
    if (target === null) return;
    const action = target.dataset["action"];
    if (action === "select-entity") {
      event.preventDefault();
      void showEntity(state, target.dataset["iri"] ?? "");
    } else if (action === "start-execution") {
      void beginExecution(state, target.dataset["iri"] ?? "");
    } else if (action === "mark-succeeded") {
      void mark(state, target.dataset["task"] ?? "", "succeeded");
    } else if (action === "mark-failed") {
      void mark(state, target.dataset["task"] ?? "", "failed");
    }
  });
}

function fillEndpointControls(endpoints: EndpointInfo[], publishTarget: string): void {
  const select = byId("publish-target") as HTMLSelectElement;
  select.innerHTML = endpoints
    .map(
      (ep) =>
        `<option value="${escapeHtml(ep.name)}"${ep.name === publishTarget ? " selected" : ""}>${escapeHtml(ep.name)}</option>`,
    )
    .join("");
  byId("endpoint-list").innerHTML = endpoints
    .map((ep) => `<li><strong>${escapeHtml(ep.name)}</strong> <code>${escapeHtml(ep.baseUrl)}</code></li>`)
    .join("");
}

async function bootstrap(): Promise<void> {
  let endpoints: EndpointInfo[];
  try {
    endpoints = await loadFederation("federation.json");
  } catch (exc) {
    renderError(`Cannot load federation.json: ${String(exc)}`);
    return;
  }
  const state: AppState = {
    session: new UiSession(endpoints),
    publishTarget: endpoints[0].name,
    highlight: new Set(),
  };
  (byId("poll-interval") as HTMLInputElement).value = String(state.session.pollInterval);
  fillEndpointControls(endpoints, state.publishTarget);
  wireEvents(state);
  byId("view").innerHTML =
    `<p class="empty-state">Search the federation to find know-how.</p>` +
    renderFailureBanner([]);
}

void bootstrap();
