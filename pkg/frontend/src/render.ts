/**
 * HTML renderers for the three views. All of them are pure functions
 * from fetched data to markup strings; interaction is wired up by the
 * page through `data-action` attributes, so the markup itself stays
 * testable without a browser.
 */

import type { ExecutionSnapshot, TaskStatus } from "./execution.js";
import { statusOf } from "./execution.js";
import type { Neighborhood } from "./explore.js";
import type { SearchOutcome } from "./search.js";
import { localName } from "./terms.js";

export function escapeHtml(s: string): string {
  return s
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

function entityLink(iri: string, text?: string): string {
  const shown = text ?? localName(iri);
  return `<a href="#" class="entity-link" data-action="select-entity" data-iri="${escapeHtml(iri)}" title="${escapeHtml(iri)}">${escapeHtml(shown)}</a>`;
}

/** Warning banner naming endpoints that failed to answer; empty string when none did. */
export function renderFailureBanner(failed: Array<{ name: string; reason: string }>): string {
  if (failed.length === 0) return "";
  const names = failed.map((f) => `<strong>${escapeHtml(f.name)}</strong>`).join(", ");
  const reasons = failed.map((f) => `${f.name}: ${f.reason}`).join("\n");
  return `<div class="banner banner-warning" role="alert" title="${escapeHtml(reasons)}">Some endpoints did not answer: ${names}. Results may be incomplete.</div>`;
}

export function renderToast(message: string): string {
  return `<div class="toast" role="status">${escapeHtml(message)}</div>`;
}

/** Stale-view notice shown while the latest poll has not succeeded. */
export function renderStaleNotice(error: string): string {
  return `<div class="stale-notice" role="status" title="${escapeHtml(error)}">View may be stale: the last refresh failed. Retrying…</div>`;
}

// ---------------------------------------------------------------------------
// Search
// ---------------------------------------------------------------------------

export function renderSearchResults(outcome: SearchOutcome): string {
  const banner = renderFailureBanner(outcome.failed);
  if (outcome.hits.length === 0) {
    return `${banner}<p class="empty-state">No matching entities. Try different keywords.</p>`;
  }
  const items = outcome.hits
    .map(
      (hit) =>
        `<li class="search-hit">${entityLink(hit.iri, hit.label)} <code class="iri">${escapeHtml(hit.iri)}</code></li>`,
    )
    .join("");
  return `${banner}<ul class="search-results">${items}</ul>`;
}

// ---------------------------------------------------------------------------
// Explore
// ---------------------------------------------------------------------------

function neighborSection(title: string, iris: string[]): string {
  const body =
    iris.length === 0
      ? `<p class="empty-state">none</p>`
      : `<ul>${iris.map((iri) => `<li>${entityLink(iri)}</li>`).join("")}</ul>`;
  return `<section class="neighbor-section"><h3>${escapeHtml(title)}</h3>${body}</section>`;
}

export function renderNeighborhood(n: Neighborhood): string {
  const title = n.labels.length > 0 ? n.labels[0] : localName(n.entity);
  const annotations =
    n.annotations.length === 0
      ? `<p class="empty-state">none</p>`
      : `<ul>${n.annotations
          .map(
            (iri) =>
              `<li><a href="${escapeHtml(iri)}" class="external-link" target="_blank" rel="noopener noreferrer">${escapeHtml(iri)}</a></li>`,
          )
          .join("")}</ul>`;
  return [
    `<header class="entity-header"><h2>${escapeHtml(title)}</h2><code class="iri">${escapeHtml(n.entity)}</code>`,
    `<button type="button" data-action="start-execution" data-iri="${escapeHtml(n.entity)}">Start execution</button></header>`,
    renderFailureBanner(n.failed),
    n.labels.length > 1
      ? `<p class="alt-labels">Also known as: ${n.labels.slice(1).map(escapeHtml).join("; ")}</p>`
      : "",
    neighborSection("Steps", n.steps),
    neighborSection("Part of", n.partOf),
    neighborSection("Requires", n.requires),
    neighborSection("Required by", n.requiredBy),
    neighborSection("Methods", n.methods),
    neighborSection("Method of", n.methodOf),
    `<section class="neighbor-section"><h3>Described by</h3>${annotations}</section>`,
  ].join("");
}

// ---------------------------------------------------------------------------
// Execution dashboard
// ---------------------------------------------------------------------------

const CHIP_CLASS: Record<TaskStatus, string> = {
  done: "chip-done",
  "done (derived)": "chip-derived",
  failed: "chip-failed",
  ready: "chip-ready",
  blocked: "chip-blocked",
  unknown: "chip-unknown",
};

export interface DashboardOptions {
  /** Tasks to highlight as having just become ready. */
  highlight?: Set<string>;
  /** Error message of the last failed poll; renders the stale notice. */
  staleError?: string;
}

function statusChip(status: TaskStatus, highlighted: boolean): string {
  const classes = ["chip", CHIP_CLASS[status]];
  if (highlighted) classes.push("newly-ready");
  return `<span class="${classes.join(" ")}">${escapeHtml(status)}</span>`;
}

function taskControls(task: string): string {
  return (
    `<button type="button" data-action="mark-succeeded" data-task="${escapeHtml(task)}">mark succeeded</button>` +
    `<button type="button" data-action="mark-failed" data-task="${escapeHtml(task)}">mark failed</button>`
  );
}

function unmetList(unmet: string[]): string {
  if (unmet.length === 0) return "";
  return `<span class="unmet">waiting on: ${unmet.map((iri) => entityLink(iri)).join(", ")}</span>`;
}

function renderTaskNode(
  snapshot: ExecutionSnapshot,
  task: string,
  relation: string,
  path: Set<string>,
  highlight: Set<string>,
): string {
  const status = statusOf(snapshot, task);
  const parts = [
    `<span class="relation">${escapeHtml(relation)}</span>`,
    entityLink(task),
    statusChip(status, highlight.has(task)),
    unmetList(snapshot.blocked.get(task) ?? []),
    taskControls(task),
  ];
  if (path.has(task)) {
    return `<li class="task-node task-repeat" data-task="${escapeHtml(task)}">${parts.join(" ")} <span class="cycle-note">(already shown above)</span></li>`;
  }
  const nextPath = new Set(path);
  nextPath.add(task);
  const children: string[] = [];
  for (const step of [...(snapshot.steps.get(task) ?? [])].sort()) {
    children.push(renderTaskNode(snapshot, step, "step", nextPath, highlight));
  }
  for (const method of [...(snapshot.methods.get(task) ?? [])].sort()) {
    children.push(renderTaskNode(snapshot, method, "method", nextPath, highlight));
  }
  const childList = children.length > 0 ? `<ul class="task-children">${children.join("")}</ul>` : "";
  return `<li class="task-node" data-task="${escapeHtml(task)}">${parts.join(" ")}${childList}</li>`;
}

export function renderExecutionDashboard(
  snapshot: ExecutionSnapshot,
  options: DashboardOptions = {},
): string {
  const highlight = options.highlight ?? new Set<string>();
  const stale = options.staleError !== undefined ? renderStaleNotice(options.staleError) : "";
  const banner = renderFailureBanner(snapshot.failedEndpoints);
  const warnings =
    snapshot.warnings.length > 0
      ? `<ul class="derivation-warnings">${snapshot.warnings.map((w) => `<li>${escapeHtml(w)}</li>`).join("")}</ul>`
      : "";
  const seen = new Set<string>();
  const roots = snapshot.goals
    .map((goal) => renderTaskNode(snapshot, goal, "goal", new Set(), highlight))
    .join("");
  for (const goal of snapshot.goals) collectShown(snapshot, goal, seen);
  const unplaced = [...snapshot.relevant].filter((t) => !seen.has(t)).sort();
  const rest =
    unplaced.length === 0
      ? ""
      : `<section class="other-tasks"><h3>Also relevant</h3><ul class="task-tree">${unplaced
          .map((t) => renderTaskNode(snapshot, t, "required", new Set(), highlight))
          .join("")}</ul></section>`;
  return [
    `<header class="execution-header"><h2>Execution</h2><code class="iri">${escapeHtml(snapshot.execution)}</code></header>`,
    stale,
    banner,
    warnings,
    `<ul class="task-tree">${roots}</ul>`,
    rest,
  ].join("");
}

function collectShown(snapshot: ExecutionSnapshot, task: string, seen: Set<string>): void {
  if (seen.has(task)) return;
  seen.add(task);
  for (const step of snapshot.steps.get(task) ?? []) collectShown(snapshot, step, seen);
  for (const method of snapshot.methods.get(task) ?? []) collectShown(snapshot, method, seen);
}
