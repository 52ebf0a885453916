import type { WorklistEntry, WorklistResponse } from "./types.js";

export interface WorklistHandlers {
  onMarkReviewed: (patientId: string) => void;
  onShowTrends: (patientId: string) => void;
}

function explanationText(entry: WorklistEntry): string {
  const { kind, items } = entry.explanation;
  if (kind === "no_data") return "no complete data";
  if (items.length === 0) return kind === "fired_rules" ? "no rules fired" : "";
  const label = kind === "fired_rules" ? "fired" : "top features (global)";
  return `${label}: ${items.join(", ")}`;
}

function entryRow(entry: WorklistEntry, handlers: WorklistHandlers, done: boolean): HTMLTableRowElement {
  const row = document.createElement("tr");
  row.className = done ? "done" : entry.overdue ? "overdue" : "";
  row.dataset.patient = entry.patient_id;
  // byte-faithful to the API response: never re-scored, never re-sorted
  row.dataset.risk = String(entry.risk);

  const id = document.createElement("td");
  id.className = "pid";
  const link = document.createElement("a");
  link.href = "#";
  link.textContent = entry.patient_id;
  link.addEventListener("click", (ev) => {
    ev.preventDefault();
    handlers.onShowTrends(entry.patient_id);
  });
  id.appendChild(link);

  const risk = document.createElement("td");
  risk.className = "risk";
  const bar = document.createElement("div");
  bar.className = "risk-bar";
  const fill = document.createElement("div");
  fill.className = "risk-fill";
  fill.style.width = `${Math.round(entry.risk * 100)}%`;
  bar.appendChild(fill);
  const value = document.createElement("span");
  value.className = "risk-value";
  value.textContent = String(entry.risk);
  risk.append(bar, value);

  const since = document.createElement("td");
  since.className = "since";
  since.textContent = `${entry.days_since_review}d`;
  if (entry.overdue) {
    const badge = document.createElement("span");
    badge.className = "badge overdue-badge";
    badge.textContent = `overdue ${entry.days_since_review}d`;
    since.appendChild(badge);
  }

  const why = document.createElement("td");
  why.className = "why";
  why.textContent = explanationText(entry);

  const action = document.createElement("td");
  action.className = "action";
  if (done) {
    action.textContent = "reviewed today";
  } else {
    const button = document.createElement("button");
    button.textContent = "mark reviewed";
    button.addEventListener("click", () => handlers.onMarkReviewed(entry.patient_id));
    action.appendChild(button);
  }

  row.append(id, risk, since, why, action);
  return row;
}

function table(rows: HTMLTableRowElement[]): HTMLTableElement {
  const element = document.createElement("table");
  element.className = "worklist";
  const head = document.createElement("tr");
  for (const title of ["patient", "risk", "since review", "signal", ""]) {
    const th = document.createElement("th");
    th.textContent = title;
    head.appendChild(th);
  }
  element.appendChild(head);
  for (const row of rows) element.appendChild(row);
  return element;
}

/**
 * Render one day's queue. Entries appear exactly in API order; rows the
 * practitioner already worked today move to a separate "done" section.
 */
export function renderWorklist(
  response: WorklistResponse,
  doneToday: ReadonlySet<string>,
  handlers: WorklistHandlers,
): HTMLElement {
  const container = document.createElement("section");
  container.className = "worklist-view";

  const meta = document.createElement("div");
  meta.className = "worklist-meta";
  const scorerTag = response.scorer === "model" && response.model_id
    ? `model ${response.model_id}`
    : response.scorer;
  meta.textContent =
    `scored by ${scorerTag} | capacity ${response.capacity} | ` +
    `coverage every ${response.coverage_days}d (${response.coverage_slots_used} promoted)`;
  container.appendChild(meta);

  const active = response.entries.filter((e) => !doneToday.has(e.patient_id));
  const done = response.entries.filter((e) => doneToday.has(e.patient_id));

  if (active.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty";
    empty.textContent = done.length ? "queue cleared for today" : "no patients due";
    container.appendChild(empty);
  } else {
    container.appendChild(table(active.map((e) => entryRow(e, handlers, false))));
  }

  if (done.length > 0) {
    const heading = document.createElement("h3");
    heading.textContent = `done today (${done.length})`;
    container.appendChild(heading);
    const section = table(done.map((e) => entryRow(e, handlers, true)));
    section.classList.add("done-table");
    container.appendChild(section);
  }
  return container;
}
