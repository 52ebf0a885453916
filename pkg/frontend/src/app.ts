import { ApiClient } from "./api.js";
import { renderTrends } from "./trends.js";
import { renderWorklist } from "./worklist.js";
import type { WorklistResponse } from "./types.js";

/**
 * Dashboard controller. All state lives on the server; this class only
 * tracks which rows were worked today (optimistically, rolled back on API
 * rejection) and keeps mutations serialized: one in-flight review, and
 * day advances chained so two rapid clicks mean exactly two advances.
 */
export class App {
  private worklist: WorklistResponse | null = null;
  private doneToday = new Set<string>();
  private stale = false;
  private simMode = false;
  private reviewInFlight = false;
  private advanceChain: Promise<void> = Promise.resolve();

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
  ) {}

  async init(): Promise<void> {
    try {
      const health = await this.api.health();
      this.simMode = health.mode === "sim";
    } catch {
      this.simMode = false;
    }
    await this.loadWorklist();
  }

  async loadWorklist(): Promise<void> {
    try {
      this.worklist = await this.api.worklist();
      // server-derived, so a page reload reproduces server state exactly
      this.doneToday = new Set(
        this.worklist.entries.filter((e) => e.reviewed_today).map((e) => e.patient_id),
      );
      this.stale = false;
      this.render();
    } catch {
      this.stale = true;
      this.render("service unreachable");
    }
  }

  markReviewed(patientId: string): void {
    if (this.reviewInFlight || this.doneToday.has(patientId) || !this.worklist) return;
    this.reviewInFlight = true;
    this.doneToday.add(patientId); // optimistic: row moves to "done today"
    this.render();
    this.api
      .markReviewed(patientId, this.worklist.date)
      .then(() => {
        this.reviewInFlight = false;
        this.render();
      })
      .catch((error: unknown) => {
        this.reviewInFlight = false;
        this.doneToday.delete(patientId); // rollback, state unchanged
        this.render(error instanceof Error ? error.message : "review failed");
      });
  }

  advanceDay(): Promise<void> {
    if (!this.simMode) return Promise.resolve();
    this.advanceChain = this.advanceChain.then(async () => {
      await this.api.advanceDay();
      await this.loadWorklist();
    });
    return this.advanceChain;
  }

  async showTrends(patientId: string): Promise<void> {
    try {
      const timeline = await this.api.timeline(patientId);
      const existing = this.root.querySelector(".trends");
      existing?.remove();
      this.root.appendChild(renderTrends(timeline, () => {
        this.root.querySelector(".trends")?.remove();
      }));
    } catch (error: unknown) {
      this.render(error instanceof Error ? error.message : "timeline failed");
    }
  }

  private render(notice?: string): void {
    this.root.textContent = "";

    const header = document.createElement("header");
    const title = document.createElement("h2");
    title.className = "day";
    title.textContent = this.worklist ? `worklist for ${this.worklist.date}` : "worklist";
    header.appendChild(title);
    if (this.simMode) {
      const advance = document.createElement("button");
      advance.id = "advance-day";
      advance.textContent = "advance day";
      advance.addEventListener("click", () => void this.advanceDay());
      header.appendChild(advance);
    }
    this.root.appendChild(header);

    if (notice) {
      const banner = document.createElement("div");
      banner.className = "banner";
      banner.textContent = notice;
      const retry = document.createElement("button");
      retry.className = "retry";
      retry.textContent = "retry";
      retry.addEventListener("click", () => void this.loadWorklist());
      banner.appendChild(retry);
      this.root.appendChild(banner);
    }

    if (!this.worklist) return;
    const view = renderWorklist(this.worklist, this.doneToday, {
      onMarkReviewed: (pid) => this.markReviewed(pid),
      onShowTrends: (pid) => void this.showTrends(pid),
    });
    if (this.stale) {
      view.classList.add("stale");
      const label = document.createElement("p");
      label.className = "stale-label";
      label.textContent = "showing stale data";
      view.prepend(label);
    }
    this.root.appendChild(view);
  }
}
