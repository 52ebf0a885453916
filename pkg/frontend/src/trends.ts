import { sparklineSvg } from "./sparkline.js";
import type { TimelineResponse } from "./types.js";

const VITAL_LABELS: Record<string, string> = {
  weight_kg: "weight (kg)",
  sys_bp_mmhg: "systolic BP (mmHg)",
  dia_bp_mmhg: "diastolic BP (mmHg)",
  spo2_pct: "SpO2 (%)",
  hr_bpm: "heart rate (bpm)",
  wellbeing: "wellbeing (1-5)",
};

/** Per-vital sparklines with imputed points hollow and events marked. */
export function renderTrends(timeline: TimelineResponse, onClose: () => void): HTMLElement {
  const panel = document.createElement("aside");
  panel.className = "trends";

  const header = document.createElement("div");
  header.className = "trends-header";
  const title = document.createElement("h3");
  title.textContent = `patient ${timeline.patient_id}`;
  const close = document.createElement("button");
  close.className = "close";
  close.textContent = "close";
  close.addEventListener("click", onClose);
  header.append(title, close);
  panel.appendChild(header);

  if (timeline.last_review) {
    const review = document.createElement("p");
    review.className = "last-review";
    review.textContent = `last reviewed ${timeline.last_review}`;
    panel.appendChild(review);
  }

  for (const [vital, label] of Object.entries(VITAL_LABELS)) {
    const points = timeline.vitals[vital] ?? [];
    const block = document.createElement("div");
    block.className = "vital";
    block.dataset.vital = vital;
    const caption = document.createElement("span");
    caption.className = "vital-label";
    const imputedCount = points.filter((p) => p.imputed).length;
    caption.textContent = imputedCount
      ? `${label} (${imputedCount} imputed)`
      : label;
    block.appendChild(caption);
    const chart = document.createElement("div");
    chart.innerHTML = sparklineSvg(points, timeline.events);
    block.appendChild(chart);
    panel.appendChild(block);
  }
  return panel;
}
