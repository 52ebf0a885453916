import type { TimelineResponse, WorklistResponse } from "../src/types.js";

/** A realistic worklist payload with full-precision risk scores. */
export const WORKLIST_FIXTURE: WorklistResponse = {
  date: "2024-02-05",
  scorer: "model",
  model_id: "model-0001",
  capacity: 5,
  coverage_days: 14,
  coverage_slots_used: 1,
  entries: [
    {
      patient_id: "p0007",
      risk: 0.12000000000000002,
      days_since_review: 15,
      overdue: true,
      reviewed_today: false,
      explanation: { kind: "top_features", items: ["wellbeing", "weight_diff_3d", "hr_bpm"] },
    },
    {
      patient_id: "p0002",
      risk: 0.8418174567409796,
      days_since_review: 3,
      overdue: false,
      reviewed_today: false,
      explanation: { kind: "top_features", items: ["wellbeing", "weight_diff_3d", "hr_bpm"] },
    },
    {
      patient_id: "p0011",
      risk: 0.307692307692307,
      days_since_review: 1,
      overdue: false,
      reviewed_today: false,
      explanation: { kind: "fired_rules", items: ["poor_wellbeing"] },
    },
  ],
};

export const TIMELINE_FIXTURE: TimelineResponse = {
  patient_id: "p0002",
  profile: { age: 71, gender: "M", nyha_class: "II" },
  vitals: {
    weight_kg: [
      { date: "2024-02-01", value: 80.1, imputed: false },
      { date: "2024-02-02", value: 80.4, imputed: true },
      { date: "2024-02-03", value: 80.7, imputed: false },
    ],
    sys_bp_mmhg: [
      { date: "2024-02-01", value: 121, imputed: false },
      { date: "2024-02-03", value: 124, imputed: false },
    ],
    dia_bp_mmhg: [],
    spo2_pct: [],
    hr_bpm: [],
    wellbeing: [],
  },
  events: [{ date: "2024-02-02", kind: "intervention" }],
  last_review: "2024-02-02",
};

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}
