/** Payload shapes of the telemon HTTP API (all under /api/v1). */

export interface Explanation {
  kind: "fired_rules" | "top_features" | "no_data";
  items: string[];
}

export interface WorklistEntry {
  patient_id: string;
  risk: number;
  days_since_review: number;
  overdue: boolean;
  reviewed_today: boolean;
  explanation: Explanation;
}

export interface WorklistResponse {
  date: string;
  scorer: "model" | "rules";
  model_id: string | null;
  capacity: number;
  coverage_days: number;
  coverage_slots_used: number;
  entries: WorklistEntry[];
}

export interface VitalPoint {
  date: string;
  value: number;
  imputed: boolean;
}

export interface EventMarker {
  date: string;
  kind: string;
}

export interface TimelineResponse {
  patient_id: string;
  profile: Record<string, unknown>;
  vitals: Record<string, VitalPoint[]>;
  events: EventMarker[];
  last_review: string | null;
}

export interface HealthResponse {
  status: string;
  mode: "live" | "sim";
  date: string;
}
