import type { HealthResponse, TimelineResponse, WorklistResponse } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** Thin typed client; every UI mutation goes through here. */
export class ApiClient {
  constructor(
    private readonly baseUrl = "",
    private readonly fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}/api/v1${path}`, init);
    if (!response.ok) {
      let code = "http_error";
      let message = `${response.status}`;
      try {
        const body = (await response.json()) as { code?: string; message?: string };
        code = body.code ?? code;
        message = body.message ?? message;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, code, message);
    }
    return (await response.json()) as T;
  }

  health(): Promise<HealthResponse> {
    return this.request<HealthResponse>("/health");
  }

  worklist(date?: string): Promise<WorklistResponse> {
    const query = date ? `?date=${encodeURIComponent(date)}` : "";
    return this.request<WorklistResponse>(`/worklist${query}`);
  }

  timeline(patientId: string): Promise<TimelineResponse> {
    return this.request<TimelineResponse>(`/patients/${encodeURIComponent(patientId)}/timeline`);
  }

  markReviewed(patientId: string, date: string): Promise<{ outcome: string }> {
    return this.request<{ outcome: string }>("/reviews", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ patient_id: patientId, date }),
    });
  }

  advanceDay(): Promise<{ date: string }> {
    return this.request<{ date: string }>("/sim/advance", { method: "POST" });
  }
}
