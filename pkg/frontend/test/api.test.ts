import { describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { jsonResponse, WORKLIST_FIXTURE } from "./fixtures.js";

describe("ApiClient", () => {
  it("hits the versioned endpoints and parses JSON", async () => {
    const fetchFn = vi.fn(async (url: RequestInfo | URL) => {
      expect(String(url)).toBe("/api/v1/worklist?date=2024-02-05");
      return jsonResponse(WORKLIST_FIXTURE);
    });
    const client = new ApiClient("", fetchFn as unknown as typeof fetch);
    const worklist = await client.worklist("2024-02-05");
    expect(worklist.entries).toHaveLength(3);
    expect(worklist.entries[1]!.risk).toBe(0.8418174567409796);
  });

  it("maps {code, message} error bodies onto ApiError", async () => {
    const fetchFn = vi.fn(async () =>
      jsonResponse({ code: "conflict", message: "already reviewed later" }, 409));
    const client = new ApiClient("", fetchFn as unknown as typeof fetch);
    const failure = await client.markReviewed("p1", "2024-02-05").catch((e: unknown) => e);
    expect(failure).toBeInstanceOf(ApiError);
    const apiError = failure as ApiError;
    expect(apiError.status).toBe(409);
    expect(apiError.code).toBe("conflict");
    expect(apiError.message).toBe("already reviewed later");
  });

  it("posts reviews with the patient and date", async () => {
    const fetchFn = vi.fn(async (url: RequestInfo | URL, init?: RequestInit) => {
      expect(String(url)).toBe("/api/v1/reviews");
      expect(init?.method).toBe("POST");
      expect(JSON.parse(String(init?.body))).toEqual({
        patient_id: "p0002",
        date: "2024-02-05",
      });
      return jsonResponse({ outcome: "created" });
    });
    const client = new ApiClient("", fetchFn as unknown as typeof fetch);
    await client.markReviewed("p0002", "2024-02-05");
    expect(fetchFn).toHaveBeenCalledOnce();
  });

  it("survives non-JSON error bodies", async () => {
    const fetchFn = vi.fn(async () => new Response("boom", { status: 502 }));
    const client = new ApiClient("", fetchFn as unknown as typeof fetch);
    const failure = await client.health().catch((e: unknown) => e as ApiError);
    expect(failure).toBeInstanceOf(ApiError);
    expect((failure as ApiError).status).toBe(502);
  });
});
