import { describe, expect, it, vi } from "vitest";

import { ApiError, Client, NetworkError } from "../src/api.js";

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

describe("service client", () => {
  it("posts session creation and unwraps the id", async () => {
    const fetchFn = vi.fn(async () =>
      jsonResponse(201, { session_id: "abc123" }),
    );
    const client = new Client("http://svc", fetchFn);
    const sid = await client.createSession({
      dataset_path: "pool.csv",
      strategy: "random",
      K: 4,
      T: 2,
    });
    expect(sid).toBe("abc123");
    const [url, init] = fetchFn.mock.calls[0]!;
    expect(url).toBe("http://svc/sessions");
    expect(init?.method).toBe("POST");
    expect(JSON.parse(init?.body as string).strategy).toBe("random");
  });

  it("wraps labels under a labels key", async () => {
    const fetchFn = vi.fn(async () =>
      jsonResponse(200, { t: 1, eer_if_available: null, next_display_ready: true }),
    );
    const client = new Client("", fetchFn);
    await client.submitLabels("sid", { 3: 1, 7: -1 });
    const [url, init] = fetchFn.mock.calls[0]!;
    expect(url).toBe("/sessions/sid/labels");
    expect(JSON.parse(init?.body as string)).toEqual({
      labels: { 3: 1, 7: -1 },
    });
  });

  it("surfaces {code, message} error bodies as ApiError", async () => {
    const fetchFn = vi.fn(async () =>
      jsonResponse(409, { code: "conflict", message: "already consumed" }),
    );
    const client = new Client("", fetchFn);
    const err = await client.getDisplay("sid").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(409);
    expect(err.code).toBe("conflict");
    expect(err.message).toBe("already consumed");
  });

  it("tolerates non-JSON error bodies", async () => {
    const fetchFn = vi.fn(
      async () => new Response("boom", { status: 500 }),
    );
    const client = new Client("", fetchFn);
    const err = await client.getMetrics("sid").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.code).toBe("unknown");
    expect(err.message).toBe("HTTP 500");
  });

  it("maps transport failures to NetworkError", async () => {
    const fetchFn = vi.fn(async () => {
      throw new TypeError("fetch failed");
    });
    const client = new Client("", fetchFn);
    const err = await client.health().catch((e) => e);
    expect(err).toBeInstanceOf(NetworkError);
  });

  it("escapes session ids in paths", async () => {
    const fetchFn = vi.fn(async () => jsonResponse(200, []));
    const client = new Client("", fetchFn);
    await client.getMetrics("a/b");
    expect(fetchFn.mock.calls[0]![0]).toBe("/sessions/a%2Fb/metrics");
  });

  it("builds asset urls against the service base", () => {
    const client = new Client("http://svc:9");
    expect(client.assetUrl("thumbs/1.png")).toBe(
      "http://svc:9/assets/thumbs/1.png",
    );
  });
});
