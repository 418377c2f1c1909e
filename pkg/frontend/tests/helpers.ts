/** Shared fakes: an in-memory storage and a scripted client. */

import { vi } from "vitest";
import {
  Client,
  DisplayView,
  MetricRecord,
  SubmitResult,
} from "../src/api.js";
import type { StorageLike } from "../src/buffer.js";

export function memoryStore(): StorageLike & { dump(): Map<string, string> } {
  const data = new Map<string, string>();
  return {
    getItem: (k) => data.get(k) ?? null,
    setItem: (k, v) => void data.set(k, v),
    removeItem: (k) => void data.delete(k),
    dump: () => data,
  };
}

export function displayOf(
  iteration: number,
  ids: number[],
  total = 3,
): DisplayView {
  return {
    session_id: "s1",
    iteration,
    total_iterations: total,
    items: ids.map((id) => ({
      sample_id: id,
      thumbnail_before: null,
      thumbnail_after: null,
      feature_preview: [0.5, -0.25, 1.0],
    })),
  };
}

export function metricOf(
  iteration: number,
  eer: number | null,
): MetricRecord {
  return { iteration, sampling_percent: iteration * 10, eer_percent: eer };
}

/** A Client whose methods are vi.fn()s, pre-wired for one happy display. */
export function scriptedClient(overrides: Partial<Record<keyof Client, unknown>> = {}) {
  const submitResult: SubmitResult = {
    t: 1,
    eer_if_available: 25.0,
    next_display_ready: true,
  };
  const client = {
    health: vi.fn(async () => true),
    createSession: vi.fn(async () => "s1"),
    getDisplay: vi.fn(async () => displayOf(0, [10, 11, 12])),
    submitLabels: vi.fn(async () => submitResult),
    getMetrics: vi.fn(async () => [] as MetricRecord[]),
    assetUrl: (p: string) => `/assets/${p}`,
    ...overrides,
  };
  return client as unknown as Client & {
    getDisplay: ReturnType<typeof vi.fn>;
    submitLabels: ReturnType<typeof vi.fn>;
    getMetrics: ReturnType<typeof vi.fn>;
  };
}
