/** Local label buffer: unsubmitted decisions survive a reload.
 *
 * One bucket per (session, iteration); stale buckets from other iterations
 * of the same session are dropped on save so the store cannot grow. */

import type { Label } from "./api.js";

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

const PREFIX = "vexal-labels";

function key(sessionId: string, iteration: number): string {
  return `${PREFIX}:${sessionId}:${iteration}`;
}

export function loadBuffer(
  store: StorageLike,
  sessionId: string,
  iteration: number,
): Map<number, Label> {
  const out = new Map<number, Label>();
  const raw = store.getItem(key(sessionId, iteration));
  if (!raw) return out;
  try {
    const parsed = JSON.parse(raw) as Record<string, number>;
    for (const [id, value] of Object.entries(parsed)) {
      if (value === 1 || value === -1) out.set(Number(id), value);
    }
  } catch {
    // corrupt bucket: start clean rather than crash the view
  }
  return out;
}

export function saveBuffer(
  store: StorageLike,
  sessionId: string,
  iteration: number,
  labels: Map<number, Label>,
): void {
  store.removeItem(key(sessionId, iteration - 1));
  const obj: Record<string, number> = {};
  for (const [id, value] of labels) obj[String(id)] = value;
  store.setItem(key(sessionId, iteration), JSON.stringify(obj));
}

export function clearBuffer(
  store: StorageLike,
  sessionId: string,
  iteration: number,
): void {
  store.removeItem(key(sessionId, iteration));
}
