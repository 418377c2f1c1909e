/** Session view-model: phases, the local label buffer, and the single
 * in-flight request gate. Framework-free so every transition is testable
 * without a DOM. */

import {
  ApiError,
  Client,
  DisplayView,
  Label,
  MetricRecord,
  NetworkError,
  SubmitResult,
} from "./api.js";
import { clearBuffer, loadBuffer, saveBuffer, StorageLike } from "./buffer.js";

export type Phase = "loading" | "labeling" | "submitting" | "complete" | "failed";

export interface Banner {
  kind: "error" | "conflict" | "network";
  message: string;
  /** conflict banners force a refresh that discards the buffer */
  forcesRefresh: boolean;
}

const NO_STORE: StorageLike = {
  getItem: () => null,
  setItem: () => undefined,
  removeItem: () => undefined,
};

export class SessionController {
  phase: Phase = "loading";
  display: DisplayView | null = null;
  labels = new Map<number, Label>();
  metrics: MetricRecord[] = [];
  banner: Banner | null = null;
  lastResult: SubmitResult | null = null;

  private inflight = false;
  private listeners: Array<() => void> = [];

  constructor(
    private readonly client: Client,
    readonly sessionId: string,
    private readonly store: StorageLike = NO_STORE,
  ) {}

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const fn of this.listeners) fn();
  }

  /** All cards decided and nothing else running. */
  get canSubmit(): boolean {
    return (
      this.phase === "labeling" &&
      this.display !== null &&
      this.display.items.every((it) => this.labels.has(it.sample_id))
    );
  }

  get labeledCount(): number {
    return this.display === null
      ? 0
      : this.display.items.filter((it) => this.labels.has(it.sample_id)).length;
  }

  /** Pull the current display and metric history from the service. */
  async refresh(): Promise<void> {
    if (this.inflight) return;
    this.inflight = true;
    this.phase = "loading";
    this.banner = null;
    this.notify();
    try {
      this.metrics = await this.client.getMetrics(this.sessionId);
      this.display = await this.client.getDisplay(this.sessionId);
      const buffered = loadBuffer(
        this.store,
        this.sessionId,
        this.display.iteration,
      );
      const shown = new Set(this.display.items.map((it) => it.sample_id));
      this.labels = new Map(
        [...buffered].filter(([id]) => shown.has(id)),
      );
      this.phase = "labeling";
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // no pending display: every iteration has been consumed
        this.display = null;
        this.labels = new Map();
        this.phase = "complete";
      } else {
        this.phase = "failed";
        this.banner = toBanner(err);
      }
    } finally {
      this.inflight = false;
      this.notify();
    }
  }

  /** Record one card's decision. Ids outside the current display are
   * rejected: nothing can enter the buffer that the display did not show. */
  setLabel(sampleId: number, label: Label | null): void {
    if (this.phase !== "labeling" || this.display === null) return;
    const shown = this.display.items.some((it) => it.sample_id === sampleId);
    if (!shown) {
      throw new RangeError(`sample ${sampleId} is not in the current display`);
    }
    if (label === null) {
      this.labels.delete(sampleId);
    } else {
      this.labels.set(sampleId, label);
    }
    saveBuffer(this.store, this.sessionId, this.display.iteration, this.labels);
    this.notify();
  }

  /** Submit the buffered labels for exactly the displayed ids. */
  async submit(): Promise<void> {
    if (!this.canSubmit || this.inflight || this.display === null) return;
    this.inflight = true;
    this.phase = "submitting";
    this.banner = null;
    this.notify();

    // Build the payload from the display, never from the buffer's keys.
    const payload: Record<number, Label> = {};
    for (const item of this.display.items) {
      const value = this.labels.get(item.sample_id);
      if (value === undefined) {
        this.inflight = false;
        this.phase = "labeling";
        this.notify();
        return;
      }
      payload[item.sample_id] = value;
    }
    const iteration = this.display.iteration;

    try {
      this.lastResult = await this.client.submitLabels(this.sessionId, payload);
      clearBuffer(this.store, this.sessionId, iteration);
      this.labels = new Map();
      this.metrics = await this.client.getMetrics(this.sessionId);
      if (this.lastResult.next_display_ready) {
        this.display = await this.client.getDisplay(this.sessionId);
        this.phase = "labeling";
      } else {
        this.display = null;
        this.phase = "complete";
      }
    } catch (err) {
      // buffered labels stay put so nothing typed is lost
      this.phase = "labeling";
      this.banner = toBanner(err);
    } finally {
      this.inflight = false;
      this.notify();
    }
  }

  /** Leave a conflict banner: reload the display, dropping the buffer.
   * The caller is responsible for confirming the discard with the user. */
  async discardAndRefresh(): Promise<void> {
    if (this.display !== null) {
      clearBuffer(this.store, this.sessionId, this.display.iteration);
    }
    this.labels = new Map();
    await this.refresh();
  }
}

function toBanner(err: unknown): Banner {
  if (err instanceof NetworkError) {
    return {
      kind: "network",
      message: "The service is unreachable. Your labels are kept locally.",
      forcesRefresh: false,
    };
  }
  if (err instanceof ApiError) {
    if (err.status === 409) {
      return {
        kind: "conflict",
        message: `The display moved on (${err.message}). Refresh to continue.`,
        forcesRefresh: true,
      };
    }
    return {
      kind: "error",
      message: `${err.code}: ${err.message}`,
      forcesRefresh: false,
    };
  }
  return { kind: "error", message: String(err), forcesRefresh: false };
}
