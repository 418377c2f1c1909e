import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiError, NetworkError } from "../src/api.js";
import { SessionController } from "../src/state.js";
import { displayOf, memoryStore, metricOf, scriptedClient } from "./helpers.js";

describe("labeling state machine", () => {
  let client: ReturnType<typeof scriptedClient>;
  let store: ReturnType<typeof memoryStore>;
  let ctl: SessionController;

  beforeEach(async () => {
    client = scriptedClient();
    store = memoryStore();
    ctl = new SessionController(client, "s1", store);
    await ctl.refresh();
  });

  it("starts in labeling with nothing decided", () => {
    expect(ctl.phase).toBe("labeling");
    expect(ctl.canSubmit).toBe(false);
    expect(ctl.labeledCount).toBe(0);
  });

  it("enables submit only once every card is labeled", () => {
    ctl.setLabel(10, 1);
    ctl.setLabel(11, -1);
    expect(ctl.canSubmit).toBe(false);
    ctl.setLabel(12, 1);
    expect(ctl.canSubmit).toBe(true);
    ctl.setLabel(12, null); // undo re-disables
    expect(ctl.canSubmit).toBe(false);
  });

  it("rejects labels for ids outside the display", () => {
    expect(() => ctl.setLabel(999, 1)).toThrow(RangeError);
    expect(ctl.labels.size).toBe(0);
  });

  it("sends exactly the displayed ids on submit", async () => {
    ctl.setLabel(10, 1);
    ctl.setLabel(11, -1);
    ctl.setLabel(12, -1);
    await ctl.submit();
    expect(client.submitLabels).toHaveBeenCalledTimes(1);
    const [, payload] = client.submitLabels.mock.calls[0]!;
    expect(Object.keys(payload as object).map(Number).sort((a, b) => a - b))
      .toEqual([10, 11, 12]);
  });

  it("ignores submit while unlabeled or already submitting", async () => {
    await ctl.submit();
    expect(client.submitLabels).not.toHaveBeenCalled();

    ctl.setLabel(10, 1);
    ctl.setLabel(11, 1);
    ctl.setLabel(12, 1);
    let release: () => void = () => undefined;
    client.submitLabels.mockImplementationOnce(
      () =>
        new Promise((resolve) => {
          release = () =>
            resolve({ t: 1, eer_if_available: null, next_display_ready: false });
        }),
    );
    const first = ctl.submit();
    const second = ctl.submit(); // in-flight gate swallows this one
    release();
    await Promise.all([first, second]);
    expect(client.submitLabels).toHaveBeenCalledTimes(1);
  });

  it("advances to the next display after an acknowledged submit", async () => {
    client.getDisplay.mockResolvedValueOnce(displayOf(1, [20, 21, 22]));
    client.getMetrics.mockResolvedValueOnce([metricOf(1, 30)]);
    ctl.setLabel(10, 1);
    ctl.setLabel(11, -1);
    ctl.setLabel(12, -1);
    await ctl.submit();
    expect(ctl.phase).toBe("labeling");
    expect(ctl.display?.iteration).toBe(1);
    expect(ctl.labels.size).toBe(0);
    expect(ctl.metrics).toHaveLength(1);
  });

  it("completes when the service reports no further display", async () => {
    client.submitLabels.mockResolvedValueOnce({
      t: 3,
      eer_if_available: 12.5,
      next_display_ready: false,
    });
    ctl.setLabel(10, 1);
    ctl.setLabel(11, 1);
    ctl.setLabel(12, 1);
    await ctl.submit();
    expect(ctl.phase).toBe("complete");
    expect(ctl.display).toBeNull();
    expect(client.getDisplay).toHaveBeenCalledTimes(1); // only the initial one
  });

  it("treats a 409 on refresh as completion", async () => {
    client.getDisplay.mockRejectedValueOnce(
      new ApiError(409, "conflict", "session finished"),
    );
    await ctl.refresh();
    expect(ctl.phase).toBe("complete");
  });

  it("keeps the buffer and shows a banner on submit conflict", async () => {
    client.submitLabels.mockRejectedValueOnce(
      new ApiError(409, "conflict", "already consumed"),
    );
    ctl.setLabel(10, 1);
    ctl.setLabel(11, 1);
    ctl.setLabel(12, 1);
    await ctl.submit();
    expect(ctl.phase).toBe("labeling");
    expect(ctl.banner?.kind).toBe("conflict");
    expect(ctl.banner?.forcesRefresh).toBe(true);
    expect(ctl.labels.size).toBe(3); // nothing lost
  });

  it("keeps the buffer and offers retry on network failure", async () => {
    client.submitLabels.mockRejectedValueOnce(new NetworkError("refused"));
    ctl.setLabel(10, 1);
    ctl.setLabel(11, 1);
    ctl.setLabel(12, 1);
    await ctl.submit();
    expect(ctl.banner?.kind).toBe("network");
    expect(ctl.banner?.forcesRefresh).toBe(false);
    expect(ctl.labels.size).toBe(3);
  });

  it("restores unsubmitted labels after a reload", async () => {
    ctl.setLabel(10, 1);
    ctl.setLabel(11, -1);
    const again = new SessionController(client, "s1", store);
    await again.refresh();
    expect(again.labels.get(10)).toBe(1);
    expect(again.labels.get(11)).toBe(-1);
    expect(again.labeledCount).toBe(2);
  });

  it("drops buffered labels that no longer match the display", async () => {
    ctl.setLabel(10, 1);
    client.getDisplay.mockResolvedValueOnce(displayOf(0, [50, 51, 52]));
    const again = new SessionController(client, "s1", store);
    await again.refresh();
    expect(again.labels.size).toBe(0);
  });

  it("discardAndRefresh clears the buffer before reloading", async () => {
    ctl.setLabel(10, 1);
    ctl.setLabel(11, 1);
    await ctl.discardAndRefresh();
    expect(ctl.labels.size).toBe(0);
    const again = new SessionController(client, "s1", store);
    await again.refresh();
    expect(again.labels.size).toBe(0);
  });

  it("notifies listeners on every transition", async () => {
    const seen: string[] = [];
    ctl.onChange(() => seen.push(ctl.phase));
    ctl.setLabel(10, 1);
    ctl.setLabel(11, 1);
    ctl.setLabel(12, 1);
    await ctl.submit();
    expect(seen).toContain("submitting");
    expect(seen[seen.length - 1]).toBe("labeling");
  });
});
