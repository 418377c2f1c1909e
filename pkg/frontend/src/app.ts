/** DOM layer: renders the controller's state and wires user input back
 * into it. Rendering is a pure function of the controller, re-run on every
 * change notification. */

import { Client, DisplayItem } from "./api.js";
import { renderChartSvg } from "./chart.js";
import { SessionController } from "./state.js";

export interface AppHandles {
  root: HTMLElement;
  controller: SessionController;
}

export function mountApp(
  root: HTMLElement,
  controller: SessionController,
  client: Client,
): AppHandles {
  let focusIndex = 0;
  let showDifference = false;

  const render = () => {
    root.textContent = "";
    root.appendChild(header(controller));
    const banner = bannerBox(controller);
    if (banner) root.appendChild(banner);

    if (controller.phase === "complete") {
      root.appendChild(completion(controller));
    } else if (controller.display) {
      root.appendChild(cardGrid(controller, client, focusIndex, showDifference));
      root.appendChild(submitRow(controller));
    } else if (controller.phase === "loading") {
      root.appendChild(note("loading display…"));
    } else if (controller.phase === "failed") {
      root.appendChild(note("could not reach the session"));
    }
    root.appendChild(metricsPanel(controller));
  };

  function header(c: SessionController): HTMLElement {
    const el = document.createElement("header");
    const h1 = document.createElement("h1");
    h1.textContent = "Change labeling";
    el.appendChild(h1);
    const line = document.createElement("p");
    line.className = "progress";
    if (c.display) {
      const upcoming = c.display.iteration + 1;
      line.textContent =
        `display ${upcoming} of ${c.display.total_iterations}` +
        ` · ${c.labeledCount}/${c.display.items.length} labeled` +
        samplingSuffix(c);
    } else if (c.phase === "complete") {
      line.textContent = "all displays labeled";
    } else {
      line.textContent = "…";
    }
    el.appendChild(line);
    return el;
  }

  function samplingSuffix(c: SessionController): string {
    const last = c.metrics[c.metrics.length - 1];
    return last ? ` · ${last.sampling_percent.toFixed(2)}% of pool labeled` : "";
  }

  function bannerBox(c: SessionController): HTMLElement | null {
    if (!c.banner) return null;
    const el = document.createElement("div");
    el.className = `banner banner-${c.banner.kind}`;
    const msg = document.createElement("span");
    msg.textContent = c.banner.message;
    el.appendChild(msg);
    if (c.banner.forcesRefresh) {
      const btn = document.createElement("button");
      btn.textContent = "Refresh display";
      btn.addEventListener("click", () => {
        const ok = window.confirm(
          "Refreshing discards the labels typed for this display. Continue?",
        );
        if (ok) void c.discardAndRefresh();
      });
      el.appendChild(btn);
    } else if (c.banner.kind === "network") {
      const btn = document.createElement("button");
      btn.textContent = "Retry";
      btn.addEventListener("click", () => void c.refresh());
      el.appendChild(btn);
    }
    return el;
  }

  function cardGrid(
    c: SessionController,
    api: Client,
    focused: number,
    difference: boolean,
  ): HTMLElement {
    const grid = document.createElement("div");
    grid.className = "grid";
    c.display!.items.forEach((item, index) => {
      grid.appendChild(card(c, api, item, index === focused, difference));
    });
    return grid;
  }

  function card(
    c: SessionController,
    api: Client,
    item: DisplayItem,
    focused: boolean,
    difference: boolean,
  ): HTMLElement {
    const el = document.createElement("article");
    el.className = "card" + (focused ? " focused" : "");
    el.dataset.sampleId = String(item.sample_id);

    const title = document.createElement("h2");
    title.textContent = `pair #${item.sample_id}`;
    el.appendChild(title);
    el.appendChild(thumbnails(api, item, difference));

    const current = c.labels.get(item.sample_id);
    const controls = document.createElement("div");
    controls.className = "controls";
    for (const [text, value] of [
      ["change", 1],
      ["no change", -1],
    ] as const) {
      const btn = document.createElement("button");
      btn.textContent = text;
      btn.className = current === value ? "selected" : "";
      btn.dataset.label = String(value);
      btn.addEventListener("click", () => c.setLabel(item.sample_id, value));
      controls.appendChild(btn);
    }
    el.appendChild(controls);
    return el;
  }

  function thumbnails(
    api: Client,
    item: DisplayItem,
    difference: boolean,
  ): HTMLElement {
    const box = document.createElement("div");
    box.className = "pair" + (difference ? " difference" : "");
    if (item.thumbnail_before && item.thumbnail_after) {
      for (const [path, alt] of [
        [item.thumbnail_before, "before"],
        [item.thumbnail_after, "after"],
      ] as const) {
        const img = document.createElement("img");
        img.src = api.assetUrl(path);
        img.alt = alt;
        box.appendChild(img);
      }
      return box;
    }
    // No imagery in the pool: fall back to feature bars so the pairs stay
    // visually distinguishable.
    const bars = document.createElement("div");
    bars.className = "preview";
    const scale = Math.max(...item.feature_preview.map(Math.abs), 1);
    for (const v of item.feature_preview) {
      const bar = document.createElement("span");
      bar.className = "bar" + (v < 0 ? " neg" : "");
      bar.style.width = `${Math.round((Math.abs(v) / scale) * 100)}%`;
      bars.appendChild(bar);
    }
    box.appendChild(bars);
    return box;
  }

  function submitRow(c: SessionController): HTMLElement {
    const row = document.createElement("div");
    row.className = "submit-row";
    const btn = document.createElement("button");
    btn.id = "submit";
    btn.textContent =
      c.phase === "submitting" ? "submitting…" : "Submit labels";
    btn.disabled = !c.canSubmit;
    btn.addEventListener("click", () => void c.submit());
    row.appendChild(btn);
    const hint = document.createElement("span");
    hint.className = "hint";
    hint.textContent =
      "keys: ←/→ pick a card, c = change, n = no change, u = undo, d = difference view, enter = submit";
    row.appendChild(hint);
    return row;
  }

  function completion(c: SessionController): HTMLElement {
    const el = document.createElement("div");
    el.className = "done";
    const last = c.metrics[c.metrics.length - 1];
    el.textContent = last
      ? `Session complete after ${c.metrics.length} displays.`
      : "Session complete.";
    return el;
  }

  function metricsPanel(c: SessionController): HTMLElement {
    const panel = document.createElement("section");
    panel.className = "metrics";
    const h2 = document.createElement("h2");
    h2.textContent = "error rate by iteration";
    panel.appendChild(h2);
    const holder = document.createElement("div");
    holder.innerHTML = renderChartSvg(c.metrics);
    panel.appendChild(holder);
    const latest = [...c.metrics].reverse().find((m) => m.eer_percent !== null);
    if (latest) {
      const p = document.createElement("p");
      p.textContent =
        `latest: ${latest.eer_percent!.toFixed(2)}% at iteration ` +
        `${latest.iteration}`;
      panel.appendChild(p);
    }
    return panel;
  }

  function onKey(event: KeyboardEvent): void {
    const display = controller.display;
    if (!display || controller.phase !== "labeling") return;
    const item = display.items[focusIndex];
    switch (event.key) {
      case "ArrowRight":
        focusIndex = Math.min(focusIndex + 1, display.items.length - 1);
        break;
      case "ArrowLeft":
        focusIndex = Math.max(focusIndex - 1, 0);
        break;
      case "c":
        if (item) controller.setLabel(item.sample_id, 1);
        return; // notify re-renders
      case "n":
        if (item) controller.setLabel(item.sample_id, -1);
        return;
      case "u":
        if (item) controller.setLabel(item.sample_id, null);
        return;
      case "d":
        showDifference = !showDifference;
        break;
      case "Enter":
        void controller.submit();
        return;
      default:
        return;
    }
    render();
  }

  controller.onChange(() => {
    const K = controller.display?.items.length ?? 1;
    focusIndex = Math.min(focusIndex, K - 1);
    render();
  });
  document.addEventListener("keydown", onKey);
  render();
  return { root, controller };
}

function note(text: string): HTMLElement {
  const p = document.createElement("p");
  p.className = "note";
  p.textContent = text;
  return p;
}
