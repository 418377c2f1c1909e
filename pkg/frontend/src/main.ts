/** Entry point: join an existing session (?session=...) or show the
 * create-session form. */

import { Client } from "./api.js";
import { mountApp } from "./app.js";
import { SessionController } from "./state.js";

function serviceBase(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("api") ?? "";
}

function currentSession(): string | null {
  return new URLSearchParams(window.location.search).get("session");
}

function creationForm(root: HTMLElement, client: Client): void {
  const form = document.createElement("form");
  form.className = "create";
  form.innerHTML = `
    <h1>Start a labeling session</h1>
    <label>dataset path <input name="dataset_path" required></label>
    <label>strategy
      <select name="strategy">
        <option>learned-surrogate</option>
        <option>learned-early</option>
        <option>random</option>
        <option>uncertainty</option>
        <option>maxmin</option>
      </select>
    </label>
    <label>cards per display <input name="K" type="number" value="16" min="1"></label>
    <label>displays <input name="T" type="number" value="10" min="1"></label>
    <label>seed <input name="seed" type="number" value="0"></label>
    <button type="submit">Create</button>
    <p class="form-error" hidden></p>
  `;
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const data = new FormData(form);
    const errorBox = form.querySelector(".form-error") as HTMLElement;
    client
      .createSession({
        dataset_path: String(data.get("dataset_path")),
        strategy: String(data.get("strategy")),
        K: Number(data.get("K")),
        T: Number(data.get("T")),
        seed: Number(data.get("seed")),
      })
      .then((sessionId) => {
        const url = new URL(window.location.href);
        url.searchParams.set("session", sessionId);
        window.location.assign(url.toString());
      })
      .catch((err) => {
        errorBox.hidden = false;
        errorBox.textContent = String(err instanceof Error ? err.message : err);
      });
  });
  root.appendChild(form);
}

export function boot(root: HTMLElement): void {
  const client = new Client(serviceBase());
  const sessionId = currentSession();
  if (!sessionId) {
    creationForm(root, client);
    return;
  }
  const controller = new SessionController(
    client,
    sessionId,
    window.localStorage,
  );
  mountApp(root, controller, client);
  void controller.refresh();
}

const rootElement = document.getElementById("app");
if (rootElement) boot(rootElement);
