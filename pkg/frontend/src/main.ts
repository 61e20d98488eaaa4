// DOM wiring: one input box, one transcript. One in-flight query per
// session, enforced by disabling the input until the response lands.

import { ApiClient, ServiceError } from "./api.js";
import {
  renderBuildingBanner,
  renderChatTurn,
  renderErrorBanner,
} from "./render.js";

const SESSION_ID = `web-${Math.random().toString(36).slice(2, 10)}`;

function mount(): void {
  const transcript = document.getElementById("transcript");
  const form = document.getElementById("query-form") as HTMLFormElement | null;
  const input = document.getElementById("query-input") as HTMLInputElement | null;
  const banner = document.getElementById("banner");
  if (!transcript || !form || !input || !banner) {
    throw new Error("missing page skeleton");
  }
  const client = new ApiClient();

  let lastQuery = "";

  async function submit(text: string): Promise<void> {
    banner!.innerHTML = "";
    input!.disabled = true;
    try {
      const response = await client.query(text, SESSION_ID);
      transcript!.insertAdjacentHTML("beforeend", renderChatTurn(text, response));
      input!.value = "";
      transcript!.scrollTop = transcript!.scrollHeight;
    } catch (err) {
      // a failed query appends no turn; the banner explains and offers retry
      if (err instanceof ServiceError && err.stillBuilding) {
        banner!.innerHTML = renderBuildingBanner();
      } else {
        const message =
          err instanceof ServiceError ? err.message : "Service unreachable.";
        banner!.innerHTML = renderErrorBanner(message);
        banner!.querySelector<HTMLButtonElement>(".retry")?.addEventListener(
          "click",
          () => void submit(lastQuery),
        );
      }
    } finally {
      input!.disabled = false;
      input!.focus();
    }
  }

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const text = input.value.trim();
    if (!text || input.disabled) return;
    lastQuery = text;
    void submit(text);
  });
}

if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", mount);
}
